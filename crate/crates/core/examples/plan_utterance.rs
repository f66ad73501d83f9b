//! Turn a natural-language request into a validated task graph with the
//! keyword-table planner, then print its execution stages.
//!
//!     cargo run --example plan_utterance -- "measure cell_trace then allocate then route"

use std::collections::BTreeSet;

use sai_core::planner::{execution_stages, KeywordTable, PlanRequest, Planner, RuleAdapter, UtteranceContext};

fn main() {
    let utterance = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "monitor core_trace then allocate capacity then steer traffic".into());
    let table = KeywordTable::load(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/keywords.json")).unwrap();
    let mut planner = Planner::new(Box::new(RuleAdapter::new(table)), 2);
    let vocabulary: BTreeSet<String> = ["probe", "allocate", "route"].map(String::from).into();
    let known: BTreeSet<String> = ["cell_trace", "core_trace"].map(String::from).into();
    let ctx = UtteranceContext {
        session_id: "example",
        utterance: &utterance,
        chat_log: &[],
        last_output: None,
        known_data: &known,
    };
    match planner.plan(PlanRequest::Utterance(ctx), &vocabulary) {
        Ok(graph) => {
            for node in &graph.nodes {
                println!(
                    "{:<10} {:<9} after {:?} reads {:?}",
                    node.task_key, node.task_type, node.depends_on, node.input_data
                );
            }
            println!("shape {:?}, stages {:?}", graph.shape, execution_stages(&graph).unwrap());
        }
        Err(e) => println!("{}: {e}", e.code()),
    }
}
