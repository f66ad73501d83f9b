//! Load the fixture registry and rank the top model combinations for the
//! three-task chain under its latency and utilization budgets.

use sai_core::model_library::select_combinations;
use sai_core::planner::graph_for_intent;
use sai_core::{parse_intent, ModelRegistry};

fn main() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let registry = ModelRegistry::new();
    let loaded = registry.load_dir(format!("{dir}/fixtures/models")).unwrap();
    println!("{loaded} cards, task types {:?}", registry.task_types());

    let mut intent = parse_intent(&std::fs::read_to_string(format!("{dir}/fixtures/intents/chain3.json")).unwrap()).unwrap();
    intent.combination_count = 5;
    let graph = graph_for_intent(&intent);
    match select_combinations(&graph, &intent, 5, &registry.snapshot()) {
        Ok(combos) => {
            for c in combos {
                let models: Vec<&str> = c.assignment.values().map(String::as_str).collect();
                println!(
                    "#{} {:?} critical {} ms, peak {}",
                    c.rank, models, c.critical_path_latency_ms, c.peak_utilization
                );
            }
        }
        Err(e) => println!("{}: {e}", e.code()),
    }
}
