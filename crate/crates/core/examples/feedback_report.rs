//! Score a run where one task failed and print the scores, reasons and
//! the fixed-layout summary.

use std::collections::BTreeSet;
use std::sync::Arc;

use sai_core::data_store::DataStore;
use sai_core::feedback::{score_stages, summarize, SelectionOutcome};
use sai_core::model_library::select_combinations;
use sai_core::planner::{graph_for_intent, validate_graph};
use sai_core::{parse_intent, Executor, ExecutorConfig, ModelRegistry};

fn main() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let registry = ModelRegistry::new();
    registry.load_dir(format!("{dir}/fixtures/models")).unwrap();
    let intent = parse_intent(&std::fs::read_to_string(format!("{dir}/fixtures/intents/chain3.json")).unwrap()).unwrap();
    let graph = graph_for_intent(&intent);
    let combos = select_combinations(&graph, &intent, 2, &registry.snapshot()).unwrap();

    // The input data is never registered, so every root task fails.
    let executor = Executor::new(registry.snapshot(), Arc::new(DataStore::in_memory()), ExecutorConfig::default());
    let records = executor.execute_all("demo", &graph, &combos, &intent, None);

    let vocabulary: BTreeSet<String> = registry.task_types();
    let scores = score_stages(
        &validate_graph(&graph, &vocabulary),
        &SelectionOutcome::returned(combos.len()),
        &records,
        &intent,
    );
    println!(
        "planning {} selection {} execution {}",
        scores.planning, scores.selection, scores.execution
    );
    for reason in &scores.reasons {
        println!("  {:?} {}: {}", reason.stage, reason.code, reason.message);
    }
    println!("{}", summarize("demo", &graph, &combos, &records).unwrap());
}
