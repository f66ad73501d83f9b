//! Run one combination through the staged executor against an in-memory
//! data store and print the per-task results and the journal it wrote.

use std::sync::Arc;

use sai_core::journal::Journal;
use sai_core::model_library::select_combinations;
use sai_core::planner::graph_for_intent;
use sai_core::{parse_intent, DataCard, DataStore, Executor, ExecutorConfig, ModelRegistry};

fn main() {
    let dir = env!("CARGO_MANIFEST_DIR");
    let registry = ModelRegistry::new();
    registry.load_dir(format!("{dir}/fixtures/models")).unwrap();
    let store = Arc::new(DataStore::in_memory());
    store
        .register_data(DataCard::new("cell_trace", "telemetry"), b"rsrp=-91;sinr=13".to_vec())
        .unwrap();

    let intent = parse_intent(&std::fs::read_to_string(format!("{dir}/fixtures/intents/chain3.json")).unwrap()).unwrap();
    let graph = graph_for_intent(&intent);
    let best = select_combinations(&graph, &intent, 1, &registry.snapshot()).unwrap().remove(0);

    let executor = Executor::new(registry.snapshot(), Arc::clone(&store), ExecutorConfig::default());
    let journal = Journal::memory();
    let record = executor.execute("demo", &graph, &best, &intent, Some(&journal)).unwrap();
    for (key, result) in &record.results {
        println!(
            "{key:<8} {:<13} {:?} [{} .. {}] -> {:?}",
            result.model_name, result.status, result.start_ms, result.end_ms, result.output
        );
    }
    println!(
        "observed critical path {} ms, peak {}",
        record.observed_critical_path_ms, record.observed_peak_utilization
    );
    for line in journal.lines().unwrap() {
        println!("{line}");
    }
}
