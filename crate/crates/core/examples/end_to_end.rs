//! Full pipeline through the service: submit the chain intent, wait for
//! it, then rebuild the run from its journal alone.

use std::time::Duration;

use sai_core::feedback::summarize;
use sai_core::journal::read_events;
use sai_core::service::{Config, RunState, Service};
use sai_core::DataCard;

fn main() {
    let fixtures = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let work = tempfile::tempdir().unwrap();
    let config = Config {
        registry_paths: vec![format!("{fixtures}/models").into()],
        keyword_table: format!("{fixtures}/keywords.json").into(),
        // Run outputs are written into the store, so use a scratch one.
        data_dir: work.path().join("data"),
        journal_dir: work.path().join("journal"),
        ..Config::default()
    };
    let service = Service::open(config).unwrap();
    service
        .register_data(DataCard::new("cell_trace", "telemetry"), b"rsrp=-91;sinr=13".to_vec())
        .unwrap();

    let doc = std::fs::read_to_string(format!("{fixtures}/intents/chain3.json")).unwrap();
    let run_id = service.submit_intent(&doc).unwrap();
    let state = service.wait_for(&run_id, Some(Duration::from_secs(30))).unwrap();
    println!("{run_id}: {:?}", state.phase);
    let feedback = state.feedback_report.as_ref().unwrap();
    println!("{}", feedback.formatted_summary);

    let events = read_events(service.run_journal_path(&run_id)).unwrap();
    let replayed = RunState::replay(&events).unwrap();
    let summary = summarize(&run_id, replayed.graph.as_ref().unwrap(), &replayed.combinations, &replayed.records).unwrap();
    println!(
        "{} journal events; replayed summary identical: {}",
        events.len(),
        summary == feedback.formatted_summary
    );
}
