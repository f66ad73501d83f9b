//! A two-turn session where the second request builds on the first
//! run's stored output.

use std::time::Duration;

use sai_core::service::{Config, Service};

fn main() {
    let fixtures = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let work = tempfile::tempdir().unwrap();
    let config = Config {
        registry_paths: vec![format!("{fixtures}/models").into()],
        keyword_table: format!("{fixtures}/keywords.json").into(),
        // Outputs are written into the store, so use a scratch copy.
        data_dir: work.path().join("data"),
        journal_dir: work.path().join("journal"),
        ..Config::default()
    };
    let service = Service::open(config).unwrap();
    service
        .register_data(sai_core::DataCard::new("cell_trace", "telemetry"), b"rsrp=-91".to_vec())
        .unwrap();

    let session = service.open_session();
    for text in ["measure cell_trace then allocate", "steer traffic with the previous result"] {
        let run_id = service.submit_utterance(&session, text).unwrap();
        let state = service.wait_for(&run_id, Some(Duration::from_secs(30))).unwrap();
        let roots: Vec<_> = state
            .graph
            .iter()
            .flat_map(|g| g.nodes.iter().filter(|n| n.depends_on.is_empty()))
            .map(|n| (&n.task_key, &n.input_data))
            .collect();
        println!("> {text}\n  {:?}, roots {roots:?}, output {:?}", state.phase, state.last_output());
    }
    for entry in service.session(&session).unwrap().chat_log {
        println!("{:?}: {}", entry.role, entry.text);
    }
}
