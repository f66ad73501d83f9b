mod support;

use std::path::PathBuf;

use sai_core::cli::{main_with_args, EXIT_INPUT, EXIT_OK, EXIT_PIPELINE};
use serde_json::Value;
use support::*;

struct Cli {
    harness: Harness,
    config: PathBuf,
}

impl Cli {
    fn new() -> Self {
        let harness = Harness::new();
        let config = harness.dir.path().join("sai.toml");
        std::fs::write(
            &config,
            "registry_paths = [\"models\"]\nkeyword_table = \"keywords.json\"\ndata_dir = \"data\"\njournal_dir = \"journal\"\n",
        )
        .unwrap();
        Self { harness, config }
    }

    fn run(&self, args: &[&str]) -> (i32, String) {
        let mut argv = vec!["sai".to_string(), "--config".into(), self.config.display().to_string()];
        argv.extend(args.iter().map(|s| s.to_string()));
        let mut out = Vec::new();
        let code = main_with_args(argv, &mut out);
        (code, String::from_utf8(out).unwrap())
    }
}

fn fixture_path(rel: &str) -> String {
    fixtures().join(rel).display().to_string()
}

#[test]
fn run_prints_the_final_report() {
    let cli = Cli::new();
    let (code, out) = cli.run(&["run", &fixture_path("intents/chain3.json")]);
    assert_eq!(code, EXIT_OK, "{out}");
    let report: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["best_rank"], 1);
    assert_eq!(report["combinations"].as_array().unwrap().len(), 2);
}

#[test]
fn infeasible_budget_is_a_pipeline_failure() {
    let cli = Cli::new();
    let (code, _) = cli.run(&["run", &fixture_path("intents/zero_budget.json")]);
    assert_eq!(code, EXIT_PIPELINE);
}

#[test]
fn malformed_input_is_an_input_error() {
    let cli = Cli::new();
    assert_eq!(cli.run(&["run", &fixture_path("intents/invalid_extra_key.json")]).0, EXIT_INPUT);
    assert_eq!(cli.run(&["plan", "/does/not/exist.json"]).0, EXIT_INPUT);
    assert_eq!(cli.run(&["frobnicate"]).0, EXIT_INPUT);
    assert_eq!(cli.run(&["sessions", "no-such-session"]).0, EXIT_INPUT);
}

#[test]
fn plan_prints_graph_and_stages() {
    let cli = Cli::new();
    let (code, out) = cli.run(&["plan", "--utterance", "measure cell_trace then allocate then route"]);
    assert_eq!(code, EXIT_OK, "{out}");
    let planned: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(planned["graph"]["nodes"].as_array().unwrap().len(), 3);
    assert_eq!(planned["stages"].as_array().unwrap().len(), 3);
    assert_eq!(planned["graph"]["nodes"][0]["input_data"][0], "cell_trace");
}

#[test]
fn unplannable_utterance_is_a_pipeline_failure() {
    let cli = Cli::new();
    assert_eq!(cli.run(&["plan", "--utterance", "good morning"]).0, EXIT_PIPELINE);
}

#[test]
fn models_and_data_round_trip_through_the_registry_and_store() {
    let cli = Cli::new();
    let card = cli.harness.dir.path().join("new-card.json");
    std::fs::write(
        &card,
        r#"{"model_name":"probe-cli","task_type":"probe","latency_ms":1,"resource_utilization":0.1,"consumes":["telemetry"],"produces":["metrics"]}"#,
    )
    .unwrap();
    let card = card.display().to_string();
    assert_eq!(cli.run(&["models", "add", &card]).0, EXIT_OK);
    assert_eq!(cli.run(&["models", "add", &card]).0, EXIT_INPUT);
    let (code, out) = cli.run(&["models", "list"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("probe-cli"));

    let payload = cli.harness.dir.path().join("payload.bin");
    std::fs::write(&payload, [1u8, 2, 3]).unwrap();
    let payload = payload.display().to_string();
    let add = ["data", "add", "edge_trace", "--modality", "telemetry", "--file", &payload, "--attr", "site=edge"];
    assert_eq!(cli.run(&add).0, EXIT_OK);
    assert_eq!(cli.run(&add).0, EXIT_INPUT);
    let (code, out) = cli.run(&["data", "list"]);
    assert_eq!(code, EXIT_OK);
    let cards: Value = serde_json::from_str(&out).unwrap();
    let added = cards.as_array().unwrap().iter().find(|c| c["data_name"] == "edge_trace").unwrap();
    assert_eq!(added["attributes"]["site"], "edge");
}

#[test]
fn sessions_lists_utterance_runs() {
    let cli = Cli::new();
    assert_eq!(cli.run(&["run", "--utterance", "measure core_trace"]).0, EXIT_OK);
    let (code, out) = cli.run(&["sessions"]);
    assert_eq!(code, EXIT_OK);
    let sessions: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(sessions.as_array().unwrap().len(), 1);
}
