mod support;

use std::collections::BTreeSet;
use std::sync::Arc;

use sai_core::intent::Intent;
use sai_core::journal::{Journal, RunEvent};
use sai_core::service::{created_event, Phase, RunSource, ServiceError};
use sai_core::ModelCard;
use support::*;

fn chain_with_id(id: &str) -> String {
    read_fixture("intents/chain3.json").replace("\"chain-3\"", &format!("{id:?}"))
}

#[test]
fn concurrent_submissions_get_distinct_runs_and_journals() {
    let harness = Harness::new();
    let service = Arc::new(harness.service());
    let handles: Vec<_> = (0..8)
        .map(|i| {
            let service = Arc::clone(&service);
            std::thread::spawn(move || service.submit_intent(&chain_with_id(&format!("c-{i}"))).unwrap())
        })
        .collect();
    let ids: BTreeSet<String> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert_eq!(ids.len(), 8);
    for id in &ids {
        assert_eq!(run_to_end(&service, id).phase, Phase::Done);
        assert!(service.run_journal_path(id).exists());
    }
    let journals = std::fs::read_dir(service.run_journal_path("x").parent().unwrap()).unwrap().count();
    assert_eq!(journals, 8);
    assert_eq!(service.list_runs().len(), 8);
}

#[test]
fn reports_are_written_next_to_the_journal() {
    let harness = Harness::new();
    let service = harness.service();
    let run_id = service.submit_intent(&read_fixture("intents/chain3.json")).unwrap();
    let state = run_to_end(&service, &run_id);
    for suffix in ["final.json", "feedback.json", "summary.txt"] {
        assert!(service.reports_dir().join(format!("{run_id}.{suffix}")).exists(), "{suffix}");
    }
    let final_json = std::fs::read_to_string(service.reports_dir().join(format!("{run_id}.final.json"))).unwrap();
    let on_disk: sai_core::FinalReport = serde_json::from_str(&final_json).unwrap();
    assert_eq!(Some(on_disk), state.final_report);
}

#[test]
fn unknown_run_is_an_input_error() {
    let harness = Harness::new();
    let service = harness.service();
    let err = service.get_run("run-missing").unwrap_err();
    assert!(matches!(err, ServiceError::UnknownRun(_)));
    assert!(err.is_input_error());
    assert!(matches!(service.wait_for("run-missing", WAIT), Err(ServiceError::UnknownRun(_))));
}

#[test]
fn duplicate_intent_id_is_rejected() {
    let harness = Harness::new();
    let service = harness.service();
    service.submit_intent(&read_fixture("intents/chain3.json")).unwrap();
    match service.submit_intent(&read_fixture("intents/chain3.json")) {
        Err(ServiceError::Intent(e)) => assert_eq!(e.field_path, "intent_id"),
        other => panic!("expected a constraint violation, got {other:?}"),
    }
}

#[test]
fn invalid_document_creates_no_run() {
    let harness = Harness::new();
    let service = harness.service();
    let err = service.submit_intent(&read_fixture("intents/invalid_extra_key.json")).unwrap_err();
    assert_eq!(err.code(), "SchemaViolation");
    assert!(service.list_runs().is_empty());
}

#[test]
fn tree_intent_runs_three_combinations() {
    let harness = Harness::new();
    let service = harness.service();
    let run_id = service.submit_intent(&read_fixture("intents/tree.json")).unwrap();
    let state = run_to_end(&service, &run_id);
    assert_eq!(state.phase, Phase::Done);
    assert_eq!(state.combinations.len(), 3);
    assert_eq!(state.records.len(), 3);
    let scores = &state.feedback_report.unwrap().scores;
    assert!(scores.is_perfect(), "{scores:?}");
}

#[test]
fn unplannable_utterance_fails_with_planning_reasons() {
    let harness = Harness::new();
    let service = harness.service();
    let session = service.open_session();
    let run_id = service.submit_utterance(&session, "hello there, how are you").unwrap();
    let state = run_to_end(&service, &run_id);
    assert_eq!(state.phase, Phase::Failed);
    assert_eq!(state.failure.unwrap().code, "PlanningFailed");
    let scores = state.feedback_report.unwrap().scores;
    assert_eq!(scores.planning, 0.0);
    assert!(!scores.reasons.is_empty());
    let log = service.session(&session).unwrap();
    assert_eq!(log.last_run_id.as_deref(), Some(run_id.as_str()));
}

#[test]
fn unknown_keyword_type_is_replanned_through_fallbacks() {
    let harness = Harness::new();
    let service = harness.service();
    let session = service.open_session();
    let run_id = service.submit_utterance(&session, "classify cell_trace").unwrap();
    let state = run_to_end(&service, &run_id);
    assert_eq!(state.phase, Phase::Done, "{:?}", state.failure);
    assert!(state.replans >= 1);
    let graph = state.graph.unwrap();
    assert!(graph.nodes.iter().all(|n| n.task_type == "probe"));
}

#[test]
fn unknown_session_is_rejected() {
    let harness = Harness::new();
    let service = harness.service();
    assert!(matches!(service.submit_utterance("nope", "measure"), Err(ServiceError::Session(_))));
}

#[test]
fn interrupted_runs_are_failed_on_restart() {
    let harness = Harness::new();
    let run_id = "run-interrupted";
    {
        // Bring up a service once so the journal layout exists.
        let _ = harness.service();
    }
    let path = harness.config.journal_dir.join("runs").join(format!("{run_id}.jsonl"));
    let journal = Journal::<RunEvent>::open(&path).unwrap();
    journal
        .append(&created_event(run_id, &RunSource::Intent, &Intent::for_utterance("lost", "")))
        .unwrap();
    drop(journal);

    let service = harness.service();
    let state = service.get_run(run_id).unwrap();
    assert_eq!(state.phase, Phase::Failed);
    assert_eq!(state.failure.unwrap().code, "Interrupted");
}

#[test]
fn finished_runs_survive_a_restart() {
    let harness = Harness::new();
    let (run_id, before) = {
        let service = harness.service();
        let run_id = service.submit_intent(&read_fixture("intents/chain3.json")).unwrap();
        let state = run_to_end(&service, &run_id);
        (run_id, state)
    };
    let service = harness.service();
    assert_eq!(service.get_run(&run_id).unwrap(), before);
    // The intent id stays taken.
    assert!(service.submit_intent(&read_fixture("intents/chain3.json")).is_err());
}

#[test]
fn registered_models_are_persisted_and_rejected_twice() {
    let harness = Harness::new();
    let card = ModelCard::new("probe-new", "probe", 1.0, 0.05).consuming(&["telemetry"]).producing(&["metrics"]);
    {
        let service = harness.service();
        service.register_model(card.clone()).unwrap();
        assert!(matches!(service.register_model(card.clone()), Err(ServiceError::Registry(_))));
    }
    let service = harness.service();
    assert_eq!(service.registry().get("probe-new"), Some(card));
}
