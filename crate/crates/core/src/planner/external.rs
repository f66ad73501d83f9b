//! Planner adapter backed by an HTTP completion endpoint.
//!
//! The prompt is assembled from fixed instructions, one static demonstration,
//! the session chat log and the latest feedback summary for the session. The
//! endpoint receives `{"prompt": ...}` and must answer `{"completion": ...}`
//! whose text contains a JSON object `{"nodes": [...]}`.
//!
//! The transport is compiled only with the `external-planner` feature; without
//! it every plan call fails with [`AdapterError::Unavailable`].

use std::collections::BTreeMap;

use serde::Deserialize;

use super::{AdapterError, PlanError, PlannerAdapter, TaskGraph, TaskNode, UtteranceContext};
use crate::feedback::FeedbackReport;
use crate::session::Role;

const INSTRUCTIONS: &str = "\
You translate network-operation requests into a task graph.
Answer with a single JSON object {\"nodes\": [...]} and nothing else.
Each node has: task_key (unique, [A-Za-z0-9_.-]), task_type, depends_on (task_keys),
input_data (data names), params (string map).
Use only task types from the allowed list. Dependencies must form an acyclic graph.
When the user refers to a previous result, put the given previous output name in input_data.";

const DEMONSTRATION: &str = "\
Request: measure link latency then allocate bandwidth
Answer: {\"nodes\": [{\"task_key\": \"probe\", \"task_type\": \"probe\", \"depends_on\": [], \"input_data\": [], \"params\": {}},
{\"task_key\": \"allocate\", \"task_type\": \"allocate\", \"depends_on\": [\"probe\"], \"input_data\": [], \"params\": {}}]}";

/// Renders the full prompt for one turn.
pub fn build_prompt(ctx: &UtteranceContext<'_>, task_types: &[String], feedback: Option<&str>) -> String {
    let mut out = String::new();
    out.push_str("### Instructions\n");
    out.push_str(INSTRUCTIONS);
    out.push_str("\nAllowed task types: ");
    out.push_str(&task_types.join(", "));
    out.push_str("\n\n### Demonstration\n");
    out.push_str(DEMONSTRATION);
    out.push_str("\n\n### Chat logs\n");
    if ctx.chat_log.is_empty() {
        out.push_str("(none)\n");
    }
    for entry in ctx.chat_log {
        let role = match entry.role {
            Role::User => "user",
            Role::System => "system",
        };
        out.push_str(&format!("{role}: {}\n", entry.text));
    }
    if let Some(last) = ctx.last_output {
        out.push_str(&format!("Previous output: {last}\n"));
    }
    if !ctx.known_data.is_empty() {
        let names: Vec<&str> = ctx.known_data.iter().map(String::as_str).collect();
        out.push_str(&format!("Available data: {}\n", names.join(", ")));
    }
    if let Some(summary) = feedback {
        out.push_str("\n### Feedback on the previous plan\n");
        out.push_str(summary);
        if !summary.ends_with('\n') {
            out.push('\n');
        }
    }
    out.push_str("\n### Request\n");
    out.push_str(ctx.utterance);
    out.push('\n');
    out
}

#[derive(Deserialize)]
struct Completion {
    nodes: Vec<TaskNode>,
}

/// Extracts the first top-level JSON object from a completion and reads its
/// node list.
pub fn parse_completion(graph_id: &str, completion: &str) -> Result<TaskGraph, PlanError> {
    let start = completion
        .find('{')
        .ok_or_else(|| PlanError::failed("completion contains no JSON object"))?;
    let mut stream = serde_json::Deserializer::from_str(&completion[start..]).into_iter::<Completion>();
    match stream.next() {
        Some(Ok(c)) => Ok(TaskGraph::new(graph_id, c.nodes)),
        Some(Err(e)) => Err(PlanError::failed(format!("completion is not a node list: {e}"))),
        None => Err(PlanError::failed("completion contains no JSON object")),
    }
}

pub struct ExternalAdapter {
    endpoint: String,
    task_types: Vec<String>,
    /// Latest feedback summary per session, folded into the next prompt.
    feedback: BTreeMap<String, String>,
    turn: u64,
}

impl ExternalAdapter {
    pub fn new(endpoint: impl Into<String>, task_types: Vec<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            task_types,
            feedback: BTreeMap::new(),
            turn: 0,
        }
    }

    pub fn pending_feedback(&self, session_id: &str) -> Option<&str> {
        self.feedback.get(session_id).map(String::as_str)
    }

    #[cfg(feature = "external-planner")]
    fn complete(&self, prompt: &str) -> Result<String, AdapterError> {
        #[derive(Deserialize)]
        struct Reply {
            completion: String,
        }
        let client = reqwest::blocking::Client::new();
        let reply: Reply = client
            .post(&self.endpoint)
            .json(&serde_json::json!({ "prompt": prompt }))
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.json())
            .map_err(|e| AdapterError::Unavailable(e.to_string()))?;
        Ok(reply.completion)
    }

    #[cfg(not(feature = "external-planner"))]
    fn complete(&self, _prompt: &str) -> Result<String, AdapterError> {
        Err(AdapterError::Unavailable(format!(
            "{} (built without the external-planner feature)",
            self.endpoint
        )))
    }
}

impl PlannerAdapter for ExternalAdapter {
    fn name(&self) -> &str {
        "external"
    }

    fn plan(&mut self, ctx: &UtteranceContext<'_>) -> Result<TaskGraph, PlanError> {
        let prompt = build_prompt(ctx, &self.task_types, self.pending_feedback(ctx.session_id));
        let completion = self.complete(&prompt).map_err(|e| PlanError::failed(e.to_string()))?;
        self.turn += 1;
        parse_completion(&format!("graph-{}-{}", ctx.session_id, self.turn), &completion)
    }

    fn accept_feedback(&mut self, report: &FeedbackReport) -> Result<(), AdapterError> {
        let key = report.session_id.clone().unwrap_or_default();
        self.feedback.insert(key, report.formatted_summary.clone());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    use crate::session::ChatEntry;

    #[test]
    fn prompt_carries_chat_log_and_feedback() {
        let known = BTreeSet::new();
        let log = vec![ChatEntry {
            role: Role::User,
            text: "measure latency".into(),
            timestamp: 0,
        }];
        let ctx = UtteranceContext {
            session_id: "s",
            utterance: "now allocate the previous result",
            chat_log: &log,
            last_output: Some("run-1.1/probe"),
            known_data: &known,
        };
        let prompt = build_prompt(&ctx, &["probe".into(), "allocate".into()], Some("=== SUMMARY ==="));
        assert!(prompt.contains("Allowed task types: probe, allocate"));
        assert!(prompt.contains("user: measure latency"));
        assert!(prompt.contains("Previous output: run-1.1/probe"));
        assert!(prompt.contains("### Feedback on the previous plan\n=== SUMMARY ==="));
        assert!(prompt.ends_with("now allocate the previous result\n"));
    }

    #[test]
    fn completion_parsing() {
        let g = parse_completion(
            "g",
            r#"Sure: {"nodes": [{"task_key": "a", "task_type": "probe"}, {"task_key": "b", "task_type": "route", "depends_on": ["a"]}]} done"#,
        )
        .unwrap();
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.edges(), vec![("a".to_string(), "b".to_string())]);
        assert!(parse_completion("g", "no json here").is_err());
        assert!(parse_completion("g", r#"{"steps": []}"#).is_err());
    }

    #[cfg(not(feature = "external-planner"))]
    #[test]
    fn without_transport_planning_fails_cleanly() {
        let known = BTreeSet::new();
        let ctx = UtteranceContext {
            session_id: "s",
            utterance: "measure",
            chat_log: &[],
            last_output: None,
            known_data: &known,
        };
        let mut adapter = ExternalAdapter::new("http://127.0.0.1:9/complete", vec!["probe".into()]);
        assert_eq!(adapter.plan(&ctx).unwrap_err().code(), "PlanningFailed");
    }
}
