//! Rule-based keyword planner.
//!
//! Matching rules, applied to one utterance:
//!
//! 1. The utterance is split on whitespace; each token is trimmed of
//!    surrounding punctuation and lowercased for keyword lookup.
//! 2. The token `then` closes the current clause.
//! 3. Every token equal to a keyword adds one task from that keyword's
//!    template to the current clause. The task key is the task type, with a
//!    `_2`, `_3`, ... suffix for repeats.
//! 4. Tasks of a clause depend on every task of the nearest earlier clause
//!    that produced tasks, so `x then y` chains and `x then y and z` fans out.
//! 5. Tokens equal to a registered data name (case-sensitive), and the
//!    session's last output when the utterance says "previous result" or
//!    "last output", become input data of the first clause's tasks.
//! 6. Task types named in earlier `UnknownTaskType` feedback for the same
//!    session are rewritten through the fallback table.
//!
//! No keyword hit at all is a planning failure.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{AdapterError, PlanError, PlannerAdapter, TaskGraph, TaskNode, UtteranceContext};
use crate::feedback::{FeedbackReport, Stage};
use crate::intent::is_valid_key;

pub const PREVIOUS_RESULT_PHRASES: [&str; 2] = ["previous result", "last output"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskTemplate {
    pub task_type: String,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

/// Keyword table file: `{"keywords": {kw: template}, "fallbacks": {type: type}}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KeywordTable {
    pub keywords: BTreeMap<String, TaskTemplate>,
    #[serde(default)]
    pub fallbacks: BTreeMap<String, String>,
}

impl KeywordTable {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let mut table: KeywordTable = serde_json::from_str(text)?;
        table.keywords = table
            .keywords
            .into_iter()
            .map(|(k, v)| (k.to_lowercase(), v))
            .collect();
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, KeywordTableError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| KeywordTableError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::from_json(&text)?)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum KeywordTableError {
    #[error("cannot read keyword table {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid keyword table: {0}")]
    Parse(#[from] serde_json::Error),
}

pub struct RuleAdapter {
    table: KeywordTable,
    feedback_log: Vec<FeedbackReport>,
    /// session id -> task types to rewrite through the fallback table
    pending_fallbacks: BTreeMap<String, BTreeSet<String>>,
}

fn trim_token(raw: &str) -> &str {
    raw.trim_matches(|c: char| !(c.is_alphanumeric() || matches!(c, '_' | '-' | '/' | '.')))
        .trim_end_matches('.')
}

fn graph_id_for(ctx: &UtteranceContext<'_>) -> String {
    let mut h = Sha256::new();
    h.update(ctx.session_id.as_bytes());
    h.update([0]);
    h.update(ctx.utterance.as_bytes());
    for entry in ctx.chat_log {
        h.update([0]);
        h.update(serde_json::to_string(&entry.role).unwrap_or_default().as_bytes());
        h.update(entry.text.as_bytes());
    }
    h.update([0]);
    h.update(ctx.last_output.unwrap_or_default().as_bytes());
    let digest = hex::encode(h.finalize());
    format!("graph-{}", &digest[..16])
}

impl RuleAdapter {
    pub fn new(table: KeywordTable) -> Self {
        Self {
            table,
            feedback_log: Vec::new(),
            pending_fallbacks: BTreeMap::new(),
        }
    }

    pub fn table(&self) -> &KeywordTable {
        &self.table
    }

    pub fn feedback_log(&self) -> &[FeedbackReport] {
        &self.feedback_log
    }

    fn fallback(&self, task_type: &str) -> Option<&String> {
        self.table.fallbacks.get(task_type)
    }
}

impl PlannerAdapter for RuleAdapter {
    fn name(&self) -> &str {
        "rule-based"
    }

    fn plan(&mut self, ctx: &UtteranceContext<'_>) -> Result<TaskGraph, PlanError> {
        let mut clauses: Vec<Vec<TaskNode>> = vec![Vec::new()];
        let mut mentioned: Vec<String> = Vec::new();
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();

        for raw in ctx.utterance.split_whitespace() {
            let token = trim_token(raw);
            if token.is_empty() {
                continue;
            }
            if ctx.known_data.contains(token) && !mentioned.iter().any(|m| m == token) {
                mentioned.push(token.to_string());
            }
            let lower = token.to_lowercase();
            if lower == "then" {
                if !clauses.last().is_some_and(Vec::is_empty) {
                    clauses.push(Vec::new());
                }
                continue;
            }
            let Some(template) = self.table.keywords.get(&lower) else {
                continue;
            };
            let n = counts.entry(template.task_type.clone()).or_insert(0);
            *n += 1;
            let base: String = template
                .task_type
                .chars()
                .map(|c| if is_valid_key(&c.to_string()) { c } else { '_' })
                .collect();
            let task_key = if *n == 1 { base } else { format!("{base}_{n}") };
            let mut node = TaskNode::new(task_key, template.task_type.clone());
            node.params = template.params.clone();
            clauses.last_mut().expect("at least one clause").push(node);
        }
        clauses.retain(|c| !c.is_empty());
        if clauses.is_empty() {
            return Err(PlanError::failed(format!(
                "no keyword in the table matched the utterance {:?}",
                ctx.utterance
            )));
        }

        let lower = ctx.utterance.to_lowercase();
        if PREVIOUS_RESULT_PHRASES.iter().any(|p| lower.contains(p)) {
            if let Some(last) = ctx.last_output {
                if !mentioned.iter().any(|m| m == last) {
                    mentioned.insert(0, last.to_string());
                }
            }
        }

        let pending = self.pending_fallbacks.get(ctx.session_id);
        let mut nodes = Vec::new();
        let mut previous: Vec<String> = Vec::new();
        for (i, clause) in clauses.into_iter().enumerate() {
            let keys: Vec<String> = clause.iter().map(|n| n.task_key.clone()).collect();
            for mut node in clause {
                node.depends_on = previous.clone();
                if i == 0 {
                    node.input_data = mentioned.clone();
                }
                if pending.is_some_and(|p| p.contains(&node.task_type)) {
                    if let Some(replacement) = self.fallback(&node.task_type) {
                        node.task_type = replacement.clone();
                    }
                }
                nodes.push(node);
            }
            previous = keys;
        }
        Ok(TaskGraph::new(graph_id_for(ctx), nodes))
    }

    /// Re-types every node named by an `UnknownTaskType` planning reason
    /// through the fallback table; other nodes are left untouched.
    fn revise(&mut self, graph: &TaskGraph, report: &FeedbackReport) -> Result<TaskGraph, PlanError> {
        let mut revised = graph.clone();
        for reason in &report.scores.reasons {
            if reason.stage != Stage::Planning || reason.code != "UnknownTaskType" {
                continue;
            }
            let Some(key) = reason.task_key.as_deref() else { continue };
            let Some(node) = revised.nodes.iter_mut().find(|n| n.task_key == key) else {
                continue;
            };
            if let Some(replacement) = self.table.fallbacks.get(&node.task_type) {
                node.task_type = replacement.clone();
            }
        }
        revised.reshape();
        Ok(revised)
    }

    fn accept_feedback(&mut self, report: &FeedbackReport) -> Result<(), AdapterError> {
        if let Some(session) = &report.session_id {
            for reason in &report.scores.reasons {
                if reason.code == "UnknownTaskType" {
                    if let Some(t) = &reason.task_type {
                        self.pending_fallbacks.entry(session.clone()).or_default().insert(t.clone());
                    }
                }
            }
        }
        self.feedback_log.push(report.clone());
        Ok(())
    }
}
