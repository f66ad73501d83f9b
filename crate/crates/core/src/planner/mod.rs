//! Task translation and planning.
//!
//! Operator intents translate to graphs by identity. Utterances go through a
//! [`PlannerAdapter`]; the bundled [`RuleAdapter`] maps keywords to task
//! templates, and [`ExternalAdapter`] prompts a completion endpoint. Every
//! graph leaving [`Planner::plan`] or [`Planner::replan`] has passed
//! [`validate_graph`].

mod external;
mod graph;
mod rules;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

pub use external::{build_prompt, parse_completion, ExternalAdapter};
pub use graph::{
    classify_shape, execution_stages, topological_order, validate_graph, Finding, GraphError, GraphShape,
    TaskGraph, TaskNode, ValidationReport,
};
pub use rules::{KeywordTable, KeywordTableError, RuleAdapter, TaskTemplate, PREVIOUS_RESULT_PHRASES};

use crate::feedback::FeedbackReport;
use crate::intent::Intent;
use crate::session::ChatEntry;

pub const DEFAULT_MAX_REPLANS: u32 = 2;

/// Everything an adapter sees for one natural-language turn.
#[derive(Debug, Clone, Copy)]
pub struct UtteranceContext<'a> {
    pub session_id: &'a str,
    pub utterance: &'a str,
    pub chat_log: &'a [ChatEntry],
    /// Newest data name produced by the session's last run, if any.
    pub last_output: Option<&'a str>,
    /// Registered data names the utterance may mention.
    pub known_data: &'a BTreeSet<String>,
}

#[derive(Debug, Clone, Copy)]
pub enum PlanRequest<'a> {
    Intent(&'a Intent),
    Utterance(UtteranceContext<'a>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    /// The draft graph is otherwise sound but names a task type with no
    /// registered handler. The draft is kept so it can be replanned.
    #[error("task {task_key} requests unknown task_type {task_type}")]
    UnknownTaskType {
        task_key: String,
        task_type: String,
        draft: Box<TaskGraph>,
    },
    #[error("planning failed: {reason}")]
    PlanningFailed { reason: String, findings: Vec<Finding> },
}

impl PlanError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::UnknownTaskType { .. } => "UnknownTaskType",
            Self::PlanningFailed { .. } => "PlanningFailed",
        }
    }

    pub(crate) fn failed(reason: impl Into<String>) -> Self {
        Self::PlanningFailed {
            reason: reason.into(),
            findings: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdapterError {
    #[error("planner endpoint unavailable: {0}")]
    Unavailable(String),
    #[error("feedback rejected: {0}")]
    Rejected(String),
}

/// Pluggable translation backend.
pub trait PlannerAdapter: Send {
    fn name(&self) -> &str;

    /// Produces a draft graph for one utterance. The draft may still name
    /// unknown task types; [`Planner`] validates it.
    fn plan(&mut self, ctx: &UtteranceContext<'_>) -> Result<TaskGraph, PlanError>;

    /// Revises `graph` in light of `report`. The default keeps the graph.
    fn revise(&mut self, graph: &TaskGraph, _report: &FeedbackReport) -> Result<TaskGraph, PlanError> {
        Ok(graph.clone())
    }

    fn accept_feedback(&mut self, report: &FeedbackReport) -> Result<(), AdapterError>;
}

/// Wraps an adapter with validation and the replan budget.
pub struct Planner {
    adapter: Box<dyn PlannerAdapter>,
    max_replans: u32,
    replans: BTreeMap<String, u32>,
}

impl Planner {
    pub fn new(adapter: Box<dyn PlannerAdapter>, max_replans: u32) -> Self {
        Self {
            adapter,
            max_replans,
            replans: BTreeMap::new(),
        }
    }

    pub fn adapter(&self) -> &dyn PlannerAdapter {
        self.adapter.as_ref()
    }

    pub fn adapter_mut(&mut self) -> &mut dyn PlannerAdapter {
        self.adapter.as_mut()
    }

    pub fn max_replans(&self) -> u32 {
        self.max_replans
    }

    pub fn plan(&mut self, request: PlanRequest<'_>, vocabulary: &BTreeSet<String>) -> Result<TaskGraph, PlanError> {
        let draft = match request {
            PlanRequest::Intent(intent) => graph_for_intent(intent),
            PlanRequest::Utterance(ctx) => self.adapter.plan(&ctx)?,
        };
        check(draft, vocabulary)
    }

    /// One feedback-driven revision of `graph`, counted against
    /// `max_replans` per graph id. A report with every score at 1 is a fixed
    /// point and costs nothing.
    pub fn replan(
        &mut self,
        graph: &TaskGraph,
        report: &FeedbackReport,
        vocabulary: &BTreeSet<String>,
    ) -> Result<TaskGraph, PlanError> {
        if report.graph_id != graph.graph_id {
            return Err(PlanError::failed(format!(
                "feedback for graph {} does not reference graph {}",
                report.graph_id, graph.graph_id
            )));
        }
        if report.scores.is_perfect() {
            return Ok(graph.clone());
        }
        let used = self.replans.entry(graph.graph_id.clone()).or_insert(0);
        if *used >= self.max_replans {
            return Err(PlanError::failed(format!(
                "replan limit of {} exhausted for graph {}",
                self.max_replans, graph.graph_id
            )));
        }
        *used += 1;
        let mut revised = self.adapter.revise(graph, report)?;
        revised.graph_id = graph.graph_id.clone();
        revised.reshape();
        let report = validate_graph(&revised, vocabulary);
        if report.is_valid() {
            Ok(revised)
        } else {
            Err(PlanError::PlanningFailed {
                reason: format!("revised graph {} still has findings", revised.graph_id),
                findings: report.findings,
            })
        }
    }

    /// Repeats [`Planner::replan`] on `draft` until a valid graph comes
    /// back or the budget is spent. At least one attempt is made, so a zero
    /// budget fails with the limit message.
    pub fn replan_until_valid(
        &mut self,
        draft: &TaskGraph,
        report: &FeedbackReport,
        vocabulary: &BTreeSet<String>,
    ) -> Result<TaskGraph, PlanError> {
        let mut outcome = self.replan(draft, report, vocabulary);
        for _ in 1..self.max_replans {
            if outcome.is_ok() {
                break;
            }
            outcome = self.replan(draft, report, vocabulary);
        }
        outcome
    }

    pub fn replans_used(&self, graph_id: &str) -> u32 {
        self.replans.get(graph_id).copied().unwrap_or(0)
    }
}

/// Structured-path translation: nodes and edges mirror the task requests.
pub fn graph_for_intent(intent: &Intent) -> TaskGraph {
    let nodes = intent
        .task_requests
        .iter()
        .map(|r| TaskNode {
            task_key: r.task_key.clone(),
            task_type: r.task_type.clone(),
            depends_on: r.depends_on.clone(),
            input_data: r.input_data.clone(),
            params: BTreeMap::new(),
        })
        .collect();
    TaskGraph::new(format!("graph-{}", intent.intent_id), nodes)
}

fn check(draft: TaskGraph, vocabulary: &BTreeSet<String>) -> Result<TaskGraph, PlanError> {
    let report = validate_graph(&draft, vocabulary);
    if report.is_valid() {
        return Ok(draft);
    }
    let only_types = report.findings.iter().all(|f| matches!(f, Finding::UnknownTaskType { .. }));
    match report.findings.first() {
        Some(Finding::UnknownTaskType { task_key, task_type }) if only_types => Err(PlanError::UnknownTaskType {
            task_key: task_key.clone(),
            task_type: task_type.clone(),
            draft: Box::new(draft),
        }),
        _ => Err(PlanError::PlanningFailed {
            reason: format!("graph {} failed validation", draft.graph_id),
            findings: report.findings,
        }),
    }
}
