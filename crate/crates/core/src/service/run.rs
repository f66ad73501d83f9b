//! Run lifecycle and journal replay.
//!
//! A run's state is a fold over its journal. The live service builds each
//! event, appends it, then applies it, so replaying the file yields the same
//! state the service held.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::executor::ExecutionRecord;
use crate::feedback::{FeedbackReport, FinalReport};
use crate::intent::Intent;
use crate::journal::RunEvent;
use crate::model_library::ModelCombination;
use crate::planner::{execution_stages, TaskGraph};

pub const RUN_CREATED: &str = "run_created";
pub const GRAPH_PLANNED: &str = "graph_planned";
pub const PHASE_CHANGED: &str = "phase_changed";
pub const COMBINATIONS_SELECTED: &str = "combinations_selected";
pub const EXECUTION_FINISHED: &str = "execution_finished";
pub const REPORTS_EMITTED: &str = "reports_emitted";
pub const RUN_FAILED: &str = "run_failed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Planning,
    Selecting,
    Executing,
    Reporting,
    Done,
    Failed,
}

impl Phase {
    pub fn is_terminal(self) -> bool {
        matches!(self, Self::Done | Self::Failed)
    }

    /// Forward by exactly one step, or to `Failed` from any live phase.
    pub fn can_advance_to(self, next: Phase) -> bool {
        if self.is_terminal() {
            return false;
        }
        next == Phase::Failed || next as u8 == self as u8 + 1
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Planning => "planning",
            Self::Selecting => "selecting",
            Self::Executing => "executing",
            Self::Reporting => "reporting",
            Self::Done => "done",
            Self::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RunSource {
    Intent,
    Utterance {
        session_id: String,
        utterance: String,
        /// The session's previous run, whose output "previous result" refers to.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        previous_run_id: Option<String>,
    },
}

impl RunSource {
    pub fn session_id(&self) -> Option<&str> {
        match self {
            Self::Intent => None,
            Self::Utterance { session_id, .. } => Some(session_id),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunFailure {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("illegal phase transition {from:?} -> {to:?}")]
    IllegalTransition { from: Phase, to: Phase },
    #[error("run {0} cannot be done without a final report")]
    MissingFinalReport(String),
    #[error("malformed journal: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunState {
    pub run_id: String,
    pub phase: Phase,
    pub source: RunSource,
    pub intent: Intent,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<TaskGraph>,
    #[serde(default)]
    pub replans: u32,
    #[serde(default)]
    pub combinations: Vec<ModelCombination>,
    #[serde(default)]
    pub records: Vec<ExecutionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_report: Option<FinalReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feedback_report: Option<FeedbackReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<RunFailure>,
    pub created_ms: u64,
    pub updated_ms: u64,
}

/// Compact listing row for `GET /api/runs`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub phase: Phase,
    pub intent_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    pub created_ms: u64,
}

fn field<T: serde::de::DeserializeOwned>(event: &RunEvent, key: &str) -> Result<T, RunError> {
    let value = event.detail.get(key).cloned().unwrap_or(Value::Null);
    serde_json::from_value(value).map_err(|e| RunError::Malformed(format!("{} event field {key}: {e}", event.event)))
}

pub fn created_event(run_id: &str, source: &RunSource, intent: &Intent) -> RunEvent {
    RunEvent::new(run_id, RUN_CREATED, json!({ "source": source, "intent": intent }))
}

pub fn phase_event(run_id: &str, phase: Phase) -> RunEvent {
    RunEvent::new(run_id, PHASE_CHANGED, json!({ "phase": phase }))
}

pub fn failed_event(run_id: &str, code: &str, message: &str) -> RunEvent {
    RunEvent::new(run_id, RUN_FAILED, json!({ "code": code, "message": message }))
}

impl RunState {
    pub fn created(event: &RunEvent) -> Result<Self, RunError> {
        if event.event != RUN_CREATED {
            return Err(RunError::Malformed(format!("first event is {}, not {RUN_CREATED}", event.event)));
        }
        Ok(Self {
            run_id: event.run_id.clone(),
            phase: Phase::Planning,
            source: field(event, "source")?,
            intent: field(event, "intent")?,
            graph: None,
            replans: 0,
            combinations: Vec::new(),
            records: Vec::new(),
            final_report: None,
            feedback_report: None,
            failure: None,
            created_ms: event.timestamp,
            updated_ms: event.timestamp,
        })
    }

    /// Rebuilds a run from its journal lines.
    pub fn replay(events: &[RunEvent]) -> Result<Self, RunError> {
        let (first, rest) = events
            .split_first()
            .ok_or_else(|| RunError::Malformed("empty journal".into()))?;
        let mut state = Self::created(first)?;
        for e in rest {
            state.apply(e)?;
        }
        Ok(state)
    }

    pub fn advance(&mut self, next: Phase) -> Result<(), RunError> {
        if !self.phase.can_advance_to(next) {
            return Err(RunError::IllegalTransition {
                from: self.phase,
                to: next,
            });
        }
        if next == Phase::Done && self.final_report.is_none() {
            return Err(RunError::MissingFinalReport(self.run_id.clone()));
        }
        self.phase = next;
        Ok(())
    }

    pub fn apply(&mut self, event: &RunEvent) -> Result<(), RunError> {
        if event.run_id != self.run_id {
            return Err(RunError::Malformed(format!(
                "event for run {} in journal of run {}",
                event.run_id, self.run_id
            )));
        }
        match event.event.as_str() {
            GRAPH_PLANNED => {
                self.graph = Some(field(event, "graph")?);
                self.replans = field(event, "replans")?;
            }
            PHASE_CHANGED => self.advance(field(event, "phase")?)?,
            COMBINATIONS_SELECTED => self.combinations = field(event, "combinations")?,
            EXECUTION_FINISHED => {
                let record: ExecutionRecord = serde_json::from_value(event.detail.clone())
                    .map_err(|e| RunError::Malformed(format!("execution record: {e}")))?;
                self.records.retain(|r| r.rank != record.rank);
                self.records.push(record);
                self.records.sort_by_key(|r| r.rank);
            }
            REPORTS_EMITTED => {
                self.final_report = Some(field(event, "final_report")?);
                self.feedback_report = Some(field(event, "feedback_report")?);
            }
            RUN_FAILED => {
                self.failure = Some(RunFailure {
                    code: field(event, "code")?,
                    message: field(event, "message")?,
                });
                self.advance(Phase::Failed)?;
            }
            RUN_CREATED => return Err(RunError::Malformed(format!("duplicate {RUN_CREATED} event"))),
            _ => {}
        }
        self.updated_ms = self.updated_ms.max(event.timestamp);
        Ok(())
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            run_id: self.run_id.clone(),
            phase: self.phase,
            intent_id: self.intent.intent_id.clone(),
            session_id: self.source.session_id().map(str::to_string),
            created_ms: self.created_ms,
        }
    }

    /// Stored output of the sink task (last in stage order) in the best
    /// fully successful combination.
    pub fn last_output(&self) -> Option<String> {
        let best = self.final_report.as_ref()?.best_rank?;
        let record = self.records.iter().find(|r| r.rank == best)?;
        let stages = execution_stages(self.graph.as_ref()?).ok()?;
        let key = stages.last()?.last()?;
        record.results.get(key)?.output.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feedback::final_report;
    use crate::planner::TaskNode;

    const PHASES: [Phase; 6] = [
        Phase::Planning,
        Phase::Selecting,
        Phase::Executing,
        Phase::Reporting,
        Phase::Done,
        Phase::Failed,
    ];

    #[test]
    fn transitions_only_move_forward() {
        for from in PHASES {
            for to in PHASES {
                let expected = match from {
                    Phase::Done | Phase::Failed => false,
                    _ => to == Phase::Failed || PHASES.iter().position(|p| *p == to) == PHASES.iter().position(|p| *p == from).map(|i| i + 1),
                };
                assert_eq!(from.can_advance_to(to), expected, "{from:?} -> {to:?}");
            }
        }
    }

    fn created() -> RunState {
        let intent = Intent::for_utterance("i", "g");
        RunState::created(&created_event("R", &RunSource::Intent, &intent)).unwrap()
    }

    #[test]
    fn done_requires_final_report() {
        let mut s = created();
        for p in [Phase::Selecting, Phase::Executing, Phase::Reporting] {
            s.advance(p).unwrap();
        }
        assert_eq!(s.advance(Phase::Done), Err(RunError::MissingFinalReport("R".into())));
        s.final_report = Some(final_report("R", &[], &[]));
        s.advance(Phase::Done).unwrap();
        assert!(s.advance(Phase::Failed).is_err());
    }

    #[test]
    fn replay_matches_applied_state() {
        let intent = Intent::for_utterance("i", "g");
        let graph = TaskGraph::new("g", vec![TaskNode::new("A", "probe")]);
        let events = [
            created_event("R", &RunSource::Intent, &intent),
            RunEvent::new("R", GRAPH_PLANNED, json!({ "graph": graph, "replans": 0 })),
            phase_event("R", Phase::Selecting),
            RunEvent::new("R", "task_started", json!({ "rank": 1 })).for_task("A"),
            failed_event("R", "NoFeasibleCombination", "nothing fits"),
        ];
        let mut live = RunState::created(&events[0]).unwrap();
        for e in &events[1..] {
            live.apply(e).unwrap();
        }
        let lines: Vec<String> = events.iter().map(|e| serde_json::to_string(e).unwrap()).collect();
        let parsed: Vec<RunEvent> = lines.iter().map(|l| serde_json::from_str(l).unwrap()).collect();
        let replayed = RunState::replay(&parsed).unwrap();
        assert_eq!(replayed, live);
        assert_eq!(replayed.phase, Phase::Failed);
        assert_eq!(replayed.failure.unwrap().code, "NoFeasibleCombination");
    }

    #[test]
    fn skipping_a_phase_is_malformed() {
        let mut s = created();
        assert!(s.apply(&phase_event("R", Phase::Executing)).is_err());
    }
}
