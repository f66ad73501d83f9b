//! Final output, run summary, stage scores and feedback delivery.
//!
//! The summary is plain text with fixed section markers:
//!
//! ```text
//! === RUN SUMMARY ===
//! run_id: <run_id>
//! graph_id: <graph_id>
//! shape: <shape>
//! --- [1] PLANNED TASKS ---
//! stage | task_key | task_type | depends_on | input_data
//! <one row per task, by stage then task_key>
//! --- [2] SELECTED COMBINATIONS ---
//! rank | assignment | planned_critical_path_ms | planned_peak_utilization | observed_critical_path_ms | observed_peak_utilization | wall_status
//! <one row per combination, by rank>
//! --- [3] INFERENCE RESULTS ---
//! rank | task_key | model | status | output | simulated_latency_ms | error
//! <one row per task run, by rank then task_key>
//! --- END ---
//! ```
//!
//! Empty lists are written as `-`, list items are comma separated, numbers
//! use the shortest round-trip decimal form. Empty sections hold one
//! `(none)` row.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::executor::{ExecutionRecord, TaskStatus, WallStatus};
use crate::intent::Intent;
use crate::model_library::{AggregateMetrics, ModelCombination};
use crate::planner::{execution_stages, Finding, PlannerAdapter, TaskGraph, ValidationReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Planning,
    Selection,
    Execution,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reason {
    pub stage: Stage,
    pub code: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_key: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_type: Option<String>,
}

impl Reason {
    pub fn new(stage: Stage, code: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            stage,
            code: code.into(),
            message: message.into(),
            task_key: None,
            task_type: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageScores {
    pub planning: f64,
    pub selection: f64,
    pub execution: f64,
    pub reasons: Vec<Reason>,
}

impl StageScores {
    pub fn perfect() -> Self {
        Self {
            planning: 1.0,
            selection: 1.0,
            execution: 1.0,
            reasons: Vec::new(),
        }
    }

    pub fn is_perfect(&self) -> bool {
        self.planning == 1.0 && self.selection == 1.0 && self.execution == 1.0
    }

    pub fn score(&self, stage: Stage) -> f64 {
        match stage {
            Stage::Planning => self.planning,
            Stage::Selection => self.selection,
            Stage::Execution => self.execution,
        }
    }

    pub fn reasons_for(&self, stage: Stage) -> impl Iterator<Item = &Reason> {
        self.reasons.iter().filter(move |r| r.stage == stage)
    }
}

/// What the selection stage returned, or why it returned nothing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionOutcome {
    pub returned: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_code: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_message: Option<String>,
}

impl SelectionOutcome {
    pub fn returned(n: usize) -> Self {
        Self {
            returned: n,
            error_code: None,
            error_message: None,
        }
    }

    pub fn failed(code: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            returned: 0,
            error_code: Some(code.into()),
            error_message: Some(message.into()),
        }
    }
}

/// Scoring rubric:
///
/// * planning: 1 when validation has no findings, else 0 with one reason
///   per finding;
/// * selection: `min(1, returned / combination_count)`;
/// * execution: ok task runs over all task runs, 0 when nothing ran, with
///   one reason per distinct error code.
pub fn score_stages(
    validation: &ValidationReport,
    selection: &SelectionOutcome,
    records: &[ExecutionRecord],
    intent: &Intent,
) -> StageScores {
    let mut reasons = Vec::new();

    let planning = if validation.findings.is_empty() { 1.0 } else { 0.0 };
    reasons.extend(planning_reasons(validation));

    let wanted = intent.combination_count.max(1) as f64;
    let selection_score = (selection.returned as f64 / wanted).min(1.0);
    if selection.returned == 0 {
        reasons.push(Reason::new(
            Stage::Selection,
            selection.error_code.clone().unwrap_or_else(|| "NoFeasibleCombination".into()),
            selection
                .error_message
                .clone()
                .unwrap_or_else(|| "no feasible model combination was returned".into()),
        ));
    } else if selection_score < 1.0 {
        reasons.push(Reason::new(
            Stage::Selection,
            "FewerCombinations",
            format!(
                "{} of {} requested combinations are feasible",
                selection.returned, intent.combination_count
            ),
        ));
    }

    let total: usize = records.iter().map(|r| r.results.len()).sum();
    let ok: usize = records.iter().map(ExecutionRecord::ok_count).sum();
    let execution = if total == 0 { 0.0 } else { ok as f64 / total as f64 };
    if total == 0 {
        reasons.push(Reason::new(Stage::Execution, "NoExecution", "no task was executed"));
    }
    let mut codes: BTreeMap<String, usize> = BTreeMap::new();
    for rec in records {
        for res in rec.results.values() {
            if let Some(err) = &res.error {
                *codes.entry(err.code.clone()).or_default() += 1;
            }
        }
    }
    for (code, count) in codes {
        reasons.push(Reason::new(
            Stage::Execution,
            code.clone(),
            format!("{count} task run(s) failed with {code}"),
        ));
    }

    StageScores {
        planning,
        selection: selection_score,
        execution,
        reasons,
    }
}

fn planning_reasons(validation: &ValidationReport) -> Vec<Reason> {
    validation
        .findings
        .iter()
        .map(|finding| {
            let mut r = Reason::new(Stage::Planning, finding.code(), finding.to_string());
            r.task_key = finding.task_key().map(str::to_string);
            if let Finding::UnknownTaskType { task_type, .. } = finding {
                r.task_type = Some(task_type.clone());
            }
            r
        })
        .collect()
}

/// Report on a draft graph alone, handed to [`Planner::replan`] before
/// anything was selected or executed.
///
/// [`Planner::replan`]: crate::planner::Planner::replan
pub fn planning_feedback(run_id: &str, session_id: Option<&str>, validation: &ValidationReport) -> FeedbackReport {
    let mut reasons = planning_reasons(validation);
    for stage in [Stage::Selection, Stage::Execution] {
        reasons.push(Reason::new(stage, "NotAttempted", "the draft graph has not been run"));
    }
    let scores = StageScores {
        planning: if validation.findings.is_empty() { 1.0 } else { 0.0 },
        selection: 0.0,
        execution: 0.0,
        reasons,
    };
    FeedbackReport::new(run_id, &validation.graph_id, session_id, String::new(), scores, &[])
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeedbackError {
    #[error("inconsistent run: {0}")]
    InconsistentRun(String),
}

fn list(items: &[String]) -> String {
    if items.is_empty() {
        "-".into()
    } else {
        items.join(",")
    }
}

/// Renders the three-section summary. Deterministic for identical inputs.
pub fn summarize(
    run_id: &str,
    graph: &TaskGraph,
    combinations: &[ModelCombination],
    records: &[ExecutionRecord],
) -> Result<String, FeedbackError> {
    let keys: BTreeSet<&str> = graph.nodes.iter().map(|n| n.task_key.as_str()).collect();
    for c in combinations {
        let assigned: BTreeSet<&str> = c.assignment.keys().map(String::as_str).collect();
        if assigned != keys {
            return Err(FeedbackError::InconsistentRun(format!(
                "combination rank {} does not cover graph {}",
                c.rank, graph.graph_id
            )));
        }
    }
    let ranks: BTreeSet<u32> = combinations.iter().map(|c| c.rank).collect();
    for r in records {
        if r.run_id != run_id {
            return Err(FeedbackError::InconsistentRun(format!(
                "record of run {} in summary of run {run_id}",
                r.run_id
            )));
        }
        if !ranks.contains(&r.rank) {
            return Err(FeedbackError::InconsistentRun(format!("record rank {} has no combination", r.rank)));
        }
        let covered: BTreeSet<&str> = r.results.keys().map(String::as_str).collect();
        if covered != keys {
            return Err(FeedbackError::InconsistentRun(format!(
                "record rank {} does not cover graph {}",
                r.rank, graph.graph_id
            )));
        }
    }
    let stages = execution_stages(graph).map_err(|e| FeedbackError::InconsistentRun(e.to_string()))?;

    let mut out = String::new();
    let _ = writeln!(out, "=== RUN SUMMARY ===");
    let _ = writeln!(out, "run_id: {run_id}");
    let _ = writeln!(out, "graph_id: {}", graph.graph_id);
    let _ = writeln!(out, "shape: {}", graph.shape);

    let _ = writeln!(out, "--- [1] PLANNED TASKS ---");
    let _ = writeln!(out, "stage | task_key | task_type | depends_on | input_data");
    for (i, stage) in stages.iter().enumerate() {
        for key in stage {
            let node = graph.node(key).expect("staged keys are graph nodes");
            let mut deps = node.depends_on.clone();
            deps.sort();
            let _ = writeln!(
                out,
                "{i} | {key} | {} | {} | {}",
                node.task_type,
                list(&deps),
                list(&node.input_data)
            );
        }
    }

    let mut combos: Vec<&ModelCombination> = combinations.iter().collect();
    combos.sort_by_key(|c| c.rank);
    let by_rank: BTreeMap<u32, &ExecutionRecord> = records.iter().map(|r| (r.rank, r)).collect();

    let _ = writeln!(out, "--- [2] SELECTED COMBINATIONS ---");
    let _ = writeln!(
        out,
        "rank | assignment | planned_critical_path_ms | planned_peak_utilization | observed_critical_path_ms | observed_peak_utilization | wall_status"
    );
    if combos.is_empty() {
        let _ = writeln!(out, "(none)");
    }
    for c in &combos {
        let assignment: Vec<String> = c.assignment.iter().map(|(k, m)| format!("{k}={m}")).collect();
        let (obs_cp, obs_peak, status) = match by_rank.get(&c.rank) {
            Some(r) => (
                r.observed_critical_path_ms.to_string(),
                r.observed_peak_utilization.to_string(),
                match r.wall_status {
                    WallStatus::Complete => "complete",
                    WallStatus::Aborted => "aborted",
                },
            ),
            None => ("-".into(), "-".into(), "not_executed"),
        };
        let _ = writeln!(
            out,
            "{} | {} | {} | {} | {obs_cp} | {obs_peak} | {status}",
            c.rank,
            list(&assignment),
            c.critical_path_latency_ms,
            c.peak_utilization
        );
    }

    let _ = writeln!(out, "--- [3] INFERENCE RESULTS ---");
    let _ = writeln!(out, "rank | task_key | model | status | output | simulated_latency_ms | error");
    let mut rows = 0;
    for (rank, rec) in &by_rank {
        for (key, res) in &rec.results {
            rows += 1;
            let status = match res.status {
                TaskStatus::Ok => "ok",
                TaskStatus::Failed => "failed",
            };
            let _ = writeln!(
                out,
                "{rank} | {key} | {} | {status} | {} | {} | {}",
                res.model_name,
                res.output.as_deref().unwrap_or("-"),
                res.simulated_latency_ms,
                res.error.as_ref().map_or("-", |e| e.code.as_str())
            );
        }
    }
    if rows == 0 {
        let _ = writeln!(out, "(none)");
    }
    let _ = writeln!(out, "--- END ---");
    Ok(out)
}

/// Summary for a run that never produced a graph.
pub fn summarize_unplanned(run_id: &str, reason: &str) -> String {
    format!(
        "=== RUN SUMMARY ===\nrun_id: {run_id}\ngraph_id: -\nshape: -\n--- [1] PLANNED TASKS ---\n\
         stage | task_key | task_type | depends_on | input_data\n(none: {reason})\n\
         --- [2] SELECTED COMBINATIONS ---\n(none)\n--- [3] INFERENCE RESULTS ---\n(none)\n--- END ---\n"
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationOutcome {
    pub rank: u32,
    pub wall_status: WallStatus,
    pub ok_tasks: usize,
    pub failed_tasks: usize,
    pub observed_critical_path_ms: f64,
    pub observed_peak_utilization: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackReport {
    pub run_id: String,
    pub graph_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub session_id: Option<String>,
    pub formatted_summary: String,
    pub scores: StageScores,
    pub outcomes: Vec<CombinationOutcome>,
}

impl FeedbackReport {
    pub fn new(
        run_id: &str,
        graph_id: &str,
        session_id: Option<&str>,
        formatted_summary: String,
        scores: StageScores,
        records: &[ExecutionRecord],
    ) -> Self {
        let mut outcomes: Vec<CombinationOutcome> = records
            .iter()
            .map(|r| CombinationOutcome {
                rank: r.rank,
                wall_status: r.wall_status,
                ok_tasks: r.ok_count(),
                failed_tasks: r.results.len() - r.ok_count(),
                observed_critical_path_ms: r.observed_critical_path_ms,
                observed_peak_utilization: r.observed_peak_utilization,
            })
            .collect();
        outcomes.sort_by_key(|o| o.rank);
        Self {
            run_id: run_id.to_string(),
            graph_id: graph_id.to_string(),
            session_id: session_id.map(str::to_string),
            formatted_summary,
            scores,
            outcomes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombinationStatus {
    Complete,
    Aborted,
    NotExecuted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalCombination {
    pub rank: u32,
    pub assignment: BTreeMap<String, String>,
    pub planned: AggregateMetrics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed: Option<AggregateMetrics>,
    pub status: CombinationStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalReport {
    pub run_id: String,
    pub combinations: Vec<FinalCombination>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_rank: Option<u32>,
}

/// Combinations in rank order with planned and observed metrics; the best
/// rank is the first whose record completed with every task ok.
pub fn final_report(run_id: &str, combinations: &[ModelCombination], records: &[ExecutionRecord]) -> FinalReport {
    let by_rank: BTreeMap<u32, &ExecutionRecord> = records.iter().map(|r| (r.rank, r)).collect();
    let mut combos: Vec<FinalCombination> = combinations
        .iter()
        .map(|c| {
            let rec = by_rank.get(&c.rank);
            FinalCombination {
                rank: c.rank,
                assignment: c.assignment.clone(),
                planned: c.metrics(),
                observed: rec.map(|r| AggregateMetrics {
                    critical_path_latency_ms: r.observed_critical_path_ms,
                    peak_utilization: r.observed_peak_utilization,
                }),
                status: match rec {
                    Some(r) if r.all_ok() => CombinationStatus::Complete,
                    Some(_) => CombinationStatus::Aborted,
                    None => CombinationStatus::NotExecuted,
                },
            }
        })
        .collect();
    combos.sort_by_key(|c| c.rank);
    let best_rank = combos
        .iter()
        .find(|c| c.status == CombinationStatus::Complete)
        .map(|c| c.rank);
    FinalReport {
        run_id: run_id.to_string(),
        combinations: combos,
        best_rank,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delivery {
    Delivered,
    Duplicate,
    Failed,
}

/// Delivers each run's report to the planner adapter at most once.
#[derive(Debug, Default)]
pub struct FeedbackChannel {
    delivered: BTreeSet<String>,
    log: Vec<(String, Delivery)>,
}

impl FeedbackChannel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn emit_feedback(&mut self, report: &FeedbackReport, adapter: &mut dyn PlannerAdapter) -> Delivery {
        let outcome = if self.delivered.contains(&report.run_id) {
            tracing::warn!(run_id = %report.run_id, "duplicate feedback rejected");
            Delivery::Duplicate
        } else {
            self.delivered.insert(report.run_id.clone());
            match adapter.accept_feedback(report) {
                Ok(()) => Delivery::Delivered,
                Err(e) => {
                    tracing::warn!(run_id = %report.run_id, error = %e, "feedback delivery failed");
                    Delivery::Failed
                }
            }
        };
        self.log.push((report.run_id.clone(), outcome));
        outcome
    }

    pub fn log(&self) -> &[(String, Delivery)] {
        &self.log
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executor::{TaskError, TaskResult};
    use crate::planner::{KeywordTable, RuleAdapter, TaskNode};

    fn graph1() -> TaskGraph {
        TaskGraph::new("g", vec![TaskNode::new("A", "probe")])
    }

    fn combo(rank: u32, pairs: &[(&str, &str)]) -> ModelCombination {
        ModelCombination {
            assignment: pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
            critical_path_latency_ms: 3.0,
            peak_utilization: 0.25,
            rank,
        }
    }

    fn result(ok: bool, code: &str) -> TaskResult {
        TaskResult {
            status: if ok { TaskStatus::Ok } else { TaskStatus::Failed },
            model_name: "m".into(),
            output: ok.then(|| "R.1/A".to_string()),
            simulated_latency_ms: if ok { 3.0 } else { 0.0 },
            start_ms: 0.0,
            end_ms: if ok { 3.0 } else { 0.0 },
            utilization: 0.25,
            stage: 0,
            error: (!ok).then(|| TaskError::new(code, "boom")),
        }
    }

    fn record(rank: u32, results: Vec<(&str, TaskResult)>) -> ExecutionRecord {
        let all_ok = results.iter().all(|(_, r)| r.status == TaskStatus::Ok);
        ExecutionRecord {
            run_id: "R".into(),
            rank,
            results: results.into_iter().map(|(k, r)| (k.to_string(), r)).collect(),
            observed_critical_path_ms: 3.0,
            observed_peak_utilization: 0.25,
            serialized_stages: vec![],
            wall_status: if all_ok { WallStatus::Complete } else { WallStatus::Aborted },
        }
    }

    fn clean_validation() -> ValidationReport {
        ValidationReport {
            graph_id: "g".into(),
            findings: vec![],
            shape: None,
        }
    }

    fn rows(summary: &str, section: &str, next: &str) -> usize {
        let start = summary.find(section).unwrap();
        let end = summary.find(next).unwrap();
        summary[start..end].lines().count() - 2
    }

    #[test]
    fn single_task_summary_rows() {
        let s = summarize("R", &graph1(), &[combo(1, &[("A", "m")])], &[record(1, vec![("A", result(true, ""))])]).unwrap();
        assert_eq!(rows(&s, "--- [1]", "--- [2]"), 1);
        assert_eq!(rows(&s, "--- [2]", "--- [3]"), 1);
        assert_eq!(rows(&s, "--- [3]", "--- END"), 1);
        assert!(s.contains("1 | A | m | ok | R.1/A | 3 | -"));
    }

    #[test]
    fn failed_task_row_carries_error_code() {
        let s = summarize(
            "R",
            &graph1(),
            &[combo(1, &[("A", "m")])],
            &[record(1, vec![("A", result(false, "ModalityMismatch"))])],
        )
        .unwrap();
        assert!(s.contains("| failed | - | 0 | ModalityMismatch"));
    }

    #[test]
    fn records_from_another_run_are_inconsistent() {
        let mut rec = record(1, vec![("A", result(true, ""))]);
        rec.run_id = "other".into();
        assert!(matches!(
            summarize("R", &graph1(), &[combo(1, &[("A", "m")])], &[rec]),
            Err(FeedbackError::InconsistentRun(_))
        ));
    }

    #[test]
    fn perfect_run_scores_one() {
        let mut intent = Intent::for_utterance("i", "");
        intent.combination_count = 2;
        let recs = vec![record(1, vec![("A", result(true, ""))]), record(2, vec![("A", result(true, ""))])];
        let s = score_stages(&clean_validation(), &SelectionOutcome::returned(2), &recs, &intent);
        assert_eq!((s.planning, s.selection, s.execution), (1.0, 1.0, 1.0));
        assert!(s.reasons.is_empty());
    }

    #[test]
    fn no_feasible_combination_scores() {
        let intent = Intent::for_utterance("i", "");
        let s = score_stages(
            &clean_validation(),
            &SelectionOutcome::failed("NoFeasibleCombination", "budgets too tight"),
            &[],
            &intent,
        );
        assert_eq!(s.selection, 0.0);
        assert_eq!(s.execution, 0.0);
        assert!(s.reasons.iter().any(|r| r.code == "NoFeasibleCombination" && r.stage == Stage::Selection));
        assert!(s.reasons_for(Stage::Execution).count() >= 1);
    }

    #[test]
    fn five_of_six_task_runs() {
        let mut intent = Intent::for_utterance("i", "");
        intent.combination_count = 2;
        let ok = || result(true, "");
        let recs = vec![
            record(1, vec![("A", ok()), ("B", ok()), ("C", ok())]),
            record(2, vec![("A", ok()), ("B", result(false, "ModalityMismatch")), ("C", ok())]),
        ];
        let s = score_stages(&clean_validation(), &SelectionOutcome::returned(2), &recs, &intent);
        assert_eq!(s.execution, 5.0 / 6.0);
        let codes: Vec<&str> = s.reasons_for(Stage::Execution).map(|r| r.code.as_str()).collect();
        assert_eq!(codes, ["ModalityMismatch"]);
    }

    #[test]
    fn partial_selection_has_a_reason() {
        let mut intent = Intent::for_utterance("i", "");
        intent.combination_count = 4;
        let s = score_stages(&clean_validation(), &SelectionOutcome::returned(1), &[], &intent);
        assert_eq!(s.selection, 0.25);
        assert!(s.reasons_for(Stage::Selection).any(|r| r.code == "FewerCombinations"));
    }

    #[test]
    fn unknown_type_finding_becomes_planning_reason() {
        let validation = ValidationReport {
            graph_id: "g".into(),
            findings: vec![Finding::UnknownTaskType {
                task_key: "X".into(),
                task_type: "warp".into(),
            }],
            shape: None,
        };
        let s = score_stages(&validation, &SelectionOutcome::returned(1), &[], &Intent::for_utterance("i", ""));
        assert_eq!(s.planning, 0.0);
        let r = s.reasons_for(Stage::Planning).next().unwrap();
        assert_eq!(r.task_key.as_deref(), Some("X"));
        assert_eq!(r.task_type.as_deref(), Some("warp"));
    }

    #[test]
    fn final_report_best_rank_skips_aborted() {
        let recs = vec![
            record(1, vec![("A", result(false, "ModalityMismatch"))]),
            record(2, vec![("A", result(true, ""))]),
        ];
        let report = final_report("R", &[combo(2, &[("A", "n")]), combo(1, &[("A", "m")])], &recs);
        assert_eq!(report.combinations.iter().map(|c| c.rank).collect::<Vec<_>>(), [1, 2]);
        assert_eq!(report.best_rank, Some(2));
        assert_eq!(report.combinations[0].status, CombinationStatus::Aborted);
    }

    #[test]
    fn feedback_is_delivered_once_per_run() {
        let mut adapter = RuleAdapter::new(KeywordTable::default());
        let mut channel = FeedbackChannel::new();
        let report = FeedbackReport::new("R", "g", None, String::new(), StageScores::perfect(), &[]);
        assert_eq!(channel.emit_feedback(&report, &mut adapter), Delivery::Delivered);
        assert_eq!(adapter.feedback_log().len(), 1);
        assert_eq!(channel.emit_feedback(&report, &mut adapter), Delivery::Duplicate);
        assert_eq!(adapter.feedback_log().len(), 1);
        assert_eq!(channel.log().len(), 2);
    }
}
