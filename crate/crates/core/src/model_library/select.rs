//! Aggregate metrics and ranked combination search.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{candidates_for_task, pairwise_compatible, CardIndex, ModelCard};
use crate::intent::Intent;
use crate::planner::{execution_stages, GraphError, TaskGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub critical_path_latency_ms: f64,
    pub peak_utilization: f64,
}

/// A total task -> model assignment with its aggregates and 1-based rank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCombination {
    pub assignment: BTreeMap<String, String>,
    pub critical_path_latency_ms: f64,
    pub peak_utilization: f64,
    pub rank: u32,
}

impl ModelCombination {
    pub fn metrics(&self) -> AggregateMetrics {
        AggregateMetrics {
            critical_path_latency_ms: self.critical_path_latency_ms,
            peak_utilization: self.peak_utilization,
        }
    }

    /// Assigned model names in task-key order; the final ranking tie-breaker.
    pub fn assignment_key(&self) -> Vec<&str> {
        self.assignment.values().map(String::as_str).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AggregateError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("task {0} has no assigned model")]
    Unassigned(String),
    #[error("model {0} is not in the registry")]
    UnknownModel(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SelectionError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("no feasible model combination: {0}")]
    NoFeasibleCombination(String),
}

impl SelectionError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::Graph(GraphError::CyclicGraph(_)) => "CyclicGraph",
            Self::Graph(_) => "InvalidGraph",
            Self::NoFeasibleCombination(_) => "NoFeasibleCombination",
        }
    }
}

/// Critical path: longest root-to-sink sum of assigned latencies.
/// Peak utilization: largest per-stage sum, each stage summed in task-key
/// order.
pub fn aggregate_metrics(
    graph: &TaskGraph,
    assignment: &BTreeMap<String, String>,
    cards: &CardIndex,
) -> Result<AggregateMetrics, AggregateError> {
    let stages = execution_stages(graph)?;
    let card_of = |key: &str| -> Result<&ModelCard, AggregateError> {
        let name = assignment.get(key).ok_or_else(|| AggregateError::Unassigned(key.to_string()))?;
        cards.get(name).ok_or_else(|| AggregateError::UnknownModel(name.clone()))
    };

    let mut finish: BTreeMap<&str, f64> = BTreeMap::new();
    let mut critical = 0.0f64;
    let mut peak = 0.0f64;
    for stage in &stages {
        let mut stage_sum = 0.0f64;
        for key in stage {
            let card = card_of(key)?;
            let node = graph.node(key).expect("staged keys are graph nodes");
            let start = node.depends_on.iter().map(|d| finish[d.as_str()]).fold(0.0f64, f64::max);
            let end = start + card.latency_ms;
            finish.insert(key.as_str(), end);
            critical = critical.max(end);
            stage_sum += card.resource_utilization;
        }
        peak = peak.max(stage_sum);
    }
    Ok(AggregateMetrics {
        critical_path_latency_ms: critical,
        peak_utilization: peak,
    })
}

/// Heap entry ordered by the ranking key so the heap top is the worst kept.
struct Ranked {
    critical: f64,
    peak: f64,
    names: Vec<String>,
    assignment: BTreeMap<String, String>,
}

impl Ranked {
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.critical
            .total_cmp(&other.critical)
            .then_with(|| self.peak.total_cmp(&other.peak))
            .then_with(|| self.names.cmp(&other.names))
    }
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_key(other) == Ordering::Equal
    }
}
impl Eq for Ranked {}
impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_key(other)
    }
}

struct Search<'a> {
    graph: &'a TaskGraph,
    order: Vec<&'a str>,
    stage_of: Vec<usize>,
    /// positions (in `order`) of each task's dependencies
    deps: Vec<Vec<usize>>,
    candidates: Vec<Vec<ModelCard>>,
    latency_budget: Option<f64>,
    utilization_budget: f64,
    k: usize,
    chosen: Vec<usize>,
    finish: Vec<f64>,
    stage_sums: Vec<f64>,
    best: BinaryHeap<Ranked>,
}

impl Search<'_> {
    fn run(&mut self, pos: usize, critical: f64) {
        if self.best.len() == self.k {
            if let Some(worst) = self.best.peek() {
                // Partial critical path only grows as tasks are added.
                if critical > worst.critical {
                    return;
                }
            }
        }
        if pos == self.order.len() {
            self.record(critical);
            return;
        }
        let stage = self.stage_of[pos];
        for ci in 0..self.candidates[pos].len() {
            let card = &self.candidates[pos][ci];
            let compatible = self.deps[pos]
                .iter()
                .all(|&d| pairwise_compatible(&self.candidates[d][self.chosen[d]], card));
            if !compatible {
                continue;
            }
            let start = self.deps[pos].iter().map(|&d| self.finish[d]).fold(0.0f64, f64::max);
            let end = start + card.latency_ms;
            if self.latency_budget.is_some_and(|b| end > b) {
                continue;
            }
            let saved_sum = self.stage_sums[stage];
            let sum = saved_sum + card.resource_utilization;
            if sum > self.utilization_budget {
                continue;
            }
            self.chosen[pos] = ci;
            self.finish[pos] = end;
            self.stage_sums[stage] = sum;
            self.run(pos + 1, critical.max(end));
            self.stage_sums[stage] = saved_sum;
        }
    }

    fn record(&mut self, critical: f64) {
        let peak = self.stage_sums.iter().copied().fold(0.0f64, f64::max);
        let assignment: BTreeMap<String, String> = self
            .order
            .iter()
            .enumerate()
            .map(|(pos, key)| (key.to_string(), self.candidates[pos][self.chosen[pos]].model_name.clone()))
            .collect();
        let entry = Ranked {
            critical,
            peak,
            names: assignment.values().cloned().collect(),
            assignment,
        };
        if self.best.len() < self.k {
            self.best.push(entry);
        } else if let Some(mut worst) = self.best.peek_mut() {
            if entry < *worst {
                *worst = entry;
            }
        }
    }
}

/// Up to `k` feasible combinations ranked by ascending
/// `(critical_path_latency_ms, peak_utilization, assignment)`.
///
/// Feasible means: every task gets a card of its type, every edge joins
/// pairwise-compatible cards, and both aggregates are within the intent's
/// budgets. The search prunes on partial aggregates, which only grow as
/// tasks are assigned, so the result equals ranking the full feasible set.
pub fn select_combinations(
    graph: &TaskGraph,
    intent: &Intent,
    k: usize,
    cards: &CardIndex,
) -> Result<Vec<ModelCombination>, SelectionError> {
    let stages = execution_stages(graph)?;
    if k == 0 {
        return Ok(Vec::new());
    }
    let mut order = Vec::new();
    let mut stage_of = Vec::new();
    for (i, stage) in stages.iter().enumerate() {
        for key in stage {
            order.push(key.as_str());
            stage_of.push(i);
        }
    }
    let position: BTreeMap<&str, usize> = order.iter().enumerate().map(|(i, k)| (*k, i)).collect();
    let mut deps = Vec::with_capacity(order.len());
    let mut candidates = Vec::with_capacity(order.len());
    for key in &order {
        let node = graph.node(key).expect("staged keys are graph nodes");
        let mut d: Vec<usize> = node.depends_on.iter().map(|d| position[d.as_str()]).collect();
        d.sort_unstable();
        d.dedup();
        deps.push(d);
        let c = candidates_for_task(cards, node);
        if c.is_empty() {
            return Err(SelectionError::NoFeasibleCombination(format!(
                "no model card serves task {} (task_type {})",
                node.task_key, node.task_type
            )));
        }
        candidates.push(c);
    }

    let n = order.len();
    let mut search = Search {
        graph,
        order,
        stage_of,
        deps,
        candidates,
        latency_budget: intent.latency_budget_ms,
        utilization_budget: intent.utilization_budget,
        k,
        chosen: vec![0; n],
        finish: vec![0.0; n],
        stage_sums: vec![0.0; stages.len()],
        best: BinaryHeap::new(),
    };
    search.run(0, 0.0);
    debug_assert!(search.graph.nodes.len() == n);

    let ranked = search.best.into_sorted_vec();
    if ranked.is_empty() {
        return Err(SelectionError::NoFeasibleCombination(format!(
            "no assignment for graph {} satisfies compatibility and budgets",
            graph.graph_id
        )));
    }
    Ok(ranked
        .into_iter()
        .enumerate()
        .map(|(i, r)| ModelCombination {
            assignment: r.assignment,
            critical_path_latency_ms: r.critical,
            peak_utilization: r.peak,
            rank: i as u32 + 1,
        })
        .collect())
}
