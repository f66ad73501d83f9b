//! Task graphs, structural validation and stage layering.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskNode {
    pub task_key: String,
    pub task_type: String,
    #[serde(default)]
    pub depends_on: Vec<String>,
    #[serde(default)]
    pub input_data: Vec<String>,
    #[serde(default)]
    pub params: BTreeMap<String, String>,
}

impl TaskNode {
    pub fn new(task_key: impl Into<String>, task_type: impl Into<String>) -> Self {
        Self {
            task_key: task_key.into(),
            task_type: task_type.into(),
            depends_on: Vec::new(),
            input_data: Vec::new(),
            params: BTreeMap::new(),
        }
    }

    pub fn after(mut self, deps: &[&str]) -> Self {
        self.depends_on.extend(deps.iter().map(|d| d.to_string()));
        self
    }

    pub fn with_input(mut self, data_name: impl Into<String>) -> Self {
        self.input_data.push(data_name.into());
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphShape {
    Single,
    Chain,
    Tree,
    Dag,
}

impl fmt::Display for GraphShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Single => "single",
            Self::Chain => "chain",
            Self::Tree => "tree",
            Self::Dag => "dag",
        })
    }
}

/// Planner output. `shape` is always derived from the nodes, never supplied.
///
/// Serialized with the canonical key order `graph_id, nodes, shape`; node keys
/// follow `task_key, task_type, depends_on, input_data, params`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskGraph {
    pub graph_id: String,
    pub nodes: Vec<TaskNode>,
    pub shape: GraphShape,
}

impl TaskGraph {
    pub fn new(graph_id: impl Into<String>, nodes: Vec<TaskNode>) -> Self {
        let shape = classify_shape(&nodes);
        Self {
            graph_id: graph_id.into(),
            nodes,
            shape,
        }
    }

    pub fn node(&self, task_key: &str) -> Option<&TaskNode> {
        self.nodes.iter().find(|n| n.task_key == task_key)
    }

    /// Recomputes `shape` after the node list was edited in place.
    pub fn reshape(&mut self) {
        self.shape = classify_shape(&self.nodes);
    }

    /// Dependency edges as `(from, to)` pairs in node order.
    pub fn edges(&self) -> Vec<(String, String)> {
        self.nodes
            .iter()
            .flat_map(|n| n.depends_on.iter().map(move |d| (d.clone(), n.task_key.clone())))
            .collect()
    }

    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("graph serialization is infallible")
    }
}

/// Shape derivation. Meaningful for acyclic graphs; anything that is not a
/// single node, a single path or a forest classifies as `dag`.
pub fn classify_shape(nodes: &[TaskNode]) -> GraphShape {
    if nodes.len() == 1 {
        return GraphShape::Single;
    }
    let mut dependents: BTreeMap<&str, usize> = BTreeMap::new();
    for node in nodes {
        for dep in &node.depends_on {
            *dependents.entry(dep.as_str()).or_default() += 1;
        }
    }
    let at_most_one_dep = nodes.iter().all(|n| n.depends_on.len() <= 1);
    if !at_most_one_dep {
        return GraphShape::Dag;
    }
    let roots = nodes.iter().filter(|n| n.depends_on.is_empty()).count();
    let linear = nodes
        .iter()
        .all(|n| dependents.get(n.task_key.as_str()).copied().unwrap_or(0) <= 1);
    if linear && roots == 1 && !nodes.is_empty() {
        GraphShape::Chain
    } else {
        GraphShape::Tree
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "code")]
pub enum Finding {
    EmptyGraph,
    DuplicateTaskKey { task_key: String },
    DanglingReference { task_key: String, missing: String },
    CyclicGraph { task_keys: Vec<String> },
    UnknownTaskType { task_key: String, task_type: String },
    /// The adapter produced no usable graph at all.
    PlanningFailed { reason: String },
}

impl Finding {
    pub fn code(&self) -> &'static str {
        match self {
            Self::EmptyGraph => "EmptyGraph",
            Self::DuplicateTaskKey { .. } => "DuplicateTaskKey",
            Self::DanglingReference { .. } => "DanglingReference",
            Self::CyclicGraph { .. } => "CyclicGraph",
            Self::UnknownTaskType { .. } => "UnknownTaskType",
            Self::PlanningFailed { .. } => "PlanningFailed",
        }
    }

    pub fn task_key(&self) -> Option<&str> {
        match self {
            Self::DuplicateTaskKey { task_key }
            | Self::DanglingReference { task_key, .. }
            | Self::UnknownTaskType { task_key, .. } => Some(task_key),
            Self::CyclicGraph { task_keys } => task_keys.first().map(String::as_str),
            Self::EmptyGraph | Self::PlanningFailed { .. } => None,
        }
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::EmptyGraph => write!(f, "graph has no tasks"),
            Self::DuplicateTaskKey { task_key } => write!(f, "task_key {task_key} appears more than once"),
            Self::DanglingReference { task_key, missing } => {
                write!(f, "task {task_key} depends on missing task {missing}")
            }
            Self::CyclicGraph { task_keys } => write!(f, "dependency cycle among {}", task_keys.join(", ")),
            Self::UnknownTaskType { task_key, task_type } => {
                write!(f, "task {task_key} has task_type {task_type} with no registered handler")
            }
            Self::PlanningFailed { reason } => f.write_str(reason),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub graph_id: String,
    pub findings: Vec<Finding>,
    /// Present whenever the graph is structurally sound (no cycle, no
    /// dangling or duplicate keys), regardless of task-type findings.
    pub shape: Option<GraphShape>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.findings.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("graph has no tasks")]
    Empty,
    #[error("task_key {0} appears more than once")]
    DuplicateTaskKey(String),
    #[error("task {task_key} depends on missing task {missing}")]
    DanglingReference { task_key: String, missing: String },
    #[error("dependency cycle among {}", .0.join(", "))]
    CyclicGraph(Vec<String>),
}

/// Kahn layering. Returns per-node longest-path level or the nodes left over
/// by a cycle.
fn layer_levels(nodes: &[TaskNode]) -> Result<BTreeMap<&str, usize>, GraphError> {
    if nodes.is_empty() {
        return Err(GraphError::Empty);
    }
    let mut keys = BTreeSet::new();
    for n in nodes {
        if !keys.insert(n.task_key.as_str()) {
            return Err(GraphError::DuplicateTaskKey(n.task_key.clone()));
        }
    }
    for n in nodes {
        if let Some(missing) = n.depends_on.iter().find(|d| !keys.contains(d.as_str())) {
            return Err(GraphError::DanglingReference {
                task_key: n.task_key.clone(),
                missing: missing.clone(),
            });
        }
    }

    let mut indegree: BTreeMap<&str, usize> = BTreeMap::new();
    let mut dependents: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for n in nodes {
        let unique: BTreeSet<&str> = n.depends_on.iter().map(String::as_str).collect();
        indegree.insert(n.task_key.as_str(), unique.len());
        for d in unique {
            dependents.entry(d).or_default().push(n.task_key.as_str());
        }
    }
    let mut level: BTreeMap<&str, usize> = BTreeMap::new();
    let mut queue: VecDeque<&str> = indegree.iter().filter(|(_, d)| **d == 0).map(|(k, _)| *k).collect();
    for k in &queue {
        level.insert(k, 0);
    }
    while let Some(k) = queue.pop_front() {
        let lk = level[k];
        for &child in dependents.get(k).map(Vec::as_slice).unwrap_or_default() {
            let entry = level.entry(child).or_insert(0);
            *entry = (*entry).max(lk + 1);
            let deg = indegree.get_mut(child).expect("child is a node");
            *deg -= 1;
            if *deg == 0 {
                queue.push_back(child);
            }
        }
    }
    if indegree.values().any(|d| *d > 0) {
        let stuck = indegree
            .into_iter()
            .filter(|(_, d)| *d > 0)
            .map(|(k, _)| k.to_string())
            .collect();
        return Err(GraphError::CyclicGraph(stuck));
    }
    Ok(level)
}

/// Structural and vocabulary checks. Never fails; findings carry the problems.
pub fn validate_graph(graph: &TaskGraph, vocabulary: &BTreeSet<String>) -> ValidationReport {
    let mut findings = Vec::new();
    let mut structural_ok = true;
    if graph.nodes.is_empty() {
        findings.push(Finding::EmptyGraph);
        structural_ok = false;
    }

    let mut seen = BTreeSet::new();
    for n in &graph.nodes {
        if !seen.insert(n.task_key.as_str()) {
            findings.push(Finding::DuplicateTaskKey {
                task_key: n.task_key.clone(),
            });
            structural_ok = false;
        }
    }
    for n in &graph.nodes {
        for d in &n.depends_on {
            if !seen.contains(d.as_str()) {
                findings.push(Finding::DanglingReference {
                    task_key: n.task_key.clone(),
                    missing: d.clone(),
                });
                structural_ok = false;
            }
        }
    }
    if structural_ok {
        if let Err(GraphError::CyclicGraph(keys)) = layer_levels(&graph.nodes) {
            findings.push(Finding::CyclicGraph { task_keys: keys });
            structural_ok = false;
        }
    } else {
        // Cycle detection restricted to resolvable edges.
        let pruned: Vec<TaskNode> = graph
            .nodes
            .iter()
            .map(|n| TaskNode {
                depends_on: n.depends_on.iter().filter(|d| seen.contains(d.as_str())).cloned().collect(),
                ..n.clone()
            })
            .collect();
        let mut dedup = BTreeSet::new();
        let pruned: Vec<TaskNode> = pruned.into_iter().filter(|n| dedup.insert(n.task_key.clone())).collect();
        if let Err(GraphError::CyclicGraph(keys)) = layer_levels(&pruned) {
            findings.push(Finding::CyclicGraph { task_keys: keys });
        }
    }
    for n in &graph.nodes {
        if !vocabulary.contains(&n.task_type) {
            findings.push(Finding::UnknownTaskType {
                task_key: n.task_key.clone(),
                task_type: n.task_type.clone(),
            });
        }
    }
    ValidationReport {
        graph_id: graph.graph_id.clone(),
        findings,
        shape: structural_ok.then(|| classify_shape(&graph.nodes)),
    }
}

/// Longest-path stage layering; task keys sorted within each stage.
pub fn execution_stages(graph: &TaskGraph) -> Result<Vec<Vec<String>>, GraphError> {
    let levels = layer_levels(&graph.nodes)?;
    let depth = levels.values().copied().max().unwrap_or(0);
    let mut stages = vec![Vec::new(); depth + 1];
    // BTreeMap iteration is already sorted by key.
    for (key, lvl) in levels {
        stages[lvl].push(key.to_string());
    }
    Ok(stages)
}

/// Task keys in topological order (stage by stage).
pub fn topological_order(graph: &TaskGraph) -> Result<Vec<String>, GraphError> {
    Ok(execution_stages(graph)?.into_iter().flatten().collect())
}
