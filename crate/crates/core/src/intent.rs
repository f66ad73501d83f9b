//! Operator intent documents.
//!
//! An intent is the strict JSON input path: a versioned document naming the
//! tasks to run, their dependencies and the latency / utilization budgets any
//! selected model combination has to respect. Parsing is hand-rolled over
//! [`serde_json::Value`] so every failure carries a field path and exactly one
//! category.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

/// The only schema version this gateway accepts.
pub const SCHEMA_VERSION: &str = "1";

const TOP_LEVEL_KEYS: [&str; 7] = [
    "schema_version",
    "intent_id",
    "goal",
    "task_requests",
    "latency_budget_ms",
    "utilization_budget",
    "combination_count",
];

const TASK_KEYS: [&str; 4] = ["task_key", "task_type", "depends_on", "input_data"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntentErrorKind {
    MalformedDocument,
    SchemaViolation,
    ConstraintViolation,
}

impl fmt::Display for IntentErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::MalformedDocument => "MalformedDocument",
            Self::SchemaViolation => "SchemaViolation",
            Self::ConstraintViolation => "ConstraintViolation",
        };
        f.write_str(s)
    }
}

/// A categorized intent rejection, serialized as `{error_kind, field_path, message}`.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{error_kind} at {field_path}: {message}")]
pub struct IntentError {
    pub error_kind: IntentErrorKind,
    pub field_path: String,
    pub message: String,
}

impl IntentError {
    fn malformed(message: impl Into<String>) -> Self {
        Self {
            error_kind: IntentErrorKind::MalformedDocument,
            field_path: "$".into(),
            message: message.into(),
        }
    }

    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            error_kind: IntentErrorKind::SchemaViolation,
            field_path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn constraint(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            error_kind: IntentErrorKind::ConstraintViolation,
            field_path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRequest {
    pub task_key: String,
    pub task_type: String,
    #[serde(default)]
    pub depends_on: Vec<String>,
    #[serde(default)]
    pub input_data: Vec<String>,
}

/// A validated request.
///
/// `latency_budget_ms` is `None` only for intents synthesized on the
/// natural-language path, where it stands for an unbounded budget. Parsed
/// operator documents always carry a finite value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intent {
    pub intent_id: String,
    #[serde(default)]
    pub goal: String,
    pub task_requests: Vec<TaskRequest>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency_budget_ms: Option<f64>,
    pub utilization_budget: f64,
    pub combination_count: u32,
}

#[derive(Serialize)]
struct CanonicalDocument<'a> {
    schema_version: &'static str,
    intent_id: &'a str,
    goal: &'a str,
    task_requests: &'a [TaskRequest],
    #[serde(skip_serializing_if = "Option::is_none")]
    latency_budget_ms: Option<f64>,
    utilization_budget: f64,
    combination_count: u32,
}

impl Intent {
    /// Budget check for a latency value; an absent budget admits everything.
    pub fn latency_within_budget(&self, latency_ms: f64) -> bool {
        self.latency_budget_ms.is_none_or(|budget| latency_ms <= budget)
    }

    /// Serializes into the canonical document form (fixed key order,
    /// `schema_version` first, optional task lists always written).
    pub fn to_document(&self) -> String {
        let doc = CanonicalDocument {
            schema_version: SCHEMA_VERSION,
            intent_id: &self.intent_id,
            goal: &self.goal,
            task_requests: &self.task_requests,
            latency_budget_ms: self.latency_budget_ms,
            utilization_budget: self.utilization_budget,
            combination_count: self.combination_count,
        };
        serde_json::to_string(&doc).expect("intent serialization is infallible")
    }

    /// Builds an intent for the natural-language path with permissive
    /// defaults: unbounded latency, full utilization, one combination.
    pub fn for_utterance(intent_id: impl Into<String>, goal: impl Into<String>) -> Self {
        Self {
            intent_id: intent_id.into(),
            goal: goal.into(),
            task_requests: Vec::new(),
            latency_budget_ms: None,
            utilization_budget: 1.0,
            combination_count: 1,
        }
    }
}

/// True when `key` is usable as a task key or run-scoped name segment.
pub fn is_valid_key(key: &str) -> bool {
    !key.is_empty()
        && key != "."
        && key != ".."
        && key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

/// Parses and validates an operator intent document.
///
/// Without an `intent_id` a fresh one is generated.
pub fn parse_intent(document: &str) -> Result<Intent, IntentError> {
    let value: Value =
        serde_json::from_str(document).map_err(|e| IntentError::malformed(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| IntentError::schema("$", "intent document must be a JSON object"))?;

    reject_unknown(obj, &TOP_LEVEL_KEYS, "")?;

    match obj.get("schema_version") {
        None => return Err(IntentError::schema("schema_version", "missing required field")),
        Some(Value::String(v)) if v == SCHEMA_VERSION => {}
        Some(Value::String(v)) => {
            return Err(IntentError::schema(
                "schema_version",
                format!("unsupported schema_version {v:?}, expected \"{SCHEMA_VERSION}\""),
            ))
        }
        Some(_) => return Err(IntentError::schema("schema_version", "expected a string")),
    }

    let intent_id = match obj.get("intent_id") {
        None => format!("intent-{}", uuid::Uuid::new_v4().simple()),
        Some(Value::String(id)) => {
            if id.is_empty() || id.chars().any(char::is_control) {
                return Err(IntentError::constraint(
                    "intent_id",
                    "intent_id must be non-empty and free of control characters",
                ));
            }
            id.clone()
        }
        Some(_) => return Err(IntentError::schema("intent_id", "expected a string")),
    };

    let goal = match obj.get("goal") {
        None => String::new(),
        Some(Value::String(g)) => g.clone(),
        Some(_) => return Err(IntentError::schema("goal", "expected a string")),
    };

    let task_requests = parse_task_requests(obj.get("task_requests"))?;

    let latency_budget_ms = require_number(obj, "latency_budget_ms")?;
    if latency_budget_ms < 0.0 {
        return Err(IntentError::constraint(
            "latency_budget_ms",
            format!("latency_budget_ms must be >= 0, got {latency_budget_ms}"),
        ));
    }

    let utilization_budget = require_number(obj, "utilization_budget")?;
    if !(0.0..=1.0).contains(&utilization_budget) {
        return Err(IntentError::constraint(
            "utilization_budget",
            format!("utilization_budget must lie in [0, 1], got {utilization_budget}"),
        ));
    }

    let combination_count = match obj.get("combination_count") {
        None => return Err(IntentError::schema("combination_count", "missing required field")),
        Some(Value::Number(n)) => {
            if let Some(v) = n.as_u64() {
                if v == 0 {
                    return Err(IntentError::constraint(
                        "combination_count",
                        "combination_count must be >= 1",
                    ));
                }
                u32::try_from(v).map_err(|_| {
                    IntentError::constraint("combination_count", "combination_count is too large")
                })?
            } else if n.is_i64() {
                return Err(IntentError::constraint(
                    "combination_count",
                    "combination_count must be >= 1",
                ));
            } else {
                return Err(IntentError::schema("combination_count", "expected an integer"));
            }
        }
        Some(_) => return Err(IntentError::schema("combination_count", "expected an integer")),
    };

    Ok(Intent {
        intent_id,
        goal,
        task_requests,
        latency_budget_ms: Some(latency_budget_ms),
        utilization_budget,
        combination_count,
    })
}

fn reject_unknown(obj: &Map<String, Value>, allowed: &[&str], prefix: &str) -> Result<(), IntentError> {
    if let Some(key) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        return Err(IntentError::schema(path, format!("unknown field {key:?}")));
    }
    Ok(())
}

fn require_number(obj: &Map<String, Value>, key: &str) -> Result<f64, IntentError> {
    match obj.get(key) {
        None => Err(IntentError::schema(key, "missing required field")),
        Some(Value::Number(n)) => n
            .as_f64()
            .filter(|v| v.is_finite())
            .ok_or_else(|| IntentError::constraint(key, "number is not finite")),
        Some(_) => Err(IntentError::schema(key, "expected a number")),
    }
}

fn string_list(value: Option<&Value>, path: &str) -> Result<Vec<String>, IntentError> {
    match value {
        None => Ok(Vec::new()),
        Some(Value::Array(items)) => items
            .iter()
            .enumerate()
            .map(|(i, item)| {
                item.as_str()
                    .map(str::to_owned)
                    .ok_or_else(|| IntentError::schema(format!("{path}[{i}]"), "expected a string"))
            })
            .collect(),
        Some(_) => Err(IntentError::schema(path, "expected an array of strings")),
    }
}

fn parse_task_requests(value: Option<&Value>) -> Result<Vec<TaskRequest>, IntentError> {
    let items = match value {
        None => return Err(IntentError::schema("task_requests", "missing required field")),
        Some(Value::Array(items)) => items,
        Some(_) => return Err(IntentError::schema("task_requests", "expected an array")),
    };
    if items.is_empty() {
        return Err(IntentError::constraint(
            "task_requests",
            "task_requests must contain at least one task",
        ));
    }

    let mut requests = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let base = format!("task_requests[{i}]");
        let obj = item
            .as_object()
            .ok_or_else(|| IntentError::schema(&base, "expected an object"))?;
        reject_unknown(obj, &TASK_KEYS, &base)?;

        let text = |key: &str| -> Result<String, IntentError> {
            match obj.get(key) {
                None => Err(IntentError::schema(format!("{base}.{key}"), "missing required field")),
                Some(Value::String(s)) => Ok(s.clone()),
                Some(_) => Err(IntentError::schema(format!("{base}.{key}"), "expected a string")),
            }
        };
        let task_key = text("task_key")?;
        let task_type = text("task_type")?;
        let depends_on = string_list(obj.get("depends_on"), &format!("{base}.depends_on"))?;
        let input_data = string_list(obj.get("input_data"), &format!("{base}.input_data"))?;

        if !is_valid_key(&task_key) {
            return Err(IntentError::constraint(
                format!("{base}.task_key"),
                "task_key must be non-empty and use only [A-Za-z0-9_.-]",
            ));
        }
        if task_type.trim().is_empty() {
            return Err(IntentError::constraint(
                format!("{base}.task_type"),
                "task_type must be non-empty",
            ));
        }
        if let Some(j) = input_data.iter().position(String::is_empty) {
            return Err(IntentError::constraint(
                format!("{base}.input_data[{j}]"),
                "data names must be non-empty",
            ));
        }
        requests.push(TaskRequest {
            task_key,
            task_type,
            depends_on,
            input_data,
        });
    }

    let mut seen = BTreeSet::new();
    for (i, req) in requests.iter().enumerate() {
        if !seen.insert(req.task_key.as_str()) {
            return Err(IntentError::constraint(
                format!("task_requests[{i}].task_key"),
                format!("duplicate task_key {:?}", req.task_key),
            ));
        }
    }
    for (i, req) in requests.iter().enumerate() {
        let mut deps = BTreeSet::new();
        for (j, dep) in req.depends_on.iter().enumerate() {
            let path = format!("task_requests[{i}].depends_on[{j}]");
            if dep == &req.task_key {
                return Err(IntentError::constraint(path, "a task cannot depend on itself"));
            }
            if !seen.contains(dep.as_str()) {
                return Err(IntentError::constraint(path, format!("unknown task_key {dep:?}")));
            }
            if !deps.insert(dep.as_str()) {
                return Err(IntentError::constraint(path, format!("duplicate dependency {dep:?}")));
            }
        }
    }
    if let Some(cycle) = find_cycle(&requests) {
        return Err(IntentError::constraint(
            "task_requests",
            format!("dependency cycle through {}", cycle.join(" -> ")),
        ));
    }
    Ok(requests)
}

fn find_cycle(requests: &[TaskRequest]) -> Option<Vec<String>> {
    let deps: BTreeMap<&str, &[String]> = requests
        .iter()
        .map(|r| (r.task_key.as_str(), r.depends_on.as_slice()))
        .collect();
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut color: BTreeMap<&str, u8> = deps.keys().map(|k| (*k, 0)).collect();
    let mut stack: Vec<&str> = Vec::new();

    fn visit<'a>(
        node: &'a str,
        deps: &BTreeMap<&'a str, &'a [String]>,
        color: &mut BTreeMap<&'a str, u8>,
        stack: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        color.insert(node, 1);
        stack.push(node);
        for dep in deps.get(node).copied().unwrap_or_default() {
            match color.get(dep.as_str()).copied() {
                Some(1) => {
                    let start = stack.iter().position(|n| *n == dep).unwrap_or(0);
                    let mut cycle: Vec<String> = stack[start..].iter().map(|s| s.to_string()).collect();
                    cycle.push(dep.clone());
                    return Some(cycle);
                }
                Some(0) => {
                    let key = deps.get_key_value(dep.as_str()).map(|(k, _)| *k)?;
                    if let Some(c) = visit(key, deps, color, stack) {
                        return Some(c);
                    }
                }
                _ => {}
            }
        }
        stack.pop();
        color.insert(node, 2);
        None
    }

    let keys: Vec<&str> = deps.keys().copied().collect();
    for key in keys {
        if color[key] == 0 {
            if let Some(c) = visit(key, &deps, &mut color, &mut stack) {
                return Some(c);
            }
        }
    }
    None
}
