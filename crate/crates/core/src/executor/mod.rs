//! Stage-parallel execution of task graphs.
//!
//! A single dispatcher thread owns the run state and the journal writes;
//! a pool of workers runs the model executors. Tasks are dispatched as soon
//! as [`dependency_recheck`] reports them ready, so siblings with no edge
//! between them run concurrently.
//!
//! Simulated time is computed logically: a task starts when its last
//! dependency ends and ends `latency_ms` later, independent of how the worker
//! threads happen to interleave. In wall-clock mode workers additionally
//! sleep for `latency_ms * scale`.
//!
//! When the planned utilization of a stage exceeds the intent's budget, the
//! tasks of that stage run one at a time by ascending task key.

mod simulated;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::mpsc;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

pub use simulated::{output_payload, simulated_run, ModelExecutor, SimulatedExecutor, TaskError};

use crate::data_store::{DataStore, IOEnvelope};
use crate::intent::Intent;
use crate::journal::{Journal, RunEvent};
use crate::model_library::{CardIndex, ModelCombination};
use crate::planner::{execution_stages, GraphError, TaskGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ClockMode {
    Simulated,
    Wall { scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExecutorConfig {
    pub workers: usize,
    pub clock: ClockMode,
}

impl Default for ExecutorConfig {
    fn default() -> Self {
        Self {
            workers: 4,
            clock: ClockMode::Simulated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub status: TaskStatus,
    pub model_name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    pub simulated_latency_ms: f64,
    pub start_ms: f64,
    pub end_ms: f64,
    /// Utilization actually drawn; zero when the task never ran.
    pub utilization: f64,
    pub stage: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<TaskError>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WallStatus {
    Complete,
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionRecord {
    pub run_id: String,
    pub rank: u32,
    pub results: BTreeMap<String, TaskResult>,
    pub observed_critical_path_ms: f64,
    pub observed_peak_utilization: f64,
    /// Stages whose tasks were serialized for exceeding the utilization budget.
    #[serde(default)]
    pub serialized_stages: Vec<usize>,
    pub wall_status: WallStatus,
}

impl ExecutionRecord {
    /// Namespace for this record's stored outputs: `<run_id>.<rank>`.
    pub fn scope(&self) -> String {
        execution_scope(&self.run_id, self.rank)
    }

    pub fn ok_count(&self) -> usize {
        self.results.values().filter(|r| r.status == TaskStatus::Ok).count()
    }

    pub fn all_ok(&self) -> bool {
        self.wall_status == WallStatus::Complete && self.ok_count() == self.results.len()
    }

    /// Observed aggregates derived from the per-task values and the stage
    /// layering: latest end time, and the per-stage utilization (summed in
    /// task-key order, or maxed over a serialized stage).
    pub fn recompute_observed(&self) -> (f64, f64) {
        let critical = self.results.values().map(|r| r.end_ms).fold(0.0f64, f64::max);
        let mut stages: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for r in self.results.values() {
            stages.entry(r.stage).or_default().push(r.utilization);
        }
        let peak = stages
            .iter()
            .map(|(stage, utils)| {
                if self.serialized_stages.contains(stage) {
                    utils.iter().copied().fold(0.0f64, f64::max)
                } else {
                    utils.iter().fold(0.0f64, |acc, u| acc + u)
                }
            })
            .fold(0.0f64, f64::max);
        (critical, peak)
    }

    /// Every task failed with `error`, nothing ran.
    pub fn aborted(run_id: &str, graph: &TaskGraph, combination: &ModelCombination, error: TaskError) -> Self {
        let stage_of = stage_index(graph).unwrap_or_default();
        let results = graph
            .nodes
            .iter()
            .map(|n| {
                (
                    n.task_key.clone(),
                    TaskResult {
                        status: TaskStatus::Failed,
                        model_name: combination.assignment.get(&n.task_key).cloned().unwrap_or_default(),
                        output: None,
                        simulated_latency_ms: 0.0,
                        start_ms: 0.0,
                        end_ms: 0.0,
                        utilization: 0.0,
                        stage: stage_of.get(&n.task_key).copied().unwrap_or(0),
                        error: Some(error.clone()),
                    },
                )
            })
            .collect();
        Self {
            run_id: run_id.to_string(),
            rank: combination.rank,
            results,
            observed_critical_path_ms: 0.0,
            observed_peak_utilization: 0.0,
            serialized_stages: Vec::new(),
            wall_status: WallStatus::Aborted,
        }
    }
}

pub fn execution_scope(run_id: &str, rank: u32) -> String {
    format!("{run_id}.{rank}")
}

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("input data {0} not found")]
    DataNotFound(String),
    #[error("task {0} has no assigned model")]
    Unassigned(String),
    #[error("model {0} is not in the registry")]
    UnknownModel(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl ExecError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::DataNotFound(_) => "DataNotFound",
            Self::Unassigned(_) => "Unassigned",
            Self::UnknownModel(_) => "UnknownModel",
            Self::Graph(_) => "InvalidGraph",
        }
    }
}

/// Dispatcher-side view of a task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskState {
    Pending,
    Running,
    Ok,
    Failed,
}

/// Unstarted tasks whose dependencies all finished ok and whose declared
/// inputs resolve, sorted by task key.
pub fn dependency_recheck(
    graph: &TaskGraph,
    progress: &BTreeMap<String, TaskState>,
    resolvable: impl Fn(&str) -> bool,
) -> Vec<String> {
    let mut ready: Vec<String> = graph
        .nodes
        .iter()
        .filter(|n| progress.get(&n.task_key).copied().unwrap_or(TaskState::Pending) == TaskState::Pending)
        .filter(|n| n.depends_on.iter().all(|d| progress.get(d) == Some(&TaskState::Ok)))
        .filter(|n| n.input_data.iter().all(|d| resolvable(d)))
        .map(|n| n.task_key.clone())
        .collect();
    ready.sort();
    ready
}

fn stage_index(graph: &TaskGraph) -> Result<BTreeMap<String, usize>, GraphError> {
    Ok(execution_stages(graph)?
        .into_iter()
        .enumerate()
        .flat_map(|(i, s)| s.into_iter().map(move |k| (k, i)))
        .collect())
}

struct Job {
    task_key: String,
    executor: Arc<dyn ModelExecutor>,
    inputs: Vec<IOEnvelope>,
    params: BTreeMap<String, String>,
}

struct Done {
    task_key: String,
    result: Result<IOEnvelope, TaskError>,
}

pub struct Executor {
    cards: CardIndex,
    store: Arc<DataStore>,
    config: ExecutorConfig,
    overrides: BTreeMap<String, Arc<dyn ModelExecutor>>,
}

impl Executor {
    pub fn new(cards: CardIndex, store: Arc<DataStore>, config: ExecutorConfig) -> Self {
        Self {
            cards,
            store,
            config,
            overrides: BTreeMap::new(),
        }
    }

    /// Replaces the simulated executor for one model.
    pub fn with_executor(mut self, executor: Arc<dyn ModelExecutor>) -> Self {
        self.overrides.insert(executor.model_name().to_string(), executor);
        self
    }

    pub fn store(&self) -> &Arc<DataStore> {
        &self.store
    }

    fn executor_for(&self, model_name: &str) -> Option<Arc<dyn ModelExecutor>> {
        if let Some(e) = self.overrides.get(model_name) {
            return Some(e.clone());
        }
        self.cards
            .get(model_name)
            .map(|c| Arc::new(SimulatedExecutor::new(c.clone())) as Arc<dyn ModelExecutor>)
    }

    fn utilization_of(&self, model_name: &str) -> f64 {
        self.cards.get(model_name).map_or(0.0, |c| c.resource_utilization)
    }

    /// Runs one combination. Only pre-flight problems are errors; task
    /// failures end up in the record.
    pub fn execute(
        &self,
        run_id: &str,
        graph: &TaskGraph,
        combination: &ModelCombination,
        intent: &Intent,
        journal: Option<&Journal<RunEvent>>,
    ) -> Result<ExecutionRecord, ExecError> {
        let stages = execution_stages(graph)?;
        let mut executors: BTreeMap<String, Arc<dyn ModelExecutor>> = BTreeMap::new();
        for node in &graph.nodes {
            let model = combination
                .assignment
                .get(&node.task_key)
                .ok_or_else(|| ExecError::Unassigned(node.task_key.clone()))?;
            let exec = self.executor_for(model).ok_or_else(|| ExecError::UnknownModel(model.clone()))?;
            executors.insert(node.task_key.clone(), exec);
            if let Some(missing) = node.input_data.iter().find(|d| !self.store.contains(d)) {
                return Err(ExecError::DataNotFound(missing.clone()));
            }
        }

        let rank = combination.rank;
        let scope = execution_scope(run_id, rank);
        let log = |event: RunEvent| {
            if let Some(j) = journal {
                if let Err(e) = j.append(&event) {
                    tracing::warn!(error = %e, "failed to journal execution event");
                }
            }
        };
        log(RunEvent::new(
            run_id,
            "execution_started",
            json!({ "rank": rank, "assignment": combination.assignment }),
        ));

        let mut stage_of: BTreeMap<&str, usize> = BTreeMap::new();
        let mut serialized: BTreeSet<usize> = BTreeSet::new();
        for (i, stage) in stages.iter().enumerate() {
            let planned = stage
                .iter()
                .map(|k| self.utilization_of(&combination.assignment[k]))
                .fold(0.0f64, |a, u| a + u);
            if planned > intent.utilization_budget && stage.len() > 1 {
                serialized.insert(i);
            }
            for k in stage {
                stage_of.insert(k.as_str(), i);
            }
        }

        let mut progress: BTreeMap<String, TaskState> =
            graph.nodes.iter().map(|n| (n.task_key.clone(), TaskState::Pending)).collect();
        let mut results: BTreeMap<String, TaskResult> = BTreeMap::new();
        let mut outputs: BTreeMap<String, IOEnvelope> = BTreeMap::new();
        // simulated end time of the last finished task of each serialized stage
        let mut serial_clock: BTreeMap<usize, f64> = BTreeMap::new();
        let mut running = 0usize;
        let mut immediate: VecDeque<Done> = VecDeque::new();

        let workers = self.config.workers.max(1);
        let clock = self.config.clock;
        let (job_tx, job_rx) = mpsc::channel::<Job>();
        let (done_tx, done_rx) = mpsc::channel::<Done>();
        let job_rx = Arc::new(Mutex::new(job_rx));

        std::thread::scope(|scope_threads| {
            for _ in 0..workers {
                let rx = Arc::clone(&job_rx);
                let tx = done_tx.clone();
                scope_threads.spawn(move || loop {
                    let job = {
                        let guard = rx.lock().unwrap_or_else(|e| e.into_inner());
                        guard.recv()
                    };
                    let Ok(job) = job else { break };
                    if let ClockMode::Wall { scale } = clock {
                        let ms = (job.executor.latency_ms() * scale).max(0.0);
                        std::thread::sleep(Duration::from_secs_f64(ms / 1000.0));
                    }
                    let result = job.executor.run(&job.inputs, &job.params);
                    if tx.send(Done { task_key: job.task_key, result }).is_err() {
                        break;
                    }
                });
            }
            drop(done_tx);

            loop {
                let ready = dependency_recheck(graph, &progress, |d| self.store.contains(d));
                for key in ready {
                    let stage = stage_of[key.as_str()];
                    if serialized.contains(&stage) {
                        let blocked = stages[stage].iter().any(|k| {
                            k < &key && matches!(progress[k], TaskState::Pending | TaskState::Running)
                        }) || stages[stage].iter().any(|k| progress[k] == TaskState::Running);
                        if blocked {
                            continue;
                        }
                    }
                    let node = graph.node(&key).expect("ready keys are graph nodes");
                    let mut inputs = Vec::new();
                    let mut input_error = None;
                    for name in &node.input_data {
                        match self.store.resolve(name) {
                            Ok(env) => inputs.push(env),
                            Err(e) => input_error = Some(TaskError::new(e.code(), e.to_string())),
                        }
                    }
                    inputs.extend(node.depends_on.iter().map(|d| outputs[d].clone()));
                    progress.insert(key.clone(), TaskState::Running);
                    log(RunEvent::new(run_id, "task_started", json!({ "rank": rank })).for_task(&key));
                    running += 1;
                    if let Some(err) = input_error {
                        immediate.push_back(Done {
                            task_key: key,
                            result: Err(err),
                        });
                        continue;
                    }
                    let job = Job {
                        task_key: key.clone(),
                        executor: executors[&key].clone(),
                        inputs,
                        params: node.params.clone(),
                    };
                    if job_tx.send(job).is_err() {
                        immediate.push_back(Done {
                            task_key: key,
                            result: Err(TaskError::new("WorkerUnavailable", "worker pool shut down")),
                        });
                    }
                }
                if running == 0 {
                    break;
                }
                let done = match immediate.pop_front() {
                    Some(d) => d,
                    None => match done_rx.recv() {
                        Ok(d) => d,
                        Err(_) => break,
                    },
                };
                running -= 1;
                let key = done.task_key;
                let node = graph.node(&key).expect("completed keys are graph nodes");
                let stage = stage_of[key.as_str()];
                let exec = &executors[&key];
                let mut start = node
                    .depends_on
                    .iter()
                    .map(|d| results.get(d).map_or(0.0, |r| r.end_ms))
                    .fold(0.0f64, f64::max);
                if serialized.contains(&stage) {
                    start = start.max(serial_clock.get(&stage).copied().unwrap_or(0.0));
                }
                let outcome = done.result.and_then(|mut env| {
                    env.data_name = format!("{scope}/{key}");
                    self.store
                        .store_result(&scope, &key, &env)
                        .map(|name| (name, env))
                        .map_err(|e| TaskError::new(e.code(), e.to_string()))
                });
                let result = match outcome {
                    Ok((name, env)) => {
                        let latency = exec.latency_ms();
                        log(RunEvent::new(
                            run_id,
                            "task_ok",
                            json!({ "rank": rank, "output": name, "simulated_latency_ms": latency }),
                        )
                        .for_task(&key));
                        outputs.insert(key.clone(), env);
                        progress.insert(key.clone(), TaskState::Ok);
                        TaskResult {
                            status: TaskStatus::Ok,
                            model_name: exec.model_name().to_string(),
                            output: Some(name),
                            simulated_latency_ms: latency,
                            start_ms: start,
                            end_ms: start + latency,
                            utilization: self.utilization_of(exec.model_name()),
                            stage,
                            error: None,
                        }
                    }
                    Err(err) => {
                        log(RunEvent::new(
                            run_id,
                            "task_failed",
                            json!({ "rank": rank, "code": err.code, "message": err.message }),
                        )
                        .for_task(&key));
                        progress.insert(key.clone(), TaskState::Failed);
                        TaskResult {
                            status: TaskStatus::Failed,
                            model_name: exec.model_name().to_string(),
                            output: None,
                            simulated_latency_ms: 0.0,
                            start_ms: start,
                            end_ms: start,
                            utilization: 0.0,
                            stage,
                            error: Some(err),
                        }
                    }
                };
                if serialized.contains(&stage) {
                    serial_clock.insert(stage, result.end_ms);
                }
                let failed = result.status == TaskStatus::Failed;
                results.insert(key.clone(), result);
                if failed {
                    for d in descendants(graph, &key) {
                        if progress[&d] == TaskState::Pending {
                            progress.insert(d.clone(), TaskState::Failed);
                            log(RunEvent::new(run_id, "task_skipped", json!({ "rank": rank, "upstream": key }))
                                .for_task(&d));
                            results.insert(
                                d.clone(),
                                TaskResult {
                                    status: TaskStatus::Failed,
                                    model_name: executors[&d].model_name().to_string(),
                                    output: None,
                                    simulated_latency_ms: 0.0,
                                    start_ms: 0.0,
                                    end_ms: 0.0,
                                    utilization: 0.0,
                                    stage: stage_of[d.as_str()],
                                    error: Some(TaskError::new(
                                        "UpstreamFailed",
                                        format!("upstream task {key} failed"),
                                    )),
                                },
                            );
                        }
                    }
                }
            }
            drop(job_tx);
        });

        // Anything still pending could never become ready.
        for node in &graph.nodes {
            if !results.contains_key(&node.task_key) {
                log(RunEvent::new(run_id, "task_failed", json!({ "rank": rank, "code": "Unschedulable" }))
                    .for_task(&node.task_key));
                results.insert(
                    node.task_key.clone(),
                    TaskResult {
                        status: TaskStatus::Failed,
                        model_name: executors[&node.task_key].model_name().to_string(),
                        output: None,
                        simulated_latency_ms: 0.0,
                        start_ms: 0.0,
                        end_ms: 0.0,
                        utilization: 0.0,
                        stage: stage_of[node.task_key.as_str()],
                        error: Some(TaskError::new("Unschedulable", "task never became ready")),
                    },
                );
            }
        }

        let wall_status = if results.values().all(|r| r.status == TaskStatus::Ok) {
            WallStatus::Complete
        } else {
            WallStatus::Aborted
        };
        let mut record = ExecutionRecord {
            run_id: run_id.to_string(),
            rank,
            results,
            observed_critical_path_ms: 0.0,
            observed_peak_utilization: 0.0,
            serialized_stages: serialized.into_iter().collect(),
            wall_status,
        };
        let (critical, peak) = record.recompute_observed();
        record.observed_critical_path_ms = critical;
        record.observed_peak_utilization = peak;
        log(RunEvent::new(
            run_id,
            "execution_finished",
            serde_json::to_value(&record).unwrap_or_default(),
        ));
        Ok(record)
    }

    /// Runs every combination independently (in parallel), returning the
    /// records in rank order. Pre-flight failures become aborted records.
    pub fn execute_all(
        &self,
        run_id: &str,
        graph: &TaskGraph,
        combinations: &[ModelCombination],
        intent: &Intent,
        journal: Option<&Journal<RunEvent>>,
    ) -> Vec<ExecutionRecord> {
        let mut records: Vec<ExecutionRecord> = std::thread::scope(|s| {
            let handles: Vec<_> = combinations
                .iter()
                .map(|c| s.spawn(move || (c, self.execute(run_id, graph, c, intent, journal))))
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    let (c, outcome) = h.join().expect("execution thread panicked");
                    outcome.unwrap_or_else(|e| {
                        let err = TaskError::new(e.code(), e.to_string());
                        ExecutionRecord::aborted(run_id, graph, c, err)
                    })
                })
                .collect()
        });
        records.sort_by_key(|r| r.rank);
        records
    }
}

fn descendants(graph: &TaskGraph, key: &str) -> Vec<String> {
    let mut out = BTreeSet::new();
    let mut frontier = vec![key.to_string()];
    while let Some(k) = frontier.pop() {
        for n in &graph.nodes {
            if n.depends_on.contains(&k) && out.insert(n.task_key.clone()) {
                frontier.push(n.task_key.clone());
            }
        }
    }
    out.into_iter().collect()
}
