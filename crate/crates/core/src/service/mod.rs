//! Long-running orchestration service.
//!
//! [`Service`] owns the registries, the session store, the planner and a
//! bounded pool of run workers. Submissions return a run id at once; the
//! five-stage pipeline then runs on a worker and journals every step to
//! `<journal_dir>/runs/<run_id>.jsonl`. Reports land in
//! `<journal_dir>/reports/` as `<run_id>.final.json`,
//! `<run_id>.feedback.json` and `<run_id>.summary.txt`.

pub mod config;
pub mod http;
mod run;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::AssertUnwindSafe;
use std::path::{Path, PathBuf};
use std::sync::mpsc::{self, Receiver, Sender};
use std::sync::{Arc, Condvar, Mutex, MutexGuard};
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use serde_json::json;
use thiserror::Error;

pub use config::{Config, ConfigError};
pub use run::{
    created_event, failed_event, phase_event, Phase, RunError, RunFailure, RunSource, RunState, RunSummary,
    COMBINATIONS_SELECTED, EXECUTION_FINISHED, GRAPH_PLANNED, PHASE_CHANGED, REPORTS_EMITTED, RUN_CREATED, RUN_FAILED,
};

use crate::data_store::{DataCard, DataError, DataStore};
use crate::executor::Executor;
use crate::feedback::{
    final_report, planning_feedback, score_stages, summarize, summarize_unplanned, FeedbackChannel, FeedbackReport, SelectionOutcome,
};
use crate::intent::{is_valid_key, parse_intent, Intent, IntentError};
use crate::journal::{read_events, Journal, RunEvent};
use crate::model_library::{load_card, select_combinations, ModelCard, ModelRegistry, RegistryError};
use crate::planner::{
    validate_graph, ExternalAdapter, Finding, KeywordTable, PlanError, PlanRequest, Planner, PlannerAdapter,
    RuleAdapter, TaskGraph, UtteranceContext, ValidationReport,
};
use crate::session::{Session, SessionError, SessionEvent, SessionStore};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Intent(#[from] IntentError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("unknown run {0:?}")]
    UnknownRun(String),
    #[error(transparent)]
    Registry(#[from] RegistryError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("keyword table: {0}")]
    KeywordTable(String),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("service is shutting down")]
    ShuttingDown,
}

impl ServiceError {
    pub fn code(&self) -> String {
        match self {
            Self::Intent(e) => e.error_kind.to_string(),
            Self::Session(_) => "UnknownSession".into(),
            Self::UnknownRun(_) => "UnknownRun".into(),
            Self::Registry(RegistryError::DuplicateModelName(_)) => "DuplicateModelName".into(),
            Self::Registry(RegistryError::InvalidCard { .. }) => "InvalidCard".into(),
            Self::Registry(RegistryError::Load(_)) => "LoadError".into(),
            Self::Data(e) => e.code().into(),
            Self::Config(_) => "ConfigError".into(),
            Self::KeywordTable(_) => "KeywordTableError".into(),
            Self::Run(_) => "JournalError".into(),
            Self::Io(_) => "IoError".into(),
            Self::ShuttingDown => "ShuttingDown".into(),
        }
    }

    /// True when the caller sent something unusable, as opposed to a
    /// failure inside the service.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Self::Intent(_)
                | Self::Session(_)
                | Self::UnknownRun(_)
                | Self::Registry(_)
                | Self::Data(DataError::DuplicateDataName(_) | DataError::MissingModality(_) | DataError::InvalidName(_))
                | Self::Config(_)
                | Self::KeywordTable(_)
        )
    }
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

struct Desk {
    planner: Planner,
    channel: FeedbackChannel,
}

struct Inner {
    config: Config,
    registry: ModelRegistry,
    store: Arc<DataStore>,
    sessions: SessionStore,
    desk: Mutex<Desk>,
    runs: Mutex<BTreeMap<String, RunState>>,
    changed: Condvar,
    runs_dir: PathBuf,
    reports_dir: PathBuf,
}

struct Job {
    run_id: String,
    journal: Journal<RunEvent>,
}

pub struct Service {
    inner: Arc<Inner>,
    queue: Mutex<Option<Sender<Job>>>,
    workers: Vec<JoinHandle<()>>,
}

/// Loads every registry path: directories card by card, plain files as one card.
pub fn load_registry(paths: &[PathBuf]) -> Result<ModelRegistry, RegistryError> {
    let registry = ModelRegistry::new();
    for p in paths {
        if p.is_dir() {
            registry.load_dir(p)?;
        } else {
            registry.register_model(load_card(p)?)?;
        }
    }
    Ok(registry)
}

impl Service {
    /// Opens the service described by `config`, choosing the external
    /// planner when an endpoint is configured and the keyword planner
    /// otherwise.
    pub fn open(config: Config) -> Result<Self, ServiceError> {
        config.validate()?;
        let registry = load_registry(&config.registry_paths)?;
        let adapter: Box<dyn PlannerAdapter> = match &config.external_endpoint {
            Some(endpoint) => Box::new(ExternalAdapter::new(endpoint, registry.task_types().into_iter().collect())),
            None => Box::new(RuleAdapter::new(
                KeywordTable::load(&config.keyword_table).map_err(|e| ServiceError::KeywordTable(e.to_string()))?,
            )),
        };
        Self::assemble(config, registry, adapter)
    }

    pub fn open_with_adapter(config: Config, adapter: Box<dyn PlannerAdapter>) -> Result<Self, ServiceError> {
        config.validate()?;
        let registry = load_registry(&config.registry_paths)?;
        Self::assemble(config, registry, adapter)
    }

    fn assemble(config: Config, registry: ModelRegistry, adapter: Box<dyn PlannerAdapter>) -> Result<Self, ServiceError> {
        let store = Arc::new(DataStore::open(&config.data_dir)?);
        let runs_dir = config.journal_dir.join("runs");
        let reports_dir = config.journal_dir.join("reports");
        std::fs::create_dir_all(&runs_dir)?;
        std::fs::create_dir_all(&reports_dir)?;
        let sessions = SessionStore::replay(Journal::<SessionEvent>::open(config.journal_dir.join("sessions.jsonl"))?)?;
        let runs = recover_runs(&runs_dir)?;
        let planner = Planner::new(adapter, config.max_replans);
        let pool = config.max_concurrent_runs;
        let inner = Arc::new(Inner {
            config,
            registry,
            store,
            sessions,
            desk: Mutex::new(Desk {
                planner,
                channel: FeedbackChannel::new(),
            }),
            runs: Mutex::new(runs),
            changed: Condvar::new(),
            runs_dir,
            reports_dir,
        });
        let (tx, rx) = mpsc::channel::<Job>();
        let rx = Arc::new(Mutex::new(rx));
        let workers = (0..pool)
            .map(|i| {
                let inner = inner.clone();
                let rx = rx.clone();
                std::thread::Builder::new()
                    .name(format!("sai-run-{i}"))
                    .spawn(move || worker_loop(&inner, &rx))
                    .expect("spawn run worker")
            })
            .collect();
        Ok(Self {
            inner,
            queue: Mutex::new(Some(tx)),
            workers,
        })
    }

    pub fn config(&self) -> &Config {
        &self.inner.config
    }

    pub fn registry(&self) -> &ModelRegistry {
        &self.inner.registry
    }

    pub fn data_store(&self) -> &Arc<DataStore> {
        &self.inner.store
    }

    pub fn sessions(&self) -> &SessionStore {
        &self.inner.sessions
    }

    pub fn run_journal_path(&self, run_id: &str) -> PathBuf {
        self.inner.runs_dir.join(format!("{run_id}.jsonl"))
    }

    pub fn reports_dir(&self) -> &Path {
        &self.inner.reports_dir
    }

    /// Parses and queues a structured intent. Parse errors are returned
    /// here and no run is created.
    pub fn submit_intent(&self, document: &str) -> Result<String, ServiceError> {
        let intent = parse_intent(document)?;
        self.create_run(RunSource::Intent, intent)
    }

    pub fn open_session(&self) -> String {
        self.inner.sessions.open_session()
    }

    pub fn session(&self, session_id: &str) -> Result<Session, ServiceError> {
        Ok(self.inner.sessions.get(session_id)?)
    }

    pub fn list_sessions(&self) -> Vec<Session> {
        self.inner.sessions.list()
    }

    /// Appends the utterance to the session and queues a run for it.
    /// Planning failures surface on the run, not here.
    pub fn submit_utterance(&self, session_id: &str, text: &str) -> Result<String, ServiceError> {
        let before = self.inner.sessions.get(session_id)?;
        self.inner.sessions.append_utterance(session_id, text)?;
        let run_id = new_run_id();
        let source = RunSource::Utterance {
            session_id: session_id.to_string(),
            utterance: text.to_string(),
            previous_run_id: before.last_run_id,
        };
        let intent = Intent::for_utterance(format!("intent-{run_id}"), text);
        self.inner.sessions.link_run(session_id, &run_id)?;
        self.create_run_with_id(run_id, source, intent)
    }

    fn create_run(&self, source: RunSource, intent: Intent) -> Result<String, ServiceError> {
        self.create_run_with_id(new_run_id(), source, intent)
    }

    fn create_run_with_id(&self, run_id: String, source: RunSource, intent: Intent) -> Result<String, ServiceError> {
        let journal = Journal::open(self.run_journal_path(&run_id))?;
        let event = created_event(&run_id, &source, &intent);
        {
            let mut runs = lock(&self.inner.runs);
            if runs.values().any(|r| r.intent.intent_id == intent.intent_id) {
                return Err(IntentError::constraint(
                    "intent_id",
                    format!("intent_id {:?} was already submitted", intent.intent_id),
                )
                .into());
            }
            journal.append(&event)?;
            runs.insert(run_id.clone(), RunState::created(&event)?);
        }
        let queue = lock(&self.queue);
        let tx = queue.as_ref().ok_or(ServiceError::ShuttingDown)?;
        tx.send(Job {
            run_id: run_id.clone(),
            journal,
        })
        .map_err(|_| ServiceError::ShuttingDown)?;
        Ok(run_id)
    }

    pub fn get_run(&self, run_id: &str) -> Result<RunState, ServiceError> {
        lock(&self.inner.runs)
            .get(run_id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownRun(run_id.to_string()))
    }

    pub fn list_runs(&self) -> Vec<RunSummary> {
        let mut out: Vec<RunSummary> = lock(&self.inner.runs).values().map(RunState::summary).collect();
        out.sort_by(|a, b| a.created_ms.cmp(&b.created_ms).then_with(|| a.run_id.cmp(&b.run_id)));
        out
    }

    /// Blocks until the run is terminal or `timeout` passes, returning the
    /// latest state either way.
    pub fn wait_for(&self, run_id: &str, timeout: Option<Duration>) -> Result<RunState, ServiceError> {
        self.inner.wait_terminal(run_id, timeout)
    }

    pub fn register_model(&self, card: ModelCard) -> Result<(), ServiceError> {
        self.inner.registry.register_model(card.clone())?;
        if let Some(dir) = self.inner.config.registry_paths.first().filter(|p| p.is_dir()) {
            if is_valid_key(&card.model_name) {
                let text = serde_json::to_string_pretty(&card).map_err(std::io::Error::other)?;
                std::fs::write(dir.join(format!("{}.json", card.model_name)), text)?;
            }
        }
        Ok(())
    }

    pub fn list_models(&self) -> Vec<ModelCard> {
        self.inner.registry.list()
    }

    pub fn register_data(&self, card: DataCard, payload: Vec<u8>) -> Result<(), ServiceError> {
        Ok(self.inner.store.register_data(card, payload)?)
    }

    pub fn list_data(&self) -> Vec<DataCard> {
        self.inner.store.list()
    }
}

impl Drop for Service {
    fn drop(&mut self) {
        lock(&self.queue).take();
        for w in self.workers.drain(..) {
            let _ = w.join();
        }
    }
}

fn new_run_id() -> String {
    format!("run-{}", uuid::Uuid::new_v4().simple())
}

/// Replays every run journal; runs cut off mid-pipeline are closed as
/// failed with code `Interrupted`.
fn recover_runs(runs_dir: &Path) -> Result<BTreeMap<String, RunState>, ServiceError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(runs_dir)?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    paths.sort();
    let mut runs = BTreeMap::new();
    for path in paths {
        let events = match read_events::<RunEvent>(&path) {
            Ok(e) => e,
            Err(e) => {
                tracing::warn!(path = %path.display(), error = %e, "skipping unreadable run journal");
                continue;
            }
        };
        let mut state = match RunState::replay(&events) {
            Ok(s) => s,
            Err(e) => {
                tracing::warn!(path = %path.display(), error = %e, "skipping malformed run journal");
                continue;
            }
        };
        if !state.phase.is_terminal() {
            let event = failed_event(&state.run_id, "Interrupted", "the service stopped while the run was in progress");
            Journal::<RunEvent>::open(&path)?.append(&event)?;
            state.apply(&event)?;
        }
        runs.insert(state.run_id.clone(), state);
    }
    Ok(runs)
}

fn worker_loop(inner: &Inner, rx: &Mutex<Receiver<Job>>) {
    loop {
        let job = match lock(rx).recv() {
            Ok(job) => job,
            Err(_) => return,
        };
        let recorder = Recorder {
            inner,
            run_id: &job.run_id,
            journal: &job.journal,
        };
        let outcome = std::panic::catch_unwind(AssertUnwindSafe(|| recorder.pipeline()));
        let failure = match outcome {
            Ok(Ok(())) => None,
            Ok(Err(e)) => Some((e.code(), e.to_string())),
            Err(_) => Some(("InternalError".to_string(), "run worker panicked".to_string())),
        };
        if let Some((code, message)) = failure {
            tracing::error!(run_id = %job.run_id, %code, %message, "run aborted");
            if !recorder.state().phase.is_terminal() {
                let _ = recorder.conclude(Some((&code, &message)));
            }
        }
    }
}

impl Inner {
    fn wait_terminal(&self, run_id: &str, timeout: Option<Duration>) -> Result<RunState, ServiceError> {
        let deadline = timeout.map(|t| Instant::now() + t);
        let mut runs = lock(&self.runs);
        loop {
            let state = runs.get(run_id).ok_or_else(|| ServiceError::UnknownRun(run_id.to_string()))?;
            if state.phase.is_terminal() {
                return Ok(state.clone());
            }
            runs = match deadline {
                None => self.changed.wait(runs).unwrap_or_else(|e| e.into_inner()),
                Some(d) => {
                    let now = Instant::now();
                    if now >= d {
                        return Ok(state.clone());
                    }
                    self.changed.wait_timeout(runs, d - now).unwrap_or_else(|e| e.into_inner()).0
                }
            };
        }
    }
}

/// Writes one run's journal and mirrors each event into the live state.
struct Recorder<'a> {
    inner: &'a Inner,
    run_id: &'a str,
    journal: &'a Journal<RunEvent>,
}

enum Planned {
    /// A valid graph, plus the draft's validation when replanning was needed.
    Graph(TaskGraph, Option<ValidationReport>),
    Failed {
        draft: Option<TaskGraph>,
        validation: ValidationReport,
        reason: String,
    },
}

impl Recorder<'_> {
    fn state(&self) -> RunState {
        lock(&self.inner.runs).get(self.run_id).cloned().expect("recorded runs exist")
    }

    fn emit(&self, event: RunEvent) -> Result<(), ServiceError> {
        self.journal.append(&event)?;
        self.apply(&event)
    }

    fn apply(&self, event: &RunEvent) -> Result<(), ServiceError> {
        let mut runs = lock(&self.inner.runs);
        let state = runs.get_mut(self.run_id).expect("recorded runs exist");
        let result = state.apply(event);
        drop(runs);
        self.inner.changed.notify_all();
        Ok(result?)
    }

    fn enter(&self, phase: Phase) -> Result<(), ServiceError> {
        self.emit(phase_event(self.run_id, phase))
    }

    fn pipeline(&self) -> Result<(), ServiceError> {
        let state = self.state();
        let intent = state.intent.clone();

        let (graph, draft_validation) = match self.plan(&state)? {
            Planned::Graph(g, v) => (g, v),
            Planned::Failed {
                draft,
                validation,
                reason,
            } => {
                let summary = summarize_unplanned(self.run_id, &reason);
                let selection = SelectionOutcome::failed("NotAttempted", "planning produced no valid graph");
                let graph_id = draft.as_ref().map_or("-", |g| g.graph_id.as_str()).to_string();
                return self.finish_failed(&state, &graph_id, summary, &validation, selection, "PlanningFailed", &reason);
            }
        };
        // A replanned run keeps the draft's findings in its planning score.
        let validation = draft_validation.unwrap_or_else(|| validate_graph(&graph, &self.inner.registry.task_types()));
        let replans = lock(&self.inner.desk).planner.replans_used(&graph.graph_id);
        self.emit(RunEvent::new(
            self.run_id,
            GRAPH_PLANNED,
            json!({ "graph": graph, "replans": replans }),
        ))?;

        self.enter(Phase::Selecting)?;
        let cards = self.inner.registry.snapshot();
        let combinations = match select_combinations(&graph, &intent, intent.combination_count as usize, &cards) {
            Ok(c) => c,
            Err(e) => {
                let summary = summarize(self.run_id, &graph, &[], &[]).unwrap_or_default();
                let selection = SelectionOutcome::failed(e.code(), e.to_string());
                return self.finish_failed(&state, &graph.graph_id, summary, &validation, selection, e.code(), &e.to_string());
            }
        };
        self.emit(RunEvent::new(
            self.run_id,
            COMBINATIONS_SELECTED,
            json!({ "combinations": combinations }),
        ))?;

        self.enter(Phase::Executing)?;
        let executor = Executor::new(cards, self.inner.store.clone(), self.inner.config.executor());
        let records = executor.execute_all(self.run_id, &graph, &combinations, &intent, Some(self.journal));
        let journaled: Vec<RunEvent> = self
            .journal
            .events()?
            .into_iter()
            .filter(|e| e.event == EXECUTION_FINISHED)
            .collect();
        for record in &records {
            let logged = journaled
                .iter()
                .find(|e| e.detail.get("rank").and_then(|r| r.as_u64()) == Some(u64::from(record.rank)));
            match logged {
                Some(e) => self.apply(e)?,
                // Pre-flight failures never reach the executor's journal.
                None => self.emit(RunEvent::new(
                    self.run_id,
                    EXECUTION_FINISHED,
                    serde_json::to_value(record).map_err(std::io::Error::other)?,
                ))?,
            }
        }

        self.enter(Phase::Reporting)?;
        let summary = summarize(self.run_id, &graph, &combinations, &records)
            .map_err(|e| ServiceError::Io(std::io::Error::other(e)))?;
        let scores = score_stages(&validation, &SelectionOutcome::returned(combinations.len()), &records, &intent);
        let final_rep = final_report(self.run_id, &combinations, &records);
        let feedback = FeedbackReport::new(
            self.run_id,
            &graph.graph_id,
            state.source.session_id(),
            summary,
            scores,
            &records,
        );
        self.publish(&final_rep, &feedback)?;
        if final_rep.best_rank.is_some() {
            self.conclude(None)
        } else {
            self.conclude(Some(("ExecutionFailed", "no combination completed every task")))
        }
    }

    /// Plans the run's graph, replanning on unknown task types within the
    /// planner's budget.
    fn plan(&self, state: &RunState) -> Result<Planned, ServiceError> {
        let vocabulary = self.inner.registry.task_types();
        let first = match &state.source {
            RunSource::Intent => lock(&self.inner.desk).planner.plan(PlanRequest::Intent(&state.intent), &vocabulary),
            RunSource::Utterance {
                session_id,
                utterance,
                previous_run_id,
            } => {
                let last_output = match previous_run_id {
                    Some(prev) => self.inner.wait_terminal(prev, None)?.last_output(),
                    None => None,
                };
                let mut session = self.inner.sessions.get(session_id)?;
                // The current utterance is passed separately.
                session.chat_log.pop();
                let known: BTreeSet<String> = self.inner.store.list().into_iter().map(|c| c.data_name).collect();
                let ctx = UtteranceContext {
                    session_id,
                    utterance,
                    chat_log: &session.chat_log,
                    last_output: last_output.as_deref(),
                    known_data: &known,
                };
                lock(&self.inner.desk).planner.plan(PlanRequest::Utterance(ctx), &vocabulary)
            }
        };
        match first {
            Ok(graph) => Ok(Planned::Graph(graph, None)),
            Err(PlanError::UnknownTaskType { draft, .. }) => {
                let draft = *draft;
                let validation = validate_graph(&draft, &vocabulary);
                let report = planning_feedback(self.run_id, state.source.session_id(), &validation);
                let replanned = lock(&self.inner.desk).planner.replan_until_valid(&draft, &report, &vocabulary);
                match replanned {
                    Ok(graph) => Ok(Planned::Graph(graph, Some(validation))),
                    Err(e) => Ok(Planned::Failed {
                        draft: Some(draft),
                        validation,
                        reason: e.to_string(),
                    }),
                }
            }
            Err(PlanError::PlanningFailed { reason, findings }) => {
                let findings = if findings.is_empty() {
                    vec![Finding::PlanningFailed { reason: reason.clone() }]
                } else {
                    findings
                };
                Ok(Planned::Failed {
                    draft: None,
                    validation: ValidationReport {
                        graph_id: "-".into(),
                        findings,
                        shape: None,
                    },
                    reason,
                })
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn finish_failed(
        &self,
        state: &RunState,
        graph_id: &str,
        summary: String,
        validation: &ValidationReport,
        selection: SelectionOutcome,
        code: &str,
        message: &str,
    ) -> Result<(), ServiceError> {
        let scores = score_stages(validation, &selection, &[], &state.intent);
        let feedback = FeedbackReport::new(self.run_id, graph_id, state.source.session_id(), summary, scores, &[]);
        self.publish(&final_report(self.run_id, &[], &[]), &feedback)?;
        self.conclude(Some((code, message)))
    }

    /// Writes the report files, journals them and hands feedback to the
    /// planner adapter once.
    fn publish(&self, final_rep: &crate::feedback::FinalReport, feedback: &FeedbackReport) -> Result<(), ServiceError> {
        let dir = &self.inner.reports_dir;
        std::fs::write(dir.join(format!("{}.final.json", self.run_id)), pretty(final_rep))?;
        std::fs::write(dir.join(format!("{}.feedback.json", self.run_id)), pretty(feedback))?;
        std::fs::write(dir.join(format!("{}.summary.txt", self.run_id)), &feedback.formatted_summary)?;
        self.emit(RunEvent::new(
            self.run_id,
            REPORTS_EMITTED,
            json!({ "final_report": final_rep, "feedback_report": feedback }),
        ))?;
        let mut desk = lock(&self.inner.desk);
        let Desk { planner, channel } = &mut *desk;
        channel.emit_feedback(feedback, planner.adapter_mut());
        Ok(())
    }

    /// Ends the run as done (`None`) or failed with `(code, message)`.
    /// Session runs get their outcome in the chat log before the terminal
    /// event, so waiters never see a finished run without it.
    fn conclude(&self, failure: Option<(&str, &str)>) -> Result<(), ServiceError> {
        let state = self.state();
        if let Some(session_id) = state.source.session_id() {
            let text = match (failure, state.last_output()) {
                (None, Some(output)) => format!("run {} done; output {output}", self.run_id),
                (None, None) => format!("run {} done", self.run_id),
                (Some((code, _)), _) => format!("run {} failed ({code})", self.run_id),
            };
            if let Err(e) = self.inner.sessions.append_system(session_id, &text) {
                tracing::warn!(error = %e, "cannot append run outcome to session");
            }
        }
        match failure {
            None => self.enter(Phase::Done),
            Some((code, message)) => self.emit(failed_event(self.run_id, code, message)),
        }
    }
}

fn pretty<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).unwrap_or_default()
}
