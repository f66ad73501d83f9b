//! Command-line front end mirroring the HTTP API.
//!
//! Exit codes: 0 success, 2 input error, 3 pipeline failure.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::data_store::{DataCard, DataStore};
use crate::model_library::load_card;
use crate::feedback::planning_feedback;
use crate::intent::parse_intent;
use crate::planner::{
    execution_stages, validate_graph, KeywordTable, PlanError, PlanRequest, Planner, RuleAdapter, UtteranceContext,
};
use crate::service::{load_registry, Config, Phase, Service, ServiceError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PIPELINE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sai", version, about = "Plan, match and run multi-model inference pipelines")]
pub struct Cli {
    /// Configuration file; `./sai.toml` is used when present.
    #[arg(long, global = true, env = "SAI_CONFIG")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Translate an intent file or utterance into a validated task graph.
    Plan(Source),
    /// Run the full pipeline in-process and print the final report.
    Run {
        #[command(flatten)]
        source: Source,
        /// Give up waiting after this many seconds.
        #[arg(long)]
        timeout_secs: Option<u64>,
    },
    /// Model cards.
    #[command(subcommand)]
    Models(ModelsCommand),
    /// Data cards.
    #[command(subcommand)]
    Data(DataCommand),
    /// List sessions, or show one session's chat log.
    Sessions { session_id: Option<String> },
    /// Serve the HTTP API.
    Serve,
}

#[derive(Debug, Args)]
pub struct Source {
    /// Intent document (JSON).
    #[arg(required_unless_present = "utterance", conflicts_with = "utterance")]
    pub intent: Option<PathBuf>,
    /// Natural-language request, planned through the keyword table.
    #[arg(long)]
    pub utterance: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum ModelsCommand {
    /// Register model card files.
    Add {
        #[arg(required = true)]
        cards: Vec<PathBuf>,
    },
    List,
}

#[derive(Debug, Subcommand)]
pub enum DataCommand {
    /// Register a payload under a data name.
    Add {
        data_name: String,
        #[arg(long)]
        modality: String,
        /// Payload file; empty payload when omitted.
        #[arg(long)]
        file: Option<PathBuf>,
        /// Extra attribute as key=value, repeatable.
        #[arg(long = "attr", value_parser = parse_attr)]
        attrs: Vec<(String, String)>,
    },
    List,
}

fn parse_attr(s: &str) -> Result<(String, String), String> {
    s.split_once('=')
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .ok_or_else(|| format!("expected key=value, got {s:?}"))
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Pipeline(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Input(_) => EXIT_INPUT,
            Self::Pipeline(_) => EXIT_PIPELINE,
        }
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        if e.is_input_error() {
            Self::Input(e.to_string())
        } else {
            Self::Pipeline(e.to_string())
        }
    }
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn print_json(out: &mut dyn Write, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Pipeline(e.to_string()))?;
    writeln!(out, "{text}").map_err(|e| CliError::Pipeline(e.to_string()))
}

pub fn load_config(path: Option<&Path>) -> Result<Config, CliError> {
    let default = Path::new("sai.toml");
    let path = path.or_else(|| default.exists().then_some(default));
    Config::load(path).map_err(input)
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Errors are reported on stderr.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli, out) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let config = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Plan(source) => plan(&config, &source, out),
        Command::Run { source, timeout_secs } => run(config, &source, timeout_secs.map(Duration::from_secs), out),
        Command::Models(ModelsCommand::Add { cards }) => {
            let service = Service::open(config)?;
            for path in &cards {
                let card = load_card(path).map_err(input)?;
                let name = card.model_name.clone();
                service.register_model(card)?;
                writeln!(out, "registered model {name}").map_err(|e| CliError::Pipeline(e.to_string()))?;
            }
            Ok(())
        }
        Command::Models(ModelsCommand::List) => {
            let registry = load_registry(&config.registry_paths).map_err(input)?;
            print_json(out, &registry.list())
        }
        Command::Data(DataCommand::Add {
            data_name,
            modality,
            file,
            attrs,
        }) => {
            let payload = match file {
                Some(p) => std::fs::read(&p).map_err(|e| input(format!("{}: {e}", p.display())))?,
                None => Vec::new(),
            };
            let mut card = DataCard::new(&data_name, modality);
            for (k, v) in attrs {
                card = card.with_attribute(k, v);
            }
            let store = DataStore::open(&config.data_dir).map_err(input)?;
            store.register_data(card, payload).map_err(input)?;
            writeln!(out, "registered data {data_name}").map_err(|e| CliError::Pipeline(e.to_string()))
        }
        Command::Data(DataCommand::List) => {
            let store = DataStore::open(&config.data_dir).map_err(input)?;
            print_json(out, &store.list())
        }
        Command::Sessions { session_id } => {
            let service = Service::open(config)?;
            match session_id {
                Some(id) => print_json(out, &service.session(&id)?),
                None => print_json(out, &service.list_sessions()),
            }
        }
        Command::Serve => {
            let service = Arc::new(Service::open(config)?);
            let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Pipeline(e.to_string()))?;
            runtime
                .block_on(crate::service::http::serve(service))
                .map_err(|e| CliError::Pipeline(e.to_string()))
        }
    }
}

fn read_document(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn plan(config: &Config, source: &Source, out: &mut dyn Write) -> Result<(), CliError> {
    let registry = load_registry(&config.registry_paths).map_err(input)?;
    let vocabulary = registry.task_types();
    let table = KeywordTable::load(&config.keyword_table).map_err(input)?;
    let mut planner = Planner::new(Box::new(RuleAdapter::new(table)), config.max_replans);
    let graph = match (&source.intent, &source.utterance) {
        (Some(path), _) => {
            let intent = parse_intent(&read_document(path)?).map_err(input)?;
            planner.plan(PlanRequest::Intent(&intent), &vocabulary)
        }
        (None, Some(text)) => {
            let known: BTreeSet<String> = DataStore::open(&config.data_dir)
                .map_err(input)?
                .list()
                .into_iter()
                .map(|c| c.data_name)
                .collect();
            let ctx = UtteranceContext {
                session_id: "cli",
                utterance: text,
                chat_log: &[],
                last_output: None,
                known_data: &known,
            };
            planner.plan(PlanRequest::Utterance(ctx), &vocabulary)
        }
        (None, None) => return Err(input("an intent file or --utterance is required")),
    };
    let graph = match graph {
        Err(PlanError::UnknownTaskType { draft, .. }) => {
            let validation = validate_graph(&draft, &vocabulary);
            let report = planning_feedback("cli", None, &validation);
            planner.replan_until_valid(&draft, &report, &vocabulary)
        }
        other => other,
    }
    .map_err(|e| CliError::Pipeline(e.to_string()))?;
    let stages = execution_stages(&graph).map_err(|e| CliError::Pipeline(e.to_string()))?;
    print_json(out, &json!({ "graph": graph, "stages": stages }))
}

fn run(config: Config, source: &Source, timeout: Option<Duration>, out: &mut dyn Write) -> Result<(), CliError> {
    let service = Service::open(config)?;
    let run_id = match (&source.intent, &source.utterance) {
        (Some(path), _) => service.submit_intent(&read_document(path)?)?,
        (None, Some(text)) => {
            let session = service.open_session();
            service.submit_utterance(&session, text)?
        }
        (None, None) => return Err(input("an intent file or --utterance is required")),
    };
    let state = service.wait_for(&run_id, timeout)?;
    match &state.final_report {
        Some(report) => print_json(out, report)?,
        None => print_json(out, &json!({ "run_id": run_id, "phase": state.phase }))?,
    }
    match state.phase {
        Phase::Done => Ok(()),
        Phase::Failed => {
            let why = state
                .failure
                .map_or_else(|| "run failed".to_string(), |f| format!("{}: {}", f.code, f.message));
            Err(CliError::Pipeline(format!("run {run_id} failed: {why}")))
        }
        phase => Err(CliError::Pipeline(format!("run {run_id} still {} after timeout", phase.as_str()))),
    }
}
