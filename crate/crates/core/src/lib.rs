//! Orchestration of multi-model inference pipelines from structured or
//! natural-language intents.

pub mod cli;
pub mod data_store;
pub mod executor;
pub mod feedback;
pub mod intent;
pub mod journal;
pub mod model_library;
pub mod planner;
pub mod service;
pub mod session;

pub use data_store::{DataCard, DataStore, IOEnvelope};
pub use executor::{ExecutionRecord, Executor, ExecutorConfig};
pub use feedback::{FeedbackReport, FinalReport, StageScores};
pub use intent::{parse_intent, Intent, IntentError, TaskRequest};
pub use model_library::{ModelCard, ModelCombination, ModelRegistry};
pub use planner::{Planner, TaskGraph, TaskNode};
