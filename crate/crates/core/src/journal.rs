//! Append-only line-delimited JSON journals.
//!
//! Every run and the session store write one JSON object per line. Journals
//! are either file-backed (flushed per event) or held in memory for tests and
//! in-process runs; both expose the same read-back path so replay code does
//! not care which one produced the lines.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// Milliseconds since the Unix epoch.
pub fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// One run-journal line: `{run_id, event, task_key?, timestamp, detail}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEvent {
    pub run_id: String,
    pub event: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task_key: Option<String>,
    pub timestamp: u64,
    #[serde(default)]
    pub detail: Value,
}

impl RunEvent {
    pub fn new(run_id: impl Into<String>, event: impl Into<String>, detail: Value) -> Self {
        Self {
            run_id: run_id.into(),
            event: event.into(),
            task_key: None,
            timestamp: now_ms(),
            detail,
        }
    }

    pub fn for_task(mut self, task_key: impl Into<String>) -> Self {
        self.task_key = Some(task_key.into());
        self
    }
}

enum Sink {
    File { path: PathBuf, file: File },
    Memory(Vec<String>),
}

/// Thread-safe append-only journal of `E` events.
pub struct Journal<E> {
    sink: Mutex<Sink>,
    _event: PhantomData<fn(E)>,
}

impl<E: Serialize + DeserializeOwned> Journal<E> {
    pub fn memory() -> Self {
        Self {
            sink: Mutex::new(Sink::Memory(Vec::new())),
            _event: PhantomData,
        }
    }

    /// Opens (creating if needed) a file journal in append mode.
    pub fn open(path: impl AsRef<Path>) -> io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self {
            sink: Mutex::new(Sink::File { path, file }),
            _event: PhantomData,
        })
    }

    pub fn append(&self, event: &E) -> io::Result<()> {
        let line = serde_json::to_string(event).map_err(io::Error::other)?;
        let mut sink = self.sink.lock().unwrap_or_else(|e| e.into_inner());
        match &mut *sink {
            Sink::File { file, .. } => {
                file.write_all(line.as_bytes())?;
                file.write_all(b"\n")?;
                file.flush()
            }
            Sink::Memory(lines) => {
                lines.push(line);
                Ok(())
            }
        }
    }

    pub fn path(&self) -> Option<PathBuf> {
        match &*self.sink.lock().unwrap_or_else(|e| e.into_inner()) {
            Sink::File { path, .. } => Some(path.clone()),
            Sink::Memory(_) => None,
        }
    }

    /// Raw lines in append order.
    pub fn lines(&self) -> io::Result<Vec<String>> {
        let path = match &*self.sink.lock().unwrap_or_else(|e| e.into_inner()) {
            Sink::Memory(lines) => return Ok(lines.clone()),
            Sink::File { path, .. } => path.clone(),
        };
        read_lines(&path)
    }

    pub fn events(&self) -> io::Result<Vec<E>> {
        self.lines()?.iter().map(|l| decode(l)).collect()
    }
}

fn decode<E: DeserializeOwned>(line: &str) -> io::Result<E> {
    serde_json::from_str(line).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}

fn read_lines(path: &Path) -> io::Result<Vec<String>> {
    let file = File::open(path)?;
    BufReader::new(file)
        .lines()
        .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()))
        .collect()
}

/// Reads every event of a journal file.
pub fn read_events<E: DeserializeOwned>(path: impl AsRef<Path>) -> io::Result<Vec<E>> {
    read_lines(path.as_ref())?.iter().map(|l| decode(l)).collect()
}
