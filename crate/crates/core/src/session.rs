//! Multi-turn end-user sessions.
//!
//! Each session keeps an append-only chat log. Sessions lock independently so
//! appends to one session never wait on another.

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::journal::{now_ms, Journal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    User,
    System,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatEntry {
    pub role: Role,
    pub text: String,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub chat_log: Vec<ChatEntry>,
    pub last_run_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SessionError {
    #[error("unknown session {0:?}")]
    UnknownSession(String),
}

/// Session-journal line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SessionEvent {
    Opened { session_id: String, timestamp: u64 },
    Appended { session_id: String, role: Role, text: String, timestamp: u64 },
    RunLinked { session_id: String, run_id: String, timestamp: u64 },
}

impl Session {
    fn apply(&mut self, event: &SessionEvent) {
        match event {
            SessionEvent::Opened { .. } => {}
            SessionEvent::Appended { role, text, timestamp, .. } => self.chat_log.push(ChatEntry {
                role: *role,
                text: text.clone(),
                timestamp: *timestamp,
            }),
            SessionEvent::RunLinked { run_id, .. } => self.last_run_id = Some(run_id.clone()),
        }
    }
}

pub struct SessionStore {
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
    journal: Journal<SessionEvent>,
}

impl Default for SessionStore {
    fn default() -> Self {
        Self::new(Journal::memory())
    }
}

impl SessionStore {
    pub fn new(journal: Journal<SessionEvent>) -> Self {
        Self {
            sessions: RwLock::new(BTreeMap::new()),
            journal,
        }
    }

    /// Rebuilds sessions from an existing journal, then keeps appending to it.
    pub fn replay(journal: Journal<SessionEvent>) -> std::io::Result<Self> {
        let events = journal.events()?;
        let mut sessions: BTreeMap<String, Session> = BTreeMap::new();
        for event in &events {
            match event {
                SessionEvent::Opened { session_id, .. } => {
                    sessions.insert(
                        session_id.clone(),
                        Session {
                            session_id: session_id.clone(),
                            chat_log: Vec::new(),
                            last_run_id: None,
                        },
                    );
                }
                SessionEvent::Appended { session_id, .. } | SessionEvent::RunLinked { session_id, .. } => {
                    if let Some(s) = sessions.get_mut(session_id) {
                        s.apply(event);
                    }
                }
            }
        }
        Ok(Self {
            sessions: RwLock::new(
                sessions
                    .into_iter()
                    .map(|(k, v)| (k, Arc::new(Mutex::new(v))))
                    .collect(),
            ),
            journal,
        })
    }

    pub fn journal(&self) -> &Journal<SessionEvent> {
        &self.journal
    }

    pub fn open_session(&self) -> String {
        let session_id = format!("sess-{}", uuid::Uuid::new_v4().simple());
        let session = Session {
            session_id: session_id.clone(),
            chat_log: Vec::new(),
            last_run_id: None,
        };
        self.log(&SessionEvent::Opened {
            session_id: session_id.clone(),
            timestamp: now_ms(),
        });
        self.sessions
            .write()
            .unwrap_or_else(|e| e.into_inner())
            .insert(session_id.clone(), Arc::new(Mutex::new(session)));
        session_id
    }

    fn handle(&self, session_id: &str) -> Result<Arc<Mutex<Session>>, SessionError> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(session_id)
            .cloned()
            .ok_or_else(|| SessionError::UnknownSession(session_id.to_string()))
    }

    fn log(&self, event: &SessionEvent) {
        if let Err(e) = self.journal.append(event) {
            tracing::warn!(error = %e, "failed to journal session event");
        }
    }

    fn append(&self, session_id: &str, role: Role, text: &str) -> Result<Session, SessionError> {
        let handle = self.handle(session_id)?;
        let mut session = handle.lock().unwrap_or_else(|e| e.into_inner());
        let floor = session.chat_log.last().map_or(0, |e| e.timestamp);
        let event = SessionEvent::Appended {
            session_id: session_id.to_string(),
            role,
            text: text.to_string(),
            timestamp: now_ms().max(floor),
        };
        self.log(&event);
        session.apply(&event);
        Ok(session.clone())
    }

    pub fn append_utterance(&self, session_id: &str, text: &str) -> Result<Session, SessionError> {
        self.append(session_id, Role::User, text)
    }

    pub fn append_system(&self, session_id: &str, text: &str) -> Result<Session, SessionError> {
        self.append(session_id, Role::System, text)
    }

    pub fn link_run(&self, session_id: &str, run_id: &str) -> Result<(), SessionError> {
        let handle = self.handle(session_id)?;
        let mut session = handle.lock().unwrap_or_else(|e| e.into_inner());
        let event = SessionEvent::RunLinked {
            session_id: session_id.to_string(),
            run_id: run_id.to_string(),
            timestamp: now_ms(),
        };
        self.log(&event);
        session.apply(&event);
        Ok(())
    }

    pub fn get(&self, session_id: &str) -> Result<Session, SessionError> {
        let handle = self.handle(session_id)?;
        let session = handle.lock().unwrap_or_else(|e| e.into_inner()).clone();
        Ok(session)
    }

    pub fn list(&self) -> Vec<Session> {
        self.sessions
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .values()
            .map(|h| h.lock().unwrap_or_else(|e| e.into_inner()).clone())
            .collect()
    }
}
