//! Data-card store and the unified IO envelope.
//!
//! Payloads are opaque bytes; everything a model needs to know about them
//! lives in the card attributes, of which only `modality` is mandatory.
//!
//! On disk each entry is a directory `<root>/<data_name>/` holding
//! `card.json` and `payload.bin`, and `<root>/index.jsonl` journals
//! registrations in order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::intent::is_valid_key;
use crate::journal::{now_ms, read_events, Journal};

pub const MODALITY: &str = "modality";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataCard {
    pub data_name: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
}

impl DataCard {
    pub fn new(data_name: impl Into<String>, modality: impl Into<String>) -> Self {
        Self {
            data_name: data_name.into(),
            attributes: BTreeMap::from([(MODALITY.to_string(), modality.into())]),
        }
    }

    pub fn with_attribute(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.attributes.insert(key.into(), value.into());
        self
    }

    pub fn modality(&self) -> Option<&str> {
        self.attributes.get(MODALITY).map(String::as_str)
    }
}

pub mod base64_bytes {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let text = String::deserialize(d)?;
        STANDARD.decode(text).map_err(serde::de::Error::custom)
    }
}

/// Standardized model input/output. `payload` is base64 in JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IOEnvelope {
    pub data_name: String,
    pub modality: String,
    #[serde(with = "base64_bytes")]
    pub payload: Vec<u8>,
    #[serde(default)]
    pub trace: Vec<String>,
}

#[derive(Debug, Error)]
pub enum DataError {
    #[error("data {0} is already registered")]
    DuplicateDataName(String),
    #[error("data card {0} has no modality attribute")]
    MissingModality(String),
    #[error("data {0} not found")]
    DataNotFound(String),
    #[error("invalid data name {0:?}")]
    InvalidName(String),
    #[error("data store io: {0}")]
    Io(#[from] std::io::Error),
}

impl DataError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::DuplicateDataName(_) => "DuplicateDataName",
            Self::MissingModality(_) => "MissingModality",
            Self::DataNotFound(_) => "DataNotFound",
            Self::InvalidName(_) => "InvalidName",
            Self::Io(_) => "Io",
        }
    }
}

/// `/`-separated segments, each a valid key.
pub fn is_valid_data_name(name: &str) -> bool {
    !name.is_empty() && name.split('/').all(is_valid_key)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IndexEntry {
    data_name: String,
    timestamp: u64,
}

struct Entry {
    card: DataCard,
    payload: Arc<Vec<u8>>,
}

pub struct DataStore {
    entries: RwLock<BTreeMap<String, Entry>>,
    root: Option<PathBuf>,
    index: Option<Journal<IndexEntry>>,
}

impl Default for DataStore {
    fn default() -> Self {
        Self::in_memory()
    }
}

impl DataStore {
    pub fn in_memory() -> Self {
        Self {
            entries: RwLock::new(BTreeMap::new()),
            root: None,
            index: None,
        }
    }

    /// Opens a directory-backed store, loading every indexed entry.
    pub fn open(root: impl AsRef<Path>) -> Result<Self, DataError> {
        let root = root.as_ref().to_path_buf();
        std::fs::create_dir_all(&root)?;
        let index_path = root.join("index.jsonl");
        let mut entries = BTreeMap::new();
        if index_path.exists() {
            for item in read_events::<IndexEntry>(&index_path)? {
                let dir = root.join(&item.data_name);
                let card: DataCard = serde_json::from_slice(&std::fs::read(dir.join("card.json"))?)
                    .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
                let payload = std::fs::read(dir.join("payload.bin"))?;
                entries.insert(
                    item.data_name,
                    Entry {
                        card,
                        payload: Arc::new(payload),
                    },
                );
            }
        }
        Ok(Self {
            entries: RwLock::new(entries),
            index: Some(Journal::open(&index_path)?),
            root: Some(root),
        })
    }

    pub fn register_data(&self, card: DataCard, payload: Vec<u8>) -> Result<(), DataError> {
        if !is_valid_data_name(&card.data_name) {
            return Err(DataError::InvalidName(card.data_name));
        }
        if card.modality().is_none_or(str::is_empty) {
            return Err(DataError::MissingModality(card.data_name));
        }
        let mut entries = self.entries.write().unwrap_or_else(|e| e.into_inner());
        if entries.contains_key(&card.data_name) {
            return Err(DataError::DuplicateDataName(card.data_name));
        }
        if let (Some(root), Some(index)) = (&self.root, &self.index) {
            let dir = root.join(&card.data_name);
            std::fs::create_dir_all(&dir)?;
            let card_json = serde_json::to_vec_pretty(&card).map_err(std::io::Error::other)?;
            std::fs::write(dir.join("card.json"), card_json)?;
            std::fs::write(dir.join("payload.bin"), &payload)?;
            index.append(&IndexEntry {
                data_name: card.data_name.clone(),
                timestamp: now_ms(),
            })?;
        }
        entries.insert(
            card.data_name.clone(),
            Entry {
                card,
                payload: Arc::new(payload),
            },
        );
        Ok(())
    }

    pub fn contains(&self, data_name: &str) -> bool {
        self.entries.read().unwrap_or_else(|e| e.into_inner()).contains_key(data_name)
    }

    pub fn card(&self, data_name: &str) -> Option<DataCard> {
        self.entries
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .get(data_name)
            .map(|e| e.card.clone())
    }

    /// Envelope over the registered bytes, with an empty trace.
    pub fn resolve(&self, data_name: &str) -> Result<IOEnvelope, DataError> {
        let entries = self.entries.read().unwrap_or_else(|e| e.into_inner());
        let entry = entries
            .get(data_name)
            .ok_or_else(|| DataError::DataNotFound(data_name.to_string()))?;
        Ok(IOEnvelope {
            data_name: data_name.to_string(),
            modality: entry.card.modality().unwrap_or_default().to_string(),
            payload: entry.payload.as_ref().clone(),
            trace: Vec::new(),
        })
    }

    /// Persists a task output as `<run_id>/<task_key>`.
    pub fn store_result(&self, run_id: &str, task_key: &str, envelope: &IOEnvelope) -> Result<String, DataError> {
        let data_name = format!("{run_id}/{task_key}");
        let mut card = DataCard::new(&data_name, &envelope.modality)
            .with_attribute("origin", "result")
            .with_attribute("trace", envelope.trace.join(","));
        if let Some(last) = envelope.trace.last() {
            card = card.with_attribute("producer", last.clone());
        }
        self.register_data(card, envelope.payload.clone())?;
        Ok(data_name)
    }

    pub fn list(&self) -> Vec<DataCard> {
        self.entries
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .values()
            .map(|e| e.card.clone())
            .collect()
    }

    pub fn len(&self) -> usize {
        self.entries.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use sha2::{Digest, Sha256};

    #[test]
    fn empty_payload_round_trips() {
        let store = DataStore::in_memory();
        store.register_data(DataCard::new("d", "tensor"), Vec::new()).unwrap();
        let env = store.resolve("d").unwrap();
        assert!(env.payload.is_empty());
        assert!(env.trace.is_empty());
        assert_eq!(env.modality, "tensor");
    }

    #[test]
    fn registration_errors() {
        let store = DataStore::in_memory();
        store.register_data(DataCard::new("d", "tensor"), vec![1]).unwrap();
        assert!(matches!(
            store.register_data(DataCard::new("d", "tensor"), vec![2]),
            Err(DataError::DuplicateDataName(_))
        ));
        let no_modality = DataCard {
            data_name: "e".into(),
            attributes: BTreeMap::new(),
        };
        assert!(matches!(store.register_data(no_modality, vec![]), Err(DataError::MissingModality(_))));
        assert!(matches!(store.resolve("ghost"), Err(DataError::DataNotFound(_))));
        assert!(matches!(
            store.register_data(DataCard::new("../etc", "x"), vec![]),
            Err(DataError::InvalidName(_))
        ));
    }

    #[test]
    fn hundred_entries_are_listed() {
        let store = DataStore::in_memory();
        for i in 0..100 {
            store.register_data(DataCard::new(format!("d{i}"), "x"), vec![i as u8]).unwrap();
        }
        assert_eq!(store.list().len(), 100);
    }

    #[test]
    fn results_are_named_by_run_and_task() {
        let store = DataStore::in_memory();
        let env = IOEnvelope {
            data_name: String::new(),
            modality: "tensor".into(),
            payload: vec![9, 9],
            trace: vec!["m1".into(), "m2".into()],
        };
        let name = store.store_result("R", "A", &env).unwrap();
        assert_eq!(name, "R/A");
        assert_eq!(store.resolve("R/A").unwrap().payload, vec![9, 9]);
        let card = store.card("R/A").unwrap();
        assert_eq!(card.attributes["trace"], "m1,m2");
        assert_eq!(card.attributes["producer"], "m2");
        assert!(matches!(store.store_result("R", "A", &env), Err(DataError::DuplicateDataName(_))));
    }

    #[test]
    fn disk_store_reloads() {
        let dir = tempfile::tempdir().unwrap();
        {
            let store = DataStore::open(dir.path()).unwrap();
            store.register_data(DataCard::new("cell_trace", "timeseries"), b"abc".to_vec()).unwrap();
            store
                .store_result(
                    "run-1.1",
                    "probe",
                    &IOEnvelope {
                        data_name: String::new(),
                        modality: "metrics".into(),
                        payload: vec![1, 2, 3],
                        trace: vec!["m".into()],
                    },
                )
                .unwrap();
        }
        assert!(dir.path().join("cell_trace/card.json").exists());
        assert!(dir.path().join("run-1.1/probe/payload.bin").exists());
        let store = DataStore::open(dir.path()).unwrap();
        assert_eq!(store.len(), 2);
        assert_eq!(store.resolve("cell_trace").unwrap().payload, b"abc");
        assert_eq!(store.resolve("run-1.1/probe").unwrap().modality, "metrics");
    }

    proptest! {
        #[test]
        fn resolve_returns_registered_bytes(payloads in proptest::collection::vec(proptest::collection::vec(any::<u8>(), 0..64), 1..20)) {
            let store = DataStore::in_memory();
            let mut hashes = Vec::new();
            for (i, p) in payloads.iter().enumerate() {
                hashes.push(Sha256::digest(p));
                store.register_data(DataCard::new(format!("d{i}"), "bytes"), p.clone()).unwrap();
            }
            for (i, h) in hashes.iter().enumerate() {
                let env = store.resolve(&format!("d{i}")).unwrap();
                prop_assert_eq!(&Sha256::digest(&env.payload), h);
            }
        }
    }
}
