//! Model-card library.
//!
//! A card names a model, the task type it serves, its static latency and
//! resource utilization, and the modality tags it consumes and produces.
//! Cards are matched to tasks by `task_type` and to each other along graph
//! edges by tag intersection.

mod select;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use select::{aggregate_metrics, select_combinations, AggregateError, AggregateMetrics, ModelCombination, SelectionError};

use crate::planner::TaskNode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelCard {
    pub model_name: String,
    pub task_type: String,
    pub latency_ms: f64,
    pub resource_utilization: f64,
    #[serde(default)]
    pub consumes: BTreeSet<String>,
    #[serde(default)]
    pub produces: BTreeSet<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub library_name: Option<String>,
}

impl ModelCard {
    pub fn new(model_name: impl Into<String>, task_type: impl Into<String>, latency_ms: f64, resource_utilization: f64) -> Self {
        Self {
            model_name: model_name.into(),
            task_type: task_type.into(),
            latency_ms,
            resource_utilization,
            consumes: BTreeSet::new(),
            produces: BTreeSet::new(),
            library_name: None,
        }
    }

    pub fn consuming(mut self, tags: &[&str]) -> Self {
        self.consumes.extend(tags.iter().map(|t| t.to_string()));
        self
    }

    pub fn producing(mut self, tags: &[&str]) -> Self {
        self.produces.extend(tags.iter().map(|t| t.to_string()));
        self
    }

    pub fn validate(&self) -> Result<(), RegistryError> {
        let invalid = |msg: String| Err(RegistryError::InvalidCard {
            model_name: self.model_name.clone(),
            message: msg,
        });
        if self.model_name.trim().is_empty() {
            return invalid("model_name must be non-empty".into());
        }
        if self.task_type.trim().is_empty() {
            return invalid("task_type must be non-empty".into());
        }
        if !(self.latency_ms.is_finite() && self.latency_ms >= 0.0) {
            return invalid(format!("latency_ms must be finite and >= 0, got {}", self.latency_ms));
        }
        if !(0.0..=1.0).contains(&self.resource_utilization) {
            return invalid(format!(
                "resource_utilization must lie in [0, 1], got {}",
                self.resource_utilization
            ));
        }
        Ok(())
    }
}

/// True iff some tag produced upstream is consumed downstream.
pub fn pairwise_compatible(producer: &ModelCard, consumer: &ModelCard) -> bool {
    !producer.produces.is_disjoint(&consumer.consumes)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RegistryError {
    #[error("model {0} is already registered")]
    DuplicateModelName(String),
    #[error("invalid model card {model_name:?}: {message}")]
    InvalidCard { model_name: String, message: String },
    #[error("cannot load model cards: {0}")]
    Load(String),
}

/// Card lookup by model name.
pub type CardIndex = BTreeMap<String, ModelCard>;

/// Concurrent-read registry; registrations serialize on the write lock.
#[derive(Default)]
pub struct ModelRegistry {
    cards: RwLock<CardIndex>,
}

impl ModelRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register_model(&self, card: ModelCard) -> Result<(), RegistryError> {
        card.validate()?;
        let mut cards = self.cards.write().unwrap_or_else(|e| e.into_inner());
        if cards.contains_key(&card.model_name) {
            return Err(RegistryError::DuplicateModelName(card.model_name));
        }
        cards.insert(card.model_name.clone(), card);
        Ok(())
    }

    pub fn get(&self, model_name: &str) -> Option<ModelCard> {
        self.cards.read().unwrap_or_else(|e| e.into_inner()).get(model_name).cloned()
    }

    pub fn len(&self) -> usize {
        self.cards.read().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All cards ordered by model name.
    pub fn list(&self) -> Vec<ModelCard> {
        self.cards.read().unwrap_or_else(|e| e.into_inner()).values().cloned().collect()
    }

    pub fn list_by_task_type(&self) -> BTreeMap<String, Vec<ModelCard>> {
        let mut out: BTreeMap<String, Vec<ModelCard>> = BTreeMap::new();
        for card in self.list() {
            out.entry(card.task_type.clone()).or_default().push(card);
        }
        out
    }

    pub fn task_types(&self) -> BTreeSet<String> {
        self.cards
            .read()
            .unwrap_or_else(|e| e.into_inner())
            .values()
            .map(|c| c.task_type.clone())
            .collect()
    }

    pub fn snapshot(&self) -> CardIndex {
        self.cards.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn candidates_for_task(&self, node: &TaskNode) -> Vec<ModelCard> {
        candidates_for_task(&self.snapshot(), node)
    }

    /// Registers every `*.json` card in `dir`, in file-name order.
    pub fn load_dir(&self, dir: impl AsRef<Path>) -> Result<usize, RegistryError> {
        let dir = dir.as_ref();
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| RegistryError::Load(format!("{}: {e}", dir.display())))?
            .filter_map(Result::ok)
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        for path in &paths {
            let card = load_card(path)?;
            self.register_model(card)?;
        }
        Ok(paths.len())
    }
}

pub fn load_card(path: impl AsRef<Path>) -> Result<ModelCard, RegistryError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| RegistryError::Load(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| RegistryError::Load(format!("{}: {e}", path.display())))
}

/// Cards whose task type matches the node, by ascending `(latency_ms, model_name)`.
pub fn candidates_for_task(cards: &CardIndex, node: &TaskNode) -> Vec<ModelCard> {
    let mut out: Vec<ModelCard> = cards.values().filter(|c| c.task_type == node.task_type).cloned().collect();
    out.sort_by(|a, b| a.latency_ms.total_cmp(&b.latency_ms).then_with(|| a.model_name.cmp(&b.model_name)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn boundary_card_registers_and_duplicates_fail() {
        let reg = ModelRegistry::new();
        reg.register_model(ModelCard::new("m", "probe", 0.0, 0.0)).unwrap();
        assert_eq!(reg.get("m").unwrap().latency_ms, 0.0);
        assert_eq!(
            reg.register_model(ModelCard::new("m", "probe", 1.0, 0.1)),
            Err(RegistryError::DuplicateModelName("m".into()))
        );
    }

    #[test]
    fn invalid_cards_are_rejected() {
        let reg = ModelRegistry::new();
        for card in [
            ModelCard::new("a", "probe", -1.0, 0.0),
            ModelCard::new("b", "probe", 1.0, 1.5),
            ModelCard::new("c", "probe", f64::NAN, 0.0),
            ModelCard::new("", "probe", 1.0, 0.0),
        ] {
            assert!(matches!(reg.register_model(card), Err(RegistryError::InvalidCard { .. })));
        }
        assert!(reg.is_empty());
    }

    #[test]
    fn partition_by_task_type_counts_every_card() {
        let reg = ModelRegistry::new();
        for i in 0..50 {
            reg.register_model(ModelCard::new(format!("m{i:02}"), format!("t{}", i % 7), i as f64, 0.1))
                .unwrap();
        }
        let parts = reg.list_by_task_type();
        assert_eq!(parts.len(), 7);
        assert_eq!(parts.values().map(Vec::len).sum::<usize>(), 50);
        assert_eq!(parts["t0"].len(), 8);
    }

    #[test]
    fn candidate_order() {
        let reg = ModelRegistry::new();
        assert!(reg.candidates_for_task(&TaskNode::new("a", "probe")).is_empty());
        reg.register_model(ModelCard::new("slow", "probe", 5.0, 0.1)).unwrap();
        reg.register_model(ModelCard::new("fast", "probe", 3.0, 0.1)).unwrap();
        reg.register_model(ModelCard::new("other", "route", 1.0, 0.1)).unwrap();
        let names: Vec<String> = reg
            .candidates_for_task(&TaskNode::new("a", "probe"))
            .into_iter()
            .map(|c| c.model_name)
            .collect();
        assert_eq!(names, ["fast", "slow"]);
    }

    #[test]
    fn pairwise_examples() {
        let p = ModelCard::new("p", "a", 1.0, 0.1).producing(&["tensor"]);
        let c = ModelCard::new("c", "b", 1.0, 0.1).consuming(&["tensor"]);
        assert!(pairwise_compatible(&p, &c));
        let empty = ModelCard::new("e", "a", 1.0, 0.1);
        assert!(!pairwise_compatible(&empty, &c));
    }

    #[test]
    fn card_file_rejects_unknown_keys() {
        let ok = r#"{"model_name":"m","task_type":"t","latency_ms":1,"resource_utilization":0.5,"consumes":["x"],"produces":["y"]}"#;
        assert!(serde_json::from_str::<ModelCard>(ok).is_ok());
        let bad = r#"{"model_name":"m","task_type":"t","latency_ms":1,"resource_utilization":0.5,"speed":3}"#;
        assert!(serde_json::from_str::<ModelCard>(bad).is_err());
    }

    #[test]
    fn load_dir_reads_json_cards() {
        let dir = tempfile::tempdir().unwrap();
        for (i, t) in ["probe", "route"].iter().enumerate() {
            let card = ModelCard::new(format!("m{i}"), *t, 1.0, 0.2).producing(&["x"]);
            std::fs::write(dir.path().join(format!("m{i}.json")), serde_json::to_string(&card).unwrap()).unwrap();
        }
        std::fs::write(dir.path().join("README.txt"), "ignored").unwrap();
        let reg = ModelRegistry::new();
        assert_eq!(reg.load_dir(dir.path()).unwrap(), 2);
        assert_eq!(reg.task_types().len(), 2);
    }

    fn tag_set() -> impl Strategy<Value = BTreeSet<String>> {
        proptest::collection::btree_set(prop_oneof![Just("a"), Just("b"), Just("c"), Just("d")].prop_map(String::from), 0..4)
    }

    proptest! {
        #[test]
        fn pairwise_matches_set_intersection(p in tag_set(), c in tag_set()) {
            let mut prod = ModelCard::new("p", "t", 1.0, 0.0);
            prod.produces = p.clone();
            let mut cons = ModelCard::new("c", "t", 1.0, 0.0);
            cons.consumes = c.clone();
            let brute = p.iter().any(|tag| c.iter().any(|other| other == tag));
            prop_assert_eq!(pairwise_compatible(&prod, &cons), brute);
        }

        #[test]
        fn candidates_equal_filter_then_sort(
            specs in proptest::collection::vec((0usize..3, 0u32..20), 0..12),
            wanted in 0usize..3,
        ) {
            let reg = ModelRegistry::new();
            for (i, (t, lat)) in specs.iter().enumerate() {
                reg.register_model(ModelCard::new(format!("m{i}"), format!("t{t}"), *lat as f64, 0.0)).unwrap();
            }
            let got: Vec<String> = reg
                .candidates_for_task(&TaskNode::new("x", format!("t{wanted}")))
                .into_iter()
                .map(|c| c.model_name)
                .collect();
            let mut oracle: Vec<(u32, String)> = specs
                .iter()
                .enumerate()
                .filter(|(_, (t, _))| *t == wanted)
                .map(|(i, (_, lat))| (*lat, format!("m{i}")))
                .collect();
            oracle.sort();
            let oracle: Vec<String> = oracle.into_iter().map(|(_, n)| n).collect();
            prop_assert_eq!(got, oracle);
        }
    }
}
