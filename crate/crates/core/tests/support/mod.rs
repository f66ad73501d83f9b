//! Shared fixtures, generators and brute-force oracles for the integration
//! and acceptance tests. The oracles deliberately avoid the library's
//! staging and search code: paths and stages are enumerated from scratch.

#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::seq::SliceRandom;
use rand::Rng;
use sai_core::intent::{Intent, TaskRequest};
use sai_core::model_library::{CardIndex, ModelCard};
use sai_core::planner::{TaskGraph, TaskNode};
use sai_core::service::{Config, RunState, Service};

pub const WAIT: Option<Duration> = Some(Duration::from_secs(30));

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn read_fixture(rel: &str) -> String {
    std::fs::read_to_string(fixtures().join(rel)).unwrap()
}

fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), target).unwrap();
        }
    }
}

/// A service over copies of the fixture registry and data store, rooted in
/// a fresh temporary directory.
pub struct Harness {
    pub dir: tempfile::TempDir,
    pub config: Config,
}

impl Harness {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        copy_dir(&fixtures().join("models"), &dir.path().join("models"));
        copy_dir(&fixtures().join("data"), &dir.path().join("data"));
        std::fs::copy(fixtures().join("keywords.json"), dir.path().join("keywords.json")).unwrap();
        let config = Config {
            registry_paths: vec![dir.path().join("models")],
            keyword_table: dir.path().join("keywords.json"),
            data_dir: dir.path().join("data"),
            journal_dir: dir.path().join("journal"),
            ..Config::default()
        };
        Self { dir, config }
    }

    pub fn service(&self) -> Service {
        Service::open(self.config.clone()).unwrap()
    }
}

pub fn run_to_end(service: &Service, run_id: &str) -> RunState {
    let state = service.wait_for(run_id, WAIT).unwrap();
    assert!(state.phase.is_terminal(), "run {run_id} did not finish: {:?}", state.phase);
    state
}

/// Random DAG over `n` nodes with shuffled keys, edges only from lower to
/// higher generation index.
pub fn random_dag(rng: &mut impl Rng, n: usize, edge_p: f64, types: &[&str]) -> TaskGraph {
    let mut keys: Vec<String> = (0..n).map(|i| format!("k{}", (b'a' + i as u8) as char)).collect();
    keys.shuffle(rng);
    let nodes = (0..n)
        .map(|j| {
            let deps: Vec<String> = (0..j).filter(|_| rng.gen_bool(edge_p)).map(|i| keys[i].clone()).collect();
            let mut node = TaskNode::new(keys[j].clone(), *types.choose(rng).unwrap());
            node.depends_on = deps;
            node
        })
        .collect();
    TaskGraph::new("g-random", nodes)
}

pub fn index(cards: Vec<ModelCard>) -> CardIndex {
    cards.into_iter().map(|c| (c.model_name.clone(), c)).collect()
}

fn deps_of<'a>(graph: &'a TaskGraph, key: &str) -> BTreeSet<&'a str> {
    graph
        .nodes
        .iter()
        .find(|n| n.task_key == key)
        .map(|n| n.depends_on.iter().map(String::as_str).collect())
        .unwrap_or_default()
}

/// Every root-to-sink path, each listed root first.
pub fn all_paths(graph: &TaskGraph) -> Vec<Vec<String>> {
    let has_child: BTreeSet<&str> = graph
        .nodes
        .iter()
        .flat_map(|n| n.depends_on.iter().map(String::as_str))
        .collect();
    let mut out = Vec::new();
    fn walk(graph: &TaskGraph, key: &str, suffix: &mut Vec<String>, out: &mut Vec<Vec<String>>) {
        suffix.push(key.to_string());
        let deps = deps_of(graph, key);
        if deps.is_empty() {
            out.push(suffix.iter().rev().cloned().collect());
        }
        for d in deps {
            walk(graph, d, suffix, out);
        }
        suffix.pop();
    }
    for sink in graph.nodes.iter().filter(|n| !has_child.contains(n.task_key.as_str())) {
        walk(graph, &sink.task_key, &mut Vec::new(), &mut out);
    }
    out
}

/// Longest-path depth of every node, computed by plain recursion.
pub fn depths(graph: &TaskGraph) -> BTreeMap<String, usize> {
    fn depth(graph: &TaskGraph, key: &str) -> usize {
        deps_of(graph, key).into_iter().map(|d| depth(graph, d) + 1).max().unwrap_or(0)
    }
    graph.nodes.iter().map(|n| (n.task_key.clone(), depth(graph, &n.task_key))).collect()
}

/// Critical path by path enumeration: each path summed root first from 0.
pub fn oracle_critical_path(graph: &TaskGraph, latency: &BTreeMap<String, f64>) -> f64 {
    all_paths(graph)
        .iter()
        .map(|p| p.iter().fold(0.0f64, |acc, k| acc + latency[k]))
        .fold(0.0f64, f64::max)
}

/// Peak utilization by stage enumeration: each stage summed in key order
/// from 0.
pub fn oracle_peak(graph: &TaskGraph, util: &BTreeMap<String, f64>) -> f64 {
    let mut stages: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
    let d = depths(graph);
    for (k, depth) in &d {
        stages.entry(*depth).or_default().push(k);
    }
    stages
        .values()
        .map(|keys| {
            let mut keys = keys.clone();
            keys.sort();
            keys.iter().fold(0.0f64, |acc, k| acc + util[*k])
        })
        .fold(0.0f64, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCombination {
    pub assignment: BTreeMap<String, String>,
    pub critical: f64,
    pub peak: f64,
}

/// Brute-force selection: the full Cartesian product of same-type cards,
/// filtered on edge compatibility and budgets, sorted by
/// `(critical, peak, model names in task-key order)`, truncated to `k`.
pub fn oracle_select(graph: &TaskGraph, intent: &Intent, k: usize, cards: &CardIndex) -> Vec<OracleCombination> {
    let keys: Vec<&str> = graph.nodes.iter().map(|n| n.task_key.as_str()).collect();
    let options: Vec<Vec<&ModelCard>> = graph
        .nodes
        .iter()
        .map(|n| cards.values().filter(|c| c.task_type == n.task_type).collect())
        .collect();
    let mut feasible = Vec::new();
    let mut idx = vec![0usize; keys.len()];
    if options.iter().any(Vec::is_empty) {
        return feasible;
    }
    loop {
        let chosen: BTreeMap<&str, &ModelCard> = keys.iter().enumerate().map(|(i, k)| (*k, options[i][idx[i]])).collect();
        let compatible = graph.nodes.iter().all(|n| {
            n.depends_on.iter().all(|d| {
                let producer = chosen[d.as_str()];
                let consumer = chosen[n.task_key.as_str()];
                producer.produces.iter().any(|t| consumer.consumes.contains(t))
            })
        });
        if compatible {
            let latency = chosen.iter().map(|(k, c)| (k.to_string(), c.latency_ms)).collect();
            let util = chosen.iter().map(|(k, c)| (k.to_string(), c.resource_utilization)).collect();
            let critical = oracle_critical_path(graph, &latency);
            let peak = oracle_peak(graph, &util);
            let within = intent.latency_budget_ms.is_none_or(|b| critical <= b) && peak <= intent.utilization_budget;
            if within {
                feasible.push(OracleCombination {
                    assignment: chosen.iter().map(|(k, c)| (k.to_string(), c.model_name.clone())).collect(),
                    critical,
                    peak,
                });
            }
        }
        // odometer increment
        let mut i = 0;
        loop {
            if i == idx.len() {
                feasible.sort_by(compare);
                feasible.truncate(k);
                return feasible;
            }
            idx[i] += 1;
            if idx[i] < options[i].len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

fn compare(a: &OracleCombination, b: &OracleCombination) -> Ordering {
    a.critical
        .total_cmp(&b.critical)
        .then_with(|| a.peak.total_cmp(&b.peak))
        .then_with(|| a.assignment.values().cmp(b.assignment.values()))
}

/// A random card: one of `types`, latency in [0, 10), utilization in
/// [0, 0.6), random consumed and non-empty produced tag sets over `tags`.
pub fn random_card(rng: &mut impl Rng, name: String, types: &[&str], tags: &[&str]) -> ModelCard {
    let consumes: Vec<&str> = tags.iter().copied().filter(|_| rng.gen_bool(0.6)).collect();
    let mut produces: Vec<&str> = tags.iter().copied().filter(|_| rng.gen_bool(0.4)).collect();
    if produces.is_empty() {
        produces.push(tags.choose(rng).unwrap());
    }
    ModelCard::new(name, *types.choose(rng).unwrap(), rng.gen_range(0.0..10.0), rng.gen_range(0.0..0.6))
        .consuming(&consumes)
        .producing(&produces)
}

/// A random intent that satisfies every parser rule.
pub fn random_intent(rng: &mut impl Rng, id: usize) -> Intent {
    let n = rng.gen_range(1..=5);
    let keys: Vec<String> = (0..n).map(|i| format!("task_{id}_{i}")).collect();
    let task_requests = (0..n)
        .map(|j| TaskRequest {
            task_key: keys[j].clone(),
            task_type: ["probe", "allocate", "route"].choose(rng).unwrap().to_string(),
            depends_on: (0..j).filter(|_| rng.gen_bool(0.4)).map(|i| keys[i].clone()).collect(),
            input_data: if rng.gen_bool(0.3) { vec![format!("data-{}", rng.gen_range(0..9))] } else { vec![] },
        })
        .collect();
    let goals = ["", "steer traffic", "allocate \"slices\" \\ fast", "ünïcode goal", "line\nbreak"];
    Intent {
        intent_id: format!("intent-{id}"),
        goal: goals.choose(rng).unwrap().to_string(),
        task_requests,
        latency_budget_ms: Some(if rng.gen_bool(0.2) { rng.gen_range(0..100) as f64 } else { rng.gen_range(0.0..1e4) }),
        utilization_budget: rng.gen_range(0.0..=1.0),
        combination_count: rng.gen_range(1..=10),
    }
}
