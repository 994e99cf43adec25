//! Task definitions and DAG instantiation.
//!
//! Every setup row expands to the chain
//! `TUNE -> TRAIN -> RANK -> SELECT -> EXPLAIN -> EVALUATE -> METRICS`.
//! Tasks with the same kind and parameters are the same node, so rows that
//! share a KG and model share everything up to SELECT.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use kgxbench::HyperParams;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{BenchError, Result};
use crate::setup::{Mode, SetupRow, GROUND_TRUTH_LABEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TaskKind {
    Tune,
    Train,
    Rank,
    Select,
    Explain,
    Evaluate,
    Metrics,
}

impl TaskKind {
    pub const ALL: [TaskKind; 7] = [
        TaskKind::Tune,
        TaskKind::Train,
        TaskKind::Rank,
        TaskKind::Select,
        TaskKind::Explain,
        TaskKind::Evaluate,
        TaskKind::Metrics,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Tune => "TUNE",
            TaskKind::Train => "TRAIN",
            TaskKind::Rank => "RANK",
            TaskKind::Select => "SELECT",
            TaskKind::Explain => "EXPLAIN",
            TaskKind::Evaluate => "EVALUATE",
            TaskKind::Metrics => "METRICS",
        }
    }

    /// Prefix of the output artifact name.
    pub fn output_prefix(self) -> &'static str {
        match self {
            TaskKind::Tune => "hp_config",
            TaskKind::Train => "kge",
            TaskKind::Rank => "ranked",
            TaskKind::Select => "predictions",
            TaskKind::Explain => "explanations",
            TaskKind::Evaluate => "scores",
            TaskKind::Metrics => "metrics",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Run-wide knobs that are not part of a setup row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    /// Number of sampled configs; 0 skips the search and trains with
    /// `hyper_params` as given.
    pub tune_budget: usize,
    /// Base hyperparameters; the search only changes the grid fields.
    pub hyper_params: HyperParams,
    pub rank_threshold: f64,
    pub max_predictions: usize,
    pub verifier: String,
    pub verifier_url: Option<String>,
    /// Verifier batches in flight at once within one EVALUATE task.
    pub verifier_in_flight: usize,
    pub verifier_attempts: u32,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            tune_budget: 4,
            hyper_params: HyperParams::default(),
            rank_threshold: 1.0,
            max_predictions: 100,
            verifier: "mock".into(),
            verifier_url: None,
            verifier_in_flight: 4,
            verifier_attempts: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    pub kind: TaskKind,
    /// Canonical parameters; together with `kind` this is the identity.
    pub params: BTreeMap<String, Value>,
    pub output_name: String,
    /// Node indices this task requires.
    pub requires: Vec<usize>,
    /// Artifacts the body reads, all produced by ancestors.
    pub reads: Vec<String>,
    pub kg_name: String,
    pub mode: Mode,
}

impl TaskSpec {
    pub fn identity(&self) -> String {
        identity(self.kind, &self.params)
    }

    pub fn param_str(&self, key: &str) -> Option<&str> {
        self.params.get(key).and_then(Value::as_str)
    }
}

fn identity(kind: TaskKind, params: &BTreeMap<String, Value>) -> String {
    format!("{kind}{}", serde_json::to_string(params).expect("params serialize"))
}

#[derive(Debug, Clone)]
pub struct Dag {
    pub mode: Mode,
    pub nodes: Vec<TaskSpec>,
    /// METRICS node of each setup row, in row order.
    pub targets: Vec<usize>,
    by_identity: HashMap<String, usize>,
    by_name: HashMap<String, usize>,
}

/// Replaces characters that do not belong in file names.
pub fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._=,+-".contains(c) { c } else { '_' })
        .collect()
}

impl Dag {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node_by_name(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn count(&self, kind: TaskKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    /// Dependency edges `(required, dependent)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.nodes
            .iter()
            .enumerate()
            .flat_map(|(i, n)| n.requires.iter().map(move |&r| (r, i)))
            .collect()
    }

    pub fn dependents(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.nodes.len()];
        for (from, to) in self.edges() {
            out[from].push(to);
        }
        out
    }

    /// Kahn's algorithm; `None` if there is a cycle.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let mut indegree: Vec<usize> = self.nodes.iter().map(|n| n.requires.len()).collect();
        let dependents = self.dependents();
        let mut ready: Vec<usize> = (0..self.nodes.len()).filter(|&i| indegree[i] == 0).rev().collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(i) = ready.pop() {
            order.push(i);
            for &d in dependents[i].iter().rev() {
                indegree[d] -= 1;
                if indegree[d] == 0 {
                    ready.push(d);
                }
            }
        }
        (order.len() == self.nodes.len()).then_some(order)
    }

    fn add(&mut self, spec: TaskSpec) -> Result<usize> {
        let id = spec.identity();
        if let Some(&i) = self.by_identity.get(&id) {
            return Ok(i);
        }
        if let Some(&other) = self.by_name.get(&spec.output_name) {
            return Err(BenchError::artifact(
                &spec.output_name,
                format!("name shared by two different tasks: {} and {id}", self.nodes[other].identity()),
            ));
        }
        let i = self.nodes.len();
        self.by_identity.insert(id, i);
        self.by_name.insert(spec.output_name.clone(), i);
        self.nodes.push(spec);
        Ok(i)
    }
}

/// Expands setup rows into the deduplicated task graph.
pub fn instantiate_dag(rows: &[SetupRow], mode: Mode, settings: &Settings) -> Result<Dag> {
    let mut dag = Dag {
        mode,
        nodes: Vec::new(),
        targets: Vec::new(),
        by_identity: HashMap::new(),
        by_name: HashMap::new(),
    };
    for row in rows {
        let kg = row.kg_name.as_str();
        let kge = row.kge_name();
        let base = |extra: &[(&str, Value)]| {
            let mut p: BTreeMap<String, Value> = [("kg_name", json!(kg)), ("kge_name", json!(kge))]
                .into_iter()
                .map(|(k, v)| (k.to_owned(), v))
                .collect();
            p.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
            p
        };
        let stem = format!("{kg}_{kge}");
        let lpx_stem = format!("{stem}_{}", row.lpx_label());
        let eval_stem = format!("{lpx_stem}_{}", row.eval.label);
        let metrics_stem = format!("{eval_stem}_{}", row.metrics.label());
        let name = |kind: TaskKind, stem: &str| sanitize(&format!("{}.{stem}", kind.output_prefix()));

        let lpx_params = match &row.lpx {
            Some(l) => json!({"method": l.method, "params": l.params}),
            None => json!(GROUND_TRUTH_LABEL),
        };
        let chain: [(TaskKind, BTreeMap<String, Value>, String, Vec<TaskKind>); 7] = [
            (
                TaskKind::Tune,
                base(&[
                    ("tune_budget", json!(settings.tune_budget)),
                    ("hyper_params", serde_json::to_value(&settings.hyper_params)?),
                ]),
                name(TaskKind::Tune, &stem),
                vec![],
            ),
            (TaskKind::Train, base(&[]), name(TaskKind::Train, &stem), vec![TaskKind::Tune]),
            (TaskKind::Rank, base(&[]), name(TaskKind::Rank, &stem), vec![TaskKind::Train]),
            (
                TaskKind::Select,
                base(&[
                    ("rank_threshold", json!(settings.rank_threshold)),
                    ("max_predictions", json!(settings.max_predictions)),
                ]),
                name(TaskKind::Select, &stem),
                vec![TaskKind::Rank],
            ),
            (
                TaskKind::Explain,
                base(&[("lpx_config", lpx_params.clone())]),
                name(TaskKind::Explain, &lpx_stem),
                match mode {
                    Mode::Comparison => vec![TaskKind::Select, TaskKind::Train],
                    Mode::Validation => vec![],
                },
            ),
            (
                TaskKind::Evaluate,
                base(&[
                    ("lpx_config", lpx_params.clone()),
                    ("eval_config", serde_json::to_value(&row.eval.config)?),
                    ("verifier", json!({"name": settings.verifier, "url": settings.verifier_url})),
                ]),
                name(TaskKind::Evaluate, &eval_stem),
                vec![TaskKind::Explain, TaskKind::Train],
            ),
            (
                TaskKind::Metrics,
                base(&[
                    ("lpx_config", lpx_params),
                    ("eval_config", serde_json::to_value(&row.eval.config)?),
                    ("verifier", json!({"name": settings.verifier, "url": settings.verifier_url})),
                    ("metric_names", json!(row.metrics.names)),
                    ("beta", json!(row.metrics.beta)),
                ]),
                name(TaskKind::Metrics, &metrics_stem),
                vec![TaskKind::Evaluate],
            ),
        ];

        let mut names: BTreeMap<TaskKind, String> = BTreeMap::new();
        let mut previous = None;
        for (kind, params, output_name, reads) in chain {
            let spec = TaskSpec {
                kind,
                params,
                output_name,
                requires: previous.into_iter().collect(),
                reads: reads.iter().map(|k| names[k].clone()).collect(),
                kg_name: kg.to_owned(),
                mode,
            };
            let i = dag.add(spec)?;
            names.insert(kind, dag.nodes[i].output_name.clone());
            previous = Some(i);
        }
        dag.targets.push(previous.expect("chain is non-empty"));
    }
    Ok(dag)
}
