//! One experiment run: parse, instantiate, execute, aggregate.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::catalog::KgCatalog;
use crate::dag::{instantiate_dag, Dag, Settings};
use crate::error::{BenchError, Result};
use crate::executor::{execute, RunReport, TaskStatus};
use crate::registry::{ExplainerRegistry, VerifierRegistry};
use crate::setup::{parse_setup, Mode, SetupRow};
use crate::store::{write_atomic, ArtifactStore};
use crate::tasks::Engine;

pub const METRICS_FILE: &str = "metrics.json";
pub const REPORT_FILE: &str = "run_report.jsonl";
pub const ARTIFACT_DIR: &str = "artifacts";

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub workdir: PathBuf,
    pub setup: PathBuf,
    pub data_root: PathBuf,
    pub max_parallel: usize,
    pub seed_override: Option<u64>,
    pub settings: Settings,
}

impl RunOptions {
    /// Defaults for a working directory: `<workdir>/<mode>.csv` as setup
    /// and `<workdir>/data` as data root.
    pub fn new(workdir: impl Into<PathBuf>, mode: Mode) -> Self {
        let workdir = workdir.into();
        RunOptions {
            setup: workdir.join(format!("{mode}.csv")),
            data_root: workdir.join("data"),
            workdir,
            max_parallel: 1,
            seed_override: None,
            settings: Settings::default(),
        }
    }
}

/// Per-row entry of `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowMetrics {
    pub kg_name: String,
    pub kge_name: String,
    pub lpx_config: String,
    pub eval_config: String,
    pub metric_names: Vec<String>,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub rows: Vec<SetupRow>,
    pub dag: Dag,
    pub report: RunReport,
    /// Keyed by row identity: the metrics artifact name without its prefix.
    pub metrics: BTreeMap<String, RowMetrics>,
    pub metrics_path: PathBuf,
}

impl RunOutcome {
    pub fn failed(&self) -> bool {
        self.report.has_failures()
    }

    pub fn row_key(&self, row_index: usize) -> &str {
        let name = &self.dag.nodes[self.dag.targets[row_index]].output_name;
        name.strip_prefix("metrics.").unwrap_or(name)
    }

    /// Fixed-width per-row summary.
    pub fn summary_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<4} {:<12} {:<8} {:<24} {:<32} {:<7} result",
            "row", "kg", "kge", "lpx_config", "eval_config", "status"
        );
        for (i, row) in self.rows.iter().enumerate() {
            let m = &self.metrics[self.row_key(i)];
            let result = match &m.metrics {
                Some(v) => summary_cell(v),
                None => m.error.clone().unwrap_or_default(),
            };
            let _ = writeln!(
                out,
                "{:<4} {:<12} {:<8} {:<24} {:<32} {:<7} {}",
                row.row, m.kg_name, m.kge_name, m.lpx_config, m.eval_config, m.status, result
            );
        }
        out
    }
}

fn summary_cell(metrics: &Value) -> String {
    let mut parts = vec![format!("n={}", metrics["n"])];
    if let Some(acc) = metrics.pointer("/classification_report/accuracy").and_then(Value::as_f64) {
        parts.push(format!("accuracy={acc:.3}"));
    }
    if let Some(avg) = metrics.get("average_fsv").and_then(Value::as_f64) {
        parts.push(format!("average_fsv={avg:.3}"));
    }
    if let Some(d) = metrics.get("fsv_distribution").and_then(Value::as_object) {
        let shares: Vec<String> = d.iter().map(|(k, v)| format!("{k}:{:.2}", v.as_f64().unwrap_or(0.0))).collect();
        parts.push(format!("distribution={{{}}}", shares.join(",")));
    }
    parts.join(" ")
}

/// Runs a whole setup with the default registries.
pub fn run(mode: Mode, options: &RunOptions) -> Result<RunOutcome> {
    run_with(mode, options, ExplainerRegistry::default(), VerifierRegistry::default())
}

pub fn run_with(
    mode: Mode,
    options: &RunOptions,
    explainers: ExplainerRegistry,
    verifiers: VerifierRegistry,
) -> Result<RunOutcome> {
    if !options.setup.is_file() {
        return Err(BenchError::Setup {
            path: options.setup.clone(),
            row: 0,
            message: "setup file not found".into(),
        });
    }
    if !verifiers.contains(&options.settings.verifier) {
        return Err(BenchError::Unknown { what: "verifier", name: options.settings.verifier.clone() });
    }
    let rows = parse_setup(&options.setup, mode, &explainers, options.seed_override)?;
    let mut settings = options.settings.clone();
    if let Some(seed) = options.seed_override {
        settings.hyper_params.seed = seed;
    }
    let dag = instantiate_dag(&rows, mode, &settings)?;
    fs::create_dir_all(&options.workdir).map_err(|e| BenchError::io(&options.workdir, e))?;
    let store = ArtifactStore::open(options.workdir.join(ARTIFACT_DIR))?;
    let engine = Engine::new(KgCatalog::new(&options.data_root), explainers, verifiers, settings);
    let report = execute(&dag, &store, &engine, options.max_parallel)?;
    report.write(&options.workdir.join(REPORT_FILE))?;

    let mut metrics = BTreeMap::new();
    for (row, &target) in rows.iter().zip(&dag.targets) {
        let node = &dag.nodes[target];
        let record = &report.records[target];
        let ok = matches!(record.status, TaskStatus::Executed | TaskStatus::CacheHit);
        let value = if ok {
            Some(serde_json::from_slice(&store.read(&node.output_name)?)?)
        } else {
            None
        };
        let key = node.output_name.strip_prefix("metrics.").unwrap_or(&node.output_name).to_owned();
        metrics.insert(
            key,
            RowMetrics {
                kg_name: row.kg_name.clone(),
                kge_name: row.kge_name().to_owned(),
                lpx_config: row.lpx_label().to_owned(),
                eval_config: row.eval.label.clone(),
                metric_names: row.metrics.names.clone(),
                status: if ok { "ok" } else { "failed" }.to_owned(),
                metrics: value,
                error: if ok { None } else { first_error(&dag, &report, target) },
            },
        );
    }
    let metrics_path = options.workdir.join(METRICS_FILE);
    let mut bytes = serde_json::to_vec_pretty(&metrics)?;
    bytes.push(b'\n');
    write_atomic(&metrics_path, &bytes)?;
    Ok(RunOutcome { rows, dag, report, metrics, metrics_path })
}

/// Error of the failed task upstream of (or at) `node`.
fn first_error(dag: &Dag, report: &RunReport, mut node: usize) -> Option<String> {
    loop {
        let r = &report.records[node];
        if r.status == TaskStatus::Failed {
            return Some(format!("{} failed: {}", r.task, r.error.clone().unwrap_or_default()));
        }
        node = *dag.nodes[node].requires.first()?;
    }
}

/// Reads a `metrics.json` back.
pub fn read_metrics(path: &Path) -> Result<BTreeMap<String, RowMetrics>> {
    let bytes = fs::read(path).map_err(|e| BenchError::io(path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}
