//! Task bodies and artifact formats.
//!
//! | artifact       | format                                              |
//! |----------------|-----------------------------------------------------|
//! | `hp_config.*`  | JSON hyperparameters                                |
//! | `kge.*`        | model checkpoint                                    |
//! | `ranked.*`     | JSONL `{triple, rank}` over the test split          |
//! | `predictions.*`| tab-separated triples                               |
//! | `explanations.*` | JSONL [`ExplanationRecord`]                       |
//! | `scores.*`     | JSONL [`ScoreRecord`]                               |
//! | `metrics.*`    | JSON object                                         |

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use kgxbench::fsv::{evaluate_texts, verbalize, EvalConfig, EvalRuntime, FsvVector, RetryPolicy};
use kgxbench::kg::{parse_triples, LabeledTriple};
use kgxbench::kge::{checkpoint, rank_all, select_predictions, train, tune_with, RankedTriple};
use kgxbench::lpx::explain_with;
use kgxbench::metrics::{classification_report, summarize};
use kgxbench::{HyperParams, KgeModel, KnowledgeGraph, ModelKind, Triple};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::catalog::KgCatalog;
use crate::dag::{Settings, TaskKind, TaskSpec};
use crate::error::{BenchError, Result};
use crate::executor::TaskRunner;
use crate::registry::{ExplainerRegistry, VerifierArgs, VerifierRegistry};
use crate::setup::{Mode, AVERAGE_FSV, CLASSIFICATION_REPORT, FSV_DISTRIBUTION};
use crate::store::ArtifactStore;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedRecord {
    pub triple: LabeledTriple,
    pub rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationRecord {
    pub prediction: LabeledTriple,
    pub explanation: Vec<LabeledTriple>,
    pub method: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub relevance: Option<f64>,
    /// Gold label, ground-truth explanations only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<i8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub prediction: LabeledTriple,
    pub lp_answer: String,
    pub fsv: i8,
    /// Raw verifier answers.
    pub without: String,
    pub with: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<i8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

pub fn to_jsonl<T: Serialize>(records: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("record serializes");
        out.push(b'\n');
    }
    out
}

pub fn from_jsonl<T: for<'de> Deserialize<'de>>(name: &str, text: &str) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| BenchError::artifact(name, format!("line {}: {e}", i + 1))))
        .collect()
}

/// The built-in task bodies.
pub struct Engine {
    pub catalog: KgCatalog,
    pub explainers: ExplainerRegistry,
    pub verifiers: VerifierRegistry,
    pub settings: Settings,
    kgs: Mutex<HashMap<String, Arc<KnowledgeGraph>>>,
    fingerprints: Mutex<HashMap<(String, bool), String>>,
}

impl Engine {
    pub fn new(catalog: KgCatalog, explainers: ExplainerRegistry, verifiers: VerifierRegistry, settings: Settings) -> Self {
        Engine {
            catalog,
            explainers,
            verifiers,
            settings,
            kgs: Mutex::new(HashMap::new()),
            fingerprints: Mutex::new(HashMap::new()),
        }
    }

    fn kg(&self, name: &str) -> Result<Arc<KnowledgeGraph>> {
        let mut kgs = self.kgs.lock().expect("kg cache lock");
        if let Some(kg) = kgs.get(name) {
            return Ok(Arc::clone(kg));
        }
        let kg = Arc::new(self.catalog.load(name)?);
        kgs.insert(name.to_owned(), Arc::clone(&kg));
        Ok(kg)
    }

    fn model(&self, store: &ArtifactStore, name: &str) -> Result<KgeModel> {
        checkpoint::from_bytes(&store.read(name)?).map_err(|e| BenchError::artifact(name, e))
    }

    fn kind(task: &TaskSpec) -> Result<ModelKind> {
        let name = task.param_str("kge_name").unwrap_or_default();
        ModelKind::from_name(name).ok_or_else(|| BenchError::Unknown { what: "model", name: name.to_owned() })
    }

    fn param<T: for<'de> Deserialize<'de>>(task: &TaskSpec, key: &str) -> Result<T> {
        let value = task.params.get(key).cloned().unwrap_or(Value::Null);
        serde_json::from_value(value).map_err(|e| BenchError::artifact(&task.output_name, format!("parameter {key}: {e}")))
    }

    fn read_input(task: &TaskSpec, kind: TaskKind) -> &str {
        let prefix = format!("{}.", kind.output_prefix());
        task.reads
            .iter()
            .find(|r| r.starts_with(&prefix))
            .map(String::as_str)
            .expect("task reads its declared inputs")
    }

    fn tune(&self, task: &TaskSpec) -> Result<Vec<u8>> {
        let kg = self.kg(&task.kg_name)?;
        let budget: usize = Self::param(task, "tune_budget")?;
        let base: HyperParams = Self::param(task, "hyper_params")?;
        let hp = if budget == 0 { base } else { tune_with(&kg, Self::kind(task)?, budget, &base)?.best };
        let mut out = serde_json::to_vec_pretty(&hp)?;
        out.push(b'\n');
        Ok(out)
    }

    fn train(&self, task: &TaskSpec, store: &ArtifactStore) -> Result<Vec<u8>> {
        let kg = self.kg(&task.kg_name)?;
        let name = Self::read_input(task, TaskKind::Tune);
        let hp: HyperParams = serde_json::from_slice(&store.read(name)?).map_err(|e| BenchError::artifact(name, e))?;
        let model = train(&kg, Self::kind(task)?, &hp)?;
        Ok(checkpoint::to_bytes(&model))
    }

    fn rank(&self, task: &TaskSpec, store: &ArtifactStore) -> Result<Vec<u8>> {
        let kg = self.kg(&task.kg_name)?;
        let model = self.model(store, Self::read_input(task, TaskKind::Train))?;
        let ranked = rank_all(&model, &kg, kg.test())?;
        let records: Vec<RankedRecord> = ranked
            .iter()
            .map(|r| RankedRecord { triple: kg.label_triple(&r.triple), rank: r.rank })
            .collect();
        Ok(to_jsonl(&records))
    }

    fn select(&self, task: &TaskSpec, store: &ArtifactStore) -> Result<Vec<u8>> {
        let kg = self.kg(&task.kg_name)?;
        let name = Self::read_input(task, TaskKind::Rank);
        let records: Vec<RankedRecord> = from_jsonl(name, &store.read_string(name)?)?;
        let ranked = records
            .iter()
            .map(|r| Ok(RankedTriple { triple: kg.resolve(&r.triple)?, rank: r.rank }))
            .collect::<Result<Vec<_>>>()?;
        let threshold: f64 = Self::param(task, "rank_threshold")?;
        let n_max: usize = Self::param(task, "max_predictions")?;
        let mut out = String::new();
        for t in select_predictions(&ranked, threshold, n_max) {
            let [s, p, o] = kg.label_triple(&t);
            out.push_str(&format!("{s}\t{p}\t{o}\n"));
        }
        Ok(out.into_bytes())
    }

    fn explain(&self, task: &TaskSpec, store: &ArtifactStore) -> Result<Vec<u8>> {
        let kg = self.kg(&task.kg_name)?;
        if task.mode == Mode::Validation {
            let gt = self.catalog.load_ground_truth(&kg)?;
            let records: Vec<ExplanationRecord> = gt
                .entries
                .iter()
                .map(|e| ExplanationRecord {
                    prediction: kg.label_triple(&e.prediction),
                    explanation: e.explanation.iter().map(|t| kg.label_triple(t)).collect(),
                    method: "ground_truth".into(),
                    mode: None,
                    relevance: None,
                    quality: Some(e.quality),
                    failure: None,
                })
                .collect();
            return Ok(to_jsonl(&records));
        }
        let lpx = task.params.get("lpx_config").cloned().unwrap_or(Value::Null);
        let method = lpx["method"].as_str().unwrap_or_default().to_owned();
        let params = lpx.get("params").cloned().unwrap_or(Value::Null);
        let explainer = self.explainers.build(&method, &params)?;
        let name = Self::read_input(task, TaskKind::Select);
        let predictions = parse_triples(&store.read_string(name)?, Path::new(name))?
            .iter()
            .map(|t| kg.resolve(t))
            .collect::<kgxbench::Result<Vec<Triple>>>()?;
        let model = self.model(store, Self::read_input(task, TaskKind::Train))?;
        let mode = params.get("mode").and_then(Value::as_str).map(str::to_owned);
        let records: Vec<ExplanationRecord> = explain_with(explainer.as_ref(), &predictions, &kg, &model)
            .into_iter()
            .map(|x| ExplanationRecord {
                prediction: kg.label_triple(&x.prediction),
                explanation: x
                    .explanation
                    .map(|e| e.triples().iter().map(|t| kg.label_triple(t)).collect())
                    .unwrap_or_default(),
                method: method.clone(),
                mode: mode.clone(),
                relevance: x.relevance,
                quality: None,
                failure: x.failure,
            })
            .collect();
        Ok(to_jsonl(&records))
    }

    fn evaluate(&self, task: &TaskSpec, store: &ArtifactStore) -> Result<Vec<u8>> {
        let kg = self.kg(&task.kg_name)?;
        let model = self.model(store, Self::read_input(task, TaskKind::Train))?;
        let name = Self::read_input(task, TaskKind::Explain);
        let records: Vec<ExplanationRecord> = from_jsonl(name, &store.read_string(name)?)?;
        let mut predictions = Vec::with_capacity(records.len());
        let mut texts = Vec::with_capacity(records.len());
        for r in &records {
            predictions.push(kg.resolve(&r.prediction)?);
            let triples = r.explanation.iter().map(|t| kg.resolve(t)).collect::<kgxbench::Result<Vec<_>>>()?;
            texts.push(verbalize(&kg, &triples));
        }
        let config: EvalConfig = Self::param(task, "eval_config")?;
        let verifier_name = task.params["verifier"]["name"].as_str().unwrap_or_default().to_owned();
        let url = task.params["verifier"]["url"].as_str();
        let verifier = self.verifiers.build(&verifier_name, &VerifierArgs { url, eval: &config })?;
        let runtime = EvalRuntime {
            max_in_flight: self.settings.verifier_in_flight.max(1),
            retry: RetryPolicy { max_attempts: self.settings.verifier_attempts.max(1), ..RetryPolicy::default() },
        };
        let scores = evaluate_texts(&predictions, &texts, &kg, &model, verifier.as_ref(), &config, &runtime)?;
        let out: Vec<ScoreRecord> = scores
            .iter()
            .zip(&records)
            .map(|(s, r)| {
                let errors: Vec<&str> = [&s.without.error, &s.with.error].into_iter().flatten().map(String::as_str).collect();
                ScoreRecord {
                    prediction: r.prediction.clone(),
                    lp_answer: kg.entity_label(s.lp_answer).to_owned(),
                    fsv: s.fsv,
                    without: s.without.raw_answer.clone(),
                    with: s.with.raw_answer.clone(),
                    gold: r.quality,
                    error: (!errors.is_empty()).then(|| errors.join("; ")),
                }
            })
            .collect();
        Ok(to_jsonl(&out))
    }

    fn metrics(&self, task: &TaskSpec, store: &ArtifactStore) -> Result<Vec<u8>> {
        let name = Self::read_input(task, TaskKind::Evaluate);
        let scores: Vec<ScoreRecord> = from_jsonl(name, &store.read_string(name)?)?;
        if scores.is_empty() {
            return Err(BenchError::artifact(name, "no scored predictions to aggregate"));
        }
        let names: Vec<String> = Self::param(task, "metric_names")?;
        let beta: f64 = Self::param(task, "beta")?;
        let fsv = FsvVector::new(scores.iter().map(|s| s.fsv).collect())?;
        let mut out = serde_json::Map::new();
        out.insert("n".into(), json!(scores.len()));
        if names.iter().any(|n| n == CLASSIFICATION_REPORT) {
            let gold = scores
                .iter()
                .map(|s| s.gold.ok_or_else(|| BenchError::artifact(name, "score without a gold label")))
                .collect::<Result<Vec<i8>>>()?;
            let report = classification_report(&fsv, &FsvVector::new(gold)?, beta)?;
            out.insert(CLASSIFICATION_REPORT.into(), serde_json::to_value(report)?);
        }
        let summary = summarize(&fsv)?;
        if names.iter().any(|n| n == AVERAGE_FSV) {
            out.insert(AVERAGE_FSV.into(), json!(summary.average));
        }
        if names.iter().any(|n| n == FSV_DISTRIBUTION) {
            out.insert(FSV_DISTRIBUTION.into(), serde_json::to_value(&summary.distribution)?);
        }
        let mut bytes = serde_json::to_vec_pretty(&Value::Object(out))?;
        bytes.push(b'\n');
        Ok(bytes)
    }
}

impl TaskRunner for Engine {
    fn external_fingerprint(&self, task: &TaskSpec) -> Result<String> {
        let with_gt = task.mode == Mode::Validation && task.kind >= TaskKind::Explain;
        let key = (task.kg_name.clone(), with_gt);
        if let Some(f) = self.fingerprints.lock().expect("fingerprint lock").get(&key) {
            return Ok(f.clone());
        }
        let f = self.catalog.fingerprint(&task.kg_name, with_gt)?;
        self.fingerprints.lock().expect("fingerprint lock").insert(key, f.clone());
        Ok(f)
    }

    fn run(&self, task: &TaskSpec, store: &ArtifactStore) -> Result<Vec<u8>> {
        match task.kind {
            TaskKind::Tune => self.tune(task),
            TaskKind::Train => self.train(task, store),
            TaskKind::Rank => self.rank(task, store),
            TaskKind::Select => self.select(task, store),
            TaskKind::Explain => self.explain(task, store),
            TaskKind::Evaluate => self.evaluate(task, store),
            TaskKind::Metrics => self.metrics(task, store),
        }
    }
}
