//! Experimental setup files.
//!
//! A setup is a CSV file with a header row and one experiment per data row:
//!
//! ```text
//! kg_name,kge_name,lpx_config,eval_config,metric_names
//! DB100K,ComplEx,{ method=Kelpie },"{ prompting=zero_shot, llm=Llama3.1 }",
//! ```
//!
//! `lpx_config` is only allowed (and then required) in comparison mode.
//! Config cells are either JSON objects or `{ key=value, ... }` lists whose
//! values are read as JSON when possible and as bare strings otherwise.
//! Omitted keys take their defaults.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use kgxbench::fsv::EvalConfig;
use kgxbench::ModelKind;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{BenchError, Result};
use crate::registry::ExplainerRegistry;

/// A config cell with normalized keys, ordered by key.
pub type ConfigCell = BTreeMap<String, Value>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Validation,
    Comparison,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Validation => "validation",
            Mode::Comparison => "comparison",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const CLASSIFICATION_REPORT: &str = "classification_report";
pub const AVERAGE_FSV: &str = "average_fsv";
pub const FSV_DISTRIBUTION: &str = "fsv_distribution";

/// Explanation method of a comparison row.
#[derive(Debug, Clone, PartialEq)]
pub struct LpxChoice {
    /// Registry key, lowercase.
    pub method: String,
    /// Rendering of the cell used in artifact names.
    pub label: String,
    /// Fully resolved config; two rows with equal params share the task.
    pub params: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalChoice {
    pub label: String,
    pub config: EvalConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricChoice {
    pub names: Vec<String>,
    /// F-beta weight of the classification report.
    pub beta: f64,
}

impl MetricChoice {
    pub fn label(&self) -> String {
        let mut label = self.names.join("+");
        if self.beta != 1.0 {
            label.push_str(&format!("+beta={}", self.beta));
        }
        label
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SetupRow {
    /// 1-based data row number.
    pub row: usize,
    pub kg_name: String,
    pub kge: ModelKind,
    /// `None` in validation mode, where explanations come from the
    /// ground-truth dataset.
    pub lpx: Option<LpxChoice>,
    pub eval: EvalChoice,
    pub metrics: MetricChoice,
}

impl SetupRow {
    pub fn kge_name(&self) -> &'static str {
        self.kge.canonical_name()
    }

    pub fn lpx_label(&self) -> &str {
        self.lpx.as_ref().map(|l| l.label.as_str()).unwrap_or(GROUND_TRUTH_LABEL)
    }
}

pub const GROUND_TRUTH_LABEL: &str = "method=ground_truth";

/// Parses one config cell into a key-ordered map.
pub fn parse_cell(cell: &str) -> std::result::Result<ConfigCell, String> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(ConfigCell::new());
    }
    if let Ok(map) = serde_json::from_str::<serde_json::Map<String, Value>>(cell) {
        return Ok(map.into_iter().map(|(k, v)| (normalize_key(&k), v)).collect());
    }
    let inner = match (cell.strip_prefix('{'), cell.ends_with('}')) {
        (Some(rest), true) => &rest[..rest.len() - 1],
        (None, false) => cell,
        _ => return Err(format!("unbalanced braces in '{cell}'")),
    };
    let mut out = ConfigCell::new();
    for item in split_items(inner)? {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (key, value) = item
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, found '{item}'"))?;
        let key = normalize_key(key);
        if key.is_empty() {
            return Err(format!("empty key in '{item}'"));
        }
        let value = value.trim();
        let value = serde_json::from_str::<Value>(value).unwrap_or_else(|_| Value::String(value.to_owned()));
        if out.insert(key.clone(), value).is_some() {
            return Err(format!("key '{key}' given twice"));
        }
    }
    Ok(out)
}

fn normalize_key(key: &str) -> String {
    key.trim().to_ascii_lowercase()
}

/// Splits on commas outside double quotes.
fn split_items(s: &str) -> std::result::Result<Vec<&str>, String> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut quoted = false;
    let mut escaped = false;
    for (i, c) in s.char_indices() {
        match c {
            _ if escaped => escaped = false,
            '\\' if quoted => escaped = true,
            '"' => quoted = !quoted,
            ',' if !quoted => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if quoted {
        return Err(format!("unterminated quote in '{s}'"));
    }
    out.push(&s[start..]);
    Ok(out)
}

/// `k=v,k=v` in key order, strings unquoted.
pub fn cell_label(cell: &ConfigCell) -> String {
    cell.iter()
        .map(|(k, v)| match v {
            Value::String(s) => format!("{k}={s}"),
            other => format!("{k}={other}"),
        })
        .collect::<Vec<_>>()
        .join(",")
}

fn normalize_eval_cell(mut cell: ConfigCell) -> ConfigCell {
    if let Some(v) = cell.remove("llm") {
        cell.entry("llm_model".into()).or_insert(v);
    }
    if let Some(Value::String(p)) = cell.get_mut("prompting") {
        *p = p.trim().to_ascii_lowercase().replace(['-', ' '], "_");
    }
    cell
}

/// Resolves an eval cell against the defaults.
pub fn eval_choice(cell: ConfigCell, seed_override: Option<u64>) -> std::result::Result<EvalChoice, String> {
    let cell = normalize_eval_cell(cell);
    let label = cell_label(&cell);
    let mut object: serde_json::Map<String, Value> = cell.into_iter().collect();
    if let Some(seed) = seed_override {
        object.insert("seed".into(), seed.into());
    }
    let config: EvalConfig = serde_json::from_value(Value::Object(object)).map_err(|e| format!("eval_config: {e}"))?;
    config.validate().map_err(|e| format!("eval_config: {e}"))?;
    Ok(EvalChoice { label, config })
}

/// Resolves an lpx cell through the explainer registry.
pub fn lpx_choice(
    mut cell: ConfigCell,
    explainers: &ExplainerRegistry,
    seed_override: Option<u64>,
) -> std::result::Result<LpxChoice, String> {
    let method = match cell.get("method") {
        Some(Value::String(m)) => m.trim().to_ascii_lowercase(),
        Some(other) => return Err(format!("lpx_config: method must be a string, found {other}")),
        None => return Err("lpx_config: missing method".into()),
    };
    cell.insert("method".into(), Value::String(method.clone()));
    let label = cell_label(&cell);
    if let Some(seed) = seed_override {
        cell.insert("seed".into(), seed.into());
    }
    let params = explainers
        .resolve(&method, &cell)
        .map_err(|e| format!("lpx_config: {e}"))?;
    Ok(LpxChoice { method, label, params })
}

/// Parses a metric_names cell: a JSON array or names separated by commas,
/// semicolons or whitespace. `beta=<x>` sets the F-beta weight.
pub fn metric_choice(cell: &str, mode: Mode) -> std::result::Result<MetricChoice, String> {
    let cell = cell.trim();
    let raw: Vec<String> = if cell.starts_with('[') {
        serde_json::from_str(cell).map_err(|e| format!("metric_names: {e}"))?
    } else {
        cell.trim_matches(|c| c == '{' || c == '}')
            .split(|c: char| c == ',' || c == ';' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(str::to_owned)
            .collect()
    };
    let mut names = Vec::new();
    let mut beta = 1.0;
    for name in raw {
        let name = name.trim().to_ascii_lowercase();
        if let Some(b) = name.strip_prefix("beta=") {
            beta = b.parse::<f64>().map_err(|_| format!("metric_names: bad beta '{b}'"))?;
            if !(beta.is_finite() && beta > 0.0) {
                return Err(format!("metric_names: beta must be positive, found {b}"));
            }
            continue;
        }
        let allowed: &[&str] = match mode {
            Mode::Validation => &[CLASSIFICATION_REPORT],
            Mode::Comparison => &[AVERAGE_FSV, FSV_DISTRIBUTION],
        };
        if !allowed.contains(&name.as_str()) {
            return Err(format!("metric '{name}' is not available in {mode} mode (expected one of {allowed:?})"));
        }
        if !names.contains(&name) {
            names.push(name);
        }
    }
    if names.is_empty() {
        names = match mode {
            Mode::Validation => vec![CLASSIFICATION_REPORT.to_owned()],
            Mode::Comparison => vec![AVERAGE_FSV.to_owned(), FSV_DISTRIBUTION.to_owned()],
        };
    }
    names.sort();
    Ok(MetricChoice { names, beta })
}

const KNOWN_COLUMNS: [&str; 5] = ["kg_name", "kge_name", "lpx_config", "eval_config", "metric_names"];

/// Reads and parses a setup file.
pub fn parse_setup(
    path: &Path,
    mode: Mode,
    explainers: &ExplainerRegistry,
    seed_override: Option<u64>,
) -> Result<Vec<SetupRow>> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    parse_setup_str(&text, path, mode, explainers, seed_override)
}

pub fn parse_setup_str(
    text: &str,
    path: &Path,
    mode: Mode,
    explainers: &ExplainerRegistry,
    seed_override: Option<u64>,
) -> Result<Vec<SetupRow>> {
    let err = |row: usize, message: String| BenchError::Setup { path: path.to_owned(), row, message };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| err(0, format!("cannot read header: {e}")))?
        .iter()
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    if headers.iter().all(|h| h.is_empty()) {
        return Err(err(0, "missing header row".into()));
    }
    let mut column = BTreeMap::new();
    for (i, h) in headers.iter().enumerate() {
        if !KNOWN_COLUMNS.contains(&h.as_str()) {
            return Err(err(0, format!("unknown column '{h}'")));
        }
        if column.insert(h.as_str(), i).is_some() {
            return Err(err(0, format!("duplicate column '{h}'")));
        }
    }
    for required in ["kg_name", "kge_name", "eval_config"] {
        if !column.contains_key(required) {
            return Err(err(0, format!("missing required column '{required}'")));
        }
    }
    match (mode, column.contains_key("lpx_config")) {
        (Mode::Validation, true) => {
            return Err(err(0, "validation setups take no lpx_config column; explanations come from the ground truth".into()))
        }
        (Mode::Comparison, false) => return Err(err(0, "comparison setups need an lpx_config column".into())),
        _ => {}
    }

    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| err(row, e.to_string()))?;
        if record.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        if record.len() > headers.len() {
            return Err(err(row, format!("{} cells but {} columns", record.len(), headers.len())));
        }
        let get = |name: &str| column.get(name).and_then(|&c| record.get(c)).unwrap_or("").trim();

        let kg_name = get("kg_name");
        if kg_name.is_empty() {
            return Err(err(row, "empty kg_name".into()));
        }
        let kge = ModelKind::from_name(get("kge_name"))
            .ok_or_else(|| err(row, format!("unknown kge_name '{}'", get("kge_name"))))?;
        let lpx = match mode {
            Mode::Validation => None,
            Mode::Comparison => {
                let cell = parse_cell(get("lpx_config")).map_err(|e| err(row, format!("lpx_config: {e}")))?;
                Some(lpx_choice(cell, explainers, seed_override).map_err(|e| err(row, e))?)
            }
        };
        let eval_cell = parse_cell(get("eval_config")).map_err(|e| err(row, format!("eval_config: {e}")))?;
        let eval = eval_choice(eval_cell, seed_override).map_err(|e| err(row, e))?;
        let metrics = metric_choice(get("metric_names"), mode).map_err(|e| err(row, e))?;
        rows.push(SetupRow { row, kg_name: kg_name.to_owned(), kge, lpx, eval, metrics });
    }
    if rows.is_empty() {
        return Err(err(0, "no experiments".into()));
    }
    Ok(rows)
}
