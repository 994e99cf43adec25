//! Ground-truth explanation datasets.
//!
//! One JSON object per line:
//!
//! ```text
//! {"prediction": ["s", "p", "o"], "explanation": [["s", "p", "x"], ...], "rating": 0.8}
//! {"prediction": ["s", "p", "o"], "explanation": [...], "quality": -1}
//! {"prediction": ["s", "p", "o"], "explanation": [...]}
//! ```
//!
//! Real ratings are discretized over the whole file; records without any
//! rating are rule-derived and receive quality +1.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{discretize_ratings, KnowledgeGraph, LabeledTriple, Triple};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthRecord {
    pub prediction: LabeledTriple,
    pub explanation: Vec<LabeledTriple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rating: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quality: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruthEntry {
    pub prediction: Triple,
    /// Sorted, deduplicated.
    pub explanation: Vec<Triple>,
    pub quality: i8,
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub entries: Vec<GroundTruthEntry>,
}

impl GroundTruth {
    pub fn qualities(&self) -> Vec<i8> {
        self.entries.iter().map(|e| e.quality).collect()
    }
}

pub fn load_ground_truth(kg: &KnowledgeGraph, path: &Path) -> Result<GroundTruth> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ground_truth(kg, &text, path)
}

pub fn parse_ground_truth(kg: &KnowledgeGraph, text: &str, path: &Path) -> Result<GroundTruth> {
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: GroundTruthRecord = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push((i + 1, record));
    }
    if records.is_empty() {
        return Err(Error::Validation(format!("{} holds no ground-truth entries", path.display())));
    }

    let mut ratings = Vec::new();
    for (line, r) in &records {
        match (r.rating, r.quality) {
            (Some(_), Some(_)) => {
                return Err(Error::Parse {
                    path: path.to_owned(),
                    line: *line,
                    message: "record carries both rating and quality".into(),
                })
            }
            (Some(x), None) => {
                if !(0.0..=1.0).contains(&x) {
                    return Err(Error::Range(format!("{}:{line}: rating {x} is outside [0, 1]", path.display())));
                }
                ratings.push(x);
            }
            (None, Some(q)) if !(-1..=1).contains(&q) => {
                return Err(Error::Range(format!("{}:{line}: quality {q} is not in {{-1, 0, 1}}", path.display())));
            }
            _ => {}
        }
    }
    let mut discretized = if ratings.is_empty() {
        Vec::new()
    } else {
        discretize_ratings(&ratings)?
    }
    .into_iter();

    let mut entries = Vec::with_capacity(records.len());
    for (line, r) in records {
        let prediction = kg.resolve(&r.prediction)?;
        let mut explanation = Vec::with_capacity(r.explanation.len());
        for labels in &r.explanation {
            let t = kg.resolve(labels)?;
            if !kg.is_train(&t) {
                return Err(Error::Validation(format!(
                    "{}:{line}: explanation triple ({}, {}, {}) is not in the training split",
                    path.display(),
                    labels[0],
                    labels[1],
                    labels[2]
                )));
            }
            explanation.push(t);
        }
        explanation.sort();
        explanation.dedup();
        let quality = match (r.rating, r.quality) {
            (Some(_), _) => discretized.next().expect("one label per rating"),
            (None, Some(q)) => q as i8,
            (None, None) => 1,
        };
        entries.push(GroundTruthEntry {
            prediction,
            explanation,
            quality,
        });
    }
    Ok(GroundTruth { entries })
}
