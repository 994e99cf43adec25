//! Aggregates over FSV vectors.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsv::FsvVector;

pub const LABELS: [i8; 3] = [-1, 0, 1];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f_beta: f64,
    /// Number of gold instances of the class.
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub per_class: BTreeMap<i8, ClassScores>,
    pub accuracy: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FsvSummary {
    pub average: f64,
    pub distribution: BTreeMap<i8, f64>,
}

/// `(1 + β²)PR / (β²P + R)`, 0 when both are 0.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    if precision == 0.0 && recall == 0.0 {
        return 0.0;
    }
    let b2 = beta * beta;
    (1.0 + b2) * precision * recall / (b2 * precision + recall)
}

/// Per-class precision, recall and F-beta of `predicted` against `gold`.
///
/// A class never predicted has precision 0, a class absent from `gold` has
/// recall 0.
pub fn classification_report(predicted: &FsvVector, gold: &FsvVector, beta: f64) -> Result<ClassificationReport> {
    if predicted.len() != gold.len() {
        return Err(Error::Argument(format!(
            "predicted has {} values, gold has {}",
            predicted.len(),
            gold.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::Argument("cannot score empty vectors".into()));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::Argument(format!("beta must be positive, got {beta}")));
    }
    // confusion[gold][predicted]
    let mut confusion = [[0usize; 3]; 3];
    for (&p, &g) in predicted.values().iter().zip(gold.values()) {
        confusion[(g + 1) as usize][(p + 1) as usize] += 1;
    }
    let mut per_class = BTreeMap::new();
    for (i, &label) in LABELS.iter().enumerate() {
        let tp = confusion[i][i];
        let predicted_n: usize = (0..3).map(|g| confusion[g][i]).sum();
        let gold_n: usize = confusion[i].iter().sum();
        let precision = if predicted_n == 0 { 0.0 } else { tp as f64 / predicted_n as f64 };
        let recall = if gold_n == 0 { 0.0 } else { tp as f64 / gold_n as f64 };
        per_class.insert(
            label,
            ClassScores { precision, recall, f_beta: f_beta(precision, recall, beta), support: gold_n },
        );
    }
    let hits: usize = (0..3).map(|i| confusion[i][i]).sum();
    Ok(ClassificationReport { per_class, accuracy: hits as f64 / predicted.len() as f64, beta })
}

/// Share of each label in {-1, 0, +1}; absent labels map to 0.
pub fn fsv_distribution(v: &FsvVector) -> Result<BTreeMap<i8, f64>> {
    if v.is_empty() {
        return Err(Error::Argument("FSV distribution of an empty vector".into()));
    }
    let n = v.len() as f64;
    Ok(LABELS
        .iter()
        .map(|&l| (l, v.values().iter().filter(|&&x| x == l).count() as f64 / n))
        .collect())
}

/// Mean FSV, computed as the label-weighted sum of the distribution so the
/// two agree bit for bit.
pub fn average_fsv(v: &FsvVector) -> Result<f64> {
    let dist = fsv_distribution(v)?;
    Ok(dist.iter().map(|(&l, &p)| l as f64 * p).sum())
}

pub fn summarize(v: &FsvVector) -> Result<FsvSummary> {
    Ok(FsvSummary { average: average_fsv(v)?, distribution: fsv_distribution(v)? })
}
