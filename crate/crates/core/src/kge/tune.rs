use rand::seq::SliceRandom;

use super::{filtered_mrr, train, HyperParams, ModelKind};
use crate::error::{Error, Result};
use crate::kg::KnowledgeGraph;
use crate::seed;

pub const DIMENSION_GRID: [usize; 3] = [32, 64, 128];
pub const LEARNING_RATE_GRID: [f64; 3] = [1e-3, 5e-3, 1e-2];
pub const MARGIN_GRID: [f64; 2] = [1.0, 2.0];
pub const NEGATIVES_GRID: [usize; 2] = [5, 10];

const TUNE_STREAM: u64 = 3;

#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub best: HyperParams,
    /// Every sampled config with its validation filtered MRR, in sample order.
    pub trials: Vec<(HyperParams, f64)>,
}

fn grid(base: &HyperParams) -> Vec<HyperParams> {
    let mut out = Vec::new();
    for &dimension in &DIMENSION_GRID {
        for &learning_rate in &LEARNING_RATE_GRID {
            for &margin in &MARGIN_GRID {
                for &negatives_per_positive in &NEGATIVES_GRID {
                    out.push(HyperParams {
                        dimension,
                        learning_rate,
                        margin,
                        negatives_per_positive,
                        ..base.clone()
                    });
                }
            }
        }
    }
    out
}

/// Random search with default non-grid settings.
pub fn tune(kg: &KnowledgeGraph, kind: ModelKind, budget: usize, seed: u64) -> Result<HyperParams> {
    let base = HyperParams {
        seed,
        ..HyperParams::default()
    };
    tune_with(kg, kind, budget, &base).map(|o| o.best)
}

/// Samples `budget` distinct grid points (seeded by `base.seed`), trains
/// each and keeps the one with the highest validation filtered MRR. Ties
/// go to the earlier sample. Fields outside the grid come from `base`.
pub fn tune_with(kg: &KnowledgeGraph, kind: ModelKind, budget: usize, base: &HyperParams) -> Result<TuneOutcome> {
    if budget == 0 {
        return Err(Error::Argument("tuning budget must be at least 1".into()));
    }
    if kg.validation().is_empty() {
        return Err(Error::Argument(format!("{} has an empty validation split", kg.name())));
    }
    let mut candidates = grid(base);
    candidates.shuffle(&mut seed::rng(seed::derive(base.seed, &[TUNE_STREAM])));
    candidates.truncate(budget);

    let mut trials = Vec::with_capacity(candidates.len());
    let mut best: Option<(usize, f64)> = None;
    for (i, hp) in candidates.into_iter().enumerate() {
        let model = train(kg, kind, &hp)?;
        let mrr = filtered_mrr(&model, kg, kg.validation())?;
        log::debug!("tune {} trial {i}: mrr {mrr:.4} with {hp:?}", kg.name());
        if best.map_or(true, |(_, b)| mrr > b) {
            best = Some((i, mrr));
        }
        trials.push((hp, mrr));
    }
    let (idx, _) = best.expect("budget >= 1");
    Ok(TuneOutcome {
        best: trials[idx].0.clone(),
        trials,
    })
}
