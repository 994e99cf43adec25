use std::cmp::Ordering;

use super::{baseline_candidates, kelpie_candidates, Explanation, LpxConfig, RelevanceScorer};
use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, Triple};
use crate::kge::KgeModel;

/// Argmax of `relevances`; ties go to the smaller explanation, then to the
/// lexicographically smaller one. NaN scores never win.
pub fn best_explanation(prediction: &Triple, candidates: &[Explanation], relevances: &[f64]) -> Result<Explanation> {
    if candidates.len() != relevances.len() {
        return Err(Error::Argument(format!(
            "{} candidates but {} relevance values",
            candidates.len(),
            relevances.len()
        )));
    }
    let key = |r: f64| if r.is_nan() { f64::NEG_INFINITY } else { r };
    candidates
        .iter()
        .zip(relevances)
        .max_by(|(ca, &ra), (cb, &rb)| {
            key(ra)
                .partial_cmp(&key(rb))
                .unwrap_or(Ordering::Equal)
                // max_by keeps the last maximum, so reverse the tie order
                .then_with(|| cb.cmp(ca))
        })
        .map(|(c, _)| c.clone())
        .ok_or_else(|| Error::Explanation(format!("no candidate explanations for {prediction}")))
}

/// Outcome of explaining one prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplainedPrediction {
    pub prediction: Triple,
    /// `None` marks a failed explanation; it is carried through evaluation
    /// as the empty explanation.
    pub explanation: Option<Explanation>,
    pub relevance: Option<f64>,
    pub failure: Option<String>,
}

/// A pluggable explanation method.
pub trait Explainer: Send + Sync {
    fn explain_one(&self, kg: &KnowledgeGraph, model: &KgeModel, prediction: &Triple) -> Result<(Explanation, Option<f64>)>;
}

/// The built-in methods selected by [`LpxConfig::method`].
#[derive(Debug, Clone)]
pub struct BuiltinExplainer {
    pub config: LpxConfig,
}

impl Explainer for BuiltinExplainer {
    fn explain_one(&self, kg: &KnowledgeGraph, model: &KgeModel, prediction: &Triple) -> Result<(Explanation, Option<f64>)> {
        let config = &self.config;
        if config.method.is_random() {
            let set = baseline_candidates(kg, prediction, config)?;
            return set
                .candidates
                .into_iter()
                .next()
                .map(|c| (c, None))
                .ok_or_else(|| Error::Explanation(format!("no triples to sample for {prediction}")));
        }
        let set = kelpie_candidates(kg, prediction, config)?;
        if set.is_empty() {
            return Err(Error::Explanation(format!("subject of {prediction} has no training triples")));
        }
        let scorer = RelevanceScorer::new(model, kg, prediction, config.mode, config)?;
        let relevances = set
            .candidates
            .iter()
            .map(|c| scorer.score(c))
            .collect::<Result<Vec<_>>>()?;
        let best = best_explanation(prediction, &set.candidates, &relevances)?;
        let idx = set.candidates.iter().position(|c| *c == best).expect("best comes from candidates");
        Ok((best, Some(relevances[idx])))
    }
}

/// Runs `explainer` on every prediction; failures are recorded per item.
pub fn explain_with(
    explainer: &dyn Explainer,
    predictions: &[Triple],
    kg: &KnowledgeGraph,
    model: &KgeModel,
) -> Vec<ExplainedPrediction> {
    predictions
        .iter()
        .map(|p| match explainer.explain_one(kg, model, p) {
            Ok((explanation, relevance)) => ExplainedPrediction {
                prediction: *p,
                explanation: Some(explanation),
                relevance,
                failure: None,
            },
            Err(e) => {
                log::warn!("explanation of {p} failed: {e}");
                ExplainedPrediction {
                    prediction: *p,
                    explanation: None,
                    relevance: None,
                    failure: Some(e.to_string()),
                }
            }
        })
        .collect()
}

pub fn explain(
    predictions: &[Triple],
    kg: &KnowledgeGraph,
    model: &KgeModel,
    config: &LpxConfig,
) -> Vec<ExplainedPrediction> {
    explain_with(&BuiltinExplainer { config: config.clone() }, predictions, kg, model)
}
