use super::{Explanation, LpxConfig, Mode};
use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, Triple};
use crate::kge::{lp, post_train_with, rank, KgeModel};

/// The first `limit` entities `c` (ascending id) whose completion of
/// `<c, p, ?>` is not the prediction's object.
pub fn comparison_set(model: &KgeModel, kg: &KnowledgeGraph, prediction: &Triple, limit: usize) -> Result<Vec<EntityId>> {
    if limit == 0 {
        return Err(Error::Argument("comparison set limit must be at least 1".into()));
    }
    let mut out = Vec::new();
    for c in kg.entities() {
        if out.len() == limit {
            break;
        }
        let query = crate::kg::Query {
            subject: c,
            predicate: prediction.predicate,
        };
        if lp(model, kg, query)? != prediction.object {
            out.push(c);
        }
    }
    Ok(out)
}

fn transplant(t: &Triple, from: EntityId, to: EntityId) -> Triple {
    let swap = |e: EntityId| if e == from { to } else { e };
    Triple::new(swap(t.subject), t.predicate, swap(t.object))
}

/// Scores candidates for one prediction, caching the reference ranks.
pub struct RelevanceScorer<'a> {
    model: &'a KgeModel,
    kg: &'a KnowledgeGraph,
    prediction: Triple,
    mode: Mode,
    epochs: usize,
    base_rank: f64,
    /// (entity, rank of <c, p, o> under the original model)
    comparison: Vec<(EntityId, f64)>,
}

impl<'a> RelevanceScorer<'a> {
    pub fn new(
        model: &'a KgeModel,
        kg: &'a KnowledgeGraph,
        prediction: &Triple,
        mode: Mode,
        config: &LpxConfig,
    ) -> Result<Self> {
        let base_rank = rank(model, kg, prediction)?.rank;
        let comparison = match mode {
            Mode::Necessary => Vec::new(),
            Mode::Sufficient => {
                let set = comparison_set(model, kg, prediction, config.comparison_limit)?;
                if set.is_empty() {
                    return Err(Error::Config(format!(
                        "sufficient relevance for {prediction} has an empty comparison set"
                    )));
                }
                set.into_iter()
                    .map(|c| {
                        let t = Triple::new(c, prediction.predicate, prediction.object);
                        rank(model, kg, &t).map(|r| (c, r.rank))
                    })
                    .collect::<Result<_>>()?
            }
        };
        Ok(RelevanceScorer {
            model,
            kg,
            prediction: *prediction,
            mode,
            epochs: config.post_train_epochs,
            base_rank,
            comparison,
        })
    }

    pub fn comparison_entities(&self) -> impl Iterator<Item = EntityId> + '_ {
        self.comparison.iter().map(|(c, _)| *c)
    }

    /// Necessary: rank after post-training without the candidate minus the
    /// original rank. Sufficient: mean rank improvement of `<c, p, o>` over
    /// the comparison entities after transplanting the candidate onto each.
    pub fn score(&self, candidate: &Explanation) -> Result<f64> {
        let s = self.prediction.subject;
        match self.mode {
            Mode::Necessary => {
                let post = post_train_with(self.model, self.kg, s, candidate.triples(), &[], self.epochs)?;
                Ok(rank(&post, self.kg, &self.prediction)?.rank - self.base_rank)
            }
            Mode::Sufficient => {
                let mut total = 0.0;
                for &(c, before) in &self.comparison {
                    let added: Vec<Triple> = candidate.triples().iter().map(|t| transplant(t, s, c)).collect();
                    let post = post_train_with(self.model, self.kg, c, &[], &added, self.epochs)?;
                    let target = Triple::new(c, self.prediction.predicate, self.prediction.object);
                    total += before - rank(&post, self.kg, &target)?.rank;
                }
                Ok(total / self.comparison.len() as f64)
            }
        }
    }
}

pub fn relevance(
    model: &KgeModel,
    kg: &KnowledgeGraph,
    prediction: &Triple,
    candidate: &Explanation,
    mode: Mode,
    config: &LpxConfig,
) -> Result<f64> {
    RelevanceScorer::new(model, kg, prediction, mode, config)?.score(candidate)
}
