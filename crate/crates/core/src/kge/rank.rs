use serde::{Deserialize, Serialize};

use super::KgeModel;
use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, Query, Split, Triple};

const LP_FILTER: &[Split] = &[Split::Train, Split::Validation];
const RANK_FILTER: &[Split] = &[Split::Train, Split::Validation, Split::Test];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankedTriple {
    pub triple: Triple,
    /// Realistic filtered rank, `>= 1`, possibly a half-integer.
    pub rank: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankBounds {
    pub optimistic: usize,
    pub pessimistic: usize,
    pub candidates: usize,
}

impl RankBounds {
    pub fn realistic(&self) -> f64 {
        (self.optimistic + self.pessimistic) as f64 / 2.0
    }
}

fn check_model(model: &KgeModel, kg: &KnowledgeGraph) -> Result<()> {
    if model.fits(kg) {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "model shape {}x{} does not match {} ({} entities, {} relations)",
            model.num_entities(),
            model.num_relations(),
            kg.name(),
            kg.num_entities(),
            kg.num_relations()
        )))
    }
}

fn lp_mask(kg: &KnowledgeGraph, query: Query) -> Vec<bool> {
    let mut keep = vec![true; kg.num_entities()];
    for o in kg.known_objects(query, LP_FILTER) {
        keep[o.index()] = false;
    }
    keep
}

/// Filtered query completion: the highest-scoring object that does not
/// already complete the query in the training or validation split.
///
/// Ties go to the smaller entity id. If every entity is filtered out the
/// unfiltered argmax is returned.
pub fn lp(model: &KgeModel, kg: &KnowledgeGraph, query: Query) -> Result<EntityId> {
    check_model(model, kg)?;
    kg.check_entity(query.subject)?;
    kg.check_relation(query.predicate)?;
    let scores = model.score_objects(query)?;
    let keep = lp_mask(kg, query);
    let argmax = |filtered: bool| {
        let mut best: Option<(usize, f64)> = None;
        for (i, &s) in scores.iter().enumerate() {
            if filtered && !keep[i] {
                continue;
            }
            match best {
                Some((_, b)) if s <= b => {}
                _ => best = Some((i, s)),
            }
        }
        best.map(|(i, _)| EntityId(i as u32))
    };
    argmax(true)
        .or_else(|| argmax(false))
        .ok_or_else(|| Error::Argument(format!("{} has no entities", kg.name())))
}

/// The `m` best objects for `query` under the same filter as [`lp`], best
/// first, ties by smaller id. The first element is `lp(model, kg, query)`.
pub fn top_candidates(model: &KgeModel, kg: &KnowledgeGraph, query: Query, m: usize) -> Result<Vec<EntityId>> {
    let answer = lp(model, kg, query)?;
    let scores = model.score_objects(query)?;
    let keep = lp_mask(kg, query);
    let mut pool: Vec<usize> = (0..scores.len())
        .filter(|&i| keep[i] && i != answer.index())
        .collect();
    pool.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut out = vec![answer];
    out.extend(pool.into_iter().take(m.saturating_sub(1)).map(|i| EntityId(i as u32)));
    out.truncate(m);
    Ok(out)
}

/// Optimistic and pessimistic filtered ranks of `triple`'s object.
pub fn rank_bounds(model: &KgeModel, kg: &KnowledgeGraph, triple: &Triple) -> Result<RankBounds> {
    check_model(model, kg)?;
    kg.check_triple(triple)?;
    let scores = model.score_objects(triple.query())?;
    let mut keep = vec![true; kg.num_entities()];
    for o in kg.known_objects(triple.query(), RANK_FILTER) {
        keep[o.index()] = false;
    }
    keep[triple.object.index()] = true;
    let target = scores[triple.object.index()];
    let (mut better, mut tied, mut candidates) = (0, 0, 0);
    for (i, &s) in scores.iter().enumerate() {
        if !keep[i] {
            continue;
        }
        candidates += 1;
        if i == triple.object.index() {
            continue;
        }
        if s > target {
            better += 1;
        } else if s == target {
            tied += 1;
        }
    }
    Ok(RankBounds {
        optimistic: better + 1,
        pessimistic: better + tied + 1,
        candidates,
    })
}

/// Realistic filtered rank of the object of `triple`.
pub fn rank(model: &KgeModel, kg: &KnowledgeGraph, triple: &Triple) -> Result<RankedTriple> {
    let bounds = rank_bounds(model, kg, triple)?;
    Ok(RankedTriple {
        triple: *triple,
        rank: bounds.realistic(),
    })
}

pub fn rank_all(model: &KgeModel, kg: &KnowledgeGraph, triples: &[Triple]) -> Result<Vec<RankedTriple>> {
    triples.iter().map(|t| rank(model, kg, t)).collect()
}

/// Mean reciprocal realistic filtered rank over `triples` (0 for an empty list).
pub fn filtered_mrr(model: &KgeModel, kg: &KnowledgeGraph, triples: &[Triple]) -> Result<f64> {
    if triples.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for t in triples {
        total += 1.0 / rank(model, kg, t)?.rank;
    }
    Ok(total / triples.len() as f64)
}

/// Triples ranked at or above `threshold`, in input order, at most `n_max`.
pub fn select_predictions(ranked: &[RankedTriple], threshold: f64, n_max: usize) -> Vec<Triple> {
    ranked
        .iter()
        .filter(|r| r.rank <= threshold)
        .take(n_max)
        .map(|r| r.triple)
        .collect()
}
