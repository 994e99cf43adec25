use std::collections::HashSet;

use rand::Rng;

use super::loss::{accumulate_gradient, Gradient};
use super::train::{adam_update, uniform_rows};
use super::KgeModel;
use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, Triple};
use crate::seed;

pub const DEFAULT_POST_TRAIN_EPOCHS: usize = 50;

/// Post-training steps are this many times the training learning rate, so
/// a freshly initialized row can reach the scale of trained embeddings.
pub const POST_TRAIN_LR_SCALE: f64 = 5.0;

const POST_STREAM: u64 = 4;

/// [`post_train_with`] using [`DEFAULT_POST_TRAIN_EPOCHS`].
pub fn post_train(
    model: &KgeModel,
    kg: &KnowledgeGraph,
    focus: EntityId,
    removed: &[Triple],
    added: &[Triple],
) -> Result<KgeModel> {
    post_train_with(model, kg, focus, removed, added, DEFAULT_POST_TRAIN_EPOCHS)
}

/// Re-learns the embedding of `focus` alone.
///
/// The focus row is re-initialized from a seed derived from the model seed
/// and the entity id, then fitted for `epochs` full-batch Adam steps on the
/// training triples incident to `focus`, minus `removed`, plus `added`.
/// The step size is the training learning rate times
/// [`POST_TRAIN_LR_SCALE`]. Negatives corrupt the endpoint that is not `focus`. Every other
/// parameter is left bit-identical and `model` itself is not modified.
pub fn post_train_with(
    model: &KgeModel,
    kg: &KnowledgeGraph,
    focus: EntityId,
    removed: &[Triple],
    added: &[Triple],
    epochs: usize,
) -> Result<KgeModel> {
    kg.check_entity(focus)?;
    if !model.fits(kg) {
        return Err(Error::Argument("model does not match the knowledge graph".into()));
    }
    for t in removed {
        if !kg.is_train(t) {
            return Err(Error::Argument(format!("removed triple {t} is not in the training split")));
        }
        if !t.involves(focus) {
            return Err(Error::Argument(format!("removed triple {t} does not involve entity {}", focus.0)));
        }
    }
    for t in added {
        kg.check_triple(t)?;
        if !t.involves(focus) {
            return Err(Error::Argument(format!("added triple {t} does not involve entity {}", focus.0)));
        }
    }

    let removed: HashSet<&Triple> = removed.iter().collect();
    let data: Vec<Triple> = kg
        .incident_train(focus)
        .filter(|t| !removed.contains(t))
        .chain(added.iter())
        .copied()
        .collect();

    let hp = model.hyper_params().clone();
    let mut rng = seed::rng(seed::derive(hp.seed, &[POST_STREAM, focus.0 as u64]));
    let mut out = model.clone();
    uniform_rows(&mut rng, out.entity_row_mut(focus), hp.dimension);
    if data.is_empty() {
        return Ok(out);
    }

    let w = out.width();
    let n = kg.num_entities() as u32;
    let mut m = vec![0.0; w];
    let mut v = vec![0.0; w];
    let mut grad = Gradient::default();
    let mut negatives = Vec::with_capacity(hp.negatives_per_positive);
    let scale = 1.0 / data.len() as f64;
    for step in 1..=epochs {
        grad.clear();
        for pos in &data {
            negatives.clear();
            for _ in 0..hp.negatives_per_positive {
                let replacement = EntityId(rng.gen_range(0..n));
                negatives.push(if pos.subject == focus {
                    Triple::new(pos.subject, pos.predicate, replacement)
                } else {
                    Triple::new(replacement, pos.predicate, pos.object)
                });
            }
            accumulate_gradient(&out, pos, &negatives, scale, &mut grad);
        }
        if let Some(g) = grad.entities.get(&focus.0) {
            let g = g.clone();
            adam_update(out.entity_row_mut(focus), &mut m, &mut v, &g, hp.learning_rate * POST_TRAIN_LR_SCALE, step as i32);
        }
    }
    if !out.is_finite() {
        return Err(Error::Validation("post-training diverged".into()));
    }
    Ok(out)
}
