use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::loss::{accumulate_gradient, Gradient};
use super::{HyperParams, KgeModel, ModelKind};
use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, Triple};
use crate::seed;

const INIT_STREAM: u64 = 1;
const SAMPLE_STREAM: u64 = 2;

pub(crate) const BETA1: f64 = 0.9;
pub(crate) const BETA2: f64 = 0.999;
pub(crate) const EPSILON: f64 = 1e-8;

/// One Adam update of `params` in place. `t` is the 1-based step count.
pub(crate) fn adam_update(
    params: &mut [f64],
    m: &mut [f64],
    v: &mut [f64],
    grad: &[f64],
    lr: f64,
    t: i32,
) {
    let c1 = 1.0 - BETA1.powi(t);
    let c2 = 1.0 - BETA2.powi(t);
    for i in 0..params.len() {
        let g = grad[i];
        m[i] = BETA1 * m[i] + (1.0 - BETA1) * g;
        v[i] = BETA2 * v[i] + (1.0 - BETA2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + EPSILON);
    }
}

pub(crate) fn uniform_rows(rng: &mut ChaCha8Rng, out: &mut [f64], dimension: usize) {
    let bound = 1.0 / (dimension as f64).sqrt();
    for x in out.iter_mut() {
        *x = rng.gen_range(-bound..bound);
    }
}

/// The seeded starting point of [`train`]; equal to `train` with zero epochs.
pub fn init_model(
    num_entities: usize,
    num_relations: usize,
    kind: ModelKind,
    hp: &HyperParams,
) -> Result<KgeModel> {
    hp.validate()?;
    let w = kind.width(hp.dimension);
    let mut rng = seed::rng(seed::derive(hp.seed, &[INIT_STREAM]));
    let mut entities = vec![0.0; num_entities * w];
    let mut relations = vec![0.0; num_relations * w];
    uniform_rows(&mut rng, &mut entities, hp.dimension);
    uniform_rows(&mut rng, &mut relations, hp.dimension);
    KgeModel::from_parts(kind, hp.clone(), num_entities, num_relations, entities, relations)
}

/// Draws a corrupted copy of `t`, replacing subject or object uniformly.
pub(crate) fn corrupt(rng: &mut ChaCha8Rng, t: &Triple, num_entities: usize) -> Triple {
    let replacement = EntityId(rng.gen_range(0..num_entities as u32));
    if rng.gen_bool(0.5) {
        Triple::new(t.subject, t.predicate, replacement)
    } else {
        Triple::new(replacement, t.predicate, t.object)
    }
}

pub fn train(kg: &KnowledgeGraph, kind: ModelKind, hp: &HyperParams) -> Result<KgeModel> {
    train_with_history(kg, kind, hp).map(|(m, _)| m)
}

/// Trains a model and returns it with the mean per-example loss of every epoch.
pub fn train_with_history(
    kg: &KnowledgeGraph,
    kind: ModelKind,
    hp: &HyperParams,
) -> Result<(KgeModel, Vec<f64>)> {
    if kg.train().is_empty() {
        return Err(Error::Argument(format!("{} has an empty training split", kg.name())));
    }
    let mut model = init_model(kg.num_entities(), kg.num_relations(), kind, hp)?;
    let w = model.width();
    let n = kg.num_entities();
    let mut rng = seed::rng(seed::derive(hp.seed, &[SAMPLE_STREAM]));

    let mut m_ent = vec![0.0; model.entity_matrix().len()];
    let mut v_ent = vec![0.0; m_ent.len()];
    let mut m_rel = vec![0.0; model.relation_matrix().len()];
    let mut v_rel = vec![0.0; m_rel.len()];
    let mut step = 0i32;

    let mut order: Vec<usize> = (0..kg.train().len()).collect();
    let mut grad = Gradient::default();
    let mut negatives = Vec::with_capacity(hp.negatives_per_positive);
    let mut history = Vec::with_capacity(hp.epochs);

    for _ in 0..hp.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(hp.batch_size) {
            grad.clear();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let pos = kg.train()[i];
                negatives.clear();
                negatives.extend((0..hp.negatives_per_positive).map(|_| corrupt(&mut rng, &pos, n)));
                epoch_loss += accumulate_gradient(&model, &pos, &negatives, scale, &mut grad);
            }
            step += 1;
            let (ents, rels) = model.matrices_mut();
            for (&row, g) in &grad.entities {
                let r = row as usize * w..(row as usize + 1) * w;
                adam_update(&mut ents[r.clone()], &mut m_ent[r.clone()], &mut v_ent[r], g, hp.learning_rate, step);
            }
            for (&row, g) in &grad.relations {
                let r = row as usize * w..(row as usize + 1) * w;
                adam_update(&mut rels[r.clone()], &mut m_rel[r.clone()], &mut v_rel[r], g, hp.learning_rate, step);
            }
        }
        history.push(epoch_loss / kg.train().len() as f64);
    }

    if !model.is_finite() {
        return Err(Error::Validation("training diverged to non-finite embeddings".into()));
    }
    Ok((model, history))
}
