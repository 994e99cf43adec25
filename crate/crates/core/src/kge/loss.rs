//! Per-example training losses and their analytic gradients.
//!
//! - Translational: margin ranking, `sum_neg max(0, margin - f(pos) + f(neg))`.
//! - Complex: binary cross-entropy with logits, positives labelled 1 and
//!   negatives 0.
//!
//! Both add `regularization * (|e_s|^2 + |r_p|^2 + |e_o|^2)` over the
//! positive triple's rows.

use std::collections::BTreeMap;

use super::{score_rows, KgeModel, ModelKind};
use crate::kg::Triple;

/// Sparse gradient keyed by row index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradient {
    pub entities: BTreeMap<u32, Vec<f64>>,
    pub relations: BTreeMap<u32, Vec<f64>>,
}

impl Gradient {
    pub fn clear(&mut self) {
        self.entities.clear();
        self.relations.clear();
    }

    fn add(rows: &mut BTreeMap<u32, Vec<f64>>, row: u32, delta: &[f64], scale: f64) {
        let slot = rows.entry(row).or_insert_with(|| vec![0.0; delta.len()]);
        for (g, d) in slot.iter_mut().zip(delta) {
            *g += scale * d;
        }
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Gradient of the score with respect to the subject, predicate and object rows.
pub fn score_gradient(kind: ModelKind, s: &[f64], p: &[f64], o: &[f64]) -> [Vec<f64>; 3] {
    match kind {
        ModelKind::Translational => {
            let diff: Vec<f64> = s.iter().zip(p).zip(o).map(|((a, b), c)| a + b - c).collect();
            let norm = diff.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-12 {
                let z = vec![0.0; s.len()];
                return [z.clone(), z.clone(), z];
            }
            let gs: Vec<f64> = diff.iter().map(|x| -x / norm).collect();
            let go: Vec<f64> = gs.iter().map(|x| -x).collect();
            [gs.clone(), gs, go]
        }
        ModelKind::Complex => {
            let d = s.len() / 2;
            let mut gs = vec![0.0; 2 * d];
            let mut gp = vec![0.0; 2 * d];
            let mut go = vec![0.0; 2 * d];
            for i in 0..d {
                let (sr, si) = (s[i], s[d + i]);
                let (pr, pi) = (p[i], p[d + i]);
                let (or, oi) = (o[i], o[d + i]);
                gs[i] = pr * or + pi * oi;
                gs[d + i] = pr * oi - pi * or;
                gp[i] = sr * or + si * oi;
                gp[d + i] = sr * oi - si * or;
                go[i] = sr * pr - si * pi;
                go[d + i] = si * pr + sr * pi;
            }
            [gs, gp, go]
        }
    }
}

fn score_of(model: &KgeModel, t: &Triple) -> f64 {
    model.score_unchecked(t.subject, t.predicate, t.object)
}

fn add_score_grad(model: &KgeModel, t: &Triple, coeff: f64, grad: &mut Gradient) {
    let s = model.entity_row(t.subject);
    let p = model.relation_row(t.predicate);
    let o = model.entity_row(t.object);
    let [gs, gp, go] = score_gradient(model.kind(), s, p, o);
    Gradient::add(&mut grad.entities, t.subject.0, &gs, coeff);
    Gradient::add(&mut grad.relations, t.predicate.0, &gp, coeff);
    Gradient::add(&mut grad.entities, t.object.0, &go, coeff);
}

fn sq_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Loss of one positive triple against its negatives.
pub fn example_loss(model: &KgeModel, positive: &Triple, negatives: &[Triple]) -> f64 {
    let hp = model.hyper_params();
    let pos = score_of(model, positive);
    let data = match model.kind() {
        ModelKind::Translational => negatives
            .iter()
            .map(|n| (hp.margin - pos + score_of(model, n)).max(0.0))
            .sum::<f64>(),
        ModelKind::Complex => {
            softplus(-pos) + negatives.iter().map(|n| softplus(score_of(model, n))).sum::<f64>()
        }
    };
    let reg = if hp.regularization > 0.0 {
        hp.regularization
            * (sq_norm(model.entity_row(positive.subject))
                + sq_norm(model.relation_row(positive.predicate))
                + sq_norm(model.entity_row(positive.object)))
    } else {
        0.0
    };
    data + reg
}

/// Adds `scale * dLoss/dtheta` into `grad` and returns the unscaled loss.
pub fn accumulate_gradient(
    model: &KgeModel,
    positive: &Triple,
    negatives: &[Triple],
    scale: f64,
    grad: &mut Gradient,
) -> f64 {
    let hp = model.hyper_params();
    let pos = score_of(model, positive);
    let mut loss = 0.0;
    match model.kind() {
        ModelKind::Translational => {
            for n in negatives {
                let term = hp.margin - pos + score_of(model, n);
                if term > 0.0 {
                    loss += term;
                    add_score_grad(model, positive, -scale, grad);
                    add_score_grad(model, n, scale, grad);
                }
            }
        }
        ModelKind::Complex => {
            loss += softplus(-pos);
            add_score_grad(model, positive, -sigmoid(-pos) * scale, grad);
            for n in negatives {
                let x = score_of(model, n);
                loss += softplus(x);
                add_score_grad(model, n, sigmoid(x) * scale, grad);
            }
        }
    }
    if hp.regularization > 0.0 {
        let c = 2.0 * hp.regularization * scale;
        let s = model.entity_row(positive.subject);
        let p = model.relation_row(positive.predicate);
        let o = model.entity_row(positive.object);
        loss += hp.regularization * (sq_norm(s) + sq_norm(p) + sq_norm(o));
        Gradient::add(&mut grad.entities, positive.subject.0, s, c);
        Gradient::add(&mut grad.relations, positive.predicate.0, p, c);
        Gradient::add(&mut grad.entities, positive.object.0, o, c);
    }
    loss
}

/// Raw score, exposed for finite-difference checks.
pub fn triple_score(model: &KgeModel, t: &Triple) -> f64 {
    score_rows(
        model.kind(),
        model.entity_row(t.subject),
        model.relation_row(t.predicate),
        model.entity_row(t.object),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softplus_and_sigmoid_are_stable() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((softplus(800.0) - 800.0).abs() < 1e-9);
        assert!(softplus(-800.0) >= 0.0 && softplus(-800.0) < 1e-300);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-15);
        assert!(sigmoid(-800.0) >= 0.0);
    }
}
