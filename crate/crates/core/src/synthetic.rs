//! Small generated graphs used by tests, demos and smoke runs.

use crate::kg::{KnowledgeGraph, LabeledTriple};
use crate::kge::HyperParams;

fn entity(i: usize) -> String {
    format!("e{i}")
}

fn t(s: usize, p: &str, o: usize) -> LabeledTriple {
    [entity(s), p.to_owned(), entity(o)]
}

/// A chain `e0 -next-> e1 -next-> ... -next-> e{n-1}`.
///
/// - every `next` link is a training triple;
/// - the inverse `prev` links go to validation for `i % 5 == 0`, to test for
///   `i % 5 == 2` and to training otherwise, so held-out links are
///   inferable from their `next` counterpart;
/// - `next2` and `next3` skip links `e_i -> e_{i+2}`, `e_i -> e_{i+3}` for
///   `i >= 1` keep the chain stiff enough for translational models;
/// - a symmetric `tag` pair links `e0` and `e3`, which is unrelated to the
///   chain direction.
///
/// `e0` is incident to exactly three training triples: `<e0, next, e1>`,
/// `<e0, tag, e3>` and `<e3, tag, e0>`.
pub fn chain_kg(n: usize) -> KnowledgeGraph {
    assert!(n >= 2, "a chain needs at least two entities");
    let mut train = Vec::new();
    let mut validation = Vec::new();
    let mut test = Vec::new();
    for i in 0..n - 1 {
        train.push(t(i, "next", i + 1));
    }
    for i in 0..n - 1 {
        let triple = t(i + 1, "prev", i);
        match i % 5 {
            0 => validation.push(triple),
            2 => test.push(triple),
            _ => train.push(triple),
        }
    }
    for (k, name) in [(2, "next2"), (3, "next3")] {
        for i in 1..n.saturating_sub(k) {
            train.push(t(i, name, i + k));
        }
    }
    if n > 3 {
        train.push(t(0, "tag", 3));
        train.push(t(3, "tag", 0));
    }
    KnowledgeGraph::from_labeled(format!("chain{n}"), &train, &validation, &test)
        .expect("generated splits are disjoint")
}

/// Translational hyperparameters that fit [`chain_kg`] well.
pub fn chain_hyperparams(seed: u64) -> HyperParams {
    HyperParams {
        dimension: 8,
        epochs: 200,
        learning_rate: 0.1,
        margin: 1.0,
        regularization: 0.0,
        negatives_per_positive: 10,
        batch_size: 8,
        seed,
        ..HyperParams::default()
    }
}
