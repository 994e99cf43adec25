mod common;

use common::random_baseline_mrr;
use kgxbench::kge::{filtered_mrr, train, train_with_history, HyperParams, ModelKind};
use kgxbench::synthetic::{chain_hyperparams, chain_kg};

#[test]
fn translational_beats_random_on_chain() {
    let kg = chain_kg(50);
    let baseline = random_baseline_mrr(&kg);
    for seed in 0..3 {
        let model = train(&kg, ModelKind::Translational, &chain_hyperparams(seed)).unwrap();
        let mrr = filtered_mrr(&model, &kg, kg.validation()).unwrap();
        assert!(mrr >= 5.0 * baseline, "seed {seed}: mrr {mrr} baseline {baseline}");
    }
}

#[test]
fn complex_beats_random_on_chain() {
    let kg = chain_kg(50);
    let hp = HyperParams { dimension: 16, learning_rate: 0.05, ..chain_hyperparams(0) };
    let model = train(&kg, ModelKind::Complex, &hp).unwrap();
    let mrr = filtered_mrr(&model, &kg, kg.validation()).unwrap();
    assert!(mrr > random_baseline_mrr(&kg));
}

#[test]
fn loss_decreases() {
    let kg = chain_kg(30);
    for kind in [ModelKind::Translational, ModelKind::Complex] {
        let hp = HyperParams { dimension: 16, epochs: 40, ..HyperParams::default() };
        let (_, history) = train_with_history(&kg, kind, &hp).unwrap();
        assert_eq!(history.len(), 40);
        let head: f64 = history[..5].iter().sum();
        let tail: f64 = history[35..].iter().sum();
        assert!(tail < head, "{kind:?}: {history:?}");
    }
}

#[test]
fn training_is_deterministic() {
    let kg = chain_kg(20);
    let hp = HyperParams { dimension: 8, epochs: 5, seed: 9, ..HyperParams::default() };
    let a = train(&kg, ModelKind::Complex, &hp).unwrap();
    let b = train(&kg, ModelKind::Complex, &hp).unwrap();
    assert_eq!(a, b);
    let c = train(&kg, ModelKind::Complex, &HyperParams { seed: 10, ..hp }).unwrap();
    assert_ne!(a, c);
}
