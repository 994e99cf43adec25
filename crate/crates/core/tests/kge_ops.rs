mod common;

use kgxbench::kg::EntityId;
use kgxbench::kge::{
    checkpoint, filtered_mrr, init_model, post_train, post_train_with, rank, train, tune, tune_with, HyperParams,
    ModelKind,
};
use kgxbench::synthetic::{chain_hyperparams, chain_kg};
use kgxbench::{Error, KgeModel, KnowledgeGraph, Triple};

fn small_model(kind: ModelKind) -> (KnowledgeGraph, KgeModel) {
    let kg = chain_kg(15);
    let hp = HyperParams { dimension: 4, epochs: 10, batch_size: 8, ..HyperParams::default() };
    let model = train(&kg, kind, &hp).unwrap();
    (kg, model)
}

#[test]
fn zero_epochs_is_the_initialization() {
    let kg = chain_kg(10);
    for kind in [ModelKind::Translational, ModelKind::Complex] {
        let hp = HyperParams { dimension: 3, epochs: 0, seed: 5, ..HyperParams::default() };
        let trained = train(&kg, kind, &hp).unwrap();
        assert_eq!(trained, init_model(kg.num_entities(), kg.num_relations(), kind, &hp).unwrap());
    }
}

#[test]
fn empty_training_split_is_rejected() {
    let lt = |s: &str, p: &str, o: &str| [s.to_string(), p.to_string(), o.to_string()];
    let kg = KnowledgeGraph::from_labeled("empty", &[], &[lt("a", "r", "b")], &[]).unwrap();
    assert!(matches!(train(&kg, ModelKind::Complex, &HyperParams::default()), Err(Error::Argument(_))));
}

#[test]
fn trained_models_keep_shape_and_stay_finite() {
    for kind in [ModelKind::Translational, ModelKind::Complex] {
        let (kg, model) = small_model(kind);
        assert!(model.fits(&kg) && model.is_finite());
        assert_eq!(model.entity_matrix().len(), kg.num_entities() * kind.width(4));
        assert_eq!(model.relation_matrix().len(), kg.num_relations() * kind.width(4));
    }
}

#[test]
fn post_train_touches_only_the_focus_row() {
    for kind in [ModelKind::Translational, ModelKind::Complex] {
        let (kg, model) = small_model(kind);
        let before = model.clone();
        let focus = EntityId(4);
        let post = post_train(&model, &kg, focus, &[], &[]).unwrap();
        assert_eq!(model, before);
        assert_eq!(post.relation_matrix(), model.relation_matrix());
        for e in kg.entities().filter(|&e| e != focus) {
            assert_eq!(post.entity_row(e), model.entity_row(e));
        }
        assert_ne!(post.entity_row(focus), model.entity_row(focus));
        assert!(post.is_finite() && post.fits(&kg));
    }
}

#[test]
fn no_positive_examples_leaves_the_reinitialized_row() {
    let lt = |s: &str, p: &str, o: &str| [s.to_string(), p.to_string(), o.to_string()];
    let kg = KnowledgeGraph::from_labeled("pair", &[lt("a", "r", "b"), lt("b", "r", "c")], &[], &[]).unwrap();
    let hp = HyperParams { dimension: 4, epochs: 5, ..HyperParams::default() };
    let model = train(&kg, ModelKind::Translational, &hp).unwrap();
    let a = kg.entity_id("a").unwrap();
    let only = kg.train()[0];
    let post = post_train(&model, &kg, a, &[only], &[]).unwrap();
    let fresh = post_train_with(&model, &kg, a, &[], &[], 0).unwrap();
    assert_eq!(post.entity_row(a), fresh.entity_row(a));
}

#[test]
fn post_train_argument_errors() {
    let (kg, model) = small_model(ModelKind::Translational);
    let focus = kg.train()[0].subject;
    let absent = Triple::new(focus, kg.train()[0].predicate, focus);
    assert!(matches!(post_train(&model, &kg, focus, &[absent], &[]), Err(Error::Argument(_))));
    let elsewhere = *kg.train().iter().find(|t| !t.involves(focus)).unwrap();
    assert!(matches!(post_train(&model, &kg, focus, &[elsewhere], &[]), Err(Error::Argument(_))));
}

fn without(kg: &KnowledgeGraph, removed: &Triple) -> KnowledgeGraph {
    KnowledgeGraph::from_ids(
        "without",
        kg.entity_labels().to_vec(),
        kg.relation_labels().to_vec(),
        kg.train().iter().filter(|t| *t != removed).copied().collect(),
        kg.validation().to_vec(),
        kg.test().to_vec(),
    )
    .unwrap()
}

/// Removing the generating link hurts the prediction more than removing
/// the unrelated tag, both under post-training and under full retraining.
#[test]
fn removing_the_generating_link_hurts_more() {
    let kg = chain_kg(50);
    let e = |s: &str| kg.entity_id(s).unwrap();
    let pred = Triple::new(e("e0"), kg.relation_id("next").unwrap(), e("e1"));
    let tag = Triple::new(e("e0"), kg.relation_id("tag").unwrap(), e("e3"));
    for seed in 0..3 {
        let hp = chain_hyperparams(seed);
        let model = train(&kg, ModelKind::Translational, &hp).unwrap();
        let after = |t: &Triple| rank(&post_train(&model, &kg, e("e0"), &[*t], &[]).unwrap(), &kg, &pred).unwrap().rank;
        assert!(after(&pred) > after(&tag), "seed {seed}");
        let full = |t: &Triple| rank(&train(&without(&kg, t), ModelKind::Translational, &hp).unwrap(), &kg, &pred).unwrap().rank;
        assert!(full(&pred) > full(&tag), "seed {seed}");
    }
}

#[test]
fn tune_budget_one_returns_the_first_sample() {
    let kg = chain_kg(12);
    let base = HyperParams { epochs: 2, seed: 3, ..HyperParams::default() };
    let out = tune_with(&kg, ModelKind::Translational, 1, &base).unwrap();
    assert_eq!(out.trials.len(), 1);
    assert_eq!(out.best, out.trials[0].0);
}

#[test]
fn tune_budget_two_picks_the_better_config() {
    let kg = chain_kg(20);
    for seed in 0..4 {
        let base = HyperParams { epochs: 15, batch_size: 16, seed, ..HyperParams::default() };
        let out = tune_with(&kg, ModelKind::Translational, 2, &base).unwrap();
        assert_eq!(out.trials.len(), 2);
        assert_ne!(out.trials[0].0, out.trials[1].0);
        let mrr: Vec<f64> = out
            .trials
            .iter()
            .map(|(hp, _)| filtered_mrr(&train(&kg, ModelKind::Translational, hp).unwrap(), &kg, kg.validation()).unwrap())
            .collect();
        let expected = if mrr[1] > mrr[0] { &out.trials[1].0 } else { &out.trials[0].0 };
        assert_eq!(&out.best, expected, "seed {seed}: {mrr:?}");
    }
}

#[test]
fn tune_ties_go_to_the_first_sample() {
    // the only validation query has a single surviving candidate, so every
    // config scores MRR 1
    let lt = |s: &str, p: &str, o: &str| [s.to_string(), p.to_string(), o.to_string()];
    let kg = KnowledgeGraph::from_labeled("tie", &[lt("a", "r", "b"), lt("a", "r", "c")], &[lt("a", "r", "a")], &[])
        .unwrap();
    let base = HyperParams { epochs: 1, seed: 8, ..HyperParams::default() };
    let out = tune_with(&kg, ModelKind::Complex, 2, &base).unwrap();
    assert_eq!(out.trials[0].1, out.trials[1].1);
    assert_eq!(out.best, out.trials[0].0);
}

#[test]
fn tune_errors() {
    let kg = chain_kg(8);
    assert!(matches!(tune(&kg, ModelKind::Complex, 0, 0), Err(Error::Argument(_))));
    let lt = |s: &str, p: &str, o: &str| [s.to_string(), p.to_string(), o.to_string()];
    let no_valid = KnowledgeGraph::from_labeled("nv", &[lt("a", "r", "b")], &[], &[]).unwrap();
    assert!(matches!(tune(&no_valid, ModelKind::Complex, 1, 0), Err(Error::Argument(_))));
}

#[test]
fn checkpoint_round_trip() {
    for kind in [ModelKind::Translational, ModelKind::Complex] {
        let (_, model) = small_model(kind);
        let bytes = checkpoint::to_bytes(&model);
        let header_len = u64::from_le_bytes(bytes[..8].try_into().unwrap()) as usize;
        let header: serde_json::Value = serde_json::from_slice(&bytes[8..8 + header_len]).unwrap();
        assert_eq!(header["format"], checkpoint::FORMAT);
        assert_eq!(bytes.len(), 8 + header_len + 8 * (model.entity_matrix().len() + model.relation_matrix().len()));
        let back = checkpoint::from_bytes(&bytes).unwrap();
        assert_eq!(back, model);
        assert_eq!(checkpoint::to_bytes(&back), bytes);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        checkpoint::save(&model, &path).unwrap();
        assert_eq!(checkpoint::load(&path).unwrap(), model);
        assert!(checkpoint::from_bytes(&bytes[..bytes.len() - 1]).is_err());
    }
}
