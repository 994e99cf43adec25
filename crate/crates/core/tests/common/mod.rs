#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::HashSet;

use kgxbench::kg::{EntityId, RelationId, Split};
use kgxbench::kge::init_model;
use kgxbench::kge::loss::{accumulate_gradient, example_loss, Gradient};
use kgxbench::{seed, HyperParams, KgeModel, KnowledgeGraph, ModelKind, Triple};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random graph with up to `max_entities` entities and three disjoint
/// splits. Labels are `e{i}` and `r{j}`.
pub fn random_kg(rng: &mut ChaCha8Rng, max_entities: usize, max_relations: usize) -> KnowledgeGraph {
    let n = rng.gen_range(2..=max_entities);
    let r = rng.gen_range(1..=max_relations);
    let mut seen = HashSet::new();
    let mut splits: [Vec<Triple>; 3] = Default::default();
    let count = rng.gen_range(1..=3 * n);
    for _ in 0..count {
        let t = Triple::new(
            EntityId(rng.gen_range(0..n as u32)),
            RelationId(rng.gen_range(0..r as u32)),
            EntityId(rng.gen_range(0..n as u32)),
        );
        if seen.insert(t) {
            let split = match rng.gen_range(0..10) {
                0..=5 => 0,
                6..=7 => 1,
                _ => 2,
            };
            splits[split].push(t);
        }
    }
    let [train, validation, test] = splits;
    KnowledgeGraph::from_ids(
        "toy",
        (0..n).map(|i| format!("e{i}")).collect(),
        (0..r).map(|j| format!("r{j}")).collect(),
        train,
        validation,
        test,
    )
    .unwrap()
}

/// A model whose entries are multiples of 1/2 in [-1, 1], so scores are
/// exact and ties are frequent.
pub fn quantized_model(rng: &mut ChaCha8Rng, kg: &KnowledgeGraph, kind: ModelKind, dimension: usize) -> KgeModel {
    let width = kind.width(dimension);
    let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.gen_range(-2..=2) as f64 / 2.0).collect() };
    let entities = draw(kg.num_entities() * width);
    let relations = draw(kg.num_relations() * width);
    let hp = HyperParams { dimension, ..HyperParams::default() };
    KgeModel::from_parts(kind, hp, kg.num_entities(), kg.num_relations(), entities, relations).unwrap()
}

/// A model with continuous random entries, so ties have probability zero.
pub fn continuous_model(rng: &mut ChaCha8Rng, kg: &KnowledgeGraph, kind: ModelKind, dimension: usize) -> KgeModel {
    let width = kind.width(dimension);
    let mut draw = |len: usize| -> Vec<f64> { (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect() };
    let entities = draw(kg.num_entities() * width);
    let relations = draw(kg.num_relations() * width);
    let hp = HyperParams { dimension, ..HyperParams::default() };
    KgeModel::from_parts(kind, hp, kg.num_entities(), kg.num_relations(), entities, relations).unwrap()
}

/// Score straight from the formulas, independent of the library.
pub fn oracle_score(model: &KgeModel, s: EntityId, p: RelationId, o: EntityId) -> f64 {
    let (es, rp, eo) = (model.entity_row(s), model.relation_row(p), model.entity_row(o));
    match model.kind() {
        ModelKind::Translational => {
            let sq: f64 = (0..es.len()).map(|i| (es[i] + rp[i] - eo[i]).powi(2)).sum();
            -sq.sqrt()
        }
        ModelKind::Complex => {
            let d = es.len() / 2;
            let mut total = 0.0;
            for i in 0..d {
                let (a, b) = (es[i], es[d + i]);
                let (c, e) = (rp[i], rp[d + i]);
                let (f, g) = (eo[i], -eo[d + i]);
                // (a + bi)(c + ei)(f + gi), real part
                let (xr, xi) = (a * c - b * e, a * e + b * c);
                total += xr * f - xi * g;
            }
            total
        }
    }
}

/// Filtered realistic rank by sorting the surviving candidates.
pub fn oracle_rank(model: &KgeModel, kg: &KnowledgeGraph, t: &Triple) -> f64 {
    let known: HashSet<EntityId> = kg
        .train()
        .iter()
        .chain(kg.validation())
        .chain(kg.test())
        .filter(|x| x.subject == t.subject && x.predicate == t.predicate && x.object != t.object)
        .map(|x| x.object)
        .collect();
    let mut scored: Vec<(f64, bool)> = kg
        .entities()
        .filter(|e| !known.contains(e))
        .map(|e| (oracle_score(model, t.subject, t.predicate, e), e == t.object))
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let target = oracle_score(model, t.subject, t.predicate, t.object);
    let first = scored.iter().position(|(s, _)| *s == target).unwrap() + 1;
    let last = scored.iter().rposition(|(s, _)| *s == target).unwrap() + 1;
    (first + last) as f64 / 2.0
}

pub fn all_triples(kg: &KnowledgeGraph) -> Vec<Triple> {
    kg.train().iter().chain(kg.validation()).chain(kg.test()).copied().collect()
}

pub fn binom(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// A graph whose entity 0 has between 1 and `max_degree` incident
/// training triples, plus some unrelated structure.
pub fn star_kg(rng: &mut ChaCha8Rng, max_degree: usize) -> KnowledgeGraph {
    let n = rng.gen_range(4..=9u32);
    let r = rng.gen_range(1..=3u32);
    let degree = rng.gen_range(1..=max_degree).min(2 * (n as usize - 1) * r as usize);
    let mut seen = HashSet::new();
    let mut train = Vec::new();
    while train.len() < degree {
        let other = EntityId(rng.gen_range(1..n));
        let p = RelationId(rng.gen_range(0..r));
        let t = if rng.gen_bool(0.5) { Triple::new(EntityId(0), p, other) } else { Triple::new(other, p, EntityId(0)) };
        if seen.insert(t) {
            train.push(t);
        }
    }
    for _ in 0..rng.gen_range(0..2 * n) {
        let t = Triple::new(EntityId(rng.gen_range(1..n)), RelationId(rng.gen_range(0..r)), EntityId(rng.gen_range(1..n)));
        if seen.insert(t) {
            train.push(t);
        }
    }
    // prediction <e0, r0, o> with o not already a training object of that query
    let mut test = Vec::new();
    for o in 1..n {
        let t = Triple::new(EntityId(0), RelationId(0), EntityId(o));
        if !seen.contains(&t) {
            test.push(t);
            break;
        }
    }
    if test.is_empty() {
        test.push(Triple::new(EntityId(0), RelationId(0), EntityId(0)));
    }
    KnowledgeGraph::from_ids(
        "star",
        (0..n).map(|i| format!("e{i}")).collect(),
        (0..r).map(|j| format!("r{j}")).collect(),
        train,
        Vec::new(),
        test,
    )
    .unwrap()
}

/// Every subset of `pool` with 1..=k elements, via bitmasks.
pub fn brute_subsets(pool: &[Triple], k: usize) -> Vec<Vec<Triple>> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << pool.len()) {
        if mask.count_ones() as usize <= k {
            let mut s: Vec<Triple> = (0..pool.len()).filter(|i| mask & (1 << i) != 0).map(|i| pool[i]).collect();
            s.sort();
            out.push(s);
        }
    }
    out
}

/// Higher score wins, then fewer triples, then the smaller sorted list.
pub fn brute_argmax(subsets: &[Vec<Triple>], score: impl Fn(&[Triple]) -> f64) -> Vec<Triple> {
    let mut best: Option<(&Vec<Triple>, f64)> = None;
    for s in subsets {
        let v = score(s);
        let better = match best {
            None => true,
            Some((b, bv)) => match v.partial_cmp(&bv).unwrap() {
                Ordering::Greater => true,
                Ordering::Less => false,
                Ordering::Equal => (s.len(), s.as_slice()) < (b.len(), b.as_slice()),
            },
        };
        if better {
            best = Some((s, v));
        }
    }
    best.unwrap().0.clone()
}

/// A deterministic objective with many ties.
pub fn coarse_score(s: &[Triple], salt: u64) -> f64 {
    let h = s.iter().fold(salt, |acc, t| {
        acc.wrapping_mul(0x100000001b3) ^ ((t.subject.0 as u64) << 20 | (t.predicate.0 as u64) << 10 | t.object.0 as u64)
    });
    (h % 3) as f64
}


/// Expected MRR of a ranker that orders the surviving candidates uniformly
/// at random: the mean of H_n / n over the triples, where n counts the
/// candidates left after filtering.
pub fn random_baseline_mrr(kg: &KnowledgeGraph) -> f64 {
    let splits = [Split::Train, Split::Validation, Split::Test];
    let total: f64 = kg
        .validation()
        .iter()
        .map(|t| {
            let filtered = kg.known_objects(t.query(), &splits).filter(|&o| o != t.object).count();
            let n = kg.num_entities() - filtered;
            (1..=n).map(|k| 1.0 / k as f64).sum::<f64>() / n as f64
        })
        .sum();
    total / kg.validation().len() as f64
}


pub const H: f64 = 1e-6;
pub const TOLERANCE: f64 = 1e-4;

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Central-difference derivative of the example loss with respect to every
/// parameter touched by the example.
pub fn check_instance(model: &KgeModel, pos: &Triple, negs: &[Triple]) -> f64 {
    let mut grad = Gradient::default();
    accumulate_gradient(model, pos, negs, 1.0, &mut grad);
    let mut worst: f64 = 0.0;
    let w = model.width();
    let mut rows: Vec<(bool, u32)> = Vec::new();
    for t in std::iter::once(pos).chain(negs) {
        rows.push((true, t.subject.0));
        rows.push((true, t.object.0));
        rows.push((false, t.predicate.0));
    }
    rows.sort();
    rows.dedup();
    for (is_entity, row) in rows {
        for j in 0..w {
            let mut plus = model.clone();
            let mut minus = model.clone();
            if is_entity {
                plus.entity_row_mut(EntityId(row))[j] += H;
                minus.entity_row_mut(EntityId(row))[j] -= H;
            } else {
                plus.relation_row_mut(RelationId(row))[j] += H;
                minus.relation_row_mut(RelationId(row))[j] -= H;
            }
            let numeric = (example_loss(&plus, pos, negs) - example_loss(&minus, pos, negs)) / (2.0 * H);
            let table = if is_entity { &grad.entities } else { &grad.relations };
            let analytic = table.get(&row).map_or(0.0, |g| g[j]);
            if numeric.abs() < 1e-7 && analytic.abs() < 1e-7 {
                continue;
            }
            worst = worst.max(relative_error(analytic, numeric));
        }
    }
    worst
}

/// Random d=4 instance whose margin terms are away from the hinge.
pub fn instance(kind: ModelKind, seed: u64) -> (KgeModel, Triple, Vec<Triple>) {
    let mut rng = seed::rng(seed);
    loop {
        let hp = HyperParams {
            dimension: 4,
            margin: 1.0,
            regularization: 0.01,
            seed: rng.gen(),
            ..HyperParams::default()
        };
        let model = init_model(6, 2, kind, &hp).unwrap();
        let e = |rng: &mut rand_chacha::ChaCha8Rng| EntityId(rng.gen_range(0..6));
        let pos = Triple::new(e(&mut rng), RelationId(rng.gen_range(0..2)), e(&mut rng));
        let negs: Vec<Triple> = (0..3)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    Triple::new(pos.subject, pos.predicate, e(&mut rng))
                } else {
                    Triple::new(e(&mut rng), pos.predicate, pos.object)
                }
            })
            .collect();
        let score = |t: &Triple| kgxbench::kge::loss::triple_score(&model, t);
        let smooth = kind == ModelKind::Complex
            || std::iter::once(&pos).chain(&negs).all(|t| -score(t) > 1e-3)
                && negs.iter().all(|n| (hp.margin - score(&pos) + score(n)).abs() > 1e-3);
        if smooth {
            return (model, pos, negs);
        }
    }
}

