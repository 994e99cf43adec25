use std::collections::{BTreeMap, HashMap};

use rand::seq::SliceRandom;

use super::{CandidateSet, Explanation, LpxConfig, Method};
use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, Triple};
use crate::seed;

/// One uniformly sampled subset of the training triples involving the
/// prediction's subject, predicate or object (depending on the method).
pub fn baseline_candidates(kg: &KnowledgeGraph, prediction: &Triple, config: &LpxConfig) -> Result<CandidateSet> {
    kg.check_triple(prediction)?;
    let mut pool: Vec<Triple> = match config.method {
        Method::RandomSubject => kg.incident_train(prediction.subject).copied().collect(),
        Method::RandomObject => kg.incident_train(prediction.object).copied().collect(),
        Method::RandomPredicate => kg
            .train()
            .iter()
            .filter(|t| t.predicate == prediction.predicate)
            .copied()
            .collect(),
        other => {
            return Err(Error::Config(format!("{other} is not a random baseline")));
        }
    };
    if pool.is_empty() {
        return Ok(CandidateSet::empty(*prediction));
    }
    pool.sort();
    let mut rng = seed::rng(seed::derive(
        config.seed,
        &[
            config.method as u64,
            prediction.subject.0 as u64,
            prediction.predicate.0 as u64,
            prediction.object.0 as u64,
        ],
    ));
    let picked: Vec<Triple> = pool
        .choose_multiple(&mut rng, config.k.min(pool.len()))
        .copied()
        .collect();
    Ok(CandidateSet {
        prediction: *prediction,
        candidates: vec![Explanation::new(picked)?],
    })
}

/// Sorted training triples with `entity` as subject or object.
pub fn neighborhood(kg: &KnowledgeGraph, entity: EntityId) -> Vec<Triple> {
    let mut out: Vec<Triple> = kg.incident_train(entity).copied().collect();
    out.sort();
    out.dedup();
    out
}

fn far_end(t: &Triple, focus: EntityId) -> EntityId {
    if t.subject == focus {
        t.object
    } else {
        t.subject
    }
}

/// Number of walks of length at most 2 from each triple's far endpoint to
/// `target` in the training graph viewed as an undirected multigraph (a
/// self-loop counts as one edge).
pub fn fit_scores(kg: &KnowledgeGraph, focus: EntityId, triples: &[Triple], target: EntityId) -> Vec<u64> {
    // edges_to_target[w] = number of training edges between w and target
    let mut edges_to_target: HashMap<EntityId, u64> = HashMap::new();
    for t in kg.incident_train(target) {
        *edges_to_target.entry(far_end(t, target)).or_default() += 1;
    }
    let adjacency = |x: EntityId| edges_to_target.get(&x).copied().unwrap_or(0);
    triples
        .iter()
        .map(|t| {
            let u = far_end(t, focus);
            let zero = u64::from(u == target);
            let one = adjacency(u);
            let two: u64 = kg.incident_train(u).map(|e| adjacency(far_end(e, u))).sum();
            zero + one + two
        })
        .collect()
}

/// Keeps the `size` triples with the highest fit score (ties by triple
/// order) and returns them sorted by triple order.
pub fn prefilter(kg: &KnowledgeGraph, prediction: &Triple, triples: &[Triple], size: usize) -> Vec<Triple> {
    let scores = fit_scores(kg, prediction.subject, triples, prediction.object);
    let mut order: Vec<usize> = (0..triples.len()).collect();
    order.sort_by(|&a, &b| scores[b].cmp(&scores[a]).then(triples[a].cmp(&triples[b])));
    let mut kept: Vec<Triple> = order.into_iter().take(size).map(|i| triples[i]).collect();
    kept.sort();
    kept
}

/// Degree bucket of an endpoint: 1, 2-4 or 5+.
fn degree_bucket(degree: usize) -> u8 {
    match degree {
        0 | 1 => 0,
        2..=4 => 1,
        _ => 2,
    }
}

/// Collapses a neighborhood of `focus` to one representative per
/// (predicate, direction, far-endpoint degree bucket). The representative
/// is the smallest triple of its group; the output is sorted.
pub fn summarize(kg: &KnowledgeGraph, focus: EntityId, subgraph: &[Triple]) -> Vec<Triple> {
    let mut groups: BTreeMap<(u32, bool, u8), Triple> = BTreeMap::new();
    for t in subgraph {
        let outgoing = t.subject == focus;
        let key = (
            t.predicate.0,
            outgoing,
            degree_bucket(kg.train_degree(far_end(t, focus))),
        );
        groups
            .entry(key)
            .and_modify(|rep| {
                if t < rep {
                    *rep = *t;
                }
            })
            .or_insert(*t);
    }
    let mut out: Vec<Triple> = groups.into_values().collect();
    out.sort();
    out
}

/// All index subsets of `0..n` with size in `1..=k`, size first, then
/// lexicographic.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for size in 1..=k.min(n) {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            out.push(idx.clone());
            // advance to the next lexicographic combination
            let mut i = size;
            while i > 0 && idx[i - 1] == n - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    out
}

/// Neighborhood search space: incident training triples of the subject,
/// optionally summarized, prefiltered by path fit to the object, then all
/// subsets up to the effective `k`.
pub fn kelpie_candidates(kg: &KnowledgeGraph, prediction: &Triple, config: &LpxConfig) -> Result<CandidateSet> {
    kg.check_triple(prediction)?;
    if config.method.is_random() {
        return Err(Error::Config(format!("{} is not a search method", config.method)));
    }
    config.validate()?;
    let mut pool = neighborhood(kg, prediction.subject);
    if pool.is_empty() {
        return Ok(CandidateSet::empty(*prediction));
    }
    if config.summarize {
        pool = summarize(kg, prediction.subject, &pool);
    }
    let filtered = prefilter(kg, prediction, &pool, config.prefilter_size);
    let candidates = combinations(filtered.len(), config.effective_k())
        .into_iter()
        .map(|idx| Explanation::new(idx.into_iter().map(|i| filtered[i]).collect()))
        .collect::<Result<Vec<_>>>()?;
    Ok(CandidateSet {
        prediction: *prediction,
        candidates,
    })
}
