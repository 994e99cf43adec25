//! Knowledge graph embedding models.
//!
//! Two model families are supported:
//!
//! - [`ModelKind::Translational`]: `score(s, p, o) = -||e_s + r_p - e_o||_2`
//! - [`ModelKind::Complex`]: `score(s, p, o) = Re(sum_d e_s * r_p * conj(e_o))`
//!
//! Higher scores mean more plausible triples for both. Complex rows are
//! stored as `d` real parts followed by `d` imaginary parts.

pub mod checkpoint;
pub mod loss;
mod post_train;
mod rank;
mod train;
mod tune;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, Query, RelationId, Triple};

pub use post_train::{post_train, post_train_with, DEFAULT_POST_TRAIN_EPOCHS, POST_TRAIN_LR_SCALE};
pub use rank::{
    filtered_mrr, lp, rank, rank_all, rank_bounds, select_predictions, top_candidates, RankBounds,
    RankedTriple,
};
pub use train::{init_model, train, train_with_history};
pub use tune::{tune, tune_with, TuneOutcome, DIMENSION_GRID, LEARNING_RATE_GRID, MARGIN_GRID, NEGATIVES_GRID};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Translational,
    Complex,
}

impl ModelKind {
    /// Parses the usual model names (`TransE`, `ComplEx`) case-insensitively.
    pub fn from_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "transe" | "translational" => Some(ModelKind::Translational),
            "complex" => Some(ModelKind::Complex),
            _ => None,
        }
    }

    pub fn canonical_name(self) -> &'static str {
        match self {
            ModelKind::Translational => "TransE",
            ModelKind::Complex => "ComplEx",
        }
    }

    /// Number of reals per embedding row for dimension `d`.
    pub fn width(self, dimension: usize) -> usize {
        match self {
            ModelKind::Translational => dimension,
            ModelKind::Complex => 2 * dimension,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HyperParams {
    pub dimension: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub negatives_per_positive: usize,
    /// Only used by the translational margin loss.
    pub margin: f64,
    pub regularization: f64,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            dimension: 64,
            epochs: 100,
            learning_rate: 0.01,
            batch_size: 64,
            negatives_per_positive: 5,
            margin: 1.0,
            regularization: 0.0,
            seed: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Argument(format!("hyperparameter {what}")));
        if self.dimension == 0 {
            return bad("dimension must be positive");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if self.negatives_per_positive == 0 {
            return bad("negatives_per_positive must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be a positive finite number");
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return bad("margin must be non-negative");
        }
        if !(self.regularization >= 0.0 && self.regularization.is_finite()) {
            return bad("regularization must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KgeModel {
    kind: ModelKind,
    hp: HyperParams,
    num_entities: usize,
    num_relations: usize,
    entities: Vec<f64>,
    relations: Vec<f64>,
}

impl KgeModel {
    /// Builds a model from explicit row-major matrices.
    pub fn from_parts(
        kind: ModelKind,
        hp: HyperParams,
        num_entities: usize,
        num_relations: usize,
        entities: Vec<f64>,
        relations: Vec<f64>,
    ) -> Result<Self> {
        let width = kind.width(hp.dimension);
        if hp.dimension == 0 {
            return Err(Error::Argument("dimension must be positive".into()));
        }
        if entities.len() != num_entities * width || relations.len() != num_relations * width {
            return Err(Error::Argument(format!(
                "matrix shapes do not match {num_entities}x{width} / {num_relations}x{width}"
            )));
        }
        Ok(KgeModel {
            kind,
            hp,
            num_entities,
            num_relations,
            entities,
            relations,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn hyper_params(&self) -> &HyperParams {
        &self.hp
    }

    pub fn dimension(&self) -> usize {
        self.hp.dimension
    }

    pub fn width(&self) -> usize {
        self.kind.width(self.hp.dimension)
    }

    pub fn num_entities(&self) -> usize {
        self.num_entities
    }

    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    pub fn entity_matrix(&self) -> &[f64] {
        &self.entities
    }

    pub fn relation_matrix(&self) -> &[f64] {
        &self.relations
    }

    pub fn entity_row(&self, e: EntityId) -> &[f64] {
        let w = self.width();
        &self.entities[e.index() * w..(e.index() + 1) * w]
    }

    pub fn relation_row(&self, r: RelationId) -> &[f64] {
        let w = self.width();
        &self.relations[r.index() * w..(r.index() + 1) * w]
    }

    pub fn entity_row_mut(&mut self, e: EntityId) -> &mut [f64] {
        let w = self.width();
        &mut self.entities[e.index() * w..(e.index() + 1) * w]
    }

    pub fn relation_row_mut(&mut self, r: RelationId) -> &mut [f64] {
        let w = self.width();
        &mut self.relations[r.index() * w..(r.index() + 1) * w]
    }

    pub(crate) fn matrices_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        (&mut self.entities, &mut self.relations)
    }

    pub fn is_finite(&self) -> bool {
        self.entities.iter().chain(&self.relations).all(|x| x.is_finite())
    }

    /// Whether this model's shapes match `kg`.
    pub fn fits(&self, kg: &KnowledgeGraph) -> bool {
        self.num_entities == kg.num_entities() && self.num_relations == kg.num_relations()
    }

    fn check(&self, s: EntityId, p: RelationId, o: EntityId) -> Result<()> {
        if s.index() >= self.num_entities || o.index() >= self.num_entities {
            return Err(Error::Argument(format!(
                "entity id out of range for a model with {} entities",
                self.num_entities
            )));
        }
        if p.index() >= self.num_relations {
            return Err(Error::Argument(format!(
                "relation id {} out of range for a model with {} relations",
                p.0, self.num_relations
            )));
        }
        Ok(())
    }

    pub fn score(&self, s: EntityId, p: RelationId, o: EntityId) -> Result<f64> {
        self.check(s, p, o)?;
        Ok(self.score_unchecked(s, p, o))
    }

    pub fn score_triple(&self, t: &Triple) -> Result<f64> {
        self.score(t.subject, t.predicate, t.object)
    }

    pub(crate) fn score_unchecked(&self, s: EntityId, p: RelationId, o: EntityId) -> f64 {
        score_rows(
            self.kind,
            self.entity_row(s),
            self.relation_row(p),
            self.entity_row(o),
        )
    }

    /// Scores `<s, p, o>` for every entity `o`, indexed by entity id.
    pub fn score_objects(&self, query: Query) -> Result<Vec<f64>> {
        self.check(query.subject, query.predicate, query.subject)?;
        let w = self.width();
        let s = self.entity_row(query.subject);
        let r = self.relation_row(query.predicate);
        let scores = match self.kind {
            ModelKind::Translational => {
                let target: Vec<f64> = s.iter().zip(r).map(|(a, b)| a + b).collect();
                self.entities
                    .chunks_exact(w)
                    .map(|o| {
                        -target
                            .iter()
                            .zip(o)
                            .map(|(t, x)| (t - x) * (t - x))
                            .sum::<f64>()
                            .sqrt()
                    })
                    .collect()
            }
            ModelKind::Complex => {
                let d = self.hp.dimension;
                let mut re = vec![0.0; d];
                let mut im = vec![0.0; d];
                for i in 0..d {
                    re[i] = s[i] * r[i] - s[d + i] * r[d + i];
                    im[i] = s[i] * r[d + i] + s[d + i] * r[i];
                }
                self.entities
                    .chunks_exact(w)
                    .map(|o| {
                        (0..d).map(|i| re[i] * o[i] + im[i] * o[d + i]).sum::<f64>()
                    })
                    .collect()
            }
        };
        Ok(scores)
    }
}

/// Score of one triple given its three embedding rows.
pub fn score_rows(kind: ModelKind, s: &[f64], p: &[f64], o: &[f64]) -> f64 {
    match kind {
        ModelKind::Translational => -s
            .iter()
            .zip(p)
            .zip(o)
            .map(|((a, b), c)| {
                let x = a + b - c;
                x * x
            })
            .sum::<f64>()
            .sqrt(),
        ModelKind::Complex => {
            let d = s.len() / 2;
            (0..d)
                .map(|i| {
                    let (sr, si) = (s[i], s[d + i]);
                    let (pr, pi) = (p[i], p[d + i]);
                    let (or, oi) = (o[i], o[d + i]);
                    (sr * pr - si * pi) * or + (sr * pi + si * pr) * oi
                })
                .sum()
        }
    }
}
