//! Link-prediction explanation as combinatorial search.
//!
//! An explainer is assembled from three parts: a candidate generator that
//! produces a finite set of triple subsets for a prediction, a relevance
//! objective scoring each subset, and [`best_explanation`], which takes the
//! argmax. Random baselines skip the objective and return their single
//! sampled candidate.

mod candidates;
mod relevance;
mod search;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::Triple;

pub use candidates::{
    baseline_candidates, combinations, fit_scores, kelpie_candidates, neighborhood, prefilter, summarize,
};
pub use relevance::{comparison_set, relevance, RelevanceScorer};
pub use search::{best_explanation, explain, explain_with, BuiltinExplainer, ExplainedPrediction, Explainer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    RandomSubject,
    RandomPredicate,
    RandomObject,
    SingleTriple,
    Neighborhood,
}

impl Method {
    pub fn is_random(self) -> bool {
        matches!(self, Method::RandomSubject | Method::RandomPredicate | Method::RandomObject)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Method::RandomSubject => "random_subject",
            Method::RandomPredicate => "random_predicate",
            Method::RandomObject => "random_object",
            Method::SingleTriple => "single_triple",
            Method::Neighborhood => "neighborhood",
        }
    }

    /// Resolves a method name. Returns the method and whether it implies
    /// candidate summarization. Besides the canonical names this accepts
    /// `kelpie`, `kelpie++` and the single-fact explainers `criage` and `dp`.
    pub fn from_name(name: &str) -> Option<(Method, bool)> {
        let n = name.trim().to_ascii_lowercase().replace('-', "_");
        Some(match n.as_str() {
            "random_subject" => (Method::RandomSubject, false),
            "random_predicate" => (Method::RandomPredicate, false),
            "random_object" => (Method::RandomObject, false),
            "single_triple" | "criage" | "dp" => (Method::SingleTriple, false),
            "neighborhood" | "kelpie" => (Method::Neighborhood, false),
            "kelpie++" | "kelpie_plus_plus" | "kelpieplusplus" => (Method::Neighborhood, true),
            _ => return None,
        })
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Necessary,
    Sufficient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LpxConfig {
    pub method: Method,
    pub mode: Mode,
    /// Largest explanation size.
    pub k: usize,
    /// How many neighborhood triples survive the path-based prefilter.
    pub prefilter_size: usize,
    pub summarize: bool,
    /// Size bound of the comparison set used by sufficient relevance.
    pub comparison_limit: usize,
    pub post_train_epochs: usize,
    pub seed: u64,
}

impl Default for LpxConfig {
    fn default() -> Self {
        LpxConfig {
            method: Method::Neighborhood,
            mode: Mode::Necessary,
            k: 4,
            prefilter_size: 20,
            summarize: false,
            comparison_limit: 10,
            post_train_epochs: crate::kge::DEFAULT_POST_TRAIN_EPOCHS,
            seed: 0,
        }
    }
}

impl LpxConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.prefilter_size < self.k {
            return Err(Error::Config(format!(
                "prefilter_size ({}) must be at least k ({})",
                self.prefilter_size, self.k
            )));
        }
        if self.comparison_limit == 0 {
            return Err(Error::Config("comparison_limit must be at least 1".into()));
        }
        Ok(())
    }

    /// Size bound actually used by the search.
    pub fn effective_k(&self) -> usize {
        if self.method == Method::SingleTriple {
            1
        } else {
            self.k
        }
    }
}

/// A non-empty set of training triples, kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Explanation {
    triples: Vec<Triple>,
}

impl Explanation {
    pub fn new(mut triples: Vec<Triple>) -> Result<Self> {
        triples.sort();
        triples.dedup();
        if triples.is_empty() {
            return Err(Error::Explanation("an explanation needs at least one triple".into()));
        }
        Ok(Explanation { triples })
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }
}

/// Tie-break order: fewer triples first, then lexicographic triple order.
impl Ord for Explanation {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.triples.cmp(&other.triples))
    }
}

impl PartialOrd for Explanation {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    pub prediction: Triple,
    pub candidates: Vec<Explanation>,
}

impl CandidateSet {
    pub fn empty(prediction: Triple) -> Self {
        CandidateSet {
            prediction,
            candidates: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}
