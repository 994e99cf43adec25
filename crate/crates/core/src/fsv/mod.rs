//! Forward simulatability variation (FSV).
//!
//! A verifier is asked to guess the predictor's answer to a query twice,
//! once without and once with the explanation. With `I` the 0/1
//! correctness of a guess, the FSV of the explanation is
//! `I(with) - I(without)`: +1 beneficial, 0 neutral, -1 harmful.

mod evaluate;
mod matching;
mod prompt;
mod verifier;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, Triple};

pub use evaluate::{evaluate, evaluate_texts, EvalRuntime, RetryPolicy, SimulationResult, SimulationScore};
pub use matching::{match_answer, normalize_answer, AnswerMatcher};
pub use prompt::{build_prompt, fewshot_examples, CONSTRAINT_PREFIX, FORMAT_SECTION, INSTRUCTION_SECTION};
pub use verifier::{ScriptedVerifier, Verifier, VerifierError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prompting {
    ZeroShot,
    FewShot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub prompting: Prompting,
    pub constrained: bool,
    /// Solved queries shown in few-shot prompts.
    pub n_examples: usize,
    /// Number of labels listed in the output constraint.
    pub constraint_size: usize,
    #[serde(alias = "llm")]
    pub llm_model: String,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            prompting: Prompting::ZeroShot,
            constrained: false,
            n_examples: 5,
            constraint_size: 16,
            llm_model: "Llama3.1".into(),
            batch_size: 8,
            seed: 0,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.constrained && self.constraint_size < 2 {
            return Err(Error::Config("constraint_size must be at least 2".into()));
        }
        if self.prompting == Prompting::FewShot && self.n_examples == 0 {
            return Err(Error::Config("few-shot prompting needs n_examples >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prompt {
    pub text: String,
    pub query: crate::kg::Query,
    pub with_explanation: bool,
}

/// A vector of FSV values, each in {-1, 0, +1}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct FsvVector(Vec<i8>);

impl FsvVector {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(-1..=1).contains(*v)) {
            return Err(Error::Range(format!("FSV value {v} is not in {{-1, 0, 1}}")));
        }
        Ok(FsvVector(values))
    }

    pub fn values(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<i8>> for FsvVector {
    type Error = Error;

    fn try_from(v: Vec<i8>) -> Result<Self> {
        FsvVector::new(v)
    }
}

impl From<FsvVector> for Vec<i8> {
    fn from(v: FsvVector) -> Self {
        v.0
    }
}

/// 1 iff the verifier's matched entity is the predictor's answer.
pub fn indicator(lp_answer: EntityId, matched: Option<EntityId>) -> u8 {
    u8::from(matched == Some(lp_answer))
}

/// `i_with - i_without`.
pub fn fsv_of(i_without: u8, i_with: u8) -> i8 {
    assert!(i_without <= 1 && i_with <= 1, "indicators are 0 or 1");
    i_with as i8 - i_without as i8
}

/// Verbatim rendering: one `(subject, predicate, object)` line per triple,
/// in the given order. The empty explanation renders as the empty string.
pub fn verbalize(kg: &KnowledgeGraph, triples: &[Triple]) -> String {
    triples
        .iter()
        .map(|t| {
            format!(
                "({}, {}, {})",
                kg.entity_label(t.subject),
                kg.relation_label(t.predicate),
                kg.entity_label(t.object)
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

/// Text rendering of explanations, pluggable per explanation method.
pub trait Verbalizer: Send + Sync {
    fn verbalize(&self, kg: &KnowledgeGraph, triples: &[Triple]) -> String;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Verbatim;

impl Verbalizer for Verbatim {
    fn verbalize(&self, kg: &KnowledgeGraph, triples: &[Triple]) -> String {
        verbalize(kg, triples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::LabeledTriple;

    #[test]
    fn fsv_truth_table() {
        assert_eq!(fsv_of(0, 1), 1);
        assert_eq!(fsv_of(1, 1), 0);
        assert_eq!(fsv_of(0, 0), 0);
        assert_eq!(fsv_of(1, 0), -1);
        for a in 0..=1u8 {
            for b in 0..=1u8 {
                assert_eq!(fsv_of(a, b), -fsv_of(b, a));
            }
        }
    }

    #[test]
    fn indicator_cases() {
        assert_eq!(indicator(EntityId(5), Some(EntityId(5))), 1);
        assert_eq!(indicator(EntityId(5), Some(EntityId(7))), 0);
        assert_eq!(indicator(EntityId(5), None), 0);
    }

    #[test]
    fn verbalize_rules() {
        let lt = |s: &str, p: &str, o: &str| -> LabeledTriple { [s.into(), p.into(), o.into()] };
        let kg = KnowledgeGraph::from_labeled("v", &[lt("a", "r", "b"), lt("a", "q", "c")], &[], &[]).unwrap();
        let ab = kg.resolve(&lt("a", "r", "b")).unwrap();
        let ac = kg.resolve(&lt("a", "q", "c")).unwrap();
        assert_eq!(verbalize(&kg, &[ab]), "(a, r, b)");
        let x = crate::lpx::Explanation::new(vec![ac, ab]).unwrap();
        assert_eq!(verbalize(&kg, x.triples()), "(a, r, b)\n(a, q, c)");
        assert_eq!(verbalize(&kg, &[]), "");
    }

    #[test]
    fn fsv_vector_domain() {
        assert!(FsvVector::new(vec![-1, 0, 1]).is_ok());
        assert!(FsvVector::new(vec![2]).is_err());
        assert!(serde_json::from_str::<FsvVector>("[1,-2]").is_err());
    }

    #[test]
    fn eval_config_accepts_llm_alias() {
        let c: EvalConfig = serde_json::from_str(r#"{"prompting":"zero_shot","llm":"Llama3.1"}"#).unwrap();
        assert_eq!(c.llm_model, "Llama3.1");
        assert!(EvalConfig { constrained: true, constraint_size: 1, ..EvalConfig::default() }.validate().is_err());
    }
}
