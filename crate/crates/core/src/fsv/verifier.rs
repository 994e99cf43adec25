use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use super::Prompt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifierError {
    /// Network or service failure; retried by the evaluator.
    #[error("verifier transport error: {0}")]
    Transport(String),
    /// The service answered with something that is not a completion.
    #[error("malformed verifier response: {0}")]
    Malformed(String),
}

/// The simulating agent. Receives a batch of prompts and returns one raw
/// answer per prompt, in order. Implementations must be stateless between
/// calls and tolerate concurrent use.
pub trait Verifier: Send + Sync {
    fn simulate(&self, prompts: &[Prompt]) -> Result<Vec<String>, VerifierError>;
}

type AnswerFn = dyn Fn(&Prompt) -> String + Send + Sync;

/// Deterministic verifier driven by a closure or a lookup table.
///
/// Optionally fails the first `n` calls with a transport error, and
/// records the size of every batch it receives.
pub struct ScriptedVerifier {
    answer: Box<AnswerFn>,
    failures_left: AtomicUsize,
    batches: Mutex<Vec<usize>>,
}

impl ScriptedVerifier {
    pub fn from_fn(f: impl Fn(&Prompt) -> String + Send + Sync + 'static) -> Self {
        ScriptedVerifier {
            answer: Box::new(f),
            failures_left: AtomicUsize::new(0),
            batches: Mutex::new(Vec::new()),
        }
    }

    /// Answers by exact prompt text; unknown prompts get the empty string.
    pub fn from_table(table: HashMap<String, String>) -> Self {
        Self::from_fn(move |p| table.get(&p.text).cloned().unwrap_or_default())
    }

    /// Always returns the same answer.
    pub fn constant(answer: impl Into<String>) -> Self {
        let answer = answer.into();
        Self::from_fn(move |_| answer.clone())
    }

    pub fn with_transient_failures(self, n: usize) -> Self {
        self.failures_left.store(n, Ordering::SeqCst);
        self
    }

    pub fn batch_sizes(&self) -> Vec<usize> {
        self.batches.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    pub fn calls(&self) -> usize {
        self.batches.lock().unwrap_or_else(|e| e.into_inner()).len()
    }
}

impl std::fmt::Debug for ScriptedVerifier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScriptedVerifier").field("calls", &self.calls()).finish()
    }
}

impl Verifier for ScriptedVerifier {
    fn simulate(&self, prompts: &[Prompt]) -> Result<Vec<String>, VerifierError> {
        self.batches.lock().unwrap_or_else(|e| e.into_inner()).push(prompts.len());
        let failing = self
            .failures_left
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
            .is_ok();
        if failing {
            return Err(VerifierError::Transport("scripted failure".into()));
        }
        Ok(prompts.iter().map(|p| (self.answer)(p)).collect())
    }
}
