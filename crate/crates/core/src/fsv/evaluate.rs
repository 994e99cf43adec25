use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{build_prompt, fsv_of, indicator, verbalize, AnswerMatcher, EvalConfig, FsvVector, Prompt, Verifier};
use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, Triple};
use crate::kge::{lp, KgeModel};
use crate::lpx::Explanation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    /// Delay before the second attempt; doubled after every failure.
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 3, base_delay: Duration::from_millis(250) }
    }
}

impl RetryPolicy {
    pub fn immediate() -> Self {
        RetryPolicy { base_delay: Duration::ZERO, ..RetryPolicy::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalRuntime {
    /// Number of batches that may be in flight at once.
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
}

impl Default for EvalRuntime {
    fn default() -> Self {
        EvalRuntime { max_in_flight: 1, retry: RetryPolicy::default() }
    }
}

/// One simulation: what the verifier said and whether it guessed the
/// predictor's answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub raw_answer: String,
    pub matched_entity: Option<EntityId>,
    pub correct: u8,
    /// Set when the verifier kept failing and the simulation was scored 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationScore {
    pub prediction: Triple,
    pub lp_answer: EntityId,
    pub without: SimulationResult,
    pub with: SimulationResult,
    pub fsv: i8,
}

fn simulate_with_retry(verifier: &dyn Verifier, batch: &[Prompt], retry: &RetryPolicy) -> std::result::Result<Vec<String>, String> {
    let mut delay = retry.base_delay;
    let mut last = String::new();
    for attempt in 1..=retry.max_attempts.max(1) {
        match verifier.simulate(batch) {
            Ok(answers) if answers.len() == batch.len() => return Ok(answers),
            Ok(answers) => {
                last = format!("verifier returned {} answers for {} prompts", answers.len(), batch.len());
            }
            Err(e) => last = e.to_string(),
        }
        log::debug!("verifier attempt {attempt} failed: {last}");
        if attempt < retry.max_attempts && !delay.is_zero() {
            std::thread::sleep(delay);
            delay *= 2;
        }
    }
    Err(last)
}

/// Runs `prompts` through the verifier in chunks of `batch_size`, keeping
/// input order. A chunk that fails every attempt yields empty answers
/// carrying the error.
fn run_batches(
    prompts: &[Prompt],
    verifier: &dyn Verifier,
    batch_size: usize,
    runtime: &EvalRuntime,
) -> Vec<std::result::Result<String, String>> {
    let chunks: Vec<&[Prompt]> = prompts.chunks(batch_size).collect();
    let mut per_chunk: Vec<Option<std::result::Result<Vec<String>, String>>> = vec![None; chunks.len()];
    let workers = runtime.max_in_flight.max(1).min(chunks.len());

    if workers <= 1 {
        for (slot, chunk) in per_chunk.iter_mut().zip(&chunks) {
            *slot = Some(simulate_with_retry(verifier, chunk, &runtime.retry));
        }
    } else {
        let next = AtomicUsize::new(0);
        let done = Mutex::new(Vec::with_capacity(chunks.len()));
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(chunk) = chunks.get(i) else { break };
                    let out = simulate_with_retry(verifier, chunk, &runtime.retry);
                    done.lock().unwrap_or_else(|e| e.into_inner()).push((i, out));
                });
            }
        });
        for (i, out) in done.into_inner().unwrap_or_else(|e| e.into_inner()) {
            per_chunk[i] = Some(out);
        }
    }

    let mut answers = Vec::with_capacity(prompts.len());
    for (chunk, out) in chunks.iter().zip(per_chunk) {
        match out.expect("every chunk is simulated") {
            Ok(batch) => answers.extend(batch.into_iter().map(Ok)),
            Err(e) => answers.extend(std::iter::repeat(Err(e)).take(chunk.len())),
        }
    }
    answers
}

fn score_answer(matcher: &AnswerMatcher, lp_answer: EntityId, answer: std::result::Result<String, String>, prompt: &Prompt) -> SimulationResult {
    match answer {
        Ok(raw) => {
            let matched = matcher.find(&raw);
            SimulationResult { correct: indicator(lp_answer, matched), raw_answer: raw, matched_entity: matched, error: None }
        }
        Err(e) => {
            log::warn!(
                "simulation of {:?} ({} explanation) failed, scored 0: {e}",
                prompt.query,
                if prompt.with_explanation { "with" } else { "without" }
            );
            SimulationResult { raw_answer: String::new(), matched_entity: None, correct: 0, error: Some(e) }
        }
    }
}

/// FSV protocol over already verbalized explanations.
///
/// For each prediction, the prompt without explanation and the prompt with
/// `texts[i]` are laid out as `[without_0, with_0, without_1, ...]` and sent
/// in batches of `config.batch_size`.
pub fn evaluate_texts(
    predictions: &[Triple],
    texts: &[String],
    kg: &KnowledgeGraph,
    model: &KgeModel,
    verifier: &dyn Verifier,
    config: &EvalConfig,
    runtime: &EvalRuntime,
) -> Result<Vec<SimulationScore>> {
    if predictions.len() != texts.len() {
        return Err(Error::Argument(format!(
            "{} predictions but {} explanations",
            predictions.len(),
            texts.len()
        )));
    }
    config.validate()?;
    if !model.fits(kg) {
        return Err(Error::Argument("model does not match the knowledge graph".into()));
    }

    let mut lp_answers = Vec::with_capacity(predictions.len());
    let mut prompts = Vec::with_capacity(2 * predictions.len());
    for (prediction, text) in predictions.iter().zip(texts) {
        kg.check_triple(prediction)?;
        let query = prediction.query();
        lp_answers.push(lp(model, kg, query)?);
        prompts.push(build_prompt(kg, model, query, "", config)?);
        prompts.push(build_prompt(kg, model, query, text, config)?);
    }

    let answers = run_batches(&prompts, verifier, config.batch_size, runtime);
    let matcher = AnswerMatcher::new(kg);
    let mut answers = answers.into_iter();
    let mut out = Vec::with_capacity(predictions.len());
    for (i, (prediction, lp_answer)) in predictions.iter().zip(lp_answers).enumerate() {
        let without = score_answer(&matcher, lp_answer, answers.next().expect("two answers per item"), &prompts[2 * i]);
        let with = score_answer(&matcher, lp_answer, answers.next().expect("two answers per item"), &prompts[2 * i + 1]);
        out.push(SimulationScore {
            prediction: *prediction,
            lp_answer,
            fsv: fsv_of(without.correct, with.correct),
            without,
            with,
        });
    }
    Ok(out)
}

/// FSV of each explanation with the verbatim verbalizer. `None` stands for
/// the empty explanation.
pub fn evaluate(
    predictions: &[Triple],
    explanations: &[Option<Explanation>],
    kg: &KnowledgeGraph,
    model: &KgeModel,
    verifier: &dyn Verifier,
    config: &EvalConfig,
) -> Result<FsvVector> {
    let texts: Vec<String> = explanations
        .iter()
        .map(|x| x.as_ref().map(|x| verbalize(kg, x.triples())).unwrap_or_default())
        .collect();
    let scores = evaluate_texts(predictions, &texts, kg, model, verifier, config, &EvalRuntime::default())?;
    FsvVector::new(scores.iter().map(|s| s.fsv).collect())
}
