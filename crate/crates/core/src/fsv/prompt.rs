use rand::seq::SliceRandom;

use super::{EvalConfig, Prompt, Prompting};
use crate::error::Result;
use crate::kg::{KnowledgeGraph, Query, Triple};
use crate::kge::{top_candidates, KgeModel};
use crate::seed;

pub const INSTRUCTION_SECTION: &str = "\
You are a helpful, respectful and honest assistant.
Your response should be crisp, short and not repetitive.
Discard any preamble, explanation, greeting, or final consideration.";

pub const FORMAT_SECTION: &str = "\
A triple is a statement <subject, predicate, object>.
The subject and the object are entities, and the predicate is a relation from the subject to the object.
Perform a Link Prediction task, given a query as an incomplete triple <subject, predicate, ?>, predict the missing object that completes the triple making it a true statement.
Strict requirement: output solely the name of a single object entity, discard any explanation or other text.
Correct format: Elizabeth_of_Bohemia
Incorrect format: The object entity is Elizabeth_of_Bohemia.";

pub const CONSTRAINT_PREFIX: &str = "Pick the answer from: ";

const FEWSHOT_STREAM: u64 = 11;
const CONSTRAINT_STREAM: u64 = 12;

/// Solved training queries shown in few-shot prompts.
///
/// Draws `n` training triples with the query's predicate (never the
/// query's own subject), padding from the rest of the training split when
/// the predicate is too rare. Seeded by the config seed and the query.
pub fn fewshot_examples(kg: &KnowledgeGraph, query: Query, n: usize, seed: u64) -> Vec<Triple> {
    let mut rng = seed::rng(seed::derive(
        seed,
        &[FEWSHOT_STREAM, query.subject.0 as u64, query.predicate.0 as u64],
    ));
    let (same, other): (Vec<Triple>, Vec<Triple>) = kg
        .train()
        .iter()
        .filter(|t| t.subject != query.subject)
        .partition(|t| t.predicate == query.predicate);
    let mut picked: Vec<Triple> = same.choose_multiple(&mut rng, n).copied().collect();
    if picked.len() < n {
        let missing = n - picked.len();
        picked.extend(other.choose_multiple(&mut rng, missing).copied());
    }
    picked
}

fn query_line(kg: &KnowledgeGraph, query: Query) -> String {
    format!(
        "({}, {}, ?)",
        kg.entity_label(query.subject),
        kg.relation_label(query.predicate)
    )
}

/// Instantiates the prompt template.
///
/// Sections are separated by blank lines: instruction, format rules, the
/// few-shot examples (if any), the query line immediately followed by the
/// explanation lines (if any), and the output constraint (if any). Empty
/// sections are dropped.
pub fn build_prompt(
    kg: &KnowledgeGraph,
    model: &KgeModel,
    query: Query,
    explanation_text: &str,
    config: &EvalConfig,
) -> Result<Prompt> {
    config.validate()?;
    kg.check_entity(query.subject)?;
    kg.check_relation(query.predicate)?;
    let mut sections = vec![INSTRUCTION_SECTION.to_owned(), FORMAT_SECTION.to_owned()];

    if config.prompting == Prompting::FewShot {
        let examples = fewshot_examples(kg, query, config.n_examples, config.seed);
        if !examples.is_empty() {
            let lines: Vec<String> = examples
                .iter()
                .map(|t| format!("{} -> {}", query_line(kg, t.query()), kg.entity_label(t.object)))
                .collect();
            sections.push(lines.join("\n"));
        }
    }

    let mut query_block = query_line(kg, query);
    if !explanation_text.is_empty() {
        query_block.push('\n');
        query_block.push_str(explanation_text);
    }
    sections.push(query_block);

    if config.constrained {
        let mut options = top_candidates(model, kg, query, config.constraint_size)?;
        let mut rng = seed::rng(seed::derive(
            config.seed,
            &[CONSTRAINT_STREAM, query.subject.0 as u64, query.predicate.0 as u64],
        ));
        options.shuffle(&mut rng);
        let labels: Vec<&str> = options.iter().map(|&e| kg.entity_label(e)).collect();
        sections.push(format!("{CONSTRAINT_PREFIX}{}", labels.join(", ")));
    }

    Ok(Prompt {
        text: sections.join("\n\n"),
        query,
        with_explanation: !explanation_text.is_empty(),
    })
}
