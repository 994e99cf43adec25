use std::collections::HashMap;

use crate::kg::{EntityId, KnowledgeGraph};

/// Canonical form used to compare verifier answers with entity labels:
/// trimmed, surrounding punctuation removed, lowercased, inner whitespace
/// runs collapsed to a single `_`.
pub fn normalize_answer(raw: &str) -> String {
    let stripped = raw.trim_matches(|c: char| c.is_whitespace() || (c.is_ascii_punctuation() && c != '_'));
    stripped
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join("_")
}

/// Normalized label index; on collisions the smallest id wins.
#[derive(Debug, Clone)]
pub struct AnswerMatcher {
    index: HashMap<String, EntityId>,
}

impl AnswerMatcher {
    pub fn new(kg: &KnowledgeGraph) -> Self {
        let mut index = HashMap::with_capacity(kg.num_entities());
        for e in kg.entities() {
            index.entry(normalize_answer(kg.entity_label(e))).or_insert(e);
        }
        AnswerMatcher { index }
    }

    pub fn find(&self, raw: &str) -> Option<EntityId> {
        let key = normalize_answer(raw);
        if key.is_empty() {
            return None;
        }
        self.index.get(&key).copied()
    }
}

pub fn match_answer(kg: &KnowledgeGraph, raw: &str) -> Option<EntityId> {
    AnswerMatcher::new(kg).find(raw)
}
