//! Knowledge graphs with dense, interned ids.
//!
//! Ids are handed out in order of first appearance while reading the
//! training split, then validation, then test. The three splits are kept
//! pairwise disjoint.

mod ground_truth;
mod ratings;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ground_truth::{load_ground_truth, parse_ground_truth, GroundTruth, GroundTruthEntry, GroundTruthRecord};
pub use ratings::{discretize_ratings, tertile_thresholds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntityId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationId(pub u32);

impl EntityId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl RelationId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// A `<subject, predicate, object>` statement over interned ids.
///
/// The derived ordering (subject, then predicate, then object) is the
/// canonical triple order used for tie-breaking and rendering throughout
/// the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub subject: EntityId,
    pub predicate: RelationId,
    pub object: EntityId,
}

impl Triple {
    pub fn new(subject: EntityId, predicate: RelationId, object: EntityId) -> Self {
        Triple {
            subject,
            predicate,
            object,
        }
    }

    pub fn query(&self) -> Query {
        Query {
            subject: self.subject,
            predicate: self.predicate,
        }
    }

    pub fn involves(&self, entity: EntityId) -> bool {
        self.subject == entity || self.object == entity
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {}, {}>", self.subject.0, self.predicate.0, self.object.0)
    }
}

/// An incomplete triple `<subject, predicate, ?>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Query {
    pub subject: EntityId,
    pub predicate: RelationId,
}

impl Query {
    pub fn complete(self, object: EntityId) -> Triple {
        Triple::new(self.subject, self.predicate, object)
    }
}

/// A triple spelled with labels, as it appears in files.
pub type LabeledTriple = [String; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    name: String,
    entity_labels: Vec<String>,
    relation_labels: Vec<String>,
    entity_index: HashMap<String, EntityId>,
    relation_index: HashMap<String, RelationId>,
    train: Vec<Triple>,
    validation: Vec<Triple>,
    test: Vec<Triple>,
    train_set: HashSet<Triple>,
    known: HashMap<Query, Vec<(EntityId, Split)>>,
    incident: Vec<Vec<u32>>,
}

impl KnowledgeGraph {
    /// Interns labeled splits. Duplicates inside one split collapse to the
    /// first occurrence; a triple present in two splits is rejected.
    pub fn from_labeled(
        name: impl Into<String>,
        train: &[LabeledTriple],
        validation: &[LabeledTriple],
        test: &[LabeledTriple],
    ) -> Result<Self> {
        let mut interner = Interner::default();
        let train = interner.intern_split(train);
        let validation = interner.intern_split(validation);
        let test = interner.intern_split(test);
        Self::from_ids(
            name,
            interner.entities,
            interner.relations,
            train,
            validation,
            test,
        )
    }

    pub fn from_ids(
        name: impl Into<String>,
        entity_labels: Vec<String>,
        relation_labels: Vec<String>,
        train: Vec<Triple>,
        validation: Vec<Triple>,
        test: Vec<Triple>,
    ) -> Result<Self> {
        let mut entity_index = HashMap::with_capacity(entity_labels.len());
        for (i, label) in entity_labels.iter().enumerate() {
            if entity_index.insert(label.clone(), EntityId(i as u32)).is_some() {
                return Err(Error::Validation(format!("duplicate entity label {label:?}")));
            }
        }
        let mut relation_index = HashMap::with_capacity(relation_labels.len());
        for (i, label) in relation_labels.iter().enumerate() {
            if relation_index.insert(label.clone(), RelationId(i as u32)).is_some() {
                return Err(Error::Validation(format!("duplicate relation label {label:?}")));
            }
        }

        let n_entities = entity_labels.len();
        let n_relations = relation_labels.len();
        let mut seen: HashMap<Triple, Split> = HashMap::new();
        let mut splits = [
            (Split::Train, train),
            (Split::Validation, validation),
            (Split::Test, test),
        ];
        for (split, triples) in splits.iter_mut() {
            let mut kept = Vec::with_capacity(triples.len());
            for &t in triples.iter() {
                if t.subject.index() >= n_entities
                    || t.object.index() >= n_entities
                    || t.predicate.index() >= n_relations
                {
                    return Err(Error::Validation(format!("triple {t} references an id out of range")));
                }
                match seen.get(&t) {
                    Some(prev) if prev == split => continue,
                    Some(prev) => {
                        return Err(Error::Validation(format!(
                            "triple ({}, {}, {}) appears in both {:?} and {:?} splits",
                            entity_labels[t.subject.index()],
                            relation_labels[t.predicate.index()],
                            entity_labels[t.object.index()],
                            prev,
                            split
                        )))
                    }
                    None => {
                        seen.insert(t, *split);
                        kept.push(t);
                    }
                }
            }
            *triples = kept;
        }
        let [(_, train), (_, validation), (_, test)] = splits;

        let mut known: HashMap<Query, Vec<(EntityId, Split)>> = HashMap::new();
        for (split, triples) in [
            (Split::Train, &train),
            (Split::Validation, &validation),
            (Split::Test, &test),
        ] {
            for t in triples.iter() {
                known.entry(t.query()).or_default().push((t.object, split));
            }
        }
        let mut incident = vec![Vec::new(); n_entities];
        for (i, t) in train.iter().enumerate() {
            incident[t.subject.index()].push(i as u32);
            if t.object != t.subject {
                incident[t.object.index()].push(i as u32);
            }
        }

        Ok(KnowledgeGraph {
            name: name.into(),
            train_set: train.iter().copied().collect(),
            entity_labels,
            relation_labels,
            entity_index,
            relation_index,
            train,
            validation,
            test,
            known,
            incident,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_entities(&self) -> usize {
        self.entity_labels.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relation_labels.len()
    }

    pub fn num_triples(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn entity_labels(&self) -> &[String] {
        &self.entity_labels
    }

    pub fn relation_labels(&self) -> &[String] {
        &self.relation_labels
    }

    pub fn entity_label(&self, id: EntityId) -> &str {
        &self.entity_labels[id.index()]
    }

    pub fn relation_label(&self, id: RelationId) -> &str {
        &self.relation_labels[id.index()]
    }

    pub fn entity_id(&self, label: &str) -> Option<EntityId> {
        self.entity_index.get(label).copied()
    }

    pub fn relation_id(&self, label: &str) -> Option<RelationId> {
        self.relation_index.get(label).copied()
    }

    pub fn entities(&self) -> impl Iterator<Item = EntityId> {
        (0..self.entity_labels.len() as u32).map(EntityId)
    }

    pub fn train(&self) -> &[Triple] {
        &self.train
    }

    pub fn validation(&self) -> &[Triple] {
        &self.validation
    }

    pub fn test(&self) -> &[Triple] {
        &self.test
    }

    pub fn is_train(&self, t: &Triple) -> bool {
        self.train_set.contains(t)
    }

    /// Objects `o` such that `<s, p, o>` is a known triple in one of `splits`.
    pub fn known_objects<'a>(
        &'a self,
        query: Query,
        splits: &'a [Split],
    ) -> impl Iterator<Item = EntityId> + 'a {
        self.known
            .get(&query)
            .into_iter()
            .flatten()
            .filter(move |(_, s)| splits.contains(s))
            .map(|(o, _)| *o)
    }

    /// Training triples with `entity` as subject or object, in split order.
    pub fn incident_train(&self, entity: EntityId) -> impl Iterator<Item = &Triple> + '_ {
        self.incident[entity.index()]
            .iter()
            .map(move |&i| &self.train[i as usize])
    }

    /// Number of training triples touching `entity`.
    pub fn train_degree(&self, entity: EntityId) -> usize {
        self.incident[entity.index()].len()
    }

    pub fn check_entity(&self, id: EntityId) -> Result<()> {
        if id.index() < self.num_entities() {
            Ok(())
        } else {
            Err(Error::Argument(format!("entity id {} out of range", id.0)))
        }
    }

    pub fn check_relation(&self, id: RelationId) -> Result<()> {
        if id.index() < self.num_relations() {
            Ok(())
        } else {
            Err(Error::Argument(format!("relation id {} out of range", id.0)))
        }
    }

    pub fn check_triple(&self, t: &Triple) -> Result<()> {
        self.check_entity(t.subject)?;
        self.check_relation(t.predicate)?;
        self.check_entity(t.object)
    }

    pub fn label_triple(&self, t: &Triple) -> LabeledTriple {
        [
            self.entity_label(t.subject).to_owned(),
            self.relation_label(t.predicate).to_owned(),
            self.entity_label(t.object).to_owned(),
        ]
    }

    pub fn resolve(&self, labels: &LabeledTriple) -> Result<Triple> {
        let entity = |l: &str| {
            self.entity_id(l)
                .ok_or_else(|| Error::Reference(format!("entity {l:?} is not in {}", self.name)))
        };
        let relation = self
            .relation_id(&labels[1])
            .ok_or_else(|| Error::Reference(format!("relation {:?} is not in {}", labels[1], self.name)))?;
        Ok(Triple::new(entity(&labels[0])?, relation, entity(&labels[2])?))
    }

    /// Writes the three splits as tab-separated files.
    pub fn save(&self, train_path: &Path, validation_path: &Path, test_path: &Path) -> Result<()> {
        for (path, triples) in [
            (train_path, &self.train),
            (validation_path, &self.validation),
            (test_path, &self.test),
        ] {
            let mut out = Vec::new();
            for t in triples.iter() {
                let [s, p, o] = self.label_triple(t);
                writeln!(out, "{s}\t{p}\t{o}").expect("write to Vec");
            }
            fs::write(path, out).map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }
}

#[derive(Default)]
struct Interner {
    entities: Vec<String>,
    relations: Vec<String>,
    entity_index: HashMap<String, EntityId>,
    relation_index: HashMap<String, RelationId>,
}

impl Interner {
    fn entity(&mut self, label: &str) -> EntityId {
        if let Some(&id) = self.entity_index.get(label) {
            return id;
        }
        let id = EntityId(self.entities.len() as u32);
        self.entities.push(label.to_owned());
        self.entity_index.insert(label.to_owned(), id);
        id
    }

    fn relation(&mut self, label: &str) -> RelationId {
        if let Some(&id) = self.relation_index.get(label) {
            return id;
        }
        let id = RelationId(self.relations.len() as u32);
        self.relations.push(label.to_owned());
        self.relation_index.insert(label.to_owned(), id);
        id
    }

    fn intern_split(&mut self, triples: &[LabeledTriple]) -> Vec<Triple> {
        triples
            .iter()
            .map(|[s, p, o]| {
                let s = self.entity(s);
                let p = self.relation(p);
                let o = self.entity(o);
                Triple::new(s, p, o)
            })
            .collect()
    }
}

/// Parses one tab-separated split file.
pub fn read_triples(path: &Path) -> Result<Vec<LabeledTriple>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_triples(&text, path)
}

pub fn parse_triples(text: &str, path: &Path) -> Result<Vec<LabeledTriple>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: i + 1,
                message: format!("expected 3 tab-separated columns, found {}", cols.len()),
            });
        }
        if cols.iter().any(|c| c.is_empty()) {
            return Err(Error::Parse {
                path: path.to_owned(),
                line: i + 1,
                message: "empty label".into(),
            });
        }
        out.push([cols[0].to_owned(), cols[1].to_owned(), cols[2].to_owned()]);
    }
    Ok(out)
}

pub fn load_kg(
    train_path: &Path,
    validation_path: &Path,
    test_path: &Path,
    name: &str,
) -> Result<KnowledgeGraph> {
    let train = read_triples(train_path)?;
    let validation = read_triples(validation_path)?;
    let test = read_triples(test_path)?;
    KnowledgeGraph::from_labeled(name, &train, &validation, &test)
}

/// Loads `train.txt`, `valid.txt` and `test.txt` from `dir`.
pub fn load_kg_dir(dir: &Path, name: &str) -> Result<KnowledgeGraph> {
    load_kg(
        &dir.join("train.txt"),
        &dir.join("valid.txt"),
        &dir.join("test.txt"),
        name,
    )
}
