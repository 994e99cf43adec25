//! Resolution of KG names to data.
//!
//! A KG named `X` lives in `<data_root>/X/` as `train.txt`, `valid.txt`
//! and `test.txt`, with an optional `ground_truth.jsonl`. Names of the form
//! `chain<N>` without such a directory are generated on the fly.

use std::fs;
use std::path::{Path, PathBuf};

use kgxbench::kg::{load_ground_truth, load_kg_dir, GroundTruth};
use kgxbench::synthetic::chain_kg;
use kgxbench::KnowledgeGraph;
use sha2::{Digest, Sha256};

use crate::error::{BenchError, Result};

pub const SPLIT_FILES: [&str; 3] = ["train.txt", "valid.txt", "test.txt"];
pub const GROUND_TRUTH_FILE: &str = "ground_truth.jsonl";

#[derive(Debug, Clone)]
pub struct KgCatalog {
    data_root: PathBuf,
}

fn synthetic_size(name: &str) -> Option<usize> {
    name.strip_prefix("chain")?.parse().ok().filter(|&n| n >= 2)
}

impl KgCatalog {
    pub fn new(data_root: impl Into<PathBuf>) -> Self {
        KgCatalog { data_root: data_root.into() }
    }

    pub fn data_root(&self) -> &Path {
        &self.data_root
    }

    pub fn dir(&self, name: &str) -> PathBuf {
        self.data_root.join(name)
    }

    fn is_synthetic(&self, name: &str) -> bool {
        synthetic_size(name).is_some() && !self.dir(name).exists()
    }

    pub fn load(&self, name: &str) -> Result<KnowledgeGraph> {
        if let Some(n) = synthetic_size(name).filter(|_| self.is_synthetic(name)) {
            return Ok(chain_kg(n));
        }
        Ok(load_kg_dir(&self.dir(name), name)?)
    }

    pub fn ground_truth_path(&self, name: &str) -> PathBuf {
        self.dir(name).join(GROUND_TRUTH_FILE)
    }

    pub fn load_ground_truth(&self, kg: &KnowledgeGraph) -> Result<GroundTruth> {
        Ok(load_ground_truth(kg, &self.ground_truth_path(kg.name()))?)
    }

    /// Content hash of the KG's input files (plus the ground truth when
    /// asked), so that editing any of them invalidates cached results.
    pub fn fingerprint(&self, name: &str, with_ground_truth: bool) -> Result<String> {
        let mut hasher = Sha256::new();
        if self.is_synthetic(name) {
            hasher.update(format!("synthetic:{name}:{}", env!("CARGO_PKG_VERSION")));
        } else {
            let dir = self.dir(name);
            let mut files: Vec<&str> = SPLIT_FILES.to_vec();
            if with_ground_truth {
                files.push(GROUND_TRUTH_FILE);
            }
            for file in files {
                let path = dir.join(file);
                let bytes = fs::read(&path).map_err(|e| BenchError::io(&path, e))?;
                hasher.update(file.as_bytes());
                hasher.update((bytes.len() as u64).to_le_bytes());
                hasher.update(&bytes);
            }
        }
        Ok(hex::encode(hasher.finalize()))
    }
}
