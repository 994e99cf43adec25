//! On-disk artifact cache.
//!
//! Each artifact `<root>/<name>` has a sidecar `<root>/<name>.meta` with
//! the cache key it was produced under and the hash of its content. An
//! artifact counts as complete only if both exist, the key matches and the
//! content still hashes to the recorded value. Commits go through a
//! temporary file and a rename, and the old sidecar is removed first, so an
//! interrupted commit never leaves a complete-looking stale artifact.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::dag::TaskKind;
use crate::error::{BenchError, Result};

/// Part of every cache key; bump when artifact layouts change.
pub const ENGINE_VERSION: &str = "kgxbench-engine/1";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash over the task kind, its canonical params, the content hashes of
/// the artifacts it reads and the fingerprint of external inputs.
pub fn cache_key(
    kind: TaskKind,
    params: &BTreeMap<String, Value>,
    inputs: &[(String, String)],
    external: &str,
) -> String {
    let mut inputs = inputs.to_vec();
    inputs.sort();
    let material = serde_json::json!({
        "engine": ENGINE_VERSION,
        "checkpoint": kgxbench::kge::checkpoint::VERSION,
        "kind": kind,
        "params": params,
        "inputs": inputs,
        "external": external,
    });
    sha256_hex(serde_json::to_string(&material).expect("key material serializes").as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactMeta {
    pub kind: TaskKind,
    pub cache_key: String,
    pub content_hash: String,
    pub size: u64,
}

#[derive(Debug)]
pub struct ArtifactStore {
    root: PathBuf,
    counter: AtomicU64,
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    let n = COUNTER.fetch_add(1, Ordering::Relaxed);
    let file_name = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{file_name}.tmp.{}.{n}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    result.map_err(|e| {
        let _ = fs::remove_file(&tmp);
        BenchError::io(path, e)
    })
}

impl ArtifactStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| BenchError::io(&root, e))?;
        Ok(ArtifactStore { root, counter: AtomicU64::new(0) })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn meta_path(&self, name: &str) -> PathBuf {
        self.root.join(format!("{name}.meta"))
    }

    pub fn meta(&self, name: &str) -> Option<ArtifactMeta> {
        let bytes = fs::read(self.meta_path(name)).ok()?;
        serde_json::from_slice(&bytes).ok()
    }

    /// Content hash of a complete artifact produced under `key`.
    pub fn lookup(&self, name: &str, key: &str) -> Option<String> {
        let meta = self.meta(name)?;
        if meta.cache_key != key {
            return None;
        }
        let bytes = fs::read(self.path(name)).ok()?;
        (bytes.len() as u64 == meta.size && sha256_hex(&bytes) == meta.content_hash).then_some(meta.content_hash)
    }

    pub fn read(&self, name: &str) -> Result<Vec<u8>> {
        let path = self.path(name);
        fs::read(&path).map_err(|e| BenchError::io(path, e))
    }

    pub fn read_string(&self, name: &str) -> Result<String> {
        String::from_utf8(self.read(name)?).map_err(|e| BenchError::artifact(name, e))
    }

    /// Stores `bytes` as `name` and returns their content hash.
    pub fn commit(&self, name: &str, kind: TaskKind, key: &str, bytes: &[u8]) -> Result<String> {
        self.counter.fetch_add(1, Ordering::Relaxed);
        let meta_path = self.meta_path(name);
        match fs::remove_file(&meta_path) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(BenchError::io(meta_path, e)),
        }
        write_atomic(&self.path(name), bytes)?;
        let meta = ArtifactMeta {
            kind,
            cache_key: key.to_owned(),
            content_hash: sha256_hex(bytes),
            size: bytes.len() as u64,
        };
        write_atomic(&meta_path, &serde_json::to_vec_pretty(&meta)?)?;
        Ok(meta.content_hash)
    }

    /// Number of commits made through this handle.
    pub fn commits(&self) -> u64 {
        self.counter.load(Ordering::Relaxed)
    }
}
