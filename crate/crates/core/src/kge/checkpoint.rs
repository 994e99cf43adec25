//! Model checkpoint container.
//!
//! ```text
//! offset  size        content
//! 0       8           header length H, u64 little-endian
//! 8       H           UTF-8 JSON header (see `Header`)
//! 8+H     8*E*W       entity matrix, row-major f64 little-endian
//! ...     8*R*W       relation matrix, row-major f64 little-endian
//! ```
//!
//! `W` is the row width: `d` for translational models, `2d` for complex
//! ones (real parts then imaginary parts). The header field order is fixed,
//! so equal models always serialize to identical bytes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{HyperParams, KgeModel, ModelKind};
use crate::error::{Error, Result};

pub const FORMAT: &str = "kgxbench-checkpoint";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    kind: ModelKind,
    hp: HyperParams,
    num_entities: usize,
    num_relations: usize,
    width: usize,
}

pub fn to_bytes(model: &KgeModel) -> Vec<u8> {
    let header = Header {
        format: FORMAT.into(),
        version: VERSION,
        kind: model.kind(),
        hp: model.hyper_params().clone(),
        num_entities: model.num_entities(),
        num_relations: model.num_relations(),
        width: model.width(),
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let floats = model.entity_matrix().len() + model.relation_matrix().len();
    let mut out = Vec::with_capacity(8 + header.len() + 8 * floats);
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for x in model.entity_matrix().iter().chain(model.relation_matrix()) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<KgeModel> {
    let bad = |m: &str| Error::Checkpoint(m.to_owned());
    if bytes.len() < 8 {
        return Err(bad("truncated header length"));
    }
    let h = u64::from_le_bytes(bytes[..8].try_into().expect("8 bytes")) as usize;
    let header_end = 8usize.checked_add(h).ok_or_else(|| bad("header length overflow"))?;
    if bytes.len() < header_end {
        return Err(bad("truncated header"));
    }
    let header: Header = serde_json::from_slice(&bytes[8..header_end])
        .map_err(|e| Error::Checkpoint(format!("bad header: {e}")))?;
    if header.format != FORMAT || header.version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint {} v{}",
            header.format, header.version
        )));
    }
    if header.width != header.kind.width(header.hp.dimension) {
        return Err(bad("row width does not match kind and dimension"));
    }
    let ne = header.num_entities * header.width;
    let nr = header.num_relations * header.width;
    let body = &bytes[header_end..];
    if body.len() != 8 * (ne + nr) {
        return Err(Error::Checkpoint(format!(
            "expected {} matrix bytes, found {}",
            8 * (ne + nr),
            body.len()
        )));
    }
    let mut floats = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
    let entities: Vec<f64> = floats.by_ref().take(ne).collect();
    let relations: Vec<f64> = floats.collect();
    KgeModel::from_parts(
        header.kind,
        header.hp,
        header.num_entities,
        header.num_relations,
        entities,
        relations,
    )
}

pub fn save(model: &KgeModel, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<KgeModel> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
