//! Core algorithms for benchmarking link-prediction explainers.
//!
//! The crate is split along the pipeline:
//!
//! - [`kg`]: interned knowledge graphs, split loaders and ground-truth datasets.
//! - [`kge`]: translational and complex-bilinear embedding models, training,
//!   filtered ranking and single-row post-training.
//! - [`lpx`]: explanation search framed as picking the best subset from a
//!   finite candidate space.
//! - [`fsv`]: prompt construction, verifier abstraction and the forward
//!   simulatability variation protocol.
//! - [`metrics`]: aggregation of FSV vectors.
//!
//! Everything here is single-threaded and free of OS dependencies so that
//! the crate also builds for `wasm32-unknown-unknown`.

pub mod error;
pub mod fsv;
pub mod kg;
pub mod kge;
pub mod lpx;
pub mod metrics;
pub mod seed;
pub mod synthetic;

pub use error::{Error, Result};
pub use kg::{EntityId, KnowledgeGraph, Query, RelationId, Triple};
pub use kge::{HyperParams, KgeModel, ModelKind};
