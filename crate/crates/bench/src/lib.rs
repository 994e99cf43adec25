//! Experiment workflow for benchmarking link-prediction explainers.
//!
//! A setup CSV ([`setup`]) is expanded into a DAG of tasks ([`dag`]):
//! tune, train, rank, select predictions, explain, evaluate and aggregate
//! metrics. Shared tasks are deduplicated, independent tasks run in
//! parallel ([`executor`]) and every output is cached on disk under a
//! content-derived key ([`store`]), so reruns only redo what changed.
//! Explanation methods and verifiers are looked up by name ([`registry`]).

pub mod catalog;
pub mod dag;
pub mod error;
pub mod executor;
pub mod registry;
pub mod run;
pub mod setup;
pub mod store;
pub mod tasks;
pub mod verifier;

pub use dag::{instantiate_dag, Dag, Settings, TaskKind, TaskSpec};
pub use error::{BenchError, Result};
pub use executor::{execute, RunReport, TaskRecord, TaskStatus};
pub use run::{run, run_with, RunOptions, RunOutcome};
pub use setup::{parse_setup, Mode, SetupRow};
pub use store::{cache_key, ArtifactStore};
