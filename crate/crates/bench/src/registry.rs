//! Name-to-constructor registries for explainers and verifiers.
//!
//! New explanation methods plug in by name without touching the engine:
//!
//! ```
//! use std::sync::Arc;
//! use kgxbench::lpx::{BuiltinExplainer, LpxConfig, Method};
//! use kgxbench_bench::registry::ExplainerRegistry;
//!
//! let mut registry = ExplainerRegistry::default();
//! registry.register_fn("first_fact", |_cell| {
//!     let config = LpxConfig { method: Method::SingleTriple, k: 1, ..LpxConfig::default() };
//!     Ok(Arc::new(BuiltinExplainer { config }))
//! });
//! assert!(registry.contains("first_fact"));
//! ```

use std::collections::BTreeMap;
use std::sync::Arc;

use kgxbench::fsv::{EvalConfig, Verifier};
use kgxbench::lpx::{BuiltinExplainer, Explainer, LpxConfig, Method};
use serde_json::Value;

use crate::error::{BenchError, Result};
use crate::setup::ConfigCell;
use crate::verifier::{ReaderVerifier, RemoteVerifier};

pub trait ExplainerFactory: Send + Sync {
    /// Checks a config cell and completes it with defaults. Equal results
    /// mean equal explanation tasks.
    fn resolve(&self, cell: &ConfigCell) -> std::result::Result<Value, String>;

    fn build(&self, params: &Value) -> std::result::Result<Arc<dyn Explainer>, String>;
}

/// The core methods, resolved to a full [`LpxConfig`].
struct BuiltinFactory;

impl ExplainerFactory for BuiltinFactory {
    fn resolve(&self, cell: &ConfigCell) -> std::result::Result<Value, String> {
        let name = cell.get("method").and_then(Value::as_str).unwrap_or_default();
        let (method, summarize) = Method::from_name(name).ok_or_else(|| format!("unknown method '{name}'"))?;
        let mut object: serde_json::Map<String, Value> = cell.clone().into_iter().collect();
        object.insert("method".into(), serde_json::to_value(method).expect("enum serializes"));
        if summarize {
            object.entry("summarize").or_insert(Value::Bool(true));
        }
        let config: LpxConfig = serde_json::from_value(Value::Object(object)).map_err(|e| e.to_string())?;
        config.validate().map_err(|e| e.to_string())?;
        Ok(serde_json::to_value(config).expect("config serializes"))
    }

    fn build(&self, params: &Value) -> std::result::Result<Arc<dyn Explainer>, String> {
        let config: LpxConfig = serde_json::from_value(params.clone()).map_err(|e| e.to_string())?;
        Ok(Arc::new(BuiltinExplainer { config }))
    }
}

type ExplainerFn = dyn Fn(&ConfigCell) -> std::result::Result<Arc<dyn Explainer>, String> + Send + Sync;

/// A plain function factory; the cell itself is the task identity.
struct FnFactory(Box<ExplainerFn>);

impl ExplainerFactory for FnFactory {
    fn resolve(&self, cell: &ConfigCell) -> std::result::Result<Value, String> {
        (self.0)(cell)?;
        Ok(serde_json::to_value(cell).expect("cell serializes"))
    }

    fn build(&self, params: &Value) -> std::result::Result<Arc<dyn Explainer>, String> {
        let cell: ConfigCell = serde_json::from_value(params.clone()).map_err(|e| e.to_string())?;
        (self.0)(&cell)
    }
}

#[derive(Clone)]
pub struct ExplainerRegistry {
    factories: BTreeMap<String, Arc<dyn ExplainerFactory>>,
}

pub const BUILTIN_METHODS: [&str; 9] = [
    "kelpie",
    "kelpie++",
    "criage",
    "dp",
    "neighborhood",
    "single_triple",
    "random_subject",
    "random_predicate",
    "random_object",
];

impl Default for ExplainerRegistry {
    fn default() -> Self {
        let builtin: Arc<dyn ExplainerFactory> = Arc::new(BuiltinFactory);
        let factories = BUILTIN_METHODS
            .iter()
            .map(|&name| (name.to_owned(), Arc::clone(&builtin)))
            .collect();
        ExplainerRegistry { factories }
    }
}

impl ExplainerRegistry {
    pub fn empty() -> Self {
        ExplainerRegistry { factories: BTreeMap::new() }
    }

    /// Registers (or replaces) a method. Names are case-insensitive.
    pub fn register(&mut self, name: &str, factory: Arc<dyn ExplainerFactory>) {
        self.factories.insert(name.to_ascii_lowercase(), factory);
    }

    pub fn register_fn(
        &mut self,
        name: &str,
        f: impl Fn(&ConfigCell) -> std::result::Result<Arc<dyn Explainer>, String> + Send + Sync + 'static,
    ) {
        self.register(name, Arc::new(FnFactory(Box::new(f))));
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(&name.to_ascii_lowercase())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    fn factory(&self, name: &str) -> Result<&Arc<dyn ExplainerFactory>> {
        self.factories
            .get(&name.to_ascii_lowercase())
            .ok_or_else(|| BenchError::Unknown { what: "explanation method", name: name.to_owned() })
    }

    pub fn resolve(&self, name: &str, cell: &ConfigCell) -> std::result::Result<Value, String> {
        self.factory(name).map_err(|e| e.to_string())?.resolve(cell)
    }

    pub fn build(&self, name: &str, params: &Value) -> Result<Arc<dyn Explainer>> {
        self.factory(name)?
            .build(params)
            .map_err(|message| BenchError::Unknown { what: "explainer config", name: message })
    }
}

/// What a verifier constructor gets to see.
pub struct VerifierArgs<'a> {
    pub url: Option<&'a str>,
    pub eval: &'a EvalConfig,
}

type VerifierFn = dyn Fn(&VerifierArgs) -> std::result::Result<Arc<dyn Verifier>, String> + Send + Sync;

#[derive(Clone)]
pub struct VerifierRegistry {
    constructors: BTreeMap<String, Arc<VerifierFn>>,
}

impl Default for VerifierRegistry {
    fn default() -> Self {
        let mut registry = VerifierRegistry { constructors: BTreeMap::new() };
        registry.register("mock", |_| Ok(Arc::new(ReaderVerifier)));
        registry.register("remote", |args| {
            let url = args.url.ok_or("the remote verifier needs --verifier-url")?;
            Ok(Arc::new(RemoteVerifier::new(url, args.eval.llm_model.clone())))
        });
        registry
    }
}

impl VerifierRegistry {
    pub fn register(
        &mut self,
        name: &str,
        f: impl Fn(&VerifierArgs) -> std::result::Result<Arc<dyn Verifier>, String> + Send + Sync + 'static,
    ) {
        self.constructors.insert(name.to_ascii_lowercase(), Arc::new(f));
    }

    pub fn contains(&self, name: &str) -> bool {
        self.constructors.contains_key(&name.to_ascii_lowercase())
    }

    pub fn build(&self, name: &str, args: &VerifierArgs) -> Result<Arc<dyn Verifier>> {
        let ctor = self
            .constructors
            .get(&name.to_ascii_lowercase())
            .ok_or_else(|| BenchError::Unknown { what: "verifier", name: name.to_owned() })?;
        ctor(args).map_err(BenchError::Verifier)
    }
}
