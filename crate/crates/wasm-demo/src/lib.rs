//! wasm-bindgen bindings for the browser demo in `www/`.
//!
//! Build with `wasm-pack build --target web --out-dir www/pkg`.

use kgxbench::fsv::{build_prompt, verbalize, EvalConfig, FsvVector, Prompting};
use kgxbench::kge::{filtered_mrr, lp, train, ModelKind};
use kgxbench::lpx::{explain, LpxConfig};
use kgxbench::metrics::{classification_report, summarize};
use kgxbench::synthetic::{chain_hyperparams, chain_kg};
use kgxbench::{KgeModel, KnowledgeGraph, Triple};
use serde_json::json;
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// A trained model on a synthetic chain graph.
#[wasm_bindgen]
pub struct Demo {
    kg: KnowledgeGraph,
    model: KgeModel,
    mrr: f64,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(entities: usize, epochs: usize, seed: u64) -> Result<Demo, JsError> {
        if !(4..=200).contains(&entities) {
            return Err(JsError::new("entities must be between 4 and 200"));
        }
        let kg = chain_kg(entities);
        let hp = kgxbench::HyperParams { epochs, ..chain_hyperparams(seed) };
        let model = train(&kg, ModelKind::Translational, &hp).map_err(js_err)?;
        let mrr = filtered_mrr(&model, &kg, kg.validation()).map_err(js_err)?;
        Ok(Demo { kg, model, mrr })
    }

    #[wasm_bindgen(getter)]
    pub fn mrr(&self) -> f64 {
        self.mrr
    }

    /// Test triples with the model's answer, as JSON.
    pub fn predictions(&self) -> Result<String, JsError> {
        let rows: Vec<_> = self
            .kg
            .test()
            .iter()
            .map(|t| {
                let answer = lp(&self.model, &self.kg, t.query()).map(|e| self.kg.entity_label(e).to_owned());
                json!({"triple": self.kg.label_triple(t), "answer": answer.ok()})
            })
            .collect();
        Ok(serde_json::to_string(&rows)?)
    }

    /// Explains test triple `index` with neighborhood search up to `k` triples.
    pub fn explain(&self, index: usize, k: usize) -> Result<String, JsError> {
        let pred = self.prediction(index)?;
        let config = LpxConfig { k: k.clamp(1, 3), ..LpxConfig::default() };
        let out = explain(&[pred], &self.kg, &self.model, &config).remove(0);
        let triples: Vec<_> = out
            .explanation
            .iter()
            .flat_map(|x| x.triples().iter().map(|t| self.kg.label_triple(t)))
            .collect();
        Ok(serde_json::to_string(&json!({
            "prediction": self.kg.label_triple(&pred),
            "explanation": triples,
            "relevance": out.relevance,
            "failure": out.failure,
        }))?)
    }

    /// The verifier prompt for test triple `index`, with the explanation
    /// found by `explain` when `with_explanation` is set.
    pub fn prompt(&self, index: usize, few_shot: bool, constrained: bool, with_explanation: bool) -> Result<String, JsError> {
        let pred = self.prediction(index)?;
        let text = if with_explanation {
            let out = explain(&[pred], &self.kg, &self.model, &LpxConfig { k: 2, ..LpxConfig::default() }).remove(0);
            out.explanation.map(|x| verbalize(&self.kg, x.triples())).unwrap_or_default()
        } else {
            String::new()
        };
        let config = EvalConfig {
            prompting: if few_shot { Prompting::FewShot } else { Prompting::ZeroShot },
            constrained,
            ..EvalConfig::default()
        };
        Ok(build_prompt(&self.kg, &self.model, pred.query(), &text, &config).map_err(js_err)?.text)
    }

    fn prediction(&self, index: usize) -> Result<Triple, JsError> {
        self.kg
            .test()
            .get(index)
            .copied()
            .ok_or_else(|| JsError::new(&format!("no test triple {index}")))
    }
}

fn parse_labels(text: &str) -> Result<FsvVector, JsError> {
    let values = text
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<i8>().map_err(|_| JsError::new(&format!("not a label: {s}"))))
        .collect::<Result<Vec<_>, _>>()?;
    FsvVector::new(values).map_err(js_err)
}

/// Average, distribution and (when `gold` is non-empty) the classification
/// report of an FSV vector, as JSON.
#[wasm_bindgen]
pub fn fsv_metrics(fsv: &str, gold: &str, beta: f64) -> Result<String, JsError> {
    let v = parse_labels(fsv)?;
    let summary = summarize(&v).map_err(js_err)?;
    let report = if gold.trim().is_empty() {
        None
    } else {
        Some(classification_report(&v, &parse_labels(gold)?, beta).map_err(js_err)?)
    };
    Ok(serde_json::to_string(&json!({
        "average_fsv": summary.average,
        "fsv_distribution": summary.distribution,
        "classification_report": report,
    }))?)
}
