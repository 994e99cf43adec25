//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Exits non-zero when a criterion fails, except for the FR200K statistics
//! check when the dataset is not available locally.

#[path = "../../core/tests/common/mod.rs"]
mod core_common;
mod common;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use kgxbench::fsv::{build_prompt, fsv_of, verbalize, EvalConfig, FsvVector, Prompting, ScriptedVerifier};
use kgxbench::kg::{load_ground_truth, load_kg_dir, Query};
use kgxbench::kge::{checkpoint, filtered_mrr, lp, rank, train, HyperParams};
use kgxbench::lpx::{best_explanation, explain, kelpie_candidates, relevance, Explanation, LpxConfig, Mode as LpxMode};
use kgxbench::metrics::{average_fsv, classification_report, fsv_distribution};
use kgxbench::synthetic::{chain_hyperparams, chain_kg};
use kgxbench::{KgeModel, KnowledgeGraph, ModelKind, Triple};
use kgxbench_bench::registry::{ExplainerRegistry, VerifierRegistry};
use kgxbench_bench::{run, run_with, Mode, TaskKind, TaskStatus};
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn c1_fsv_truth_table() -> Outcome {
    let table = [((0, 1), 1), ((1, 1), 0), ((0, 0), 0), ((1, 0), -1)];
    for ((without, with), want) in table {
        let got = fsv_of(without, with);
        ensure(got == want, || format!("fsv_of({without}, {with}) = {got}, expected {want}"))?;
    }
    Ok("4/4 cases".into())
}

fn c2_average_ambiguity() -> Outcome {
    let flat = FsvVector::new(vec![0, 0, 0, 0]).unwrap();
    let split = FsvVector::new(vec![-1, -1, 1, 1]).unwrap();
    let (a, b) = (average_fsv(&flat).unwrap(), average_fsv(&split).unwrap());
    ensure(a == 0.0 && b == 0.0, || format!("averages {a} and {b}"))?;
    let (da, db) = (fsv_distribution(&flat).unwrap(), fsv_distribution(&split).unwrap());
    ensure(da == BTreeMap::from([(-1, 0.0), (0, 1.0), (1, 0.0)]), || format!("{da:?}"))?;
    ensure(db == BTreeMap::from([(-1, 0.5), (0, 0.0), (1, 0.5)]), || format!("{db:?}"))?;
    Ok("both average 0, distributions differ".into())
}

fn fr200k_dir() -> PathBuf {
    match std::env::var_os("KGXBENCH_FR200K") {
        Some(dir) => PathBuf::from(dir),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).ancestors().nth(2).unwrap().join("data/FR200K"),
    }
}

/// Whether the FR200K check failed only because the data is absent.
fn fr200k_missing() -> bool {
    !fr200k_dir().join("train.txt").is_file()
}

fn c3_fr200k_statistics() -> Outcome {
    let dir = fr200k_dir();
    if fr200k_missing() {
        return Err(format!(
            "dataset not found at {} (set KGXBENCH_FR200K to a directory with train.txt, valid.txt, test.txt)",
            dir.display()
        ));
    }
    let kg = load_kg_dir(&dir, "FR200K").map_err(|e| e.to_string())?;
    let triples = kg.train().len() + kg.validation().len() + kg.test().len();
    let got = (kg.num_entities(), kg.num_relations(), triples);
    ensure(got == (2125, 6, 12357), || format!("entities/relations/triples = {got:?}, expected (2125, 6, 12357)"))?;
    Ok("2125 entities, 6 relations, 12357 triples".into())
}

fn c4_ranking_oracle() -> Outcome {
    let mut rng = core_common::rng(1);
    let mut checked = 0;
    for case in 0..100 {
        let kg = core_common::random_kg(&mut rng, 10, 3);
        let kind = if case % 2 == 0 { ModelKind::Translational } else { ModelKind::Complex };
        let d = rng.gen_range(1..=4);
        let model = core_common::quantized_model(&mut rng, &kg, kind, d);
        for t in core_common::all_triples(&kg) {
            let got = rank(&model, &kg, &t).map_err(|e| e.to_string())?.rank;
            let want = core_common::oracle_rank(&model, &kg, &t);
            ensure(got == want, || format!("model {case}, {t}: rank {got}, oracle {want}"))?;
            checked += 1;
        }
    }
    Ok(format!("100 models, {checked} triples"))
}

fn c5_gradients() -> Outcome {
    let mut worst: f64 = 0.0;
    for (kind, offset) in [(ModelKind::Translational, 0), (ModelKind::Complex, 1000)] {
        for seed in 0..50 {
            let (model, pos, negs) = core_common::instance(kind, seed + offset);
            let err = core_common::check_instance(&model, &pos, &negs);
            ensure(err <= core_common::TOLERANCE, || format!("{kind:?} seed {seed}: relative error {err:e}"))?;
            worst = worst.max(err);
        }
    }
    Ok(format!("50 instances per model kind, worst relative error {worst:.1e}"))
}

fn c6_training() -> Outcome {
    let kg = chain_kg(50);
    let baseline = core_common::random_baseline_mrr(&kg);
    let hp = chain_hyperparams(0);
    ensure(hp.epochs <= 200, || format!("{} epochs", hp.epochs))?;
    let model = train(&kg, ModelKind::Translational, &hp).map_err(|e| e.to_string())?;
    let mrr = filtered_mrr(&model, &kg, kg.validation()).map_err(|e| e.to_string())?;
    ensure(mrr >= 5.0 * baseline, || format!("MRR {mrr:.4} < 5 x baseline {baseline:.4}"))?;
    Ok(format!("MRR {mrr:.4} = {:.1} x random baseline {baseline:.4}", mrr / baseline))
}

fn c7_explanation_oracle() -> Outcome {
    let mut rng = core_common::rng(21);
    for case in 0..300 {
        let kg = core_common::star_kg(&mut rng, 8);
        let pred = kg.test()[0];
        let k = 1 + case % 2;
        let config = LpxConfig { k, prefilter_size: 8, ..LpxConfig::default() };
        let set = kelpie_candidates(&kg, &pred, &config).map_err(|e| e.to_string())?;
        let mut pool: Vec<Triple> = kg.incident_train(pred.subject).copied().collect();
        pool.sort();
        let subsets = core_common::brute_subsets(&pool, k);
        let enumerated: HashSet<Vec<Triple>> = set.candidates.iter().map(|c| c.triples().to_vec()).collect();
        ensure(enumerated == subsets.iter().cloned().collect(), || format!("case {case}: candidate sets differ"))?;
        let salt = case as u64;
        let scores: Vec<f64> = set.candidates.iter().map(|c| core_common::coarse_score(c.triples(), salt)).collect();
        let got = best_explanation(&pred, &set.candidates, &scores).map_err(|e| e.to_string())?;
        let want = core_common::brute_argmax(&subsets, |s| core_common::coarse_score(s, salt));
        ensure(got.triples() == want.as_slice(), || format!("case {case}: {got:?} vs {want:?}"))?;
    }
    let mut rng = core_common::rng(22);
    for case in 0..6 {
        let kg = core_common::star_kg(&mut rng, 5);
        let pred = kg.test()[0];
        let hp = HyperParams { dimension: 4, epochs: 20, batch_size: 4, seed: case, ..HyperParams::default() };
        let model = train(&kg, ModelKind::Translational, &hp).map_err(|e| e.to_string())?;
        let config = LpxConfig { k: 2, prefilter_size: 8, post_train_epochs: 10, ..LpxConfig::default() };
        let out = explain(&[pred], &kg, &model, &config);
        let mut pool: Vec<Triple> = kg.incident_train(pred.subject).copied().collect();
        pool.sort();
        let subsets = core_common::brute_subsets(&pool, 2);
        let want = core_common::brute_argmax(&subsets, |s| {
            let x = Explanation::new(s.to_vec()).unwrap();
            relevance(&model, &kg, &pred, &x, LpxMode::Necessary, &config).unwrap()
        });
        let got = out[0].explanation.as_ref().ok_or("no explanation")?;
        ensure(got.triples() == want.as_slice(), || format!("relevance case {case}: {got:?} vs {want:?}"))?;
    }
    Ok("300 tie-heavy objectives and 6 relevance searches match exhaustive argmax".into())
}

fn without(kg: &KnowledgeGraph, removed: &Triple) -> KnowledgeGraph {
    KnowledgeGraph::from_ids(
        "without",
        kg.entity_labels().to_vec(),
        kg.relation_labels().to_vec(),
        kg.train().iter().filter(|t| *t != removed).copied().collect(),
        kg.validation().to_vec(),
        kg.test().to_vec(),
    )
    .unwrap()
}

fn c8_necessary_direction() -> Outcome {
    let kg = chain_kg(50);
    let e = |s: &str| kg.entity_id(s).unwrap();
    let pred = Triple::new(e("e0"), kg.relation_id("next").unwrap(), e("e1"));
    let tag = kg.relation_id("tag").unwrap();
    let unrelated = [Triple::new(e("e0"), tag, e("e3")), Triple::new(e("e3"), tag, e("e0"))];
    let config = LpxConfig::default();
    let mut agree = 0;
    let mut notes = Vec::new();
    for seed in 0..10 {
        let hp = chain_hyperparams(seed);
        let model = train(&kg, ModelKind::Translational, &hp).map_err(|e| e.to_string())?;
        let rel = |t: &Triple| {
            let x = Explanation::new(vec![*t]).unwrap();
            relevance(&model, &kg, &pred, &x, LpxMode::Necessary, &config).unwrap()
        };
        let post_ok = unrelated.iter().all(|u| rel(&pred) > rel(u));
        let retrained = |t: &Triple| rank(&train(&without(&kg, t), ModelKind::Translational, &hp).unwrap(), &kg, &pred).unwrap().rank;
        let full = retrained(&pred);
        let full_ok = unrelated.iter().all(|u| full > retrained(u));
        if post_ok && full_ok {
            agree += 1;
        } else {
            notes.push(format!("seed {seed}: post-train {post_ok}, retrain {full_ok}"));
        }
    }
    ensure(agree >= 8, || format!("{agree}/10 seeds ({})", notes.join("; ")))?;
    Ok(format!("{agree}/10 seeds, confirmed by full retraining"))
}

fn c9_classification_report() -> Outcome {
    let mut rng = core_common::rng(99);
    for case in 0..1000 {
        let n = rng.gen_range(1..=40);
        let pred: Vec<i8> = (0..n).map(|_| rng.gen_range(-1..=1)).collect();
        let gold: Vec<i8> = (0..n).map(|_| rng.gen_range(-1..=1)).collect();
        let r = classification_report(&FsvVector::new(pred.clone()).unwrap(), &FsvVector::new(gold.clone()).unwrap(), 1.0)
            .map_err(|e| e.to_string())?;
        for label in [-1i8, 0, 1] {
            let mut confusion = [[0u32; 3]; 3];
            for (p, g) in pred.iter().zip(&gold) {
                confusion[(*p + 1) as usize][(*g + 1) as usize] += 1;
            }
            let l = (label + 1) as usize;
            let tp = confusion[l][l] as f64;
            let predicted: u32 = confusion[l].iter().sum();
            let actual: u32 = confusion.iter().map(|row| row[l]).sum();
            let precision = if predicted == 0 { 0.0 } else { tp / predicted as f64 };
            let recall = if actual == 0 { 0.0 } else { tp / actual as f64 };
            let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
            let c = r.per_class[&label];
            ensure(
                (c.precision, c.recall, c.f_beta, c.support) == (precision, recall, f1, actual as usize),
                || format!("case {case}, class {label}: {c:?}"),
            )?;
        }
        let hits = pred.iter().zip(&gold).filter(|(a, b)| a == b).count();
        ensure(r.accuracy == hits as f64 / n as f64, || format!("case {case}: accuracy {}", r.accuracy))?;
    }
    Ok("1000 random pairs".into())
}

fn royals() -> (KnowledgeGraph, KgeModel) {
    let lt = |s: &str, p: &str, o: &str| [s.to_string(), p.to_string(), o.to_string()];
    let train = [
        lt("James_VI", "child", "Elizabeth_of_Bohemia"),
        lt("James_VI", "child", "Charles_I"),
        lt("Anne_of_Denmark", "child", "Charles_I"),
        lt("Anne_of_Denmark", "spouse", "James_VI"),
        lt("Elizabeth_of_Bohemia", "child", "Sophia_of_Hanover"),
        lt("Charles_I", "spouse", "Henrietta_Maria"),
        lt("Sophia_of_Hanover", "child", "George_I"),
    ];
    let test = [lt("Frederick_V", "spouse", "Elizabeth_of_Bohemia")];
    let kg = KnowledgeGraph::from_labeled("royals", &train, &[], &test).unwrap();
    let n = kg.num_entities();
    let hp = HyperParams { dimension: 1, ..HyperParams::default() };
    let entities = (0..n).map(|i| i as f64).collect();
    let model = KgeModel::from_parts(ModelKind::Translational, hp, n, 2, entities, vec![0.5, 1.0]).unwrap();
    (kg, model)
}

fn c10_prompt_goldens() -> Outcome {
    let (kg, model) = royals();
    let pred = kg.test()[0];
    let x = Explanation::new(vec![kg.train()[4], kg.train()[0]]).unwrap();
    let text = verbalize(&kg, x.triples());
    let golden_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden");
    for (name, prompting, constrained) in [
        ("zero_shot", Prompting::ZeroShot, false),
        ("zero_shot_constrained", Prompting::ZeroShot, true),
        ("few_shot", Prompting::FewShot, false),
        ("few_shot_constrained", Prompting::FewShot, true),
    ] {
        let config = EvalConfig { prompting, constrained, n_examples: 2, constraint_size: 3, seed: 7, ..EvalConfig::default() };
        let prompt = build_prompt(&kg, &model, pred.query(), &text, &config).map_err(|e| e.to_string())?;
        let golden = fs::read_to_string(golden_dir.join(format!("{name}.txt"))).map_err(|e| format!("{name}: {e}"))?;
        ensure(prompt.text == golden, || format!("{name} differs from its golden file"))?;
        ensure(golden.contains("Correct format: Elizabeth_of_Bohemia\n"), || format!("{name}: format line missing"))?;
    }
    Ok("4 prompt variants byte-match".into())
}

fn c11_dedup() -> Outcome {
    let ws = common::Workspace::new();
    let setup = ws.setup("comparison.csv", common::COMPARISON_SETUP);
    let out = run(Mode::Comparison, &ws.options("w", &setup, Mode::Comparison)).map_err(|e| e.to_string())?;
    ensure(!out.failed(), || "run had failures".into())?;
    // two (kg, kge) pairs: ComplEx shared by Kelpie and Criage, TransE alone
    for kind in [TaskKind::Tune, TaskKind::Train, TaskKind::Rank, TaskKind::Select] {
        let n = out.report.count(kind, TaskStatus::Executed);
        let total = out.report.records.iter().filter(|r| r.kind == kind).count();
        ensure(n == 2 && total == 2, || format!("{} executed {n} times over {total} records", kind.as_str()))?;
    }
    let explains = out.report.count(TaskKind::Explain, TaskStatus::Executed);
    ensure(explains == 3, || format!("EXPLAIN executed {explains} times"))?;
    Ok("TUNE/TRAIN/RANK/SELECT once per (kg, kge); EXPLAIN once per row".into())
}

fn c12_idempotence() -> Outcome {
    let ws = common::Workspace::new();
    let setup = ws.setup("comparison.csv", common::COMPARISON_SETUP);
    let options = ws.options("w", &setup, Mode::Comparison);
    let first = run(Mode::Comparison, &options).map_err(|e| e.to_string())?;
    let bytes = fs::read(&first.metrics_path).map_err(|e| e.to_string())?;
    let second = run(Mode::Comparison, &options).map_err(|e| e.to_string())?;
    ensure(second.report.executed() == 0, || format!("{} task bodies ran again", second.report.executed()))?;
    let again = fs::read(&second.metrics_path).map_err(|e| e.to_string())?;
    ensure(again == bytes, || "metrics.json changed".into())?;
    Ok(format!("{} cache hits, metrics.json identical", second.report.cache_hits()))
}

fn c13_parallel_determinism() -> Outcome {
    let ws = common::Workspace::new();
    let setup = ws.setup("comparison.csv", common::COMPARISON_SETUP);
    let mut metrics = Vec::new();
    for (dir, workers) in [("serial", 1), ("parallel", 4)] {
        let mut options = ws.options(dir, &setup, Mode::Comparison);
        options.max_parallel = workers;
        let out = run(Mode::Comparison, &options).map_err(|e| e.to_string())?;
        metrics.push(fs::read(&out.metrics_path).map_err(|e| e.to_string())?);
    }
    ensure(metrics[0] == metrics[1], || "metrics.json differs between 1 and 4 workers".into())?;
    Ok("metrics.json identical for 1 and 4 workers".into())
}

/// A verifier that reads the trained model from the working directory and
/// answers so that each prediction's FSV equals its gold label.
fn gold_verifier(workdir: PathBuf, data: PathBuf) -> impl Fn() -> Result<ScriptedVerifier, String> {
    move || {
        let kg = load_kg_dir(&data.join(common::KG), common::KG).map_err(|e| e.to_string())?;
        let model = checkpoint::load(&workdir.join("artifacts").join(format!("kge.{}_TransE", common::KG)))
            .map_err(|e| e.to_string())?;
        let gt = load_ground_truth(&kg, &data.join(common::KG).join("ground_truth.jsonl")).map_err(|e| e.to_string())?;
        let mut script: HashMap<Query, (i8, String)> = HashMap::new();
        for entry in &gt.entries {
            let q = entry.prediction.query();
            let answer = kg.entity_label(lp(&model, &kg, q).map_err(|e| e.to_string())?).to_owned();
            script.insert(q, (entry.quality, answer));
        }
        Ok(ScriptedVerifier::from_fn(move |prompt| {
            let Some((quality, answer)) = script.get(&prompt.query) else {
                return String::new();
            };
            let knows = match quality {
                1 => prompt.with_explanation,
                0 => true,
                _ => !prompt.with_explanation,
            };
            if knows {
                answer.clone()
            } else {
                String::new()
            }
        }))
    }
}

fn c14_validation_pipeline() -> Outcome {
    let ws = common::Workspace::new();
    let setup = ws.setup("validation.csv", common::VALIDATION_SETUP);
    let mut options = ws.options("w", &setup, Mode::Validation);
    options.settings.verifier = "gold".into();
    let build = gold_verifier(ws.workdir("w"), ws.path().join("data"));
    let mut verifiers = VerifierRegistry::default();
    verifiers.register("gold", move |_| Ok(Arc::new(build()?)));
    let out = run_with(Mode::Validation, &options, ExplainerRegistry::default(), verifiers).map_err(|e| e.to_string())?;
    ensure(!out.failed(), || format!("run failed: {:?}", out.metrics.values().filter_map(|m| m.error.clone()).collect::<Vec<_>>()))?;
    for (key, row) in &out.metrics {
        let report = &row.metrics.as_ref().ok_or("no metrics")?["classification_report"];
        ensure(report["accuracy"] == 1.0, || format!("{key}: accuracy {}", report["accuracy"]))?;
        for label in ["-1", "0", "1"] {
            for field in ["precision", "recall", "f_beta"] {
                let v = &report["per_class"][label][field];
                ensure(*v == 1.0, || format!("{key}: class {label} {field} = {v}"))?;
            }
        }
    }
    Ok(format!("{} setup rows, all classes at 1.0", out.metrics.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("FSV truth table", c1_fsv_truth_table),
        ("average FSV ambiguity pair", c2_average_ambiguity),
        ("FR200K loader statistics", c3_fr200k_statistics),
        ("filtered rank vs sort oracle", c4_ranking_oracle),
        ("loss gradients vs finite differences", c5_gradients),
        ("chain training beats 5x random MRR", c6_training),
        ("best explanation vs exhaustive argmax", c7_explanation_oracle),
        ("necessary relevance direction", c8_necessary_direction),
        ("classification report vs confusion matrix", c9_classification_report),
        ("prompt golden files", c10_prompt_goldens),
        ("workflow deduplication", c11_dedup),
        ("cache idempotence", c12_idempotence),
        ("parallel determinism", c13_parallel_determinism),
        ("end-to-end validation with gold verifier", c14_validation_pipeline),
    ];
    let mut blocking = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        let start = Instant::now();
        let result = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("criterion {n:>2}: PASS  {name} ({secs:.1}s): {detail}"),
            Err(why) => {
                println!("criterion {n:>2}: FAIL  {name} ({secs:.1}s): {why}");
                if !(n == 3 && fr200k_missing()) {
                    blocking += 1;
                }
            }
        }
    }
    if blocking > 0 {
        println!("{blocking} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
