#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use kgxbench::kg::GroundTruthRecord;
use kgxbench::synthetic::{chain_hyperparams, chain_kg};
use kgxbench::KnowledgeGraph;
use kgxbench_bench::{Mode, RunOptions, Settings};

pub const KG: &str = "toy";

/// Gold labels of the ground-truth records, in file order.
pub const GOLD: [i64; 8] = [1, 0, -1, 1, 0, -1, 1, 0];

/// Writes a 40-entity chain as `<root>/toy/` with a ground-truth file whose
/// explanation of `<e{i+1}, prev, e{i}>` is `<e{i}, next, e{i+1}>`.
pub fn write_data(root: &Path) -> KnowledgeGraph {
    let kg = chain_kg(40);
    let dir = root.join(KG);
    fs::create_dir_all(&dir).unwrap();
    kg.save(&dir.join("train.txt"), &dir.join("valid.txt"), &dir.join("test.txt")).unwrap();
    let mut lines = String::new();
    for (t, &quality) in kg.test().iter().zip(GOLD.iter()) {
        let [s, p, o] = kg.label_triple(t);
        let record = GroundTruthRecord {
            prediction: [s.clone(), p, o.clone()],
            explanation: vec![[o, "next".into(), s]],
            rating: None,
            quality: Some(quality),
        };
        lines.push_str(&serde_json::to_string(&record).unwrap());
        lines.push('\n');
    }
    fs::write(dir.join("ground_truth.jsonl"), lines).unwrap();
    kgxbench::kg::load_kg_dir(&dir, KG).unwrap()
}

/// Fixed hyperparameters, every test triple kept, four predictions.
pub fn fast_settings() -> Settings {
    Settings {
        tune_budget: 0,
        hyper_params: chain_hyperparams(0),
        rank_threshold: 1000.0,
        max_predictions: 4,
        ..Settings::default()
    }
}

pub struct Workspace {
    pub dir: tempfile::TempDir,
}

impl Workspace {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        write_data(&dir.path().join("data"));
        Workspace { dir }
    }

    pub fn path(&self) -> &Path {
        self.dir.path()
    }

    pub fn workdir(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn setup(&self, file: &str, text: &str) -> PathBuf {
        let path = self.dir.path().join(file);
        fs::write(&path, text).unwrap();
        path
    }

    pub fn options(&self, workdir: &str, setup: &Path, mode: Mode) -> RunOptions {
        let mut options = RunOptions::new(self.workdir(workdir), mode);
        options.setup = setup.to_owned();
        options.data_root = self.dir.path().join("data");
        options.settings = fast_settings();
        options
    }
}

/// Two methods sharing one (kg, model) pair plus a second model.
pub const COMPARISON_SETUP: &str = "\
kg_name,kge_name,lpx_config,eval_config
toy,ComplEx,\"{ method=Kelpie, k=2 }\",\"{ prompting=zero_shot, llm=Llama3.1 }\"
toy,ComplEx,{ method=Criage },\"{ prompting=zero_shot, llm=Llama3.1 }\"
toy,TransE,\"{ method=Kelpie, k=2 }\",\"{ prompting=zero_shot, llm=Llama3.1 }\"
";

pub const VALIDATION_SETUP: &str = "\
kg_name,kge_name,eval_config
toy,TransE,\"{ prompting=zero_shot, llm=Llama3.1 }\"
toy,TransE,\"{ prompting=few_shot, constrained=true }\"
";
