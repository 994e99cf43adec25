//! Parallel execution of a task DAG over the artifact store.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::{Condvar, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::dag::{Dag, TaskKind, TaskSpec};
use crate::error::{BenchError, Result};
use crate::store::{cache_key, write_atomic, ArtifactStore};

/// Task bodies plus the fingerprint of their external inputs.
pub trait TaskRunner: Sync {
    /// Hash of whatever the task reads from outside the store.
    fn external_fingerprint(&self, task: &TaskSpec) -> Result<String>;

    /// Produces the task's output artifact.
    fn run(&self, task: &TaskSpec, store: &ArtifactStore) -> Result<Vec<u8>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskStatus {
    Executed,
    CacheHit,
    Failed,
    SkippedFailed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub task: String,
    pub kind: TaskKind,
    pub status: TaskStatus,
    /// Seconds since the Unix epoch.
    pub start: f64,
    pub end: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct RunReport {
    /// One record per DAG node, in node order.
    pub records: Vec<TaskRecord>,
}

impl RunReport {
    pub fn count(&self, kind: TaskKind, status: TaskStatus) -> usize {
        self.records.iter().filter(|r| r.kind == kind && r.status == status).count()
    }

    pub fn executed(&self) -> usize {
        self.records.iter().filter(|r| r.status == TaskStatus::Executed).count()
    }

    pub fn cache_hits(&self) -> usize {
        self.records.iter().filter(|r| r.status == TaskStatus::CacheHit).count()
    }

    pub fn has_failures(&self) -> bool {
        self.records
            .iter()
            .any(|r| matches!(r.status, TaskStatus::Failed | TaskStatus::SkippedFailed))
    }

    pub fn record(&self, task: &str) -> Option<&TaskRecord> {
        self.records.iter().find(|r| r.task == task)
    }

    /// Line-delimited records ordered by start time.
    pub fn to_jsonl(&self) -> String {
        let mut order: Vec<&TaskRecord> = self.records.iter().collect();
        order.sort_by(|a, b| a.start.total_cmp(&b.start));
        let mut out = String::new();
        for r in order {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_jsonl().as_bytes())
    }

    pub fn parse_jsonl(text: &str) -> Result<Vec<TaskRecord>> {
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(BenchError::from))
            .collect()
    }
}

pub fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

#[derive(Debug, Clone)]
enum NodeState {
    Waiting,
    Running,
    Done(String),
    Failed,
}

struct State {
    nodes: Vec<NodeState>,
    missing: Vec<usize>,
    ready: BTreeSet<usize>,
    finished: usize,
    records: Vec<Option<TaskRecord>>,
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    if let Some(s) = payload.downcast_ref::<&str>() {
        (*s).to_owned()
    } else if let Some(s) = payload.downcast_ref::<String>() {
        s.clone()
    } else {
        "task panicked".to_owned()
    }
}

/// Runs every node once its requirements are done, with at most
/// `max_parallel` bodies at a time. Nodes whose artifact is complete under
/// the current cache key are not run. A failure marks every transitive
/// dependent as skipped while independent branches carry on.
pub fn execute(dag: &Dag, store: &ArtifactStore, runner: &dyn TaskRunner, max_parallel: usize) -> Result<RunReport> {
    if max_parallel == 0 {
        return Err(BenchError::Task { task: "executor".into(), message: "max_parallel must be at least 1".into() });
    }
    let n = dag.len();
    let dependents = dag.dependents();
    let missing: Vec<usize> = dag.nodes.iter().map(|t| t.requires.len()).collect();
    let ready = (0..n).filter(|&i| missing[i] == 0).collect();
    let state = Mutex::new(State {
        nodes: vec![NodeState::Waiting; n],
        missing,
        ready,
        finished: 0,
        records: vec![None; n],
    });
    let wake = Condvar::new();

    let process = |i: usize, hashes: Vec<(String, String)>| -> (TaskRecord, Option<String>) {
        let task = &dag.nodes[i];
        let start = now();
        let outcome = (|| -> Result<(TaskStatus, String)> {
            let external = runner.external_fingerprint(task)?;
            let key = cache_key(task.kind, &task.params, &hashes, &external);
            if let Some(hash) = store.lookup(&task.output_name, &key) {
                return Ok((TaskStatus::CacheHit, hash));
            }
            log::info!("running {} ({})", task.output_name, task.kind);
            let bytes = catch_unwind(AssertUnwindSafe(|| runner.run(task, store)))
                .map_err(|p| BenchError::Task { task: task.output_name.clone(), message: panic_message(p) })??;
            let hash = store.commit(&task.output_name, task.kind, &key, &bytes)?;
            Ok((TaskStatus::Executed, hash))
        })();
        let (status, hash, error) = match outcome {
            Ok((status, hash)) => (status, Some(hash), None),
            Err(e) => {
                log::error!("{} failed: {e}", task.output_name);
                (TaskStatus::Failed, None, Some(e.to_string()))
            }
        };
        let record = TaskRecord { task: task.output_name.clone(), kind: task.kind, status, start, end: now(), error };
        (record, hash)
    };

    std::thread::scope(|scope| {
        for _ in 0..max_parallel.min(n.max(1)) {
            scope.spawn(|| loop {
                let (i, hashes) = {
                    let mut s = state.lock().expect("scheduler lock");
                    loop {
                        if s.finished == n {
                            return;
                        }
                        if let Some(i) = s.ready.pop_first() {
                            s.nodes[i] = NodeState::Running;
                            let hashes = dag.nodes[i]
                                .reads
                                .iter()
                                .map(|name| {
                                    let j = dag.node_by_name(name).expect("reads name DAG nodes");
                                    match &s.nodes[j] {
                                        NodeState::Done(h) => (name.clone(), h.clone()),
                                        other => unreachable!("input {name} is {other:?}"),
                                    }
                                })
                                .collect::<Vec<_>>();
                            break (i, hashes);
                        }
                        s = wake.wait(s).expect("scheduler lock");
                    }
                };

                let (record, hash) = process(i, hashes);

                let mut s = state.lock().expect("scheduler lock");
                s.finished += 1;
                match hash {
                    Some(h) => {
                        s.nodes[i] = NodeState::Done(h);
                        for &d in &dependents[i] {
                            s.missing[d] -= 1;
                            if s.missing[d] == 0 && matches!(s.nodes[d], NodeState::Waiting) {
                                s.ready.insert(d);
                            }
                        }
                    }
                    None => {
                        s.nodes[i] = NodeState::Failed;
                        let mut stack = dependents[i].clone();
                        while let Some(d) = stack.pop() {
                            if !matches!(s.nodes[d], NodeState::Waiting) {
                                continue;
                            }
                            s.nodes[d] = NodeState::Failed;
                            s.ready.remove(&d);
                            s.finished += 1;
                            let t = now();
                            s.records[d] = Some(TaskRecord {
                                task: dag.nodes[d].output_name.clone(),
                                kind: dag.nodes[d].kind,
                                status: TaskStatus::SkippedFailed,
                                start: t,
                                end: t,
                                error: Some(format!("requires failed task {}", dag.nodes[i].output_name)),
                            });
                            stack.extend(dependents[d].iter().copied());
                        }
                    }
                }
                s.records[i] = Some(record);
                wake.notify_all();
            });
        }
    });

    let state = state.into_inner().expect("scheduler lock");
    Ok(RunReport { records: state.records.into_iter().map(|r| r.expect("every node finishes")).collect() })
}
