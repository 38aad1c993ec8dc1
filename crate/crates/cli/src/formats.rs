//! On-disk formats: pool JSON, difficulty JSONL with a cache header, run
//! metrics JSONL, checkpoint JSON, and report JSON.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use grpo_lab_core::difficulty::{probe_pool, DifficultyEstimate};
use grpo_lab_core::eval::EvalRecord;
use grpo_lab_core::grpo::StepMetrics;
use grpo_lab_core::policy::PolicyParams;
use grpo_lab_core::pool::TaskPool;
use grpo_lab_core::task::TaskInstance;

use crate::error::{HarnessError, Result};

fn io_err(path: &Path, err: impl std::fmt::Display) -> HarnessError {
    HarnessError::Stage {
        stage: "io".to_string(),
        message: format!("{}: {err}", path.display()),
    }
}

pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
    }
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| io_err(path, e))?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(path, e))
}

/// Stable content hash (first 16 hex chars of SHA-256 over compact JSON).
pub fn content_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("serializable value");
    let digest = Sha256::digest(&bytes);
    let mut hex = String::with_capacity(16);
    for byte in &digest[..8] {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

pub fn write_pool(path: &Path, pool: &TaskPool) -> Result<()> {
    write_json_pretty(path, pool)
}

pub fn read_pool(path: &Path) -> Result<TaskPool> {
    let pool: TaskPool = read_json(path)?;
    for task in pool.train.iter().chain(&pool.test).chain(&pool.ood) {
        task.validate()
            .map_err(|e| io_err(path, format!("invalid task: {e}")))?;
    }
    Ok(pool)
}

/// First line of a `.difficulty.jsonl` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyHeader {
    pub cache_key: String,
    pub base_policy_hash: String,
    pub pool_hash: String,
    pub k: u32,
    pub temperature: f64,
    pub seed: u64,
}

pub fn difficulty_header(
    base: &PolicyParams,
    tasks: &[TaskInstance],
    k: u32,
    temperature: f64,
    seed: u64,
) -> DifficultyHeader {
    let base_policy_hash = content_hash(base);
    let pool_hash = content_hash(&tasks);
    let cache_key = content_hash(&(
        &base_policy_hash,
        &pool_hash,
        k,
        temperature.to_bits(),
        seed,
    ));
    DifficultyHeader {
        cache_key,
        base_policy_hash,
        pool_hash,
        k,
        temperature,
        seed,
    }
}

pub fn write_difficulty(
    path: &Path,
    header: &DifficultyHeader,
    estimates: &[DifficultyEstimate],
) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
    }
    let mut out = String::new();
    out.push_str(&serde_json::to_string(header).map_err(|e| io_err(path, e))?);
    out.push('\n');
    for estimate in estimates {
        out.push_str(&serde_json::to_string(estimate).map_err(|e| io_err(path, e))?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_difficulty(path: &Path) -> Result<(DifficultyHeader, Vec<DifficultyEstimate>)> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = text.lines();
    let header: DifficultyHeader = serde_json::from_str(
        lines
            .next()
            .ok_or_else(|| io_err(path, "empty difficulty file"))?,
    )
    .map_err(|e| io_err(path, e))?;
    let estimates = lines
        .map(|line| serde_json::from_str(line).map_err(|e| io_err(path, e)))
        .collect::<Result<Vec<_>>>()?;
    Ok((header, estimates))
}

/// Probe with a file cache: if `path` already holds estimates under the
/// same cache key they are reused, otherwise the pool is probed and the
/// file (re)written. Probing is the pipeline's most expensive stage.
pub fn probe_with_cache(
    path: &Path,
    base: &PolicyParams,
    tasks: &[TaskInstance],
    k: u32,
    temperature: f64,
    seed: u64,
) -> Result<(DifficultyHeader, Vec<DifficultyEstimate>)> {
    let header = difficulty_header(base, tasks, k, temperature, seed);
    if path.exists() {
        if let Ok((existing, estimates)) = read_difficulty(path) {
            if existing.cache_key == header.cache_key {
                return Ok((existing, estimates));
            }
        }
    }
    let estimates = probe_pool(base, tasks, k, temperature, seed)?;
    write_difficulty(path, &header, &estimates)?;
    Ok((header, estimates))
}

/// One line of a run's `.metrics.jsonl` stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricsLine {
    Step(StepMetrics),
    Eval(EvalRecord),
}

/// Interleave step metrics with checkpoint evaluations in step order.
pub fn write_metrics_stream(
    path: &Path,
    steps: &[StepMetrics],
    evals: &[EvalRecord],
) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
    }
    let mut lines: Vec<MetricsLine> = Vec::with_capacity(steps.len() + evals.len());
    let mut eval_iter = evals.iter().peekable();
    // Evals at step s describe the params after s update steps, so they
    // follow the step-(s-1) metrics line.
    while let Some(eval) = eval_iter.peek() {
        if eval.checkpoint_step == 0 {
            lines.push(MetricsLine::Eval((*eval_iter.next().unwrap()).clone()));
        } else {
            break;
        }
    }
    for step in steps {
        lines.push(MetricsLine::Step(step.clone()));
        while let Some(eval) = eval_iter.peek() {
            if eval.checkpoint_step == step.step + 1 {
                lines.push(MetricsLine::Eval((*eval_iter.next().unwrap()).clone()));
            } else {
                break;
            }
        }
    }
    for eval in eval_iter {
        lines.push(MetricsLine::Eval(eval.clone()));
    }
    let mut out = String::new();
    for line in &lines {
        out.push_str(&serde_json::to_string(line).map_err(|e| io_err(path, e))?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_metrics_stream(path: &Path) -> Result<Vec<MetricsLine>> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    text.lines()
        .map(|line| serde_json::from_str(line).map_err(|e| io_err(path, e)))
        .collect()
}

pub fn write_checkpoint(dir: &Path, step: u32, params: &PolicyParams) -> Result<()> {
    write_json_pretty(&dir.join(format!("ckpt_{step}.json")), params)
}

/// Stage ledger for an output directory; failed runs leave it incomplete.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub completed_stages: Vec<String>,
    pub complete: bool,
}

impl Manifest {
    pub fn new() -> Self {
        Manifest {
            completed_stages: Vec::new(),
            complete: false,
        }
    }

    pub fn record(&mut self, dir: &Path, stage: &str) -> Result<()> {
        self.completed_stages.push(stage.to_string());
        write_json_pretty(&dir.join("MANIFEST.json"), self)
    }

    pub fn finish(&mut self, dir: &Path) -> Result<()> {
        self.complete = true;
        write_json_pretty(&dir.join("MANIFEST.json"), self)
    }
}

impl Default for Manifest {
    fn default() -> Self {
        Manifest::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use grpo_lab_core::policy::FeatureSpec;
    use grpo_lab_core::pool::{build_pool, PoolConfig, Stratum};
    use grpo_lab_core::task::TaskKind;
    use tempfile::tempdir;

    fn tiny_pool() -> TaskPool {
        build_pool(&PoolConfig {
            kind: TaskKind::ShuffledObjects,
            master_seed: 3,
            operand_range: (1, 9),
            train: vec![Stratum {
                count: 12,
                min_steps: 2,
                max_steps: 5,
                min_objects: 3,
                max_objects: 4,
            }],
            test: vec![Stratum {
                count: 4,
                min_steps: 2,
                max_steps: 5,
                min_objects: 3,
                max_objects: 4,
            }],
            ood: vec![],
        })
        .unwrap()
    }

    fn base() -> PolicyParams {
        PolicyParams::new(vec![0.5, 0.0, -1.0, -0.2], FeatureSpec::default(), 1.0).unwrap()
    }

    #[test]
    fn pool_roundtrips_through_disk() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("demo.pool.json");
        let pool = tiny_pool();
        write_pool(&path, &pool).unwrap();
        assert_eq!(read_pool(&path).unwrap(), pool);
    }

    #[test]
    fn corrupted_truth_is_rejected_on_load() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("demo.pool.json");
        let mut pool = tiny_pool();
        pool.train[0].truth += 1;
        write_pool(&path, &pool).unwrap();
        assert!(read_pool(&path).is_err());
    }

    #[test]
    fn probe_cache_hits_on_matching_key() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("probe.difficulty.jsonl");
        let pool = tiny_pool();
        let (h1, e1) = probe_with_cache(&path, &base(), &pool.train, 5, 1.0, 9).unwrap();
        let bytes1 = fs::read(&path).unwrap();
        let (h2, e2) = probe_with_cache(&path, &base(), &pool.train, 5, 1.0, 9).unwrap();
        assert_eq!(h1, h2);
        assert_eq!(e1, e2);
        assert_eq!(bytes1, fs::read(&path).unwrap());
        // Different seed misses the cache and rewrites.
        let (h3, _) = probe_with_cache(&path, &base(), &pool.train, 5, 1.0, 10).unwrap();
        assert_ne!(h1.cache_key, h3.cache_key);
    }

    #[test]
    fn metrics_stream_interleaves_evals_in_step_order() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("run.metrics.jsonl");
        let steps: Vec<StepMetrics> = (0..4)
            .map(|step| StepMetrics {
                step,
                lr: 0.1,
                mean_reward: 0.5,
                learnable_groups: 1,
                total_groups: 2,
                mean_kl: 0.0,
                grad_norm: 0.0,
            })
            .collect();
        let evals: Vec<EvalRecord> = [0u32, 2, 4]
            .iter()
            .map(|&checkpoint_step| EvalRecord {
                checkpoint_step,
                exact_accuracy: 0.5,
                sampled_accuracy: 0.5,
                pass_at_k: None,
                oracle_fallback: false,
            })
            .collect();
        write_metrics_stream(&path, &steps, &evals).unwrap();
        let lines = read_metrics_stream(&path).unwrap();
        assert_eq!(lines.len(), 7);
        assert!(matches!(&lines[0], MetricsLine::Eval(e) if e.checkpoint_step == 0));
        assert!(matches!(&lines[3], MetricsLine::Eval(e) if e.checkpoint_step == 2));
        assert!(matches!(&lines[6], MetricsLine::Eval(e) if e.checkpoint_step == 4));
    }
}
