//! Test-set accuracy, pass@k, and the learnable-percentage correlation
//! analysis.

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::math;
use crate::policy::{exact_success_probability, sample_trajectory, PolicyParams};
use crate::rng::StreamKey;
use crate::task::{check_correct, TaskInstance};

/// Monte-Carlo sample count used when a task exceeds the exact-oracle caps.
pub const FALLBACK_SAMPLES: u32 = 10_000;

const FALLBACK_SEED: u64 = 0x6163_6375;

/// One checkpoint's evaluation results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub checkpoint_step: u32,
    /// Mean oracle success probability over the task set (noise-free
    /// accuracy, equal to expected accuracy under temperature-1 sampling).
    pub exact_accuracy: f64,
    /// One sample per task at temperature 1.
    pub sampled_accuracy: f64,
    pub pass_at_k: Option<PassAtK>,
    /// True when any task fell back to Monte-Carlo scoring.
    pub oracle_fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassAtK {
    pub k: u32,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracyReport {
    pub accuracy: f64,
    /// Tasks scored by Monte-Carlo fallback ([`FALLBACK_SAMPLES`] samples)
    /// because they exceeded the exact-oracle size caps.
    pub fallback_tasks: u32,
}

/// Mean exact success probability over `tasks` at temperature 1, with a
/// deterministic sampled fallback for tasks beyond the oracle caps.
pub fn evaluate_accuracy_detailed(
    params: &PolicyParams,
    tasks: &[TaskInstance],
) -> Result<AccuracyReport> {
    if tasks.is_empty() {
        return Err(CoreError::InvalidParameter("task set must be non-empty".into()));
    }
    let mut fallback_tasks = 0;
    let mut scores: alloc::vec::Vec<(&str, f64)> = alloc::vec::Vec::with_capacity(tasks.len());
    for task in tasks {
        match exact_success_probability(params, task, 1.0) {
            Ok(q) => scores.push((task.id.as_str(), q)),
            Err(CoreError::UnsupportedSize(_)) => {
                fallback_tasks += 1;
                let mut successes = 0u32;
                for i in 0..FALLBACK_SAMPLES {
                    let mut rng = StreamKey::new(FALLBACK_SEED)
                        .mix_str("acc-fallback")
                        .mix_str(&task.id)
                        .mix_u64(u64::from(i))
                        .rng();
                    let traj = sample_trajectory(params, task, 1.0, &mut rng);
                    if check_correct(task, traj.derived_answer) {
                        successes += 1;
                    }
                }
                scores.push((
                    task.id.as_str(),
                    f64::from(successes) / f64::from(FALLBACK_SAMPLES),
                ));
            }
            Err(other) => return Err(other),
        }
    }
    // Sum in canonical id order so the result is bit-identical under any
    // input ordering or parallel merge.
    scores.sort_by(|a, b| a.0.cmp(b.0));
    let total: f64 = scores.iter().map(|(_, q)| q).sum();
    Ok(AccuracyReport {
        accuracy: total / tasks.len() as f64,
        fallback_tasks,
    })
}

/// Convenience wrapper returning just the accuracy.
pub fn evaluate_accuracy(params: &PolicyParams, tasks: &[TaskInstance]) -> Result<f64> {
    Ok(evaluate_accuracy_detailed(params, tasks)?.accuracy)
}

/// Fraction of tasks answered correctly with one sample each.
pub fn sampled_accuracy(
    params: &PolicyParams,
    tasks: &[TaskInstance],
    temperature: f64,
    seed: u64,
) -> Result<f64> {
    if tasks.is_empty() {
        return Err(CoreError::InvalidParameter("task set must be non-empty".into()));
    }
    let mut correct = 0u32;
    for task in tasks {
        let mut rng = StreamKey::new(seed).mix_str("sampled-acc").mix_str(&task.id).rng();
        let traj = sample_trajectory(params, task, temperature, &mut rng);
        if check_correct(task, traj.derived_answer) {
            correct += 1;
        }
    }
    Ok(f64::from(correct) / tasks.len() as f64)
}

/// Fraction of tasks with at least one correct answer among `k` independent
/// samples. Per-task sample streams are indexed by sample number, so the
/// k+1 sample set extends the k set and pass@k is monotone in k.
pub fn pass_at_k(
    params: &PolicyParams,
    tasks: &[TaskInstance],
    k: u32,
    temperature: f64,
    seed: u64,
) -> Result<f64> {
    if k < 1 {
        return Err(CoreError::InvalidParameter("k must be >= 1".into()));
    }
    if tasks.is_empty() {
        return Err(CoreError::InvalidParameter("task set must be non-empty".into()));
    }
    let mut passed = 0u32;
    for task in tasks {
        for i in 0..k {
            let mut rng = StreamKey::new(seed)
                .mix_str("passk")
                .mix_str(&task.id)
                .mix_u64(u64::from(i))
                .rng();
            let traj = sample_trajectory(params, task, temperature, &mut rng);
            if check_correct(task, traj.derived_answer) {
                passed += 1;
                break;
            }
        }
    }
    Ok(f64::from(passed) / tasks.len() as f64)
}

/// Absolute percentage-point change from base to final accuracy.
pub fn improvement_over_base(base_acc: f64, final_acc: f64) -> f64 {
    100.0 * (final_acc - base_acc)
}

/// Squared Pearson correlation; 0 by convention when either variance is 0.
pub fn correlation_r2(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(CoreError::InvalidParameter(alloc::format!(
            "length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(CoreError::InvalidParameter("need at least 2 points".into()));
    }
    let n = xs.len() as f64;
    let mean_x = math::mean(xs);
    let mean_y = math::mean(ys);
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        cov += (x - mean_x) * (y - mean_y);
        var_x += (x - mean_x) * (x - mean_x);
        var_y += (y - mean_y) * (y - mean_y);
    }
    cov /= n;
    var_x /= n;
    var_y /= n;
    if var_x == 0.0 || var_y == 0.0 {
        return Ok(0.0);
    }
    Ok((cov * cov) / (var_x * var_y))
}
