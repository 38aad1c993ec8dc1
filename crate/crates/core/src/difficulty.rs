//! Multi-sample probing of the base policy: per-prompt empirical success
//! rates.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::policy::{sample_trajectory, PolicyParams};
use crate::rng::StreamKey;
use crate::task::{check_correct, TaskInstance};

/// Empirical success rate of the base policy on one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyEstimate {
    pub task_id: String,
    pub k: u32,
    pub successes: u32,
    pub p_hat: f64,
    pub probe_temperature: f64,
}

/// Probe each task with `k` independent samples from `base` and judge them
/// exactly. Per-(task, sample) streams derive from (seed, task id, index),
/// so results are independent of pool order and of any parallel schedule.
pub fn probe_pool(
    base: &PolicyParams,
    pool: &[TaskInstance],
    k: u32,
    temperature: f64,
    seed: u64,
) -> Result<Vec<DifficultyEstimate>> {
    if k < 1 {
        return Err(CoreError::InvalidParameter("probe sample count k must be >= 1".into()));
    }
    if !(temperature > 0.0) {
        return Err(CoreError::InvalidParameter("probe temperature must be positive".into()));
    }
    pool.iter()
        .map(|task| {
            let mut successes = 0;
            for i in 0..k {
                let mut rng = StreamKey::new(seed)
                    .mix_str("probe")
                    .mix_str(&task.id)
                    .mix_u64(u64::from(i))
                    .rng();
                let traj = sample_trajectory(base, task, temperature, &mut rng);
                if check_correct(task, traj.derived_answer) {
                    successes += 1;
                }
            }
            Ok(DifficultyEstimate {
                task_id: task.id.clone(),
                k,
                successes,
                p_hat: f64::from(successes) / f64::from(k),
                probe_temperature: temperature,
            })
        })
        .collect()
}
