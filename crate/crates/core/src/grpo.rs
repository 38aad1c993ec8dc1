//! The GRPO trainer: group sampling, binary rewards, group-baseline
//! advantages, KL-regularized policy-gradient updates, and per-step
//! learnability instrumentation.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::math;
use crate::policy::{grad_log_prob, kl_to_reference, sample_trajectory, PolicyParams, Trajectory};
use crate::rng::StreamKey;
use crate::task::{check_correct, TaskInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LrSchedule {
    Cosine,
    Constant,
}

/// Trainer hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrpoConfig {
    /// Rollouts per prompt (G).
    pub group_size: u32,
    /// KL regularization strength (beta); constant over the run.
    pub kl_beta: f64,
    /// Total update steps (T).
    pub total_steps: u32,
    /// Prompts per step (B).
    pub batch_prompts: u32,
    pub lr0: f64,
    pub lr_schedule: LrSchedule,
    pub eval_every: u32,
    pub train_temperature: f64,
    pub seed: u64,
    /// Divide advantages by the group standard deviation (robustness
    /// variant; the default keeps plain `r_i - mean`).
    pub normalize_by_std: bool,
    /// Momentum coefficient for the ascent direction; 0 is plain ascent.
    pub momentum: f64,
}

impl Default for GrpoConfig {
    fn default() -> Self {
        GrpoConfig {
            group_size: 8,
            kl_beta: 0.1,
            total_steps: 1000,
            batch_prompts: 32,
            lr0: 3e-5,
            lr_schedule: LrSchedule::Cosine,
            eval_every: 100,
            train_temperature: 1.0,
            seed: 0,
            normalize_by_std: false,
            momentum: 0.0,
        }
    }
}

impl GrpoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.group_size < 2 {
            return Err(CoreError::InvalidParameter(
                "group_size must be >= 2 (a group of 1 has identically zero advantage)".into(),
            ));
        }
        if self.batch_prompts < 1 || self.total_steps < 1 || self.eval_every < 1 {
            return Err(CoreError::InvalidParameter(
                "batch_prompts, total_steps, and eval_every must be >= 1".into(),
            ));
        }
        if !(self.kl_beta >= 0.0) || !self.lr0.is_finite() {
            return Err(CoreError::InvalidParameter("kl_beta must be >= 0 and lr0 finite".into()));
        }
        if !(self.train_temperature > 0.0) {
            return Err(CoreError::InvalidParameter("train_temperature must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(CoreError::InvalidParameter("momentum must be in [0, 1)".into()));
        }
        Ok(())
    }

    /// KL coefficient at a given step. The schedule is a hook; the shipped
    /// reading is a constant beta.
    pub fn beta_at(&self, _step: u32) -> f64 {
        self.kl_beta
    }
}

/// G sampled trajectories for one prompt with rewards and advantages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRollout {
    pub task_id: String,
    pub trajectories: Vec<Trajectory>,
    pub rewards: Vec<u8>,
    pub baseline: f64,
    pub advantages: Vec<f64>,
    pub learnable: bool,
}

/// Metrics appended after every update step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub step: u32,
    pub lr: f64,
    pub mean_reward: f64,
    pub learnable_groups: u32,
    pub total_groups: u32,
    pub mean_kl: f64,
    pub grad_norm: f64,
}

/// Accuracy of one stored checkpoint, as returned by the eval hook.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointEval {
    pub step: u32,
    pub accuracy: f64,
}

/// Mutable trainer state. `ref_params` is frozen at initialization.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub params: PolicyParams,
    pub ref_params: PolicyParams,
    pub step: u32,
    pub metrics_log: Vec<StepMetrics>,
    pub checkpoints: Vec<(u32, PolicyParams)>,
    velocity: Vec<f64>,
}

impl TrainState {
    pub fn new(base: PolicyParams) -> Self {
        let dim = base.theta.len();
        TrainState {
            params: base.clone(),
            ref_params: base,
            step: 0,
            metrics_log: Vec::new(),
            checkpoints: Vec::new(),
            velocity: vec![0.0; dim],
        }
    }
}

/// Everything recorded over one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub metrics: Vec<StepMetrics>,
    pub checkpoint_evals: Vec<CheckpointEval>,
    pub checkpoints: Vec<(u32, PolicyParams)>,
    pub base_accuracy: f64,
    pub final_accuracy: f64,
    /// Absolute percentage points, `100 * (final - base)`.
    pub improvement: f64,
    pub learnable_pct: f64,
    pub total_rollouts: u64,
    pub final_params: PolicyParams,
}

/// Group baseline and centered advantages. The advantages of any group sum
/// to zero; all-equal rewards give an all-zero advantage vector.
pub fn compute_advantages(rewards: &[u8]) -> Result<(f64, Vec<f64>)> {
    if rewards.is_empty() {
        return Err(CoreError::InvalidParameter("rewards must be non-empty".into()));
    }
    let baseline = rewards.iter().map(|&r| f64::from(r)).sum::<f64>() / rewards.len() as f64;
    let advantages = rewards.iter().map(|&r| f64::from(r) - baseline).collect();
    Ok((baseline, advantages))
}

/// A group is learnable iff its binary rewards are mixed (nonzero standard
/// deviation).
pub fn is_learnable(rewards: &[u8]) -> bool {
    rewards.iter().any(|&r| r == 0) && rewards.iter().any(|&r| r == 1)
}

/// Learning rate at `step` (valid for 0 <= step <= total_steps). The cosine
/// schedule is an exact half-cosine from lr0 to zero.
pub fn lr_at(config: &GrpoConfig, step: u32) -> Result<f64> {
    if step > config.total_steps {
        return Err(CoreError::InvalidParameter(format!(
            "step {step} beyond total_steps {}",
            config.total_steps
        )));
    }
    Ok(match config.lr_schedule {
        LrSchedule::Constant => config.lr0,
        LrSchedule::Cosine => {
            let frac = f64::from(step) / f64::from(config.total_steps);
            config.lr0 * 0.5 * (1.0 + math::cos(core::f64::consts::PI * frac))
        }
    })
}

/// Sample one group for `task`: G rollouts at the training temperature with
/// streams derived from (seed, step, batch slot, task id, rollout index).
pub fn rollout_group(
    params: &PolicyParams,
    task: &TaskInstance,
    config: &GrpoConfig,
    step: u32,
    slot: u32,
) -> Result<GroupRollout> {
    let trajectories: Vec<Trajectory> = (0..config.group_size)
        .map(|i| {
            let mut rng = StreamKey::new(config.seed)
                .mix_str("rollout")
                .mix_u64(u64::from(step))
                .mix_u64(u64::from(slot))
                .mix_str(&task.id)
                .mix_u64(u64::from(i))
                .rng();
            sample_trajectory(params, task, config.train_temperature, &mut rng)
        })
        .collect();
    let rewards: Vec<u8> = trajectories
        .iter()
        .map(|t| u8::from(check_correct(task, t.derived_answer)))
        .collect();
    let (baseline, advantages) = compute_advantages(&rewards)?;
    let learnable = is_learnable(&rewards);
    Ok(GroupRollout {
        task_id: task.id.clone(),
        trajectories,
        rewards,
        baseline,
        advantages,
        learnable,
    })
}

/// Advantage-weighted sum of log-likelihood gradients for one group.
/// Zero-variance groups contribute an exactly zero vector.
pub fn group_advantage_gradient(
    params: &PolicyParams,
    task: &TaskInstance,
    group: &GroupRollout,
    config: &GrpoConfig,
) -> Result<Vec<f64>> {
    let mut total = vec![0.0; params.theta.len()];
    if !group.learnable {
        return Ok(total);
    }
    let scale = if config.normalize_by_std {
        let var = group.advantages.iter().map(|a| a * a).sum::<f64>()
            / group.advantages.len() as f64;
        1.0 / math::sqrt(var)
    } else {
        1.0
    };
    for (traj, &adv) in group.trajectories.iter().zip(&group.advantages) {
        if adv == 0.0 {
            continue;
        }
        let g = grad_log_prob(params, task, traj, config.train_temperature)?;
        for (t, gi) in total.iter_mut().zip(&g) {
            *t += adv * scale * gi;
        }
    }
    Ok(total)
}

/// One GRPO update on `batch` (which must have exactly `batch_prompts`
/// tasks). Samples B groups, judges rewards, ascends
/// `(1/(B G)) sum_i A_i grad log pi - beta (1/B) sum grad KL`, and appends
/// a [`StepMetrics`] record. RNG streams derive from `config.seed` and
/// `state.step`, so calls are deterministic and schedule-independent.
pub fn grpo_step(
    state: &mut TrainState,
    batch: &[TaskInstance],
    config: &GrpoConfig,
) -> Result<StepMetrics> {
    if batch.len() != config.batch_prompts as usize {
        return Err(CoreError::Contract(format!(
            "batch has {} prompts, config requires {}",
            batch.len(),
            config.batch_prompts
        )));
    }
    let step = state.step;
    let dim = state.params.theta.len();
    let groups = batch.len() as f64;
    let rollouts_per_step = groups * f64::from(config.group_size);

    let mut gradient = vec![0.0; dim];
    let mut reward_sum = 0.0;
    let mut kl_sum = 0.0;
    let mut learnable_groups = 0u32;
    let beta = config.beta_at(step);

    for (slot, task) in batch.iter().enumerate() {
        let group = rollout_group(&state.params, task, config, step, slot as u32)?;
        reward_sum += group.rewards.iter().map(|&r| f64::from(r)).sum::<f64>();
        if group.learnable {
            learnable_groups += 1;
        }
        let adv_grad = group_advantage_gradient(&state.params, task, &group, config)?;
        let (kl, kl_grad) = kl_to_reference(&state.params, &state.ref_params, task)?;
        kl_sum += kl;
        for j in 0..dim {
            gradient[j] += adv_grad[j] / rollouts_per_step - beta * kl_grad[j] / groups;
        }
    }

    let lr = lr_at(config, step)?;
    if config.momentum > 0.0 {
        for j in 0..dim {
            state.velocity[j] = config.momentum * state.velocity[j] + gradient[j];
            state.params.theta[j] += lr * state.velocity[j];
        }
    } else {
        for j in 0..dim {
            state.params.theta[j] += lr * gradient[j];
        }
    }
    state.step += 1;

    let metrics = StepMetrics {
        step,
        lr,
        mean_reward: reward_sum / rollouts_per_step,
        learnable_groups,
        total_groups: config.batch_prompts,
        mean_kl: kl_sum / groups,
        grad_norm: math::l2_norm(&gradient),
    };
    state.metrics_log.push(metrics.clone());
    Ok(metrics)
}

/// Run exactly `total_steps` updates on `subset`, drawing each batch
/// uniformly with replacement. The eval hook is invoked (and a checkpoint
/// stored) at step 0, every `eval_every` steps, and at the final step.
pub fn train<F>(
    subset: &[TaskInstance],
    base: &PolicyParams,
    config: &GrpoConfig,
    mut eval_hook: F,
) -> Result<RunReport>
where
    F: FnMut(u32, &PolicyParams) -> f64,
{
    config.validate()?;
    if subset.is_empty() {
        return Err(CoreError::InvalidParameter("training subset must be non-empty".into()));
    }
    let mut state = TrainState::new(base.clone());
    let mut evals = Vec::new();

    let record = |state: &mut TrainState, evals: &mut Vec<CheckpointEval>, hook: &mut F| {
        let step = state.step;
        let accuracy = hook(step, &state.params);
        evals.push(CheckpointEval { step, accuracy });
        state.checkpoints.push((step, state.params.clone()));
    };

    record(&mut state, &mut evals, &mut eval_hook);
    for t in 0..config.total_steps {
        let mut batch_rng = StreamKey::new(config.seed)
            .mix_str("batch")
            .mix_u64(u64::from(t))
            .rng();
        let batch: Vec<TaskInstance> = (0..config.batch_prompts)
            .map(|_| subset[batch_rng.gen_range(0..subset.len())].clone())
            .collect();
        grpo_step(&mut state, &batch, config)?;
        if state.step % config.eval_every == 0 || state.step == config.total_steps {
            record(&mut state, &mut evals, &mut eval_hook);
        }
    }

    let base_accuracy = evals.first().map(|e| e.accuracy).unwrap_or(0.0);
    let final_accuracy = evals.last().map(|e| e.accuracy).unwrap_or(0.0);
    let learnable_pct = learnable_percentage_of(&state.metrics_log);
    let total_rollouts = u64::from(config.total_steps)
        * u64::from(config.batch_prompts)
        * u64::from(config.group_size);
    Ok(RunReport {
        metrics: state.metrics_log,
        checkpoint_evals: evals,
        checkpoints: state.checkpoints,
        base_accuracy,
        final_accuracy,
        improvement: crate::eval::improvement_over_base(base_accuracy, final_accuracy),
        learnable_pct,
        total_rollouts,
        final_params: state.params,
    })
}

/// Percent of groups over the whole run whose rewards were mixed:
/// `100 * sum_t learnable_groups_t / sum_t total_groups_t`.
pub fn learnable_percentage(report: &RunReport) -> f64 {
    learnable_percentage_of(&report.metrics)
}

fn learnable_percentage_of(metrics: &[StepMetrics]) -> f64 {
    let total: u64 = metrics.iter().map(|m| u64::from(m.total_groups)).sum();
    if total == 0 {
        return 0.0;
    }
    let learnable: u64 = metrics.iter().map(|m| u64::from(m.learnable_groups)).sum();
    100.0 * learnable as f64 / total as f64
}
