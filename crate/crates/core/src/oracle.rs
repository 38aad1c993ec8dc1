//! Independent brute-force and analytic cross-checks used by tests and the
//! `verify` subcommand. Everything here deliberately avoids the code paths
//! it is checking: gradients come from central differences, success
//! probabilities from exhaustive enumeration over action sequences, and
//! group-learnability from binomial sums.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::math;
use crate::policy::PolicyParams;
use crate::task::{apply_action, TaskInstance};

/// Default perturbation size for finite differences.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Sequence cap for exhaustive success enumeration.
pub const MAX_ENUMERATED_SEQUENCES: u64 = 1_000_000;

/// Outcome of comparing an analytic gradient against central differences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_component: usize,
    pub h: f64,
}

/// Central finite differences of a scalar function of theta.
pub fn finite_diff_grad<F>(fn_of_theta: F, theta: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    if !(h > 0.0) {
        return Err(CoreError::InvalidParameter(format!("h must be positive, got {h}")));
    }
    let mut grad = vec![0.0; theta.len()];
    let mut probe = theta.to_vec();
    for j in 0..theta.len() {
        probe[j] = theta[j] + h;
        let plus = fn_of_theta(&probe);
        probe[j] = theta[j] - h;
        let minus = fn_of_theta(&probe);
        probe[j] = theta[j];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(CoreError::NonFinite(format!(
                "function not finite at theta[{j}] +/- {h}"
            )));
        }
        grad[j] = (plus - minus) / (2.0 * h);
    }
    Ok(grad)
}

/// Compare an analytic gradient against [`finite_diff_grad`], with relative
/// error normalized by max(1, |analytic component|).
pub fn grad_check<F>(fn_of_theta: F, analytic: &[f64], theta: &[f64], h: f64) -> Result<GradCheckReport>
where
    F: Fn(&[f64]) -> f64,
{
    let numeric = finite_diff_grad(fn_of_theta, theta, h)?;
    if numeric.len() != analytic.len() {
        return Err(CoreError::Contract("gradient dimension mismatch".into()));
    }
    let mut worst = 0usize;
    let mut max_err = 0.0;
    for (j, (a, n)) in analytic.iter().zip(&numeric).enumerate() {
        let err = math::abs(a - n) / math::abs(*a).max(1.0);
        if err > max_err {
            max_err = err;
            worst = j;
        }
    }
    Ok(GradCheckReport {
        max_relative_error: max_err,
        worst_component: worst,
        h,
    })
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 1..=k {
        acc = acc * f64::from(n - k + i) / f64::from(i);
    }
    acc
}

/// Probability that a group of `group_size` i.i.d. Bernoulli(q) rewards is
/// mixed (not all equal), computed by summing binomial probabilities.
/// Equals `1 - q^G - (1-q)^G`.
pub fn enumerate_group_outcomes(q: f64, group_size: u32) -> f64 {
    if group_size <= 1 {
        return 0.0;
    }
    let mut total = 0.0;
    for successes in 1..group_size {
        total += binomial(group_size, successes)
            * math::powi(q, successes)
            * math::powi(1.0 - q, group_size - successes);
    }
    total
}

/// Success probability by exhaustive enumeration over all action sequences,
/// summing the probability of every sequence whose replay is correct.
/// Independent of the dynamic program in
/// [`crate::policy::exact_success_probability`].
pub fn exhaustive_success(
    params: &PolicyParams,
    task: &TaskInstance,
    temperature: f64,
) -> Result<f64> {
    let steps = task.num_steps();
    let alternatives = task.alternative_count();
    let branching = alternatives as u64 + 1;
    let mut sequences: u64 = 1;
    for _ in 0..steps {
        sequences = sequences.saturating_mul(branching);
        if sequences > MAX_ENUMERATED_SEQUENCES {
            return Err(CoreError::UnsupportedSize(format!(
                "{branching}^{steps} action sequences exceed {MAX_ENUMERATED_SEQUENCES}"
            )));
        }
    }
    let p: Vec<f64> = (0..steps)
        .map(|t| crate::policy::step_success_prob(params, task, t, temperature))
        .collect::<Result<_>>()?;

    fn recurse(
        task: &TaskInstance,
        p: &[f64],
        alternatives: usize,
        t: usize,
        state: &crate::task::TaskState,
        prob: f64,
        total: &mut f64,
    ) {
        if t == p.len() {
            if task.answer_of(state) == task.truth {
                *total += prob;
            }
            return;
        }
        let mut next = state.clone();
        apply_action(&mut next, task.instructed_action(t));
        let p_instructed = if alternatives == 0 { 1.0 } else { p[t] };
        recurse(task, p, alternatives, t + 1, &next, prob * p_instructed, total);
        if alternatives > 0 {
            let err_prob = (1.0 - p[t]) / alternatives as f64;
            for idx in 0..alternatives {
                let mut next = state.clone();
                apply_action(&mut next, task.alternative_action(t, idx));
                recurse(task, p, alternatives, t + 1, &next, prob * err_prob, total);
            }
        }
    }

    let mut total = 0.0;
    recurse(
        task,
        &p,
        alternatives,
        0,
        &task.initial_state(),
        1.0,
        &mut total,
    );
    Ok(total)
}
