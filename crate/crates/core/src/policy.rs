//! A step-wise stochastic policy with exact log-probabilities, analytic
//! gradients, exact KL to a reference policy, and an exact
//! success-probability oracle.
//!
//! At step `t` of a task the policy takes the instructed operation with
//! probability `p_t = logistic(theta . phi(task, t) / tau)` and otherwise
//! picks uniformly among the concrete wrong alternatives. Because every
//! step's action distribution depends only on (task, t, theta), the
//! log-likelihood, its gradient, and the KL to a reference policy all have
//! closed forms, and success probabilities can be computed exactly by
//! dynamic programming.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::math;
use crate::task::{apply_action, StepAction, TaskBody, TaskInstance};

/// Distinct-value cap for the arithmetic-chain success DP.
pub const ARITHMETIC_STATE_CAP: usize = 1_000_000;

/// Object-count cap for the permutation success DP (6! = 720 states).
pub const MAX_DP_OBJECTS: u32 = 6;

/// Identifies the per-step feature map phi(task, t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", rename_all = "snake_case")]
pub enum FeatureSpec {
    /// `[1, t/M, min(M/max_steps, 1), min(N/max_objects, 1)]`, with the
    /// object feature fixed at 0 for arithmetic tasks. All entries lie in
    /// [0, 1]; the bias entry is always 1.
    DifficultyV1 { max_steps: u32, max_objects: u32 },
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec::DifficultyV1 {
            max_steps: 24,
            max_objects: 6,
        }
    }
}

impl FeatureSpec {
    pub fn dim(&self) -> usize {
        match self {
            FeatureSpec::DifficultyV1 { .. } => 4,
        }
    }

    /// Feature vector for step `t` (0-based) of `task`.
    pub fn features(&self, task: &TaskInstance, t: usize) -> Vec<f64> {
        match *self {
            FeatureSpec::DifficultyV1 {
                max_steps,
                max_objects,
            } => {
                let m = task.num_steps() as f64;
                let steps_ratio = (m / f64::from(max_steps)).min(1.0);
                let objects_ratio = match task.body {
                    TaskBody::ShuffledObjects { num_objects, .. } => {
                        (f64::from(num_objects) / f64::from(max_objects)).min(1.0)
                    }
                    TaskBody::ArithmeticChain { .. } => 0.0,
                };
                vec![1.0, t as f64 / m, steps_ratio, objects_ratio]
            }
        }
    }
}

/// Parameter vector of the policy; a frozen copy serves as the reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub feature_spec: FeatureSpec,
    pub theta: Vec<f64>,
    pub temperature_default: f64,
}

impl PolicyParams {
    pub fn new(theta: Vec<f64>, feature_spec: FeatureSpec, temperature_default: f64) -> Result<Self> {
        if theta.len() != feature_spec.dim() {
            return Err(CoreError::InvalidParameter(format!(
                "theta dimension {} does not match feature dimension {}",
                theta.len(),
                feature_spec.dim()
            )));
        }
        if theta.iter().any(|x| !x.is_finite()) {
            return Err(CoreError::InvalidParameter("theta entries must be finite".into()));
        }
        if !(temperature_default > 0.0) {
            return Err(CoreError::InvalidParameter(
                "temperature_default must be positive".into(),
            ));
        }
        Ok(PolicyParams {
            feature_spec,
            theta,
            temperature_default,
        })
    }

    fn logit(&self, task: &TaskInstance, t: usize, temperature: f64) -> f64 {
        math::dot(&self.theta, &self.feature_spec.features(task, t)) / temperature
    }
}

/// One step of a sampled trajectory: the concrete operation taken, whether
/// it was the instructed one, and the instructed-action probability at the
/// sampling temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub action: StepAction,
    pub instructed: bool,
    pub p: f64,
}

/// A sampled rollout for one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub task_id: String,
    pub steps: Vec<StepRecord>,
    pub derived_answer: i64,
    pub log_prob: f64,
}

impl Trajectory {
    /// Deterministic replay of the recorded actions.
    pub fn replay_answer(&self, task: &TaskInstance) -> i64 {
        let mut state = task.initial_state();
        for step in &self.steps {
            apply_action(&mut state, step.action);
        }
        task.answer_of(&state)
    }
}

fn check_temperature(temperature: f64) -> Result<()> {
    if temperature > 0.0 {
        Ok(())
    } else {
        Err(CoreError::InvalidParameter(format!(
            "temperature must be positive, got {temperature}"
        )))
    }
}

fn check_traj(task: &TaskInstance, traj: &Trajectory) -> Result<()> {
    if traj.task_id != task.id {
        return Err(CoreError::Contract(format!(
            "trajectory for task {} applied to task {}",
            traj.task_id, task.id
        )));
    }
    if traj.steps.len() != task.num_steps() {
        return Err(CoreError::Contract(format!(
            "trajectory has {} steps, task has {}",
            traj.steps.len(),
            task.num_steps()
        )));
    }
    Ok(())
}

/// Probability of taking the instructed operation at `step`.
pub fn step_success_prob(
    params: &PolicyParams,
    task: &TaskInstance,
    step: usize,
    temperature: f64,
) -> Result<f64> {
    check_temperature(temperature)?;
    if step >= task.num_steps() {
        return Err(CoreError::InvalidParameter(format!(
            "step {step} out of range for {}-step task",
            task.num_steps()
        )));
    }
    Ok(math::logistic(params.logit(task, step, temperature)))
}

/// Sample one rollout. With no wrong alternatives (N = 2 shuffled objects)
/// the instructed action is forced and contributes zero log-probability.
pub fn sample_trajectory(
    params: &PolicyParams,
    task: &TaskInstance,
    temperature: f64,
    rng: &mut ChaCha8Rng,
) -> Trajectory {
    let alternatives = task.alternative_count();
    let mut state = task.initial_state();
    let mut steps = Vec::with_capacity(task.num_steps());
    let mut log_prob = 0.0;
    for t in 0..task.num_steps() {
        let p = math::logistic(params.logit(task, t, temperature));
        let (action, instructed) = if alternatives == 0 {
            (task.instructed_action(t), true)
        } else if rng.gen::<f64>() < p {
            log_prob += math::ln(p);
            (task.instructed_action(t), true)
        } else {
            log_prob += math::ln((1.0 - p) / alternatives as f64);
            (task.alternative_action(t, rng.gen_range(0..alternatives)), false)
        };
        apply_action(&mut state, action);
        steps.push(StepRecord { action, instructed, p });
    }
    Trajectory {
        task_id: task.id.clone(),
        steps,
        derived_answer: task.answer_of(&state),
        log_prob,
    }
}

/// Log-probability of `traj` under `params` at `temperature`, recomputed
/// from scratch (the differentiable function of theta that
/// [`grad_log_prob`] is the exact gradient of).
pub fn log_prob_of(
    params: &PolicyParams,
    task: &TaskInstance,
    traj: &Trajectory,
    temperature: f64,
) -> Result<f64> {
    check_temperature(temperature)?;
    check_traj(task, traj)?;
    let alternatives = task.alternative_count();
    let mut total = 0.0;
    for (t, step) in traj.steps.iter().enumerate() {
        if alternatives == 0 {
            continue;
        }
        let p = math::logistic(params.logit(task, t, temperature));
        total += if step.instructed {
            math::ln(p)
        } else {
            math::ln((1.0 - p) / alternatives as f64)
        };
    }
    Ok(total)
}

/// Exact gradient of [`log_prob_of`] with respect to theta:
/// `(1 - p_t) * phi_t / tau` on instructed steps, `-p_t * phi_t / tau` on
/// error steps.
pub fn grad_log_prob(
    params: &PolicyParams,
    task: &TaskInstance,
    traj: &Trajectory,
    temperature: f64,
) -> Result<Vec<f64>> {
    check_temperature(temperature)?;
    check_traj(task, traj)?;
    let mut grad = vec![0.0; params.theta.len()];
    if task.alternative_count() == 0 {
        return Ok(grad);
    }
    for (t, step) in traj.steps.iter().enumerate() {
        let phi = params.feature_spec.features(task, t);
        let p = math::logistic(params.logit(task, t, temperature));
        let coeff = if step.instructed { 1.0 - p } else { -p } / temperature;
        for (g, f) in grad.iter_mut().zip(&phi) {
            *g += coeff * f;
        }
    }
    Ok(grad)
}

/// Exact KL(pi_params || pi_ref) summed over the task's steps, with its
/// exact theta-gradient. Per step the categorical KL reduces to the
/// Bernoulli KL because the error mass is split uniformly under both
/// policies. Always evaluated at temperature 1.
pub fn kl_to_reference(
    params: &PolicyParams,
    reference: &PolicyParams,
    task: &TaskInstance,
) -> Result<(f64, Vec<f64>)> {
    if params.feature_spec != reference.feature_spec {
        return Err(CoreError::Contract("feature_spec mismatch".into()));
    }
    let mut value = 0.0;
    let mut grad = vec![0.0; params.theta.len()];
    if task.alternative_count() == 0 {
        return Ok((value, grad));
    }
    for t in 0..task.num_steps() {
        let phi = params.feature_spec.features(task, t);
        let z = math::dot(&params.theta, &phi);
        let z_ref = math::dot(&reference.theta, &phi);
        let p = math::logistic(z);
        // p*ln(p/p') + (1-p)*ln((1-p)/(1-p')) in softplus form; the clamp
        // absorbs rounding for nearly identical policies.
        let step_kl = p * (math::softplus(-z_ref) - math::softplus(-z))
            + (1.0 - p) * (math::softplus(z_ref) - math::softplus(z));
        value += step_kl.max(0.0);
        let coeff = p * (1.0 - p) * (z - z_ref);
        for (g, f) in grad.iter_mut().zip(&phi) {
            *g += coeff * f;
        }
    }
    Ok((value, grad))
}

fn lex_permutations(n: usize) -> Vec<Vec<u32>> {
    fn recurse(remaining: &mut Vec<u32>, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if remaining.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for idx in 0..remaining.len() {
            let x = remaining.remove(idx);
            prefix.push(x);
            recurse(remaining, prefix, out);
            prefix.pop();
            remaining.insert(idx, x);
        }
    }
    let mut out = Vec::new();
    recurse(&mut (0..n as u32).collect(), &mut Vec::new(), &mut out);
    out
}

fn perm_rank(perm: &[u32]) -> usize {
    let n = perm.len();
    let mut rank = 0usize;
    for i in 0..n {
        let smaller = perm[i + 1..].iter().filter(|&&x| x < perm[i]).count();
        rank = rank * (n - i) + smaller;
    }
    rank
}

/// Exact success probability under the policy at `temperature`.
///
/// Shuffled objects: dynamic program over the full distribution of
/// arrangements (N <= [`MAX_DP_OBJECTS`]). Arithmetic chains: dynamic
/// program over the distribution of running values, capped at
/// [`ARITHMETIC_STATE_CAP`] distinct states.
pub fn exact_success_probability(
    params: &PolicyParams,
    task: &TaskInstance,
    temperature: f64,
) -> Result<f64> {
    check_temperature(temperature)?;
    match &task.body {
        TaskBody::ShuffledObjects {
            num_objects,
            swaps,
            query_object,
        } => {
            if *num_objects > MAX_DP_OBJECTS {
                return Err(CoreError::UnsupportedSize(format!(
                    "permutation DP supports at most {MAX_DP_OBJECTS} objects, got {num_objects}"
                )));
            }
            let n = *num_objects as usize;
            let perms = lex_permutations(n);
            let pairs: Vec<(u32, u32)> = (0..*num_objects)
                .flat_map(|i| (i + 1..*num_objects).map(move |j| (i, j)))
                .collect();
            // transition[s][k] = rank of perms[s] with pair k swapped
            let transition: Vec<Vec<usize>> = perms
                .iter()
                .map(|perm| {
                    pairs
                        .iter()
                        .map(|&(i, j)| {
                            let mut next = perm.clone();
                            next.swap(i as usize, j as usize);
                            perm_rank(&next)
                        })
                        .collect()
                })
                .collect();
            let alternatives = pairs.len() - 1;
            let mut dist = vec![0.0f64; perms.len()];
            dist[0] = 1.0; // identity arrangement has lex rank 0
            for (t, &swap) in swaps.iter().enumerate() {
                let p = math::logistic(params.logit(task, t, temperature));
                let instructed_pair = pairs
                    .iter()
                    .position(|&(i, j)| (i, j) == min_max(swap))
                    .expect("instructed swap is a valid pair");
                let mut next = vec![0.0f64; perms.len()];
                for (s, &mass) in dist.iter().enumerate() {
                    if mass == 0.0 {
                        continue;
                    }
                    if alternatives == 0 {
                        next[transition[s][instructed_pair]] += mass;
                        continue;
                    }
                    next[transition[s][instructed_pair]] += mass * p;
                    let err_mass = mass * (1.0 - p) / alternatives as f64;
                    for (k, &target) in transition[s].iter().enumerate() {
                        if k != instructed_pair {
                            next[target] += err_mass;
                        }
                    }
                }
                dist = next;
            }
            let truth_pos = task.truth as usize;
            Ok(perms
                .iter()
                .zip(&dist)
                .filter(|(perm, _)| perm[truth_pos] == *query_object)
                .map(|(_, &mass)| mass)
                .sum())
        }
        TaskBody::ArithmeticChain { initial_value, ops } => {
            use alloc::collections::BTreeMap;
            use crate::task::PERTURBATIONS;
            let mut dist: BTreeMap<i64, f64> = BTreeMap::new();
            dist.insert(*initial_value, 1.0);
            let alt = PERTURBATIONS.len() as f64;
            for (t, op) in ops.iter().enumerate() {
                let p = math::logistic(params.logit(task, t, temperature));
                let mut next: BTreeMap<i64, f64> = BTreeMap::new();
                for (&value, &mass) in &dist {
                    *next.entry(op.apply(value)).or_insert(0.0) += mass * p;
                    let err_mass = mass * (1.0 - p) / alt;
                    for &delta in &PERTURBATIONS {
                        *next.entry(value.saturating_add(delta)).or_insert(0.0) += err_mass;
                    }
                }
                if next.len() > ARITHMETIC_STATE_CAP {
                    return Err(CoreError::UnsupportedSize(format!(
                        "arithmetic DP exceeded {ARITHMETIC_STATE_CAP} states at step {t}"
                    )));
                }
                dist = next;
            }
            Ok(dist.get(&task.truth).copied().unwrap_or(0.0))
        }
    }
}

fn min_max((i, j): (u32, u32)) -> (u32, u32) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use crate::task::{
        generate_shuffled_objects, ChainOp, Operator, TaskBody, TaskInstance,
    };
    use alloc::string::ToString;

    fn one_step_chain() -> TaskInstance {
        TaskInstance::from_body(
            "c".to_string(),
            TaskBody::ArithmeticChain {
                initial_value: 0,
                ops: alloc::vec![ChainOp {
                    op: Operator::Add,
                    operand: 3,
                }],
            },
        )
        .unwrap()
    }

    fn one_swap_task(query: u32) -> TaskInstance {
        TaskInstance::from_body(
            "s".to_string(),
            TaskBody::ShuffledObjects {
                num_objects: 3,
                swaps: alloc::vec![(0, 1)],
                query_object: query,
            },
        )
        .unwrap()
    }

    fn params(theta: [f64; 4]) -> PolicyParams {
        PolicyParams::new(theta.to_vec(), FeatureSpec::default(), 1.0).unwrap()
    }

    #[test]
    fn zero_logit_gives_half() {
        let p = step_success_prob(&params([0.0; 4]), &one_step_chain(), 0, 1.0).unwrap();
        assert_eq!(p, 0.5);
    }

    #[test]
    fn infinite_temperature_flattens_to_half() {
        let p = step_success_prob(&params([7.0, -2.0, 3.0, 1.0]), &one_step_chain(), 0, 1e12)
            .unwrap();
        assert!((p - 0.5).abs() < 1e-9);
    }

    #[test]
    fn temperature_divides_the_logit() {
        // theta.phi = 2 exactly: only the bias component is nonzero.
        let pp = params([2.0, 0.0, 0.0, 0.0]);
        let t = one_step_chain();
        let p1 = step_success_prob(&pp, &t, 0, 1.0).unwrap();
        let p2 = step_success_prob(&pp, &t, 0, 2.0).unwrap();
        assert!((p1 - 0.8807970779778823).abs() < 1e-12);
        assert!((p2 - 0.7310585786300049).abs() < 1e-12);
    }

    #[test]
    fn non_positive_temperature_is_rejected() {
        assert!(step_success_prob(&params([0.0; 4]), &one_step_chain(), 0, 0.0).is_err());
        assert!(step_success_prob(&params([0.0; 4]), &one_step_chain(), 0, -1.0).is_err());
    }

    #[test]
    fn saturated_policy_replays_the_instructed_solution() {
        let pp = params([35.0, 0.0, 0.0, 0.0]);
        for seed in 0..10 {
            let task = generate_shuffled_objects(seed, 4, 6).unwrap();
            let mut rng = StreamKey::new(seed).mix_str("test").rng();
            let traj = sample_trajectory(&pp, &task, 1.0, &mut rng);
            assert!(traj.steps.iter().all(|s| s.instructed));
            assert_eq!(traj.derived_answer, task.truth);
            assert_eq!(traj.log_prob, traj.log_prob, "finite");
        }
    }

    #[test]
    fn error_replay_diverges_from_truth() {
        // Instructed (0,1) puts object 0 at position 1; wrong swap (1,2)
        // leaves it at position 0.
        let task = one_swap_task(0);
        assert_eq!(task.truth, 1);
        let traj = Trajectory {
            task_id: task.id.clone(),
            steps: alloc::vec![StepRecord {
                action: StepAction::Swap { i: 1, j: 2 },
                instructed: false,
                p: 0.5,
            }],
            derived_answer: 0,
            log_prob: math::ln(0.25),
        };
        assert_eq!(traj.replay_answer(&task), 0);
        assert_ne!(traj.replay_answer(&task), task.truth);
    }

    #[test]
    fn sampling_is_deterministic_in_the_stream() {
        let pp = params([0.5, -0.2, -1.0, 0.0]);
        let task = generate_shuffled_objects(3, 4, 5).unwrap();
        let a = sample_trajectory(&pp, &task, 1.0, &mut StreamKey::new(9).mix_str("t").rng());
        let b = sample_trajectory(&pp, &task, 1.0, &mut StreamKey::new(9).mix_str("t").rng());
        assert_eq!(a, b);
    }

    #[test]
    fn log_prob_recomputes_from_steps() {
        let pp = params([0.3, -0.4, -1.2, 0.2]);
        for seed in 0..50 {
            let task = generate_shuffled_objects(seed, 4, 7).unwrap();
            let mut rng = StreamKey::new(seed).mix_str("lp").rng();
            let traj = sample_trajectory(&pp, &task, 1.0, &mut rng);
            let recomputed = log_prob_of(&pp, &task, &traj, 1.0).unwrap();
            assert!((recomputed - traj.log_prob).abs() < 1e-12);
            assert_eq!(traj.replay_answer(&task), traj.derived_answer);
        }
    }

    #[test]
    fn saturated_step_has_vanishing_gradient() {
        let pp = params([35.0, 0.0, 0.0, 0.0]);
        let task = one_step_chain();
        let mut rng = StreamKey::new(0).mix_str("g").rng();
        let traj = sample_trajectory(&pp, &task, 1.0, &mut rng);
        assert!(traj.steps[0].instructed);
        let grad = grad_log_prob(&pp, &task, &traj, 1.0).unwrap();
        assert!(grad.iter().all(|g| g.abs() < 1e-10));
    }

    #[test]
    fn error_step_gradient_matches_closed_form() {
        // theta = 0 gives p = 1/2 exactly; a single error step contributes
        // -p * phi, so the bias component is exactly -0.5.
        let pp = params([0.0; 4]);
        let task = one_step_chain();
        let traj = Trajectory {
            task_id: task.id.clone(),
            steps: alloc::vec![StepRecord {
                action: StepAction::Perturb(1),
                instructed: false,
                p: 0.5,
            }],
            derived_answer: 1,
            log_prob: math::ln(0.5 / 4.0),
        };
        let grad = grad_log_prob(&pp, &task, &traj, 1.0).unwrap();
        let phi = pp.feature_spec.features(&task, 0);
        for (g, f) in grad.iter().zip(&phi) {
            assert!((g - (-0.5) * f).abs() < 1e-15);
        }
        assert!((grad[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn trajectory_task_mismatch_is_a_contract_error() {
        let pp = params([0.0; 4]);
        let task = one_step_chain();
        let other = one_swap_task(0);
        let mut rng = StreamKey::new(1).mix_str("m").rng();
        let traj = sample_trajectory(&pp, &task, 1.0, &mut rng);
        assert!(matches!(
            grad_log_prob(&pp, &other, &traj, 1.0),
            Err(CoreError::Contract(_))
        ));
    }

    #[test]
    fn kl_of_identical_policies_is_exactly_zero() {
        let pp = params([1.3, -0.7, 0.2, -2.0]);
        let task = generate_shuffled_objects(5, 4, 6).unwrap();
        let (kl, grad) = kl_to_reference(&pp, &pp, &task).unwrap();
        assert_eq!(kl, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn kl_matches_bernoulli_closed_form() {
        // p = sigma(ln 9) = 0.9 against p' = 0.5 on a single step:
        // 0.9 ln(1.8) + 0.1 ln(0.2).
        let p_params = params([math::ln(9.0), 0.0, 0.0, 0.0]);
        let r_params = params([0.0; 4]);
        let task = one_step_chain();
        let (kl, _) = kl_to_reference(&p_params, &r_params, &task).unwrap();
        let expected = 0.9 * math::ln(1.8) + 0.1 * math::ln(0.2);
        assert!((kl - expected).abs() < 1e-9, "kl {kl} vs {expected}");
        assert!((kl - 0.368).abs() < 5e-4);
    }

    #[test]
    fn kl_is_nonnegative_on_random_draws() {
        let mut rng = StreamKey::new(77).mix_str("kl").rng();
        for i in 0..1000 {
            let theta: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let theta_ref: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let pp = PolicyParams::new(theta, FeatureSpec::default(), 1.0).unwrap();
            let rr = PolicyParams::new(theta_ref, FeatureSpec::default(), 1.0).unwrap();
            let task = generate_shuffled_objects(i, 3 + (i % 3) as u32, 1 + (i % 8) as u32).unwrap();
            let (kl, _) = kl_to_reference(&pp, &rr, &task).unwrap();
            assert!(kl >= 0.0, "draw {i}: negative KL {kl}");
        }
    }

    #[test]
    fn feature_spec_mismatch_is_a_contract_error() {
        let a = params([0.0; 4]);
        let b = PolicyParams::new(
            alloc::vec![0.0; 4],
            FeatureSpec::DifficultyV1 {
                max_steps: 99,
                max_objects: 6,
            },
            1.0,
        )
        .unwrap();
        assert!(matches!(
            kl_to_reference(&a, &b, &one_step_chain()),
            Err(CoreError::Contract(_))
        ));
    }

    #[test]
    fn saturated_policy_succeeds_with_certainty() {
        let pp = params([40.0, 0.0, 0.0, 0.0]);
        let task = generate_shuffled_objects(2, 4, 5).unwrap();
        let q = exact_success_probability(&pp, &task, 1.0).unwrap();
        assert!((q - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_swap_success_mass_is_the_instructed_probability() {
        // Wrong swaps (0,2) and (1,2) both fail to put object 0 at
        // position 1, so success probability equals p exactly.
        let task = one_swap_task(0);
        let target_p = 0.4;
        let z = math::ln(target_p / (1.0 - target_p));
        let pp = params([z, 0.0, 0.0, 0.0]);
        let q = exact_success_probability(&pp, &task, 1.0).unwrap();
        assert!((q - 0.4).abs() < 1e-12, "q = {q}");
    }

    #[test]
    fn two_object_task_is_forced_correct() {
        let task = TaskInstance::from_body(
            "n2".to_string(),
            TaskBody::ShuffledObjects {
                num_objects: 2,
                swaps: alloc::vec![(0, 1), (0, 1)],
                query_object: 0,
            },
        )
        .unwrap();
        let pp = params([-5.0, 0.0, 0.0, 0.0]);
        let q = exact_success_probability(&pp, &task, 1.0).unwrap();
        assert_eq!(q, 1.0);
    }

    #[test]
    fn oversized_permutation_dp_is_rejected() {
        let task = generate_shuffled_objects(0, 7, 3).unwrap();
        assert!(matches!(
            exact_success_probability(&params([0.0; 4]), &task, 1.0),
            Err(CoreError::UnsupportedSize(_))
        ));
    }
}
