//! The `verify` subcommand: run every oracle cross-check and fail loudly.

use rand::Rng;

use grpo_lab_core::grpo::{compute_advantages, is_learnable, rollout_group, GrpoConfig};
use grpo_lab_core::math;
use grpo_lab_core::oracle::{
    enumerate_group_outcomes, exhaustive_success, finite_diff_grad, grad_check, DEFAULT_FD_STEP,
};
use grpo_lab_core::policy::{
    exact_success_probability, grad_log_prob, kl_to_reference, log_prob_of, sample_trajectory,
    FeatureSpec, PolicyParams,
};
use grpo_lab_core::rng::StreamKey;
use grpo_lab_core::task::{
    check_correct, generate_arithmetic_chain, generate_shuffled_objects, TaskInstance,
};

use crate::error::{HarnessError, Result};

/// Result of one cross-check.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn random_params(rng: &mut rand_chacha::ChaCha8Rng, span: f64) -> PolicyParams {
    let theta: Vec<f64> = (0..4).map(|_| rng.gen_range(-span..span)).collect();
    PolicyParams::new(theta, FeatureSpec::default(), 1.0).unwrap()
}

fn small_task(i: u64) -> TaskInstance {
    if i % 2 == 0 {
        generate_shuffled_objects(i, 3 + (i % 2) as u32, 1 + (i % 5) as u32).unwrap()
    } else {
        generate_arithmetic_chain(i, 1 + (i % 6) as u32, (1, 9)).unwrap()
    }
}

fn check_dp_vs_enumeration(seed: u64) -> std::result::Result<String, String> {
    let mut rng = StreamKey::new(seed).mix_str("verify-dp").rng();
    let mut worst = 0.0f64;
    for i in 0..50 {
        let params = random_params(&mut rng, 2.5);
        let task = small_task(i);
        let dp = exact_success_probability(&params, &task, 1.0).map_err(|e| e.to_string())?;
        let brute = exhaustive_success(&params, &task, 1.0).map_err(|e| e.to_string())?;
        worst = worst.max((dp - brute).abs());
    }
    if worst < 1e-10 {
        Ok(format!("max |DP - enumeration| = {worst:.3e} over 50 tasks"))
    } else {
        Err(format!("max |DP - enumeration| = {worst:.3e} exceeds 1e-10"))
    }
}

fn check_monte_carlo(seed: u64) -> std::result::Result<String, String> {
    let mut rng = StreamKey::new(seed).mix_str("verify-mc").rng();
    for i in 0..10u64 {
        let params = random_params(&mut rng, 1.5);
        let task = generate_shuffled_objects(i, 3 + (i % 3) as u32, 2 + (i % 5) as u32).unwrap();
        let q = exact_success_probability(&params, &task, 1.0).map_err(|e| e.to_string())?;
        let samples = 20_000u32;
        let mut hits = 0u32;
        for s in 0..samples {
            let mut traj_rng = StreamKey::new(seed)
                .mix_str("verify-mc-traj")
                .mix_u64(i)
                .mix_u64(u64::from(s))
                .rng();
            let traj = sample_trajectory(&params, &task, 1.0, &mut traj_rng);
            if check_correct(&task, traj.derived_answer) {
                hits += 1;
            }
        }
        let freq = f64::from(hits) / f64::from(samples);
        let sd = math::sqrt(q * (1.0 - q) / f64::from(samples));
        if (freq - q).abs() > 3.0 * sd + 1e-9 {
            return Err(format!(
                "task {i}: Monte-Carlo frequency {freq} vs oracle {q} (3 sd = {:.3e})",
                3.0 * sd
            ));
        }
    }
    Ok("10 tasks within 3 binomial sd at 20k samples".to_string())
}

fn check_gradients(seed: u64) -> std::result::Result<String, String> {
    let mut rng = StreamKey::new(seed).mix_str("verify-grad").rng();
    let mut worst = 0.0f64;
    for i in 0..100 {
        let params = random_params(&mut rng, 2.5);
        let task = small_task(i);
        let mut traj_rng = StreamKey::new(seed).mix_str("verify-traj").mix_u64(i).rng();
        let traj = sample_trajectory(&params, &task, 1.0, &mut traj_rng);
        let analytic = grad_log_prob(&params, &task, &traj, 1.0).map_err(|e| e.to_string())?;
        let spec = params.feature_spec;
        let report = grad_check(
            |theta| {
                let p = PolicyParams::new(theta.to_vec(), spec, 1.0).unwrap();
                log_prob_of(&p, &task, &traj, 1.0).unwrap()
            },
            &analytic,
            &params.theta,
            DEFAULT_FD_STEP,
        )
        .map_err(|e| e.to_string())?;
        worst = worst.max(report.max_relative_error);
    }
    if worst < 1e-5 {
        Ok(format!("max relative error {worst:.3e} over 100 trajectories"))
    } else {
        Err(format!("max relative error {worst:.3e} exceeds 1e-5"))
    }
}

fn check_kl(seed: u64) -> std::result::Result<String, String> {
    let mut rng = StreamKey::new(seed).mix_str("verify-kl").rng();
    let mut worst = 0.0f64;
    for i in 0..100 {
        let params = random_params(&mut rng, 2.5);
        let reference = random_params(&mut rng, 2.5);
        let task = small_task(i);
        let (value, analytic) =
            kl_to_reference(&params, &reference, &task).map_err(|e| e.to_string())?;
        if value < 0.0 {
            return Err(format!("negative KL {value}"));
        }
        let spec = params.feature_spec;
        let report = grad_check(
            |theta| {
                let p = PolicyParams::new(theta.to_vec(), spec, 1.0).unwrap();
                kl_to_reference(&p, &reference, &task).unwrap().0
            },
            &analytic,
            &params.theta,
            DEFAULT_FD_STEP,
        )
        .map_err(|e| e.to_string())?;
        worst = worst.max(report.max_relative_error);
    }
    if worst < 1e-5 {
        Ok(format!("max relative error {worst:.3e} over 100 draws"))
    } else {
        Err(format!("max relative error {worst:.3e} exceeds 1e-5"))
    }
}

fn check_advantages(seed: u64) -> std::result::Result<String, String> {
    let mut rng = StreamKey::new(seed).mix_str("verify-adv").rng();
    for i in 0..10_000 {
        let len = rng.gen_range(2..=16);
        let rewards: Vec<u8> = (0..len).map(|_| rng.gen_range(0..=1)).collect();
        let (_, advantages) = compute_advantages(&rewards).map_err(|e| e.to_string())?;
        let sum: f64 = advantages.iter().sum();
        if sum.abs() > 1e-12 {
            return Err(format!("group {i}: advantage sum {sum}"));
        }
        let mixed = rewards.contains(&0) && rewards.contains(&1);
        if is_learnable(&rewards) != mixed {
            return Err(format!("group {i}: learnable flag mismatch"));
        }
    }
    Ok("10000 groups: advantages sum to zero, learnable = mixed".to_string())
}

fn check_learnable_rate(seed: u64) -> std::result::Result<String, String> {
    let task = generate_arithmetic_chain(91, 4, (1, 9)).unwrap();
    // Bisect the bias onto q = 0.5.
    let mut lo = -30.0;
    let mut hi = 30.0;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let params = PolicyParams::new(
            vec![mid, 0.0, 0.0, 0.0],
            FeatureSpec::default(),
            1.0,
        )
        .unwrap();
        if exact_success_probability(&params, &task, 1.0).map_err(|e| e.to_string())? < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let params =
        PolicyParams::new(vec![0.5 * (lo + hi), 0.0, 0.0, 0.0], FeatureSpec::default(), 1.0)
            .unwrap();
    let q = exact_success_probability(&params, &task, 1.0).map_err(|e| e.to_string())?;
    let config = GrpoConfig {
        seed,
        ..GrpoConfig::default()
    };
    let groups = 4000u32;
    let mut learnable = 0u32;
    for g in 0..groups {
        if rollout_group(&params, &task, &config, g, 0)
            .map_err(|e| e.to_string())?
            .learnable
        {
            learnable += 1;
        }
    }
    let rate = f64::from(learnable) / f64::from(groups);
    let expected = enumerate_group_outcomes(q, config.group_size);
    if (rate - expected).abs() < 0.02 {
        Ok(format!("empirical {rate:.4} vs closed form {expected:.4} at q = {q:.3}"))
    } else {
        Err(format!("empirical {rate:.4} vs closed form {expected:.4}"))
    }
}

fn check_finite_differences(_seed: u64) -> std::result::Result<String, String> {
    let c = [1.5, -2.0, 0.25, 3.0];
    let grad = finite_diff_grad(|theta| math::dot(theta, &c), &[0.0; 4], 1e-6)
        .map_err(|e| e.to_string())?;
    for (g, expected) in grad.iter().zip(&c) {
        if (g - expected).abs() > 1e-9 {
            return Err(format!("linear gradient {g} vs {expected}"));
        }
    }
    Ok("linear functions differentiate exactly".to_string())
}

/// Run every cross-check.
pub fn run_checks(seed: u64) -> Vec<CheckOutcome> {
    let checks: [(&'static str, fn(u64) -> std::result::Result<String, String>); 7] = [
        ("dp_vs_enumeration", check_dp_vs_enumeration),
        ("monte_carlo_success", check_monte_carlo),
        ("log_prob_gradient", check_gradients),
        ("kl_value_and_gradient", check_kl),
        ("advantage_zero_sum", check_advantages),
        ("learnable_group_rate", check_learnable_rate),
        ("finite_difference_sanity", check_finite_differences),
    ];
    checks
        .into_iter()
        .map(|(name, run)| match run(seed) {
            Ok(detail) => CheckOutcome {
                name,
                passed: true,
                detail,
            },
            Err(detail) => CheckOutcome {
                name,
                passed: false,
                detail,
            },
        })
        .collect()
}

/// Run every cross-check, print one line per check, and return an error if
/// any failed.
pub fn run_verification(seed: u64) -> Result<Vec<CheckOutcome>> {
    let outcomes = run_checks(seed);
    let mut failures = 0;
    for check in &outcomes {
        if check.passed {
            println!("ok   {:<26} {}", check.name, check.detail);
        } else {
            failures += 1;
            println!("FAIL {:<26} {}", check.name, check.detail);
        }
    }
    if failures == 0 {
        println!("verify: {} checks passed", outcomes.len());
        Ok(outcomes)
    } else {
        Err(HarnessError::Stage {
            stage: "verify".into(),
            message: format!("{failures} of {} checks failed", outcomes.len()),
        })
    }
}
