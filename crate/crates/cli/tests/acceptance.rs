//! Acceptance suite: one test per criterion, every tolerance pinned in
//! code. Each test prints a PASS line; cargo prints the per-criterion
//! pass/fail status.
//!
//! Run with `cargo test -p grpo-lab --test acceptance`.

use std::collections::BTreeMap;

use grpo_lab::config::{ExperimentConfig, Profile};
use grpo_lab::experiment::{run_experiment, ExperimentReport};
use grpo_lab_core::difficulty::probe_pool;
use grpo_lab_core::eval::pass_at_k;
use grpo_lab_core::grpo::{
    compute_advantages, group_advantage_gradient, is_learnable, rollout_group, GrpoConfig,
};
use grpo_lab_core::oracle::{enumerate_group_outcomes, exhaustive_success, grad_check};
use grpo_lab_core::policy::{
    exact_success_probability, grad_log_prob, kl_to_reference, log_prob_of, sample_trajectory,
    FeatureSpec, PolicyParams,
};
use grpo_lab_core::pool::build_pool;
use grpo_lab_core::rng::StreamKey;
use grpo_lab_core::selection::{select, SelectionPolicy};
use grpo_lab_core::task::{
    check_correct, generate_arithmetic_chain, generate_shuffled_objects, TaskInstance,
};
use rand::Rng;

fn params(theta: Vec<f64>) -> PolicyParams {
    PolicyParams::new(theta, FeatureSpec::default(), 1.0).unwrap()
}

fn random_params(rng: &mut rand_chacha::ChaCha8Rng, span: f64) -> PolicyParams {
    params((0..4).map(|_| rng.gen_range(-span..span)).collect())
}

fn small_task(i: u64) -> TaskInstance {
    if i % 2 == 0 {
        generate_shuffled_objects(i, 3 + (i % 2) as u32, 1 + (i % 5) as u32).unwrap()
    } else {
        generate_arithmetic_chain(i, 1 + (i % 6) as u32, (1, 9)).unwrap()
    }
}

/// Bisect the bias weight of a bias-only policy onto a target success rate.
fn bias_for_target(task: &TaskInstance, target: f64) -> PolicyParams {
    let (mut lo, mut hi) = (-30.0, 30.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let q = exact_success_probability(&params(vec![mid, 0.0, 0.0, 0.0]), task, 1.0).unwrap();
        if q < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    params(vec![0.5 * (lo + hi), 0.0, 0.0, 0.0])
}

#[test]
fn criterion_1_exactness_suite() {
    // Advantage zero-sum to 1e-12 on 10,000 random groups.
    let mut rng = StreamKey::new(11).mix_str("acc1").rng();
    for _ in 0..10_000 {
        let len = rng.gen_range(2..=16);
        let rewards: Vec<u8> = (0..len).map(|_| rng.gen_range(0..=1)).collect();
        let (_, advantages) = compute_advantages(&rewards).unwrap();
        assert!(advantages.iter().sum::<f64>().abs() < 1e-12);
    }

    // is_learnable <=> mixed rewards on all 2^8 vectors for G = 8.
    for mask in 0u32..256 {
        let rewards: Vec<u8> = (0..8).map(|i| ((mask >> i) & 1) as u8).collect();
        let mixed = mask != 0 && mask != 255;
        assert_eq!(is_learnable(&rewards), mixed, "mask {mask:#010b}");
    }

    // Zero-variance groups contribute an exactly zero advantage gradient.
    let config = GrpoConfig {
        seed: 5,
        ..GrpoConfig::default()
    };
    let mut zero_variance_seen = 0;
    for i in 0..200u32 {
        let task = generate_shuffled_objects(u64::from(i), 4, 3).unwrap();
        let saturated = params(vec![40.0, 0.0, 0.0, 0.0]);
        let group = rollout_group(&saturated, &task, &config, i, 0).unwrap();
        assert!(!group.learnable);
        let gradient = group_advantage_gradient(&saturated, &task, &group, &config).unwrap();
        assert!(gradient.iter().all(|&g| g == 0.0));
        zero_variance_seen += 1;
    }
    assert_eq!(zero_variance_seen, 200);

    // KL(theta, theta) = 0 and KL >= 0 on 1,000 random draws.
    let mut rng = StreamKey::new(13).mix_str("acc1-kl").rng();
    for i in 0..1000u64 {
        let a = random_params(&mut rng, 3.0);
        let b = random_params(&mut rng, 3.0);
        let task = small_task(i);
        let (self_kl, self_grad) = kl_to_reference(&a, &a, &task).unwrap();
        assert_eq!(self_kl, 0.0);
        assert!(self_grad.iter().all(|&g| g == 0.0));
        let (kl, _) = kl_to_reference(&a, &b, &task).unwrap();
        assert!(kl >= 0.0, "draw {i}: KL {kl}");
    }
    println!("ACCEPT criterion 1 (exactness suite): PASS");
}

#[test]
fn criterion_2_gradient_suite() {
    let mut rng = StreamKey::new(21).mix_str("acc2").rng();
    let mut worst_logprob = 0.0f64;
    let mut worst_kl = 0.0f64;
    for i in 0..100u64 {
        let p = random_params(&mut rng, 2.5);
        let reference = random_params(&mut rng, 2.5);
        let task = small_task(i);
        let mut traj_rng = StreamKey::new(i).mix_str("acc2-traj").rng();
        let traj = sample_trajectory(&p, &task, 1.0, &mut traj_rng);

        let analytic = grad_log_prob(&p, &task, &traj, 1.0).unwrap();
        let spec = p.feature_spec;
        let report = grad_check(
            |theta| {
                let probe = PolicyParams::new(theta.to_vec(), spec, 1.0).unwrap();
                log_prob_of(&probe, &task, &traj, 1.0).unwrap()
            },
            &analytic,
            &p.theta,
            1e-6,
        )
        .unwrap();
        worst_logprob = worst_logprob.max(report.max_relative_error);

        let (_, kl_grad) = kl_to_reference(&p, &reference, &task).unwrap();
        let report = grad_check(
            |theta| {
                let probe = PolicyParams::new(theta.to_vec(), spec, 1.0).unwrap();
                kl_to_reference(&probe, &reference, &task).unwrap().0
            },
            &kl_grad,
            &p.theta,
            1e-6,
        )
        .unwrap();
        worst_kl = worst_kl.max(report.max_relative_error);
    }
    assert!(worst_logprob < 1e-5, "log-prob gradient error {worst_logprob}");
    assert!(worst_kl < 1e-5, "KL gradient error {worst_kl}");
    println!(
        "ACCEPT criterion 2 (gradient suite): PASS \
         (log-prob {worst_logprob:.2e}, KL {worst_kl:.2e})"
    );
}

#[test]
fn criterion_3_oracle_suite() {
    // DP vs exhaustive enumeration to 1e-10 on 50 small tasks.
    let mut rng = StreamKey::new(31).mix_str("acc3").rng();
    let mut worst = 0.0f64;
    for i in 0..50u64 {
        let p = random_params(&mut rng, 2.5);
        let task = small_task(i);
        let dp = exact_success_probability(&p, &task, 1.0).unwrap();
        let brute = exhaustive_success(&p, &task, 1.0).unwrap();
        worst = worst.max((dp - brute).abs());
    }
    assert!(worst < 1e-10, "DP vs enumeration diff {worst}");

    // Monte-Carlo frequency (100k samples) within 3 binomial sd on 20 tasks.
    let mut rng = StreamKey::new(32).mix_str("acc3-mc").rng();
    for i in 0..20u64 {
        let p = random_params(&mut rng, 1.5);
        let task = generate_shuffled_objects(i, 3 + (i % 3) as u32, 2 + (i % 6) as u32).unwrap();
        let q = exact_success_probability(&p, &task, 1.0).unwrap();
        let samples = 100_000u32;
        let mut hits = 0u32;
        for s in 0..samples {
            let mut traj_rng = StreamKey::new(i).mix_str("acc3-traj").mix_u64(u64::from(s)).rng();
            let traj = sample_trajectory(&p, &task, 1.0, &mut traj_rng);
            if check_correct(&task, traj.derived_answer) {
                hits += 1;
            }
        }
        let freq = f64::from(hits) / f64::from(samples);
        let sd = (q * (1.0 - q) / f64::from(samples)).sqrt();
        assert!(
            (freq - q).abs() <= 3.0 * sd + 1e-9,
            "task {i}: frequency {freq} vs oracle {q}"
        );
    }

    // Empirical learnable-group rate vs 1 - q^G - (1-q)^G at five targets,
    // G = 8, 10,000 groups each, within +/- 0.02.
    let task = generate_arithmetic_chain(91, 4, (1, 9)).unwrap();
    for &target in &[0.1, 0.3, 0.5, 0.7, 0.9] {
        let p = bias_for_target(&task, target);
        let q = exact_success_probability(&p, &task, 1.0).unwrap();
        assert!((q - target).abs() < 1e-9);
        let config = GrpoConfig {
            seed: 33,
            ..GrpoConfig::default()
        };
        let groups = 10_000u32;
        let mut learnable = 0u32;
        for g in 0..groups {
            if rollout_group(&p, &task, &config, g, 0).unwrap().learnable {
                learnable += 1;
            }
        }
        let rate = f64::from(learnable) / f64::from(groups);
        let expected = enumerate_group_outcomes(q, 8);
        assert!(
            (rate - expected).abs() < 0.02,
            "q = {target}: rate {rate} vs closed form {expected}"
        );
    }
    println!("ACCEPT criterion 3 (oracle suite): PASS (max DP diff {worst:.2e})");
}

#[test]
fn criterion_4_probing_selection_suite() {
    // p-hat within the binomial CI of the oracle rate at K = 1000.
    let base = Profile::Strong.params();
    let tasks: Vec<TaskInstance> = (0..10)
        .map(|i| generate_shuffled_objects(400 + i, 4, 2 + (i % 10) as u32).unwrap())
        .collect();
    let estimates = probe_pool(&base, &tasks, 1000, 1.0, 41).unwrap();
    for (task, estimate) in tasks.iter().zip(&estimates) {
        let q = exact_success_probability(&base, task, 1.0).unwrap();
        let ci = 3.0 * (q * (1.0 - q) / 1000.0).sqrt();
        assert!(
            (estimate.p_hat - q).abs() <= ci + 1e-9,
            "{}: p_hat {} vs oracle {q} (ci {ci})",
            task.id,
            estimate.p_hat
        );
    }

    // Budget is exactly floor(p * |pool|).
    let pool_estimates = probe_pool(
        &base,
        &(0..137)
            .map(|i| generate_shuffled_objects(900 + i, 4, 2 + (i % 11) as u32).unwrap())
            .collect::<Vec<_>>(),
        10,
        1.0,
        42,
    )
    .unwrap();
    for fraction in [0.10f64, 0.25, 0.5, 1.0] {
        let expected = (fraction * 137.0).floor() as usize;
        for policy in SelectionPolicy::ALL {
            let result = select(&pool_estimates, policy, fraction, 7).unwrap();
            assert_eq!(result.selected_ids.len(), expected, "{policy:?} at {fraction}");
        }
    }

    // Mean p-hat ordering hardest <= random <= easiest over 30 seeds.
    let hardest = select(&pool_estimates, SelectionPolicy::Hardest, 0.1, 0).unwrap();
    let easiest = select(&pool_estimates, SelectionPolicy::Easiest, 0.1, 0).unwrap();
    let mut random_mean = 0.0;
    for seed in 0..30 {
        random_mean += select(&pool_estimates, SelectionPolicy::Random, 0.1, seed)
            .unwrap()
            .summary
            .mean_p_hat;
    }
    random_mean /= 30.0;
    assert!(hardest.summary.mean_p_hat <= random_mean);
    assert!(random_mean <= easiest.summary.mean_p_hat);

    // Determinism and input-order invariance.
    let mut reversed = pool_estimates.clone();
    reversed.reverse();
    for policy in SelectionPolicy::ALL {
        let a = select(&pool_estimates, policy, 0.1, 3).unwrap();
        let b = select(&pool_estimates, policy, 0.1, 3).unwrap();
        let c = select(&reversed, policy, 0.1, 3).unwrap();
        assert_eq!(a, b, "{policy:?} not deterministic");
        assert_eq!(a, c, "{policy:?} depends on input order");
    }
    println!("ACCEPT criterion 4 (probing/selection suite): PASS");
}

fn mean_improvement_by_policy(report: &ExperimentReport) -> BTreeMap<&'static str, f64> {
    let mut sums: BTreeMap<&'static str, (f64, u32)> = BTreeMap::new();
    for row in &report.summary {
        let entry = sums.entry(row.policy.as_str()).or_insert((0.0, 0));
        entry.0 += row.improvement;
        entry.1 += 1;
    }
    sums.into_iter()
        .map(|(policy, (sum, n))| (policy, sum / f64::from(n)))
        .collect()
}

fn mean_learnable_by_policy(report: &ExperimentReport) -> BTreeMap<&'static str, f64> {
    let mut sums: BTreeMap<&'static str, (f64, u32)> = BTreeMap::new();
    for row in &report.summary {
        let entry = sums.entry(row.policy.as_str()).or_insert((0.0, 0));
        entry.0 += row.learnable_pct;
        entry.1 += 1;
    }
    sums.into_iter()
        .map(|(policy, (sum, n))| (policy, sum / f64::from(n)))
        .collect()
}

fn run_default_experiment(profile: Profile) -> ExperimentReport {
    let config = ExperimentConfig::default_with(profile, 20_240_817);
    let dir = tempfile::tempdir().unwrap();
    run_experiment(&config, dir.path()).unwrap()
}

#[test]
fn criterion_5_protocol_reproduction() {
    let report = run_default_experiment(Profile::Strong);
    assert_eq!(report.summary.len(), 12, "4 policies x 3 seeds");

    // (a) hardest strictly largest mean improvement, easiest strictly
    // smallest.
    let improvements = mean_improvement_by_policy(&report);
    let hardest = improvements["hardest"];
    let easiest = improvements["easiest"];
    for (&policy, &value) in &improvements {
        if policy != "hardest" {
            assert!(hardest > value, "hardest {hardest} !> {policy} {value}");
        }
        if policy != "easiest" {
            assert!(easiest < value, "easiest {easiest} !< {policy} {value}");
        }
    }

    // (b) learnable % hardest > easiest in every seed.
    for &seed in &report.config.seeds {
        let learnable = |policy: SelectionPolicy| {
            report
                .summary
                .iter()
                .find(|r| r.policy == policy && r.seed == seed)
                .unwrap()
                .learnable_pct
        };
        assert!(
            learnable(SelectionPolicy::Hardest) > learnable(SelectionPolicy::Easiest),
            "seed {seed}"
        );
    }

    // (c) R^2 of learnable % vs improvement > 0.3 across the 12 runs.
    let correlation = report.correlation.as_ref().expect("12 runs give a correlation");
    assert!(correlation.r2 > 0.3, "r2 = {}", correlation.r2);
    assert_eq!(correlation.points.len(), 12);

    // (d) compute-parity audit.
    assert!(report.parity.equal_across_runs);
    let grpo = &report.config.grpo;
    assert_eq!(
        report.parity.rollouts_per_run,
        u64::from(grpo.total_steps) * u64::from(grpo.batch_prompts) * u64::from(grpo.group_size)
    );
    println!(
        "ACCEPT criterion 5 (protocol reproduction): PASS \
         (hardest {hardest:+.2}, easiest {easiest:+.2}, r2 {:.3})",
        correlation.r2
    );
}

#[test]
fn criterion_6_weak_baseline_ablation() {
    let strong = run_default_experiment(Profile::Strong);
    let weak = run_default_experiment(Profile::Weak);

    let strong_learnable = mean_learnable_by_policy(&strong);
    let weak_learnable = mean_learnable_by_policy(&weak);
    assert!(
        weak_learnable["easiest"] > strong_learnable["easiest"],
        "weak easiest learnable {} !> strong {}",
        weak_learnable["easiest"],
        strong_learnable["easiest"]
    );

    let strong_improvement = mean_improvement_by_policy(&strong);
    let weak_improvement = mean_improvement_by_policy(&weak);
    let strong_gap = strong_improvement["hardest"] - strong_improvement["easiest"];
    let weak_gap = weak_improvement["hardest"] - weak_improvement["easiest"];
    assert!(
        weak_gap < strong_gap,
        "gap did not shrink: weak {weak_gap} vs strong {strong_gap}"
    );
    println!(
        "ACCEPT criterion 6 (weak-baseline ablation): PASS \
         (easiest learnable {:.1}% vs {:.1}%, gap {weak_gap:.2} vs {strong_gap:.2})",
        weak_learnable["easiest"], strong_learnable["easiest"]
    );
}

#[test]
fn criterion_7_ood_pass_at_k() {
    let report = run_default_experiment(Profile::Strong);

    // Hardest-trained pass@8 >= base pass@8 in the majority of seeds.
    let hardest_runs: Vec<_> = report
        .runs
        .iter()
        .filter(|r| r.policy == SelectionPolicy::Hardest)
        .collect();
    assert_eq!(hardest_runs.len(), 3);
    let wins = hardest_runs
        .iter()
        .filter(|r| r.ood_pass.value >= r.base_ood_pass.value)
        .count();
    assert!(wins * 2 > hardest_runs.len(), "only {wins} of {} seeds", hardest_runs.len());

    // pass@k monotone in k (nested per-task sample sets).
    let pool = build_pool(&report.config.pool).unwrap();
    let final_params = &hardest_runs[0].report.final_params;
    let mut last = 0.0;
    for k in 1..=8 {
        let value = pass_at_k(final_params, &pool.ood, k, 1.0, 77).unwrap();
        assert!(value >= last, "pass@{k} = {value} < {last}");
        last = value;
    }
    println!(
        "ACCEPT criterion 7 (OOD pass@k): PASS ({wins}/3 seeds, pass@8 {:.3} vs base {:.3})",
        hardest_runs[0].ood_pass.value, hardest_runs[0].base_ood_pass.value
    );
}

#[test]
fn criterion_8_determinism() {
    // Identical config and seed must reproduce byte-identical artifacts.
    let mut config = ExperimentConfig::default_with(Profile::Strong, 99);
    config.pool.train = vec![grpo_lab_core::pool::Stratum {
        count: 60,
        min_steps: 2,
        max_steps: 8,
        min_objects: 3,
        max_objects: 5,
    }];
    config.pool.test = vec![grpo_lab_core::pool::Stratum {
        count: 20,
        min_steps: 2,
        max_steps: 8,
        min_objects: 3,
        max_objects: 5,
    }];
    config.pool.ood = vec![grpo_lab_core::pool::Stratum {
        count: 10,
        min_steps: 10,
        max_steps: 12,
        min_objects: 4,
        max_objects: 6,
    }];
    config.grpo.total_steps = 30;
    config.grpo.eval_every = 10;
    config.grpo.batch_prompts = 8;
    config.seeds = vec![1, 2];

    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    run_experiment(&config, dir_a.path()).unwrap();
    run_experiment(&config, dir_b.path()).unwrap();

    let files_a = collect_files(dir_a.path());
    let files_b = collect_files(dir_b.path());
    assert!(!files_a.is_empty());
    assert_eq!(
        files_a.keys().collect::<Vec<_>>(),
        files_b.keys().collect::<Vec<_>>()
    );
    let mut compared = 0;
    for (name, bytes) in &files_a {
        assert_eq!(
            Some(bytes),
            files_b.get(name),
            "file {name} differs between reruns"
        );
        compared += 1;
    }
    println!("ACCEPT criterion 8 (determinism): PASS ({compared} files byte-identical)");
}

fn collect_files(root: &std::path::Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}
