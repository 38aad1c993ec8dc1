//! The four-policy experiment matrix: probe once, select per policy, train
//! per (policy, seed), evaluate in-distribution and OOD, and assemble the
//! report.

use std::path::Path;

use serde::{Deserialize, Serialize};

use grpo_lab_core::difficulty::DifficultyEstimate;
use grpo_lab_core::eval::{
    correlation_r2, evaluate_accuracy_detailed, pass_at_k, sampled_accuracy, EvalRecord, PassAtK,
};
use grpo_lab_core::grpo::{train, GrpoConfig, RunReport};
use grpo_lab_core::policy::PolicyParams;
use grpo_lab_core::pool::{build_pool, TaskPool};
use grpo_lab_core::rng::StreamKey;
use grpo_lab_core::selection::{select, SelectionPolicy, SelectionResult};
use grpo_lab_core::task::TaskInstance;

use crate::config::ExperimentConfig;
use crate::error::{in_stage, HarnessError, Result};
use crate::formats::{self, Manifest};

/// One (policy, seed) training run with its evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub policy: SelectionPolicy,
    pub seed: u64,
    pub report: RunReport,
    /// Exact and sampled accuracy per stored checkpoint.
    pub checkpoint_records: Vec<EvalRecord>,
    pub ood_pass: PassAtK,
    /// Base policy's pass@k under the same evaluation streams.
    pub base_ood_pass: PassAtK,
}

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub policy: SelectionPolicy,
    pub seed: u64,
    pub base_acc: f64,
    pub final_acc: f64,
    pub improvement: f64,
    pub learnable_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationBlock {
    pub r2: f64,
    /// (learnable %, improvement) pairs, one per run.
    pub points: Vec<(f64, f64)>,
}

/// Compute-parity audit: every run must sample exactly the same number of
/// trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityAudit {
    pub rollouts_per_run: u64,
    pub equal_across_runs: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub probe_cache_key: String,
    pub selections: Vec<SelectionResult>,
    pub runs: Vec<RunRecord>,
    pub summary: Vec<SummaryRow>,
    /// Omitted when fewer than two distinct learnable-percentage values
    /// exist.
    pub correlation: Option<CorrelationBlock>,
    pub parity: ParityAudit,
}

fn run_dir(out_dir: &Path, policy: SelectionPolicy, seed: u64) -> std::path::PathBuf {
    out_dir.join("runs").join(format!("{}-seed{seed}", policy.as_str()))
}

/// Execute one training run and write its artifacts (metrics stream,
/// checkpoints, run report) under `out_dir/runs/<policy>-seed<seed>/`.
pub fn execute_run(
    pool: &TaskPool,
    subset: &[TaskInstance],
    base: &PolicyParams,
    config: &ExperimentConfig,
    policy: SelectionPolicy,
    seed: u64,
    out_dir: &Path,
) -> Result<RunRecord> {
    let grpo_config = GrpoConfig {
        seed,
        ..config.grpo.clone()
    };
    let report = in_stage("train")(train(subset, base, &grpo_config, |_, params| {
        evaluate_accuracy_detailed(params, &pool.test)
            .map(|r| r.accuracy)
            .expect("test split is within oracle caps")
    }))?;

    let mut checkpoint_records = Vec::with_capacity(report.checkpoints.len());
    for ((step, params), eval) in report.checkpoints.iter().zip(&report.checkpoint_evals) {
        debug_assert_eq!(*step, eval.step);
        let detailed = in_stage("eval")(evaluate_accuracy_detailed(params, &pool.test))?;
        let sample_seed = StreamKey::new(seed).mix_str("eval").mix_u64(u64::from(*step)).value();
        let sampled = in_stage("eval")(sampled_accuracy(params, &pool.test, 1.0, sample_seed))?;
        checkpoint_records.push(EvalRecord {
            checkpoint_step: *step,
            exact_accuracy: detailed.accuracy,
            sampled_accuracy: sampled,
            pass_at_k: None,
            oracle_fallback: detailed.fallback_tasks > 0,
        });
    }

    // The base policy is scored under the same evaluation streams as the
    // trained one, so the OOD comparison is paired per seed.
    let ood_seed = StreamKey::new(seed).mix_str("ood").value();
    let (ood_pass, base_ood_pass) = if pool.ood.is_empty() {
        (
            PassAtK { k: config.pass_k, value: 0.0 },
            PassAtK { k: config.pass_k, value: 0.0 },
        )
    } else {
        let trained = in_stage("eval")(pass_at_k(
            &report.final_params,
            &pool.ood,
            config.pass_k,
            1.0,
            ood_seed,
        ))?;
        let base_value =
            in_stage("eval")(pass_at_k(base, &pool.ood, config.pass_k, 1.0, ood_seed))?;
        (
            PassAtK { k: config.pass_k, value: trained },
            PassAtK { k: config.pass_k, value: base_value },
        )
    };

    let dir = run_dir(out_dir, policy, seed);
    formats::write_metrics_stream(
        &dir.join("run.metrics.jsonl"),
        &report.metrics,
        &checkpoint_records,
    )?;
    for (step, params) in &report.checkpoints {
        formats::write_checkpoint(&dir, *step, params)?;
    }
    let record = RunRecord {
        policy,
        seed,
        report,
        checkpoint_records,
        ood_pass,
        base_ood_pass,
    };
    formats::write_json_pretty(&dir.join("report.json"), &record)?;
    Ok(record)
}

/// Run the full pipeline: pool, probe (reused across policies), select per
/// policy, train per (policy, seed), evaluate, and write all artifacts.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentReport> {
    config.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::Stage {
        stage: "io".into(),
        message: format!("{}: {e}", out_dir.display()),
    })?;
    let mut manifest = Manifest::new();

    std::fs::write(
        out_dir.join("config.resolved.toml"),
        config.to_toml_string()?,
    )
    .map_err(|e| HarnessError::Stage {
        stage: "io".into(),
        message: e.to_string(),
    })?;
    manifest.record(out_dir, "config")?;

    let pool = in_stage("pool")(build_pool(&config.pool))?;
    formats::write_pool(&out_dir.join("pool.pool.json"), &pool)?;
    manifest.record(out_dir, "pool")?;

    let base = config.profile.params();
    let k = config.probe.resolved_k(config.pool.kind);
    let (header, estimates) = formats::probe_with_cache(
        &out_dir.join("probe.difficulty.jsonl"),
        &base,
        &pool.train,
        k,
        config.probe.temperature,
        config.probe.seed,
    )?;
    manifest.record(out_dir, "probe")?;

    let mut selections = Vec::new();
    for &policy in &config.policies {
        let selection = in_stage("select")(select(
            &estimates,
            policy,
            config.fraction,
            config.selection_seed,
        ))?;
        formats::write_json_pretty(
            &out_dir.join(format!("selection_{}.json", policy.as_str())),
            &selection,
        )?;
        selections.push(selection);
    }
    manifest.record(out_dir, "select")?;

    let mut runs = Vec::new();
    for selection in &selections {
        let subset = in_stage("train")(pool.train_subset(&selection.selected_ids))?;
        for &seed in &config.seeds {
            runs.push(execute_run(
                &pool,
                &subset,
                &base,
                config,
                selection.policy,
                seed,
                out_dir,
            )?);
        }
    }
    manifest.record(out_dir, "train")?;

    let report = assemble_report(config, &header.cache_key, selections, runs)?;
    formats::write_json_pretty(&out_dir.join("experiment.json"), &report)?;
    crate::report::emit_all(&report, out_dir)?;
    manifest.record(out_dir, "report")?;
    manifest.finish(out_dir)?;
    Ok(report)
}

fn assemble_report(
    config: &ExperimentConfig,
    probe_cache_key: &str,
    selections: Vec<SelectionResult>,
    runs: Vec<RunRecord>,
) -> Result<ExperimentReport> {
    let summary: Vec<SummaryRow> = runs
        .iter()
        .map(|run| SummaryRow {
            policy: run.policy,
            seed: run.seed,
            base_acc: run.report.base_accuracy,
            final_acc: run.report.final_accuracy,
            improvement: run.report.improvement,
            learnable_pct: run.report.learnable_pct,
        })
        .collect();

    let xs: Vec<f64> = summary.iter().map(|r| r.learnable_pct).collect();
    let ys: Vec<f64> = summary.iter().map(|r| r.improvement).collect();
    let distinct_x = {
        let mut sorted = xs.clone();
        sorted.sort_by(f64::total_cmp);
        sorted.dedup();
        sorted.len()
    };
    let correlation = if distinct_x >= 2 {
        Some(CorrelationBlock {
            r2: correlation_r2(&xs, &ys).map_err(HarnessError::from)?,
            points: xs.iter().copied().zip(ys.iter().copied()).collect(),
        })
    } else {
        None
    };

    let rollouts_per_run = runs.first().map(|r| r.report.total_rollouts).unwrap_or(0);
    let parity = ParityAudit {
        rollouts_per_run,
        equal_across_runs: runs.iter().all(|r| r.report.total_rollouts == rollouts_per_run),
    };

    Ok(ExperimentReport {
        config: config.clone(),
        probe_cache_key: probe_cache_key.to_string(),
        selections,
        runs,
        summary,
        correlation,
        parity,
    })
}

/// Per-policy mean of a per-run statistic, in config policy order.
pub fn policy_means<F>(report: &ExperimentReport, stat: F) -> Vec<(SelectionPolicy, f64)>
where
    F: Fn(&RunRecord) -> f64,
{
    report
        .config
        .policies
        .iter()
        .map(|&policy| {
            let values: Vec<f64> = report
                .runs
                .iter()
                .filter(|r| r.policy == policy)
                .map(&stat)
                .collect();
            (policy, values.iter().sum::<f64>() / values.len() as f64)
        })
        .collect()
}

/// Reused estimate sets must hash identically across policy arms; this is
/// structural here (one probe pass), so expose it for the audit.
pub fn estimates_hash(estimates: &[DifficultyEstimate]) -> String {
    formats::content_hash(&estimates)
}
