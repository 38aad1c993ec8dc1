//! Command-line interface: `genpool`, `probe`, `select`, `train`, `eval`,
//! `experiment`, `report`, `verify`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use grpo_lab_core::eval::{evaluate_accuracy_detailed, pass_at_k, sampled_accuracy, EvalRecord, PassAtK};
use grpo_lab_core::pool::build_pool;
use grpo_lab_core::rng::StreamKey;
use grpo_lab_core::selection::{select, SelectionPolicy, SelectionResult};

use crate::config::{ExperimentConfig, Profile};
use crate::error::{in_stage, HarnessError, Result};
use crate::experiment::{execute_run, run_experiment, ExperimentReport};
use crate::formats;
use crate::report::{emit_report, ReportFormat};
use crate::verify;

#[derive(Debug, Parser)]
#[command(
    name = "grpo-lab",
    version,
    about = "Budget-constrained GRPO laboratory on procedurally generated reasoning tasks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment config TOML; defaults are used when omitted.
    #[arg(long, global = false)]
    pub config: Option<PathBuf>,
    /// Seed override (meaning depends on the subcommand).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file or directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a task pool and write it as `.pool.json`.
    Genpool {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Probe a pool's training split with the base policy (cached).
    Probe {
        #[command(flatten)]
        common: CommonArgs,
        /// Pool file produced by `genpool`.
        #[arg(long)]
        pool: PathBuf,
        /// Base-policy profile (strong | weak).
        #[arg(long, default_value = "strong")]
        profile: Profile,
        /// Samples per prompt; defaults to 10 (shuffled objects) or 5
        /// (arithmetic chains).
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        temperature: Option<f64>,
    },
    /// Choose a budgeted subset from difficulty estimates.
    Select {
        #[command(flatten)]
        common: CommonArgs,
        /// Difficulty file produced by `probe`.
        #[arg(long)]
        estimates: PathBuf,
        #[arg(long)]
        policy: SelectionPolicy,
        #[arg(long)]
        fraction: Option<f64>,
    },
    /// Run one GRPO training run on a selected subset.
    Train {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        pool: PathBuf,
        /// Selection file produced by `select`.
        #[arg(long)]
        selection: PathBuf,
        #[arg(long, default_value = "strong")]
        profile: Profile,
        #[arg(long)]
        steps: Option<u32>,
        #[arg(long)]
        lr0: Option<f64>,
        #[arg(long)]
        kl_beta: Option<f64>,
        #[arg(long)]
        group_size: Option<u32>,
        #[arg(long)]
        batch_prompts: Option<u32>,
        #[arg(long)]
        eval_every: Option<u32>,
    },
    /// Evaluate a checkpoint on a pool split.
    Eval {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        pool: PathBuf,
        /// Checkpoint JSON (PolicyParams).
        #[arg(long)]
        params: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        /// Also compute pass@k with this k.
        #[arg(long)]
        pass_at_k: Option<u32>,
    },
    /// Run the full four-policy experiment matrix.
    Experiment {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        profile: Option<Profile>,
    },
    /// Re-emit reports from an experiment.json.
    Report {
        #[command(flatten)]
        common: CommonArgs,
        /// Experiment report JSON; defaults to `experiment.json`.
        #[arg(long)]
        experiment: Option<PathBuf>,
        #[arg(long)]
        format: ReportFormat,
    },
    /// Run all oracle cross-checks; nonzero exit on failure.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn load_config(common: &CommonArgs) -> Result<ExperimentConfig> {
    match &common.config {
        Some(path) => ExperimentConfig::from_toml_file(path),
        None => Ok(ExperimentConfig::default()),
    }
}

fn parse_split<'a>(
    pool: &'a grpo_lab_core::pool::TaskPool,
    split: &str,
) -> Result<&'a [grpo_lab_core::task::TaskInstance]> {
    match split {
        "train" => Ok(&pool.train),
        "test" => Ok(&pool.test),
        "ood" => Ok(&pool.ood),
        other => Err(HarnessError::Config(format!(
            "unknown split {other:?} (expected train, test, or ood)"
        ))),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Genpool { common } => {
            let mut config = load_config(&common)?;
            if let Some(seed) = common.seed {
                config.pool.master_seed = seed;
            }
            let pool = in_stage("pool")(build_pool(&config.pool))?;
            let out = common
                .out
                .unwrap_or_else(|| PathBuf::from("pool.pool.json"));
            formats::write_pool(&out, &pool)?;
            println!(
                "wrote {} ({} train / {} test / {} ood tasks)",
                out.display(),
                pool.train.len(),
                pool.test.len(),
                pool.ood.len()
            );
            Ok(())
        }
        Command::Probe {
            common,
            pool,
            profile,
            k,
            temperature,
        } => {
            let config = load_config(&common)?;
            let pool = formats::read_pool(&pool)?;
            let k = k
                .or(config.probe.k)
                .unwrap_or_else(|| config.probe.resolved_k(pool.generation_config.kind));
            let temperature = temperature.unwrap_or(config.probe.temperature);
            let seed = common.seed.unwrap_or(config.probe.seed);
            let out = common
                .out
                .unwrap_or_else(|| PathBuf::from("probe.difficulty.jsonl"));
            let base = profile.params();
            let (header, estimates) =
                formats::probe_with_cache(&out, &base, &pool.train, k, temperature, seed)?;
            let mean: f64 =
                estimates.iter().map(|e| e.p_hat).sum::<f64>() / estimates.len().max(1) as f64;
            println!(
                "wrote {} ({} estimates, k = {k}, mean p_hat = {mean:.4}, cache key {})",
                out.display(),
                estimates.len(),
                header.cache_key
            );
            Ok(())
        }
        Command::Select {
            common,
            estimates,
            policy,
            fraction,
        } => {
            let config = load_config(&common)?;
            let (_, estimates) = formats::read_difficulty(&estimates)?;
            let fraction = fraction.unwrap_or(config.fraction);
            let seed = common.seed.unwrap_or(config.selection_seed);
            let result = in_stage("select")(select(&estimates, policy, fraction, seed))?;
            print_selection_summary(&result, estimates.len());
            let out = common
                .out
                .unwrap_or_else(|| PathBuf::from(format!("selection_{}.json", policy.as_str())));
            formats::write_json_pretty(&out, &result)?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Train {
            common,
            pool,
            selection,
            profile,
            steps,
            lr0,
            kl_beta,
            group_size,
            batch_prompts,
            eval_every,
        } => {
            let mut config = load_config(&common)?;
            config.profile = profile;
            config.grpo.lr0 = lr0.unwrap_or(profile.default_lr0());
            if let Some(v) = steps {
                config.grpo.total_steps = v;
            }
            if let Some(v) = kl_beta {
                config.grpo.kl_beta = v;
            }
            if let Some(v) = group_size {
                config.grpo.group_size = v;
            }
            if let Some(v) = batch_prompts {
                config.grpo.batch_prompts = v;
            }
            if let Some(v) = eval_every {
                config.grpo.eval_every = v;
            }
            config.validate()?;
            let pool = formats::read_pool(&pool)?;
            let selection: SelectionResult = formats::read_json(&selection)?;
            let subset = in_stage("train")(pool.train_subset(&selection.selected_ids))?;
            let seed = common.seed.unwrap_or(1);
            let out = common.out.unwrap_or_else(|| PathBuf::from("out"));
            let record = execute_run(
                &pool,
                &subset,
                &config.profile.params(),
                &config,
                selection.policy,
                seed,
                &out,
            )?;
            println!(
                "{} seed {seed}: base {:.4} -> final {:.4} ({:+.2} points, {:.1}% learnable)",
                record.policy.as_str(),
                record.report.base_accuracy,
                record.report.final_accuracy,
                record.report.improvement,
                record.report.learnable_pct
            );
            Ok(())
        }
        Command::Eval {
            common,
            pool,
            params,
            split,
            pass_at_k: k,
        } => {
            let pool = formats::read_pool(&pool)?;
            let params: grpo_lab_core::policy::PolicyParams = formats::read_json(&params)?;
            let tasks = parse_split(&pool, &split)?;
            let seed = common.seed.unwrap_or(0);
            let detailed = in_stage("eval")(evaluate_accuracy_detailed(&params, tasks))?;
            let sampled = in_stage("eval")(sampled_accuracy(
                &params,
                tasks,
                1.0,
                StreamKey::new(seed).mix_str("eval-cli").value(),
            ))?;
            let pass = match k {
                Some(k) => Some(PassAtK {
                    k,
                    value: in_stage("eval")(pass_at_k(
                        &params,
                        tasks,
                        k,
                        1.0,
                        StreamKey::new(seed).mix_str("passk-cli").value(),
                    ))?,
                }),
                None => None,
            };
            let record = EvalRecord {
                checkpoint_step: 0,
                exact_accuracy: detailed.accuracy,
                sampled_accuracy: sampled,
                pass_at_k: pass,
                oracle_fallback: detailed.fallback_tasks > 0,
            };
            println!("{}", serde_json::to_string_pretty(&record).expect("serializable"));
            if let Some(out) = common.out {
                formats::write_json_pretty(&out, &record)?;
                println!("wrote {}", out.display());
            }
            Ok(())
        }
        Command::Experiment { common, profile } => {
            let mut config = load_config(&common)?;
            if let Some(profile) = profile {
                config.profile = profile;
                config.grpo.lr0 = profile.default_lr0();
            }
            if let Some(seed) = common.seed {
                config.pool.master_seed = seed;
            }
            let out = common.out.unwrap_or_else(|| PathBuf::from("out"));
            let report = run_experiment(&config, &out)?;
            print_experiment_summary(&report);
            println!("artifacts in {}", out.display());
            Ok(())
        }
        Command::Report {
            common,
            experiment,
            format,
        } => {
            let path = experiment.unwrap_or_else(|| PathBuf::from("experiment.json"));
            let report: ExperimentReport = formats::read_json(&path)?;
            let out = common
                .out
                .unwrap_or_else(|| path.parent().unwrap_or(Path::new(".")).to_path_buf());
            for written in emit_report(&report, format, &out)? {
                println!("wrote {}", written.display());
            }
            Ok(())
        }
        Command::Verify { common } => {
            let outcomes = verify::run_verification(common.seed.unwrap_or(0))?;
            if let Some(out) = common.out {
                formats::write_json_pretty(&out, &outcomes)?;
                println!("wrote {}", out.display());
            }
            Ok(())
        }
    }
}

fn print_selection_summary(result: &SelectionResult, pool_size: usize) {
    println!("policy:   {}", result.policy.as_str());
    println!(
        "budget:   {} of {pool_size} (fraction {})",
        result.selected_ids.len(),
        result.fraction
    );
    println!(
        "p_hat:    mean {:.4}  min {:.4}  max {:.4}",
        result.summary.mean_p_hat, result.summary.min_p_hat, result.summary.max_p_hat
    );
}

fn print_experiment_summary(report: &ExperimentReport) {
    println!("policy    seed  base_acc  final_acc  improvement  learnable%");
    for row in &report.summary {
        println!(
            "{:<9} {:<5} {:<9.4} {:<10.4} {:<+12.2} {:.1}",
            row.policy.as_str(),
            row.seed,
            row.base_acc,
            row.final_acc,
            row.improvement,
            row.learnable_pct
        );
    }
    if let Some(correlation) = &report.correlation {
        println!(
            "r2(learnable%, improvement) = {:.3} over {} runs",
            correlation.r2,
            correlation.points.len()
        );
    }
    println!(
        "compute parity: {} rollouts per run, equal across runs: {}",
        report.parity.rollouts_per_run, report.parity.equal_across_runs
    );
}
