//! Report rendering: summary CSV, full JSON, and plot-ready data files
//! (per-checkpoint accuracy curves and the learnable-vs-improvement
//! scatter).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{HarnessError, Result};
use crate::experiment::{policy_means, ExperimentReport};
use crate::formats::write_json_pretty;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    Plotdata,
}

impl std::str::FromStr for ReportFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "plotdata" => Ok(ReportFormat::Plotdata),
            other => Err(HarnessError::Config(format!(
                "unknown report format {other:?} (expected csv, json, or plotdata)"
            ))),
        }
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| HarnessError::Stage {
            stage: "report".into(),
            message: format!("{}: {e}", parent.display()),
        })?;
    }
    std::fs::write(path, text).map_err(|e| HarnessError::Stage {
        stage: "report".into(),
        message: format!("{}: {e}", path.display()),
    })
}

fn fmt(value: f64) -> String {
    format!("{value:.6}")
}

/// Summary table, one row per (policy, seed).
pub fn summary_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("policy,seed,base_acc,final_acc,improvement,learnable_pct\n");
    for row in &report.summary {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            row.policy.as_str(),
            row.seed,
            fmt(row.base_acc),
            fmt(row.final_acc),
            fmt(row.improvement),
            fmt(row.learnable_pct),
        );
    }
    out
}

/// Checkpoint accuracy curves: one series per policy, seed-averaged, with
/// 1 + T/eval_every points each.
pub fn accuracy_curves_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("policy,step,mean_exact_accuracy\n");
    for &policy in &report.config.policies {
        let runs: Vec<_> = report.runs.iter().filter(|r| r.policy == policy).collect();
        if runs.is_empty() {
            continue;
        }
        let points = runs[0].report.checkpoint_evals.len();
        for i in 0..points {
            let step = runs[0].report.checkpoint_evals[i].step;
            let mean: f64 = runs
                .iter()
                .map(|r| r.report.checkpoint_evals[i].accuracy)
                .sum::<f64>()
                / runs.len() as f64;
            let _ = writeln!(out, "{},{step},{}", policy.as_str(), fmt(mean));
        }
    }
    out
}

/// Learnable-percentage vs improvement scatter, one point per run.
pub fn scatter_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("policy,seed,learnable_pct,improvement\n");
    for row in &report.summary {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            row.policy.as_str(),
            row.seed,
            fmt(row.learnable_pct),
            fmt(row.improvement),
        );
    }
    out
}

/// Pass@k table: the base policy row then per-policy seed means.
pub fn ood_csv(report: &ExperimentReport) -> String {
    let k = report.config.pass_k;
    let mut out = format!("strategy,pass_at_{k}\n");
    if let Some(first) = report.runs.first() {
        let base_mean: f64 = report
            .runs
            .iter()
            .filter(|r| r.policy == first.policy)
            .map(|r| r.base_ood_pass.value)
            .sum::<f64>()
            / report.config.seeds.len() as f64;
        let _ = writeln!(out, "base,{}", fmt(base_mean));
    }
    for (policy, mean) in policy_means(report, |r| r.ood_pass.value) {
        let _ = writeln!(out, "{},{}", policy.as_str(), fmt(mean));
    }
    out
}

/// Write the files for one format; returns the paths written.
pub fn emit_report(
    report: &ExperimentReport,
    format: ReportFormat,
    out_dir: &Path,
) -> Result<Vec<std::path::PathBuf>> {
    match format {
        ReportFormat::Csv => {
            let summary = out_dir.join("summary.csv");
            write_text(&summary, &summary_csv(report))?;
            let ood = out_dir.join("ood_pass_at_k.csv");
            write_text(&ood, &ood_csv(report))?;
            Ok(vec![summary, ood])
        }
        ReportFormat::Json => {
            let path = out_dir.join("experiment.json");
            write_json_pretty(&path, report)?;
            Ok(vec![path])
        }
        ReportFormat::Plotdata => {
            let curves = out_dir.join("plotdata").join("accuracy_curves.csv");
            write_text(&curves, &accuracy_curves_csv(report))?;
            let scatter = out_dir.join("plotdata").join("learnable_scatter.csv");
            write_text(&scatter, &scatter_csv(report))?;
            Ok(vec![curves, scatter])
        }
    }
}

/// CSV and plotdata artifacts for an experiment directory (the JSON is
/// written by the experiment itself).
pub fn emit_all(report: &ExperimentReport, out_dir: &Path) -> Result<()> {
    emit_report(report, ReportFormat::Csv, out_dir)?;
    emit_report(report, ReportFormat::Plotdata, out_dir)?;
    Ok(())
}
