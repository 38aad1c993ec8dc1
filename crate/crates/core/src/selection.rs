//! Budgeted subset selection from difficulty estimates.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::difficulty::DifficultyEstimate;
use crate::math;
use crate::rng::StreamKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionPolicy {
    Hardest,
    Easiest,
    Middle,
    Random,
}

impl SelectionPolicy {
    pub const ALL: [SelectionPolicy; 4] = [
        SelectionPolicy::Hardest,
        SelectionPolicy::Easiest,
        SelectionPolicy::Middle,
        SelectionPolicy::Random,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SelectionPolicy::Hardest => "hardest",
            SelectionPolicy::Easiest => "easiest",
            SelectionPolicy::Middle => "middle",
            SelectionPolicy::Random => "random",
        }
    }
}

impl core::str::FromStr for SelectionPolicy {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hardest" => Ok(SelectionPolicy::Hardest),
            "easiest" => Ok(SelectionPolicy::Easiest),
            "middle" => Ok(SelectionPolicy::Middle),
            "random" => Ok(SelectionPolicy::Random),
            other => Err(CoreError::InvalidParameter(alloc::format!(
                "unknown selection policy {other:?}"
            ))),
        }
    }
}

/// Summary statistics of the selected subset's p-hat values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionSummary {
    pub mean_p_hat: f64,
    pub min_p_hat: f64,
    pub max_p_hat: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub policy: SelectionPolicy,
    pub fraction: f64,
    pub selection_seed: u64,
    /// Rank order for the deterministic policies, ascending task id for
    /// random.
    pub selected_ids: Vec<String>,
    pub summary: SelectionSummary,
}

/// Median as the midpoint of the two central order statistics.
fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Choose exactly `floor(fraction * |estimates|)` tasks under `policy`.
///
/// Ties break by ascending task id, so the three deterministic policies are
/// seed-independent and all four are invariant to input order.
pub fn select(
    estimates: &[DifficultyEstimate],
    policy: SelectionPolicy,
    fraction: f64,
    seed: u64,
) -> Result<SelectionResult> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(CoreError::InvalidParameter(alloc::format!(
            "fraction must be in (0, 1], got {fraction}"
        )));
    }
    if estimates.is_empty() {
        return Err(CoreError::InvalidParameter("estimates must be non-empty".into()));
    }
    let budget = math::floor(fraction * estimates.len() as f64) as usize;
    if budget == 0 {
        return Err(CoreError::InvalidParameter(alloc::format!(
            "budget floor({fraction} * {}) is zero items",
            estimates.len()
        )));
    }

    // Canonical order first, so results never depend on input order.
    let mut canonical: Vec<&DifficultyEstimate> = estimates.iter().collect();
    canonical.sort_by(|a, b| a.task_id.cmp(&b.task_id));

    let selected: Vec<&DifficultyEstimate> = match policy {
        SelectionPolicy::Hardest => {
            let mut ranked = canonical.clone();
            ranked.sort_by(|a, b| {
                a.p_hat
                    .total_cmp(&b.p_hat)
                    .then_with(|| a.task_id.cmp(&b.task_id))
            });
            ranked.truncate(budget);
            ranked
        }
        SelectionPolicy::Easiest => {
            let mut ranked = canonical.clone();
            ranked.sort_by(|a, b| {
                b.p_hat
                    .total_cmp(&a.p_hat)
                    .then_with(|| a.task_id.cmp(&b.task_id))
            });
            ranked.truncate(budget);
            ranked
        }
        SelectionPolicy::Middle => {
            let mut values: Vec<f64> = canonical.iter().map(|e| e.p_hat).collect();
            values.sort_by(f64::total_cmp);
            let med = median(&values);
            let mut ranked = canonical.clone();
            ranked.sort_by(|a, b| {
                math::abs(a.p_hat - med)
                    .total_cmp(&math::abs(b.p_hat - med))
                    .then_with(|| a.task_id.cmp(&b.task_id))
            });
            ranked.truncate(budget);
            ranked
        }
        SelectionPolicy::Random => {
            let mut rng = StreamKey::new(seed).mix_str("select").rng();
            let mut picked = rand::seq::index::sample(&mut rng, canonical.len(), budget)
                .into_iter()
                .map(|i| canonical[i])
                .collect::<Vec<_>>();
            picked.sort_by(|a, b| a.task_id.cmp(&b.task_id));
            picked
        }
    };

    let p_hats: Vec<f64> = selected.iter().map(|e| e.p_hat).collect();
    let summary = SelectionSummary {
        mean_p_hat: math::mean(&p_hats),
        min_p_hat: p_hats.iter().copied().fold(f64::INFINITY, f64::min),
        max_p_hat: p_hats.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    };
    Ok(SelectionResult {
        policy,
        fraction,
        selection_seed: seed,
        selected_ids: selected.iter().map(|e| e.task_id.clone()).collect(),
        summary,
    })
}
