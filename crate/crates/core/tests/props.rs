//! Property tests for the spec-level invariants.

use grpo_lab_core::difficulty::DifficultyEstimate;
use grpo_lab_core::grpo::{compute_advantages, is_learnable};
use grpo_lab_core::oracle::enumerate_group_outcomes;
use grpo_lab_core::selection::{select, SelectionPolicy};
use grpo_lab_core::task::{generate_arithmetic_chain, generate_shuffled_objects};
use proptest::prelude::*;

fn estimates_strategy() -> impl Strategy<Value = Vec<DifficultyEstimate>> {
    prop::collection::btree_map(0u32..1000, 0u32..=20, 10..60).prop_map(|m| {
        m.into_iter()
            .map(|(id, successes)| DifficultyEstimate {
                task_id: format!("task-{id:04}"),
                k: 20,
                successes,
                p_hat: f64::from(successes) / 20.0,
                probe_temperature: 1.0,
            })
            .collect()
    })
}

proptest! {
    #[test]
    fn advantages_sum_to_zero(rewards in prop::collection::vec(0u8..=1, 1..64)) {
        let (baseline, advantages) = compute_advantages(&rewards).unwrap();
        let sum: f64 = advantages.iter().sum();
        prop_assert!(sum.abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&baseline));
        let mixed = rewards.contains(&0) && rewards.contains(&1);
        prop_assert_eq!(is_learnable(&rewards), mixed);
        if !mixed {
            prop_assert!(advantages.iter().all(|&a| a == 0.0));
        }
    }

    #[test]
    fn group_outcome_probability_is_a_probability(q in 0.0f64..=1.0, g in 1u32..16) {
        let p = enumerate_group_outcomes(q, g);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!((p - enumerate_group_outcomes(1.0 - q, g)).abs() < 1e-12);
    }

    #[test]
    fn selection_budget_and_membership(
        estimates in estimates_strategy(),
        fraction in 0.05f64..=1.0,
        seed in any::<u64>(),
    ) {
        let budget = (fraction * estimates.len() as f64).floor() as usize;
        prop_assume!(budget > 0);
        for policy in SelectionPolicy::ALL {
            let result = select(&estimates, policy, fraction, seed).unwrap();
            prop_assert_eq!(result.selected_ids.len(), budget);
            let mut unique = result.selected_ids.clone();
            unique.sort();
            unique.dedup();
            prop_assert_eq!(unique.len(), budget, "duplicate selections");
            for id in &result.selected_ids {
                prop_assert!(estimates.iter().any(|e| &e.task_id == id));
            }
        }
    }

    #[test]
    fn selection_ignores_input_order(
        estimates in estimates_strategy().prop_shuffle(),
        seed in any::<u64>(),
    ) {
        let mut sorted = estimates.clone();
        sorted.sort_by(|a, b| a.task_id.cmp(&b.task_id));
        for policy in SelectionPolicy::ALL {
            let a = select(&estimates, policy, 0.3, seed);
            let b = select(&sorted, policy, 0.3, seed);
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn hardest_mean_never_exceeds_easiest_mean(estimates in estimates_strategy()) {
        let hardest = select(&estimates, SelectionPolicy::Hardest, 0.2, 0);
        let easiest = select(&estimates, SelectionPolicy::Easiest, 0.2, 0);
        prop_assume!(hardest.is_ok());
        prop_assert!(hardest.unwrap().summary.mean_p_hat <= easiest.unwrap().summary.mean_p_hat);
    }

    #[test]
    fn generated_truth_survives_replay(
        seed in any::<u64>(),
        objects in 3u32..=6,
        steps in 1u32..=12,
    ) {
        let t = generate_shuffled_objects(seed, objects, steps).unwrap();
        prop_assert_eq!(t.recompute_truth(), t.truth);
        let c = generate_arithmetic_chain(seed, steps, (1, 9)).unwrap();
        prop_assert_eq!(c.recompute_truth(), c.truth);
    }
}
