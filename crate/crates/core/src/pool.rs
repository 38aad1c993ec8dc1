//! Task pool construction: stratified train/test/OOD splits from a single
//! master seed.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::rng::StreamKey;
use crate::task::{generate_arithmetic_chain, generate_shuffled_objects, TaskInstance, TaskKind};

/// One difficulty band: how many instances to draw and the inclusive step
/// and object-count ranges they are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stratum {
    pub count: u32,
    pub min_steps: u32,
    pub max_steps: u32,
    /// Ignored for arithmetic chains.
    #[serde(default)]
    pub min_objects: u32,
    #[serde(default)]
    pub max_objects: u32,
}

/// All generator knobs plus the master seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolConfig {
    pub kind: TaskKind,
    pub master_seed: u64,
    /// Inclusive additive-operand range for arithmetic chains.
    pub operand_range: (i64, i64),
    pub train: Vec<Stratum>,
    pub test: Vec<Stratum>,
    pub ood: Vec<Stratum>,
}

/// The generated splits together with the config that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskPool {
    pub generation_config: PoolConfig,
    pub train: Vec<TaskInstance>,
    pub test: Vec<TaskInstance>,
    pub ood: Vec<TaskInstance>,
}

impl PoolConfig {
    fn validate(&self) -> Result<()> {
        if self.train.is_empty() || self.test.is_empty() {
            return Err(CoreError::Config(
                "train and test splits must each have at least one stratum".into(),
            ));
        }
        for (split, strata) in [
            ("train", &self.train),
            ("test", &self.test),
            ("ood", &self.ood),
        ] {
            for s in strata.iter() {
                if s.count == 0 {
                    return Err(CoreError::Config(format!("{split}: stratum with count 0")));
                }
                if s.min_steps < 1 || s.min_steps > s.max_steps {
                    return Err(CoreError::Config(format!(
                        "{split}: bad step range ({}, {})",
                        s.min_steps, s.max_steps
                    )));
                }
                if self.kind == TaskKind::ShuffledObjects {
                    if s.min_objects < 2 || s.min_objects > s.max_objects {
                        return Err(CoreError::Config(format!(
                            "{split}: bad object range ({}, {})",
                            s.min_objects, s.max_objects
                        )));
                    }
                    // N = 2 leaves a step with no wrong alternative, which
                    // makes the policy's success probability degenerate;
                    // the training split must not contain such instances.
                    if split == "train" && s.min_objects < 3 {
                        return Err(CoreError::Config(
                            "train strata require min_objects >= 3".into(),
                        ));
                    }
                }
            }
        }
        if !self.ood.is_empty() {
            let max_train_steps = self.train.iter().map(|s| s.max_steps).max().unwrap();
            let min_ood_steps = self.ood.iter().map(|s| s.min_steps).min().unwrap();
            if min_ood_steps <= max_train_steps {
                return Err(CoreError::Config(format!(
                    "ood steps must exceed every train step count \
                     (min ood {min_ood_steps} <= max train {max_train_steps})"
                )));
            }
        }
        Ok(())
    }
}

impl TaskPool {
    /// Lookup table over all three splits.
    pub fn index_by_id(&self) -> BTreeMap<&str, &TaskInstance> {
        self.train
            .iter()
            .chain(&self.test)
            .chain(&self.ood)
            .map(|t| (t.id.as_str(), t))
            .collect()
    }

    /// Resolve selected ids against the training split, preserving order.
    pub fn train_subset(&self, ids: &[String]) -> Result<Vec<TaskInstance>> {
        let index: BTreeMap<&str, &TaskInstance> =
            self.train.iter().map(|t| (t.id.as_str(), t)).collect();
        ids.iter()
            .map(|id| {
                index
                    .get(id.as_str())
                    .map(|t| (*t).clone())
                    .ok_or_else(|| CoreError::Contract(format!("id {id} not in train split")))
            })
            .collect()
    }
}

fn generate_split(config: &PoolConfig, split: &str, strata: &[Stratum]) -> Result<Vec<TaskInstance>> {
    let mut out = Vec::new();
    let mut index = 0u64;
    for stratum in strata {
        for _ in 0..stratum.count {
            let seed = StreamKey::new(config.master_seed)
                .mix_str("pool")
                .mix_str(split)
                .mix_u64(index)
                .value();
            let mut shape = StreamKey::new(seed).mix_str("shape").rng();
            let steps = shape.gen_range(stratum.min_steps..=stratum.max_steps);
            let task = match config.kind {
                TaskKind::ShuffledObjects => {
                    let objects = shape.gen_range(stratum.min_objects..=stratum.max_objects);
                    generate_shuffled_objects(seed, objects, steps)?
                }
                TaskKind::ArithmeticChain => {
                    generate_arithmetic_chain(seed, steps, config.operand_range)?
                }
            };
            out.push(task);
            index += 1;
        }
    }
    Ok(out)
}

/// Build a pool with exactly the configured strata sizes. Per-instance seeds
/// derive from (master seed, split, index), so any instance is reproducible
/// in isolation.
pub fn build_pool(config: &PoolConfig) -> Result<TaskPool> {
    config.validate()?;
    let train = generate_split(config, "train", &config.train)?;
    let test = generate_split(config, "test", &config.test)?;
    let ood = generate_split(config, "ood", &config.ood)?;

    let mut ids = BTreeSet::new();
    for task in train.iter().chain(&test).chain(&ood) {
        if !ids.insert(task.id.as_str()) {
            return Err(CoreError::Config(format!("duplicate task id {}", task.id)));
        }
    }
    Ok(TaskPool {
        generation_config: config.clone(),
        train,
        test,
        ood,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::task::TaskBody;

    fn so_stratum(count: u32, steps: (u32, u32), objects: (u32, u32)) -> Stratum {
        Stratum {
            count,
            min_steps: steps.0,
            max_steps: steps.1,
            min_objects: objects.0,
            max_objects: objects.1,
        }
    }

    fn small_config() -> PoolConfig {
        PoolConfig {
            kind: TaskKind::ShuffledObjects,
            master_seed: 11,
            operand_range: (1, 9),
            train: alloc::vec![
                so_stratum(30, (2, 6), (3, 5)),
                so_stratum(30, (7, 12), (3, 5))
            ],
            test: alloc::vec![so_stratum(20, (2, 12), (3, 5))],
            ood: alloc::vec![so_stratum(10, (20, 30), (4, 6))],
        }
    }

    #[test]
    fn counts_match_config_and_ids_are_disjoint() {
        let mut config = small_config();
        config.train = alloc::vec![so_stratum(1000, (2, 12), (3, 5))];
        config.test = alloc::vec![so_stratum(250, (2, 12), (3, 5))];
        config.ood = alloc::vec![so_stratum(100, (20, 30), (4, 6))];
        let pool = build_pool(&config).unwrap();
        assert_eq!(pool.train.len(), 1000);
        assert_eq!(pool.test.len(), 250);
        assert_eq!(pool.ood.len(), 100);
        assert_eq!(pool.index_by_id().len(), 1350);
    }

    #[test]
    fn identical_configs_build_byte_identical_pools() {
        let config = small_config();
        let a = serde_json::to_vec(&build_pool(&config).unwrap()).unwrap();
        let b = serde_json::to_vec(&build_pool(&config).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ood_steps_strictly_exceed_train_steps() {
        let pool = build_pool(&small_config()).unwrap();
        let max_train = pool.train.iter().map(|t| t.num_steps()).max().unwrap();
        let min_ood = pool.ood.iter().map(|t| t.num_steps()).min().unwrap();
        assert!(min_ood > max_train);
    }

    #[test]
    fn overlapping_ood_range_is_a_config_error() {
        let mut config = small_config();
        config.ood = alloc::vec![so_stratum(10, (5, 30), (4, 6))];
        assert!(matches!(build_pool(&config), Err(CoreError::Config(_))));
    }

    #[test]
    fn two_object_train_stratum_is_rejected() {
        let mut config = small_config();
        config.train.push(so_stratum(5, (2, 4), (2, 3)));
        assert!(matches!(build_pool(&config), Err(CoreError::Config(_))));
    }

    #[test]
    fn strata_shapes_are_respected() {
        let pool = build_pool(&small_config()).unwrap();
        for t in &pool.train[..30] {
            assert!((2..=6).contains(&t.num_steps()));
        }
        for t in &pool.train[30..] {
            assert!((7..=12).contains(&t.num_steps()));
        }
    }

    #[test]
    fn arithmetic_pools_build_too() {
        let config = PoolConfig {
            kind: TaskKind::ArithmeticChain,
            master_seed: 5,
            operand_range: (1, 9),
            train: alloc::vec![Stratum {
                count: 40,
                min_steps: 1,
                max_steps: 6,
                min_objects: 0,
                max_objects: 0,
            }],
            test: alloc::vec![Stratum {
                count: 10,
                min_steps: 1,
                max_steps: 6,
                min_objects: 0,
                max_objects: 0,
            }],
            ood: alloc::vec![],
        };
        let pool = build_pool(&config).unwrap();
        assert_eq!(pool.train.len(), 40);
        assert!(pool
            .train
            .iter()
            .all(|t| matches!(t.body, TaskBody::ArithmeticChain { .. })));
    }
}
