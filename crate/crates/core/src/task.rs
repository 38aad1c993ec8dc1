//! Procedural reasoning tasks with exact correctness judging.
//!
//! Two task families are generated: position-tracking through a sequence of
//! swaps (`shuffled_objects`) and integer arithmetic chains
//! (`arithmetic_chain`). Both are solved step by step; each step has one
//! instructed operation and a finite set of concrete wrong alternatives,
//! which is what gives the stochastic policy in [`crate::policy`] graded
//! success rates.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::rng::StreamKey;

/// Running values of generated arithmetic chains stay within this bound by
/// construction (operand sampling is restricted, never truncated).
pub const VALUE_BOUND: i64 = 10_000;

/// Multipliers available to the arithmetic generator.
pub const MULTIPLIERS: [i64; 2] = [2, 3];

/// Value perturbations a wrong arithmetic step applies instead of the
/// instructed operation.
pub const PERTURBATIONS: [i64; 4] = [1, -1, 10, -10];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    ShuffledObjects,
    ArithmeticChain,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::ShuffledObjects => "shuffled_objects",
            TaskKind::ArithmeticChain => "arithmetic_chain",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operator {
    Add,
    Sub,
    Mul,
}

/// One instructed arithmetic step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChainOp {
    pub op: Operator,
    pub operand: i64,
}

impl ChainOp {
    pub fn apply(self, value: i64) -> i64 {
        match self.op {
            Operator::Add => value.saturating_add(self.operand),
            Operator::Sub => value.saturating_sub(self.operand),
            Operator::Mul => value.saturating_mul(self.operand),
        }
    }
}

/// Task-kind-specific payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskBody {
    ShuffledObjects {
        num_objects: u32,
        /// Ordered position pairs; each swap exchanges the contents of the
        /// two positions. Stored with i < j.
        swaps: Vec<(u32, u32)>,
        query_object: u32,
    },
    ArithmeticChain {
        initial_value: i64,
        ops: Vec<ChainOp>,
    },
}

/// One synthetic reasoning problem with its ground-truth answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub id: String,
    #[serde(flatten)]
    pub body: TaskBody,
    /// Final position of the query object, or final chain value.
    pub truth: i64,
}

/// Mid-replay state: the current arrangement (`arr[pos] = object`) or the
/// current running value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskState {
    Arrangement(Vec<u32>),
    Value(i64),
}

/// A concrete operation applied at one step: the instructed one or a
/// specific wrong alternative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepAction {
    Swap { i: u32, j: u32 },
    Chain(ChainOp),
    Perturb(i64),
}

impl TaskInstance {
    /// Build an instance from its payload, validating invariants and
    /// computing `truth` by exact replay.
    pub fn from_body(id: String, body: TaskBody) -> Result<TaskInstance> {
        match &body {
            TaskBody::ShuffledObjects {
                num_objects,
                swaps,
                query_object,
            } => {
                if *num_objects < 2 {
                    return Err(CoreError::InvalidParameter(format!(
                        "num_objects must be >= 2, got {num_objects}"
                    )));
                }
                if swaps.is_empty() {
                    return Err(CoreError::InvalidParameter("swaps must be non-empty".into()));
                }
                for &(i, j) in swaps {
                    if i == j || i >= *num_objects || j >= *num_objects {
                        return Err(CoreError::InvalidParameter(format!(
                            "swap ({i}, {j}) out of range for {num_objects} positions"
                        )));
                    }
                }
                if *query_object >= *num_objects {
                    return Err(CoreError::InvalidParameter(format!(
                        "query_object {query_object} out of range"
                    )));
                }
            }
            TaskBody::ArithmeticChain { ops, .. } => {
                if ops.is_empty() {
                    return Err(CoreError::InvalidParameter("ops must be non-empty".into()));
                }
            }
        }
        let mut instance = TaskInstance { id, body, truth: 0 };
        instance.truth = instance.recompute_truth();
        Ok(instance)
    }

    /// Re-check invariants of a deserialized instance, including that the
    /// stored truth matches exact replay.
    pub fn validate(&self) -> Result<()> {
        let rebuilt = TaskInstance::from_body(self.id.clone(), self.body.clone())?;
        if rebuilt.truth != self.truth {
            return Err(CoreError::Contract(format!(
                "task {}: stored truth {} != recomputed {}",
                self.id, self.truth, rebuilt.truth
            )));
        }
        Ok(())
    }

    pub fn kind(&self) -> TaskKind {
        match self.body {
            TaskBody::ShuffledObjects { .. } => TaskKind::ShuffledObjects,
            TaskBody::ArithmeticChain { .. } => TaskKind::ArithmeticChain,
        }
    }

    /// Number of steps M.
    pub fn num_steps(&self) -> usize {
        match &self.body {
            TaskBody::ShuffledObjects { swaps, .. } => swaps.len(),
            TaskBody::ArithmeticChain { ops, .. } => ops.len(),
        }
    }

    /// Object count N for shuffled-objects tasks, 0 otherwise.
    pub fn num_objects(&self) -> u32 {
        match &self.body {
            TaskBody::ShuffledObjects { num_objects, .. } => *num_objects,
            TaskBody::ArithmeticChain { .. } => 0,
        }
    }

    /// Identity arrangement or initial chain value.
    pub fn initial_state(&self) -> TaskState {
        match &self.body {
            TaskBody::ShuffledObjects { num_objects, .. } => {
                TaskState::Arrangement((0..*num_objects).collect())
            }
            TaskBody::ArithmeticChain { initial_value, .. } => TaskState::Value(*initial_value),
        }
    }

    /// The instructed operation at step `t`.
    pub fn instructed_action(&self, t: usize) -> StepAction {
        match &self.body {
            TaskBody::ShuffledObjects { swaps, .. } => {
                let (i, j) = swaps[t];
                StepAction::Swap { i, j }
            }
            TaskBody::ArithmeticChain { ops, .. } => StepAction::Chain(ops[t]),
        }
    }

    /// Number of wrong alternatives per step: C(N,2) - 1 transpositions, or
    /// the fixed perturbation set.
    pub fn alternative_count(&self) -> usize {
        match &self.body {
            TaskBody::ShuffledObjects { num_objects, .. } => {
                let n = *num_objects as usize;
                n * (n - 1) / 2 - 1
            }
            TaskBody::ArithmeticChain { .. } => PERTURBATIONS.len(),
        }
    }

    /// The `idx`-th wrong alternative at step `t`. Shuffled-objects
    /// alternatives are the non-instructed transpositions in lexicographic
    /// order; arithmetic alternatives are [`PERTURBATIONS`] in order.
    pub fn alternative_action(&self, t: usize, idx: usize) -> StepAction {
        match &self.body {
            TaskBody::ShuffledObjects {
                num_objects, swaps, ..
            } => {
                let instructed = canonical_pair(swaps[t]);
                let mut k = idx;
                for pair in all_pairs(*num_objects) {
                    if pair == instructed {
                        continue;
                    }
                    if k == 0 {
                        return StepAction::Swap {
                            i: pair.0,
                            j: pair.1,
                        };
                    }
                    k -= 1;
                }
                unreachable!("alternative index out of range")
            }
            TaskBody::ArithmeticChain { .. } => StepAction::Perturb(PERTURBATIONS[idx]),
        }
    }

    /// Answer read off a final state: position of the query object, or the
    /// final value.
    pub fn answer_of(&self, state: &TaskState) -> i64 {
        match (&self.body, state) {
            (TaskBody::ShuffledObjects { query_object, .. }, TaskState::Arrangement(arr)) => arr
                .iter()
                .position(|&obj| obj == *query_object)
                .expect("query object present") as i64,
            (TaskBody::ArithmeticChain { .. }, TaskState::Value(v)) => *v,
            _ => panic!("state does not match task kind"),
        }
    }

    /// Exact replay of the instructed operations.
    pub fn recompute_truth(&self) -> i64 {
        let mut state = self.initial_state();
        for t in 0..self.num_steps() {
            apply_action(&mut state, self.instructed_action(t));
        }
        self.answer_of(&state)
    }
}

/// Apply a concrete step operation to a state.
pub fn apply_action(state: &mut TaskState, action: StepAction) {
    match (state, action) {
        (TaskState::Arrangement(arr), StepAction::Swap { i, j }) => {
            arr.swap(i as usize, j as usize);
        }
        (TaskState::Value(v), StepAction::Chain(op)) => *v = op.apply(*v),
        (TaskState::Value(v), StepAction::Perturb(delta)) => *v = v.saturating_add(delta),
        _ => panic!("action does not match state kind"),
    }
}

/// True iff `answer` equals the stored ground truth.
pub fn check_correct(task: &TaskInstance, answer: i64) -> bool {
    answer == task.truth
}

fn canonical_pair((i, j): (u32, u32)) -> (u32, u32) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

fn all_pairs(n: u32) -> impl Iterator<Item = (u32, u32)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

fn unrank_pair(n: u32, mut k: u32) -> (u32, u32) {
    for i in 0..n {
        let row = n - i - 1;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
    }
    unreachable!("pair rank out of range")
}

/// Generate a shuffled-objects task: swaps uniform over distinct position
/// pairs, query object uniform, truth by exact permutation composition.
pub fn generate_shuffled_objects(seed: u64, num_objects: u32, num_swaps: u32) -> Result<TaskInstance> {
    if num_objects < 2 {
        return Err(CoreError::InvalidParameter(format!(
            "num_objects must be >= 2, got {num_objects}"
        )));
    }
    if num_swaps < 1 {
        return Err(CoreError::InvalidParameter("num_swaps must be >= 1".into()));
    }
    let mut rng = StreamKey::new(seed).mix_str("gen-shuffled").rng();
    let num_pairs = num_objects * (num_objects - 1) / 2;
    let swaps: Vec<(u32, u32)> = (0..num_swaps)
        .map(|_| unrank_pair(num_objects, rng.gen_range(0..num_pairs)))
        .collect();
    let query_object = rng.gen_range(0..num_objects);
    TaskInstance::from_body(
        format!("so-n{num_objects}-m{num_swaps}-{seed:016x}"),
        TaskBody::ShuffledObjects {
            num_objects,
            swaps,
            query_object,
        },
    )
}

/// Generate an arithmetic chain. Operators are drawn from {+, -, x} with
/// operands restricted so the running value stays within [`VALUE_BOUND`];
/// additive operands come from `operand_range` (inclusive), multipliers
/// from [`MULTIPLIERS`].
pub fn generate_arithmetic_chain(
    seed: u64,
    num_steps: u32,
    operand_range: (i64, i64),
) -> Result<TaskInstance> {
    let (lo, hi) = operand_range;
    if lo > hi {
        return Err(CoreError::InvalidParameter(format!(
            "empty operand range ({lo}, {hi})"
        )));
    }
    if lo < 0 || hi > VALUE_BOUND {
        return Err(CoreError::InvalidParameter(format!(
            "operand range ({lo}, {hi}) outside [0, {VALUE_BOUND}]"
        )));
    }
    if num_steps < 1 {
        return Err(CoreError::InvalidParameter("num_steps must be >= 1".into()));
    }
    let mut rng = StreamKey::new(seed).mix_str("gen-chain").rng();
    let initial_value = rng.gen_range(lo..=hi);
    let mut value = initial_value;
    let mut ops = Vec::with_capacity(num_steps as usize);
    for _ in 0..num_steps {
        let add_max = hi.min(VALUE_BOUND - value);
        let sub_max = hi.min(value + VALUE_BOUND);
        let muls: Vec<i64> = MULTIPLIERS
            .iter()
            .copied()
            .filter(|c| (value * c).abs() <= VALUE_BOUND)
            .collect();
        let mut candidates = Vec::new();
        if add_max >= lo {
            candidates.push(Operator::Add);
        }
        if sub_max >= lo {
            candidates.push(Operator::Sub);
        }
        if !muls.is_empty() {
            candidates.push(Operator::Mul);
        }
        let op = candidates[rng.gen_range(0..candidates.len())];
        let chain_op = match op {
            Operator::Add => ChainOp {
                op,
                operand: rng.gen_range(lo..=add_max),
            },
            Operator::Sub => ChainOp {
                op,
                operand: rng.gen_range(lo..=sub_max),
            },
            Operator::Mul => ChainOp {
                op,
                operand: muls[rng.gen_range(0..muls.len())],
            },
        };
        value = chain_op.apply(value);
        ops.push(chain_op);
    }
    TaskInstance::from_body(
        format!("ac-m{num_steps}-{seed:016x}"),
        TaskBody::ArithmeticChain { initial_value, ops },
    )
}
