//! Core algorithms for a desk-scale GRPO training laboratory.
//!
//! Everything in this crate is a pure, deterministic function of explicit
//! seeds and configuration: procedural reasoning-task generators with exact
//! judges ([`task`], [`pool`]), a step-wise stochastic policy with analytic
//! gradients, exact KL, and an exact success-probability oracle ([`policy`]),
//! multi-sample difficulty probing ([`difficulty`]), budgeted subset
//! selection ([`selection`]), the group-relative trainer itself ([`grpo`]),
//! evaluation metrics ([`eval`]), and independent brute-force cross-checks
//! ([`oracle`]).
//!
//! The crate is `no_std`-compatible (with `alloc`); all IO, file formats,
//! and the CLI live in the companion `grpo-lab` crate. Transcendental math
//! goes through [`libm`] so results are bit-identical across platforms.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod difficulty;
pub mod error;
pub mod eval;
pub mod grpo;
pub mod math;
pub mod oracle;
pub mod policy;
pub mod pool;
pub mod rng;
pub mod selection;
pub mod task;

pub use error::CoreError;
