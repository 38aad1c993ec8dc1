//! Experiment harness, file formats, and CLI for the GRPO laboratory.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod formats;
pub mod report;
pub mod verify;
