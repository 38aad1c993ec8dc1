//! Harness errors with CLI exit-code mapping.

use grpo_lab_core::CoreError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{stage} stage failed: {message}")]
    Stage { stage: String, message: String },
}

impl HarnessError {
    /// Exit code 2 for configuration problems, 3 for stage failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Stage { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Tag an error with the pipeline stage it occurred in. Core parameter and
/// config violations stay config errors regardless of stage.
pub fn in_stage<T, E: std::fmt::Display>(
    stage: &str,
) -> impl Fn(std::result::Result<T, E>) -> Result<T> + '_ {
    move |result| {
        result.map_err(|err| {
            let message = err.to_string();
            if message.starts_with("config error")
                || message.starts_with("invalid parameter")
            {
                HarnessError::Config(message)
            } else {
                HarnessError::Stage {
                    stage: stage.to_string(),
                    message,
                }
            }
        })
    }
}

impl From<CoreError> for HarnessError {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::Config(_) | CoreError::InvalidParameter(_) => {
                HarnessError::Config(err.to_string())
            }
            other => HarnessError::Stage {
                stage: "core".to_string(),
                message: other.to_string(),
            },
        }
    }
}
