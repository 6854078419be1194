use thiserror::Error;

use crate::stages::Stage;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    /// A stage input is missing; `producer` is the stage that writes it.
    #[error("stage `{stage}` needs {artifact}, which is produced by `{producer}`; run `{producer}` first")]
    Dependency {
        stage: Stage,
        artifact: String,
        producer: Stage,
    },

    #[error("manifest chain check failed: {}", .0.join("; "))]
    Chain(Vec<String>),

    #[error(transparent)]
    Core(#[from] crisismine_core::Error),
}

impl CliError {
    /// 2 config, 3 dependency, 4 data.
    pub fn exit_code(&self) -> i32 {
        use crisismine_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Dependency { .. } => 3,
            CliError::Chain(_) => 4,
            CliError::Core(E::Config(_) | E::Param(_)) => 2,
            CliError::Core(_) => 4,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
