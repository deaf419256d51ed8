use thiserror::Error;

use tds_core::polyapprox::PolyApproxError;
use tds_core::scenarios::ScenarioError;
use tds_core::tds_kernel::TdsKernelError;
use tds_core::tds_moment::TdsMomentError;
use tds_core::{DataError, ParamsError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Kernel(#[from] TdsKernelError),
    #[error(transparent)]
    Moment(#[from] TdsMomentError),
    #[error(transparent)]
    Approx(#[from] PolyApproxError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code: 2 for configuration problems, 3 for numerical
    /// failures, 1 for anything else (I/O).
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Params(_) | HarnessError::Scenario(_) | HarnessError::Json(_) => 2,
            HarnessError::Kernel(TdsKernelError::Params(_)) | HarnessError::Moment(TdsMomentError::Params(_)) => 2,
            HarnessError::Moment(TdsMomentError::Invalid(_) | TdsMomentError::UnsupportedMarginal) => 2,
            HarnessError::Kernel(_) | HarnessError::Moment(_) | HarnessError::Approx(_) => 3,
            HarnessError::Data(_) | HarnessError::Csv(_) | HarnessError::Io(_) => 1,
        }
    }
}
