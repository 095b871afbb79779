use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    /// A caller violated a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),
    /// Input data was malformed (non-finite values, wrong sizes).
    #[error("invalid data: {0}")]
    Data(String),
    #[error("calibration did not converge: {message} (residual {residual:e})")]
    Calibration { message: String, residual: f64 },
    /// A barrier's validity window is empty or a time lies outside it.
    #[error("validity window: {0}")]
    Window(String),
    #[error("construction failed: {message} (worst residual {worst_residual:e} at x = {worst_x})")]
    Construction {
        message: String,
        worst_residual: f64,
        worst_x: f64,
    },
    #[error("estimation failed: {0}")]
    Estimation(String),
    #[error("stability: {0}")]
    Stability(String),
    #[error("domain saturation: {0}")]
    Saturation(String),
    /// Internal consistency check failed; indicates a bug.
    #[error("internal consistency: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn contract(msg: impl Into<String>) -> LabError {
    LabError::Contract(msg.into())
}
