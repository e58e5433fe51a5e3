use alloc::string::String;

/// Errors raised by the models, trainers and scheduler.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid trial record: {0}")]
    InvalidRecord(String),
    #[error("invalid deck: {0}")]
    InvalidDeck(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("probability {value} out of range for {context}")]
    OutOfRange { value: f64, context: String },
    #[error("input has no {missing} outcomes; both classes are required")]
    SingleClass { missing: &'static str },
    #[error("coefficients diverge (perfect or quasi-complete separation): {0}")]
    Separation(String),
    #[error("singular Hessian; check the features for collinearity")]
    SingularHessian,
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("session is complete")]
    SessionComplete,
}

pub type Result<T> = core::result::Result<T, Error>;
