use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid support region: {0}")]
    InvalidRegion(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite state at step {step}")]
    NonFinite { step: usize },

    #[error("control weight denominator {min_denominator:.3e} below certification margin {margin}")]
    DenominatorMargin { min_denominator: f64, margin: f64 },

    #[error("uniform control condition not certified (c_min = {c_min:.3e})")]
    NotCertified { c_min: f64 },

    #[error("integral criterion vacuous: dissipated energy {dissipated:.3e} against initial energy {initial:.3e}")]
    VacuousCriterion { dissipated: f64, initial: f64 },

    #[error("decay fit rejected: {0}")]
    Fit(String),

    #[error("held-out run (seed {seed}) violates the certified bound at t = {t:.4} (ratio {ratio:.6})")]
    HeldOutViolation { seed: u64, t: f64, ratio: f64 },

    #[error("domain is not star-shaped with respect to its ball: segment {from:?} -> {to:?} leaves the domain")]
    NotStarShaped { from: [f64; 2], to: [f64; 2] },

    #[error("bump weight has mass {mass}, expected 1")]
    BumpMass { mass: f64 },

    #[error("degenerate ensemble member {index}: zero norm")]
    DegenerateMember { index: usize },

    #[error("unknown {kind} `{name}`")]
    Unknown { kind: &'static str, name: String },

    #[error("mandatory check failed: {0}")]
    MandatoryCheck(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status: 1 configuration, 2 numerical abort, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 3,
            Error::InvalidGrid(_)
            | Error::DimensionMismatch { .. }
            | Error::InvalidRegion(_)
            | Error::InvalidParameter { .. }
            | Error::NotStarShaped { .. }
            | Error::BumpMass { .. }
            | Error::Unknown { .. }
            | Error::Config(_) => 1,
            Error::NonFinite { .. }
            | Error::DenominatorMargin { .. }
            | Error::NotCertified { .. }
            | Error::VacuousCriterion { .. }
            | Error::Fit(_)
            | Error::HeldOutViolation { .. }
            | Error::DegenerateMember { .. }
            | Error::MandatoryCheck(_) => 2,
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
