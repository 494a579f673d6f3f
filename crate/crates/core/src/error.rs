use thiserror::Error;

/// Errors raised by the covariance, solver and Fock-space routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("covariance matrix is not symmetric (max asymmetry {max_asymmetry:.3e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("covariance has x-p cross correlations (max |coupling| {max_coupling:.3e})")]
    NotStandardBlockForm { max_coupling: f64 },

    #[error("matrix is not symplectic (max |S^T J S - J| = {defect:.3e})")]
    NotSymplectic { defect: f64 },

    #[error("covariance violates the uncertainty principle (min symplectic eigenvalue {min_symplectic_eigenvalue:.12})")]
    NotPhysical { min_symplectic_eigenvalue: f64 },

    #[error("local block of mode {mode} is numerically singular (det {det:.3e})")]
    DegenerateLocalBlock { mode: char, det: f64 },

    #[error("no sign change of the angle mismatch over alpha in [{alpha_lo}, {alpha_hi}]")]
    NoRootBracketed { alpha_lo: f64, alpha_hi: f64 },

    #[error("solution violates tan(theta0) >= tanh(r0): tan = {tan_theta:.12}, tanh = {tanh_r:.12}")]
    ConstraintViolated { tan_theta: f64, tanh_r: f64 },

    #[error("residual matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:.3e})")]
    NegativeResidual { min_eigenvalue: f64 },

    #[error("state is separable; canonical squeezing is zero")]
    Separable,

    #[error("truncation overflow: norm deficit {deficit:.3e} exceeds {limit:.1e}")]
    TruncationOverflow { deficit: f64, limit: f64 },

    #[error("angle {theta} lies outside the conjecture range [{theta_min}, pi/4] for this budget")]
    OutOfConjectureRange { theta: f64, theta_min: f64 },

    #[error("cannot parse input: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for errors caused by the input rather than by a numerical routine.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::NoRootBracketed { .. }
                | Error::ConstraintViolated { .. }
                | Error::NegativeResidual { .. }
                | Error::TruncationOverflow { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
