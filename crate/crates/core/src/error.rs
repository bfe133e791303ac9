use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("point z = {z} lies within {distance:.3e} of a branch point")]
    Domain { z: String, distance: f64 },
    #[error("sheet continuation failed at z = {z}: |w^2 - R(z)| residual {residual:.3e}")]
    Continuation { z: String, residual: f64 },
    #[error("integrator exceeded {max_steps} steps")]
    StepLimitExceeded { max_steps: usize },
    #[error("integrator step size underflow at arc parameter {at}")]
    StepSizeUnderflow { at: f64 },
    #[error("matrix is not in SU(1,1) (distance {distance:.3e})")]
    NotInSu11 { distance: f64 },
    #[error("Mobius action has a vanishing denominator")]
    Pole,
    #[error("period function {which} has a vanishing denominator")]
    DegenerateDenominator { which: u8 },
    #[error("period function {which} has imaginary part {imag:.3e}")]
    NonRealPeriod { which: u8, imag: f64 },
    #[error("sign change lost while refining bracket [{lo}, {hi}]")]
    LostBracket { lo: f64, hi: f64 },
    #[error("common value f = {f} does not satisfy |f| > 1")]
    NotAdmissible { f: f64 },
    #[error("bracket [{lo}, {hi}] encloses a pole of f1 - f2, not a crossing")]
    PoleBracket { lo: f64, hi: f64 },
    #[error("gauged monodromy around loop gamma_{loop_index} is off SU(1,1) by {residual:.3e}")]
    VerificationFailed { loop_index: usize, residual: f64 },
    #[error("indicial exponent m = {m_re} + {m_im}i is (near) an integer")]
    ResonantExponent { m_re: f64, m_im: f64 },
    #[error("end monodromy eigenvalues disagree with -exp(+-m pi i) by {mismatch:.3e}")]
    EigenvalueMismatch { mismatch: f64 },
    #[error("point is singular (|g| = 1 within tolerance)")]
    SingularPoint,
    #[error("degenerate point: {0}")]
    DegeneratePoint(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
