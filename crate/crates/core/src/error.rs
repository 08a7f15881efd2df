use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Every variant names the condition that failed; the CLI surfaces the
/// variant name together with the experiment id.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{name}` = {value} is out of range ({expected})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("grading exponent {0} must be >= 1")]
    BadGrading(f64),
    #[error("grid needs at least {min} interior nodes, got {got}")]
    TooFewNodes { min: usize, got: usize },
    #[error("barrier power alpha = {alpha} must lie in (0, s = {s})")]
    AlphaOutOfRange { alpha: f64, s: f64 },
    #[error("quadrature did not reach tolerance {tol:e} (estimated error {estimate:e})")]
    QuadratureFail { tol: f64, estimate: f64 },
    #[error("point {x} is too close to the boundary for cut radius {cut}")]
    PointTooCloseToBoundary { x: f64, cut: f64 },
    #[error("exterior extension has no computable contribution: {0}")]
    ExtensionUnsupported(&'static str),
    #[error("p = {p} < 2 needs a positive smoothing parameter")]
    SmoothingRequired { p: f64 },
    #[error("length mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("u^theta with theta = {theta} needs nonnegative values")]
    NegativeBase { theta: f64 },
    #[error("matrix is singular (det = {0:e})")]
    SingularMatrix(f64),
    #[error("invalid barrier specification: {0}")]
    SpecInvalid(&'static str),
    #[error("delta = {delta} is outside the existence range delta < sp = {sp}")]
    RegimeError { delta: f64, sp: f64 },
    #[error("U_0 is not locally in the energy space for alpha = {alpha} <= s - 1/p = {bound}")]
    MembershipViolation { alpha: f64, bound: f64 },
    #[error("collar width rho = {rho} must exceed lambda^(1/alpha) = {collar}")]
    CollarTooThin { rho: f64, collar: f64 },
    #[error("eta = {eta} exceeds half the domain width {half}")]
    EtaTooLarge { eta: f64, half: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("fit window holds {got} nodes on the {side} side, need at least {min}")]
    WindowTooThin { side: &'static str, got: usize, min: usize },
    #[error("values must be positive on the probe set (found {value} at node {index})")]
    NonPositiveValues { index: usize, value: f64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
}

impl Error {
    /// Short stable name of the variant, used in reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::OutOfRange { .. } => "OutOfRange",
            Error::BadGrading(_) => "BadGrading",
            Error::TooFewNodes { .. } => "TooFewNodes",
            Error::AlphaOutOfRange { .. } => "AlphaOutOfRange",
            Error::QuadratureFail { .. } => "QuadratureFail",
            Error::PointTooCloseToBoundary { .. } => "PointTooCloseToBoundary",
            Error::ExtensionUnsupported(_) => "ExtensionUnsupported",
            Error::SmoothingRequired { .. } => "SmoothingRequired",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::NegativeBase { .. } => "NegativeBase",
            Error::SingularMatrix(_) => "SingularMatrix",
            Error::SpecInvalid(_) => "SpecInvalid",
            Error::RegimeError { .. } => "RegimeError",
            Error::MembershipViolation { .. } => "MembershipViolation",
            Error::CollarTooThin { .. } => "CollarTooThin",
            Error::EtaTooLarge { .. } => "EtaTooLarge",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::WindowTooThin { .. } => "WindowTooThin",
            Error::NonPositiveValues { .. } => "NonPositiveValues",
            Error::Precondition(_) => "Precondition",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
