use thiserror::Error;

use crate::qmf::ActionResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid potential: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("outside analytic domain: |Im z| = {imag} exceeds strip half-width {half_width}")]
    OutsideAnalyticDomain { imag: f64, half_width: f64 },

    #[error("no bound state: level {n} exceeds capacity of {capacity} bound states")]
    NoBoundState { n: usize, capacity: usize },

    #[error("no classical region at E = {energy}")]
    NoClassicalRegion { energy: f64 },

    #[error("multiple classical regions at E = {energy} ({crossings} turning points)")]
    MultipleClassicalRegions { energy: f64, crossings: usize },

    #[error("non-linear turning point at x = {x}")]
    NonLinearTurningPoint { x: f64 },

    #[error("classically forbidden point x = {x}")]
    ClassicallyForbidden { x: f64 },

    #[error("quadrature failure: no convergence after {levels} refinement levels")]
    QuadratureFailure { levels: usize },

    #[error("contour exceeds analytic domain")]
    ContourExceedsDomain,

    #[error("node on contour: |psi| collapsed near z = {re} + {im}i")]
    NodeOnContour { re: f64, im: f64 },

    #[error("stiff transport: step size underflow at parameter {at}")]
    StiffTransport { at: f64 },

    #[error("ambiguous pole count: quantization residual {residual} exceeds 0.4 hbar")]
    AmbiguousPoleCount { residual: f64 },

    #[error("Riccati pole encounter near z = {re} + {im}i")]
    RiccatiPole { re: f64, im: f64 },

    #[error("turning point singularity: |F(z)| < 1e-12")]
    TurningPointSingularity,

    #[error("level {n} beyond well capacity")]
    LevelBeyondCapacity { n: usize },

    #[error("domain too wide: shooting overflowed before the matching point")]
    DomainTooWide,

    #[error("ambiguous count: E = {energy} lies too close to an eigenvalue")]
    AmbiguousCount { energy: f64 },

    #[error("quantization mismatch: expected n = {expected}, got n_est = {}", .action.n_est)]
    QuantizationMismatch {
        expected: usize,
        action: Box<ActionResult>,
    },

    #[error("off-shell loop: coordinate {coordinate} energy is not an eigenvalue")]
    OffShellLoop { coordinate: usize },

    #[error("coordinate {label}: {source}")]
    Coordinate { label: String, source: Box<Error> },

    #[error("oracle not converged: {0}")]
    OracleNotConverged(String),

    #[error("root bracket failure: {0}")]
    BracketFailure(String),
}

impl Error {
    /// Configuration and model validation failures, as opposed to numerical ones.
    pub fn is_config_error(&self) -> bool {
        match self {
            Error::InvalidModel(_) | Error::InvalidConfig(_) => true,
            Error::Coordinate { source, .. } => source.is_config_error(),
            _ => false,
        }
    }
}
