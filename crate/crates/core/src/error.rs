use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coefficient {name} is not positive at x = {x}")]
    NonPositiveCoefficient { name: &'static str, x: f64 },
    #[error("coefficient {name} is not integrable on [{lo}, {hi}]")]
    NonIntegrable { name: &'static str, lo: f64, hi: f64 },
    #[error("coupling matrix is not unimodular (det = {det})")]
    NotUnimodular { det: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("step size underflow at x = {x}")]
    StepUnderflow { x: f64 },
    #[error("step limit ({steps}) reached at x = {x}")]
    StepLimit { x: f64, steps: usize },
    #[error("non-finite value at x = {x}")]
    NonFiniteValue { x: f64 },
    #[error("point {x} is outside the span [{lo}, {hi}]")]
    OutOfRange { x: f64, lo: f64, hi: f64 },
    #[error("green inner product needs distinct spectral parameters")]
    EqualSpectralParams,
    #[error("quadrature did not converge on [{lo}, {hi}]")]
    NoConvergence { lo: f64, hi: f64 },
    #[error("endpoint classification inconclusive")]
    Inconclusive,
    #[error("trial solution vanishes near x = {x}; lower lambda0")]
    ZeroEncountered { x: f64 },
    #[error("boundary-value limit did not settle (spread {spread:e})")]
    NonConvergentLimit { spread: f64 },
    #[error("dominant and recessive solutions cannot be separated at z = {re}{im:+}i")]
    NoDecaySeparation { re: f64, im: f64 },
    #[error("Weyl m-function drifts between anchors (change {drift:e})")]
    AnchorNotConverged { drift: f64 },
    #[error("boundary map of the fundamental system is singular")]
    SingularBoundaryMap,
    #[error("norm expression is not positive ({value})")]
    NonPositiveNorm { value: f64 },
    #[error("Separated(0, 0) is the reference extension itself")]
    FriedrichsReference,
    #[error("denominator cot(alpha) + m0(z) vanishes")]
    DegenerateDenominator,
    #[error("coupling matrix K is singular or ill conditioned")]
    SingularK,
    #[error("Bessel argument |w| = {abs} exceeds the series domain")]
    DomainTooLarge { abs: f64 },
    #[error("order {order} is too close to an integer for the connection formula")]
    PoleOrder { order: f64 },
    #[error("z lies on the cut [0, inf)")]
    OnCutZ,
    #[error("z is too close to the real axis (|Im z| = {im:e})")]
    NearRealAxis { im: f64 },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
