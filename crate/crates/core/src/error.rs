use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid time scale: {0}")]
    InvalidScale(String),

    #[error("point {t} is not on the time scale")]
    PointNotOnScale { t: f64 },

    #[error("empty interval: {a} > {b}")]
    EmptyInterval { a: f64, b: f64 },

    #[error("quadrature on [{a}, {b}] did not reach tolerance (estimated error {error:e})")]
    QuadratureFailure { a: f64, b: f64, error: f64 },

    #[error("point {t} is a left-scattered maximum; the delta derivative is undefined there")]
    KappaViolation { t: f64 },

    #[error("p is not regressive at t = {t}: 1 + mu(t) p(t) = 0")]
    NotRegressive { t: f64 },

    #[error("shift of size {shift} from t = {t} leaves the time scale{}", iteration.map(|i| format!(" at iteration {i}")).unwrap_or_default())]
    ShiftLeavesScale {
        shift: f64,
        t: f64,
        iteration: Option<usize>,
    },

    #[error("shift delta derivative {value} at t = {t} is not positive")]
    NonPositiveDerivative { t: f64, value: f64 },

    #[error("invalid shift operator: {0}")]
    InvalidShift(String),

    #[error("period {period} is smaller than the scale period {scale_period}")]
    PeriodBelowScalePeriod { period: f64, scale_period: f64 },

    #[error("function vanishes on every sample point; the quasiperiodicity factor is unidentifiable")]
    DegenerateFunction,

    #[error("map is not strictly increasing near t = {t}")]
    NotMonotone { t: f64 },

    #[error("base interval [t0, shift(T, t0)] has zero length")]
    ZeroLengthPeriodInterval,

    #[error("vector field carries no periodicity certificate suitable for this construction")]
    CertificateMissing,

    #[error("parameter `{name}` must be positive, got {value}")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("initial state is not inside the shrunk domain box")]
    InitialOutsideDomain,

    #[error("right-hand side returned a non-finite value at t = {t}")]
    FieldEvaluationFailure { t: f64 },

    #[error("dense-segment integration failed at t = {t}: {reason}")]
    IntegrationFailure { t: f64, reason: String },

    #[error("point {t} is not isolated; the product solution needs a purely isolated run")]
    NotIsolated { t: f64 },

    #[error("trajectories are sampled on different grids (first mismatch at sample {index})")]
    GridMismatch { index: usize },

    #[error("no scale point in the horizon starting at {t0}")]
    EmptyHorizon { t0: f64 },
}
