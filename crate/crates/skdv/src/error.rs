use thiserror::Error;

#[derive(Error, Debug)]
pub enum SkdvError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite input in {context}")]
    NonFinite { context: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("trace obstruction: |h(0)| = {value:.3e} exceeds grid tolerance {tol:.3e} for s = {s}")]
    TraceObstruction { value: f64, tol: f64, s: f64 },

    #[error("quadrature failure: residual estimate {residual:.3e} above tolerance {tol:.3e}")]
    QuadratureFailure { residual: f64, tol: f64 },

    #[error("singular calibration system (det = {det:.3e}); re-seed bump shapes")]
    SingularCalibration { det: f64 },

    #[error("no contraction at T = {t_horizon}: first ratio {ratio:.3} after {halvings} halvings; try smaller T")]
    NoContraction {
        t_horizon: f64,
        ratio: f64,
        halvings: u32,
    },

    #[error("inadmissible (s,k) = ({s}, {k}): {violations:?}")]
    Inadmissible {
        s: f64,
        k: f64,
        violations: Vec<String>,
    },

    #[error("inconclusive: {0}")]
    Inconclusive(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SkdvError>;
