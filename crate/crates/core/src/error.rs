use thiserror::Error;

#[derive(Debug, Error)]
pub enum CavityError {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("{what} = {value} outside of [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("root finding failed at tau = {tau}: {reason}")]
    Solver { tau: f64, reason: String },

    #[error("phase function not increasing at tau = {tau} (slope {slope})")]
    Monotonicity { tau: f64, slope: f64 },

    #[error("quadrature did not converge: worst segment [{a}, {b}] with error {error:e}")]
    Quadrature { a: f64, b: f64, error: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CavityError>;
