use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { residual: f64, iterations: usize },

    #[error("crystal instability: {0}")]
    Instability(String),

    #[error("singular geometry: {0}")]
    SingularGeometry(String),

    #[error("all ions pinned; spectrum is empty")]
    EmptySpectrum,

    #[error("mode {mode} has frequency {frequency:.3e}; thermal variance diverges")]
    DivergentVariance { mode: usize, frequency: f64 },

    #[error("no steady state: {0}")]
    NoSteadyState(String),

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("gate is infeasible: {0}")]
    InfeasibleGate(String),

    #[error("degenerate fit: {0}")]
    FitDegenerate(String),

    #[error("non-positive data: {0}")]
    NonPositiveData(String),

    #[error("search bracket exhausted: {0}")]
    BracketExhausted(String),

    #[error("too few ions: {0}")]
    TooFewIons(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    /// Whether the error stems from bad input rather than a numeric failure.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidConfig(_) | Error::NonPositiveData(_) | Error::TooFewIons(_)
        )
    }
}
