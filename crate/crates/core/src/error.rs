use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape error: {0}")]
    Shape(String),

    #[error("matrix is singular (pivot magnitude {pivot:.3e})")]
    Singular { pivot: f64 },

    #[error("degenerate kernel: {0}")]
    Degenerate(String),

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("matrix is not diagonalizable (reconstruction error {residual:.3e})")]
    NotDiagonalizable { residual: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("parameter outside domain: {0}")]
    Domain(String),

    #[error("steady state is not unique: {0}")]
    NonUniqueSteadyState(String),

    #[error("consistency check failed: {0}")]
    Consistency(String),

    #[error(
        "response routes disagree: analytic {analytic:.12e} vs finite-difference {finite_difference:.12e}"
    )]
    DerivativeInconsistency { analytic: f64, finite_difference: f64 },

    #[error("perturbation is ill-posed in channel `{channel}` (zero rate, nonzero derivative)")]
    IllPosedPerturbation { channel: String },

    #[error("variance rate {variance:.3e} is below the exclusion threshold")]
    DegenerateVariance { variance: f64 },

    #[error("time step {dt:.3e} too large for total jump rate {rate:.3e}")]
    StepSize { dt: f64, rate: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("invalid input: {0}")]
    Input(String),
}

impl Error {
    /// Short machine-readable tag, used for exclusion reasons in tabular output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Shape(_) => "shape",
            Error::Singular { .. } => "singular",
            Error::Degenerate(_) => "degenerate",
            Error::NoConvergence { .. } => "no-convergence",
            Error::NotDiagonalizable { .. } => "not-diagonalizable",
            Error::Precondition(_) => "precondition",
            Error::InvalidModel(_) => "invalid-model",
            Error::Domain(_) => "domain",
            Error::NonUniqueSteadyState(_) => "non-unique-steady-state",
            Error::Consistency(_) => "consistency",
            Error::DerivativeInconsistency { .. } => "derivative-inconsistency",
            Error::IllPosedPerturbation { .. } => "ill-posed-perturbation",
            Error::DegenerateVariance { .. } => "degenerate-variance",
            Error::StepSize { .. } => "step-size",
            Error::Numerical(_) => "numerical",
            Error::Input(_) => "input",
        }
    }
}
