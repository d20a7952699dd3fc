use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the solver can report.
///
/// The variants are kept distinct because callers react differently:
/// an unstable queue or a delay-infeasible user means "raise the rate or
/// the constellation", while a system-infeasible profile means no power
/// vector exists at all.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("no sign change on [{lo}, {hi}]")]
    Bracketing { lo: f64, hi: f64 },

    #[error("no convergence after {max_iter} iterations")]
    Convergence { max_iter: usize },

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("target efficiency {eta} is not below the supremum {supremum}")]
    InfeasibleTarget { eta: f64, supremum: f64 },

    #[error("queue unstable: efficiency {efficiency} does not exceed offered load {load}")]
    Unstable { efficiency: f64, load: f64 },

    #[error("{}", delay_infeasible_message(*user, *bits_per_symbol, *required_efficiency))]
    DelayInfeasible {
        user: Option<usize>,
        bits_per_symbol: u32,
        required_efficiency: f64,
    },

    #[error("system infeasible: sum of user sizes {sum_size} is not below 1")]
    SystemInfeasible { sum_size: f64 },

    #[error("numeric failure: {0}")]
    Numeric(String),
}

fn delay_infeasible_message(user: Option<usize>, b: u32, eta: f64) -> String {
    match user {
        Some(k) => format!("user {k}: delay bound infeasible (required efficiency eta_{b} = {eta} at full bandwidth)"),
        None => format!("delay bound infeasible (required efficiency eta_{b} = {eta})"),
    }
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Attaches a user index to a delay-infeasibility error.
    pub(crate) fn for_user(self, k: usize) -> Self {
        match self {
            Error::DelayInfeasible {
                bits_per_symbol,
                required_efficiency,
                ..
            } => Error::DelayInfeasible {
                user: Some(k),
                bits_per_symbol,
                required_efficiency,
            },
            other => other,
        }
    }
}
