use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad input: malformed config, violated preconditions, inconsistent paths.
    #[error("validation error: {0}")]
    Validation(String),

    /// A negative cycle exists where the computation requires none.
    #[error("negative cycle at k = {k}: mean cost {mean_cost} over time {total_time}")]
    NegativeCycle {
        k: f64,
        mean_cost: f64,
        total_time: f64,
    },

    /// Bisection could not bracket the critical value.
    #[error("could not bracket the critical value: {0}")]
    Bracket(String),

    /// An iterative solver failed to settle.
    #[error("solver did not converge: {0}")]
    Convergence(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// True for failures of the numerical pipeline (as opposed to bad input or IO).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NegativeCycle { .. } | Error::Bracket(_) | Error::Convergence(_)
        )
    }
}
