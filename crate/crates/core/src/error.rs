use crate::quadrature::QuadResult;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} did not converge after {iterations} iterations")]
    Convergence { what: &'static str, iterations: usize },

    #[error("integrand is not finite at z = {abscissa} (value {value})")]
    Evaluation { abscissa: f64, value: f64 },

    #[error("quadrature did not reach tolerance: {partial:?}")]
    Quadrature { partial: QuadResult },

    #[error("horizon too short: all {n_censored} paths were censored")]
    HorizonTooShort { n_censored: usize },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
