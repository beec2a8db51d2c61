//! Mean first-exit times of the d-dimensional Ornstein–Uhlenbeck process from
//! a ball: exact values by quadrature, closed-form bounds, and Monte-Carlo
//! estimates.

pub mod error;
pub mod mfet;
pub mod quadrature;
pub mod simulate;
pub mod special;

#[cfg(test)]
mod oracle;

pub use error::{Error, Result};
pub use mfet::{
    asymptotic_ratio, avp_residual, default_fd_step, drift_ratio, ln_mfet_exact, mfet_bm,
    mfet_bounds, mfet_exact, ExitProblem, MfetBounds, OupParams, Regime,
};
pub use quadrature::{LogQuadResult, QuadConfig, QuadResult};
pub use simulate::{estimate_mfet, record_path, sample_exit_time, McConfig, McEstimate, PathRecord, Scheme};
pub use special::GammaArgs;
