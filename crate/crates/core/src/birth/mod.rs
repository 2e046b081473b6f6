//! Birth rates of the population once the fast variables have settled.

pub mod multi;
pub mod ns_fast;
pub mod single;

pub use multi::MtQuasiSteady;
pub use ns_fast::{ns_birth_rate, ns_fast_equilibrium, ns_series, ns_sharing_sensitivity, NsEquilibrium, NsSeries};
pub use single::{
    cooperation_indicator, cooperation_threshold, k_constant, k_phi_zero, phi, sharing_sensitivity_t,
    t_birth_rate, t_birth_rate_direct, t_quasi_equilibrium, P2Coeffs, TQuasiEquilibrium,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BirthError {
    #[error("B(n)/n not increasing near zero (checked at n = {n:e})")]
    NoCooperation { n: f64 },
    #[error("B(n)/n increasing on tested range (up to n = {n_hi:e})")]
    ThresholdNotFound { n_hi: f64 },
    #[error("trait {} out of range for {traits} traits", .index + 1)]
    TraitIndex { index: usize, traits: usize },
    #[error("population vector has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("trait {} must be absent (n = {value:e})", .index + 1)]
    TraitPresent { index: usize, value: f64 },
    #[error("sharing matrix must be diagonal: nu({}, {}) = {value:e}", .i + 1, .j + 1)]
    OffDiagonalSharing { i: usize, j: usize, value: f64 },
    #[error("population must be non-negative and finite (got {n:e})")]
    BadPopulation { n: f64 },
    #[error("fast equilibrium did not converge at n = {n:e} (residual {residual:e})")]
    NoConvergence { n: f64, residual: f64 },
    #[error("fast equilibrium at n = {n:e} has negative component {component} = {value:e}")]
    Negative { n: f64, component: String, value: f64 },
}
