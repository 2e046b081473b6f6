//! Quasi-steady reduction of the single-trait T-system: fast variables as
//! closed-form functions of the population mass, the birth rate `B(n)`, and
//! the cooperation diagnostics built on it.

use serde::Serialize;

use crate::model::TParams;

use super::BirthError;

/// Coefficients of `P2(n) = c2 n^2 + c1 n + c0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct P2Coeffs {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl P2Coeffs {
    pub fn new(p: &TParams) -> Self {
        let (k1, k2) = (p.k1(), p.k2());
        Self {
            c0: p.gamma_r + p.gamma_rho,
            c1: p.alpha * k1 / p.m1 + p.theta_r * p.beta * k2 / p.m2,
            c2: p.alpha * p.q_hat() * k2 * k1 / (p.m_c * p.gamma_rho * p.m1),
        }
    }

    pub fn eval(&self, n: f64) -> f64 {
        (self.c2 * n + self.c1) * n + self.c0
    }

    pub fn derivative(&self, n: f64) -> f64 {
        2.0 * self.c2 * n + self.c1
    }
}

/// Fast variables at rest for a frozen population mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TQuasiEquilibrium {
    pub e1: f64,
    pub e2: f64,
    pub t: f64,
    pub rho: f64,
    pub p: f64,
}

/// `alpha r k1 / (m_c gamma_rho m1)`, the numerator constant of `T(n)`.
fn site_gain(p: &TParams) -> f64 {
    p.alpha * p.r * p.k1() / (p.m_c * p.gamma_rho * p.m1)
}

pub fn t_quasi_equilibrium(n: f64, p: &TParams) -> TQuasiEquilibrium {
    let (k1, k2) = (p.k1(), p.k2());
    let p2 = P2Coeffs::new(p);
    let t = site_gain(p) * n / p2.eval(n);
    let cleave = p.q_hat() * k2 * t * n;
    TQuasiEquilibrium {
        e1: k1 * n,
        e2: k2 * n,
        t,
        rho: p.r / p.gamma_rho - cleave / p.gamma_rho,
        p: p.theta_p * cleave / (p.gamma * n + p.gamma_p),
    }
}

/// Rows 1-5 of the T-system with the population frozen at `n`; the packed
/// fast state is `[e1, e2, T, rho, p]`.
pub fn t_fast_rhs_into(n: f64, y: &[f64], dy: &mut [f64], p: &TParams) {
    let mut full = [0.0; 6];
    let mut d = [0.0; 6];
    full[..5].copy_from_slice(&y[..5]);
    full[5] = n;
    crate::reduced::t_rhs_into(&full, &mut d, p);
    dy[..5].copy_from_slice(&d[..5]);
}

/// `K = mu q_hat k2 alpha r k1 / (m_c gamma_rho m1)`.
pub fn k_constant(p: &TParams) -> f64 {
    p.mu * p.q_hat() * p.k2() * site_gain(p)
}

/// `Phi(n) = (theta_p / (n + gamma_p / gamma) + 1 - theta_p) / ((n + n_bar) P2(n))`,
/// with the first fraction written as `theta_p gamma / (gamma n + gamma_p)`
/// so a non-consuming population (`gamma = 0`) is covered.
pub fn phi(n: f64, p: &TParams) -> f64 {
    let share = p.theta_p * p.gamma / (p.gamma * n + p.gamma_p) + 1.0 - p.theta_p;
    share / ((n + p.n_bar) * P2Coeffs::new(p).eval(n))
}

/// `K Phi(0) = K / (n_bar (gamma_rho + gamma_r)) (theta_p gamma / gamma_p + 1 - theta_p)`,
/// the limit of `B(n) / n^2` at zero.
pub fn k_phi_zero(p: &TParams) -> f64 {
    k_constant(p) / (p.n_bar * (p.gamma_rho + p.gamma_r))
        * (p.theta_p * p.gamma / p.gamma_p + 1.0 - p.theta_p)
}

/// `B(n) = K n^2 Phi(n)`.
pub fn t_birth_rate(n: f64, p: &TParams) -> f64 {
    k_constant(p) * n * n * phi(n, p)
}

/// `B(n)` assembled from the quasi-steady fast variables rather than the
/// factored form.
pub fn t_birth_rate_direct(n: f64, p: &TParams) -> f64 {
    let eq = t_quasi_equilibrium(n, p);
    p.mu / (p.n_bar + n) * (p.gamma * eq.p + (1.0 - p.theta_p) * p.q_hat() * p.k2() * eq.t * n)
}

/// `d/dn log(n Phi(n))`; `B(n)/n` increases exactly where this is positive.
pub fn cooperation_indicator(n: f64, p: &TParams) -> f64 {
    let p2 = P2Coeffs::new(p);
    let g = p.gamma / (p.gamma * n + p.gamma_p);
    let share = if p.theta_p == 0.0 {
        0.0
    } else {
        p.theta_p * g * g / (p.theta_p * g + 1.0 - p.theta_p)
    };
    1.0 / n - share - 1.0 / (n + p.n_bar) - p2.derivative(n) / p2.eval(n)
}

const BRACKET_START: f64 = 1e-6;
const BRACKET_LIMIT: f64 = 1e12;

/// Smallest positive root `n_*` of [`cooperation_indicator`], found by
/// doubling from `1e-6 n_bar` until a sign change and bisecting to machine
/// resolution.
pub fn cooperation_threshold(p: &TParams) -> Result<f64, BirthError> {
    let g = |n: f64| cooperation_indicator(n, p);
    let mut lo = BRACKET_START * p.n_bar;
    if g(lo) <= 0.0 {
        return Err(BirthError::NoCooperation { n: lo });
    }
    let mut hi = 2.0 * lo;
    while g(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > BRACKET_LIMIT * p.n_bar {
            return Err(BirthError::ThresholdNotFound { n_hi: hi / 2.0 });
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(if g(lo).abs() <= g(hi).abs() { lo } else { hi })
}

/// `d/d theta_p [K Phi(0)] = K / (n_bar (gamma_rho + gamma_r)) (gamma / gamma_p - 1)`.
pub fn sharing_sensitivity_t(p: &TParams) -> f64 {
    k_constant(p) / (p.n_bar * (p.gamma_rho + p.gamma_r)) * (p.gamma / p.gamma_p - 1.0)
}
