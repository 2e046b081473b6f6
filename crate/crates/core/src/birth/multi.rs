//! Quasi-steady birth rates of the multiple-trait T-system.

use crate::model::{MtParams, MtVectors, ParamError, Validate};
use crate::reduced::{pool_uptake, share_weight};

use super::BirthError;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fast variables of the multi-trait system at rest for a frozen population.
#[derive(Debug, Clone, PartialEq)]
pub struct MtFastState {
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
    pub t: f64,
    pub rho: f64,
    pub p: f64,
}

/// Validated multi-trait parameters together with their coefficient vectors.
#[derive(Debug, Clone)]
pub struct MtQuasiSteady {
    params: MtParams,
    v: MtVectors,
}

impl MtQuasiSteady {
    pub fn new(params: MtParams) -> Result<Self, ParamError> {
        params.validate()?;
        let v = params.vectors();
        Ok(Self { params, v })
    }

    pub fn params(&self) -> &MtParams {
        &self.params
    }

    pub fn vectors(&self) -> &MtVectors {
        &self.v
    }

    pub fn traits(&self) -> usize {
        self.params.traits()
    }

    fn check(&self, n: &[f64]) -> Result<(), BirthError> {
        let m = self.traits();
        if n.len() != m {
            return Err(BirthError::Dimension { expected: m, got: n.len() });
        }
        if let Some(&bad) = n.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(BirthError::BadPopulation { n: bad });
        }
        Ok(())
    }

    fn check_trait(&self, i: usize) -> Result<(), BirthError> {
        let m = self.traits();
        if i >= m {
            return Err(BirthError::TraitIndex { index: i, traits: m });
        }
        Ok(())
    }

    /// `gamma_rho m_c`, the scale of site-to-sugar conversion.
    fn sink(&self) -> f64 {
        self.params.gamma_rho * self.params.m_c
    }

    /// `tau(n) = <A,n><Q,n>/(gamma_rho m_c) + <A,n> + <B,n> + gamma_r_hat`.
    pub fn tau(&self, n: &[f64]) -> Result<f64, BirthError> {
        self.check(n)?;
        Ok(self.tau_unchecked(n))
    }

    fn tau_unchecked(&self, n: &[f64]) -> f64 {
        let an = dot(&self.v.a, n);
        an * dot(&self.v.q, n) / self.sink() + an + dot(&self.v.b, n) + self.params.gamma_r_hat()
    }

    /// Site density `T(n) = r <A,n> / (gamma_rho m_c tau(n))`.
    fn sites(&self, n: &[f64]) -> f64 {
        self.params.r / self.sink() * dot(&self.v.a, n) / self.tau_unchecked(n)
    }

    pub fn fast_state(&self, n: &[f64]) -> Result<MtFastState, BirthError> {
        self.check(n)?;
        let p = &self.params;
        let m = self.traits();
        let t = self.sites(n);
        Ok(MtFastState {
            e1: (0..m).map(|j| p.k1(j) * n[j]).collect(),
            e2: (0..m).map(|j| p.k2(j) * n[j]).collect(),
            t,
            rho: (p.r - dot(&self.v.q, n) * t) / p.gamma_rho,
            p: dot(&self.v.theta, n) * t / (dot(&self.v.gamma, n) + p.gamma_p),
        })
    }

    /// The bracket multiplying `mu_i r <A,n> / (gamma_rho m_c tau)`: pool
    /// uptake plus shared on-site cellobiose.
    fn uptake_factor(&self, i: usize, n: &[f64]) -> f64 {
        let p = &self.params;
        let gn = dot(&self.v.gamma, n);
        let pool = dot(&self.v.theta, n) / (gn + p.gamma_p);
        let mut f = pool_uptake(p.gamma[i], p.n_bar[i], gn, pool);
        for j in 0..self.traits() {
            let w = share_weight(p.nu[i][j], p.n_bar[i], p.nu_column_dot(j, n));
            f += (self.v.q[j] - self.v.theta[j]) * w * n[j];
        }
        f
    }

    /// Birth rate `B^i(n)` of trait `i` (0-based).
    pub fn birth_rate(&self, i: usize, n: &[f64]) -> Result<f64, BirthError> {
        self.check_trait(i)?;
        self.check(n)?;
        Ok(self.params.mu[i] * self.sites(n) * self.uptake_factor(i, n))
    }

    /// `B^i` without the sign check on `n`: the rational expression extends
    /// to small negative populations, which central differences about the
    /// empty population need.
    pub fn birth_rate_signed(&self, i: usize, n: &[f64]) -> Result<f64, BirthError> {
        self.check_trait(i)?;
        let m = self.traits();
        if n.len() != m {
            return Err(BirthError::Dimension { expected: m, got: n.len() });
        }
        Ok(self.params.mu[i] * self.sites(n) * self.uptake_factor(i, n))
    }

    /// All birth rates at `n`.
    pub fn birth_rates(&self, n: &[f64]) -> Result<Vec<f64>, BirthError> {
        (0..self.traits()).map(|i| self.birth_rate(i, n)).collect()
    }

    /// Hessian of `B^i` at the empty population. Streams `j` with
    /// `nu_ij = 0` are dropped from the on-site term.
    pub fn hessian_at_zero(&self, i: usize) -> Result<Vec<Vec<f64>>, BirthError> {
        self.check_trait(i)?;
        let p = &self.params;
        let m = self.traits();
        let c = p.mu[i] * p.r / (self.sink() * p.gamma_r_hat() * p.n_bar[i]);
        let g = p.gamma[i] / p.gamma_p;
        let a = &self.v.a;
        let th = &self.v.theta;
        let qt: Vec<f64> = (0..m)
            .map(|j| if p.nu[i][j] == 0.0 { 0.0 } else { self.v.q[j] - th[j] })
            .collect();
        let mut h = vec![vec![0.0; m]; m];
        for j in 0..m {
            for k in j..m {
                let v = c * (g * (a[j] * th[k] + th[j] * a[k]) + a[j] * qt[k] + qt[j] * a[k]);
                h[j][k] = v;
                h[k][j] = v;
            }
        }
        Ok(h)
    }

    fn require_diagonal(&self) -> Result<(), BirthError> {
        for (i, row) in self.params.nu.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                if i != j && v != 0.0 {
                    return Err(BirthError::OffDiagonalSharing { i, j, value: v });
                }
            }
        }
        Ok(())
    }

    /// Closed-form `d B^i_2 / d n^i` at a population without trait `i`,
    /// where `B^i_2` is the on-site part of `B^i`; requires diagonal sharing.
    pub fn invader_onsite_derivative(&self, i: usize, n0: &[f64]) -> Result<f64, BirthError> {
        self.check_trait(i)?;
        self.check(n0)?;
        self.require_diagonal()?;
        if n0[i] != 0.0 {
            return Err(BirthError::TraitPresent { index: i, value: n0[i] });
        }
        let p = &self.params;
        Ok(p.mu[i] * self.sites(n0) * (self.v.q[i] - self.v.theta[i]) / p.n_bar[i])
    }

    /// Exact `d B^i / d n^i` for diagonal sharing, at any population.
    pub fn self_derivative(&self, i: usize, n: &[f64]) -> Result<f64, BirthError> {
        self.check_trait(i)?;
        self.check(n)?;
        self.require_diagonal()?;
        let p = &self.params;
        let v = &self.v;
        let s = self.sink();
        let an = dot(&v.a, n);
        let qn = dot(&v.q, n);
        let tau = self.tau_unchecked(n);
        let d_tau = (v.a[i] * qn + an * v.q[i]) / s + v.a[i] + v.b[i];
        let f = an / tau;
        let df = (v.a[i] * tau - an * d_tau) / (tau * tau);

        let gi = p.gamma[i];
        let gn = dot(&v.gamma, n);
        let thn = dot(&v.theta, n);
        let (g1, dg1) = if gi == 0.0 {
            (0.0, 0.0)
        } else {
            let d1 = gi * p.n_bar[i] + gn;
            let d2 = gn + p.gamma_p;
            let g1 = gi * gi * thn / (d1 * d2);
            let dg1 = gi * gi * (v.theta[i] * d1 * d2 - thn * gi * (d1 + d2)) / (d1 * d2).powi(2);
            (g1, dg1)
        };
        let onsite = v.q[i] - v.theta[i];
        let nb = p.n_bar[i];
        let g2 = onsite * n[i] / (nb + n[i]);
        let dg2 = onsite * nb / (nb + n[i]).powi(2);
        Ok(p.mu[i] * p.r / s * (df * (g1 + g2) + f * (dg1 + dg2)))
    }
}
