//! Rate-constant bundles for each model tier and their validation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::index::ChainTable;

/// First violated parameter invariant.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("{field} must be finite")]
    NonFinite { field: String },
    #[error("{field} must be non-negative (got {value})")]
    Negative { field: String, value: f64 },
    #[error("{field} must be positive (got {value})")]
    NonPositive { field: String, value: f64 },
    #[error("{field} must lie in [0, 1] (got {value})")]
    NotAFraction { field: String, value: f64 },
    #[error("{what} undefined: {field} must be positive")]
    Undefined { what: &'static str, field: String },
    #[error("sharing matrix column {column} not stochastic (sum = {sum})")]
    NotStochastic { column: usize, sum: f64 },
    #[error("{field} has length {got}, expected {expected}")]
    Dimension {
        field: String,
        expected: usize,
        got: usize,
    },
    #[error("{field} is not uniform over the chain index set")]
    NonUniform { field: &'static str },
    #[error("chain length cap L must be at least 1")]
    EmptyIndexSet,
}

/// Column sums of the sharing matrix may deviate from 1 by at most this much.
pub const STOCHASTIC_TOL: f64 = 1e-12;

pub trait Validate {
    fn validate(&self) -> Result<(), ParamError>;
}

fn finite(field: &str, v: f64) -> Result<f64, ParamError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ParamError::NonFinite {
            field: field.to_string(),
        })
    }
}

pub(crate) fn nonneg(field: &str, v: f64) -> Result<(), ParamError> {
    if finite(field, v)? < 0.0 {
        return Err(ParamError::Negative {
            field: field.to_string(),
            value: v,
        });
    }
    Ok(())
}

pub(crate) fn positive(field: &str, v: f64) -> Result<(), ParamError> {
    if finite(field, v)? <= 0.0 {
        return Err(ParamError::NonPositive {
            field: field.to_string(),
            value: v,
        });
    }
    Ok(())
}

pub(crate) fn fraction(field: &str, v: f64) -> Result<(), ParamError> {
    if !(0.0..=1.0).contains(&finite(field, v)?) {
        return Err(ParamError::NotAFraction {
            field: field.to_string(),
            value: v,
        });
    }
    Ok(())
}

fn rate_constant(what: &'static str, field: &str, v: f64) -> Result<(), ParamError> {
    if finite(field, v)? <= 0.0 {
        return Err(ParamError::Undefined {
            what,
            field: field.to_string(),
        });
    }
    Ok(())
}

fn table_nonneg(field: &str, t: &ChainTable) -> Result<(), ParamError> {
    for ((l, i), v) in t.iter() {
        nonneg(&format!("{field}[{l},{i}]"), v)?;
    }
    Ok(())
}

/// Rates of the chain-structured model. Per-`(l, i)` quantities are dense
/// tables over `I_L`; only the site-free influx `r_{l,0}` is stored, so
/// `r_{l,i} = 0` for `i >= 1` holds by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NsParams {
    pub max_len: usize,
    pub b1: f64,
    pub d1: f64,
    pub b2: f64,
    pub d21: f64,
    /// Attack rate per unoccupied site per enzyme mass.
    pub beta: ChainTable,
    /// Detach rate of attached enzyme.
    pub sigma: ChainTable,
    /// Decay rate of a single landing site.
    pub gamma_r: ChainTable,
    /// Decay rate of attached enzyme.
    pub d22: ChainTable,
    /// Cut (site creation) rate.
    pub alpha: ChainTable,
    /// Cellobiose production rate per attached enzyme.
    pub q: ChainTable,
    /// Whole-chain decay rate.
    pub gamma_rho: ChainTable,
    /// `r_{l,0}` for `l = 1..=L`, stored at `l - 1`.
    pub influx: Vec<f64>,
    pub m1: f64,
    pub m2: f64,
    pub m_c: f64,
    pub theta_r: f64,
    pub theta_p: f64,
    pub gamma: f64,
    pub gamma_p: f64,
    pub gamma_n: f64,
    pub mu: f64,
    pub n_bar: f64,
}

impl NsParams {
    /// Uniform tables built from the scalar rates of an S-system record.
    /// The S-record's aggregate influx `r` is ignored; `influx` gives `r_{l,0}`.
    pub fn uniform(max_len: usize, s: &SParams, influx: Vec<f64>) -> Self {
        let t = |v| ChainTable::uniform(max_len, v);
        Self {
            max_len,
            b1: s.b1,
            d1: s.d1,
            b2: s.b2,
            d21: s.d21,
            beta: t(s.beta),
            sigma: t(s.sigma),
            gamma_r: t(s.gamma_r),
            d22: t(s.d22),
            alpha: t(s.alpha),
            q: t(s.q),
            gamma_rho: t(s.gamma_rho),
            influx,
            m1: s.m1,
            m2: s.m2,
            m_c: s.m_c,
            theta_r: s.theta_r,
            theta_p: s.theta_p,
            gamma: s.gamma,
            gamma_p: s.gamma_p,
            gamma_n: s.gamma_n,
            mu: s.mu,
            n_bar: s.n_bar,
        }
    }

    pub fn influx_at(&self, l: usize) -> f64 {
        if l >= 1 && l <= self.influx.len() {
            self.influx[l - 1]
        } else {
            0.0
        }
    }

    /// Total cellulose mass influx `r = m_c sum_l l r_{l,0}`.
    pub fn aggregate_influx(&self) -> f64 {
        self.m_c
            * self
                .influx
                .iter()
                .enumerate()
                .map(|(k, r)| (k + 1) as f64 * r)
                .sum::<f64>()
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform_field().is_none()
    }

    fn uniform_field(&self) -> Option<&'static str> {
        [
            ("beta", &self.beta),
            ("sigma", &self.sigma),
            ("gamma_r", &self.gamma_r),
            ("d22", &self.d22),
            ("alpha", &self.alpha),
            ("q", &self.q),
            ("gamma_rho", &self.gamma_rho),
        ]
        .into_iter()
        .find(|(_, t)| !t.is_uniform())
        .map(|(name, _)| name)
    }

    /// The S-system parameters this model reduces to. Requires every
    /// per-chain table to be uniform.
    pub fn to_s_params(&self) -> Result<SParams, ParamError> {
        if let Some(field) = self.uniform_field() {
            return Err(ParamError::NonUniform { field });
        }
        let u = |t: &ChainTable| t.uniform_value().unwrap_or(0.0);
        Ok(SParams {
            b1: self.b1,
            d1: self.d1,
            b2: self.b2,
            d21: self.d21,
            d22: u(&self.d22),
            sigma: u(&self.sigma),
            alpha: u(&self.alpha),
            beta: u(&self.beta),
            q: u(&self.q),
            theta_r: self.theta_r,
            theta_p: self.theta_p,
            gamma_r: u(&self.gamma_r),
            gamma_rho: u(&self.gamma_rho),
            gamma: self.gamma,
            gamma_p: self.gamma_p,
            gamma_n: self.gamma_n,
            mu: self.mu,
            m1: self.m1,
            m2: self.m2,
            m_c: self.m_c,
            r: self.aggregate_influx(),
            n_bar: self.n_bar,
        })
    }
}

impl Validate for NsParams {
    fn validate(&self) -> Result<(), ParamError> {
        if self.max_len == 0 {
            return Err(ParamError::EmptyIndexSet);
        }
        rate_constant("k1", "d1", self.d1)?;
        rate_constant("k21", "d21", self.d21)?;
        nonneg("b1", self.b1)?;
        nonneg("b2", self.b2)?;
        for (name, t) in [
            ("beta", &self.beta),
            ("sigma", &self.sigma),
            ("gamma_r", &self.gamma_r),
            ("d22", &self.d22),
            ("alpha", &self.alpha),
            ("q", &self.q),
            ("gamma_rho", &self.gamma_rho),
        ] {
            if t.max_len() != self.max_len {
                return Err(ParamError::Dimension {
                    field: name.to_string(),
                    expected: self.max_len,
                    got: t.max_len(),
                });
            }
            table_nonneg(name, t)?;
        }
        for ((l, i), v) in self.gamma_rho.iter() {
            positive(&format!("gamma_rho[{l},{i}]"), v)?;
        }
        if self.influx.len() != self.max_len {
            return Err(ParamError::Dimension {
                field: "influx".into(),
                expected: self.max_len,
                got: self.influx.len(),
            });
        }
        for (k, r) in self.influx.iter().enumerate() {
            nonneg(&format!("influx[{}]", k + 1), *r)?;
        }
        positive("m1", self.m1)?;
        positive("m2", self.m2)?;
        positive("m_c", self.m_c)?;
        fraction("theta_r", self.theta_r)?;
        fraction("theta_p", self.theta_p)?;
        nonneg("gamma", self.gamma)?;
        positive("gamma_p", self.gamma_p)?;
        nonneg("gamma_n", self.gamma_n)?;
        nonneg("mu", self.mu)?;
        positive("n_bar", self.n_bar)
    }
}

/// Parameters of the S-system (cleaving mechanism 1, aggregated). Kept apart
/// from [`TParams`] because it carries the attach/detach constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SParams {
    pub b1: f64,
    pub d1: f64,
    pub b2: f64,
    pub d21: f64,
    pub d22: f64,
    pub sigma: f64,
    pub alpha: f64,
    pub beta: f64,
    pub q: f64,
    pub theta_r: f64,
    pub theta_p: f64,
    pub gamma_r: f64,
    pub gamma_rho: f64,
    pub gamma: f64,
    pub gamma_p: f64,
    pub gamma_n: f64,
    pub mu: f64,
    pub m1: f64,
    pub m2: f64,
    pub m_c: f64,
    pub r: f64,
    pub n_bar: f64,
}

impl Default for SParams {
    fn default() -> Self {
        Self {
            b1: 1.0,
            d1: 1.0,
            b2: 1.0,
            d21: 1.0,
            d22: 1.0,
            sigma: 1.0,
            alpha: 1.0,
            beta: 1.0,
            q: 1.0,
            theta_r: 0.5,
            theta_p: 0.5,
            gamma_r: 1.0,
            gamma_rho: 1.0,
            gamma: 1.0,
            gamma_p: 1.0,
            gamma_n: 1.0,
            mu: 1.0,
            m1: 1.0,
            m2: 1.0,
            m_c: 1.0,
            r: 1.0,
            n_bar: 1.0,
        }
    }
}

impl Validate for SParams {
    fn validate(&self) -> Result<(), ParamError> {
        rate_constant("k1", "d1", self.d1)?;
        rate_constant("k21", "d21", self.d21)?;
        for (name, v) in [
            ("b1", self.b1),
            ("b2", self.b2),
            ("d22", self.d22),
            ("sigma", self.sigma),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("q", self.q),
            ("gamma_r", self.gamma_r),
            ("gamma", self.gamma),
            ("gamma_n", self.gamma_n),
            ("mu", self.mu),
            ("r", self.r),
        ] {
            nonneg(name, v)?;
        }
        positive("gamma_rho", self.gamma_rho)?;
        positive("gamma_p", self.gamma_p)?;
        positive("m1", self.m1)?;
        positive("m2", self.m2)?;
        positive("m_c", self.m_c)?;
        fraction("theta_r", self.theta_r)?;
        fraction("theta_p", self.theta_p)?;
        positive("n_bar", self.n_bar)
    }
}

/// Parameters of the single-trait T-system (cleaving mechanism 2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TParams {
    pub b1: f64,
    pub d1: f64,
    pub b2: f64,
    pub d2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub q: f64,
    pub theta_r: f64,
    pub theta_p: f64,
    pub gamma_r: f64,
    pub gamma_rho: f64,
    pub gamma: f64,
    pub gamma_p: f64,
    pub gamma_n: f64,
    pub mu: f64,
    pub m1: f64,
    pub m2: f64,
    pub m_c: f64,
    pub r: f64,
    pub n_bar: f64,
}

impl Default for TParams {
    /// Every rate 1, masses 1, both fractions 1/2, threshold 1.
    fn default() -> Self {
        Self {
            b1: 1.0,
            d1: 1.0,
            b2: 1.0,
            d2: 1.0,
            alpha: 1.0,
            beta: 1.0,
            q: 1.0,
            theta_r: 0.5,
            theta_p: 0.5,
            gamma_r: 1.0,
            gamma_rho: 1.0,
            gamma: 1.0,
            gamma_p: 1.0,
            gamma_n: 1.0,
            mu: 1.0,
            m1: 1.0,
            m2: 1.0,
            m_c: 1.0,
            r: 1.0,
            n_bar: 1.0,
        }
    }
}

impl TParams {
    /// `k1 = b1 / d1`.
    pub fn k1(&self) -> f64 {
        self.b1 / self.d1
    }

    /// `k2 = b2 / d2`.
    pub fn k2(&self) -> f64 {
        self.b2 / self.d2
    }

    /// Cleaving coefficient `q_hat = m_c q beta / m2`.
    pub fn q_hat(&self) -> f64 {
        self.m_c * self.q * self.beta / self.m2
    }

    /// `gamma_r + gamma_rho`.
    pub fn gamma_r_hat(&self) -> f64 {
        self.gamma_r + self.gamma_rho
    }
}

impl Validate for TParams {
    fn validate(&self) -> Result<(), ParamError> {
        rate_constant("k1", "d1", self.d1)?;
        rate_constant("k2", "d2", self.d2)?;
        for (name, v) in [
            ("b1", self.b1),
            ("b2", self.b2),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("q", self.q),
            ("gamma_r", self.gamma_r),
            ("gamma", self.gamma),
            ("gamma_n", self.gamma_n),
            ("mu", self.mu),
            ("r", self.r),
        ] {
            nonneg(name, v)?;
        }
        positive("gamma_rho", self.gamma_rho)?;
        positive("gamma_p", self.gamma_p)?;
        positive("m1", self.m1)?;
        positive("m2", self.m2)?;
        positive("m_c", self.m_c)?;
        fraction("theta_r", self.theta_r)?;
        fraction("theta_p", self.theta_p)?;
        positive("n_bar", self.n_bar)
    }
}

/// Parameters of the multiple-trait T-system. Per-trait vectors all have
/// length `M`; `nu[i][j]` is the share `nu^{ij}` of on-site cellobiose from
/// trait `j` that reaches trait `i`, so every column sums to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MtParams {
    pub b1: Vec<f64>,
    pub d1: Vec<f64>,
    pub b2: Vec<f64>,
    pub d2: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub q: Vec<f64>,
    pub theta_r: Vec<f64>,
    pub theta_p: Vec<f64>,
    pub gamma: Vec<f64>,
    pub gamma_n: Vec<f64>,
    pub mu: Vec<f64>,
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
    pub n_bar: Vec<f64>,
    pub gamma_r: f64,
    pub gamma_rho: f64,
    pub gamma_p: f64,
    pub r: f64,
    pub m_c: f64,
    pub nu: Vec<Vec<f64>>,
}

/// Per-trait coefficient vectors of the quasi-steady multi-trait system.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MtVectors {
    /// `A_j = alpha_hat_j k1_j`.
    pub a: Vec<f64>,
    /// `B_j = theta_r_j beta_hat_j k2_j`.
    pub b: Vec<f64>,
    /// `Q_j = q_hat_j k2_j`.
    pub q: Vec<f64>,
    /// `Theta_j = theta_p_j q_hat_j k2_j`.
    pub theta: Vec<f64>,
    /// `Gamma_j = gamma_j`.
    pub gamma: Vec<f64>,
}

impl MtParams {
    pub fn traits(&self) -> usize {
        self.b1.len()
    }

    /// Every trait a copy of `t`, with the given sharing matrix.
    pub fn replicate(t: &TParams, nu: Vec<Vec<f64>>) -> Self {
        let m = nu.len();
        let v = |x: f64| vec![x; m];
        Self {
            b1: v(t.b1),
            d1: v(t.d1),
            b2: v(t.b2),
            d2: v(t.d2),
            alpha: v(t.alpha),
            beta: v(t.beta),
            q: v(t.q),
            theta_r: v(t.theta_r),
            theta_p: v(t.theta_p),
            gamma: v(t.gamma),
            gamma_n: v(t.gamma_n),
            mu: v(t.mu),
            m1: v(t.m1),
            m2: v(t.m2),
            n_bar: v(t.n_bar),
            gamma_r: t.gamma_r,
            gamma_rho: t.gamma_rho,
            gamma_p: t.gamma_p,
            r: t.r,
            m_c: t.m_c,
            nu,
        }
    }

    /// The single-trait record of trait `i`, with the shared scalars.
    pub fn trait_params(&self, i: usize) -> TParams {
        TParams {
            b1: self.b1[i],
            d1: self.d1[i],
            b2: self.b2[i],
            d2: self.d2[i],
            alpha: self.alpha[i],
            beta: self.beta[i],
            q: self.q[i],
            theta_r: self.theta_r[i],
            theta_p: self.theta_p[i],
            gamma_r: self.gamma_r,
            gamma_rho: self.gamma_rho,
            gamma: self.gamma[i],
            gamma_p: self.gamma_p,
            gamma_n: self.gamma_n[i],
            mu: self.mu[i],
            m1: self.m1[i],
            m2: self.m2[i],
            m_c: self.m_c,
            r: self.r,
            n_bar: self.n_bar[i],
        }
    }

    pub fn k1(&self, j: usize) -> f64 {
        self.b1[j] / self.d1[j]
    }

    pub fn k2(&self, j: usize) -> f64 {
        self.b2[j] / self.d2[j]
    }

    pub fn alpha_hat(&self, j: usize) -> f64 {
        self.alpha[j] / self.m1[j]
    }

    pub fn beta_hat(&self, j: usize) -> f64 {
        self.beta[j] / self.m2[j]
    }

    /// `q_hat_j = m_c q_j beta_j / m2_j`.
    pub fn q_hat(&self, j: usize) -> f64 {
        self.m_c * self.q[j] * self.beta[j] / self.m2[j]
    }

    pub fn gamma_r_hat(&self) -> f64 {
        self.gamma_r + self.gamma_rho
    }

    pub fn vectors(&self) -> MtVectors {
        let m = self.traits();
        let a = (0..m).map(|j| self.alpha_hat(j) * self.k1(j)).collect();
        let b = (0..m)
            .map(|j| self.theta_r[j] * self.beta_hat(j) * self.k2(j))
            .collect();
        let q = (0..m).map(|j| self.q_hat(j) * self.k2(j)).collect();
        let theta = (0..m)
            .map(|j| self.theta_p[j] * self.q_hat(j) * self.k2(j))
            .collect();
        MtVectors {
            a,
            b,
            q,
            theta,
            gamma: self.gamma.clone(),
        }
    }

    /// Column `k` of the sharing matrix, `N^k = (nu^{jk})_j`.
    pub fn nu_column(&self, k: usize) -> Vec<f64> {
        self.nu.iter().map(|row| row[k]).collect()
    }

    /// `<N^j, n> = sum_s nu^{sj} n^s`.
    pub fn nu_column_dot(&self, j: usize, n: &[f64]) -> f64 {
        self.nu.iter().zip(n).map(|(row, ns)| row[j] * ns).sum()
    }
}

impl Validate for MtParams {
    fn validate(&self) -> Result<(), ParamError> {
        let m = self.traits();
        if m == 0 {
            return Err(ParamError::Dimension {
                field: "b1".into(),
                expected: 1,
                got: 0,
            });
        }
        let per_trait: [(&str, &Vec<f64>); 15] = [
            ("b1", &self.b1),
            ("d1", &self.d1),
            ("b2", &self.b2),
            ("d2", &self.d2),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("q", &self.q),
            ("theta_r", &self.theta_r),
            ("theta_p", &self.theta_p),
            ("gamma", &self.gamma),
            ("gamma_n", &self.gamma_n),
            ("mu", &self.mu),
            ("m1", &self.m1),
            ("m2", &self.m2),
            ("n_bar", &self.n_bar),
        ];
        for (name, v) in per_trait {
            if v.len() != m {
                return Err(ParamError::Dimension {
                    field: name.to_string(),
                    expected: m,
                    got: v.len(),
                });
            }
        }
        for j in 0..m {
            let f = |name: &str| format!("{name}[{}]", j + 1);
            rate_constant("k1", &f("d1"), self.d1[j])?;
            rate_constant("k2", &f("d2"), self.d2[j])?;
            for (name, v) in [
                ("b1", self.b1[j]),
                ("b2", self.b2[j]),
                ("alpha", self.alpha[j]),
                ("beta", self.beta[j]),
                ("q", self.q[j]),
                ("gamma", self.gamma[j]),
                ("gamma_n", self.gamma_n[j]),
                ("mu", self.mu[j]),
            ] {
                nonneg(&f(name), v)?;
            }
            fraction(&f("theta_r"), self.theta_r[j])?;
            fraction(&f("theta_p"), self.theta_p[j])?;
            positive(&f("m1"), self.m1[j])?;
            positive(&f("m2"), self.m2[j])?;
            positive(&f("n_bar"), self.n_bar[j])?;
        }
        nonneg("gamma_r", self.gamma_r)?;
        positive("gamma_rho", self.gamma_rho)?;
        positive("gamma_p", self.gamma_p)?;
        nonneg("r", self.r)?;
        positive("m_c", self.m_c)?;
        if self.nu.len() != m {
            return Err(ParamError::Dimension {
                field: "nu".into(),
                expected: m,
                got: self.nu.len(),
            });
        }
        for (i, row) in self.nu.iter().enumerate() {
            if row.len() != m {
                return Err(ParamError::Dimension {
                    field: format!("nu[{}]", i + 1),
                    expected: m,
                    got: row.len(),
                });
            }
            for (j, v) in row.iter().enumerate() {
                nonneg(&format!("nu[{},{}]", i + 1, j + 1), *v)?;
            }
        }
        for j in 0..m {
            let sum: f64 = self.nu.iter().map(|row| row[j]).sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(ParamError::NotStochastic { column: j + 1, sum });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mt3() -> MtParams {
        let third = 1.0 / 3.0;
        MtParams::replicate(&TParams::default(), vec![vec![third; 3]; 3])
    }

    #[test]
    fn unit_t_params_accepted() {
        assert_eq!(TParams::default().validate(), Ok(()));
    }

    #[test]
    fn non_stochastic_column_is_named() {
        let mut p = mt3();
        p.nu[0][0] = 0.9 - 2.0 / 3.0;
        let err = p.validate().unwrap_err();
        assert!(
            err.to_string().contains("sharing matrix column 1 not stochastic"),
            "{err}"
        );
    }

    #[test]
    fn zero_d1_leaves_k1_undefined() {
        let s = SParams::default();
        let mut p = NsParams::uniform(2, &s, vec![1.0, 1.0]);
        p.d1 = 0.0;
        let err = p.validate().unwrap_err();
        assert!(err.to_string().contains("k1 undefined"), "{err}");
    }

    #[test]
    fn first_violation_reported_by_field() {
        let mut p = TParams::default();
        p.theta_p = 1.5;
        p.alpha = -1.0;
        assert_eq!(
            p.validate().unwrap_err(),
            ParamError::Negative {
                field: "alpha".into(),
                value: -1.0
            }
        );
        p.alpha = 1.0;
        assert!(matches!(
            p.validate().unwrap_err(),
            ParamError::NotAFraction { .. }
        ));
    }

    #[test]
    fn coefficient_vectors_match_definitions() {
        let mut p = mt3();
        p.alpha = vec![1.0, 2.0, 3.0];
        p.m1 = vec![2.0, 4.0, 1.0];
        p.b1 = vec![3.0, 1.0, 2.0];
        p.d1 = vec![1.0, 2.0, 4.0];
        p.beta = vec![0.5, 1.5, 2.0];
        p.m2 = vec![1.0, 3.0, 2.0];
        p.b2 = vec![2.0, 2.0, 1.0];
        p.d2 = vec![4.0, 1.0, 1.0];
        p.theta_r = vec![0.1, 0.2, 0.3];
        p.theta_p = vec![0.4, 0.5, 0.6];
        p.q = vec![1.0, 2.0, 0.5];
        p.m_c = 2.0;
        let v = p.vectors();
        // hand-evaluated
        assert_eq!(v.a, vec![1.5, 0.25, 1.5]);
        assert_eq!(v.b, vec![0.1 * 0.5 * 0.5, 0.2 * 0.5 * 2.0, 0.3 * 1.0 * 1.0]);
        let q_hat = [2.0 * 1.0 * 0.5, 2.0 * 2.0 * 1.5 / 3.0, 2.0 * 0.5 * 2.0 / 2.0];
        let k2 = [0.5, 2.0, 1.0];
        for j in 0..3 {
            assert_eq!(v.q[j], q_hat[j] * k2[j]);
            assert_eq!(v.theta[j], p.theta_p[j] * q_hat[j] * k2[j]);
        }
    }

    #[test]
    fn ns_reduction_requires_uniform_tables() {
        let s = SParams::default();
        let mut p = NsParams::uniform(3, &s, vec![1.0, 0.0, 2.0]);
        assert_eq!(p.to_s_params().unwrap().r, 7.0);
        p.q.set(2, 1, 3.0);
        assert_eq!(
            p.to_s_params().unwrap_err(),
            ParamError::NonUniform { field: "q" }
        );
    }
}
