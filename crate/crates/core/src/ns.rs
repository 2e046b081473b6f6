//! Right-hand side of the chain-structured system and its aggregation to
//! macroscopic totals.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::index::{IndexSetIL, SiteIndexSet};
use crate::model::state::NsLayout;
use crate::model::{ChainTable, NsParams, NsState, ParamError, SParams, SState, Validate};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NsError {
    #[error("non-finite derivative in {component}")]
    NonFinite { component: String },
    #[error("state has L = {got}, model has L = {expected}")]
    Shape { expected: usize, got: usize },
}

/// Macroscopic totals of a chain-structured state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NsAggregates {
    /// Total cellulose mass `m_c sum l N_{l,i}`.
    pub rho: f64,
    /// Total attached enzyme mass.
    pub e22: f64,
    /// Total landing sites `sum i N_{l,i}`.
    pub t: f64,
    /// Total unoccupied sites `sum (i N_{l,i} - e22^{l,i}/m2)`.
    pub s: f64,
}

/// Validated chain-structured model with its transition constants
/// precomputed.
#[derive(Debug, Clone)]
pub struct NsModel {
    params: NsParams,
    chains: IndexSetIL,
    sites: SiteIndexSet,
    layout: NsLayout,
    /// `alpha_{l,i} (l - i) / m1`.
    alpha_hat: ChainTable,
    /// `i gamma_r_{l,i}`.
    gamma_hat: ChainTable,
    /// `q_{l,i} / m2`.
    q_hat: ChainTable,
    /// `theta_r (sigma_{l,i} + d22_{l,i}) / m2`.
    theta_hat: ChainTable,
    /// `sigma_{l,i} + d22_{l,i} + gamma_r_{l,i}`.
    e22_loss: ChainTable,
}

impl NsModel {
    pub fn new(params: NsParams) -> Result<Self, ParamError> {
        params.validate()?;
        let len = params.max_len;
        let p = &params;
        let alpha_hat =
            ChainTable::from_fn(len, |l, i| p.alpha.get(l, i) * (l - i) as f64 / p.m1);
        let gamma_hat = ChainTable::from_fn(len, |l, i| i as f64 * p.gamma_r.get(l, i));
        let q_hat = ChainTable::from_fn(len, |l, i| p.q.get(l, i) / p.m2);
        let theta_hat = ChainTable::from_fn(len, |l, i| {
            p.theta_r * (p.sigma.get(l, i) + p.d22.get(l, i)) / p.m2
        });
        let e22_loss = ChainTable::from_fn(len, |l, i| {
            p.sigma.get(l, i) + p.d22.get(l, i) + p.gamma_r.get(l, i)
        });
        Ok(Self {
            chains: IndexSetIL::new(len),
            sites: SiteIndexSet::new(len),
            layout: NsLayout::new(len),
            alpha_hat,
            gamma_hat,
            q_hat,
            theta_hat,
            e22_loss,
            params,
        })
    }

    pub fn params(&self) -> &NsParams {
        &self.params
    }

    pub fn max_len(&self) -> usize {
        self.params.max_len
    }

    pub fn dim(&self) -> usize {
        NsState::dim(self.max_len())
    }

    pub fn alpha_hat(&self, l: usize, i: usize) -> f64 {
        self.alpha_hat.get(l, i)
    }

    pub fn gamma_hat(&self, l: usize, i: usize) -> f64 {
        self.gamma_hat.get(l, i)
    }

    pub fn q_hat(&self, l: usize, i: usize) -> f64 {
        self.q_hat.get(l, i)
    }

    pub fn theta_hat(&self, l: usize, i: usize) -> f64 {
        self.theta_hat.get(l, i)
    }

    /// Total loss rate `sigma + d22 + gamma_r` of attached enzyme at `(l, i)`.
    pub fn e22_loss(&self, l: usize, i: usize) -> f64 {
        self.e22_loss.get(l, i)
    }

    /// Derivative of the packed state `y` into `dy`. Unchecked hot path:
    /// slice lengths must equal [`NsModel::dim`].
    pub fn rhs_into(&self, y: &[f64], dy: &mut [f64]) {
        let p = &self.params;
        let lay = self.layout;
        let len = p.max_len;
        let e1 = y[lay.e1];
        let e21 = y[lay.e21];
        let pool = y[lay.p];
        let n = y[lay.n];

        let nc = |l: usize, i: usize| {
            if self.chains.contains(l, i) {
                y[self.chains.offset_unchecked(l, i)]
            } else {
                0.0
            }
        };
        let e22 = |l: usize, i: usize| {
            if self.sites.contains(l, i) {
                y[lay.sites + self.sites.offset_unchecked(l, i)]
            } else {
                0.0
            }
        };

        let mut attach_net = 0.0;
        let mut production = 0.0;
        for (l, i) in self.sites.iter() {
            let k = self.sites.offset_unchecked(l, i);
            let site = y[lay.sites + k];
            let free = i as f64 * nc(l, i) - site / p.m2;
            let attack = p.beta.get(l, i) * free * e21;
            attach_net += attack - p.sigma.get(l, i) * site;
            dy[lay.sites + k] = attack - self.e22_loss.get(l, i) * site;
            production += self.q_hat.get(l, i) * site;
        }
        production *= p.m_c;

        for l in 1..=len {
            for i in 0..=l {
                let here = nc(l, i);
                let mut d = if i == 0 { p.influx_at(l) } else { 0.0 };
                if i >= 1 {
                    d += self.alpha_hat.get(l, i - 1) * nc(l, i - 1) * e1;
                }
                d -= self.alpha_hat.get(l, i) * here * e1;
                d += self.gamma_hat.get(l, i + 1) * nc(l, i + 1);
                d -= self.gamma_hat.get(l, i) * here;
                d += self.q_hat.get(l + 1, i) * e22(l + 1, i);
                d -= self.q_hat.get(l, i) * e22(l, i);
                d += self.theta_hat.get(l, i + 1) * e22(l, i + 1);
                d -= self.theta_hat.get(l, i) * e22(l, i);
                d -= p.gamma_rho.get(l, i) * here;
                dy[self.chains.offset_unchecked(l, i)] = d;
            }
        }

        dy[lay.e1] = p.b1 * n - p.d1 * e1;
        dy[lay.e21] = p.b2 * n - attach_net - p.d21 * e21;
        dy[lay.p] = p.theta_p * production - p.gamma * n * pool - p.gamma_p * pool;
        dy[lay.n] = p.mu * n / (p.n_bar + n) * (p.gamma * pool + (1.0 - p.theta_p) * production)
            - p.gamma_n * n;
    }

    /// Checked derivative of a state record.
    pub fn rhs(&self, state: &NsState) -> Result<NsState, NsError> {
        self.check_shape(state)?;
        let y = state.to_vec();
        let mut dy = vec![0.0; y.len()];
        self.rhs_into(&y, &mut dy);
        if let Some(k) = dy.iter().position(|v| !v.is_finite()) {
            let labels = NsState::labels(self.max_len());
            return Err(NsError::NonFinite {
                component: labels[k].clone(),
            });
        }
        Ok(NsState::from_slice(self.max_len(), &dy).expect("dimension fixed by layout"))
    }

    fn check_shape(&self, state: &NsState) -> Result<(), NsError> {
        if state.max_len() != self.max_len() || state.e22.max_len() != self.max_len() {
            return Err(NsError::Shape {
                expected: self.max_len(),
                got: state.max_len(),
            });
        }
        Ok(())
    }

    /// Totals of a state. Linear in the state, so it also maps derivatives
    /// to derivatives of totals.
    pub fn aggregate(&self, state: &NsState) -> NsAggregates {
        let m2 = self.params.m2;
        let mut agg = NsAggregates::default();
        let mut mass = 0.0;
        for ((l, i), v) in state.chains.iter() {
            mass += l as f64 * v;
            agg.t += i as f64 * v;
        }
        for ((l, i), v) in state.e22.iter() {
            agg.e22 += v;
            agg.s += i as f64 * state.chains.get(l, i) - v / m2;
        }
        agg.rho = self.params.m_c * mass;
        agg
    }

    /// S-system state assembled from the totals. Requires uniform rates.
    pub fn reduce_to_s_state(&self, state: &NsState) -> Result<SState, ParamError> {
        self.s_params()?;
        Ok(self.assemble_s(state))
    }

    fn assemble_s(&self, state: &NsState) -> SState {
        let agg = self.aggregate(state);
        SState {
            e1: state.e1,
            e21: state.e21,
            e22: agg.e22,
            s: agg.s,
            rho: agg.rho,
            p: state.p,
            n: state.n,
        }
    }

    /// Packed-vector form of [`NsModel::reduce_to_s_state`], skipping the
    /// uniformity check.
    pub fn reduce_packed(&self, y: &[f64]) -> [f64; 7] {
        let state = NsState::from_slice(self.max_len(), y).expect("packed length");
        self.assemble_s(&state).to_array()
    }

    /// The S-system parameters of a uniform model.
    pub fn s_params(&self) -> Result<SParams, ParamError> {
        self.params.to_s_params()
    }

    /// Mass carried out of the truncated index set per unit time.
    ///
    /// Cleaving a fully-sited chain `(l, l)` targets `(l - 1, l)`, which is
    /// not a chain state; the equations drop that transition's gain term.
    /// The aggregated derivative therefore differs from the S-system by
    /// exactly this record (nonzero only in `S` and `rho`).
    pub fn boundary_leak(&self, state: &NsState) -> SState {
        let mut sites = 0.0;
        let mut mass = 0.0;
        for l in 1..=self.max_len() {
            let flux = self.q_hat.get(l, l) * state.e22.get(l, l);
            sites += l as f64 * flux;
            mass += (l - 1) as f64 * flux;
        }
        SState {
            s: -sites,
            rho: -self.params.m_c * mass,
            ..Default::default()
        }
    }
}
