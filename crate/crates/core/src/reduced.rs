//! Right-hand sides of the aggregated systems: the S-system, the single-trait
//! T-system and the multiple-trait T-system.

use crate::model::{MtParams, MtState, SParams, SState, TParams, TState};

/// Derivative of the S-system.
pub fn s_rhs(y: &SState, p: &SParams) -> SState {
    let mut d = [0.0; 7];
    s_rhs_into(&y.to_array(), &mut d, p);
    SState::from_slice(&d).expect("seven components")
}

/// Packed form of [`s_rhs`]; layout as [`SState::LABELS`].
pub fn s_rhs_into(y: &[f64], dy: &mut [f64], p: &SParams) {
    let [e1, e21, e22, s, rho, pool, n] = [y[0], y[1], y[2], y[3], y[4], y[5], y[6]];
    let attack = p.beta * s * e21;
    let cleave = p.m_c * p.q * e22 / p.m2;
    dy[0] = p.b1 * n - p.d1 * e1;
    dy[1] = p.b2 * n - attack + p.sigma * e22 - p.d21 * e21;
    dy[2] = attack - (p.sigma + p.d22 + p.gamma_r) * e22;
    dy[3] = p.alpha * (rho / p.m_c - s - e22 / p.m2) * e1 / p.m1 - attack / p.m2
        + ((1.0 - p.theta_r) * (p.sigma + p.d22) - p.gamma_rho) * e22 / p.m2
        - (p.gamma_r + p.gamma_rho) * s;
    dy[4] = p.r - cleave - p.gamma_rho * rho;
    dy[5] = p.theta_p * cleave - p.gamma * n * pool - p.gamma_p * pool;
    dy[6] = p.mu * n / (p.n_bar + n) * (p.gamma * pool + (1.0 - p.theta_p) * cleave)
        - p.gamma_n * n;
}

/// Derivative of the T-system.
pub fn t_rhs(y: &TState, p: &TParams) -> TState {
    let mut d = [0.0; 6];
    t_rhs_into(&y.to_array(), &mut d, p);
    TState::from_slice(&d).expect("six components")
}

/// Packed form of [`t_rhs`]; layout as [`TState::LABELS`].
pub fn t_rhs_into(y: &[f64], dy: &mut [f64], p: &TParams) {
    let [e1, e2, t, rho, pool, n] = [y[0], y[1], y[2], y[3], y[4], y[5]];
    let cleave = p.q_hat() * t * e2;
    dy[0] = p.b1 * n - p.d1 * e1;
    dy[1] = p.b2 * n - p.d2 * e2;
    dy[2] = p.alpha * (rho / p.m_c - t) * e1 / p.m1 - p.theta_r * p.beta * t * e2 / p.m2
        - (p.gamma_r + p.gamma_rho) * t;
    dy[3] = p.r - cleave - p.gamma_rho * rho;
    dy[4] = p.theta_p * cleave - p.gamma * n * pool - p.gamma_p * pool;
    dy[5] = p.mu * n / (p.n_bar + n) * (p.gamma * pool + (1.0 - p.theta_p) * cleave)
        - p.gamma_n * n;
}

/// Per-capita growth from the shared pool,
/// `gamma_i p / (n_bar_i + <Gamma, n> / gamma_i)`, written so that a
/// non-consuming trait (`gamma_i = 0`) gets zero.
pub(crate) fn pool_uptake(gamma_i: f64, n_bar_i: f64, gamma_dot_n: f64, pool: f64) -> f64 {
    if gamma_i == 0.0 {
        return 0.0;
    }
    gamma_i * gamma_i * pool / (gamma_i * n_bar_i + gamma_dot_n)
}

/// Share weight `nu_ij / (nu_ij n_bar_i + <N^j, n>)`, zero when trait `i`
/// has no access to stream `j`.
pub(crate) fn share_weight(nu_ij: f64, n_bar_i: f64, stream_dot_n: f64) -> f64 {
    if nu_ij == 0.0 {
        return 0.0;
    }
    nu_ij / (nu_ij * n_bar_i + stream_dot_n)
}

/// Derivative of the multiple-trait T-system.
pub fn mt_rhs(y: &MtState, p: &MtParams) -> MtState {
    let v = y.to_vec();
    let mut d = vec![0.0; v.len()];
    mt_rhs_into(&v, &mut d, p);
    MtState::from_slice(p.traits(), &d).expect("packed length")
}

/// Packed form of [`mt_rhs`]; layout `[e1(M), e2(M), T, rho, p, n(M)]`.
pub fn mt_rhs_into(y: &[f64], dy: &mut [f64], p: &MtParams) {
    let m = p.traits();
    let (e1, rest) = y.split_at(m);
    let (e2, rest) = rest.split_at(m);
    let (t, rho, pool, n) = (rest[0], rest[1], rest[2], &rest[3..]);

    let mut cut = 0.0;
    let mut unusable = 0.0;
    let mut cleave = 0.0;
    let mut shared = 0.0;
    let mut gamma_dot_n = 0.0;
    // on-site cellobiose stream of each trait, q_hat_j e2_j T
    let mut stream = vec![0.0; m];
    for j in 0..m {
        cut += p.alpha_hat(j) * e1[j];
        unusable += p.theta_r[j] * p.beta_hat(j) * e2[j];
        stream[j] = p.q_hat(j) * e2[j] * t;
        cleave += stream[j];
        shared += p.theta_p[j] * stream[j];
        gamma_dot_n += p.gamma[j] * n[j];
    }
    let stream_dot: Vec<f64> = (0..m).map(|j| p.nu_column_dot(j, n)).collect();

    for i in 0..m {
        dy[i] = p.b1[i] * n[i] - p.d1[i] * e1[i];
        dy[m + i] = p.b2[i] * n[i] - p.d2[i] * e2[i];
    }
    dy[2 * m] = (rho / p.m_c - t) * cut - unusable * t - p.gamma_r_hat() * t;
    dy[2 * m + 1] = p.r - cleave - p.gamma_rho * rho;
    dy[2 * m + 2] = shared - gamma_dot_n * pool - p.gamma_p * pool;
    for i in 0..m {
        let mut on_site = 0.0;
        for j in 0..m {
            on_site += (1.0 - p.theta_p[j])
                * share_weight(p.nu[i][j], p.n_bar[i], stream_dot[j])
                * stream[j];
        }
        let growth = pool_uptake(p.gamma[i], p.n_bar[i], gamma_dot_n, pool) + on_site;
        dy[2 * m + 3 + i] = p.mu[i] * n[i] * growth - p.gamma_n[i] * n[i];
    }
}

/// Places a single-trait system into trait `slot` (0-based) of an
/// `traits`-trait system. The other traits copy the single-trait rates and
/// start empty; sharing is the identity, so each trait eats its own on-site
/// cellobiose.
pub fn embed_single_in_mt(
    state: &TState,
    params: &TParams,
    traits: usize,
    slot: usize,
) -> (MtState, MtParams) {
    assert!(slot < traits, "slot {slot} out of range for {traits} traits");
    let nu = (0..traits)
        .map(|i| (0..traits).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mp = MtParams::replicate(params, nu);
    let mut ms = MtState::zeros(traits);
    ms.e1[slot] = state.e1;
    ms.e2[slot] = state.e2;
    ms.n[slot] = state.n;
    ms.t = state.t;
    ms.rho = state.rho;
    ms.p = state.p;
    (ms, mp)
}

/// The single-trait state seen by trait `slot`.
pub fn project_mt_slot(state: &MtState, slot: usize) -> TState {
    TState {
        e1: state.e1[slot],
        e2: state.e2[slot],
        t: state.t,
        rho: state.rho,
        p: state.p,
        n: state.n[slot],
    }
}

/// Trait totals `(sum e1, sum e2, T, rho, p, sum n)`.
pub fn aggregate_mt(state: &MtState) -> TState {
    TState {
        e1: state.e1.iter().sum(),
        e2: state.e2.iter().sum(),
        t: state.t,
        rho: state.rho,
        p: state.p,
        n: state.n.iter().sum(),
    }
}
