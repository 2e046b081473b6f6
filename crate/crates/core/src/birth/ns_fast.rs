//! Fast equilibrium of the chain-structured system at a frozen population,
//! its small-population series, and the resulting birth rate.
//!
//! The solve works in scaled unknowns `e21 = n w`, `e22^{l,i} = n^{i+1} v`,
//! `N_{l,i} = n^i u`, in which the system stays regular as `n -> 0`; at
//! `n = 0` the solution is exactly the leading series coefficients.

use nalgebra::{DMatrix, DVector};

use crate::integrator::inf_norm;
use crate::model::index::{IndexSetIL, SiteIndexSet};
use crate::model::{ChainTable, NsState, SiteTable};
use crate::ns::NsModel;

use super::BirthError;

const MAX_NEWTON: usize = 100;
const RESIDUAL_TOL: f64 = 1e-10;

/// Leading small-`n` coefficients: `N_{l,i} ~ nu_{l,i} n^i`,
/// `e22^{l,i} ~ lead_{l,i} n^{i+1}`, `e21 ~ (b2/d21) n`, `p / (theta_p n^2) -> p_bar0 / gamma_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct NsSeries {
    pub nu: ChainTable,
    pub e22_lead: SiteTable,
    pub e21_lead: f64,
    pub p_bar0: f64,
}

/// Converged fast state of the chain-structured system.
#[derive(Debug, Clone, PartialEq)]
pub struct NsEquilibrium {
    pub state: NsState,
    /// `gamma_p m_c sum q_hat e22 / (n^2 (gamma n + gamma_p))`, finite at `n = 0`.
    pub p_bar: f64,
    /// Sup-norm of the unscaled fast rows at the solution.
    pub residual: f64,
    pub iterations: usize,
}

pub fn ns_series(model: &NsModel) -> NsSeries {
    let p = model.params();
    let len = model.max_len();
    let k1 = p.b1 / p.d1;
    let w0 = p.b2 / p.d21;
    let mut nu = ChainTable::zeros(len);
    for l in 1..=len {
        nu.set(l, 0, p.influx_at(l) / p.gamma_rho.get(l, 0));
        for i in 1..=l {
            let prev = nu.get(l, i - 1);
            let v = prev * model.alpha_hat(l, i - 1) * k1
                / (model.gamma_hat(l, i) + p.gamma_rho.get(l, i));
            nu.set(l, i, v);
        }
    }
    let e22_lead = SiteTable::from_fn(len, |l, i| {
        i as f64 * p.beta.get(l, i) * nu.get(l, i) * w0 / model.e22_loss(l, i)
    });
    let p_bar0 = p.m_c * (1..=len).map(|l| model.q_hat(l, 1) * e22_lead.get(l, 1)).sum::<f64>();
    NsSeries { nu, e22_lead, e21_lead: w0, p_bar0 }
}

/// Scaled fast system: unknown vector `[w, v (sites), u (chains)]`.
struct Scaled<'a> {
    model: &'a NsModel,
    chains: IndexSetIL,
    sites: SiteIndexSet,
    k1: f64,
}

impl<'a> Scaled<'a> {
    fn new(model: &'a NsModel) -> Self {
        let len = model.max_len();
        let p = model.params();
        Self { model, chains: IndexSetIL::new(len), sites: SiteIndexSet::new(len), k1: p.b1 / p.d1 }
    }

    fn dim(&self) -> usize {
        1 + self.sites.len() + self.chains.len()
    }

    fn vi(&self, l: usize, i: usize) -> Option<usize> {
        self.sites.index(l, i).map(|k| 1 + k)
    }

    fn ui(&self, l: usize, i: usize) -> Option<usize> {
        self.chains.index(l, i).map(|k| 1 + self.sites.len() + k)
    }

    fn series_guess(&self, s: &NsSeries) -> DVector<f64> {
        let mut x = DVector::zeros(self.dim());
        x[0] = s.e21_lead;
        for (l, i) in self.sites.iter() {
            x[self.vi(l, i).unwrap()] = s.e22_lead.get(l, i);
        }
        for (l, i) in self.chains.iter() {
            x[self.ui(l, i).unwrap()] = s.nu.get(l, i);
        }
        x
    }

    /// Residual and, if requested, Jacobian at `x`.
    fn eval(&self, x: &DVector<f64>, n: f64, jac: Option<&mut DMatrix<f64>>) -> DVector<f64> {
        let m = self.model;
        let p = m.params();
        let len = m.max_len();
        let pw: Vec<f64> = (0..=len + 1).map(|i| n.powi(i as i32)).collect();
        let mut f = DVector::zeros(self.dim());
        let mut jm = jac;
        if let Some(j) = jm.as_deref_mut() {
            j.fill(0.0);
        }
        let w = x[0];

        let mut fw = p.b2 - p.d21 * w;
        let mut dw_dw = -p.d21;
        for (l, i) in self.sites.iter() {
            let (vk, uk) = (self.vi(l, i).unwrap(), self.ui(l, i).unwrap());
            let (v, u) = (x[vk], x[uk]);
            let fi = i as f64;
            let beta = p.beta.get(l, i);
            let sigma = p.sigma.get(l, i);
            let free = fi * u - n * v / p.m2;
            fw -= (beta * free * w - sigma * v) * pw[i];
            dw_dw -= beta * free * pw[i];
            f[vk] = beta * free * w - m.e22_loss(l, i) * v;
            if let Some(j) = jm.as_deref_mut() {
                j[(0, vk)] = (beta * n * w / p.m2 + sigma) * pw[i];
                j[(0, uk)] = -beta * fi * w * pw[i];
                j[(vk, 0)] = beta * free;
                j[(vk, vk)] = -beta * n * w / p.m2 - m.e22_loss(l, i);
                j[(vk, uk)] = beta * fi * w;
            }
        }
        f[0] = fw;
        if let Some(j) = jm.as_deref_mut() {
            j[(0, 0)] = dw_dw;
        }

        for (l, i) in self.chains.iter() {
            let row = self.ui(l, i).unwrap();
            let mut r = if i == 0 { p.influx_at(l) } else { 0.0 };
            let mut terms: [(Option<usize>, f64); 6] = [(None, 0.0); 6];
            if i >= 1 {
                let c = m.alpha_hat(l, i - 1) * self.k1;
                terms[0] = (self.ui(l, i - 1), c);
            }
            let c_here = -m.alpha_hat(l, i) * self.k1 * n - m.gamma_hat(l, i) - p.gamma_rho.get(l, i);
            terms[1] = (Some(row), c_here);
            if i < l {
                terms[2] = (self.ui(l, i + 1), m.gamma_hat(l, i + 1) * n);
                terms[3] = (self.vi(l, i + 1), m.theta_hat(l, i + 1) * n * n);
            }
            if i >= 1 {
                if l < len {
                    terms[4] = (self.vi(l + 1, i), m.q_hat(l + 1, i) * n);
                }
                terms[5] = (self.vi(l, i), -(m.q_hat(l, i) + m.theta_hat(l, i)) * n);
            }
            for &(idx, c) in &terms {
                if let Some(k) = idx {
                    r += c * x[k];
                    if let Some(j) = jm.as_deref_mut() {
                        j[(row, k)] += c;
                    }
                }
            }
            f[row] = r;
        }
        f
    }

    /// Damped Newton from `x0`; `None` if it fails to converge.
    fn newton(&self, mut x: DVector<f64>, n: f64) -> Option<(DVector<f64>, usize)> {
        let dim = self.dim();
        let mut jac = DMatrix::zeros(dim, dim);
        let mut f = self.eval(&x, n, Some(&mut jac));
        let mut fnorm = f.amax();
        for it in 0..MAX_NEWTON {
            let scale = 1.0 + x.amax();
            if fnorm <= 1e-14 * scale {
                return Some((x, it));
            }
            let step = jac.clone().lu().solve(&(-&f))?;
            if !step.iter().all(|s| s.is_finite()) {
                return None;
            }
            let mut lambda = 1.0;
            loop {
                let trial = &x + lambda * &step;
                let ft = self.eval(&trial, n, None);
                let tn = ft.amax();
                if tn.is_finite() && tn <= (1.0 - 1e-4 * lambda) * fnorm {
                    x = trial;
                    break;
                }
                lambda *= 0.5;
                if lambda < 1e-10 {
                    // stagnation at round-off counts as converged
                    return (fnorm <= 1e-11 * scale).then_some((x, it));
                }
            }
            if lambda * step.amax() <= 1e-15 * (1.0 + x.amax()) {
                return Some((x, it + 1));
            }
            f = self.eval(&x, n, Some(&mut jac));
            fnorm = f.amax();
        }
        None
    }

    fn unscale(&self, x: &DVector<f64>, n: f64) -> NsState {
        let m = self.model;
        let p = m.params();
        let len = m.max_len();
        let mut s = NsState::zeros(len);
        for (l, i) in self.chains.iter() {
            s.chains.set(l, i, x[self.ui(l, i).unwrap()] * n.powi(i as i32));
        }
        for (l, i) in self.sites.iter() {
            s.e22.set(l, i, x[self.vi(l, i).unwrap()] * n.powi(i as i32 + 1));
        }
        s.e1 = self.k1 * n;
        s.e21 = x[0] * n;
        s.n = n;
        s.p = p.theta_p * p.m_c * self.production(x, n) / (p.gamma * n + p.gamma_p);
        s
    }

    /// `sum q_hat_{l,i} e22^{l,i} / n^2` from scaled unknowns.
    fn production(&self, x: &DVector<f64>, n: f64) -> f64 {
        self.sites
            .iter()
            .map(|(l, i)| self.model.q_hat(l, i) * x[self.vi(l, i).unwrap()] * n.powi(i as i32 - 1))
            .sum::<f64>()
            * n
            * n
    }

    fn p_bar(&self, x: &DVector<f64>, n: f64) -> f64 {
        let p = self.model.params();
        let reduced: f64 = self
            .sites
            .iter()
            .map(|(l, i)| self.model.q_hat(l, i) * x[self.vi(l, i).unwrap()] * n.powi(i as i32 - 1))
            .sum();
        p.gamma_p * p.m_c * reduced / (p.gamma * n + p.gamma_p)
    }
}

/// Solves the fast rows of the chain-structured system at population `n`.
pub fn ns_fast_equilibrium(n: f64, model: &NsModel) -> Result<NsEquilibrium, BirthError> {
    if !(n.is_finite() && n >= 0.0) {
        return Err(BirthError::BadPopulation { n });
    }
    let sys = Scaled::new(model);
    let guess = sys.series_guess(&ns_series(model));
    let (x, iterations) = match sys.newton(guess.clone(), n) {
        Some(ok) => ok,
        None => continuation(&sys, guess, n)?,
    };
    finish(&sys, &x, n, iterations)
}

/// Marches `n` up from zero, reusing each solution as the next guess.
fn continuation(
    sys: &Scaled,
    mut x: DVector<f64>,
    target: f64,
) -> Result<(DVector<f64>, usize), BirthError> {
    let mut at = 0.0;
    let mut step = target / 8.0;
    let mut total = 0;
    while at < target {
        let next = (at + step).min(target);
        match sys.newton(x.clone(), next) {
            Some((xn, it)) => {
                x = xn;
                at = next;
                total += it;
                step *= 1.5;
            }
            None => {
                step *= 0.5;
                if step < 1e-10 * target {
                    let r = sys.eval(&x, next, None).amax();
                    return Err(BirthError::NoConvergence { n: target, residual: r });
                }
            }
        }
    }
    Ok((x, total))
}

fn finish(sys: &Scaled, x: &DVector<f64>, n: f64, iterations: usize) -> Result<NsEquilibrium, BirthError> {
    let model = sys.model;
    let state = sys.unscale(x, n);
    let y = state.to_vec();
    let mut dy = vec![0.0; y.len()];
    model.rhs_into(&y, &mut dy);
    let fast = y.len() - 1;
    let residual = inf_norm(&dy[..fast]);
    let size = inf_norm(&y[..fast]);
    if residual.is_nan() || residual > RESIDUAL_TOL * (1.0 + size) {
        return Err(BirthError::NoConvergence { n, residual });
    }
    let tol = 1e-12 * (1.0 + size);
    if let Some(k) = (0..fast).find(|&k| y[k] < -tol) {
        return Err(BirthError::Negative {
            n,
            component: NsState::labels(model.max_len())[k].clone(),
            value: y[k],
        });
    }
    Ok(NsEquilibrium { state, p_bar: sys.p_bar(x, n), residual, iterations })
}

/// Birth rate from the fast equilibrium,
/// `mu n^2 / (n_bar + n) (gamma theta_p / gamma_p + (1 - theta_p)(gamma n / gamma_p + 1)) p_bar(n)`.
pub fn ns_birth_rate(n: f64, model: &NsModel) -> Result<f64, BirthError> {
    let eq = ns_fast_equilibrium(n, model)?;
    Ok(birth_from_p_bar(n, eq.p_bar, model))
}

fn birth_from_p_bar(n: f64, p_bar: f64, model: &NsModel) -> f64 {
    let p = model.params();
    let share = p.gamma * p.theta_p / p.gamma_p + (1.0 - p.theta_p) * (p.gamma * n / p.gamma_p + 1.0);
    p.mu * n * n / (p.n_bar + n) * share * p_bar
}

/// `d/d theta_p` of `B(n)/n^2` at zero: `mu / n_bar (gamma / gamma_p - 1) p_bar(0)`.
pub fn ns_sharing_sensitivity(model: &NsModel) -> f64 {
    let p = model.params();
    p.mu / p.n_bar * (p.gamma / p.gamma_p - 1.0) * ns_series(model).p_bar0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{integrate_to_steady, StepControl};
    use crate::model::{NsParams, SParams};

    fn model(len: usize) -> NsModel {
        let s = SParams {
            alpha: 0.8,
            beta: 1.3,
            q: 0.7,
            sigma: 0.4,
            d22: 0.3,
            gamma_r: 0.2,
            gamma_rho: 0.5,
            theta_p: 0.4,
            gamma: 1.5,
            gamma_p: 0.8,
            ..SParams::default()
        };
        let influx = (1..=len).map(|l| 1.0 / l as f64).collect();
        let mut p = NsParams::uniform(len, &s, influx);
        p.alpha.set(len, 0, 1.1);
        p.q.set(1, 1, 0.9);
        NsModel::new(p).unwrap()
    }

    fn fast_rows(model: &NsModel, n: f64) -> impl FnMut(f64, &[f64], &mut [f64]) + '_ {
        move |_, y: &[f64], dy: &mut [f64]| {
            let mut full = y.to_vec();
            full.push(n);
            let mut d = vec![0.0; full.len()];
            model.rhs_into(&full, &mut d);
            dy.copy_from_slice(&d[..y.len()]);
        }
    }

    #[test]
    fn zero_population_is_series() {
        let m = model(4);
        let eq = ns_fast_equilibrium(0.0, &m).unwrap();
        let s = ns_series(&m);
        for (l, i) in m.params().alpha.index_set().iter() {
            let want = if i == 0 { s.nu.get(l, 0) } else { 0.0 };
            assert!((eq.state.chains.get(l, i) - want).abs() < 1e-14);
        }
        assert!((eq.p_bar - s.p_bar0).abs() <= 1e-13 * s.p_bar0);
        assert_eq!(ns_birth_rate(0.0, &m).unwrap(), 0.0);
    }

    #[test]
    fn newton_matches_relaxation() {
        let m = model(3);
        for n in [0.05, 0.7, 4.0] {
            let eq = ns_fast_equilibrium(n, &m).unwrap();
            assert!(eq.residual <= 1e-10 * (1.0 + inf_norm(&eq.state.to_vec())));
            let y0 = vec![0.0; m.dim() - 1];
            let ss = integrate_to_steady(
                fast_rows(&m, n),
                &y0,
                &StepControl::with_tolerances(1e-12, 1e-15),
                1e-10,
                1e7,
            )
            .unwrap();
            let want = eq.state.to_vec();
            let scale = inf_norm(&want);
            for (a, b) in ss.y.iter().zip(&want) {
                assert!((a - b).abs() <= 1e-6 * scale, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn series_leads_small_population() {
        let m = model(5);
        let s = ns_series(&m);
        let n = 1e-6;
        let eq = ns_fast_equilibrium(n, &m).unwrap();
        for (l, i) in m.params().alpha.index_set().iter() {
            let got = eq.state.chains.get(l, i) / n.powi(i as i32);
            assert!((got - s.nu.get(l, i)).abs() <= 1e-4 * s.nu.get(l, i));
        }
        assert!((eq.p_bar - s.p_bar0).abs() <= 1e-4 * s.p_bar0);
    }

    #[test]
    fn birth_rate_matches_direct_assembly() {
        let m = model(3);
        let p = m.params();
        for n in [1e-3, 0.5, 2.0] {
            let eq = ns_fast_equilibrium(n, &m).unwrap();
            let st = &eq.state;
            let production: f64 = st.e22.iter().map(|((l, i), v)| m.q_hat(l, i) * v).sum::<f64>() * p.m_c;
            let direct = p.mu / (p.n_bar + n) * (p.gamma * st.p + (1.0 - p.theta_p) * production);
            let b = ns_birth_rate(n, &m).unwrap();
            assert!((b - direct).abs() <= 1e-12 * direct);
        }
    }

    #[test]
    fn sharing_sensitivity_against_difference() {
        let base = model(3);
        let n = 1e-7;
        let h = 1e-4;
        let at = |tp: f64| {
            let mut p = base.params().clone();
            p.theta_p = tp;
            ns_birth_rate(n, &NsModel::new(p).unwrap()).unwrap() / (n * n)
        };
        let tp = base.params().theta_p;
        let fd = (at(tp + h) - at(tp - h)) / (2.0 * h);
        let want = ns_sharing_sensitivity(&base);
        assert!((fd - want).abs() <= 1e-4 * want.abs(), "{fd} {want}");
    }

    #[test]
    fn no_sharing_uses_production() {
        let mut p = model(2).params().clone();
        p.theta_p = 0.0;
        let m = NsModel::new(p).unwrap();
        let eq = ns_fast_equilibrium(0.3, &m).unwrap();
        assert_eq!(eq.state.p, 0.0);
        assert!(eq.p_bar > 0.0);
    }

    #[test]
    fn rejects_bad_population() {
        let m = model(2);
        assert!(matches!(ns_fast_equilibrium(-1.0, &m), Err(BirthError::BadPopulation { .. })));
        assert!(matches!(ns_fast_equilibrium(f64::NAN, &m), Err(BirthError::BadPopulation { .. })));
    }
}
