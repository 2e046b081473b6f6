//! Birth-rate functional over trait-structured populations. A population is
//! a measure on the trait line: weighted atoms plus an optional density on a
//! grid, so finitely many traits are the special case of atoms only.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::integrator::{integrate, IntegrateError, StepControl};
use crate::model::{MtParams, TParams, Trajectory, Validate};
use crate::reduced::{pool_uptake, share_weight};

#[derive(Debug, Error)]
pub enum ContinuousError {
    #[error("grid has {nodes} nodes but {values} density values")]
    GridShape { nodes: usize, values: usize },
    #[error("grid nodes must be finite and strictly increasing")]
    GridOrder,
    #[error("measure weights must be finite and non-negative")]
    NegativeMass,
    #[error("atom evolution needs an atom-only measure")]
    NotAtomic,
    #[error(transparent)]
    Params(#[from] crate::model::ParamError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

/// Density sampled on grid nodes, integrated by the composite trapezoid rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity {
    nodes: Vec<f64>,
    density: Vec<f64>,
}

impl GridDensity {
    pub fn new(nodes: Vec<f64>, density: Vec<f64>) -> Result<Self, ContinuousError> {
        if nodes.len() != density.len() {
            return Err(ContinuousError::GridShape { nodes: nodes.len(), values: density.len() });
        }
        if nodes.iter().any(|x| !x.is_finite()) || nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ContinuousError::GridOrder);
        }
        if density.iter().any(|d| !(d.is_finite() && *d >= 0.0)) {
            return Err(ContinuousError::NegativeMass);
        }
        Ok(Self { nodes, density })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    fn integrate(&self, w: impl Fn(f64) -> f64) -> f64 {
        let vals: Vec<f64> = self.nodes.iter().zip(&self.density).map(|(&x, &d)| w(x) * d).collect();
        self.nodes
            .windows(2)
            .zip(vals.windows(2))
            .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1]))
            .sum()
    }
}

/// Population measure: atoms `(x, w)` plus an optional grid density.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraitMeasure {
    atoms: Vec<(f64, f64)>,
    grid: Option<GridDensity>,
}

impl TraitMeasure {
    pub fn atoms(atoms: Vec<(f64, f64)>) -> Result<Self, ContinuousError> {
        Self::new(atoms, None)
    }

    pub fn new(atoms: Vec<(f64, f64)>, grid: Option<GridDensity>) -> Result<Self, ContinuousError> {
        if atoms.iter().any(|(x, w)| !x.is_finite() || !(w.is_finite() && *w >= 0.0)) {
            return Err(ContinuousError::NegativeMass);
        }
        Ok(Self { atoms, grid })
    }

    pub fn atom_list(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn grid(&self) -> Option<&GridDensity> {
        self.grid.as_ref()
    }

    pub fn is_atomic(&self) -> bool {
        self.grid.is_none()
    }

    /// `<W, n>`: atom sum plus quadrature of `W` against the density.
    pub fn inner(&self, w: impl Fn(f64) -> f64) -> f64 {
        let atoms: f64 = self.atoms.iter().map(|&(x, m)| w(x) * m).sum();
        atoms + self.grid.as_ref().map_or(0.0, |g| g.integrate(&w))
    }

    fn with_weights(&self, w: &[f64]) -> Self {
        Self {
            atoms: self.atoms.iter().zip(w).map(|(&(x, _), &m)| (x, m)).collect(),
            grid: self.grid.clone(),
        }
    }
}

pub type TraitFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type KernelFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Trait-dependent coefficients. `nu(x, z)` is the share of on-site
/// cellobiose made by trait `z` that reaches trait `x`.
#[derive(Clone)]
pub struct TraitFunctions {
    pub a: TraitFn,
    pub b: TraitFn,
    pub q: TraitFn,
    pub theta_p: TraitFn,
    pub gamma: TraitFn,
    pub gamma_n: TraitFn,
    pub mu: TraitFn,
    pub n_bar: TraitFn,
    pub nu: KernelFn,
    pub r: f64,
    pub gamma_rho: f64,
    pub gamma_p: f64,
    pub m_c: f64,
    pub gamma_r_hat: f64,
}

impl fmt::Debug for TraitFunctions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TraitFunctions")
            .field("r", &self.r)
            .field("gamma_rho", &self.gamma_rho)
            .field("gamma_p", &self.gamma_p)
            .field("m_c", &self.m_c)
            .field("gamma_r_hat", &self.gamma_r_hat)
            .finish_non_exhaustive()
    }
}

fn constant(v: f64) -> TraitFn {
    Arc::new(move |_| v)
}

fn lookup(values: Vec<f64>) -> TraitFn {
    Arc::new(move |x| values.get(x.round() as usize).copied().unwrap_or(0.0))
}

impl TraitFunctions {
    /// Coefficients of a discrete multi-trait system, with trait `j` placed
    /// at coordinate `x = j`. Returns the functions and the atom locations.
    pub fn from_mt(p: &MtParams) -> Result<(Self, Vec<f64>), ContinuousError> {
        p.validate()?;
        let v = p.vectors();
        let m = p.traits();
        let nu = p.nu.clone();
        let f = Self {
            a: lookup(v.a),
            b: lookup(v.b),
            q: lookup(v.q),
            theta_p: lookup(p.theta_p.clone()),
            gamma: lookup(p.gamma.clone()),
            gamma_n: lookup(p.gamma_n.clone()),
            mu: lookup(p.mu.clone()),
            n_bar: lookup(p.n_bar.clone()),
            nu: Arc::new(move |x, z| {
                let (i, j) = (x.round() as usize, z.round() as usize);
                nu.get(i).and_then(|row| row.get(j)).copied().unwrap_or(0.0)
            }),
            r: p.r,
            gamma_rho: p.gamma_rho,
            gamma_p: p.gamma_p,
            m_c: p.m_c,
            gamma_r_hat: p.gamma_r_hat(),
        };
        Ok((f, (0..m).map(|j| j as f64).collect()))
    }

    /// Trait-independent coefficients of a single-trait system, full sharing
    /// kernel `nu = 1`.
    pub fn from_t(p: &TParams) -> Result<Self, ContinuousError> {
        p.validate()?;
        let (k1, k2) = (p.k1(), p.k2());
        Ok(Self {
            a: constant(p.alpha / p.m1 * k1),
            b: constant(p.theta_r * p.beta / p.m2 * k2),
            q: constant(p.q_hat() * k2),
            theta_p: constant(p.theta_p),
            gamma: constant(p.gamma),
            gamma_n: constant(p.gamma_n),
            mu: constant(p.mu),
            n_bar: constant(p.n_bar),
            nu: Arc::new(|_, _| 1.0),
            r: p.r,
            gamma_rho: p.gamma_rho,
            gamma_p: p.gamma_p,
            m_c: p.m_c,
            gamma_r_hat: p.gamma_r_hat(),
        })
    }

    /// `tau[n] = <A,n><Q,n>/(gamma_rho m_c) + <A,n> + <B,n> + gamma_r_hat`.
    pub fn tau(&self, n: &TraitMeasure) -> f64 {
        let an = n.inner(|x| (self.a)(x));
        an * n.inner(|x| (self.q)(x)) / (self.gamma_rho * self.m_c)
            + an
            + n.inner(|x| (self.b)(x))
            + self.gamma_r_hat
    }
}

/// Population-level totals that do not depend on the receiving trait.
struct Totals {
    sites: f64,
    gamma_dot_n: f64,
    pool: f64,
}

fn totals(n: &TraitMeasure, f: &TraitFunctions) -> Totals {
    let sink = f.gamma_rho * f.m_c;
    let an = n.inner(|x| (f.a)(x));
    let gamma_dot_n = n.inner(|x| (f.gamma)(x));
    let shared = n.inner(|x| (f.theta_p)(x) * (f.q)(x));
    Totals {
        sites: f.r / sink * an / f.tau(n),
        gamma_dot_n,
        pool: shared / (gamma_dot_n + f.gamma_p),
    }
}

fn birth_at(x: f64, n: &TraitMeasure, f: &TraitFunctions, t: &Totals) -> f64 {
    if t.sites == 0.0 {
        return 0.0;
    }
    let n_bar = (f.n_bar)(x);
    let pool = pool_uptake((f.gamma)(x), n_bar, t.gamma_dot_n, t.pool);
    let onsite = n.inner(|z| {
        let stream = n.inner(|s| (f.nu)(s, z));
        (1.0 - (f.theta_p)(z)) * share_weight((f.nu)(x, z), n_bar, stream) * (f.q)(z)
    });
    (f.mu)(x) * t.sites * (pool + onsite)
}

/// `B[n](x)`.
pub fn cont_birth_rate(x: f64, n: &TraitMeasure, f: &TraitFunctions) -> f64 {
    birth_at(x, n, f, &totals(n, f))
}

/// `B[n]` at each of `xs`, sharing the population totals.
pub fn cont_birth_rates(xs: &[f64], n: &TraitMeasure, f: &TraitFunctions) -> Vec<f64> {
    let t = totals(n, f);
    xs.iter().map(|&x| birth_at(x, n, f, &t)).collect()
}

/// Integrates the atom weights `w_j' = w_j (B[n](x_j) - gamma_n(x_j))` with
/// the atom locations held fixed. States are the weights in atom order.
pub fn evolve_atoms(
    n0: &TraitMeasure,
    f: &TraitFunctions,
    span: [f64; 2],
    ctrl: &StepControl,
) -> Result<Trajectory, ContinuousError> {
    if !n0.is_atomic() {
        return Err(ContinuousError::NotAtomic);
    }
    let xs: Vec<f64> = n0.atoms.iter().map(|a| a.0).collect();
    let w0: Vec<f64> = n0.atoms.iter().map(|a| a.1).collect();
    let death: Vec<f64> = xs.iter().map(|&x| (f.gamma_n)(x)).collect();
    let rhs = |_t: f64, w: &[f64], dw: &mut [f64]| {
        let m = n0.with_weights(w);
        let b = cont_birth_rates(&xs, &m, f);
        for k in 0..w.len() {
            dw[k] = w[k] * (b[k] - death[k]);
        }
    };
    Ok(integrate(rhs, &w0, span, ctrl)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::birth::{t_birth_rate, MtQuasiSteady};

    fn mt() -> MtParams {
        let t = TParams { theta_p: 0.3, ..TParams::default() };
        let mut p = MtParams::replicate(&t, vec![vec![0.5, 0.2, 0.1], vec![0.25, 0.7, 0.3], vec![0.25, 0.1, 0.6]]);
        p.alpha = vec![1.2, 0.8, 1.5];
        p.q = vec![0.9, 1.6, 0.4];
        p.theta_p = vec![0.2, 0.6, 0.9];
        p.gamma = vec![1.5, 0.4, 0.0];
        p.n_bar = vec![2.0, 0.7, 1.1];
        p
    }

    #[test]
    fn inner_basics() {
        let zero = TraitMeasure::default();
        assert_eq!(zero.inner(|x| x + 1.0), 0.0);
        let one = TraitMeasure::atoms(vec![(2.0, 3.0)]).unwrap();
        assert_eq!(one.inner(|x| x * x), 12.0);
        // trapezoid is exact on linear integrands
        let nodes: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let dens = nodes.iter().map(|x| 2.0 * x + 1.0).collect();
        let g = TraitMeasure::new(vec![], Some(GridDensity::new(nodes, dens).unwrap())).unwrap();
        assert!((g.inner(|_| 1.0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn trapezoid_second_order() {
        let err = |k: usize| {
            let nodes: Vec<f64> = (0..=k).map(|j| j as f64 / k as f64).collect();
            let dens = nodes.iter().map(|x| x * x).collect();
            let g = TraitMeasure::new(vec![], Some(GridDensity::new(nodes, dens).unwrap())).unwrap();
            (g.inner(|_| 1.0) - 1.0 / 3.0).abs()
        };
        let ratio = err(20) / err(40);
        assert!((ratio - 4.0).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_measures() {
        assert!(TraitMeasure::atoms(vec![(0.0, -1.0)]).is_err());
        assert!(GridDensity::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(GridDensity::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }

    #[test]
    fn zero_population_no_births() {
        let (f, _) = TraitFunctions::from_mt(&mt()).unwrap();
        assert_eq!(cont_birth_rate(1.0, &TraitMeasure::default(), &f), 0.0);
    }

    #[test]
    fn atoms_reproduce_discrete_traits() {
        let p = mt();
        let q = MtQuasiSteady::new(p.clone()).unwrap();
        let (f, xs) = TraitFunctions::from_mt(&p).unwrap();
        let w = [0.4, 1.3, 2.2];
        let n = TraitMeasure::atoms(xs.iter().copied().zip(w).collect()).unwrap();
        for (i, &x) in xs.iter().enumerate() {
            let want = q.birth_rate(i, &w).unwrap();
            let got = cont_birth_rate(x, &n, &f);
            assert!((got - want).abs() <= 1e-12 * want.abs(), "{got} {want}");
        }
    }

    #[test]
    fn single_atom_is_single_trait() {
        let t = TParams { theta_p: 0.35, gamma: 1.7, n_bar: 0.6, ..TParams::default() };
        let f = TraitFunctions::from_t(&t).unwrap();
        for w in [1e-3, 0.5, 40.0] {
            let n = TraitMeasure::atoms(vec![(0.3, w)]).unwrap();
            let b = cont_birth_rate(0.3, &n, &f);
            assert!((b - t_birth_rate(w, &t)).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn narrow_density_approaches_atom() {
        let t = TParams { theta_p: 0.35, ..TParams::default() };
        let mut f = TraitFunctions::from_t(&t).unwrap();
        f.a = Arc::new(|x| 1.0 + 0.5 * x * x);
        f.q = Arc::new(|x| 1.0 + 0.3 * x.sin());
        let atom = TraitMeasure::atoms(vec![(0.0, 1.5)]).unwrap();
        let want = cont_birth_rate(0.0, &atom, &f);
        let errs: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&s: &f64| {
                let nodes: Vec<f64> = (-400..=400).map(|k| k as f64 * s / 50.0).collect();
                let norm = 1.5 / (s * (2.0 * std::f64::consts::PI).sqrt());
                let dens = nodes.iter().map(|x| norm * (-0.5 * (x / s).powi(2)).exp()).collect();
                let g = TraitMeasure::new(vec![], Some(GridDensity::new(nodes, dens).unwrap())).unwrap();
                (cont_birth_rate(0.0, &g, &f) - want).abs()
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn symmetric_atoms_stay_equal() {
        let t = TParams { theta_p: 0.35, ..TParams::default() };
        let f = TraitFunctions::from_t(&t).unwrap();
        let n0 = TraitMeasure::atoms(vec![(0.0, 0.4), (1.0, 0.4)]).unwrap();
        let traj = evolve_atoms(&n0, &f, [0.0, 10.0], &StepControl::default()).unwrap();
        for y in &traj.states {
            assert_eq!(y[0], y[1]);
            assert!(y[0] > 0.0);
        }
    }

    #[test]
    fn single_atom_follows_population_equation() {
        let t = TParams { theta_p: 0.35, gamma_n: 0.3, ..TParams::default() };
        let f = TraitFunctions::from_t(&t).unwrap();
        let ctrl = StepControl::with_tolerances(1e-10, 1e-12);
        let n0 = TraitMeasure::atoms(vec![(0.0, 0.2)]).unwrap();
        let traj = evolve_atoms(&n0, &f, [0.0, 10.0], &ctrl).unwrap();
        let want = crate::integrator::integrate_sampled(
            |_, y: &[f64], d: &mut [f64]| d[0] = y[0] * (t_birth_rate(y[0], &t) - t.gamma_n),
            &[0.2],
            &traj.times,
            &ctrl,
        )
        .unwrap();
        let got = crate::model::trajectory::sup_relative_error(&traj, &want).unwrap();
        assert!(got < 1e-8, "{got}");
    }

    #[test]
    fn empty_atoms_stay_empty() {
        let (f, _) = TraitFunctions::from_mt(&mt()).unwrap();
        let n0 = TraitMeasure::atoms(vec![(0.0, 0.0), (2.0, 0.0)]).unwrap();
        let traj = evolve_atoms(&n0, &f, [0.0, 5.0], &StepControl::default()).unwrap();
        assert!(traj.states.iter().all(|y| y.iter().all(|&w| w == 0.0)));
    }

    #[test]
    fn grid_measure_rejected_for_evolution() {
        let (f, _) = TraitFunctions::from_mt(&mt()).unwrap();
        let g = GridDensity::new(vec![0.0, 1.0], vec![1.0, 1.0]).unwrap();
        let n0 = TraitMeasure::new(vec![], Some(g)).unwrap();
        assert!(matches!(
            evolve_atoms(&n0, &f, [0.0, 1.0], &StepControl::default()),
            Err(ContinuousError::NotAtomic)
        ));
    }
}
