//! Adaptive Dormand-Prince 5(4) integration with FSAL and proportional step
//! control, plus a relax-to-equilibrium driver.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{StepStats, Trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error("invalid step control: {0}")]
    InvalidControl(String),
    #[error("invalid time span [{t0}, {t1}]")]
    InvalidSpan { t0: f64, t1: f64 },
    #[error("initial state has a non-finite component at index {index}")]
    NonFiniteInitial { index: usize },
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("maximum number of steps ({steps}) exceeded at t = {t}")]
    MaxSteps { t: f64, steps: usize },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("no steady state by t = {t}: residual {residual:e}")]
    NoSteadyState { t: f64, residual: f64 },
}

/// Tolerances and step-size limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            h_init: 1e-4,
            h_min: 1e-14,
            h_max: 1e9,
            max_steps: 1_000_000,
        }
    }
}

impl StepControl {
    pub fn with_tolerances(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), IntegrateError> {
        let bad = |m: &str| Err(IntegrateError::InvalidControl(m.to_string()));
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return bad("rel_tol must be positive");
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return bad("abs_tol must be positive");
        }
        if !(self.h_min > 0.0 && self.h_min <= self.h_init && self.h_init <= self.h_max) {
            return bad("need 0 < h_min <= h_init <= h_max");
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive");
        }
        Ok(())
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FACTOR_MIN: f64 = 0.2;
const FACTOR_MAX: f64 = 5.0;

/// Stepper state shared by the drivers.
struct Dopri<F> {
    rhs: F,
    ctrl: StepControl,
    t: f64,
    h: f64,
    y: Vec<f64>,
    /// `f(t, y)`, carried over from the last stage (FSAL).
    f: Vec<f64>,
    k: [Vec<f64>; 6],
    stage: Vec<f64>,
    y_new: Vec<f64>,
    stats: StepStats,
    steps: usize,
}

impl<F: FnMut(f64, &[f64], &mut [f64])> Dopri<F> {
    fn new(mut rhs: F, t0: f64, y0: &[f64], ctrl: StepControl) -> Result<Self, IntegrateError> {
        ctrl.validate()?;
        if let Some(index) = y0.iter().position(|v| !v.is_finite()) {
            return Err(IntegrateError::NonFiniteInitial { index });
        }
        let n = y0.len();
        let mut f = vec![0.0; n];
        rhs(t0, y0, &mut f);
        let stats = StepStats { rhs_evals: 1, ..StepStats::default() };
        Ok(Self {
            rhs,
            ctrl,
            t: t0,
            h: ctrl.h_init,
            y: y0.to_vec(),
            f,
            k: std::array::from_fn(|_| vec![0.0; n]),
            stage: vec![0.0; n],
            y_new: vec![0.0; n],
            stats,
            steps: 0,
        })
    }

    /// One accepted step, never past `t_end`. On return `t`, `y`, `f` are
    /// advanced.
    fn step(&mut self, t_end: f64) -> Result<(), IntegrateError> {
        loop {
            if self.steps >= self.ctrl.max_steps {
                return Err(IntegrateError::MaxSteps {
                    t: self.t,
                    steps: self.steps,
                });
            }
            self.steps += 1;
            let remaining = t_end - self.t;
            let mut h = self.h.min(self.ctrl.h_max);
            let last = h >= remaining;
            if last {
                h = remaining;
            } else if h < self.ctrl.h_min {
                return Err(IntegrateError::StepUnderflow { t: self.t, h });
            }
            let err = self.attempt(h);
            if !err.is_finite() {
                self.stats.rejected += 1;
                self.h = h * FACTOR_MIN;
                if self.h < self.ctrl.h_min {
                    return Err(IntegrateError::NonFinite { t: self.t });
                }
                continue;
            }
            let factor = if err == 0.0 {
                FACTOR_MAX
            } else {
                (SAFETY * err.powf(-0.2)).clamp(FACTOR_MIN, FACTOR_MAX)
            };
            if err <= 1.0 {
                self.t = if last { t_end } else { self.t + h };
                std::mem::swap(&mut self.y, &mut self.y_new);
                // k[5] now holds f(t + h, y_new)
                std::mem::swap(&mut self.f, &mut self.k[5]);
                self.stats.accepted += 1;
                self.stats.max_error = self.stats.max_error.max(err);
                // a clipped final step says little about the natural size
                if !last {
                    self.h = h * factor;
                }
                return Ok(());
            }
            self.stats.rejected += 1;
            self.h = h * factor.min(1.0);
            if self.h < self.ctrl.h_min {
                return Err(IntegrateError::StepUnderflow { t: self.t, h: self.h });
            }
        }
    }

    /// Computes the trial step of size `h` into `y_new` and returns the
    /// scaled max-norm error estimate. `k[5]` holds `f(t + h, y_new)`.
    fn attempt(&mut self, h: f64) -> f64 {
        let n = self.y.len();
        let t = self.t;
        let y = &self.y;
        let f = &self.f;
        let [k2, k3, k4, k5, k6, k7] = &mut self.k;
        let s = &mut self.stage;
        let rhs = &mut self.rhs;

        for i in 0..n {
            s[i] = y[i] + h * A21 * f[i];
        }
        rhs(t + C2 * h, s, k2);
        for i in 0..n {
            s[i] = y[i] + h * (A31 * f[i] + A32 * k2[i]);
        }
        rhs(t + C3 * h, s, k3);
        for i in 0..n {
            s[i] = y[i] + h * (A41 * f[i] + A42 * k2[i] + A43 * k3[i]);
        }
        rhs(t + C4 * h, s, k4);
        for i in 0..n {
            s[i] = y[i] + h * (A51 * f[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        rhs(t + C5 * h, s, k5);
        for i in 0..n {
            s[i] = y[i]
                + h * (A61 * f[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        rhs(t + h, s, k6);
        let y_new = &mut self.y_new;
        for i in 0..n {
            y_new[i] = y[i]
                + h * (A71 * f[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        rhs(t + h, y_new, k7);
        self.stats.rhs_evals += 6;

        let mut err = 0.0f64;
        for i in 0..n {
            let e = h
                * (E1 * f[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = self.ctrl.abs_tol + self.ctrl.rel_tol * y[i].abs().max(y_new[i].abs());
            let r = e.abs() / scale;
            if !r.is_finite() || !y_new[i].is_finite() {
                return f64::NAN;
            }
            err = err.max(r);
        }
        // k[5] (k7) is f at the trial point
        err
    }
}

/// Integrates `y' = rhs(t, y)` from `t_span[0]` to `t_span[1]`, recording
/// every accepted step. A zero-length span returns the initial point alone.
pub fn integrate<F>(
    rhs: F,
    y0: &[f64],
    t_span: [f64; 2],
    ctrl: &StepControl,
) -> Result<Trajectory, IntegrateError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let [t0, t1] = t_span;
    check_span(t0, t1)?;
    let mut traj = Trajectory::default();
    traj.push(t0, y0);
    if t1 == t0 {
        ctrl.validate()?;
        return Ok(traj);
    }
    let mut st = Dopri::new(rhs, t0, y0, *ctrl)?;
    while st.t < t1 {
        st.step(t1)?;
        traj.push(st.t, &st.y);
    }
    traj.stats = st.stats;
    Ok(traj)
}

/// Integrates through the increasing output times `times`, landing on each
/// exactly and recording only those rows.
pub fn integrate_sampled<F>(
    rhs: F,
    y0: &[f64],
    times: &[f64],
    ctrl: &StepControl,
) -> Result<Trajectory, IntegrateError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let Some((&t0, rest)) = times.split_first() else {
        return Err(IntegrateError::InvalidSpan {
            t0: f64::NAN,
            t1: f64::NAN,
        });
    };
    let mut traj = Trajectory::default();
    traj.push(t0, y0);
    let mut st = Dopri::new(rhs, t0, y0, *ctrl)?;
    for &t in rest {
        check_span(st.t, t)?;
        if t == st.t {
            return Err(IntegrateError::InvalidSpan { t0: st.t, t1: t });
        }
        while st.t < t {
            st.step(t)?;
        }
        traj.push(st.t, &st.y);
    }
    traj.stats = st.stats;
    Ok(traj)
}

fn check_span(t0: f64, t1: f64) -> Result<(), IntegrateError> {
    if !(t0.is_finite() && t1.is_finite() && t1 >= t0) {
        return Err(IntegrateError::InvalidSpan { t0, t1 });
    }
    Ok(())
}

/// Result of relaxing a system to rest.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub t: f64,
    pub y: Vec<f64>,
    /// `||rhs(y)||_inf` at the returned state.
    pub residual: f64,
    pub stats: StepStats,
}

/// Integrates from `t = 0` until `||rhs(y)||_inf <= stall_tol (1 + ||y||_inf)`
/// or `t_cap` is reached.
pub fn integrate_to_steady<F>(
    rhs: F,
    y0: &[f64],
    ctrl: &StepControl,
    stall_tol: f64,
    t_cap: f64,
) -> Result<SteadyState, IntegrateError>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    check_span(0.0, t_cap)?;
    let mut st = Dopri::new(rhs, 0.0, y0, *ctrl)?;
    let stalled = |y: &[f64], f: &[f64]| {
        let fy = inf_norm(f);
        (fy <= stall_tol * (1.0 + inf_norm(y)), fy)
    };
    loop {
        let (done, residual) = stalled(&st.y, &st.f);
        if done {
            return Ok(SteadyState {
                t: st.t,
                y: st.y,
                residual,
                stats: st.stats,
            });
        }
        if st.t >= t_cap {
            return Err(IntegrateError::NoSteadyState { t: st.t, residual });
        }
        st.step(t_cap)?;
    }
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(_t: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = -y[0];
    }

    #[test]
    fn zero_rhs_constant() {
        let y0 = [1.5, -2.0, 0.0];
        let tr = integrate(
            |_, _, d: &mut [f64]| d.fill(0.0),
            &y0,
            [0.0, 3.0],
            &StepControl::default(),
        )
        .unwrap();
        assert!(tr.states.iter().all(|y| y == &y0));
        assert_eq!(tr.last().unwrap().0, 3.0);
    }

    #[test]
    fn exponential_decay_endpoint() {
        for rel in [1e-6, 1e-8, 1e-10] {
            let ctrl = StepControl::with_tolerances(rel, rel * 1e-3);
            let tr = integrate(decay, &[1.0], [0.0, 1.0], &ctrl).unwrap();
            let (t, y) = tr.last().unwrap();
            assert_eq!(t, 1.0);
            assert!((y[0] - (-1.0f64).exp()).abs() <= 10.0 * rel, "rel {rel}");
        }
    }

    #[test]
    fn times_strictly_increase_and_end_exactly() {
        let ctrl = StepControl::with_tolerances(1e-9, 1e-12);
        let tr = integrate(
            |t, y: &[f64], d: &mut [f64]| {
                d[0] = y[1];
                d[1] = -y[0] + 0.1 * t.sin();
            },
            &[1.0, 0.0],
            [0.0, 7.3],
            &ctrl,
        )
        .unwrap();
        assert!(tr.times.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*tr.times.last().unwrap(), 7.3);
        assert!(tr.stats.max_error <= 1.0);
    }

    #[test]
    fn zero_span_single_point() {
        let tr = integrate(decay, &[2.0], [0.0, 0.0], &StepControl::default()).unwrap();
        assert_eq!(tr.times, vec![0.0]);
        assert_eq!(tr.states, vec![vec![2.0]]);
    }

    #[test]
    fn reversed_span_rejected() {
        assert!(matches!(
            integrate(decay, &[1.0], [1.0, 0.0], &StepControl::default()),
            Err(IntegrateError::InvalidSpan { .. })
        ));
    }

    #[test]
    fn sampled_hits_requested_times() {
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.3).collect();
        let ctrl = StepControl::with_tolerances(1e-10, 1e-14);
        let tr = integrate_sampled(decay, &[1.0], &times, &ctrl).unwrap();
        assert_eq!(tr.times, times);
        for (t, y) in tr.times.iter().zip(&tr.states) {
            assert!((y[0] - (-t).exp()).abs() < 1e-9);
        }
    }

    #[test]
    fn empirical_order_at_least_four() {
        // error ~ tol^(p/(p+1)) for a tolerance-driven order-p method, so
        // shrinking tol 1000x should cut the error by well over 100x
        let err = |rel: f64| {
            let ctrl = StepControl {
                h_init: 1e-3,
                ..StepControl::with_tolerances(rel, 1e-20)
            };
            let tr = integrate(decay, &[1.0], [0.0, 5.0], &ctrl).unwrap();
            (tr.last().unwrap().1[0] - (-5.0f64).exp()).abs()
        };
        let coarse = err(1e-5);
        let fine = err(1e-8);
        assert!(fine > 0.0 && coarse / fine > 100.0, "{coarse} {fine}");
        // same inputs, same bits
        assert_eq!(err(1e-7).to_bits(), err(1e-7).to_bits());
    }

    #[test]
    fn steady_relaxation_finds_attractor() {
        let c = [3.0, -1.0];
        let ss = integrate_to_steady(
            |_, y: &[f64], d: &mut [f64]| {
                for i in 0..2 {
                    d[i] = -(y[i] - c[i]);
                }
            },
            &[0.0, 0.0],
            &StepControl::with_tolerances(1e-12, 1e-14),
            1e-9,
            1e3,
        )
        .unwrap();
        assert!((ss.y[0] - 3.0).abs() < 1e-8 && (ss.y[1] + 1.0).abs() < 1e-8);
    }

    #[test]
    fn steady_without_equilibrium_hits_cap() {
        let err = integrate_to_steady(
            |_, _, d: &mut [f64]| d[0] = 1.0,
            &[0.0],
            &StepControl::default(),
            1e-10,
            50.0,
        )
        .unwrap_err();
        assert!(matches!(err, IntegrateError::NoSteadyState { t, .. } if t == 50.0));
    }

    #[test]
    fn blow_up_reported() {
        let ctrl = StepControl {
            max_steps: 10_000,
            ..StepControl::default()
        };
        let err = integrate(
            |_, y: &[f64], d: &mut [f64]| d[0] = y[0] * y[0],
            &[1.0],
            [0.0, 2.0],
            &ctrl,
        )
        .unwrap_err();
        assert!(matches!(
            err,
            IntegrateError::StepUnderflow { .. }
                | IntegrateError::MaxSteps { .. }
                | IntegrateError::NonFinite { .. }
        ));
    }
}
