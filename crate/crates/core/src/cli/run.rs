//! Executes a parsed scenario and writes its artifacts.

use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::birth::{self, MtQuasiSteady};
use crate::continuous::{cont_birth_rates, evolve_atoms, TraitFunctions, TraitMeasure};
use crate::integrator::{integrate, integrate_sampled, integrate_to_steady, SteadyState};
use crate::model::trajectory::sup_relative_error;
use crate::model::{MtState, NsState, SState, StepStats, TState, Trajectory};
use crate::reduced::{mt_rhs_into, s_rhs_into, t_rhs_into};

use super::output::{write_json, write_table, write_trajectory};
use super::scenario::{Command, Scenario, Setup};
use super::CliError;

/// Files written and one-line findings of a run.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub name: String,
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

struct Ctx<'a> {
    scenario: &'a Scenario,
    report: RunReport,
    stats: Option<StepStats>,
    extra: Map<String, Value>,
}

impl Ctx<'_> {
    fn path(&mut self, file: &str) -> PathBuf {
        let p = self.report.out_dir.join(file);
        self.report.files.push(p.clone());
        p
    }

    fn note(&mut self, line: String) {
        self.report.summary.push(line);
    }
}

fn labels(setup: &Setup) -> Vec<String> {
    match setup {
        Setup::Ns { model, .. } => NsState::labels(model.max_len()),
        Setup::S { .. } => SState::LABELS.iter().map(|s| s.to_string()).collect(),
        Setup::T { .. } => TState::LABELS.iter().map(|s| s.to_string()).collect(),
        Setup::Mt { params, .. } => MtState::labels(params.traits()),
        Setup::Continuous { weights, .. } => (1..=weights.len()).map(|k| format!("w_{k}")).collect(),
    }
}

fn initial_vec(setup: &Setup) -> Vec<f64> {
    match setup {
        Setup::Ns { initial, .. } => initial.to_vec(),
        Setup::S { initial, .. } => initial.to_array().to_vec(),
        Setup::T { initial, .. } => initial.to_array().to_vec(),
        Setup::Mt { initial, .. } => initial.to_vec(),
        Setup::Continuous { weights, .. } => weights.clone(),
    }
}

/// Full derivative of the scenario's model; `None` for the continuous tier.
fn with_rhs<R>(setup: &Setup, f: impl FnOnce(&mut dyn FnMut(f64, &[f64], &mut [f64])) -> R) -> Option<R> {
    match setup {
        Setup::Ns { model, .. } => Some(f(&mut |_, y, dy| model.rhs_into(y, dy))),
        Setup::S { params, .. } => Some(f(&mut |_, y, dy| s_rhs_into(y, dy, params))),
        Setup::T { params, .. } => Some(f(&mut |_, y, dy| t_rhs_into(y, dy, params))),
        Setup::Mt { params, .. } => Some(f(&mut |_, y, dy| mt_rhs_into(y, dy, params))),
        Setup::Continuous { .. } => None,
    }
}

pub fn run_scenario(scenario: &Scenario, out_dir: &Path) -> Result<RunReport, CliError> {
    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io { path: out_dir.to_path_buf(), source })?;
    let mut ctx = Ctx {
        scenario,
        report: RunReport { name: scenario.name.clone(), out_dir: out_dir.to_path_buf(), ..Default::default() },
        stats: None,
        extra: Map::new(),
    };
    match scenario.command {
        Command::Simulate => simulate(&mut ctx)?,
        Command::Steady => steady(&mut ctx)?,
        Command::Birthrate => birthrate(&mut ctx)?,
        Command::ReduceCheck => reduce_check(&mut ctx)?,
        Command::Diagnostics => diagnostics(&mut ctx)?,
    }
    let meta = json!({
        "name": scenario.name,
        "model": scenario.model.to_string(),
        "command": scenario.command.to_string(),
        "params": scenario.params_json,
        "control": scenario.control,
        "stats": ctx.stats,
        "results": ctx.extra,
        "version": env!("CARGO_PKG_VERSION"),
    });
    let path = ctx.path("metadata.json");
    write_json(&path, &meta)?;
    Ok(ctx.report)
}

fn simulate(ctx: &mut Ctx) -> Result<(), CliError> {
    let s = ctx.scenario;
    let y0 = initial_vec(&s.setup);
    let traj = match &s.setup {
        Setup::Continuous { params, weights } => {
            let (f, xs) = TraitFunctions::from_mt(params)?;
            let n0 = TraitMeasure::atoms(xs.into_iter().zip(weights.iter().copied()).collect())?;
            evolve_atoms(&n0, &f, s.control.t_span, &s.control.step)?
        }
        setup => with_rhs(setup, |rhs| integrate(rhs, &y0, s.control.t_span, &s.control.step))
            .expect("discrete tier")?,
    };
    ctx.stats = Some(traj.stats);
    let path = ctx.path("trajectory.csv");
    write_trajectory(&path, &labels(&s.setup), &traj)?;
    ctx.note(format!("{} rows, {} accepted steps", traj.len(), traj.stats.accepted));
    Ok(())
}

fn steady(ctx: &mut Ctx) -> Result<(), CliError> {
    let s = ctx.scenario;
    let y0 = initial_vec(&s.setup);
    let c = &s.control;
    let ss: SteadyState = with_rhs(&s.setup, |rhs| integrate_to_steady(rhs, &y0, &c.step, c.stall_tol, c.t_cap))
        .ok_or(CliError::Unsupported { model: s.model, command: s.command })??;
    ctx.stats = Some(ss.stats);
    let state: Map<String, Value> = labels(&s.setup).into_iter().zip(ss.y.iter().map(|v| json!(v))).collect();
    let record = json!({ "t": ss.t, "residual": ss.residual, "state": state });
    let path = ctx.path("steady.json");
    write_json(&path, &record)?;
    ctx.note(format!("steady at t = {:.6e}, residual {:.3e}", ss.t, ss.residual));
    Ok(())
}

fn t_diagnostics(p: &crate::model::TParams) -> Value {
    let c = birth::P2Coeffs::new(p);
    let k = birth::k_constant(p);
    let kphi0 = birth::k_phi_zero(p);
    let sens = birth::sharing_sensitivity_t(p);
    let threshold = match birth::cooperation_threshold(p) {
        Ok(n) => json!({ "n_star": n, "indicator_at_n_star": birth::cooperation_indicator(n, p) }),
        Err(e) => json!({ "error": e.to_string() }),
    };
    json!({
        "K": k,
        "phi0": birth::phi(0.0, p),
        "K_phi0": kphi0,
        "c0": c.c0,
        "c1": c.c1,
        "c2": c.c2,
        "threshold": threshold,
        "sharing_sensitivity": sens,
        "sharing_sensitivity_sign": sign(sens),
    })
}

fn sign(v: f64) -> i32 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

fn direction(n: &[f64]) -> Vec<f64> {
    if n.iter().any(|&v| v > 0.0) {
        n.to_vec()
    } else {
        vec![1.0; n.len()]
    }
}

fn birthrate(ctx: &mut Ctx) -> Result<(), CliError> {
    let s = ctx.scenario;
    let grid = s.control.grid;
    let (header, rows, diag): (Vec<String>, Vec<Vec<f64>>, Value) = match &s.setup {
        Setup::T { params, .. } => {
            let rows = grid
                .values(params.n_bar)
                .into_iter()
                .map(|n| {
                    let b = birth::t_birth_rate(n, params);
                    vec![n, b, b / (n * n)]
                })
                .collect();
            (vec!["n".into(), "B".into(), "B_over_n2".into()], rows, t_diagnostics(params))
        }
        Setup::Ns { model, .. } => {
            let p = model.params();
            let rows = grid
                .values(p.n_bar)
                .into_iter()
                .map(|n| {
                    let b = birth::ns_birth_rate(n, model)?;
                    Ok(vec![n, b, b / (n * n)])
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            (vec!["n".into(), "B".into(), "B_over_n2".into()], rows, ns_diagnostics(model))
        }
        Setup::Mt { params, initial } => {
            let q = MtQuasiSteady::new(params.clone())?;
            let dir = direction(&initial.n);
            let rows = grid
                .values(1.0)
                .into_iter()
                .map(|sc| {
                    let n: Vec<f64> = dir.iter().map(|d| d * sc).collect();
                    let mut row = vec![sc];
                    row.extend(q.birth_rates(&n)?);
                    Ok(row)
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let mut header = vec!["scale".to_string()];
            header.extend((1..=params.traits()).map(|i| format!("B_{i}")));
            (header, rows, json!({ "direction": dir }))
        }
        Setup::Continuous { params, weights } => {
            let (f, xs) = TraitFunctions::from_mt(params)?;
            let dir = direction(weights);
            let rows = grid
                .values(1.0)
                .into_iter()
                .map(|sc| {
                    let n = TraitMeasure::atoms(xs.iter().zip(&dir).map(|(&x, &d)| (x, d * sc)).collect())?;
                    let mut row = vec![sc];
                    row.extend(cont_birth_rates(&xs, &n, &f));
                    Ok(row)
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            let mut header = vec!["scale".to_string()];
            header.extend((1..=xs.len()).map(|i| format!("B_{i}")));
            (header, rows, json!({ "direction": dir, "atoms": xs }))
        }
        Setup::S { .. } => return Err(CliError::Unsupported { model: s.model, command: s.command }),
    };
    let path = ctx.path("birthrate.csv");
    write_table(&path, &header, &rows)?;
    let path = ctx.path("diagnostics.json");
    write_json(&path, &diag)?;
    ctx.note(format!("{} grid points", rows.len()));
    ctx.extra.insert("diagnostics".into(), diag);
    Ok(())
}

fn ns_diagnostics(model: &crate::ns::NsModel) -> Value {
    let p = model.params();
    let series = birth::ns_series(model);
    let sens = birth::ns_sharing_sensitivity(model);
    let limit = p.mu / p.n_bar * (p.gamma * p.theta_p / p.gamma_p + 1.0 - p.theta_p) * series.p_bar0;
    json!({
        "p_bar0": series.p_bar0,
        "B_over_n2_at_zero": limit,
        "sharing_sensitivity": sens,
        "sharing_sensitivity_sign": sign(sens),
    })
}

fn reduce_check(ctx: &mut Ctx) -> Result<(), CliError> {
    let s = ctx.scenario;
    let Setup::Ns { model, initial } = &s.setup else {
        return Err(CliError::Unsupported { model: s.model, command: s.command });
    };
    let c = &s.control;
    let full = integrate(|_, y: &[f64], dy: &mut [f64]| model.rhs_into(y, dy), &initial.to_vec(), c.t_span, &c.step)?;
    let aggregated = full.map_states(|y| model.reduce_packed(y).to_vec());
    let sp = model.s_params()?;
    let s0 = model.reduce_to_s_state(initial)?;
    let reduced: Trajectory =
        integrate_sampled(|_, y: &[f64], dy: &mut [f64]| s_rhs_into(y, dy, &sp), &s0.to_array(), &full.times, &c.step)?;
    let dev = sup_relative_error(&aggregated, &reduced).expect("common time grid");
    let mut header = vec!["t".to_string()];
    header.extend(SState::LABELS.iter().map(|l| format!("ns_{l}")));
    header.extend(SState::LABELS.iter().map(|l| format!("s_{l}")));
    let rows: Vec<Vec<f64>> = full
        .times
        .iter()
        .zip(aggregated.states.iter().zip(&reduced.states))
        .map(|(t, (a, b))| std::iter::once(*t).chain(a.iter().copied()).chain(b.iter().copied()).collect())
        .collect();
    let path = ctx.path("reduce_check.csv");
    write_table(&path, &header, &rows)?;
    let bound = 10.0 * c.step.rel_tol;
    ctx.stats = Some(full.stats);
    ctx.extra.insert("max_deviation".into(), json!(dev));
    ctx.extra.insert("bound".into(), json!(bound));
    ctx.note(format!(
        "max relative deviation {dev:.3e} ({} 10 x rel_tol = {bound:.1e})",
        if dev <= bound { "within" } else { "exceeds" }
    ));
    Ok(())
}

fn diagnostics(ctx: &mut Ctx) -> Result<(), CliError> {
    let s = ctx.scenario;
    let report = match &s.setup {
        Setup::T { params, .. } => t_diagnostics(params),
        Setup::Ns { model, initial } => {
            let eq = birth::ns_fast_equilibrium(initial.n, model)?;
            let mut d = ns_diagnostics(model);
            let state: Map<String, Value> = NsState::labels(model.max_len())
                .into_iter()
                .zip(eq.state.to_vec().into_iter().map(|v| json!(v)))
                .collect();
            d["fast_equilibrium"] = json!({
                "n": initial.n,
                "residual": eq.residual,
                "iterations": eq.iterations,
                "p_bar": eq.p_bar,
                "state": state,
            });
            d
        }
        Setup::Mt { params, initial } => mt_diagnostics(params, &initial.n)?,
        _ => return Err(CliError::Unsupported { model: s.model, command: s.command }),
    };
    let path = ctx.path("diagnostics.json");
    write_json(&path, &report)?;
    ctx.note("diagnostics written".into());
    ctx.extra.insert("diagnostics".into(), report);
    Ok(())
}

fn mt_diagnostics(params: &crate::model::MtParams, n0: &[f64]) -> Result<Value, CliError> {
    let q = MtQuasiSteady::new(params.clone())?;
    let m = q.traits();
    let mut traits = Vec::with_capacity(m);
    for i in 0..m {
        let hess = q.hessian_at_zero(i)?;
        let h = 1e-9 * params.n_bar[i];
        let mut grad = Vec::with_capacity(m);
        for j in 0..m {
            let mut up = vec![0.0; m];
            let mut dn = vec![0.0; m];
            up[j] = h;
            dn[j] = -h;
            grad.push((q.birth_rate_signed(i, &up)? - q.birth_rate_signed(i, &dn)?) / (2.0 * h));
        }
        let lemma = match q.invader_onsite_derivative(i, n0) {
            Ok(onsite) => json!({ "onsite": onsite, "full": q.self_derivative(i, n0)? }),
            Err(e) => json!({ "skipped": e.to_string() }),
        };
        traits.push(json!({
            "trait": i + 1,
            "gradient_at_zero_fd": grad,
            "hessian_at_zero": hess,
            "invader_derivative": lemma,
        }));
    }
    Ok(json!({ "n0": n0, "traits": traits }))
}
