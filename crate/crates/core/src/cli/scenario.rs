//! Scenario files: one TOML document naming a model tier, a command, the
//! parameter record, the initial state and solver control.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::integrator::StepControl;
use crate::model::{
    ChainTable, MtParams, MtState, NsParams, NsState, ParamError, SParams, SState, SiteTable, TParams, TState,
    TriTable, Validate,
};
use crate::ns::NsModel;

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Ns,
    S,
    T,
    Mt,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Steady,
    Birthrate,
    ReduceCheck,
    Diagnostics,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ModelKind::Ns => "ns",
            ModelKind::S => "s",
            ModelKind::T => "t",
            ModelKind::Mt => "mt",
            ModelKind::Continuous => "continuous",
        };
        f.write_str(s)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Simulate => "simulate",
            Command::Steady => "steady",
            Command::Birthrate => "birthrate",
            Command::ReduceCheck => "reduce-check",
            Command::Diagnostics => "diagnostics",
        };
        f.write_str(s)
    }
}

/// Validated parameters and initial state of one model tier.
#[derive(Debug, Clone)]
pub enum Setup {
    Ns { model: Box<NsModel>, initial: NsState },
    S { params: SParams, initial: SState },
    T { params: TParams, initial: TState },
    Mt { params: MtParams, initial: MtState },
    Continuous { params: MtParams, weights: Vec<f64> },
}

/// Log-spaced population grid `[min, max] * n_bar` for birth-rate tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self, scale: f64) -> Vec<f64> {
        let ratio = self.max / self.min;
        let k = self.points.max(2) - 1;
        (0..=k).map(|j| scale * self.min * ratio.powf(j as f64 / k as f64)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Control {
    pub t_span: [f64; 2],
    pub step: StepControl,
    pub stall_tol: f64,
    pub t_cap: f64,
    pub grid: Grid,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub model: ModelKind,
    pub command: Command,
    pub setup: Setup,
    pub control: Control,
    pub out_dir: Option<PathBuf>,
    /// Parameter record as written to the metadata sidecar.
    pub params_json: serde_json::Value,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    name: Option<String>,
    model: ModelKind,
    command: Command,
    params: toml::Value,
    initial: Option<toml::Value>,
    #[serde(default)]
    control: RawControl,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawControl {
    t_span: Option<[f64; 2]>,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    h_init: Option<f64>,
    h_min: Option<f64>,
    h_max: Option<f64>,
    max_steps: Option<usize>,
    stall_tol: Option<f64>,
    t_cap: Option<f64>,
    grid_min: Option<f64>,
    grid_max: Option<f64>,
    grid_points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

/// A per-`(l, i)` table: one value everywhere, or a default with overrides.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum TableSpec {
    Scalar(f64),
    Overridden(TableOverrides),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableOverrides {
    default: f64,
    #[serde(default)]
    overrides: Vec<Entry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    l: usize,
    i: usize,
    value: f64,
}

impl TableSpec {
    fn build<const F: usize>(&self, field: &str, len: usize) -> Result<TriTable<F>, CliError> {
        match self {
            TableSpec::Scalar(v) => Ok(TriTable::uniform(len, *v)),
            TableSpec::Overridden(s) => {
                let mut t = TriTable::uniform(len, s.default);
                for e in &s.overrides {
                    if !t.index_set().contains(e.l, e.i) {
                        return Err(CliError::Scenario(format!(
                            "{field}: override ({}, {}) outside the index set for L = {len}",
                            e.l, e.i
                        )));
                    }
                    t.set(e.l, e.i, e.value);
                }
                Ok(t)
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum InfluxSpec {
    Scalar(f64),
    List(Vec<f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNsParams {
    max_len: usize,
    b1: f64,
    d1: f64,
    b2: f64,
    d21: f64,
    beta: TableSpec,
    sigma: TableSpec,
    gamma_r: TableSpec,
    d22: TableSpec,
    alpha: TableSpec,
    q: TableSpec,
    gamma_rho: TableSpec,
    influx: InfluxSpec,
    m1: f64,
    m2: f64,
    m_c: f64,
    theta_r: f64,
    theta_p: f64,
    gamma: f64,
    gamma_p: f64,
    gamma_n: f64,
    mu: f64,
    n_bar: f64,
}

impl RawNsParams {
    fn build(self) -> Result<NsParams, CliError> {
        let len = self.max_len;
        if len == 0 {
            return Err(CliError::Params(ParamError::EmptyIndexSet));
        }
        let influx = match self.influx {
            InfluxSpec::Scalar(v) => vec![v; len],
            InfluxSpec::List(v) if v.len() == len => v,
            InfluxSpec::List(v) => {
                return Err(CliError::Params(ParamError::Dimension {
                    field: "influx".into(),
                    expected: len,
                    got: v.len(),
                }))
            }
        };
        Ok(NsParams {
            max_len: len,
            b1: self.b1,
            d1: self.d1,
            b2: self.b2,
            d21: self.d21,
            beta: self.beta.build("beta", len)?,
            sigma: self.sigma.build("sigma", len)?,
            gamma_r: self.gamma_r.build("gamma_r", len)?,
            d22: self.d22.build("d22", len)?,
            alpha: self.alpha.build("alpha", len)?,
            q: self.q.build("q", len)?,
            gamma_rho: self.gamma_rho.build("gamma_rho", len)?,
            influx,
            m1: self.m1,
            m2: self.m2,
            m_c: self.m_c,
            theta_r: self.theta_r,
            theta_p: self.theta_p,
            gamma: self.gamma,
            gamma_p: self.gamma_p,
            gamma_n: self.gamma_n,
            mu: self.mu,
            n_bar: self.n_bar,
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNsInitial {
    #[serde(default)]
    chains: Option<TableSpec>,
    #[serde(default)]
    e22: Option<TableSpec>,
    #[serde(default)]
    e1: f64,
    #[serde(default)]
    e21: f64,
    #[serde(default)]
    p: f64,
    n: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSInitial {
    e1: f64,
    e21: f64,
    e22: f64,
    #[serde(rename = "S")]
    s: f64,
    rho: f64,
    p: f64,
    n: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTInitial {
    e1: f64,
    e2: f64,
    #[serde(rename = "T")]
    t: f64,
    rho: f64,
    p: f64,
    n: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMtInitial {
    e1: Vec<f64>,
    e2: Vec<f64>,
    #[serde(rename = "T")]
    t: f64,
    rho: f64,
    p: f64,
    n: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawContinuousInitial {
    weights: Vec<f64>,
}

fn section<T: serde::de::DeserializeOwned>(name: &str, v: toml::Value) -> Result<T, CliError> {
    v.try_into().map_err(|e: toml::de::Error| CliError::Scenario(format!("[{name}]: {}", e.message())))
}

fn initial<T: serde::de::DeserializeOwned>(v: Option<toml::Value>) -> Result<T, CliError> {
    section("initial", v.ok_or_else(|| CliError::Scenario("missing section [initial]".into()))?)
}

fn check_finite(field: &str, values: &[f64]) -> Result<(), CliError> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Scenario(format!("initial state: {field} must be finite")));
    }
    Ok(())
}

fn json<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

/// Parses TOML text; `origin` names the source in error messages and
/// supplies the default scenario name.
pub fn parse_scenario_str(text: &str, origin: &str) -> Result<Scenario, CliError> {
    let raw: RawScenario = toml::from_str(text).map_err(|e| CliError::Parse {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    let (setup, params_json) = build_setup(raw.model, raw.params, raw.initial)?;
    let control = build_control(&raw.control)?;
    let name = raw.name.unwrap_or_else(|| {
        Path::new(origin).file_stem().map_or_else(|| "scenario".into(), |s| s.to_string_lossy().into_owned())
    });
    let scenario = Scenario {
        name,
        model: raw.model,
        command: raw.command,
        setup,
        control,
        out_dir: raw.output.dir,
        params_json,
    };
    check_command(&scenario)?;
    Ok(scenario)
}

pub fn parse_scenario(path: &Path) -> Result<Scenario, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario_str(&text, &path.display().to_string())
}

fn build_setup(
    model: ModelKind,
    params: toml::Value,
    init: Option<toml::Value>,
) -> Result<(Setup, serde_json::Value), CliError> {
    Ok(match model {
        ModelKind::Ns => {
            let p = section::<RawNsParams>("params", params)?.build()?;
            let len = p.max_len;
            let json = json(&p);
            let model = NsModel::new(p)?;
            let r: RawNsInitial = initial(init)?;
            let initial = NsState {
                chains: r.chains.map_or(Ok(ChainTable::zeros(len)), |t| t.build("chains", len))?,
                e1: r.e1,
                e21: r.e21,
                e22: r.e22.map_or(Ok(SiteTable::zeros(len)), |t| t.build("e22", len))?,
                p: r.p,
                n: r.n,
            };
            check_finite("state", &initial.to_vec())?;
            (Setup::Ns { model: Box::new(model), initial }, json)
        }
        ModelKind::S => {
            let params: SParams = section("params", params)?;
            params.validate()?;
            let r: RawSInitial = initial(init)?;
            let initial = SState { e1: r.e1, e21: r.e21, e22: r.e22, s: r.s, rho: r.rho, p: r.p, n: r.n };
            check_finite("state", &initial.to_array())?;
            let json = json(&params);
            (Setup::S { params, initial }, json)
        }
        ModelKind::T => {
            let params: TParams = section("params", params)?;
            params.validate()?;
            let r: RawTInitial = initial(init)?;
            let initial = TState { e1: r.e1, e2: r.e2, t: r.t, rho: r.rho, p: r.p, n: r.n };
            check_finite("state", &initial.to_array())?;
            let json = json(&params);
            (Setup::T { params, initial }, json)
        }
        ModelKind::Mt => {
            let params: MtParams = section("params", params)?;
            params.validate()?;
            let r: RawMtInitial = initial(init)?;
            let m = params.traits();
            for (field, v) in [("e1", &r.e1), ("e2", &r.e2), ("n", &r.n)] {
                if v.len() != m {
                    return Err(CliError::Params(ParamError::Dimension {
                        field: format!("initial.{field}"),
                        expected: m,
                        got: v.len(),
                    }));
                }
            }
            let initial = MtState { e1: r.e1, e2: r.e2, t: r.t, rho: r.rho, p: r.p, n: r.n };
            check_finite("state", &initial.to_vec())?;
            let json = json(&params);
            (Setup::Mt { params, initial }, json)
        }
        ModelKind::Continuous => {
            let params: MtParams = section("params", params)?;
            params.validate()?;
            let r: RawContinuousInitial = initial(init)?;
            if r.weights.len() != params.traits() {
                return Err(CliError::Params(ParamError::Dimension {
                    field: "initial.weights".into(),
                    expected: params.traits(),
                    got: r.weights.len(),
                }));
            }
            if r.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                return Err(CliError::Scenario("initial.weights must be finite and non-negative".into()));
            }
            let json = json(&params);
            (Setup::Continuous { params, weights: r.weights }, json)
        }
    })
}

fn build_control(raw: &RawControl) -> Result<Control, CliError> {
    let d = StepControl::default();
    let step = StepControl {
        rel_tol: raw.rel_tol.unwrap_or(d.rel_tol),
        abs_tol: raw.abs_tol.unwrap_or(d.abs_tol),
        h_init: raw.h_init.unwrap_or(d.h_init),
        h_min: raw.h_min.unwrap_or(d.h_min),
        h_max: raw.h_max.unwrap_or(d.h_max),
        max_steps: raw.max_steps.unwrap_or(d.max_steps),
    };
    step.validate()?;
    let t_span = raw.t_span.unwrap_or([0.0, 10.0]);
    if !t_span.iter().all(|t| t.is_finite()) || t_span[1] < t_span[0] {
        return Err(CliError::Scenario(format!("control.t_span {t_span:?} must be finite and ordered")));
    }
    let grid = Grid {
        min: raw.grid_min.unwrap_or(1e-6),
        max: raw.grid_max.unwrap_or(1e3),
        points: raw.grid_points.unwrap_or(40),
    };
    if !(grid.min > 0.0 && grid.max > grid.min && grid.max.is_finite() && grid.points >= 2) {
        return Err(CliError::Scenario(
            "control grid needs 0 < grid_min < grid_max and grid_points >= 2".into(),
        ));
    }
    let stall_tol = raw.stall_tol.unwrap_or(1e-6);
    let t_cap = raw.t_cap.unwrap_or(1e6);
    if !(stall_tol > 0.0 && t_cap > 0.0) {
        return Err(CliError::Scenario("control.stall_tol and control.t_cap must be positive".into()));
    }
    Ok(Control { t_span, step, stall_tol, t_cap, grid })
}

fn check_command(s: &Scenario) -> Result<(), CliError> {
    use Command::*;
    use ModelKind::*;
    let ok = match s.command {
        Simulate | Birthrate => true,
        Steady => s.model != Continuous,
        ReduceCheck => s.model == Ns,
        Diagnostics => matches!(s.model, T | Mt | Ns),
    };
    if ok {
        Ok(())
    } else {
        Err(CliError::Unsupported { model: s.model, command: s.command })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const T_MIN: &str = r#"
model = "t"
command = "simulate"
[params]
b1 = 1.0
d1 = 1.0
b2 = 1.0
d2 = 1.0
alpha = 1.0
beta = 1.0
q = 1.0
theta_r = 1.0
theta_p = 1.0
gamma_r = 1.0
gamma_rho = 1.0
gamma = 1.0
gamma_p = 1.0
gamma_n = 1.0
mu = 1.0
m1 = 1.0
m2 = 1.0
m_c = 1.0
r = 1.0
n_bar = 1.0
[initial]
e1 = 0.0
e2 = 0.0
T = 0.0
rho = 1.0
p = 0.0
n = 0.1
"#;

    #[test]
    fn minimal_t_scenario() {
        let s = parse_scenario_str(T_MIN, "minimal.toml").unwrap();
        assert_eq!(s.model, ModelKind::T);
        assert_eq!(s.command, Command::Simulate);
        assert_eq!(s.name, "minimal");
        assert_eq!(s.control.t_span, [0.0, 10.0]);
        assert!(matches!(s.setup, Setup::T { .. }));
    }

    #[test]
    fn missing_key_is_named() {
        let text = T_MIN.replace("n_bar = 1.0\n", "");
        let err = parse_scenario_str(&text, "x.toml").unwrap_err().to_string();
        assert!(err.contains("n_bar"), "{err}");
    }

    #[test]
    fn unknown_key_rejected_with_location() {
        let text = T_MIN.replace("model = \"t\"", "model = \"t\"\nmodle = 1");
        let err = parse_scenario_str(&text, "x.toml").unwrap_err().to_string();
        assert!(err.contains("modle") && err.contains("line"), "{err}");
    }

    #[test]
    fn validation_forwarded() {
        let text = T_MIN.replace("theta_p = 1.0", "theta_p = 1.5");
        let err = parse_scenario_str(&text, "x.toml").unwrap_err().to_string();
        assert!(err.contains("theta_p"), "{err}");
    }

    #[test]
    fn unsupported_pair_rejected() {
        let text = T_MIN.replace("simulate", "reduce-check");
        assert!(matches!(
            parse_scenario_str(&text, "x.toml"),
            Err(CliError::Unsupported { .. })
        ));
    }

    #[test]
    fn mt_three_traits_vectors() {
        let text = r#"
model = "mt"
command = "diagnostics"
[params]
b1 = [1.0, 2.0, 1.0]
d1 = [1.0, 1.0, 2.0]
b2 = [1.0, 1.0, 1.0]
d2 = [1.0, 0.5, 1.0]
alpha = [1.0, 1.0, 3.0]
beta = [1.0, 2.0, 1.0]
q = [1.0, 1.0, 2.0]
theta_r = [0.5, 0.5, 0.5]
theta_p = [0.5, 0.0, 1.0]
gamma = [1.0, 2.0, 3.0]
gamma_n = [1.0, 1.0, 1.0]
mu = [1.0, 1.0, 1.0]
m1 = [1.0, 2.0, 1.0]
m2 = [1.0, 1.0, 1.0]
n_bar = [1.0, 1.0, 1.0]
gamma_r = 1.0
gamma_rho = 1.0
gamma_p = 1.0
r = 1.0
m_c = 2.0
nu = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
[initial]
e1 = [0.0, 0.0, 0.0]
e2 = [0.0, 0.0, 0.0]
T = 0.0
rho = 1.0
p = 0.0
n = [0.1, 0.2, 0.3]
"#;
        let s = parse_scenario_str(text, "mt.toml").unwrap();
        let Setup::Mt { params, .. } = &s.setup else { panic!() };
        let v = params.vectors();
        // A_j = alpha_j / m1_j * b1_j / d1_j
        assert_eq!(v.a, vec![1.0, 1.0, 1.5]);
        // B_j = theta_r_j beta_j / m2_j * b2_j / d2_j
        assert_eq!(v.b, vec![0.5, 2.0, 0.5]);
        // Q_j = m_c q_j beta_j / m2_j * k2_j
        assert_eq!(v.q, vec![2.0, 8.0, 4.0]);
        assert_eq!(v.theta, vec![1.0, 0.0, 4.0]);
        assert_eq!(v.gamma, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn ns_table_overrides() {
        let text = r#"
model = "ns"
command = "simulate"
[params]
max_len = 2
b1 = 1.0
d1 = 1.0
b2 = 1.0
d21 = 1.0
beta = 1.0
sigma = 1.0
gamma_r = 1.0
d22 = 1.0
alpha = { default = 1.0, overrides = [{ l = 2, i = 1, value = 3.0 }] }
q = 1.0
gamma_rho = 1.0
influx = [1.0, 0.5]
m1 = 1.0
m2 = 1.0
m_c = 1.0
theta_r = 0.5
theta_p = 0.5
gamma = 1.0
gamma_p = 1.0
gamma_n = 1.0
mu = 1.0
n_bar = 1.0
[initial]
chains = { default = 0.0, overrides = [{ l = 1, i = 0, value = 2.0 }] }
n = 0.1
"#;
        let s = parse_scenario_str(text, "ns.toml").unwrap();
        let Setup::Ns { model, initial } = &s.setup else { panic!() };
        assert_eq!(model.params().alpha.get(2, 1), 3.0);
        assert_eq!(model.params().alpha.get(2, 0), 1.0);
        assert_eq!(initial.chains.get(1, 0), 2.0);
        let bad = text.replace("l = 2, i = 1", "l = 2, i = 3");
        assert!(parse_scenario_str(&bad, "ns.toml").unwrap_err().to_string().contains("outside"));
    }
}
