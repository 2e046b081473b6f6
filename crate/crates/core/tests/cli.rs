use std::path::{Path, PathBuf};
use std::process::Command;

use cellcoop::birth::k_phi_zero;
use cellcoop::cli::{parse_scenario, read_trajectory, Setup};

fn scenarios() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn cellcoop(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cellcoop")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn every_shipped_scenario_runs() {
    let out = tempfile::tempdir().unwrap();
    let pattern = scenarios().join("*.toml");
    let o = cellcoop(&["sweep", pattern.to_str().unwrap(), "--jobs", "3", "--out", out.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for entry in std::fs::read_dir(scenarios()).unwrap() {
        let stem = entry.unwrap().path().file_stem().unwrap().to_owned();
        assert!(out.path().join(stem).join("metadata.json").exists());
    }
}

#[test]
fn birthrate_table_starts_at_quadratic_limit() {
    let out = tempfile::tempdir().unwrap();
    let cfg = scenarios().join("t_birthrate.toml");
    let o = cellcoop(&["run", cfg.to_str().unwrap(), "--out", out.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let diag: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.path().join("diagnostics.json")).unwrap()).unwrap();
    let kphi0 = diag["K_phi0"].as_f64().unwrap();
    let table = std::fs::read_to_string(out.path().join("birthrate.csv")).unwrap();
    let first: Vec<f64> = table.lines().nth(1).unwrap().split(',').map(|s| s.parse().unwrap()).collect();
    assert!((first[2] - kphi0).abs() <= 1e-4 * kphi0);
    let Setup::T { params, .. } = parse_scenario(&cfg).unwrap().setup else { panic!() };
    assert_eq!(kphi0, k_phi_zero(&params));
}

#[test]
fn zero_span_gives_initial_row() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenarios().join("s_simulate.toml"))
        .unwrap()
        .replace("t_span = [0.0, 20.0]", "t_span = [0.0, 0.0]");
    let cfg = write(dir.path(), "zero.toml", &text);
    let out = dir.path().join("out");
    let o = cellcoop(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let (labels, traj) = read_trajectory(&out.join("trajectory.csv")).unwrap();
    assert_eq!(labels, ["e1", "e21", "e22", "S", "rho", "p", "n"]);
    assert_eq!(traj.times, vec![0.0]);
    assert_eq!(traj.states[0], vec![0.0, 0.0, 0.0, 1.0, 5.0, 0.0, 0.05]);
}

#[test]
fn trajectory_round_trip_against_library() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = scenarios().join("s_simulate.toml");
    let o = cellcoop(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--rel-tol", "1e-9"]);
    assert!(o.status.success());
    let (_, from_disk) = read_trajectory(&dir.path().join("trajectory.csv")).unwrap();
    let s = parse_scenario(&cfg).unwrap();
    let Setup::S { params, initial } = s.setup else { panic!() };
    let mut ctrl = s.control.step;
    ctrl.rel_tol = 1e-9;
    let direct = cellcoop::integrator::integrate(
        |_, y: &[f64], d: &mut [f64]| cellcoop::reduced::s_rhs_into(y, d, &params),
        &initial.to_array(),
        s.control.t_span,
        &ctrl,
    )
    .unwrap();
    assert_eq!(from_disk.times, direct.times);
    assert_eq!(from_disk.states, direct.states);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cellcoop(&["run"]).status.code(), Some(2));
    assert_eq!(cellcoop(&["frobnicate"]).status.code(), Some(2));
    let cfg = scenarios().join("s_simulate.toml");
    let o = cellcoop(&["run", cfg.to_str().unwrap(), "--rel-tol", "-1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));

    let missing = dir.path().join("absent.toml");
    assert_eq!(cellcoop(&["run", missing.to_str().unwrap()]).status.code(), Some(1));

    let text = std::fs::read_to_string(&cfg).unwrap().replace("n_bar = 1.0", "");
    let bad = write(dir.path(), "bad.toml", &text);
    let o = cellcoop(&["run", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_bar"));

    // solver error at run time: too few steps for the span
    let text = std::fs::read_to_string(&cfg).unwrap().replace("rel_tol = 1e-8", "rel_tol = 1e-8\nmax_steps = 3");
    let short = write(dir.path(), "short.toml", &text);
    let o = cellcoop(&["run", short.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_reports_failures() {
    let dir = tempfile::tempdir().unwrap();
    let good = std::fs::read_to_string(scenarios().join("t_birthrate.toml")).unwrap();
    write(dir.path(), "a.toml", &good);
    write(dir.path(), "b.toml", "model = \"t\"\n");
    let pattern = dir.path().join("*.toml");
    let out = dir.path().join("out");
    let o = cellcoop(&["sweep", pattern.to_str().unwrap(), "--jobs", "2", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(out.join("a").join("birthrate.csv").exists());
}

#[test]
fn steady_and_reduce_check_records() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenarios().join("t_birthrate.toml"))
        .unwrap()
        .replace("command = \"birthrate\"", "command = \"steady\"");
    let cfg = write(dir.path(), "steady.toml", &text);
    let out = dir.path().join("steady");
    assert!(cellcoop(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.success());
    let rec: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("steady.json")).unwrap()).unwrap();
    assert!(rec["residual"].as_f64().unwrap() <= 1e-5);
    assert!(rec["state"]["n"].as_f64().unwrap() >= 0.0);

    let cfg = scenarios().join("ns_reduce_check.toml");
    let out = dir.path().join("rc");
    assert!(cellcoop(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]).status.success());
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("metadata.json")).unwrap()).unwrap();
    assert!(meta["results"]["max_deviation"].as_f64().unwrap().is_finite());
    let (labels, _) = read_trajectory(&out.join("reduce_check.csv")).unwrap();
    assert_eq!(labels.len(), 14);
}
