use std::fs;
use std::process::Command;

use maxreg_lab::config::Scalars;
use maxreg_lab::record::Table;
use maxreg_lab::{
    load_config, parse_config, run_experiment, write_results, ExperimentConfig, ExperimentKind, Status,
};
use proptest::prelude::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_maxreg-lab"))
}

fn small_nlhe() -> ExperimentConfig {
    let mut c = ExperimentConfig::new(ExperimentKind::NlheExist);
    c.grid.points = Some(16);
    c.time.nodes = Some(65);
    c.pde.eta_grid = Some(vec![0.01, 0.1, 30.0]);
    c.sampling.lipschitz_pairs = Some(4);
    c
}

#[test]
fn minimal_config_gets_defaults() {
    let c = parse_config("experiment = \"scaling\"\n").unwrap();
    assert_eq!(c.grid.points, Some(64));
    assert_eq!(c.time.nodes, Some(256));
    assert_eq!(c.pde.q, Some(4.0));
    assert_eq!(c.tolerance("invariance"), 1e-6);
}

#[test]
fn small_weight_exponent_is_rejected_by_name() {
    let err = parse_config("experiment = \"weighted\"\n[pde]\np = 2.0\nmu = 0.1\n").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("pde.mu") && msg.contains("μ must exceed 1/p"), "{msg}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn load_serialize_load_is_idempotent(
        seed in any::<u64>(),
        points in prop::sample::select(vec![8usize, 16, 32, 64]),
        nodes in 16usize..512,
        horizon in 0.1f64..4.0,
        p in 1.1f64..8.0,
    ) {
        let text = format!(
            "experiment = \"desimon\"\nrng_seed = {seed}\n[grid]\npoints = {points}\n\
             [time]\nnodes = {nodes}\nhorizon = {horizon}\n[pde]\np = {p}\n"
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, text).unwrap();
        let once = load_config(&path).unwrap();
        fs::write(&path, once.to_toml()).unwrap();
        let twice = load_config(&path).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(once.to_toml(), twice.to_toml());
    }
}

#[test]
fn lipschitz_at_two_passes() {
    let mut c = ExperimentConfig::new(ExperimentKind::Lipschitz);
    c.pde.nu = Some(Scalars::One(2.0));
    c.sampling.samples = Some(20_000);
    let rec = run_experiment(&c);
    assert_eq!(rec.status, Status::Pass, "{:?}", rec.diagnostics);
    assert!(rec.metric("max_violation_nu2").unwrap() <= 0.0);
}

#[test]
fn same_seed_same_metrics() {
    let mut c = ExperimentConfig::new(ExperimentKind::Desimon);
    c.grid.points = Some(16);
    c.time.nodes = Some(64);
    c.sampling.ensemble = Some(4);
    c.rng_seed = 11;
    let (a, b) = (run_experiment(&c), run_experiment(&c));
    assert_eq!(a.metrics, b.metrics);
    assert_eq!(a.tables, b.tables);
    assert_eq!(a.tables[0].rows, b.tables[0].rows);
}

#[test]
fn empty_ensemble_is_degenerate() {
    let mut c = ExperimentConfig::new(ExperimentKind::Maxreg);
    c.sampling.ensemble = Some(0);
    let rec = run_experiment(&c);
    assert_eq!(rec.status, Status::Fail);
    assert!(rec.diagnostics.iter().any(|d| d.contains("degenerate ensemble")), "{:?}", rec.diagnostics);
}

#[test]
fn empty_series_writes_only_the_record() {
    let mut rec = run_experiment(&parse_config("experiment = \"scaling\"\n").unwrap());
    rec.tables = vec![Table::new("lambdas", &["lambda"])];
    let dir = tempfile::tempdir().unwrap();
    let paths = write_results(&rec, dir.path()).unwrap();
    assert_eq!(paths, vec![dir.path().join("scaling.json")]);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&paths[0]).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["experiment"], "scaling");
    assert_eq!(json["status"], "pass");
}

#[test]
fn eta_sweep_table_schema_and_rerun() {
    let c = small_nlhe();
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        write_results(&run_experiment(&c), d.path()).unwrap();
    }
    let sweep = fs::read_to_string(dirs[0].path().join("nlhe-exist_eta_sweep.csv")).unwrap();
    assert_eq!(sweep.lines().next(), Some("eta,converged,final_norm,residual,contraction_rate"));
    assert_eq!(sweep.lines().count(), 4);
    for name in ["nlhe-exist_eta_sweep.csv", "nlhe-exist_certificates.csv", "nlhe-exist_iterates.csv"] {
        let a = fs::read(dirs[0].path().join(name)).unwrap();
        let b = fs::read(dirs[1].path().join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.toml");
    fs::write(&good, "experiment = \"scaling\"\n").unwrap();
    let out = bin().args(["run"]).arg(&good).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("scaling.json").exists());

    // a non-critical tuple fails the scaling predicate
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "experiment = \"scaling\"\n[pde]\np = 3.0\nq = 3.0\n").unwrap();
    let out = bin().arg("run").arg(&bad).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let invalid = dir.path().join("invalid.toml");
    fs::write(&invalid, "experiment = \"weighted\"\n[pde]\nmu = 0.1\n").unwrap();
    let out = bin().arg("validate").arg(&invalid).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("μ must exceed 1/p"));

    let out = bin().arg("validate").arg(&good).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("[tolerances]"));

    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(3));
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
    let out = bin().arg("list-experiments").output().unwrap();
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 12);
}
