//! Desk-scale acceptance run: one line per criterion, nonzero exit on any failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use maxreg_core::picard::{run_picard, PicardOptions};
use maxreg_core::FixedPointProblem;
use maxreg_lab::config::Scalars;
use maxreg_lab::{
    run_experiment, run_experiment_with_threads, write_results, ExperimentConfig, ExperimentKind, ResultRecord,
};

struct Suite {
    lines: Vec<(usize, bool, String)>,
}

impl Suite {
    fn record(&mut self, id: usize, title: &str, pass: bool, detail: String) {
        println!("[{}] {id:>2} {title}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((id, pass, detail));
    }
}

fn run(kind: ExperimentKind, edit: impl FnOnce(&mut ExperimentConfig)) -> ResultRecord {
    let mut cfg = ExperimentConfig::new(kind);
    edit(&mut cfg);
    let start = Instant::now();
    let rec = run_experiment(&cfg);
    eprintln!("  {kind}: {:?} in {:.1}s", rec.status, start.elapsed().as_secs_f64());
    for d in &rec.diagnostics {
        eprintln!("    {d}");
    }
    rec
}

fn m(rec: &ResultRecord, key: &str) -> f64 {
    rec.metric(key).unwrap_or(f64::NAN)
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", ")
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
        .map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap()))
        .collect()
}

fn main() -> ExitCode {
    let mut s = Suite { lines: Vec::new() };

    let rec = run(ExperimentKind::Desimon, |_| {});
    let (ratio, sup) = (m(&rec, "max_ratio"), m(&rec, "multiplier_sup"));
    s.record(
        1,
        "De Simon bound",
        ratio <= 1.05 && (0.99..=1.0).contains(&sup),
        format!("max ‖Au‖/‖f‖ = {ratio:.6}, symbol sup = {sup}"),
    );

    let rec = run(ExperimentKind::Maxreg, |_| {});
    let changes: Vec<f64> = [1.5, 2.0, 4.0].iter().map(|p| m(&rec, &format!("refinement_change_p{p}"))).collect();
    let finite = [1.5, 2.0, 4.0].iter().all(|p| m(&rec, &format!("c_estimate_p{p}")).is_finite());
    s.record(
        2,
        "maximal regularity stability",
        finite && changes.iter().all(|&c| c < 0.05),
        format!("refinement changes {} at p = 1.5, 2, 4", sci(&changes)),
    );

    let rec = run(ExperimentKind::Resolvent, |_| {});
    let (dev, bound) = (m(&rec, "deviation_max"), m(&rec, "bound_max"));
    s.record(
        3,
        "resolvent reconstruction",
        dev < 1e-6 && bound <= 2.1,
        format!("max deviation {dev:.2e}, max (1+|z|)‖R_z x‖/‖x‖ = {bound:.4}"),
    );

    let rec = run(ExperimentKind::Hormander, |_| {});
    let (oe, se) = (m(&rec, "oracle_error"), m(&rec, "scaling_error"));
    s.record(
        4,
        "Hörmander condition",
        oe < 1e-6 && se < 1e-6 && rec.status == maxreg_lab::Status::Pass,
        format!("c = {:.10}, oracle error {oe:.2e}, scaling error {se:.2e}", m(&rec, "c_estimate")),
    );

    let rec = run(ExperimentKind::Rbound, |_| {});
    let (fe, ie) = (m(&rec, "family_error"), m(&rec, "identity_error"));
    s.record(
        5,
        "R-boundedness of scalar families",
        fe < 0.05 && ie < 0.02 && m(&rec, "exact_enumeration") == 1.0,
        format!("scalar family error {fe:.2e}, identity error {ie:.2e}"),
    );

    let rec = run(ExperimentKind::Weighted, |_| {});
    let wc: Vec<f64> = [0.6, 0.8].iter().map(|mu| m(&rec, &format!("refinement_change_mu{mu}"))).collect();
    s.record(
        6,
        "weighted regularity",
        m(&rec, "mu_one_identical") == 1.0 && wc.iter().all(|&c| c < 0.05),
        format!("μ = 1 identical: {}, refinement changes {}", m(&rec, "mu_one_identical") == 1.0, sci(&wc)),
    );

    let rec = run(ExperimentKind::Scaling, |_| {});
    let (hd, nd, ee) = (m(&rec, "nlhe_max_deviation"), m(&rec, "ns_max_deviation"), m(&rec, "off_critical_error"));
    s.record(
        7,
        "critical scaling",
        hd < 1e-6 && nd < 1e-6 && ee < 1e-4,
        format!("deviations {hd:.1e} (heat), {nd:.1e} (NS); off-critical exponent error {ee:.1e}"),
    );

    // the PDE sweeps feed 8, 9 and 11
    let nlhe = run(ExperimentKind::NlheExist, |_| {});
    let nlhe3 = run(ExperimentKind::NlheExist, |c| {
        c.pde.nu = Some(Scalars::One(3.0));
        c.pde.p = Some(Scalars::One(4.0));
        c.pde.q = Some(4.0);
    });
    let ns = run(ExperimentKind::NsExist, |_| {});

    let fp = FixedPointProblem::new(0.1, |u: &f64| Ok(u * u), |u: &f64| Ok(u.abs()), 1.0, 1.0);
    let (cert, u) = run_picard(&fp, &PicardOptions::default()).expect("scalar Picard");
    let scalar_ok = cert.converged && (u - 0.1127016654).abs() <= 1e-9;
    let pde = [&nlhe, &nlhe3, &ns];
    let gated_ball = pde.iter().all(|r| m(r, "ball_stable_gate_passed") == 1.0);
    let all_ball = pde.iter().all(|r| m(r, "ball_stable_converged") == 1.0);
    let contraction = pde.iter().all(|r| m(r, "contraction_within_prediction") == 1.0);
    let gated: f64 = pde.iter().map(|r| m(r, "gate_passed_runs")).sum();
    let converged: f64 = pde.iter().map(|r| m(r, "converged_runs")).sum();
    s.record(
        8,
        "fixed-point theorem",
        scalar_ok && gated_ball && contraction && gated > 0.0,
        format!(
            "scalar u = {u:.12}; ball stable in all {gated} gate-passed runs: {gated_ball} \
             (all {converged} converged runs: {all_ball}); contraction within prediction: {contraction}"
        ),
    );

    s.record(
        9,
        "NLHE small-data existence",
        m(&nlhe, "converged_with_residual") == 1.0 && m(&nlhe, "monotone") == 1.0,
        format!(
            "ν = 2, (p, q) = (3, 1.5): threshold η = {}, min residual {:.1e}, monotone {}; \
             ν = 3, (4, 4) inside the hypotheses: converged {}, monotone {}",
            m(&nlhe, "threshold_eta"),
            m(&nlhe, "min_residual"),
            m(&nlhe, "monotone") == 1.0,
            m(&nlhe3, "converged_with_residual") == 1.0,
            m(&nlhe3, "monotone") == 1.0,
        ),
    );

    let rec = run(ExperimentKind::Lipschitz, |_| {});
    let viol: Vec<f64> = [1.5, 2.0, 3.0].iter().map(|nu| m(&rec, &format!("max_violation_nu{nu}"))).collect();
    s.record(
        10,
        "nonlinearity inequality",
        viol.iter().all(|&v| v <= 0.0),
        format!("max violations {viol:?} over 1e6 pairs each"),
    );

    s.record(
        11,
        "NS existence",
        ns.status == maxreg_lab::Status::Pass,
        format!(
            "smallest η residual {:.1e}, max divergence {:.1e}, threshold η = {}",
            ns.table("eta_sweep").and_then(|t| t.rows[0][3].parse::<f64>().ok()).unwrap_or(f64::NAN),
            m(&ns, "max_divergence"),
            m(&ns, "threshold_eta")
        ),
    );

    let nu = run(ExperimentKind::NlheUnique, |_| {});
    let nsu = run(ExperimentKind::NsUnique, |_| {});
    let boot = |r: &ResultRecord| {
        m(r, "covers_horizon") == 1.0 && m(r, "max_factor") <= 0.75 && m(r, "max_separation") <= 10.0 * 1e-10
    };
    let smooth = m(&nu, "smoothing_max_over_min");
    s.record(
        12,
        "uniqueness bootstrap",
        boot(&nu) && boot(&nsu) && smooth <= 3.0,
        format!(
            "heat: {} segments, factor {:.3}, separation {:.1e}; NS: {} segments, factor {:.3}, separation {:.1e}; \
             smoothing max/min {smooth:.3}",
            m(&nu, "segments"),
            m(&nu, "max_factor"),
            m(&nu, "max_separation"),
            m(&nsu, "segments"),
            m(&nsu, "max_factor"),
            m(&nsu, "max_separation"),
        ),
    );

    let mut identical = true;
    let mut compared = 0;
    for kind in [ExperimentKind::Desimon, ExperimentKind::Hormander, ExperimentKind::Lipschitz, ExperimentKind::Rbound] {
        let cfg = ExperimentConfig::new(kind);
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for (threads, dir) in [1, 2].iter().zip(&dirs) {
            let rec = run_experiment_with_threads(&cfg, Some(*threads)).unwrap();
            write_results(&rec, dir.path()).unwrap();
        }
        let (a, b) = (csv_files(dirs[0].path()), csv_files(dirs[1].path()));
        compared += a.len();
        identical &= !a.is_empty() && a == b;
    }
    s.record(
        13,
        "determinism across thread counts",
        identical,
        format!("{compared} CSV series byte-identical at 1 and 2 threads: {identical}"),
    );

    let failed = s.lines.iter().filter(|l| !l.1).count();
    println!("{} of {} criteria pass", s.lines.len() - failed, s.lines.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
