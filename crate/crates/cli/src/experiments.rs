//! Dispatch from a validated config to the numerical core, and the pass/fail
//! predicate of each experiment.

use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::{anyhow, Result};
use maxreg_core::maxreg::{
    de_simon_multiplier_solve, estimate_maxreg_constant, generator_eigenvalues, hormander_check,
    multiplier_sup_norm, rbound_estimate, resolvent_via_maxreg, weighted_maxreg_check,
    DeSimonOptions, ForcingSpec, ResolventOptions,
};
use maxreg_core::norms::{
    besov_heat_norm, bochner_mixed_norm, HeatNormOptions, ScalingLaw, Trajectory,
};
use maxreg_core::pde::{
    criticality_check, default_profile, nlhe_existence_experiment, nonlinearity_lipschitz_check,
    ns_existence_experiment, odd_heat_data, sample_lipschitz, scaling_invariance_test,
    smoothing_estimate_check, taylor_green_data, uniqueness_bootstrap, ExistenceOptions,
    ExistenceRecord, MildProblem, NlheProblem, NsProblem, UniquenessOptions, UniquenessStatus,
};
use maxreg_core::picard::{run_picard, PicardOptions, Start};
use maxreg_core::rng::{stream, stream_id};
use maxreg_core::spectral::point_source;
use maxreg_core::{
    Complex64, FixedPointProblem, FourierMultiplier, LinearProblem, MixedNormParams,
    SpectralField, TimeGrid, TorusGrid, WeightParams,
};
use rand::Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{ExperimentConfig, ExperimentKind, Scalars};
use crate::record::{flag, num, ResultRecord, Status, Table, ARTIFACT_VERSION, SCHEMA_VERSION};

const NS_FORCING: u32 = 0x4c41_0001;
const NS_FIELD: u32 = 0x4c41_0002;
const NS_FAMILY: u32 = 0x4c41_0003;

/// Spectrum scale factor for the Hörmander invariance check.
const HORMANDER_SCALE: f64 = 10.0;

struct Outcome {
    status: Status,
    metrics: BTreeMap<String, f64>,
    tables: Vec<Table>,
    reports: serde_json::Value,
    diagnostics: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self {
            status: Status::Pass,
            metrics: BTreeMap::new(),
            tables: Vec::new(),
            reports: serde_json::Value::Null,
            diagnostics: Vec::new(),
        }
    }

    fn failed(msg: String) -> Self {
        let mut o = Self::new();
        o.status = Status::Fail;
        o.diagnostics.push(msg);
        o
    }

    fn metric(&mut self, key: impl Into<String>, v: f64) {
        self.metrics.insert(key.into(), v);
    }

    fn indicator(&mut self, key: impl Into<String>, b: bool) {
        self.metric(key, if b { 1.0 } else { 0.0 });
    }

    fn require(&mut self, ok: bool, msg: impl Into<String>) {
        if !ok {
            self.status = Status::Fail;
            self.diagnostics.push(msg.into());
        }
    }

    fn inconclusive(&mut self, msg: impl Into<String>) {
        if self.status == Status::Pass {
            self.status = Status::Inconclusive;
        }
        self.diagnostics.push(msg.into());
    }
}

fn grid_with(cfg: &ExperimentConfig, refine: usize) -> Result<TorusGrid> {
    let g = &cfg.grid;
    Ok(TorusGrid::new(
        g.dim.unwrap_or(2),
        g.points.unwrap_or(64) * refine,
        g.period.unwrap_or(2.0 * std::f64::consts::PI),
    )?)
}

fn time_with(cfg: &ExperimentConfig, refine: usize) -> Result<TimeGrid> {
    let nodes = cfg.time.nodes.unwrap_or(256) * refine;
    Ok(TimeGrid::uniform(cfg.time.horizon.unwrap_or(1.0), nodes - 1)?)
}

fn single(s: &Option<Scalars>, field: &str) -> Result<f64> {
    s.as_ref()
        .and_then(|s| s.values().first().copied())
        .ok_or_else(|| anyhow!("{field} is not set"))
}

fn all(s: &Option<Scalars>) -> Vec<f64> {
    s.as_ref().map(Scalars::values).unwrap_or_default()
}

fn ensemble(cfg: &ExperimentConfig, g: &TorusGrid, t: &TimeGrid) -> Result<Vec<ForcingSpec>> {
    let s = &cfg.sampling;
    (0..s.ensemble.unwrap_or(20))
        .map(|i| {
            let mut rng = stream(cfg.rng_seed, stream_id(NS_FORCING, i as u64));
            Ok(ForcingSpec::random(g, 1, t, s.terms.unwrap_or(4), s.kmax.unwrap_or(6), &mut rng)?)
        })
        .collect()
}

fn params(p: f64, q: f64) -> Result<MixedNormParams> {
    Ok(MixedNormParams::new(p, q)?)
}

/// Runs the configured experiment. Invalid configs and numerical errors end
/// up as `status = fail` with the message in `diagnostics`.
pub fn run_experiment(config: &ExperimentConfig) -> ResultRecord {
    let start = Instant::now();
    let (cfg, outcome) = match config.clone().validated() {
        Ok(cfg) => {
            let o = dispatch(&cfg).unwrap_or_else(|e| Outcome::failed(format!("{e:#}")));
            (cfg, o)
        }
        Err(e) => (config.clone(), Outcome::failed(e.to_string())),
    };
    for d in &outcome.diagnostics {
        log::info!("{}: {d}", cfg.experiment);
    }
    ResultRecord {
        schema_version: SCHEMA_VERSION,
        artifact_version: ARTIFACT_VERSION.into(),
        experiment: cfg.experiment,
        status: outcome.status,
        diagnostics: outcome.diagnostics,
        metrics: outcome.metrics,
        config: cfg,
        reports: outcome.reports,
        tables: outcome.tables,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    }
}

/// [`run_experiment`] inside a dedicated pool of `threads` workers.
pub fn run_experiment_with_threads(config: &ExperimentConfig, threads: Option<usize>) -> Result<ResultRecord> {
    match threads {
        None => Ok(run_experiment(config)),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(k).build()?;
            Ok(pool.install(|| run_experiment(config)))
        }
    }
}

fn dispatch(cfg: &ExperimentConfig) -> Result<Outcome> {
    use ExperimentKind::*;
    match cfg.experiment {
        Maxreg => maxreg(cfg),
        Weighted => weighted(cfg),
        Resolvent => resolvent(cfg),
        Hormander => hormander(cfg),
        Desimon => desimon(cfg),
        Rbound => rbound(cfg),
        Scaling => scaling(cfg),
        NlheExist => nlhe_exist(cfg),
        NsExist => ns_exist(cfg),
        NlheUnique => nlhe_unique(cfg),
        NsUnique => ns_unique(cfg),
        Lipschitz => lipschitz(cfg),
    }
}

fn maxreg(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (g, t) = (grid_with(cfg, 1)?, time_with(cfg, 1)?);
    let (g2, t2) = (grid_with(cfg, 2)?, time_with(cfg, 2)?);
    let ens = ensemble(cfg, &g, &t)?;
    let ens2: Vec<ForcingSpec> = ens.iter().map(|f| f.resampled(&g2, &t2)).collect::<Result<_, _>>()?;
    let op = FourierMultiplier::neg_laplacian();
    let q = cfg.pde.q.unwrap_or(2.0);
    let tol = cfg.tolerance("refinement_change");
    let mut out = Outcome::new();
    let mut constants = Table::new(
        "constants",
        &["p", "q", "c_estimate", "c_refined", "refinement_change", "norm_u", "norm_dt_u", "norm_au", "norm_f"],
    );
    let mut samples = Table::new("samples", &["p", "index", "ratio", "norm_u", "norm_dt_u", "norm_au", "norm_f"]);
    let mut reports = Vec::new();
    for p in all(&cfg.pde.p) {
        let mp = params(p, q)?;
        let r1 = estimate_maxreg_constant(&op, &mp, &ens)?;
        let r2 = estimate_maxreg_constant(&op, &mp, &ens2)?;
        let change = (r2.c_estimate / r1.c_estimate - 1.0).abs();
        out.metric(format!("c_estimate_p{p}"), r1.c_estimate);
        out.metric(format!("c_refined_p{p}"), r2.c_estimate);
        out.metric(format!("refinement_change_p{p}"), change);
        out.require(
            r1.c_estimate.is_finite() && r2.c_estimate.is_finite(),
            format!("p = {p}: non-finite constant"),
        );
        out.require(change < tol, format!("p = {p}: refinement changes C by {change:.3e} (limit {tol})"));
        let n = r1.norms;
        constants.push(vec![
            num(p),
            num(q),
            num(r1.c_estimate),
            num(r2.c_estimate),
            num(change),
            num(n.norm_u),
            num(n.norm_dt_u),
            num(n.norm_au),
            num(n.norm_f),
        ]);
        for (i, s) in r1.samples.iter().enumerate() {
            samples.push(vec![
                num(p),
                i.to_string(),
                num(s.ratio),
                num(s.norm_u),
                num(s.norm_dt_u),
                num(s.norm_au),
                num(s.norm_f),
            ]);
        }
        reports.push(json!({ "p": p, "coarse": r1, "refined": r2 }));
    }
    out.tables = vec![constants, samples];
    out.reports = json!(reports);
    Ok(out)
}

fn weighted(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (g, t) = (grid_with(cfg, 1)?, time_with(cfg, 1)?);
    let (g2, t2) = (grid_with(cfg, 2)?, time_with(cfg, 2)?);
    let ens = ensemble(cfg, &g, &t)?;
    let ens2: Vec<ForcingSpec> = ens.iter().map(|f| f.resampled(&g2, &t2)).collect::<Result<_, _>>()?;
    let op = FourierMultiplier::neg_laplacian();
    let p = single(&cfg.pde.p, "pde.p")?;
    let mp = params(p, cfg.pde.q.unwrap_or(2.0))?;
    let tol = cfg.tolerance("refinement_change");
    let mut out = Outcome::new();

    let plain = estimate_maxreg_constant(&op, &mp, &ens)?;
    let at_one = weighted_maxreg_check(&op, &mp, &WeightParams::new(1.0, p)?, &ens)?;
    let identical = plain.same_measurements(&at_one);
    out.indicator("mu_one_identical", identical);
    out.metric("c_unweighted", plain.c_estimate);
    out.require(identical, "μ = 1 does not reproduce the unweighted report");

    let mut table = Table::new("constants", &["mu", "c_estimate", "c_refined", "refinement_change"]);
    table.push(vec![num(1.0), num(at_one.c_estimate), String::new(), String::new()]);
    let mut reports = vec![json!({ "mu": 1.0, "report": at_one })];
    for mu in all(&cfg.pde.mu) {
        let w = WeightParams::new(mu, p)?;
        let r1 = weighted_maxreg_check(&op, &mp, &w, &ens)?;
        let r2 = weighted_maxreg_check(&op, &mp, &w, &ens2)?;
        let change = (r2.c_estimate / r1.c_estimate - 1.0).abs();
        out.metric(format!("c_estimate_mu{mu}"), r1.c_estimate);
        out.metric(format!("c_refined_mu{mu}"), r2.c_estimate);
        out.metric(format!("refinement_change_mu{mu}"), change);
        out.require(
            r1.c_estimate.is_finite() && r2.c_estimate.is_finite(),
            format!("μ = {mu}: non-finite constant"),
        );
        out.require(change < tol, format!("μ = {mu}: refinement changes C by {change:.3e} (limit {tol})"));
        table.push(vec![num(mu), num(r1.c_estimate), num(r2.c_estimate), num(change)]);
        reports.push(json!({ "mu": mu, "coarse": r1, "refined": r2 }));
    }
    out.tables = vec![table];
    out.reports = json!({ "unweighted": plain, "weighted": reports });
    Ok(out)
}

fn resolvent(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = grid_with(cfg, 1)?;
    let mut rng = stream(cfg.rng_seed, stream_id(NS_FIELD, 0));
    let mut x = SpectralField::random(&g, 1, cfg.sampling.kmax.unwrap_or(6), 1.0, false, &mut rng);
    x.scale(1.0 / x.l2_norm());
    let op = FourierMultiplier::neg_laplacian();
    let eig = generator_eigenvalues(&op, &g)?;
    let (dev_tol, bound_tol) = (cfg.tolerance("deviation"), cfg.tolerance("bound"));
    let mut out = Outcome::new();
    let mut table = Table::new(
        "probes",
        &["re_z", "im_z", "deviation", "bound_constant", "oracle_bound", "distinct_eigenvalues", "time_steps"],
    );
    let (mut dev_max, mut bound_max, mut oracle_max) = (0.0f64, 0.0f64, 0.0f64);
    let mut reports = Vec::new();
    for [re, im] in cfg.probe.z_set.clone().unwrap_or_default() {
        let z = Complex64::new(re, im);
        let probe = resolvent_via_maxreg(&op, z, &x, &ResolventOptions::default())?;
        // sup of |(z + λ)^{-1}| over the modes x carries
        let inv = x
            .coefficients()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(i, _)| 1.0 / (z + eig[i % g.len()]).norm())
            .fold(0.0, f64::max);
        let oracle = (1.0 + z.norm()) * inv;
        dev_max = dev_max.max(probe.deviation);
        bound_max = bound_max.max(probe.bound_constant);
        oracle_max = oracle_max.max(oracle);
        out.require(
            probe.deviation < dev_tol,
            format!("z = {z}: deviation {:.3e} (limit {dev_tol:e})", probe.deviation),
        );
        out.require(
            probe.bound_constant <= oracle * (1.0 + 1e-6),
            format!("z = {z}: bound {} above the modewise sup {oracle}", probe.bound_constant),
        );
        table.push(vec![
            num(re),
            num(im),
            num(probe.deviation),
            num(probe.bound_constant),
            num(oracle),
            probe.distinct_eigenvalues.to_string(),
            probe.time_steps.to_string(),
        ]);
        reports.push(probe);
    }
    out.require(bound_max <= bound_tol, format!("bound constant {bound_max} exceeds {bound_tol}"));
    out.metric("deviation_max", dev_max);
    out.metric("bound_max", bound_max);
    out.metric("oracle_bound_max", oracle_max);
    out.tables = vec![table];
    out.reports = json!(reports);
    Ok(out)
}

/// `∫_{|t|>2|s|} max_λ |k_λ(t−s) − k_λ(t)| dt` for `k_λ(t) = λe^{-λt}`
/// (`t > 0`) by composite Simpson on decade panels starting at `2|s|`.
pub fn brute_force_hormander(spectrum: &[f64], s: f64) -> f64 {
    const PANEL: usize = 200_000;
    let lams: Vec<f64> = spectrum.iter().copied().filter(|&l| l > 0.0).collect();
    if lams.is_empty() {
        return 0.0;
    }
    let lmin = lams.iter().copied().fold(f64::INFINITY, f64::min);
    let lmax = lams.iter().copied().fold(0.0, f64::max);
    let k = |l: f64, t: f64| if t > 0.0 { l * (-l * t).exp() } else { 0.0 };
    let g = |t: f64| lams.iter().map(|&l| (k(l, t - s) - k(l, t)).abs()).fold(0.0, f64::max);
    let a = 2.0 * s.abs();
    let end = a + 60.0 / lmin;
    let mut edges = vec![a];
    let mut w = 1.0 / lmax;
    while a + w < end {
        edges.push(a + w);
        w *= 10.0;
    }
    edges.push(end);
    edges
        .windows(2)
        .map(|e| {
            let h = (e[1] - e[0]) / PANEL as f64;
            let mut acc = g(e[0]) + g(e[1]);
            for i in 1..PANEL {
                acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(e[0] + i as f64 * h);
            }
            acc * h / 3.0
        })
        .sum()
}

fn hormander(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = grid_with(cfg, 1)?;
    let op = FourierMultiplier::neg_laplacian();
    let s_grid = cfg.probe.s_samples.clone().unwrap_or_default();
    let rep = hormander_check(&op, &g, &s_grid)?;
    let spectrum: Vec<f64> = op.spectrum(&g)?.iter().map(|l| l.re).collect();
    let oracle: Vec<f64> = s_grid.par_iter().map(|&s| brute_force_hormander(&spectrum, s)).collect();
    let scaled_s: Vec<f64> = s_grid.iter().map(|s| s / HORMANDER_SCALE).collect();
    let scaled = hormander_check(&FourierMultiplier::scaled_laplacian(HORMANDER_SCALE), &g, &scaled_s)?;
    let oracle_error = rep.integrals.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let scaling_error = rep
        .integrals
        .iter()
        .zip(&scaled.integrals)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let oracle_c = oracle.iter().copied().fold(0.0, f64::max);
    let mut out = Outcome::new();
    out.metric("c_estimate", rep.c_estimate);
    out.metric("oracle_c_estimate", oracle_c);
    out.metric("c_estimate_scaled", scaled.c_estimate);
    out.metric("oracle_error", oracle_error);
    out.metric("scaling_error", scaling_error);
    out.metric("spectrum_size", rep.spectrum_size as f64);
    let (ot, st) = (cfg.tolerance("oracle"), cfg.tolerance("scaling"));
    out.require(oracle_error < ot, format!("quadrature differs from the oracle by {oracle_error:.3e}"));
    out.require(
        (rep.c_estimate - oracle_c).abs() < ot,
        format!("c_estimate {} vs oracle {oracle_c}", rep.c_estimate),
    );
    out.require(scaling_error < st, format!("spectrum scaling changes the integral by {scaling_error:.3e}"));
    let mut table = Table::new("integrals", &["s", "integral", "oracle", "scaled_integral"]);
    for i in 0..s_grid.len() {
        table.push(vec![num(s_grid[i]), num(rep.integrals[i]), num(oracle[i]), num(scaled.integrals[i])]);
    }
    out.tables = vec![table];
    out.reports = json!({ "report": rep, "scaled": scaled, "scale": HORMANDER_SCALE });
    Ok(out)
}

fn desimon(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (g, t) = (grid_with(cfg, 1)?, time_with(cfg, 1)?);
    let ens = ensemble(cfg, &g, &t)?;
    let op = FourierMultiplier::neg_laplacian();
    let mp = params(single(&cfg.pde.p, "pde.p")?, cfg.pde.q.unwrap_or(2.0))?;
    let ratios: Vec<f64> = ens
        .par_iter()
        .map(|spec| -> Result<f64> {
            let f = spec.to_trajectory()?;
            let nf = bochner_mixed_norm(&f, &mp)?;
            let au = de_simon_multiplier_solve(&LinearProblem::new(op.clone(), f), &DeSimonOptions::default())?;
            Ok(bochner_mixed_norm(&au, &mp)? / nf)
        })
        .collect::<Result<_>>()?;
    let duhamel = estimate_maxreg_constant(&op, &mp, &ens)?;
    let sigma_max = cfg.probe.sigma_max.unwrap_or(1e6);
    let sigma: Vec<f64> = (0..=400)
        .map(|j| 1e-3 * (sigma_max / 1e-3).powf(j as f64 / 400.0))
        .flat_map(|s| [s, -s])
        .collect();
    let sup = multiplier_sup_norm(&op, &g, &sigma)?;
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let mut out = Outcome::new();
    out.metric("max_ratio", max_ratio);
    out.metric("multiplier_sup", sup);
    out.metric(
        "duhamel_max_au_ratio",
        duhamel.samples.iter().map(|s| s.norm_au / s.norm_f).fold(0.0, f64::max),
    );
    let bound = cfg.tolerance("ratio_bound");
    let lower = cfg.tolerance("sup_lower");
    out.require(max_ratio <= bound, format!("‖Au‖/‖f‖ reaches {max_ratio} (limit {bound})"));
    out.require(
        sup >= lower && sup <= 1.0,
        format!("symbol sup {sup} outside [{lower}, 1]"),
    );
    let mut table = Table::new("ratios", &["index", "de_simon_ratio", "duhamel_au_ratio"]);
    for (i, r) in ratios.iter().enumerate() {
        let s = duhamel.samples.get(i);
        table.push(vec![
            i.to_string(),
            num(*r),
            s.map(|s| num(s.norm_au / s.norm_f)).unwrap_or_default(),
        ]);
    }
    out.tables = vec![table];
    out.reports = json!({ "duhamel": duhamel, "ratios": ratios });
    Ok(out)
}

fn rbound(cfg: &ExperimentConfig) -> Result<Outcome> {
    let g = grid_with(cfg, 1)?;
    let s = &cfg.sampling;
    let (trials, vectors) = (s.trials.unwrap_or(64), s.vectors_per_trial.unwrap_or(4096));
    let size = s.family_size.unwrap_or(12);
    let mut rng = stream(cfg.rng_seed, stream_id(NS_FAMILY, 0));
    let coeffs: Vec<f64> = (0..size).map(|_| rng.random_range(-3.0..3.0)).collect();
    let family: Vec<FourierMultiplier> = coeffs
        .iter()
        .map(|&c| FourierMultiplier::constant(Complex64::new(c, 0.0)))
        .collect();
    let est = rbound_estimate(&family, &g, trials, vectors, cfg.rng_seed)?;
    let ids: Vec<FourierMultiplier> = (0..size).map(|_| FourierMultiplier::identity()).collect();
    let id_est = rbound_estimate(&ids, &g, trials, vectors, cfg.rng_seed)?;
    let op = FourierMultiplier::neg_laplacian();
    let resolvents: Vec<FourierMultiplier> = (0..size)
        .map(|j| op.resolvent_family_member(10f64.powf(-2.0 + 4.0 * j as f64 / (size.max(2) - 1) as f64)))
        .collect::<Result<_, _>>()?;
    let res_est = rbound_estimate(&resolvents, &g, trials, vectors, cfg.rng_seed)?;

    let want = coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max);
    let family_error = (est.estimate / want - 1.0).abs();
    let identity_error = (id_est.estimate - 1.0).abs();
    let mut out = Outcome::new();
    out.metric("family_estimate", est.estimate);
    out.metric("family_max_abs", want);
    out.metric("family_error", family_error);
    out.metric("identity_estimate", id_est.estimate);
    out.metric("identity_error", identity_error);
    out.metric("resolvent_family_estimate", res_est.estimate);
    out.metric("resolvent_family_uniform_bound", res_est.uniform_bound);
    out.indicator("exact_enumeration", est.exact_enumeration);
    out.require(
        family_error < cfg.tolerance("family"),
        format!("R-bound {} vs max|c| = {want}", est.estimate),
    );
    out.require(
        identity_error < cfg.tolerance("identity"),
        format!("identity family R-bound {}", id_est.estimate),
    );
    let mut table = Table::new("prefix", &["j", "coefficient", "family", "identity", "resolvent"]);
    for j in 0..size {
        table.push(vec![
            (j + 1).to_string(),
            num(coeffs[j]),
            num(est.prefix_estimates[j]),
            num(id_est.prefix_estimates[j]),
            num(res_est.prefix_estimates[j]),
        ]);
    }
    out.tables = vec![table];
    out.reports = json!({ "scalar": est, "identity": id_est, "resolvent": res_est });
    Ok(out)
}

fn scaling(cfg: &ExperimentConfig) -> Result<Outcome> {
    let n = cfg.pde.n.unwrap_or(2);
    let nu = single(&cfg.pde.nu, "pde.nu")?;
    let mp = params(single(&cfg.pde.p, "pde.p")?, cfg.pde.q.unwrap_or(4.0))?;
    let lambdas = cfg.pde.lambda_set.clone().unwrap_or_default();
    let profile = default_profile(n);
    let law = ScalingLaw::nonlinear_heat(nu)?;
    let defect = criticality_check(&law, &mp, n)?;
    let heat = scaling_invariance_test(&law, &mp, n, &lambdas, &profile)?;
    // 2/p + n/q = 1 at p = 4, q = 2n
    let ns_params = params(4.0, 2.0 * n as f64)?;
    let ns = scaling_invariance_test(&ScalingLaw::navier_stokes(), &ns_params, n, &lambdas, &profile)?;
    let [po, qo] = cfg.probe.off_critical.unwrap_or([3.0, 3.0]);
    let off = scaling_invariance_test(&law, &params(po, qo)?, n, &lambdas, &profile)?;

    let inv = cfg.tolerance("invariance");
    let ex = cfg.tolerance("exponent");
    let mut out = Outcome::new();
    out.metric("criticality_defect", defect);
    out.metric("nlhe_max_deviation", heat.max_deviation);
    out.metric("ns_max_deviation", ns.max_deviation);
    out.metric("off_critical_predicted", off.predicted_exponent);
    out.metric("off_critical_measured", off.measured_exponent);
    out.metric("off_critical_error", off.exponent_error);
    out.require(
        defect.abs() < 1e-12,
        format!("(p, q) = ({}, {}) is not critical for ν = {nu}, n = {n} (defect {defect})", mp.p, mp.q),
    );
    out.require(heat.max_deviation < inv, format!("nonlinear heat norms vary by {:.3e}", heat.max_deviation));
    out.require(ns.max_deviation < inv, format!("Navier–Stokes norms vary by {:.3e}", ns.max_deviation));
    out.require(
        off.exponent_error < ex,
        format!("off-critical exponent {} vs {}", off.measured_exponent, off.predicted_exponent),
    );
    let mut table = Table::new("lambdas", &["lambda", "nlhe_norm", "ns_norm", "off_critical_norm"]);
    table.push(vec![num(1.0), num(heat.base_norm), num(ns.base_norm), num(off.base_norm)]);
    for (i, &l) in lambdas.iter().enumerate() {
        table.push(vec![num(l), num(heat.norms[i]), num(ns.norms[i]), num(off.norms[i])]);
    }
    out.tables = vec![table];
    out.reports = json!({ "nlhe": heat, "ns": ns, "off_critical": off });
    Ok(out)
}

fn existence_options(cfg: &ExperimentConfig) -> ExistenceOptions {
    ExistenceOptions {
        picard: PicardOptions {
            tol: cfg.tolerance("picard"),
            ..PicardOptions::default()
        },
        lipschitz_pairs: cfg.sampling.lipschitz_pairs.unwrap_or(12),
        seed: cfg.rng_seed,
        ..ExistenceOptions::default()
    }
}

/// Metrics and tables shared by both existence experiments.
fn existence_outcome(cfg: &ExperimentConfig, rec: &ExistenceRecord) -> Outcome {
    let mut out = Outcome::new();
    let res_tol = cfg.tolerance("residual");
    let slack = cfg.tolerance("contraction_slack");
    let converged: Vec<_> = rec.points.iter().filter(|p| p.certificate.converged).collect();
    let good = converged.iter().any(|p| p.certificate.residual <= res_tol);
    let ball_all = converged.iter().all(|p| p.certificate.ball_stable);
    let ball_gate = converged
        .iter()
        .filter(|p| p.certificate.smallness_ok)
        .all(|p| p.certificate.ball_stable);
    let contraction_ok = converged.iter().all(|p| {
        let c = &p.certificate;
        c.contraction_factors.iter().all(|&r| r <= c.predicted_rate + slack)
    });
    out.indicator("monotone", rec.monotone);
    out.indicator("converged_with_residual", good);
    out.indicator("ball_stable_converged", ball_all);
    out.indicator("ball_stable_gate_passed", ball_gate);
    out.indicator("contraction_within_prediction", contraction_ok);
    out.indicator("theorem_regime", rec.theorem_regime);
    out.indicator("lipschitz_exponent_mismatch", rec.lipschitz.exponent_mismatch);
    out.metric("threshold_eta", rec.threshold.unwrap_or(f64::NAN));
    out.metric("criticality_defect", rec.criticality_defect);
    out.metric("besov_norm_of_data", rec.besov_norm_of_data);
    out.metric("lipschitz_m_raw", rec.lipschitz.raw);
    out.metric("lipschitz_m_used", rec.lipschitz.m_used);
    out.metric("converged_runs", converged.len() as f64);
    out.metric(
        "gate_passed_runs",
        rec.points.iter().filter(|p| p.certificate.smallness_ok).count() as f64,
    );
    out.metric("spot_check", rec.spot_check.unwrap_or(f64::NAN));
    if let Some(best) = converged.iter().map(|p| p.certificate.residual).reduce(f64::min) {
        out.metric("min_residual", best);
    }

    let mut sweep = Table::new("eta_sweep", &["eta", "converged", "final_norm", "residual", "contraction_rate"]);
    let mut certs = Table::new(
        "certificates",
        &[
            "eta", "scale", "iterations", "base_norm", "delta", "smallness_ok", "ball_stable", "diverged",
            "predicted_rate", "max_contraction", "max_divergence",
        ],
    );
    let mut iterates = Table::new("iterates", &["eta", "k", "iterate_norm", "step_norm", "contraction_factor"]);
    for p in &rec.points {
        let c = &p.certificate;
        sweep.push(vec![num(p.eta), flag(c.converged), num(c.final_norm()), num(c.residual), num(c.final_rate())]);
        certs.push(vec![
            num(p.eta),
            num(p.scale),
            c.iterations.to_string(),
            num(c.base_norm),
            num(c.delta),
            flag(c.smallness_ok),
            flag(c.ball_stable),
            flag(c.diverged),
            num(c.predicted_rate),
            num(c.contraction_factors.iter().copied().fold(0.0, f64::max)),
            p.max_divergence.map(num).unwrap_or_default(),
        ]);
        for (k, norm) in c.iterate_norms.iter().enumerate() {
            let step = if k > 0 { c.step_norms.get(k - 1).copied() } else { None };
            let factor = if k > 1 { c.contraction_factors.get(k - 2).copied() } else { None };
            iterates.push(vec![
                num(p.eta),
                k.to_string(),
                num(*norm),
                step.map(num).unwrap_or_default(),
                factor.map(num).unwrap_or_default(),
            ]);
        }
    }
    out.tables = vec![sweep, certs, iterates];
    out.reports = json!(rec);
    out
}

fn nlhe_exist(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (g, t) = (grid_with(cfg, 1)?, time_with(cfg, 1)?);
    let prob = NlheProblem::new(
        single(&cfg.pde.nu, "pde.nu")?,
        cfg.pde.variant.unwrap_or_default(),
        params(single(&cfg.pde.p, "pde.p")?, cfg.pde.q.unwrap_or(1.5))?,
        odd_heat_data(&g),
        t,
    )?;
    let eta = cfg.pde.eta_grid.clone().unwrap_or_default();
    let rec = nlhe_existence_experiment(&prob, &eta, &existence_options(cfg))?;
    let mut out = existence_outcome(cfg, &rec);
    out.require(
        out.metrics["converged_with_residual"] == 1.0,
        format!("no η converged with residual <= {:e}", cfg.tolerance("residual")),
    );
    out.require(rec.monotone, "convergence is not monotone along the η sweep");
    if !rec.theorem_regime {
        out.diagnostics.push(format!(
            "(p, q) = ({}, {}) lies outside the theorem's hypotheses ν < p, q or is not critical",
            prob.params.p, prob.params.q
        ));
    }
    Ok(out)
}

fn ns_exist(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (g, t) = (grid_with(cfg, 1)?, time_with(cfg, 1)?);
    let prob = NsProblem::new(
        params(single(&cfg.pde.p, "pde.p")?, cfg.pde.q.unwrap_or(4.0))?,
        taylor_green_data(&g)?,
        t,
    )?;
    let eta = cfg.pde.eta_grid.clone().unwrap_or_default();
    let rec = ns_existence_experiment(&prob, &eta, &existence_options(cfg))?;
    let mut out = existence_outcome(cfg, &rec);
    let div_tol = cfg.tolerance("divergence");
    let max_div = rec
        .points
        .iter()
        .filter_map(|p| p.max_divergence)
        .fold(0.0, f64::max);
    out.metric("max_divergence", max_div);
    let first = &rec.points[0].certificate;
    out.require(
        first.converged && first.residual <= cfg.tolerance("residual"),
        format!("smallest η = {} did not converge to the residual tolerance", rec.points[0].eta),
    );
    out.require(max_div <= div_tol, format!("iterate divergence reached {max_div:e}"));
    out.require(rec.monotone, "convergence is not monotone along the η sweep");
    Ok(out)
}

/// Data profile rescaled to heat-extension norm `η` in the problem's `Y`.
fn scaled_to_eta(data: &SpectralField, mp: &MixedNormParams, eta: f64) -> Result<SpectralField> {
    let norm = besov_heat_norm(data, mp, &HeatNormOptions::default())?.value;
    Ok(data.scaled(eta / norm))
}

fn uniqueness_outcome<P: MildProblem>(cfg: &ExperimentConfig, prob: &P, smoothing: bool) -> Result<Outcome> {
    let tol = cfg.tolerance("picard");
    let s = &cfg.sampling;
    let lip = sample_lipschitz(prob, s.lipschitz_pairs.unwrap_or(12), 1.5, cfg.rng_seed)?;
    let mut out = Outcome::new();
    let mut routes = Vec::new();
    let mut certs = Vec::new();
    for start in [Start::Base, Start::Zero] {
        let pm = prob.clone();
        let mp = *prob.params();
        let fp = FixedPointProblem::new(
            prob.base()?,
            move |u: &Trajectory| pm.rhs(u),
            move |u: &Trajectory| bochner_mixed_norm(u, &mp),
            prob.power() - 1.0,
            lip.m_used,
        );
        let (cert, u) = run_picard(&fp, &PicardOptions { start, tol, ..PicardOptions::default() })?;
        let name = match start {
            Start::Base => "base",
            Start::Zero => "zero",
        };
        out.metric(format!("iterations_{name}"), cert.iterations as f64);
        out.metric(format!("residual_{name}"), cert.residual);
        out.require(cert.converged, format!("the route from {name} did not converge"));
        routes.push(u);
        certs.push(cert);
    }
    out.indicator("gate_passed", certs[0].smallness_ok);
    if out.status == Status::Fail {
        out.reports = json!({ "certificates": certs, "lipschitz": lip });
        return Ok(out);
    }

    let factor_limit = cfg.tolerance("contraction");
    let sep_limit = cfg.tolerance("separation_factor") * tol;
    let opts = UniquenessOptions {
        p: cfg.probe.bootstrap_p.unwrap_or(2.0),
        residual_tolerance: cfg.tolerance("residual"),
        separation_tolerance: sep_limit,
        probes: s.probes.unwrap_or(4),
        seed: cfg.rng_seed,
        ..UniquenessOptions::default()
    };
    let rep = uniqueness_bootstrap(prob, &routes[0], &routes[1], &opts)?;
    out.metric("segments", rep.segments.len() as f64);
    out.metric("max_factor", rep.max_factor);
    out.metric("max_separation", rep.max_separation);
    out.metric("c_used", rep.c_used);
    out.metric("m_step1", rep.m_step1);
    out.metric("m_step3", rep.m_step3);
    out.metric("bootstrap_p", rep.p);
    out.metric("bootstrap_q", rep.q);
    out.indicator("endpoint_regime", rep.endpoint_regime);
    let covered = rep.segments.last().map(|s| s.end_index) == Some(routes[0].len() - 1);
    out.indicator("covers_horizon", covered);
    match rep.status {
        UniquenessStatus::Verified => {
            out.require(covered, "segments do not reach the horizon");
            out.require(
                rep.max_factor <= factor_limit,
                format!("contraction factor {} above {factor_limit}", rep.max_factor),
            );
            out.require(
                rep.max_separation <= sep_limit,
                format!("separation {:e} above {sep_limit:e}", rep.max_separation),
            );
        }
        UniquenessStatus::Inconclusive => {
            out.inconclusive(rep.reason.clone().unwrap_or_else(|| "inconclusive".into()));
        }
        UniquenessStatus::Failed | UniquenessStatus::Refused => {
            out.require(false, rep.reason.clone().unwrap_or_else(|| format!("{:?}", rep.status)));
        }
    }
    if !rep.endpoint_regime {
        out.diagnostics.push(format!(
            "n = {} is below the dimension restriction of the whole-space theorem; the run checks the bootstrap mechanism only",
            prob.dim()
        ));
    }

    let mut seg = Table::new(
        "segments",
        &["start", "end", "cutoff", "eps_mollify", "q1", "q2", "q3", "factor", "separation"],
    );
    for s in &rep.segments {
        seg.push(vec![
            num(s.start),
            num(s.end),
            s.cutoff.to_string(),
            num(s.eps_mollify),
            num(s.q1),
            num(s.q2),
            num(s.q3),
            num(s.factor),
            num(s.separation),
        ]);
    }
    let mut tables = vec![seg];

    let n = prob.dim() as f64;
    let q = rep.q;
    let smoothing_report = if smoothing && q > 1.0 && n * q / (n + q) > 1.0 {
        let g = prob.initial_data().grid();
        let h2 = g.spacing().powi(2);
        let r_grid: Vec<f64> = (0..5).map(|j| h2 * 2f64.powi(j)).collect();
        let sm = smoothing_estimate_check(&[point_source(g)], q, &r_grid)?;
        out.metric("smoothing_max_over_min", sm.max_over_min);
        out.metric("smoothing_max_ratio", sm.max_ratio);
        let lim = cfg.tolerance("smoothing_ratio");
        out.require(
            sm.all_finite && sm.max_over_min <= lim,
            format!("smoothing ratio varies by {} over the octaves (limit {lim})", sm.max_over_min),
        );
        let mut t = Table::new("smoothing", &["r", "ratio"]);
        for (r, v) in sm.r_grid.iter().zip(&sm.ratios[0]) {
            t.push(vec![num(*r), num(*v)]);
        }
        tables.push(t);
        Some(sm)
    } else {
        out.indicator("smoothing_skipped", true);
        out.diagnostics.push(format!(
            "smoothing check skipped: nq/(n+q) = {} leaves no source exponent above 1",
            n * q / (n + q)
        ));
        None
    };
    out.tables = tables;
    out.reports = json!({
        "certificates": certs,
        "lipschitz": lip,
        "bootstrap": rep,
        "smoothing": smoothing_report,
    });
    Ok(out)
}

fn nlhe_unique(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (g, t) = (grid_with(cfg, 1)?, time_with(cfg, 1)?);
    let mp = params(single(&cfg.pde.p, "pde.p")?, cfg.pde.q.unwrap_or(6.0))?;
    let eta = cfg.pde.eta_grid.as_ref().and_then(|e| e.first().copied()).unwrap_or(1.0);
    let data = scaled_to_eta(&odd_heat_data(&g), &mp, eta)?;
    let prob = NlheProblem::new(single(&cfg.pde.nu, "pde.nu")?, cfg.pde.variant.unwrap_or_default(), mp, data, t)?;
    let mut out = uniqueness_outcome(cfg, &prob, true)?;
    out.metric("eta", eta);
    Ok(out)
}

fn ns_unique(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (g, t) = (grid_with(cfg, 1)?, time_with(cfg, 1)?);
    let mp = params(single(&cfg.pde.p, "pde.p")?, cfg.pde.q.unwrap_or(4.0))?;
    let eta = cfg.pde.eta_grid.as_ref().and_then(|e| e.first().copied()).unwrap_or(0.5);
    let data = scaled_to_eta(&taylor_green_data(&g)?, &mp, eta)?;
    let prob = NsProblem::new(mp, data, t)?;
    let mut out = uniqueness_outcome(cfg, &prob, false)?;
    out.metric("eta", eta);
    Ok(out)
}

fn lipschitz(cfg: &ExperimentConfig) -> Result<Outcome> {
    let samples = cfg.sampling.samples.unwrap_or(1_000_000);
    let limit = cfg.tolerance("violation");
    let mut out = Outcome::new();
    let mut table = Table::new("inequality", &["nu", "samples", "max_violation", "max_ratio", "worst_x", "worst_y"]);
    let mut reports = Vec::new();
    for nu in all(&cfg.pde.nu) {
        let r = nonlinearity_lipschitz_check(nu, samples, cfg.rng_seed)?;
        out.metric(format!("max_violation_nu{nu}"), r.max_violation);
        out.metric(format!("max_ratio_nu{nu}"), r.max_ratio);
        out.require(
            r.max_violation <= limit,
            format!("ν = {nu}: violation {:e} at {:?}", r.max_violation, r.worst_pair),
        );
        table.push(vec![
            num(nu),
            samples.to_string(),
            num(r.max_violation),
            num(r.max_ratio),
            num(r.worst_pair.0),
            num(r.worst_pair.1),
        ]);
        reports.push(r);
    }
    out.tables = vec![table];
    out.reports = json!(reports);
    Ok(out)
}
