use std::f64::consts::PI;

use maxreg_core::maxreg::{
    de_simon_multiplier_solve, estimate_maxreg_constant, hormander_check, hormander_integral,
    multiplier_sup_norm, rbound_estimate, resolvent_via_maxreg, solve_linear_duhamel,
    weighted_maxreg_check, DeSimonOptions, ForcingSpec, ForcingTerm, ResolventOptions,
    TimeProfile,
};
use maxreg_core::norms::bochner_mixed_norm;
use maxreg_core::rng::stream;
use maxreg_core::spectral::apply_multiplier;
use maxreg_core::{
    Complex64, FourierMultiplier, LinearProblem, MixedNormParams, SpectralField, TimeGrid,
    TorusGrid, Trajectory, WeightParams,
};

fn bump_forcing(g: &TorusGrid, time: &TimeGrid) -> Trajectory {
    let terms = vec![
        ForcingTerm {
            component: 0,
            wavenumber: vec![1, 0],
            amplitude: Complex64::new(1.0, 0.5),
            profile: TimeProfile::Bump { center: 0.3, width: 0.05 },
        },
        ForcingTerm {
            component: 0,
            wavenumber: vec![2, -3],
            amplitude: Complex64::new(-0.4, 0.2),
            profile: TimeProfile::Bump { center: 0.5, width: 0.08 },
        },
    ];
    ForcingSpec::new(g, 1, time, terms).unwrap().to_trajectory().unwrap()
}

fn au_gap(nodes: usize, pad_factor: usize) -> f64 {
    let g = TorusGrid::new(2, 16, 2.0 * PI).unwrap();
    let time = TimeGrid::uniform(2.0, nodes).unwrap();
    let op = FourierMultiplier::neg_laplacian();
    let prob = LinearProblem::new(op.clone(), bump_forcing(&g, &time));
    let u = solve_linear_duhamel(&prob, &time).unwrap();
    let au = u.map_states(|s| apply_multiplier(s, &op)).unwrap();
    let ds = de_simon_multiplier_solve(&prob, &DeSimonOptions { pad_factor }).unwrap();
    let params = MixedNormParams::new(2.0, 2.0).unwrap();
    bochner_mixed_norm(&au.sub(&ds).unwrap(), &params).unwrap()
        / bochner_mixed_norm(&au, &params).unwrap()
}

#[test]
fn time_fourier_route_converges_to_duhamel() {
    let coarse = au_gap(256, 16);
    let fine = au_gap(1024, 16);
    assert!(fine < 1e-3, "{fine}");
    assert!(fine < coarse / 3.0, "{coarse} -> {fine}");
}

#[test]
fn de_simon_symbol_sup_is_one_for_laplacian() {
    let g = TorusGrid::new(2, 16, 2.0 * PI).unwrap();
    let sigma: Vec<f64> = (-400..=400).map(|j| j as f64 * 0.5).collect();
    let s = multiplier_sup_norm(&FourierMultiplier::neg_laplacian(), &g, &sigma).unwrap();
    // the mean mode λ = 0 gives |iσ/iσ| = 1; every other mode stays below
    assert!(s <= 1.0 && s >= 0.99, "{s}");
}

#[test]
fn resolvent_matches_modewise_inverse() {
    let g = TorusGrid::new(2, 8, 2.0 * PI).unwrap();
    let x = SpectralField::random(&g, 1, 3, 1.0, false, &mut stream(7, 0));
    let op = FourierMultiplier::neg_laplacian();
    for z in [Complex64::new(1.0, 0.0), Complex64::new(1.0, 10.0), Complex64::new(100.0, 0.0)] {
        let probe = resolvent_via_maxreg(&op, z, &x, &ResolventOptions::default()).unwrap();
        assert!(probe.deviation < 1e-6 * x.l2_norm(), "z = {z}: {}", probe.deviation);
        // λ >= 0 gives |z + λ| >= |z|, so (1+|z|)|R_z| <= (1+|z|)/|z|
        assert!(probe.bound_constant <= (1.0 + z.norm()) / z.norm() * (1.0 + 1e-6));
    }
    assert!(resolvent_via_maxreg(&op, Complex64::new(-1.0, 0.0), &x, &ResolventOptions::default()).is_err());
}

#[test]
fn resolvent_identity() {
    // R_z − R_w = (w − z) R_z R_w
    let g = TorusGrid::new(1, 8, 2.0 * PI).unwrap();
    let x = SpectralField::random(&g, 1, 3, 0.5, false, &mut stream(2, 0));
    let op = FourierMultiplier::neg_laplacian();
    let o = ResolventOptions::default();
    let (z, w) = (Complex64::new(2.0, 1.0), Complex64::new(0.5, -3.0));
    let rz = resolvent_via_maxreg(&op, z, &x, &o).unwrap().r_z_applied;
    let rw = resolvent_via_maxreg(&op, w, &x, &o).unwrap().r_z_applied;
    let rzrw = resolvent_via_maxreg(&op, z, &rw, &o).unwrap().r_z_applied;
    let mut lhs = rz.sub(&rw).unwrap();
    for (l, r) in lhs.coefficients_mut().iter_mut().zip(rzrw.coefficients()) {
        *l -= (w - z) * r;
    }
    assert!(lhs.l2_norm() < 1e-6 * x.l2_norm());
}

/// `∫_{|t|>2|s|} max_λ |k_λ(t−s) − k_λ(t)| dt` by composite Simpson on a
/// fine uniform grid.
fn brute_force_hormander(spectrum: &[f64], s: f64) -> f64 {
    let lmin = spectrum.iter().copied().filter(|&l| l > 0.0).fold(f64::INFINITY, f64::min);
    let k = |l: f64, t: f64| if t > 0.0 { l * (-l * t).exp() } else { 0.0 };
    let g = |t: f64| {
        spectrum
            .iter()
            .map(|&l| (k(l, t - s) - k(l, t)).abs())
            .fold(0.0, f64::max)
    };
    let (a, b) = (2.0 * s.abs(), 2.0 * s.abs() + 60.0 / lmin);
    let n = 2_000_000;
    let h = (b - a) / n as f64;
    let mut acc = g(a) + g(b);
    for i in 1..n {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(a + i as f64 * h);
    }
    acc * h / 3.0
}

#[test]
fn hormander_matches_brute_force_and_scales() {
    let g = TorusGrid::new(1, 8, 2.0 * PI).unwrap();
    let op = FourierMultiplier::neg_laplacian();
    let spectrum: Vec<f64> = op.spectrum(&g).unwrap().iter().map(|l| l.re).collect();
    let s_grid = [0.05, 0.3, -0.2, 1.0];
    let rep = hormander_check(&op, &g, &s_grid).unwrap();
    for (&s, &v) in s_grid.iter().zip(&rep.integrals) {
        let want = brute_force_hormander(&spectrum, s);
        assert!((v - want).abs() < 1e-6, "s = {s}: {v} vs {want}");
    }
    // k_{cλ}(t) = c k_λ(ct): the integral at s/c for cA equals the one at s for A
    let c = 7.5;
    let scaled = FourierMultiplier::scaled_laplacian(c);
    let s_scaled: Vec<f64> = s_grid.iter().map(|s| s / c).collect();
    let rep2 = hormander_check(&scaled, &g, &s_scaled).unwrap();
    for (a, b) in rep.integrals.iter().zip(&rep2.integrals) {
        assert!((a - b).abs() < 1e-6);
    }
    let spec: Vec<Complex64> = spectrum.iter().map(|&l| Complex64::new(l, 0.0)).collect();
    assert!(hormander_integral(&spec, 0.0).is_err());
}

#[test]
fn rbound_of_scalar_families() {
    let g = TorusGrid::new(1, 16, 2.0 * PI).unwrap();
    let coeffs = [0.3, -1.7, 0.9, 2.4, -0.1, 1.1, 0.05, -2.0, 0.6, 1.3, -0.8, 0.2];
    let family: Vec<FourierMultiplier> = coeffs
        .iter()
        .map(|&c| FourierMultiplier::constant(Complex64::new(c, 0.0)))
        .collect();
    let est = rbound_estimate(&family, &g, 16, 4096, 3).unwrap();
    assert!(est.exact_enumeration);
    let want = coeffs.iter().map(|c: &f64| c.abs()).fold(0.0, f64::max);
    assert!((est.estimate / want - 1.0).abs() < 0.05, "{} vs {want}", est.estimate);
    assert!(est.prefix_estimates.windows(2).all(|w| w[1] >= w[0]));

    let ids: Vec<FourierMultiplier> = (0..8).map(|_| FourierMultiplier::identity()).collect();
    let est = rbound_estimate(&ids, &g, 16, 4096, 3).unwrap();
    assert!((est.estimate - 1.0).abs() < 0.02);
}

#[test]
fn constants_are_finite_and_mu_one_is_unweighted() {
    let g = TorusGrid::new(2, 16, 2.0 * PI).unwrap();
    let time = TimeGrid::uniform(1.0, 64).unwrap();
    let ensemble: Vec<ForcingSpec> = (0..6)
        .map(|i| ForcingSpec::random(&g, 1, &time, 4, 4, &mut stream(11, i)).unwrap())
        .collect();
    let op = FourierMultiplier::neg_laplacian();
    let params = MixedNormParams::new(2.0, 2.0).unwrap();
    let plain = estimate_maxreg_constant(&op, &params, &ensemble).unwrap();
    assert!(plain.c_estimate.is_finite() && plain.c_estimate > 0.0);
    // on L²_t L²_x the Au ratio is bounded by the symbol sup, 1
    assert!(plain.samples.iter().all(|s| s.norm_au <= s.norm_f * 1.05));
    let w = WeightParams::new(1.0, 2.0).unwrap();
    let weighted = weighted_maxreg_check(&op, &params, &w, &ensemble).unwrap();
    assert!(plain.same_measurements(&weighted));
    assert!(WeightParams::new(0.4, 2.0).is_err());
}
