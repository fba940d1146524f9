//! Semilinear problems on the torus in mild form `u = e^{tΔ}u₀ + F(u)`:
//! the nonlinear heat equation with `|u|^{ν-1}u` (or `|u|^ν`) and the
//! Navier–Stokes system with the Helmholtz projection. Criticality checks,
//! small-data existence sweeps, the uniqueness bootstrap and scalar checks of
//! the estimates behind them.

mod checks;
mod existence;
mod uniqueness;

pub use checks::{
    mild_equation_spot_check, nonlinearity_gap, nonlinearity_lipschitz_check,
    smoothing_estimate_check, InequalityReport, SmoothingReport,
};
pub use existence::{
    existence_sweep, nlhe_existence_experiment, ns_existence_experiment, sample_lipschitz,
    ExistenceOptions, ExistenceRecord, SweepPoint,
};
pub use uniqueness::{
    uniqueness_bootstrap, SegmentRecord, UniquenessOptions, UniquenessReport, UniquenessStatus,
};

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::maxreg::solve_with_eigenvalues;
use crate::norms::{
    continuum_mixed_norm, heat_extension, scaling_transform, MixedNormParams, Profile,
    ScalingLaw, TimeGrid, Trajectory,
};
use crate::spectral::{
    helmholtz_project, pointwise_power_nonlinearity, random_solenoidal, tensor_divergence,
    velocity_from_stream, PowerVariant, SpectralField, TorusGrid,
};

const CRITICAL_TOLERANCE: f64 = 1e-12;
const INPUT_DIVERGENCE_LIMIT: f64 = 1e-8;
const DATA_DIVERGENCE_LIMIT: f64 = 1e-10;

/// `∫_{t₀}^t e^{(t-s)Δ} g(s) ds` on the nodes of `g`, starting from zero at
/// the first node.
pub fn heat_duhamel(g: &Trajectory) -> Result<Trajectory> {
    let grid = g.grid();
    let eig: Vec<Complex64> = (0..grid.len())
        .map(|i| Complex64::new(grid.xi_sq(i), 0.0))
        .collect();
    solve_with_eigenvalues(&eig, g)
}

/// A problem `u = e^{tΔ}u₀ + ∫₀ᵗ e^{(t-s)Δ} N(u(s)) ds` on a fixed time grid.
pub trait MildProblem: Clone + Send + Sync + 'static {
    fn label(&self) -> &'static str;
    fn initial_data(&self) -> &SpectralField;
    fn time(&self) -> &TimeGrid;
    /// Norm of the solution space `Y = L^p_t(L^q_x)`.
    fn params(&self) -> &MixedNormParams;
    fn with_initial_data(&self, u0: SpectralField) -> Result<Self>;
    /// `N(u)` at one instant.
    fn nonlinearity(&self, u: &SpectralField) -> Result<SpectralField>;
    /// The part of `N(a + w) − N(a)` linear in `w` whose smoothing is used
    /// on short intervals.
    fn linearized(&self, a: &SpectralField, w: &SpectralField) -> Result<SpectralField>;
    /// Homogeneity of `N`: `ν` for the heat equation, 2 for Navier–Stokes.
    fn power(&self) -> f64;
    /// Spatial exponent of the uniqueness class `C([0,T]; L^q)`.
    fn uniqueness_exponent(&self) -> f64;
    /// Spatial exponent on `a_ε` in the short-time smoothing term.
    fn smoothing_data_exponent(&self) -> f64;
    /// Dimension restriction of the whole-space uniqueness theorem.
    fn endpoint_regime(&self) -> bool;
    /// Random admissible data (mean free, divergence free where needed).
    fn random_data<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SpectralField>;
    /// Signed distance of `Y` from the critical relation.
    fn criticality_defect(&self) -> f64;
    /// Whether the existence theorem's hypotheses hold for `Y`.
    fn theorem_regime(&self) -> bool;

    fn is_critical(&self) -> bool {
        self.criticality_defect().abs() <= CRITICAL_TOLERANCE
    }

    fn dim(&self) -> usize {
        self.initial_data().grid().dim()
    }

    /// `F(u)` on the nodes of `u`, whatever its time grid.
    fn duhamel_of(&self, u: &Trajectory) -> Result<Trajectory> {
        heat_duhamel(&u.map_states(|s| self.nonlinearity(s))?)
    }

    /// `F(u)` on the problem's time grid.
    fn rhs(&self, u: &Trajectory) -> Result<Trajectory> {
        if u.time() != self.time() {
            return Err(Error::GridMismatch(
                "trajectory must live on the problem's time grid".into(),
            ));
        }
        if u.grid() != self.initial_data().grid()
            || u.components() != self.initial_data().components()
        {
            return Err(Error::GridMismatch(
                "trajectory and initial data have different spatial shapes".into(),
            ));
        }
        self.duhamel_of(u)
    }

    /// `e^{tΔ}u₀`.
    fn base(&self) -> Result<Trajectory> {
        heat_extension(self.initial_data(), self.time())
    }

    /// `‖u − e^{tΔ}u₀ − F(u)‖_Y`.
    fn mild_residual(&self, u: &Trajectory) -> Result<f64> {
        let r = u.sub(&self.base()?.add(&self.rhs(u)?)?)?;
        crate::norms::bochner_mixed_norm(&r, self.params())
    }
}

/// `∂ₜu − Δu = |u|^{ν-1}u` (signed) or `|u|^ν` (unsigned).
#[derive(Debug, Clone)]
pub struct NlheProblem {
    pub nu: f64,
    pub variant: PowerVariant,
    pub params: MixedNormParams,
    pub u0: SpectralField,
    pub time: TimeGrid,
}

impl NlheProblem {
    pub fn new(
        nu: f64,
        variant: PowerVariant,
        params: MixedNormParams,
        u0: SpectralField,
        time: TimeGrid,
    ) -> Result<Self> {
        if !(nu > 1.0 && nu.is_finite()) {
            return Err(Error::InvalidParameter(format!("ν must exceed 1, got {nu}")));
        }
        params.validate()?;
        if u0.components() != 1 {
            return Err(Error::DimensionMismatch(
                "the heat equation takes scalar data".into(),
            ));
        }
        Ok(Self {
            nu,
            variant,
            params,
            u0,
            time,
        })
    }

    pub fn law(&self) -> ScalingLaw {
        ScalingLaw::nonlinear_heat(self.nu).expect("ν > 1")
    }

}

impl MildProblem for NlheProblem {
    fn label(&self) -> &'static str {
        "nlhe"
    }

    fn initial_data(&self) -> &SpectralField {
        &self.u0
    }

    fn time(&self) -> &TimeGrid {
        &self.time
    }

    fn params(&self) -> &MixedNormParams {
        &self.params
    }

    fn with_initial_data(&self, u0: SpectralField) -> Result<Self> {
        Self::new(self.nu, self.variant, self.params, u0, self.time.clone())
    }

    fn nonlinearity(&self, u: &SpectralField) -> Result<SpectralField> {
        pointwise_power_nonlinearity(u, self.nu, self.variant)
    }

    fn linearized(&self, a: &SpectralField, w: &SpectralField) -> Result<SpectralField> {
        // |a|^{ν-1} w
        a.check_shape(w)?;
        let mut ad = a.clone();
        ad.dealias();
        let mut wd = w.clone();
        wd.dealias();
        let ap = ad.to_physical_real()?;
        let wp = wd.to_physical_real()?;
        let prod: Vec<f64> = ap
            .iter()
            .zip(&wp)
            .map(|(x, y)| x.abs().powf(self.nu - 1.0) * y)
            .collect();
        let mut out = SpectralField::from_physical(a.grid(), 1, &prod)?;
        out.dealias();
        Ok(out)
    }

    fn power(&self) -> f64 {
        self.nu
    }

    fn uniqueness_exponent(&self) -> f64 {
        self.dim() as f64 * (self.nu - 1.0) / 2.0
    }

    fn smoothing_data_exponent(&self) -> f64 {
        // |a|^{ν-1} ∈ L^n
        self.dim() as f64 * (self.nu - 1.0)
    }

    fn endpoint_regime(&self) -> bool {
        self.dim() as f64 > 2.0 * self.nu / (self.nu - 1.0)
    }

    fn random_data<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SpectralField> {
        Ok(SpectralField::random(self.u0.grid(), 1, 4, 1.0, true, rng))
    }

    /// `2/(ν−1) − n/q − 2/p`.
    fn criticality_defect(&self) -> f64 {
        criticality_check(&self.law(), &self.params, self.dim()).expect("γ = ν ≠ 1")
    }

    /// Critical with `ν < p` and `ν < q`.
    fn theorem_regime(&self) -> bool {
        self.is_critical() && self.nu < self.params.p && self.nu < self.params.q
    }
}

/// `∂ₜu − Δu + ∇π + ∇·(u⊗u) = 0`, `div u = 0`.
#[derive(Debug, Clone)]
pub struct NsProblem {
    pub params: MixedNormParams,
    pub u0: SpectralField,
    pub time: TimeGrid,
}

impl NsProblem {
    pub fn new(params: MixedNormParams, u0: SpectralField, time: TimeGrid) -> Result<Self> {
        params.validate()?;
        let n = u0.grid().dim();
        if n < 2 || u0.components() != n {
            return Err(Error::DimensionMismatch(format!(
                "Navier–Stokes needs n >= 2 and an n-component velocity (n = {n}, {} components)",
                u0.components()
            )));
        }
        let div = u0.max_divergence()?;
        if div > DATA_DIVERGENCE_LIMIT {
            return Err(Error::Precondition(format!(
                "initial velocity has divergence {div:e}"
            )));
        }
        Ok(Self { params, u0, time })
    }

}

impl MildProblem for NsProblem {
    fn label(&self) -> &'static str {
        "ns"
    }

    fn initial_data(&self) -> &SpectralField {
        &self.u0
    }

    fn time(&self) -> &TimeGrid {
        &self.time
    }

    fn params(&self) -> &MixedNormParams {
        &self.params
    }

    fn with_initial_data(&self, u0: SpectralField) -> Result<Self> {
        Self::new(self.params, u0, self.time.clone())
    }

    fn nonlinearity(&self, u: &SpectralField) -> Result<SpectralField> {
        let div = u.max_divergence()?;
        if div > INPUT_DIVERGENCE_LIMIT {
            return Err(Error::Precondition(format!(
                "velocity has divergence {div:e} > {INPUT_DIVERGENCE_LIMIT:e}"
            )));
        }
        Ok(helmholtz_project(&tensor_divergence(u, u)?)?.scaled(-1.0))
    }

    fn linearized(&self, a: &SpectralField, w: &SpectralField) -> Result<SpectralField> {
        let s = tensor_divergence(a, w)?.add(&tensor_divergence(w, a)?)?;
        Ok(helmholtz_project(&s)?.scaled(-1.0))
    }

    fn power(&self) -> f64 {
        2.0
    }

    fn uniqueness_exponent(&self) -> f64 {
        self.dim() as f64
    }

    fn smoothing_data_exponent(&self) -> f64 {
        // e^{rΔ}P∇· gains r^{-1/2} on L^q with the factor a bounded pointwise
        f64::INFINITY
    }

    fn endpoint_regime(&self) -> bool {
        true
    }

    fn random_data<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<SpectralField> {
        random_solenoidal(self.u0.grid(), 4, 1.0, rng)
    }

    /// `1 − n/q − 2/p`.
    fn criticality_defect(&self) -> f64 {
        criticality_check(&ScalingLaw::navier_stokes(), &self.params, self.dim()).expect("γ = 2")
    }

    /// Critical with `p, q < ∞`.
    fn theorem_regime(&self) -> bool {
        self.is_critical() && self.params.p.is_finite() && self.params.q.is_finite()
    }
}

/// `F(u)(t) = ∫₀ᵗ e^{(t-s)Δ}|u(s)|^{ν-1}u(s) ds` (or `|u|^ν`).
pub fn nlhe_rhs_map(u: &Trajectory, prob: &NlheProblem) -> Result<Trajectory> {
    if u.components() != 1 {
        return Err(Error::DimensionMismatch("scalar trajectory expected".into()));
    }
    prob.rhs(u)
}

/// `F(u)(t) = −∫₀ᵗ e^{(t-s)Δ} P∇·(u⊗u)(s) ds`. Inputs with divergence above
/// `1e-8` are rejected.
pub fn ns_rhs_map(u: &Trajectory, prob: &NsProblem) -> Result<Trajectory> {
    prob.rhs(u)
}

/// Largest physical divergence over all states.
pub fn trajectory_max_divergence(u: &Trajectory) -> Result<f64> {
    use rayon::prelude::*;
    let v: Vec<f64> = u
        .states()
        .par_iter()
        .map(|s| s.max_divergence())
        .collect::<Result<_>>()?;
    Ok(v.into_iter().fold(0.0, f64::max))
}

/// `(α−β)/(γ−1) − n/q − α/p`; zero exactly at critical tuples.
pub fn criticality_check(law: &ScalingLaw, params: &MixedNormParams, n: usize) -> Result<f64> {
    law.norm_exponent(params, n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub law: ScalingLaw,
    pub params: MixedNormParams,
    pub n: usize,
    pub profile: Profile,
    /// `e − n/q − α/p`, so that `‖u_λ‖ = λ^{exponent} ‖u‖`.
    pub predicted_exponent: f64,
    pub lambdas: Vec<f64>,
    pub norms: Vec<f64>,
    pub base_norm: f64,
    /// `max |‖u_λ‖ / (λ^{predicted} ‖u‖) − 1|`.
    pub max_deviation: f64,
    /// Least-squares slope of `ln ‖u_λ‖` against `ln λ` (including λ = 1).
    pub measured_exponent: f64,
    pub exponent_error: f64,
}

/// Heat-kernel-like profile `(t+1)^{-(n/2+1)} exp(-|x|²/(4(t+1)))` with finite
/// mixed norms for every `p, q`.
pub fn default_profile(n: usize) -> Profile {
    Profile::SpreadingGaussian {
        amp: 1.0,
        b: 1.0,
        d: 1.0,
        kappa: n as f64 / 2.0 + 1.0,
        c: 0.25,
        rho: 1.0,
    }
}

/// Mixed norms of a continuum profile and its rescalings `u_λ`.
pub fn scaling_invariance_test(
    law: &ScalingLaw,
    params: &MixedNormParams,
    n: usize,
    lambdas: &[f64],
    profile: &Profile,
) -> Result<ScalingReport> {
    use rayon::prelude::*;
    if lambdas.is_empty() || lambdas.iter().any(|&l| !(l > 0.0 && l.is_finite())) {
        return Err(Error::InvalidParameter("λ values must be positive and finite".into()));
    }
    let predicted_exponent = law.norm_exponent(params, n)?;
    let base_norm = continuum_mixed_norm(profile, params, n)?;
    let norms: Vec<f64> = lambdas
        .par_iter()
        .map(|&l| continuum_mixed_norm(&scaling_transform(profile, l, law)?, params, n))
        .collect::<Result<_>>()?;
    let max_deviation = if base_norm > 0.0 {
        lambdas
            .iter()
            .zip(&norms)
            .map(|(&l, &v)| (v / (l.powf(predicted_exponent) * base_norm) - 1.0).abs())
            .fold(0.0, f64::max)
    } else {
        norms.iter().copied().fold(0.0, f64::max)
    };
    let measured_exponent = if base_norm > 0.0 {
        let mut xs = vec![0.0];
        let mut ys = vec![base_norm.ln()];
        for (&l, &v) in lambdas.iter().zip(&norms) {
            xs.push(l.ln());
            ys.push(v.ln());
        }
        let m = xs.len() as f64;
        let xm = xs.iter().sum::<f64>() / m;
        let ym = ys.iter().sum::<f64>() / m;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - xm).powi(2)).sum();
        if sxx > 0.0 {
            sxy / sxx
        } else {
            0.0
        }
    } else {
        0.0
    };
    Ok(ScalingReport {
        law: *law,
        params: *params,
        n,
        profile: *profile,
        predicted_exponent,
        lambdas: lambdas.to_vec(),
        norms,
        base_norm,
        max_deviation,
        measured_exponent,
        exponent_error: (measured_exponent - predicted_exponent).abs(),
    })
}

/// Odd scalar data `sin(κx)cos(κy) + ½ sin(κ(x+2y))` (higher dimensions add
/// `cos` factors in the remaining coordinates), `κ = 2π/L`. Odd data stay odd
/// under the signed power nonlinearity, so the mean stays zero.
pub fn odd_heat_data(grid: &TorusGrid) -> SpectralField {
    let k = 2.0 * PI / grid.period();
    SpectralField::from_fn(grid, |x| {
        let rest: f64 = x[1..].iter().map(|&y| (k * y).cos()).product();
        let y = x.get(1).copied().unwrap_or(0.0);
        (k * x[0]).sin() * rest + 0.5 * (k * (x[0] + 2.0 * y)).sin()
    })
}

/// Two-dimensional Taylor–Green vortex plus a second mode so that the
/// nonlinearity does not reduce to a gradient: the velocity of
/// `ψ = sin(κx) sin(κy) + ½ cos(2κx) sin(κy)`.
pub fn taylor_green_data(grid: &TorusGrid) -> Result<SpectralField> {
    if grid.dim() != 2 {
        return Err(Error::DimensionMismatch("Taylor–Green data are two-dimensional".into()));
    }
    let k = 2.0 * PI / grid.period();
    let psi = SpectralField::from_fn(grid, |x| {
        (k * x[0]).sin() * (k * x[1]).sin() + 0.5 * (2.0 * k * x[0]).cos() * (k * x[1]).sin()
    });
    velocity_from_stream(&psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::bochner_mixed_norm;

    fn nlhe(n: usize) -> NlheProblem {
        let g = TorusGrid::new(n, 16, 2.0 * PI).unwrap();
        NlheProblem::new(
            2.0,
            PowerVariant::Signed,
            MixedNormParams::new(3.0, 1.5).unwrap(),
            odd_heat_data(&g),
            TimeGrid::uniform(0.5, 32).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn rhs_of_zero_is_zero() {
        let p = nlhe(2);
        let z = Trajectory::zeros(&p.time, p.u0.grid(), 1);
        assert_eq!(nlhe_rhs_map(&z, &p).unwrap().max_coefficient_difference(&z), 0.0);

        let g = TorusGrid::new(2, 16, 2.0 * PI).unwrap();
        let ns = NsProblem::new(
            MixedNormParams::new(4.0, 4.0).unwrap(),
            taylor_green_data(&g).unwrap(),
            TimeGrid::uniform(0.5, 16).unwrap(),
        )
        .unwrap();
        let z = Trajectory::zeros(&ns.time, &g, 2);
        assert_eq!(ns_rhs_map(&z, &ns).unwrap().max_coefficient_difference(&z), 0.0);
    }

    #[test]
    fn stationary_square_matches_modewise_convolution() {
        // u = cos x for all t, ν = 2 unsigned: u² = ½ + ½cos 2x, so
        // F(u)(t) = t/2 + (1 − e^{-4t})/8 · cos 2x
        let g = TorusGrid::new(1, 32, 2.0 * PI).unwrap();
        let time = TimeGrid::uniform(1.0, 64).unwrap();
        let u0 = SpectralField::cosine_mode(&g, &[1], 1.0).unwrap();
        let prob = NlheProblem::new(
            2.0,
            PowerVariant::Unsigned,
            MixedNormParams::new(2.0, 2.0).unwrap(),
            u0.clone(),
            time.clone(),
        )
        .unwrap();
        let u = Trajectory::from_fn(&time, |_| u0.clone()).unwrap();
        let f = nlhe_rhs_map(&u, &prob).unwrap();
        let i0 = g.index_of(&[0]).unwrap();
        let i2 = g.index_of(&[2]).unwrap();
        for (k, &t) in time.nodes().iter().enumerate() {
            let c = f.state(k).coefficients();
            assert!((c[i0].re - t / 2.0).abs() < 1e-14);
            // each of the ±2 coefficients carries half of the cosine amplitude
            let want = (1.0 - (-4.0 * t).exp()) / 16.0;
            assert!((c[i2].re - want).abs() < 1e-14, "t={t}");
        }
    }

    #[test]
    fn signed_map_is_odd() {
        let p = nlhe(2);
        let a = p.base().unwrap();
        let f = nlhe_rhs_map(&a, &p).unwrap();
        let g = nlhe_rhs_map(&a.scaled(-1.0), &p).unwrap();
        assert!(f.add(&g).unwrap().max_coefficient_difference(&f.scaled(0.0)) < 1e-12);
    }

    #[test]
    fn ns_output_is_divergence_free_and_rejects_compressible_input() {
        let g = TorusGrid::new(2, 32, 2.0 * PI).unwrap();
        let time = TimeGrid::uniform(0.25, 16).unwrap();
        let prob = NsProblem::new(
            MixedNormParams::new(4.0, 4.0).unwrap(),
            taylor_green_data(&g).unwrap(),
            time.clone(),
        )
        .unwrap();
        let mut rng = crate::rng::stream(7, 0);
        let w = prob.random_data(&mut rng).unwrap();
        let u = heat_extension(&w, &time).unwrap();
        let f = ns_rhs_map(&u, &prob).unwrap();
        assert!(trajectory_max_divergence(&f).unwrap() <= 1e-10);
        assert!(bochner_mixed_norm(&f, &prob.params).unwrap() > 0.0);

        let c = SpectralField::from_vector_fn(&g, 2, |_, out| {
            out[0] = 0.3;
            out[1] = -1.0;
        });
        let u = Trajectory::from_fn(&time, |_| c.clone()).unwrap();
        assert!(ns_rhs_map(&u, &prob).unwrap().max_coefficient_difference(&u.scaled(0.0)) < 1e-15);

        let grad = SpectralField::from_fn(&g, |x| x[0].sin()).gradient().unwrap();
        let u = Trajectory::from_fn(&time, |_| grad.clone()).unwrap();
        assert!(matches!(ns_rhs_map(&u, &prob), Err(Error::Precondition(_))));
    }

    #[test]
    fn critical_relations() {
        let p2 = MixedNormParams::new(3.0, 1.5).unwrap();
        let heat = ScalingLaw::nonlinear_heat(2.0).unwrap();
        assert!(criticality_check(&heat, &p2, 2).unwrap().abs() < 1e-12);
        let ns = ScalingLaw::navier_stokes();
        let p4 = MixedNormParams::new(4.0, 4.0).unwrap();
        assert!(criticality_check(&ns, &p4, 2).unwrap().abs() < 1e-12);
        // p = ∞ leaves q = n(ν−1)/2
        let nu = 3.0;
        let n = 4;
        let q = n as f64 * (nu - 1.0) / 2.0;
        let pinf = MixedNormParams::new(f64::INFINITY, q).unwrap();
        let law = ScalingLaw::nonlinear_heat(nu).unwrap();
        assert!(criticality_check(&law, &pinf, n).unwrap().abs() < 1e-12);
        assert!(ScalingLaw::new(2.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn divergent_data_rejected() {
        let g = TorusGrid::new(2, 16, 2.0 * PI).unwrap();
        let grad = SpectralField::from_fn(&g, |x| x[0].cos()).gradient().unwrap();
        assert!(NsProblem::new(
            MixedNormParams::new(4.0, 4.0).unwrap(),
            grad,
            TimeGrid::uniform(1.0, 4).unwrap()
        )
        .is_err());
    }
}
