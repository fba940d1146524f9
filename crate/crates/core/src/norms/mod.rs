//! Spatial `L^q` norms, mixed Bochner norms `L^p_t(L^q_x)`, power-weighted
//! norms, and the heat-extension characterization of the Besov norm.

mod profile;
mod time;

pub use profile::{
    continuum_mixed_norm, continuum_spatial_norm, scaling_transform, Profile, ScalingLaw,
    CATALOGUE_VERSION,
    SpaceShape, TimeShape,
};
pub use time::{Horizon, TimeGrid, Trajectory};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{heat_semigroup_apply, SpectralField};

/// Exponents of `L^p_t(L^q_x)`; `p` may be `f64::INFINITY`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedNormParams {
    pub p: f64,
    pub q: f64,
}

impl MixedNormParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        let s = Self { p, q };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0) {
            return Err(Error::InvalidParameter(format!("p must exceed 1, got {}", self.p)));
        }
        if !(self.q > 1.0) {
            return Err(Error::InvalidParameter(format!("q must exceed 1, got {}", self.q)));
        }
        Ok(())
    }
}

/// Power weight `t^{1-μ}` with `1/p < μ <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub mu: f64,
}

impl WeightParams {
    pub fn new(mu: f64, p: f64) -> Result<Self> {
        let w = Self { mu };
        w.validate(p)?;
        Ok(w)
    }

    pub fn validate(&self, p: f64) -> Result<()> {
        if !(self.mu > 1.0 / p && self.mu <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "μ must exceed 1/p and be at most 1 (μ = {}, 1/p = {})",
                self.mu,
                1.0 / p
            )));
        }
        Ok(())
    }
}

/// `‖u‖_{L^q(T^n)}` by physical-space quadrature; vector fields use the
/// pointwise Euclidean magnitude, complex fields the modulus. `q = ∞` is the
/// max over grid points.
pub fn spatial_lq_norm(field: &SpectralField, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::InvalidParameter(format!("q must be at least 1, got {q}")));
    }
    let grid = field.grid();
    if q == 2.0 {
        // discrete Parseval is exact for the grid quadrature
        return Ok(field.l2_norm());
    }
    let len = grid.len();
    let phys = field.to_physical();
    let m = field.components();
    let mag = |p: usize| -> f64 {
        if m == 1 {
            phys[p].norm()
        } else {
            (0..m).map(|c| phys[c * len + p].norm_sqr()).sum::<f64>().sqrt()
        }
    };
    if q.is_infinite() {
        return Ok((0..len).map(mag).fold(0.0, f64::max));
    }
    let s: f64 = (0..len).map(|p| mag(p).powf(q)).sum();
    Ok((s * grid.cell_volume()).powf(1.0 / q))
}

/// Spatial norms of every state, in node order.
pub fn spatial_norm_series(traj: &Trajectory, q: f64) -> Result<Vec<f64>> {
    traj.states()
        .par_iter()
        .map(|s| spatial_lq_norm(s, q))
        .collect()
}

fn time_norm(values: &[f64], weights: &[f64], nodes: &[f64], p: f64, weight_exp: f64) -> f64 {
    if p.is_infinite() {
        return values
            .iter()
            .zip(nodes)
            .map(|(v, t)| v * t.powf(weight_exp))
            .fold(0.0, f64::max);
    }
    let mut acc = 0.0;
    for ((v, w), t) in values.iter().zip(weights).zip(nodes) {
        let tw = if weight_exp == 0.0 { 1.0 } else { t.powf(weight_exp * p) };
        acc += w * tw * v.powf(p);
    }
    acc.powf(1.0 / p)
}

/// Mixed norm from precomputed spatial norms.
pub fn mixed_norm_from_series(series: &[f64], time: &TimeGrid, p: f64) -> f64 {
    time_norm(series, time.weights(), time.nodes(), p, 0.0)
}

/// `‖u‖_{L^p(0,T;L^q)}` with the grid's quadrature weights; `p = ∞` takes the
/// max over nodes.
pub fn bochner_mixed_norm(traj: &Trajectory, params: &MixedNormParams) -> Result<f64> {
    if traj.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory".into()));
    }
    let series = spatial_norm_series(traj, params.q)?;
    Ok(mixed_norm_from_series(&series, traj.time(), params.p))
}

/// `‖t ↦ t^{1-μ} u(t)‖_{L^p(L^q)}`.
pub fn weighted_bochner_norm(
    traj: &Trajectory,
    params: &MixedNormParams,
    w: &WeightParams,
) -> Result<f64> {
    w.validate(params.p)?;
    if traj.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory".into()));
    }
    let series = spatial_norm_series(traj, params.q)?;
    Ok(weighted_norm_from_series(&series, traj.time(), params.p, w))
}

pub fn weighted_norm_from_series(series: &[f64], time: &TimeGrid, p: f64, w: &WeightParams) -> f64 {
    time_norm(series, time.weights(), time.nodes(), p, 1.0 - w.mu)
}

/// Sup over `[nodes[0], nodes[last]]` of a scalar function known exactly
/// between nodes: max over nodes, then golden-section refinement on the two
/// intervals adjacent to the argmax.
pub fn refined_sup(nodes: &[f64], f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let vals: Vec<f64> = nodes.iter().map(|&t| f(t)).collect::<Result<_>>()?;
    let (imax, &vmax) = vals
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::InvalidParameter("no nodes".into()))?;
    let mut best = vmax;
    let lo = if imax > 0 { imax - 1 } else { 0 };
    let hi = (imax + 1).min(nodes.len() - 1);
    for (a, b) in [(nodes[lo], nodes[imax]), (nodes[imax], nodes[hi])] {
        if b <= a {
            continue;
        }
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let (mut a, mut b) = (a, b);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let mut fc = f(c)?;
        let mut fd = f(d)?;
        for _ in 0..60 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = f(c)?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = f(d)?;
            }
            if (b - a) <= 1e-12 * b.abs().max(1e-300) {
                break;
            }
        }
        best = best.max(fc).max(fd);
    }
    Ok(best)
}

/// Resolution settings for heat-extension norms on `(0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatNormOptions {
    pub t_min: f64,
    pub intervals: usize,
    /// Relative size of the neglected tail `∫_{T_max}^∞`.
    pub tail_tolerance: f64,
}

impl Default for HeatNormOptions {
    fn default() -> Self {
        Self {
            t_min: 1e-6,
            intervals: 512,
            tail_tolerance: 1e-10,
        }
    }
}

/// Value of a heat-extension norm with its truncation certificate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatExtensionNorm {
    pub value: f64,
    pub t_max: f64,
    /// Upper bound on the neglected `∫_{T_max}^∞ ‖e^{tΔ}u₀‖_q^p dt`.
    pub tail_bound: f64,
    #[serde(skip)]
    pub time: TimeGrid,
}

/// Rejects fields whose zero mode is not negligible.
pub fn check_mean_free(u0: &SpectralField) -> Result<()> {
    let mean = u0.max_mean();
    if mean > 1e-12 * u0.max_abs_coefficient().max(1e-300) && mean > 1e-300 {
        return Err(Error::NonZeroMean(mean));
    }
    Ok(())
}

/// Slowest decay rate `λ_min` among the nonzero modes of `u0` and the bound
/// `B = |T|^{1/q} Σ|c_k|`, so that `‖e^{tΔ}u0‖_q <= B e^{-λ_min t}`.
fn heat_decay_data(u0: &SpectralField, q: f64) -> (f64, f64) {
    let grid = u0.grid();
    let cmax = u0.max_abs_coefficient();
    let mut lam_min = f64::INFINITY;
    let mut abs_sum = 0.0;
    for c in 0..u0.components() {
        for (idx, v) in u0.component(c).iter().enumerate() {
            let a = v.norm();
            if a > 1e-14 * cmax && idx != 0 {
                lam_min = lam_min.min(grid.xi_sq(idx));
            }
            abs_sum += a;
        }
    }
    if !lam_min.is_finite() {
        lam_min = grid.lowest_eigenvalue();
    }
    (lam_min, grid.volume().powf(1.0 / q) * abs_sum)
}

fn heat_grid(t_max: f64, tail: f64, opts: &HeatNormOptions) -> Result<TimeGrid> {
    Ok(
        TimeGrid::log_truncated(opts.t_min, t_max.max(10.0 * opts.t_min), opts.intervals)?
            .with_tail_bound(tail),
    )
}

/// Log-truncated time grid for the heat extension of a mean-free `u0`
/// measured in `L^p_t`, with `T_max = ln(1/tail_tolerance)/(p λ_min)`. The
/// grid carries the bound `B^p e^{-pλ_min T_max}/(pλ_min)` on the neglected
/// tail.
pub fn heat_time_grid(u0: &SpectralField, p: f64, q: f64, opts: &HeatNormOptions) -> Result<TimeGrid> {
    check_mean_free(u0)?;
    let (lam, b) = heat_decay_data(u0, q);
    let t_max = (1.0 / opts.tail_tolerance).ln() / (p * lam);
    let tail = b.powf(p) * (-p * lam * t_max).exp() / (p * lam);
    heat_grid(t_max, tail, opts)
}

/// `t ↦ e^{tΔ}u0` sampled on `time`.
pub fn heat_extension(u0: &SpectralField, time: &TimeGrid) -> Result<Trajectory> {
    let states: Result<Vec<_>> = time
        .nodes()
        .par_iter()
        .map(|&t| heat_semigroup_apply(u0, t))
        .collect();
    Trajectory::new(time.clone(), states?)
}

/// `‖t ↦ e^{tΔ}u0‖_{L^p(0,∞;L^q)}`, the heat-extension norm used as the
/// homogeneous Besov norm of regularity `-2/p`.
pub fn besov_heat_norm(
    u0: &SpectralField,
    params: &MixedNormParams,
    opts: &HeatNormOptions,
) -> Result<HeatExtensionNorm> {
    params.validate()?;
    if params.p.is_infinite() || params.q.is_infinite() {
        return Err(Error::InvalidParameter("Besov heat norm needs finite p and q".into()));
    }
    let (p, q) = (params.p, params.q);
    let mut time = heat_time_grid(u0, p, q, opts)?;
    if u0.max_abs_coefficient() == 0.0 {
        return Ok(HeatExtensionNorm {
            value: 0.0,
            t_max: time.end(),
            tail_bound: 0.0,
            time,
        });
    }
    let (lam, b) = heat_decay_data(u0, q);
    let tail_at = |t: f64| b.powf(p) * (-p * lam * t).exp() / (p * lam);
    let mut value = bochner_mixed_norm(&heat_extension(u0, &time)?, params)?;
    // extend once if the tail is not yet a tail_tolerance fraction of ‖·‖^p
    let target = opts.tail_tolerance * value.powf(p);
    if tail_at(time.end()) > target {
        let t_max = (b.powf(p) / (p * lam * target)).ln() / (p * lam);
        time = heat_grid(t_max, tail_at(t_max), opts)?;
        value = bochner_mixed_norm(&heat_extension(u0, &time)?, params)?;
    }
    Ok(HeatExtensionNorm {
        value,
        t_max: time.end(),
        tail_bound: tail_at(time.end()),
        time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::TorusGrid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn lq_norm_of_constants_and_sine() {
        let g = TorusGrid::new(2, 16, 3.0).unwrap();
        let c = SpectralField::from_fn(&g, |_| -2.0);
        for &q in &[1.0, 1.5, 2.0, 4.0] {
            let want = 2.0 * 3f64.powf(2.0 / q);
            assert!((spatial_lq_norm(&c, q).unwrap() - want).abs() < 1e-12 * want);
        }
        assert_eq!(spatial_lq_norm(&SpectralField::zeros(&g, 1), 3.0).unwrap(), 0.0);

        let l = 5.0;
        let g1 = TorusGrid::new(1, 32, l).unwrap();
        let s = SpectralField::from_fn(&g1, |x| (2.0 * PI * x[0] / l).sin());
        let want = l.sqrt() / 2f64.sqrt();
        assert!((spatial_lq_norm(&s, 2.0).unwrap() - want).abs() < 1e-10);
        assert!((spatial_lq_norm(&s, f64::INFINITY).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn separable_bochner_norm() {
        // u = √t: with p = 2 the integrand is linear in t, so trapezoid is exact
        let g = TorusGrid::new(1, 8, 2.0).unwrap();
        let time = TimeGrid::uniform(1.0, 10).unwrap();
        let traj = Trajectory::from_fn(&time, |t| SpectralField::from_fn(&g, move |_| t.sqrt())).unwrap();
        let n = bochner_mixed_norm(&traj, &MixedNormParams::new(2.0, 3.0).unwrap()).unwrap();
        // ‖√t‖_{L²(0,1)} = 1/√2, spatial factor L^{1/q}
        let want = (0.5f64).sqrt() * 2f64.powf(1.0 / 3.0);
        assert!((n - want).abs() < 1e-12);
    }

    #[test]
    fn exponential_decay_on_log_grid() {
        let g = TorusGrid::new(2, 16, 2.0 * PI).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let field = SpectralField::random(&g, 1, 3, 0.0, false, &mut rng);
        let time = TimeGrid::log_truncated(1e-6, 40.0, 512).unwrap();
        let traj = Trajectory::from_fn(&time, |t| field.scaled((-t).exp())).unwrap();
        let q = 3.0;
        let n = bochner_mixed_norm(&traj, &MixedNormParams::new(2.0, q).unwrap()).unwrap();
        let want = spatial_lq_norm(&field, q).unwrap() / 2f64.sqrt();
        assert!((n - want).abs() < 1e-6 * want, "{n} vs {want}");

        // weight μ = 3/4: ∫ t^{1/2} e^{-2t} dt = Γ(3/2)/2^{3/2}
        let w = WeightParams::new(0.75, 2.0).unwrap();
        let nw = weighted_bochner_norm(&traj, &MixedNormParams::new(2.0, q).unwrap(), &w).unwrap();
        let oracle = (PI.sqrt() / 2.0 / 2f64.powf(1.5)).sqrt() * spatial_lq_norm(&field, q).unwrap();
        assert!((nw - oracle).abs() < 1e-6 * oracle, "{nw} vs {oracle}");
    }

    #[test]
    fn weighted_mu_one_is_unweighted_exactly() {
        let g = TorusGrid::new(2, 8, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let time = TimeGrid::uniform(2.0, 12).unwrap();
        let states: Vec<_> = (0..time.len())
            .map(|_| SpectralField::random(&g, 1, 3, 0.0, false, &mut rng))
            .collect();
        let traj = Trajectory::new(time, states).unwrap();
        let params = MixedNormParams::new(2.5, 1.5).unwrap();
        let a = bochner_mixed_norm(&traj, &params).unwrap();
        let b = weighted_bochner_norm(&traj, &params, &WeightParams::new(1.0, 2.5).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(WeightParams::new(0.3, 2.0).is_err());
    }

    #[test]
    fn besov_norm_of_single_mode() {
        let g = TorusGrid::new(2, 32, 2.0 * PI).unwrap();
        let k = [2, -1];
        let mode = SpectralField::cosine_mode(&g, &k, 0.8).unwrap();
        for &(p, q) in &[(2.0, 2.0), (3.0, 1.5), (4.0, 4.0)] {
            let params = MixedNormParams::new(p, q).unwrap();
            let got = besov_heat_norm(&mode, &params, &HeatNormOptions::default()).unwrap();
            let k2 = 5.0;
            let want = (p * k2).powf(-1.0 / p) * spatial_lq_norm(&mode, q).unwrap();
            assert!((got.value - want).abs() < 1e-6 * want, "p={p} q={q}: {} vs {want}", got.value);
            assert!(got.tail_bound <= 1e-10 * got.value.powf(p) * (1.0 + 1e-9));
        }
    }

    #[test]
    fn besov_norm_edge_cases() {
        let g = TorusGrid::new(2, 16, 2.0 * PI).unwrap();
        let params = MixedNormParams::new(2.0, 2.0).unwrap();
        let z = besov_heat_norm(&SpectralField::zeros(&g, 1), &params, &HeatNormOptions::default())
            .unwrap();
        assert_eq!(z.value, 0.0);
        let c = SpectralField::from_fn(&g, |_| 1.0);
        assert!(matches!(
            besov_heat_norm(&c, &params, &HeatNormOptions::default()),
            Err(Error::NonZeroMean(_))
        ));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = SpectralField::random(&g, 1, 4, 0.0, true, &mut rng);
        let a = besov_heat_norm(&u, &params, &HeatNormOptions::default()).unwrap().value;
        let b = besov_heat_norm(&u.scaled(-3.0), &params, &HeatNormOptions::default())
            .unwrap()
            .value;
        assert!((b - 3.0 * a).abs() < 1e-12 * b);
    }

    #[test]
    fn refined_sup_finds_interior_peak() {
        let nodes: Vec<f64> = (0..=10).map(|i| i as f64 * 0.1).collect();
        let s = refined_sup(&nodes, |t| Ok(-(t - 0.437f64).powi(2))).unwrap();
        assert!(s.abs() < 1e-18);
    }
}
