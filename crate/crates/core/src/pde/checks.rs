//! Scalar and linear estimates used by the existence and uniqueness proofs,
//! checked directly.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::MildProblem;
use crate::error::{Error, Result};
use crate::norms::{check_mean_free, spatial_lq_norm, Trajectory};
use crate::rng::{stream, stream_id};
use crate::spectral::{heat_semigroup_apply, SpectralField};

const NS_PAIRS: u32 = 0x4e4c_0001;
const CHUNK: usize = 1 << 16;

/// `(lhs, rhs)` of `||x|^{ν-1}x − |y|^{ν-1}y| <= ν(|x|^{ν-1} + |y|^{ν-1})|x − y|`.
///
/// For equal signs the left side is formed as `b^ν expm1(ν log1p((a−b)/b))`,
/// which keeps its relative accuracy when `x ≈ y`.
pub fn nonlinearity_gap(x: f64, y: f64, nu: f64) -> (f64, f64) {
    let (a, b) = (x.abs(), y.abs());
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    let same_sign = x == 0.0 || y == 0.0 || (x > 0.0) == (y > 0.0);
    let lhs = if !same_sign {
        a.powf(nu) + b.powf(nu)
    } else if lo == 0.0 {
        hi.powf(nu)
    } else if hi / lo > 1e8 {
        hi.powf(nu) - lo.powf(nu)
    } else {
        lo.powf(nu) * (nu * ((hi - lo) / lo).ln_1p()).exp_m1()
    };
    let dist = if same_sign { hi - lo } else { a + b };
    let rhs = nu * (a.powf(nu - 1.0) + b.powf(nu - 1.0)) * dist;
    (lhs, rhs)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InequalityReport {
    pub nu: f64,
    pub samples: usize,
    /// `max (lhs − rhs)`; the inequality holds when this is `<= 0`.
    pub max_violation: f64,
    /// `max lhs/rhs` over pairs whose `rhs` is a normal float.
    pub max_ratio: f64,
    pub worst_pair: (f64, f64),
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp()
}

fn signed<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let v = log_uniform(rng, lo, hi);
    if rng.random::<bool>() {
        v
    } else {
        -v
    }
}

fn sample_pair<R: Rng + ?Sized>(rng: &mut R, kind: usize) -> (f64, f64) {
    match kind {
        // generic magnitudes, random signs
        0 => {
            let x = signed(rng, 1e-6, 1e6);
            (x, signed(rng, 1e-6, 1e6))
        }
        // one value near zero
        1 => {
            let x = signed(rng, 1e-3, 1e3);
            (x, signed(rng, 1e-300, 1e-12))
        }
        // opposite signs
        2 => {
            let x = log_uniform(rng, 1e-4, 1e4);
            (x, -log_uniform(rng, 1e-4, 1e4))
        }
        // equal values
        3 => {
            let x = signed(rng, 1e-6, 1e6);
            (x, x)
        }
        // nearly equal values
        4 => {
            let x = signed(rng, 1e-6, 1e6);
            let rel = signed(rng, 1e-15, 1e-1);
            (x, x * (1.0 + rel))
        }
        // both near zero
        _ => {
            let x = signed(rng, 1e-200, 1e-8);
            (x, signed(rng, 1e-200, 1e-8))
        }
    }
}

/// Samples `samples` real pairs (generic, near-zero, opposite-sign, equal and
/// nearly equal) and reports the largest `lhs − rhs`.
pub fn nonlinearity_lipschitz_check(nu: f64, samples: usize, seed: u64) -> Result<InequalityReport> {
    if !(nu > 1.0 && nu.is_finite()) {
        return Err(Error::InvalidParameter(format!("ν must exceed 1, got {nu}")));
    }
    let chunks = samples.div_ceil(CHUNK);
    let per_chunk: Vec<(f64, f64, (f64, f64))> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, stream_id(NS_PAIRS, c as u64));
            let count = CHUNK.min(samples - c * CHUNK);
            let mut worst = (f64::NEG_INFINITY, 0.0, (0.0, 0.0));
            for i in 0..count {
                let (x, y) = sample_pair(&mut rng, (c * CHUNK + i) % 6);
                let (lhs, rhs) = nonlinearity_gap(x, y, nu);
                let v = lhs - rhs;
                if v > worst.0 {
                    worst.0 = v;
                    worst.2 = (x, y);
                }
                if rhs >= f64::MIN_POSITIVE {
                    worst.1 = f64::max(worst.1, lhs / rhs);
                }
            }
            worst
        })
        .collect();
    let mut out = InequalityReport {
        nu,
        samples,
        max_violation: f64::NEG_INFINITY,
        max_ratio: 0.0,
        worst_pair: (0.0, 0.0),
    };
    for (v, r, pair) in per_chunk {
        if v > out.max_violation {
            out.max_violation = v;
            out.worst_pair = pair;
        }
        out.max_ratio = out.max_ratio.max(r);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothingReport {
    pub q: f64,
    /// `nq/(n+q)`
    pub source_exponent: f64,
    pub r_grid: Vec<f64>,
    /// `ratios[s][j] = ‖e^{r_jΔ}f_s‖_q √r_j / ‖f_s‖_{nq/(n+q)}`.
    pub ratios: Vec<Vec<f64>>,
    pub max_ratio: f64,
    /// Largest `max_j / min_j` over nonzero samples.
    pub max_over_min: f64,
    /// `(L/N)²`, the smallest resolved smoothing time.
    pub resolved_scale: f64,
    pub all_finite: bool,
}

/// `‖e^{rΔ}f‖_{L^q} √r / ‖f‖_{L^{nq/(n+q)}}` for each sample and each `r`.
pub fn smoothing_estimate_check(
    samples: &[SpectralField],
    q: f64,
    r_grid: &[f64],
) -> Result<SmoothingReport> {
    let first = samples
        .first()
        .ok_or_else(|| Error::InvalidParameter("no samples".into()))?;
    let grid = first.grid();
    let n = grid.dim() as f64;
    let s = n * q / (n + q);
    if !(q > 1.0 && s > 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need q > 1 and nq/(n+q) > 1 (q = {q}, nq/(n+q) = {s})"
        )));
    }
    if r_grid.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidParameter("smoothing times must be positive".into()));
    }
    for f in samples {
        check_mean_free(f)?;
    }
    let ratios: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|f| {
            let den = spatial_lq_norm(f, s)?;
            r_grid
                .iter()
                .map(|&r| {
                    if den == 0.0 {
                        return Ok(0.0);
                    }
                    Ok(spatial_lq_norm(&heat_semigroup_apply(f, r)?, q)? * r.sqrt() / den)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let all_finite = ratios.iter().flatten().all(|v| v.is_finite());
    let max_ratio = ratios.iter().flatten().copied().fold(0.0, f64::max);
    let max_over_min = ratios
        .iter()
        .filter(|row| row.iter().any(|&v| v > 0.0))
        .map(|row| {
            let hi = row.iter().copied().fold(0.0, f64::max);
            let lo = row.iter().copied().fold(f64::INFINITY, f64::min);
            hi / lo
        })
        .fold(1.0, f64::max);
    let h = grid.spacing();
    Ok(SmoothingReport {
        q,
        source_exponent: s,
        r_grid: r_grid.to_vec(),
        ratios,
        max_ratio,
        max_over_min,
        resolved_scale: h * h,
        all_finite,
    })
}

/// Re-evaluates `e^{tΔ}u₀ + ∫₀ᵗ e^{(t-s)Δ}N(u(s)) ds` at the listed nodes by
/// 8-point Gauss–Legendre quadrature on every interval, with `N(u)`
/// interpolated linearly between nodes, and returns the largest
/// `‖u(t_k) − ·‖_{L^q} / max(‖u(t_k)‖_{L^q}, 1e-300)`.
pub fn mild_equation_spot_check<P: MildProblem>(
    prob: &P,
    u: &Trajectory,
    nodes: &[usize],
) -> Result<f64> {
    const X: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_2,
    ];
    const W: [f64; 4] = [
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let q = prob.params().q;
    let time = u.time().nodes();
    let grid = u.grid().clone();
    let len = grid.len();
    let m = u.components();
    let nl: Vec<SpectralField> = u
        .states()
        .par_iter()
        .map(|s| prob.nonlinearity(s))
        .collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for &k in nodes {
        if k >= time.len() {
            return Err(Error::InvalidParameter(format!("node {k} out of range")));
        }
        let t = time[k];
        let mut acc = heat_semigroup_apply(prob.initial_data(), t - time[0])?;
        for j in 0..k {
            let (a, b) = (time[j], time[j + 1]);
            let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
            for (&x, &w) in X.iter().zip(&W) {
                for s in [mid - half * x, mid + half * x] {
                    let theta = (s - a) / (b - a);
                    let coeffs = acc.coefficients_mut();
                    for c in 0..m {
                        for idx in 0..len {
                            let i = c * len + idx;
                            let g = nl[j].coefficients()[i] * (1.0 - theta)
                                + nl[j + 1].coefficients()[i] * theta;
                            coeffs[i] += g * (w * half * (-(t - s) * grid.xi_sq(idx)).exp());
                        }
                    }
                }
            }
        }
        let uk = u.state(k);
        let scale = spatial_lq_norm(uk, q)?.max(1e-300);
        worst = worst.max(spatial_lq_norm(&uk.sub(&acc)?, q)? / scale);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{point_source, TorusGrid};

    #[test]
    fn gap_examples() {
        assert_eq!(nonlinearity_gap(0.7, 0.7, 2.0), (0.0, 0.0));
        assert_eq!(nonlinearity_gap(1.0, 0.0, 2.0), (1.0, 2.0));
        let (l, r) = nonlinearity_gap(2.0, -1.0, 3.0);
        assert_eq!(l, 9.0);
        assert_eq!(r, 3.0 * 5.0 * 3.0);
        let d = 2f64.powi(-40);
        let (l, _) = nonlinearity_gap(1.0 + d, 1.0, 2.0);
        assert!((l - (2.0 * d + d * d)).abs() < 1e-28);
    }

    #[test]
    fn sampled_inequality_holds() {
        for &nu in &[1.5, 2.0, 3.0] {
            let r = nonlinearity_lipschitz_check(nu, 200_000, 1).unwrap();
            assert!(r.max_violation <= 0.0, "ν={nu}: {r:?}");
            assert!(r.max_ratio < 1.0, "ν={nu}: {r:?}");
        }
        assert!(nonlinearity_lipschitz_check(1.0, 10, 0).is_err());
    }

    #[test]
    fn smoothing_of_point_source_is_stable_over_octaves() {
        let g = TorusGrid::new(2, 64, 2.0 * std::f64::consts::PI).unwrap();
        let h2 = g.spacing().powi(2);
        let rs: Vec<f64> = (0..5).map(|j| h2 * 2f64.powi(j)).collect();
        let rep = smoothing_estimate_check(&[point_source(&g)], 3.0, &rs).unwrap();
        assert!(rep.all_finite);
        assert!(rep.max_over_min <= 3.0, "{rep:?}");

        let zero = SpectralField::zeros(&g, 1);
        let rep = smoothing_estimate_check(&[zero], 3.0, &rs).unwrap();
        assert!(rep.ratios[0].iter().all(|&v| v == 0.0));

        let one = SpectralField::from_fn(&g, |_| 1.0);
        assert!(smoothing_estimate_check(&[one], 3.0, &rs).is_err());
        assert!(smoothing_estimate_check(&[point_source(&g)], 2.0, &rs).is_err());
    }
}
