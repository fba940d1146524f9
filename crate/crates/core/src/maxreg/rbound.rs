//! Rademacher-average estimates of R-bounds of multiplier families on
//! `L²(T^n)`:
//! `E‖Σ r_j T_j x_j‖ <= C E‖Σ r_j x_j‖`. In a Hilbert space the norm of a
//! signed sum is `sqrt(εᵀGε)` with `G` the real Gram matrix, so each sign
//! pattern costs `O(n²)` after one pass over the fields.

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, stream_id};
use crate::spectral::{apply_multiplier, FourierMultiplier, SpectralField, TorusGrid};

const NS_FIELDS: u32 = 0x5242_0001;
const NS_SIGNS: u32 = 0x5242_0002;
const EXACT_LIMIT: usize = 12;
const MIN_SIGN_SAMPLES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RBoundOptions {
    /// Random field tuples.
    pub trials: usize,
    /// Sign vectors per tuple when the family is too large to enumerate
    /// (at least 4096 are used).
    pub vectors_per_trial: usize,
    pub seed: u64,
    /// Random fields use modes `|k|_∞ <= kmax` with amplitudes `(1+|k|²)^{-decay/2}`.
    pub kmax: i32,
    pub decay: f64,
}

impl Default for RBoundOptions {
    fn default() -> Self {
        Self {
            trials: 64,
            vectors_per_trial: MIN_SIGN_SAMPLES,
            seed: 0,
            kmax: 6,
            decay: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RBoundEstimate {
    pub family_descriptor: Vec<String>,
    /// Tuples evaluated (random trials plus one single-field probe per member).
    pub samples: usize,
    pub sign_patterns: usize,
    pub exact_enumeration: bool,
    /// Largest sampled Rademacher ratio, a lower bound on the R-bound.
    pub estimate: f64,
    /// `max_j ‖T_j‖`.
    pub uniform_bound: f64,
    /// `prefix_estimates[m]` is the estimate for the first `m + 1` members,
    /// from the same tuples padded with zeros.
    pub prefix_estimates: Vec<f64>,
}

struct Signs {
    patterns: Vec<Vec<f64>>,
}

impl Signs {
    fn exact(n: usize) -> Self {
        // ε and −ε give the same norm, so fix ε₀ = +1
        let count = 1usize << (n - 1);
        let patterns = (0..count)
            .map(|bits| {
                (0..n)
                    .map(|j| if j > 0 && (bits >> (j - 1)) & 1 == 1 { -1.0 } else { 1.0 })
                    .collect()
            })
            .collect();
        Self { patterns }
    }

    fn sampled(n: usize, count: usize, seed: u64, trial: usize) -> Self {
        let columns: Vec<Vec<f64>> = (0..n)
            .map(|j| {
                let mut rng = stream(seed, stream_id(NS_SIGNS, ((trial as u64) << 16) | j as u64));
                (0..count).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
            })
            .collect();
        let patterns = (0..count).map(|s| (0..n).map(|j| columns[j][s]).collect()).collect();
        Self { patterns }
    }
}

fn gram(fields: &[SpectralField]) -> Vec<Vec<f64>> {
    let n = fields.len();
    let mut g = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = fields[i].inner(&fields[j]).re;
            g[i][j] = v;
            g[j][i] = v;
        }
    }
    g
}

/// `E‖Σ ε_j y_j‖` for every prefix length, averaged over the patterns.
fn prefix_means(g: &[Vec<f64>], signs: &Signs) -> Vec<f64> {
    let n = g.len();
    let mut sums = vec![0.0; n];
    for eps in &signs.patterns {
        let mut q = 0.0;
        for m in 0..n {
            // q += 2 ε_m Σ_{i<m} ε_i G_im + G_mm
            let mut cross = 0.0;
            for i in 0..m {
                cross += eps[i] * g[i][m];
            }
            q += 2.0 * eps[m] * cross + g[m][m];
            sums[m] += q.max(0.0).sqrt();
        }
    }
    let count = signs.patterns.len() as f64;
    sums.iter().map(|s| s / count).collect()
}

fn scalar_symbol_max(op: &FourierMultiplier, grid: &TorusGrid) -> Result<(f64, usize)> {
    let eig = op.eigenvalues(grid)?;
    Ok(eig
        .iter()
        .enumerate()
        .map(|(i, v)| (v.norm(), i))
        .fold((0.0, 0), |a, b| if b.0 > a.0 { b } else { a }))
}

/// Estimates the R-bound of `family` on `L²` over the grid.
pub fn rbound_estimate_with(
    family: &[FourierMultiplier],
    grid: &TorusGrid,
    opts: &RBoundOptions,
) -> Result<RBoundEstimate> {
    let n = family.len();
    if n == 0 {
        return Err(Error::InvalidParameter("empty operator family".into()));
    }
    if opts.trials == 0 {
        return Err(Error::InvalidParameter("at least one trial is required".into()));
    }
    if n >= 1 << 16 {
        return Err(Error::InvalidParameter("family too large".into()));
    }
    let maxima: Vec<(f64, usize)> =
        family.iter().map(|op| scalar_symbol_max(op, grid)).collect::<Result<_>>()?;
    let uniform_bound = maxima.iter().map(|m| m.0).fold(0.0, f64::max);

    // single-field probes: x_j = e^{iξ·x} at the mode maximizing |T_j|
    let mut best = vec![0.0f64; n];
    for (j, (op, &(_, idx))) in family.iter().zip(&maxima).enumerate() {
        let mut x = SpectralField::zeros(grid, 1);
        x.component_mut(0)[idx] = Complex64::new(1.0, 0.0);
        let y = apply_multiplier(&x, op)?;
        best[j] = y.l2_norm() / x.l2_norm();
    }
    for m in 1..n {
        best[m] = best[m].max(best[m - 1]);
    }

    let exact = n <= EXACT_LIMIT;
    let shared = exact.then(|| Signs::exact(n));
    let sample_count = opts.vectors_per_trial.max(MIN_SIGN_SAMPLES);
    let per_trial: Vec<Vec<f64>> = (0..opts.trials)
        .into_par_iter()
        .map(|t| {
            let mut xs = Vec::with_capacity(n);
            for j in 0..n {
                let mut attempt = 0u64;
                let x = loop {
                    let id = ((t as u64) << 24) | ((j as u64) << 8) | attempt;
                    let mut rng = stream(opts.seed, stream_id(NS_FIELDS, id));
                    let x = SpectralField::random(grid, 1, opts.kmax, opts.decay, false, &mut rng);
                    if x.l2_norm() > 0.0 || attempt == 255 {
                        break x;
                    }
                    attempt += 1;
                };
                xs.push(x);
            }
            let ys: Vec<SpectralField> = xs
                .iter()
                .zip(family)
                .map(|(x, op)| apply_multiplier(x, op))
                .collect::<Result<_>>()?;
            let sampled;
            let signs = match &shared {
                Some(s) => s,
                None => {
                    sampled = Signs::sampled(n, sample_count, opts.seed, t);
                    &sampled
                }
            };
            let num = prefix_means(&gram(&ys), signs);
            let den = prefix_means(&gram(&xs), signs);
            Ok(num
                .iter()
                .zip(&den)
                .map(|(a, b)| if *b > 0.0 { a / b } else { 0.0 })
                .collect())
        })
        .collect::<Result<_>>()?;

    let mut prefix = best;
    for ratios in &per_trial {
        let mut running = 0.0f64;
        for m in 0..n {
            running = running.max(ratios[m]);
            prefix[m] = prefix[m].max(running);
        }
    }
    for m in 1..n {
        prefix[m] = prefix[m].max(prefix[m - 1]);
    }
    Ok(RBoundEstimate {
        family_descriptor: family.iter().map(|op| op.descriptor().to_string()).collect(),
        samples: opts.trials + n,
        sign_patterns: if exact { 1 << (n - 1) } else { sample_count },
        exact_enumeration: exact,
        estimate: prefix[n - 1],
        uniform_bound,
        prefix_estimates: prefix,
    })
}

/// [`rbound_estimate_with`] with default field sampling.
pub fn rbound_estimate(
    family: &[FourierMultiplier],
    grid: &TorusGrid,
    trials: usize,
    vectors_per_trial: usize,
    seed: u64,
) -> Result<RBoundEstimate> {
    rbound_estimate_with(
        family,
        grid,
        &RBoundOptions {
            trials,
            vectors_per_trial,
            seed,
            ..RBoundOptions::default()
        },
    )
}
