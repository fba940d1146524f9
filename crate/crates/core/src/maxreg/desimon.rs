//! The Fourier-in-time route: `𝓕(Au)(τ) = A(iτ + A)^{-1} 𝓕f(τ)`.

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::duhamel::{active_indices, generator_eigenvalues};
use super::LinearProblem;
use crate::error::{Error, Result};
use crate::norms::Trajectory;
use crate::spectral::{resolvent_multiplier, FourierMultiplier, SpectralField, TorusGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeSimonOptions {
    /// The forcing is zero-extended to `pad_factor` times its length before
    /// the discrete transform, to keep the periodic wrap-around away.
    pub pad_factor: usize,
}

impl Default for DeSimonOptions {
    fn default() -> Self {
        Self { pad_factor: 4 }
    }
}

fn symbol(lam: Complex64, tau: f64) -> Complex64 {
    let d = Complex64::new(0.0, tau) + lam;
    if d == Complex64::default() {
        Complex64::default()
    } else {
        lam / d
    }
}

/// `Au` for `∂ₜu + Au = f`, `u(0) = 0`, by a discrete Fourier transform in
/// time. Needs a uniform grid.
pub fn de_simon_multiplier_solve(prob: &LinearProblem, opts: &DeSimonOptions) -> Result<Trajectory> {
    let time = prob.forcing.time();
    let h = time.uniform_step().ok_or_else(|| {
        Error::NonUniformGrid("the time-Fourier route needs equispaced nodes".into())
    })?;
    if opts.pad_factor == 0 {
        return Err(Error::InvalidParameter("pad_factor must be at least 1".into()));
    }
    let grid = prob.forcing.grid().clone();
    let len = grid.len();
    let m = prob.forcing.components();
    let eig = generator_eigenvalues(&prob.operator, &grid)?;
    let nodes = time.len();
    let big = opts.pad_factor * nodes;
    let fft = {
        let mut planner = FftPlanner::new();
        (planner.plan_fft_forward(big), planner.plan_fft_inverse(big))
    };
    let period = big as f64 * h;
    let taus: Vec<f64> = (0..big)
        .map(|j| {
            let jj = if j < big / 2 { j as f64 } else { j as f64 - big as f64 };
            2.0 * std::f64::consts::PI * jj / period
        })
        .collect();

    let active = active_indices(&prob.forcing);
    let series: Vec<Vec<Complex64>> = active
        .par_iter()
        .map(|&i| {
            let lam = eig[i % len];
            let mut buf = vec![Complex64::default(); big];
            for (k, b) in buf.iter_mut().take(nodes).enumerate() {
                *b = prob.forcing.state(k).coefficients()[i];
            }
            fft.0.process(&mut buf);
            for (b, &tau) in buf.iter_mut().zip(&taus) {
                *b *= symbol(lam, tau);
            }
            fft.1.process(&mut buf);
            let s = 1.0 / big as f64;
            buf.truncate(nodes);
            buf.iter_mut().for_each(|b| *b *= s);
            buf
        })
        .collect();

    let mut coeffs = vec![vec![Complex64::default(); m * len]; nodes];
    for (&i, s) in active.iter().zip(&series) {
        for k in 0..nodes {
            coeffs[k][i] = s[k];
        }
    }
    let states = coeffs
        .into_iter()
        .map(|c| SpectralField::from_coefficients(&grid, m, c))
        .collect::<Result<Vec<_>>>()?;
    Trajectory::new(time.clone(), states)
}

/// `max_{σ, λ} |iσ(iσ + λ)^{-1}|` over the given spectrum.
pub fn multiplier_sup_on(spectrum: &[Complex64], sigma_grid: &[f64]) -> Result<f64> {
    if sigma_grid.is_empty() {
        return Err(Error::InvalidParameter("empty σ grid".into()));
    }
    let mut best = 0.0f64;
    for &s in sigma_grid {
        for &l in spectrum {
            let v = resolvent_multiplier(s, l).norm();
            if !v.is_finite() {
                return Err(Error::Divergent(format!(
                    "resolvent multiplier unbounded at σ = {s}, λ = {l}"
                )));
            }
            best = best.max(v);
        }
    }
    Ok(best)
}

/// [`multiplier_sup_on`] over the grid spectrum of `operator`.
pub fn multiplier_sup_norm(
    operator: &FourierMultiplier,
    grid: &TorusGrid,
    sigma_grid: &[f64],
) -> Result<f64> {
    multiplier_sup_on(&operator.spectrum(grid)?, sigma_grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::TimeGrid;

    #[test]
    fn rejects_nonuniform_grid() {
        let g = TorusGrid::new(1, 8, 1.0).unwrap();
        let time = TimeGrid::log_truncated(1e-3, 1.0, 8).unwrap();
        let f = Trajectory::zeros(&time, &g, 1);
        let prob = LinearProblem::new(FourierMultiplier::neg_laplacian(), f);
        assert!(matches!(
            de_simon_multiplier_solve(&prob, &DeSimonOptions::default()),
            Err(Error::NonUniformGrid(_))
        ));
    }

    #[test]
    fn sigma_zero_contributes_nothing() {
        let spec = [Complex64::new(1.0, 0.0), Complex64::new(4.0, 0.0)];
        assert_eq!(multiplier_sup_on(&spec, &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn rotated_spectrum_modulus() {
        // |iσ/(iσ + ρe^{iθ})| peaks at σ = −ρ sin θ with value tan θ
        let theta: f64 = 1.2;
        let lam = Complex64::from_polar(2.0, theta);
        let v = multiplier_sup_on(&[lam], &[-2.0 * theta.sin()]).unwrap();
        assert!((v - theta.tan()).abs() < 1e-12);
    }
}
