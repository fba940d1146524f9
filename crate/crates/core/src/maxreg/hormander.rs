//! Hörmander's integral condition for the kernel `k(t) = A e^{-tA}` (`t > 0`),
//! `k(t) = 0` (`t <= 0`): `∫_{|t|>2|s|} ‖k(t−s) − k(t)‖ dt`, with the operator
//! norm of a normal multiplier taken as the max over its spectrum.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_half_line, QuadOptions};
use crate::spectral::{FourierMultiplier, TorusGrid};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HormanderReport {
    pub s_samples: Vec<f64>,
    pub integrals: Vec<f64>,
    pub c_estimate: f64,
    pub spectrum_size: usize,
}

fn kernel(lam: Complex64, t: f64) -> Complex64 {
    if t > 0.0 {
        lam * (-lam * t).exp()
    } else {
        Complex64::default()
    }
}

fn opts() -> QuadOptions {
    QuadOptions {
        rel_tol: 1e-13,
        abs_tol: 1e-15,
        max_panels: 20_000,
    }
}

/// `∫_{|t|>2|s|} max_λ |k_λ(t−s) − k_λ(t)| dt` over a spectrum.
pub fn hormander_integral(spectrum: &[Complex64], s: f64) -> Result<f64> {
    if s == 0.0 || !s.is_finite() {
        return Err(Error::InvalidParameter(format!("s must be nonzero and finite, got {s}")));
    }
    let lams: Vec<Complex64> = spectrum.iter().copied().filter(|l| l.norm() > 0.0).collect();
    if lams.is_empty() {
        return Ok(0.0);
    }
    let lam_min = lams.iter().map(|l| l.re).fold(f64::INFINITY, f64::min);
    if !(lam_min > 0.0) {
        return Err(Error::NotAGenerator(
            "kernel does not decay: spectrum touches the imaginary axis".into(),
        ));
    }
    let g = |t: f64| {
        lams.iter()
            .map(|&l| (kernel(l, t - s) - kernel(l, t)).norm())
            .fold(0.0, f64::max)
    };
    let a = 2.0 * s.abs();
    let mid = a + 50.0 / lam_min;
    let right = integrate(g, a, mid, opts())?.value
        + integrate_half_line(g, mid, 1.0 / lam_min, opts())?.value;
    // t < −2|s| puts both arguments at or below zero
    let left = integrate_half_line(|u| g(-u), a, 1.0 / lam_min, opts())?.value;
    Ok(left + right)
}

/// Evaluates the Hörmander integral of `A e^{-tA}` for each `s` on the grid
/// spectrum of `operator`; `c_estimate` is the largest value.
pub fn hormander_check(
    operator: &FourierMultiplier,
    grid: &TorusGrid,
    s_samples: &[f64],
) -> Result<HormanderReport> {
    if s_samples.is_empty() {
        return Err(Error::InvalidParameter("no s samples".into()));
    }
    let spectrum = operator.spectrum(grid)?;
    let integrals: Vec<f64> = s_samples
        .par_iter()
        .map(|&s| hormander_integral(&spectrum, s))
        .collect::<Result<_>>()?;
    let c_estimate = integrals.iter().copied().fold(0.0, f64::max);
    Ok(HormanderReport {
        s_samples: s_samples.to_vec(),
        integrals,
        c_estimate,
        spectrum_size: spectrum.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_closed_form() {
        // s > 0: e^{-x} − e^{-2x}; s < 0: e^{-2x} − e^{-3x}, x = |s|λ
        let lam = Complex64::new(3.0, 0.0);
        for &s in &[0.01f64, 0.231, 1.0, -0.05, -0.4] {
            let x: f64 = s.abs() * 3.0;
            let want = if s > 0.0 {
                (-x).exp() - (-2.0 * x).exp()
            } else {
                (-2.0 * x).exp() - (-3.0 * x).exp()
            };
            let got = hormander_integral(&[lam], s).unwrap();
            assert!((got - want).abs() < 1e-11, "s={s}: {got} vs {want}");
        }
    }

    #[test]
    fn zero_s_is_rejected() {
        assert!(hormander_integral(&[Complex64::new(1.0, 0.0)], 0.0).is_err());
    }
}
