//! Exponential time differencing for `∂ₜu + λu = f`, `u(0) = 0`, mode by mode.
//!
//! Between nodes the forcing is linear, and the step
//! `u₊ = e^{-λh}u + h[(φ₁ − φ₂)f₀ + φ₂f₁]` with `φ₁(z) = (e^z−1)/z`,
//! `φ₂(z) = (e^z−1−z)/z²`, `z = −λh`, is exact for such forcing.

use num_complex::Complex64;

use super::forcing::Forcing;
use super::LinearProblem;
use crate::error::{Error, Result};
use crate::norms::{TimeGrid, Trajectory};
use crate::spectral::{FourierMultiplier, SpectralField, TorusGrid};

const TAYLOR_RADIUS: f64 = 0.5;

/// `(φ₁(z), φ₂(z))`.
pub fn phi12(z: Complex64) -> (Complex64, Complex64) {
    if z.norm() < TAYLOR_RADIUS {
        // φ₁ = Σ z^k/(k+1)!, φ₂ = Σ z^k/(k+2)!
        let mut p1 = Complex64::default();
        let mut p2 = Complex64::default();
        let mut term = Complex64::new(1.0, 0.0);
        let mut fact = 1.0;
        for k in 0..20 {
            fact *= (k + 1) as f64;
            p1 += term / fact;
            p2 += term / (fact * (k + 2) as f64);
            term *= z;
        }
        (p1, p2)
    } else {
        let ez = z.exp();
        let p1 = (ez - 1.0) / z;
        let p2 = (ez - 1.0 - z) / (z * z);
        (p1, p2)
    }
}

/// Step coefficients `(e^{-λh}, h(φ₁−φ₂), hφ₂)`.
#[derive(Debug, Clone, Copy)]
pub struct StepCoefficients {
    pub decay: Complex64,
    pub w0: Complex64,
    pub w1: Complex64,
}

impl StepCoefficients {
    pub fn new(lam: Complex64, h: f64) -> Self {
        let z = -lam * h;
        let (p1, p2) = phi12(z);
        Self {
            decay: z.exp(),
            w0: (p1 - p2) * h,
            w1: p2 * h,
        }
    }

    #[inline]
    pub fn apply(&self, u: Complex64, f0: Complex64, f1: Complex64) -> Complex64 {
        self.decay * u + self.w0 * f0 + self.w1 * f1
    }
}

/// Grid eigenvalues of a scalar generator, checked to lie in the closed
/// right half-plane.
pub fn generator_eigenvalues(op: &FourierMultiplier, grid: &TorusGrid) -> Result<Vec<Complex64>> {
    let eig = op.eigenvalues(grid)?;
    for (idx, l) in eig.iter().enumerate() {
        if l.re < -1e-12 * l.norm().max(1.0) {
            return Err(Error::NotAGenerator(format!(
                "{} has eigenvalue {l} with negative real part at mode {:?}",
                op.descriptor(),
                grid.wavenumber(idx)
            )));
        }
    }
    Ok(eig)
}

/// Advances all listed coefficients of a solution through the nodes of a
/// grid, one step at a time. Coefficient indices are flat (component-major).
pub struct DuhamelStepper {
    active: Vec<usize>,
    lam: Vec<Complex64>,
    cached_h: f64,
    coeffs: Vec<StepCoefficients>,
}

impl DuhamelStepper {
    /// `eig` holds one eigenvalue per spatial mode; `active` are flat indices
    /// into a `components × len` coefficient array.
    pub fn new(eig: &[Complex64], active: Vec<usize>) -> Self {
        let len = eig.len();
        let lam = active.iter().map(|&i| eig[i % len]).collect();
        Self {
            active,
            lam,
            cached_h: f64::NAN,
            coeffs: Vec::new(),
        }
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    fn refresh(&mut self, h: f64) {
        if (h - self.cached_h).abs() <= 1e-14 * h {
            return;
        }
        self.cached_h = h;
        self.coeffs = self.lam.iter().map(|&l| StepCoefficients::new(l, h)).collect();
    }

    /// `u ← u(t + h)` given the forcing at both ends of the step.
    pub fn step(&mut self, u: &mut [Complex64], h: f64, f0: &[Complex64], f1: &[Complex64]) {
        self.refresh(h);
        for (c, &i) in self.coeffs.iter().zip(&self.active) {
            u[i] = c.apply(u[i], f0[i], f1[i]);
        }
    }
}

/// Flat indices where any state of the forcing may be nonzero.
pub(crate) fn active_indices<F: Forcing + ?Sized>(forcing: &F) -> Vec<usize> {
    if let Some(a) = forcing.active_modes() {
        return a;
    }
    let total = forcing.components() * forcing.spatial_grid().len();
    let mut mask = vec![false; total];
    for k in 0..forcing.time().len() {
        let s = forcing.state(k);
        for (m, c) in mask.iter_mut().zip(s.coefficients()) {
            if *c != Complex64::default() {
                *m = true;
            }
        }
    }
    (0..total).filter(|&i| mask[i]).collect()
}

/// `u(t) = ∫₀ᵗ e^{-(t-s)A} f(s) ds` on the nodes of `grid`.
pub fn solve_linear_duhamel(prob: &LinearProblem, grid: &TimeGrid) -> Result<Trajectory> {
    if prob.forcing.time() != grid {
        return Err(Error::GridMismatch(
            "forcing must be sampled on the solver's time grid".into(),
        ));
    }
    let space = prob.forcing.grid().clone();
    let eig = generator_eigenvalues(&prob.operator, &space)?;
    solve_with_eigenvalues(&eig, &prob.forcing)
}

pub(crate) fn solve_with_eigenvalues<F: Forcing + ?Sized>(
    eig: &[Complex64],
    forcing: &F,
) -> Result<Trajectory> {
    let space = forcing.spatial_grid().clone();
    let m = forcing.components();
    let time = forcing.time().clone();
    let mut stepper = DuhamelStepper::new(eig, active_indices(forcing));
    let mut u = vec![Complex64::default(); m * space.len()];
    let mut states = Vec::with_capacity(time.len());
    states.push(SpectralField::zeros(&space, m));
    let mut f_prev = forcing.state(0).into_owned();
    for k in 1..time.len() {
        let f_next = forcing.state(k).into_owned();
        let h = time.nodes()[k] - time.nodes()[k - 1];
        stepper.step(&mut u, h, f_prev.coefficients(), f_next.coefficients());
        states.push(SpectralField::from_coefficients(&space, m, u.clone())?);
        f_prev = f_next;
    }
    Trajectory::new(time, states)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_functions_match_across_branches() {
        for &z in &[
            Complex64::new(0.49, 0.0),
            Complex64::new(-0.3, 0.35),
            Complex64::new(0.0, -0.49),
        ] {
            let (a1, a2) = phi12(z);
            let ez = z.exp();
            let b1 = (ez - 1.0) / z;
            let b2 = (ez - 1.0 - z) / (z * z);
            assert!((a1 - b1).norm() < 1e-13);
            assert!((a2 - b2).norm() < 1e-12);
        }
        let (p1, p2) = phi12(Complex64::default());
        assert_eq!((p1.re, p2.re), (1.0, 0.5));
    }

    #[test]
    fn constant_forcing_matches_closed_form() {
        let lam = Complex64::new(3.7, 0.0);
        let h = 0.01;
        let c = StepCoefficients::new(lam, h);
        let one = Complex64::new(1.0, 0.0);
        let mut u = Complex64::default();
        for k in 1..=200 {
            u = c.apply(u, one, one);
            let t = k as f64 * h;
            let exact = (1.0 - (-3.7 * t).exp()) / 3.7;
            assert!((u.re - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn linear_forcing_is_exact() {
        // u' + λu = t  ⇒  u = t/λ − 1/λ² + e^{-λt}/λ²
        let lam = 2.5;
        let c = StepCoefficients::new(Complex64::new(lam, 0.0), 0.3);
        let mut u = Complex64::default();
        for k in 0..10 {
            let t0 = k as f64 * 0.3;
            u = c.apply(u, Complex64::new(t0, 0.0), Complex64::new(t0 + 0.3, 0.0));
        }
        let t = 3.0;
        let exact = t / lam - 1.0 / (lam * lam) + (-lam * t).exp() / (lam * lam);
        assert!((u.re - exact).abs() < 1e-13);
    }
}
