use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::grid::TorusGrid;
use crate::error::{Error, Result};

/// Tolerance on the imaginary part of physical samples of a real field,
/// relative to the largest real sample (or 1, whichever is larger).
pub const REAL_TOLERANCE: f64 = 1e-10;

/// A scalar (`components = 1`) or vector field on the torus, stored as
/// normalized Fourier coefficients, component-major.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: TorusGrid,
    components: usize,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &TorusGrid, components: usize) -> Self {
        assert!(components >= 1, "a field has at least one component");
        Self {
            grid: grid.clone(),
            components,
            coeffs: vec![Complex64::default(); components * grid.len()],
        }
    }

    pub fn from_coefficients(
        grid: &TorusGrid,
        components: usize,
        coeffs: Vec<Complex64>,
    ) -> Result<Self> {
        if components == 0 || coeffs.len() != components * grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} x {} coefficients, got {}",
                components,
                grid.len(),
                coeffs.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            components,
            coeffs,
        })
    }

    /// Real physical samples (component-major) to coefficients.
    pub fn from_physical(grid: &TorusGrid, components: usize, values: &[f64]) -> Result<Self> {
        if components == 0 || values.len() != components * grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} x {} samples, got {}",
                components,
                grid.len(),
                values.len()
            )));
        }
        let mut coeffs: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        for chunk in coeffs.chunks_mut(grid.len()) {
            grid.forward(chunk);
        }
        Ok(Self {
            grid: grid.clone(),
            components,
            coeffs,
        })
    }

    /// Samples a scalar function of position.
    pub fn from_fn(grid: &TorusGrid, f: impl Fn(&[f64]) -> f64) -> Self {
        let values: Vec<f64> = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        Self::from_physical(grid, 1, &values).expect("sizes match by construction")
    }

    /// Samples a vector function of position; `f` writes `components` values.
    pub fn from_vector_fn(
        grid: &TorusGrid,
        components: usize,
        f: impl Fn(&[f64], &mut [f64]),
    ) -> Self {
        let len = grid.len();
        let mut values = vec![0.0; components * len];
        let mut buf = vec![0.0; components];
        for i in 0..len {
            f(&grid.point(i), &mut buf);
            for c in 0..components {
                values[c * len + i] = buf[c];
            }
        }
        Self::from_physical(grid, components, &values).expect("sizes match by construction")
    }

    /// A single real Fourier mode `amp · cos(k·x)` (scalar).
    pub fn cosine_mode(grid: &TorusGrid, k: &[i32], amp: f64) -> Result<Self> {
        let idx = grid
            .index_of(k)
            .ok_or_else(|| Error::InvalidParameter(format!("wavenumber {k:?} not on grid")))?;
        let mut f = Self::zeros(grid, 1);
        let j = grid.neg_index(idx);
        if j == idx {
            f.coeffs[idx] = Complex64::new(amp, 0.0);
        } else {
            f.coeffs[idx] = Complex64::new(amp / 2.0, 0.0);
            f.coeffs[j] = Complex64::new(amp / 2.0, 0.0);
        }
        Ok(f)
    }

    /// Random real field with Gaussian coefficients on `|k|_∞ <= kmax`, amplitude
    /// decaying like `(1 + |k|²)^{-decay/2}`.
    pub fn random<R: Rng + ?Sized>(
        grid: &TorusGrid,
        components: usize,
        kmax: i32,
        decay: f64,
        mean_free: bool,
        rng: &mut R,
    ) -> Self {
        let len = grid.len();
        let mut coeffs = vec![Complex64::default(); components * len];
        for c in 0..components {
            for idx in 0..len {
                let k = grid.wavenumber(idx);
                if k.iter().any(|v| v.abs() > kmax) || (mean_free && k.iter().all(|&v| v == 0)) {
                    continue;
                }
                let k2: f64 = k.iter().map(|&v| (v as f64).powi(2)).sum();
                let amp = (1.0 + k2).powf(-decay / 2.0);
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                coeffs[c * len + idx] = Complex64::new(re, im) * amp;
            }
        }
        let mut f = Self {
            grid: grid.clone(),
            components,
            coeffs,
        };
        f.symmetrize();
        f
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn component(&self, c: usize) -> &[Complex64] {
        let len = self.grid.len();
        &self.coeffs[c * len..(c + 1) * len]
    }

    pub fn component_mut(&mut self, c: usize) -> &mut [Complex64] {
        let len = self.grid.len();
        &mut self.coeffs[c * len..(c + 1) * len]
    }

    /// Extracts component `c` as a scalar field.
    pub fn component_field(&self, c: usize) -> SpectralField {
        SpectralField {
            grid: self.grid.clone(),
            components: 1,
            coeffs: self.component(c).to_vec(),
        }
    }

    pub fn same_shape(&self, other: &SpectralField) -> bool {
        self.components == other.components && self.grid == other.grid
    }

    pub(crate) fn check_shape(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        if self.components != other.components {
            return Err(Error::DimensionMismatch(format!(
                "{} vs {} components",
                self.components, other.components
            )));
        }
        Ok(())
    }

    /// Complex physical samples, component-major.
    pub fn to_physical(&self) -> Vec<Complex64> {
        let mut out = self.coeffs.clone();
        for chunk in out.chunks_mut(self.grid.len()) {
            self.grid.inverse(chunk);
        }
        out
    }

    /// Real physical samples; fails if the imaginary part is not negligible.
    pub fn to_physical_real(&self) -> Result<Vec<f64>> {
        let phys = self.to_physical();
        let max_re = phys.iter().fold(0.0f64, |m, v| m.max(v.re.abs()));
        let max_im = phys.iter().fold(0.0f64, |m, v| m.max(v.im.abs()));
        if max_im > REAL_TOLERANCE * max_re.max(1.0) {
            return Err(Error::NotReal(max_im));
        }
        Ok(phys.into_iter().map(|v| v.re).collect())
    }

    /// Largest violation of `c(-k) = conj(c(k))`.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let len = self.grid.len();
        let mut worst = 0.0f64;
        for c in 0..self.components {
            let comp = &self.coeffs[c * len..(c + 1) * len];
            for idx in 0..len {
                let j = self.grid.neg_index(idx);
                worst = worst.max((comp[j] - comp[idx].conj()).norm());
            }
        }
        worst
    }

    /// Projects onto real fields: `c(k) ← (c(k) + conj(c(-k))) / 2`.
    pub fn symmetrize(&mut self) {
        let len = self.grid.len();
        for c in 0..self.components {
            let comp = &mut self.coeffs[c * len..(c + 1) * len];
            let orig = comp.to_vec();
            for idx in 0..len {
                let j = self.grid.neg_index(idx);
                comp[idx] = (orig[idx] + orig[j].conj()) * 0.5;
            }
        }
    }

    /// Zero-mode coefficient of component `c`.
    pub fn mean(&self, c: usize) -> Complex64 {
        self.component(c)[0]
    }

    /// Largest zero-mode modulus across components.
    pub fn max_mean(&self) -> f64 {
        (0..self.components).map(|c| self.mean(c).norm()).fold(0.0, f64::max)
    }

    /// L² norm by Parseval: `sqrt(L^n Σ |c_k|²)`.
    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self.coeffs.iter().map(|c| c.norm_sqr()).sum();
        (self.grid.volume() * s).sqrt()
    }

    /// Complex L² inner product `∫ u · conj(v)`.
    pub fn inner(&self, other: &SpectralField) -> Complex64 {
        debug_assert!(self.same_shape(other));
        let s: Complex64 = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b.conj())
            .sum();
        s * self.grid.volume()
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn scale(&mut self, s: f64) {
        for c in self.coeffs.iter_mut() {
            *c *= s;
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    /// `self += a · other`. Panics on shape mismatch.
    pub fn axpy(&mut self, a: f64, other: &SpectralField) {
        assert!(self.same_shape(other), "axpy on fields of different shape");
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += y * a;
        }
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = self.clone();
        out.axpy(1.0, other);
        Ok(out)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        self.check_shape(other)?;
        let mut out = self.clone();
        out.axpy(-1.0, other);
        Ok(out)
    }

    /// Largest coefficient difference.
    pub fn max_coefficient_difference(&self, other: &SpectralField) -> f64 {
        debug_assert!(self.same_shape(other));
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Zeroes every mode outside the 2/3-rule band.
    pub fn dealias(&mut self) {
        let len = self.grid.len();
        for idx in 0..len {
            if !self.grid.is_resolved(idx) {
                for c in 0..self.components {
                    self.coeffs[c * len + idx] = Complex64::default();
                }
            }
        }
    }

    /// Keeps only modes with `|k|_∞ <= kmax` (sharp spectral cutoff).
    pub fn truncated(&self, kmax: i32) -> Self {
        let mut out = self.clone();
        let len = self.grid.len();
        for idx in 0..len {
            if self.grid.wavenumber(idx).iter().any(|k| k.abs() > kmax) {
                for c in 0..self.components {
                    out.coeffs[c * len + idx] = Complex64::default();
                }
            }
        }
        out
    }

    /// Spectral divergence of an n-component field.
    pub fn divergence(&self) -> Result<SpectralField> {
        let dim = self.grid.dim();
        if self.components != dim {
            return Err(Error::DimensionMismatch(format!(
                "divergence needs {dim} components, field has {}",
                self.components
            )));
        }
        let len = self.grid.len();
        let mut out = SpectralField::zeros(&self.grid, 1);
        for idx in 0..len {
            let xi = self.grid.wavevector(idx);
            let mut acc = Complex64::default();
            for (a, &x) in xi.iter().enumerate() {
                acc += Complex64::new(0.0, x) * self.coeffs[a * len + idx];
            }
            out.coeffs[idx] = acc;
        }
        Ok(out)
    }

    /// Spectral gradient of a scalar field.
    pub fn gradient(&self) -> Result<SpectralField> {
        if self.components != 1 {
            return Err(Error::DimensionMismatch("gradient of a non-scalar field".into()));
        }
        let dim = self.grid.dim();
        let len = self.grid.len();
        let mut out = SpectralField::zeros(&self.grid, dim);
        for idx in 0..len {
            let xi = self.grid.wavevector(idx);
            for (a, &x) in xi.iter().enumerate() {
                out.coeffs[a * len + idx] = Complex64::new(0.0, x) * self.coeffs[idx];
            }
        }
        Ok(out)
    }

    /// Max over grid points of the physical divergence magnitude.
    pub fn max_divergence(&self) -> Result<f64> {
        let div = self.divergence()?;
        Ok(div.to_physical().iter().fold(0.0, |m, v| m.max(v.norm())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> TorusGrid {
        TorusGrid::new(2, 16, 2.0 * std::f64::consts::PI).unwrap()
    }

    #[test]
    fn physical_round_trip() {
        let g = grid();
        let f = SpectralField::from_fn(&g, |x| (x[0]).sin() + (2.0 * x[1]).cos() * 0.3);
        let back = f.to_physical_real().unwrap();
        for (i, v) in back.iter().enumerate() {
            let x = g.point(i);
            assert!((v - (x[0].sin() + (2.0 * x[1]).cos() * 0.3)).abs() < 1e-13);
        }
    }

    #[test]
    fn random_fields_are_real() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = SpectralField::random(&g, 2, 5, 1.0, true, &mut rng);
        assert!(f.conjugate_symmetry_defect() < 1e-15);
        assert!(f.to_physical_real().is_ok());
        assert_eq!(f.max_mean(), 0.0);
    }

    #[test]
    fn complex_field_is_rejected_as_real() {
        let g = grid();
        let mut f = SpectralField::zeros(&g, 1);
        f.coefficients_mut()[1] = Complex64::new(1.0, 0.0);
        assert!(matches!(f.to_physical_real(), Err(Error::NotReal(_))));
    }

    #[test]
    fn cosine_mode_has_expected_samples() {
        let g = grid();
        let f = SpectralField::cosine_mode(&g, &[1, 2], 3.0).unwrap();
        let phys = f.to_physical_real().unwrap();
        for (i, v) in phys.iter().enumerate() {
            let x = g.point(i);
            assert!((v - 3.0 * (x[0] + 2.0 * x[1]).cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn gradient_is_curl_free_divergence_matches_laplacian() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let phi = SpectralField::random(&g, 1, 4, 0.0, true, &mut rng);
        let lap = phi.gradient().unwrap().divergence().unwrap();
        for idx in 0..g.len() {
            let want = -g.xi_sq(idx) * phi.coefficients()[idx];
            assert!((lap.coefficients()[idx] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_errors() {
        let g = grid();
        let a = SpectralField::zeros(&g, 1);
        let b = SpectralField::zeros(&g, 2);
        assert!(a.add(&b).is_err());
        let g2 = TorusGrid::new(2, 8, 1.0).unwrap();
        let c = SpectralField::zeros(&g2, 1);
        assert!(matches!(a.sub(&c), Err(Error::GridMismatch(_))));
    }
}
