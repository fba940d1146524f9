use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use super::field::SpectralField;
use super::grid::TorusGrid;
use crate::error::{Error, Result};

type ScalarSymbol = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;
type MatrixSymbol = Arc<dyn Fn(&[f64], &mut [Complex64]) + Send + Sync>;

/// Symbol of a Fourier multiplier, evaluated at the physical wavevector `ξ`.
#[derive(Clone)]
pub enum Symbol {
    /// Acts componentwise with the same scalar.
    Scalar(ScalarSymbol),
    /// `size × size` matrix, written row-major into the output slice.
    Matrix { size: usize, eval: MatrixSymbol },
}

/// An operator acting diagonally on Fourier modes.
#[derive(Clone)]
pub struct FourierMultiplier {
    descriptor: String,
    symbol: Symbol,
}

impl fmt::Debug for FourierMultiplier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FourierMultiplier")
            .field("descriptor", &self.descriptor)
            .finish()
    }
}

fn norm_sq(xi: &[f64]) -> f64 {
    xi.iter().map(|x| x * x).sum()
}

impl FourierMultiplier {
    pub fn scalar(
        descriptor: impl Into<String>,
        f: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            descriptor: descriptor.into(),
            symbol: Symbol::Scalar(Arc::new(f)),
        }
    }

    pub fn matrix(
        descriptor: impl Into<String>,
        size: usize,
        f: impl Fn(&[f64], &mut [Complex64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            descriptor: descriptor.into(),
            symbol: Symbol::Matrix {
                size,
                eval: Arc::new(f),
            },
        }
    }

    pub fn identity() -> Self {
        Self::scalar("I", |_| Complex64::new(1.0, 0.0))
    }

    /// `c · I`.
    pub fn constant(c: Complex64) -> Self {
        Self::scalar(format!("({c})I"), move |_| c)
    }

    /// `A = -Δ`, symbol `|ξ|²`.
    pub fn neg_laplacian() -> Self {
        Self::scalar("-Δ", |xi| Complex64::new(norm_sq(xi), 0.0))
    }

    /// `-Δ` with its spectrum rotated by `e^{iθ}`.
    pub fn rotated_laplacian(theta: f64) -> Self {
        let rot = Complex64::from_polar(1.0, theta);
        Self::scalar(format!("e^(i{theta})(-Δ)"), move |xi| rot * norm_sq(xi))
    }

    /// `c · (-Δ)`, used for spectrum-scaling checks.
    pub fn scaled_laplacian(c: f64) -> Self {
        Self::scalar(format!("{c}(-Δ)"), move |xi| Complex64::new(c * norm_sq(xi), 0.0))
    }

    /// Heat semigroup `e^{tΔ}`, symbol `e^{-t|ξ|²}`.
    pub fn heat(t: f64) -> Self {
        Self::scalar(format!("exp({t}Δ)"), move |xi| {
            Complex64::new((-t * norm_sq(xi)).exp(), 0.0)
        })
    }

    /// `(-Δ)^s`, symbol `|ξ|^{2s}`; the zero mode maps to 0 unless `s = 0`.
    pub fn fractional_laplacian(s: f64) -> Self {
        Self::scalar(format!("(-Δ)^{s}"), move |xi| {
            let k2 = norm_sq(xi);
            if k2 == 0.0 && s != 0.0 {
                Complex64::default()
            } else {
                Complex64::new(k2.powf(s), 0.0)
            }
        })
    }

    /// Helmholtz projection in dimension `n`: `δ_ij - ξ_iξ_j/|ξ|²`, identity at `ξ = 0`.
    pub fn helmholtz(n: usize) -> Self {
        Self::matrix("P", n, move |xi, out| {
            let k2 = norm_sq(xi);
            for i in 0..n {
                for j in 0..n {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    let v = if k2 == 0.0 { delta } else { delta - xi[i] * xi[j] / k2 };
                    out[i * n + j] = Complex64::new(v, 0.0);
                }
            }
        })
    }

    /// Composes a scalar function with a scalar symbol: `g(m(ξ))`.
    pub fn map(
        &self,
        descriptor: impl Into<String>,
        g: impl Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    ) -> Result<Self> {
        match &self.symbol {
            Symbol::Scalar(f) => {
                let f = f.clone();
                Ok(Self::scalar(descriptor, move |xi| g(f(xi))))
            }
            Symbol::Matrix { .. } => Err(Error::InvalidParameter(
                "map() needs a scalar symbol".into(),
            )),
        }
    }

    /// `iσ(iσ + A)^{-1}`; the value at `σ = 0` is 0 (including on the kernel of A).
    pub fn resolvent_family_member(&self, sigma: f64) -> Result<Self> {
        let d = format!("iσ(iσ+{})^-1, σ={sigma}", self.descriptor);
        self.map(d, move |lam| resolvent_multiplier(sigma, lam))
    }

    /// `(z + A)^{-1}`.
    pub fn resolvent(&self, z: Complex64) -> Result<Self> {
        let d = format!("({z}+{})^-1", self.descriptor);
        self.map(d, move |lam| 1.0 / (z + lam))
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn symbol(&self) -> &Symbol {
        &self.symbol
    }

    pub fn is_scalar(&self) -> bool {
        matches!(self.symbol, Symbol::Scalar(_))
    }

    /// Scalar symbol value at `ξ`; `None` for matrix symbols.
    pub fn scalar_at(&self, xi: &[f64]) -> Option<Complex64> {
        match &self.symbol {
            Symbol::Scalar(f) => Some(f(xi)),
            Symbol::Matrix { .. } => None,
        }
    }

    /// Scalar symbol evaluated on every grid mode (FFT ordering).
    pub fn eigenvalues(&self, grid: &TorusGrid) -> Result<Vec<Complex64>> {
        let f = match &self.symbol {
            Symbol::Scalar(f) => f,
            Symbol::Matrix { .. } => {
                return Err(Error::InvalidParameter(format!(
                    "{} has a matrix symbol; a scalar spectrum is required",
                    self.descriptor
                )))
            }
        };
        (0..grid.len())
            .map(|idx| {
                let v = f(&grid.wavevector(idx));
                if v.re.is_finite() && v.im.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::InvalidParameter(format!(
                        "symbol {} not finite at mode {:?}",
                        self.descriptor,
                        grid.wavenumber(idx)
                    )))
                }
            })
            .collect()
    }

    /// Distinct symbol values over the grid, sorted by (re, im).
    pub fn spectrum(&self, grid: &TorusGrid) -> Result<Vec<Complex64>> {
        let mut vals = self.eigenvalues(grid)?;
        vals.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        vals.dedup_by(|a, b| (*a - *b).norm() <= 1e-12 * (1.0 + b.norm()));
        Ok(vals)
    }
}

/// `|iσ(iσ+λ)^{-1}|` evaluated safely; `(σ, λ) = (0, 0)` gives 0.
pub fn resolvent_multiplier(sigma: f64, lam: Complex64) -> Complex64 {
    if sigma == 0.0 {
        return Complex64::default();
    }
    let is = Complex64::new(0.0, sigma);
    is / (is + lam)
}

/// Applies a multiplier modewise.
pub fn apply_multiplier(field: &SpectralField, op: &FourierMultiplier) -> Result<SpectralField> {
    let grid = field.grid();
    let len = grid.len();
    let m = field.components();
    let mut out = SpectralField::zeros(grid, m);
    match &op.symbol {
        Symbol::Scalar(f) => {
            for idx in 0..len {
                let s = f(&grid.wavevector(idx));
                if !(s.re.is_finite() && s.im.is_finite()) {
                    return Err(Error::InvalidParameter(format!(
                        "symbol {} not finite at mode {:?}",
                        op.descriptor,
                        grid.wavenumber(idx)
                    )));
                }
                for c in 0..m {
                    out.component_mut(c)[idx] = s * field.component(c)[idx];
                }
            }
        }
        Symbol::Matrix { size, eval } => {
            if *size != m {
                return Err(Error::DimensionMismatch(format!(
                    "{} is {size}x{size}, field has {m} components",
                    op.descriptor
                )));
            }
            let mut mat = vec![Complex64::default(); m * m];
            let src = field.coefficients();
            let dst = out.coefficients_mut();
            for idx in 0..len {
                eval(&grid.wavevector(idx), &mut mat);
                for i in 0..m {
                    let mut acc = Complex64::default();
                    for j in 0..m {
                        acc += mat[i * m + j] * src[j * len + idx];
                    }
                    dst[i * len + idx] = acc;
                }
            }
        }
    }
    Ok(out)
}
