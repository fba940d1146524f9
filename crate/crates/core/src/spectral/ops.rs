use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::SpectralField;
use super::multiplier::{apply_multiplier, FourierMultiplier};
use crate::error::{Error, Result};

/// Which power nonlinearity: `|u|^{ν-1}u` or `|u|^ν`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PowerVariant {
    #[default]
    Signed,
    Unsigned,
}

impl PowerVariant {
    #[inline]
    pub fn eval(self, u: f64, nu: f64) -> f64 {
        match self {
            PowerVariant::Signed => u.abs().powf(nu - 1.0) * u,
            PowerVariant::Unsigned => u.abs().powf(nu),
        }
    }
}

/// `e^{tΔ}` applied modewise.
pub fn heat_semigroup_apply(field: &SpectralField, t: f64) -> Result<SpectralField> {
    if t < 0.0 || t.is_nan() {
        return Err(Error::NegativeTime(t));
    }
    let mut out = field.clone();
    if t == 0.0 {
        return Ok(out);
    }
    let grid = field.grid().clone();
    let len = grid.len();
    for c in 0..field.components() {
        let comp = out.component_mut(c);
        for (idx, v) in comp.iter_mut().enumerate().take(len) {
            *v *= (-t * grid.xi_sq(idx)).exp();
        }
    }
    Ok(out)
}

/// `(-Δ)^s`; negative powers need a mean-free field.
pub fn fractional_laplacian_apply(field: &SpectralField, s: f64) -> Result<SpectralField> {
    if s < 0.0 {
        let mean = field.max_mean();
        let scale = field.max_abs_coefficient().max(f64::MIN_POSITIVE);
        if mean > 1e-14 * scale.max(1.0) {
            return Err(Error::NonZeroMean(mean));
        }
    }
    apply_multiplier(field, &FourierMultiplier::fractional_laplacian(s))
}

/// Leray–Helmholtz projection onto divergence-free fields.
pub fn helmholtz_project(field: &SpectralField) -> Result<SpectralField> {
    let n = field.grid().dim();
    if field.components() != n {
        return Err(Error::DimensionMismatch(format!(
            "Helmholtz projection needs a {n}-component field, got {}",
            field.components()
        )));
    }
    apply_multiplier(field, &FourierMultiplier::helmholtz(n))
}

fn dealiased_physical(field: &SpectralField) -> Result<Vec<f64>> {
    let mut f = field.clone();
    f.dealias();
    f.to_physical_real()
}

/// `∇·(u⊗v)`, i.e. the vector with components `Σ_i ∂_i(u_i v_j)`.
///
/// Products are formed in physical space between dealiased factors and the
/// result is dealiased again.
pub fn tensor_divergence(u: &SpectralField, v: &SpectralField) -> Result<SpectralField> {
    u.check_shape(v)?;
    let grid = u.grid();
    let n = grid.dim();
    if u.components() != n {
        return Err(Error::DimensionMismatch(format!(
            "tensor divergence needs {n}-component fields, got {}",
            u.components()
        )));
    }
    let len = grid.len();
    let up = dealiased_physical(u)?;
    let vp = dealiased_physical(v)?;
    let mut out = SpectralField::zeros(grid, n);
    let mut prod = vec![0.0; len];
    for j in 0..n {
        for i in 0..n {
            for p in 0..len {
                prod[p] = up[i * len + p] * vp[j * len + p];
            }
            let mut m = SpectralField::from_physical(grid, 1, &prod)?;
            m.dealias();
            let dst = out.component_mut(j);
            for (idx, d) in dst.iter_mut().enumerate() {
                let xi = grid.wavenumber(idx)[i] as f64 * 2.0 * std::f64::consts::PI
                    / grid.period();
                *d += Complex64::new(0.0, xi) * m.coefficients()[idx];
            }
        }
    }
    Ok(out)
}

/// `|u|^{ν-1}u` (signed) or `|u|^ν` (unsigned), evaluated in physical space
/// between two dealiasing passes.
pub fn pointwise_power_nonlinearity(
    u: &SpectralField,
    nu: f64,
    variant: PowerVariant,
) -> Result<SpectralField> {
    if u.components() != 1 {
        return Err(Error::DimensionMismatch("power nonlinearity needs a scalar field".into()));
    }
    if !(nu > 1.0) {
        return Err(Error::InvalidParameter(format!("ν must exceed 1, got {nu}")));
    }
    let mut phys = dealiased_physical(u)?;
    for v in phys.iter_mut() {
        *v = variant.eval(*v, nu);
    }
    let mut out = SpectralField::from_physical(u.grid(), 1, &phys)?;
    out.dealias();
    Ok(out)
}
