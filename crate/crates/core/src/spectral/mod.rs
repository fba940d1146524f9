//! Periodic spectral discretization.
//!
//! Fields live on the torus `[0, L)^n` as normalized Fourier coefficients:
//! `u(x) = Σ_k c_k e^{i ξ_k · x}` with `ξ_k = 2πk/L`. Linear operators are
//! Fourier multipliers and act exactly, mode by mode. Products are formed in
//! physical space with 2/3-rule dealiasing.

mod field;
mod grid;
mod multiplier;
mod ops;

pub use field::{SpectralField, REAL_TOLERANCE};
pub use grid::{TorusGrid, TorusGridParams};
pub use multiplier::{apply_multiplier, resolvent_multiplier, FourierMultiplier, Symbol};
pub use ops::{
    fractional_laplacian_apply, heat_semigroup_apply, helmholtz_project,
    pointwise_power_nonlinearity, tensor_divergence, PowerVariant,
};

use rand::Rng;

use crate::error::Result;

/// Random real divergence-free vector field on `|k|_∞ <= kmax`, mean free.
pub fn random_solenoidal<R: Rng + ?Sized>(
    grid: &TorusGrid,
    kmax: i32,
    decay: f64,
    rng: &mut R,
) -> Result<SpectralField> {
    let v = SpectralField::random(grid, grid.dim(), kmax, decay, true, rng);
    helmholtz_project(&v)
}

/// Velocity field of the stream function `ψ` in two dimensions: `(∂_y ψ, -∂_x ψ)`.
pub fn velocity_from_stream(psi: &SpectralField) -> Result<SpectralField> {
    let grad = psi.gradient()?;
    let mut out = SpectralField::zeros(psi.grid(), 2);
    out.component_mut(0).copy_from_slice(grad.component(1));
    for (d, s) in out.component_mut(1).iter_mut().zip(grad.component(0)) {
        *d = -s;
    }
    Ok(out)
}

/// Mean-free discrete point source: `δ_0 - 1/|T|`, scaled to unit integral.
pub fn point_source(grid: &TorusGrid) -> SpectralField {
    let len = grid.len();
    let h = grid.cell_volume();
    let mut vals = vec![-1.0 / grid.volume(); len];
    vals[0] += 1.0 / h;
    SpectralField::from_physical(grid, 1, &vals).expect("sizes match")
}
