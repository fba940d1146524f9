use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Plain parameters of a periodic grid, as they appear in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TorusGridParams {
    pub dimension: usize,
    pub points_per_axis: usize,
    pub period: f64,
}

impl Default for TorusGridParams {
    fn default() -> Self {
        Self {
            dimension: 2,
            points_per_axis: 64,
            period: 2.0 * std::f64::consts::PI,
        }
    }
}

impl TorusGridParams {
    pub fn build(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.dimension, self.points_per_axis, self.period)
    }
}

struct GridInner {
    dim: usize,
    n: usize,
    period: f64,
    len: usize,
    /// Integer wavenumbers, `dim` entries per mode, FFT ordering.
    wavenumbers: Vec<i32>,
    xi_sq: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// The periodic box `[0, L)^n` sampled with `N` points per axis.
///
/// Cloning is cheap; FFT plans and wavevector tables are shared.
#[derive(Clone)]
pub struct TorusGrid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid")
            .field("dim", &self.inner.dim)
            .field("n", &self.inner.n)
            .field("period", &self.inner.period)
            .finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.n == other.inner.n
                && self.inner.period == other.inner.period)
    }
}

impl TorusGrid {
    pub fn new(dim: usize, n: usize, period: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGrid("dimension must be at least 1".into()));
        }
        if n < 4 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 4, got {n}"
            )));
        }
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidGrid(format!("period must be positive, got {period}")));
        }
        let len = n
            .checked_pow(dim as u32)
            .filter(|&l| l <= 1 << 26)
            .ok_or_else(|| Error::InvalidGrid(format!("{n}^{dim} points is too large")))?;

        let half = (n / 2) as i32;
        let mut wavenumbers = Vec::with_capacity(len * dim);
        let mut xi_sq = Vec::with_capacity(len);
        let scale = 2.0 * std::f64::consts::PI / period;
        for idx in 0..len {
            let mut rem = idx;
            let mut k = vec![0i32; dim];
            for a in (0..dim).rev() {
                let i = (rem % n) as i32;
                rem /= n;
                k[a] = if i < half { i } else { i - n as i32 };
            }
            let s: f64 = k.iter().map(|&ki| (scale * ki as f64).powi(2)).sum();
            wavenumbers.extend_from_slice(&k);
            xi_sq.push(s);
        }

        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(GridInner {
                dim,
                n,
                period,
                len,
                wavenumbers,
                xi_sq,
                fwd,
                inv,
            }),
        })
    }

    pub fn params(&self) -> TorusGridParams {
        TorusGridParams {
            dimension: self.inner.dim,
            points_per_axis: self.inner.n,
            period: self.inner.period,
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.inner.n
    }

    pub fn period(&self) -> f64 {
        self.inner.period
    }

    /// Number of grid points (= number of Fourier modes), `N^n`.
    pub fn len(&self) -> usize {
        self.inner.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.inner.period / self.inner.n as f64
    }

    /// Quadrature weight of a single grid point.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.inner.dim as i32)
    }

    /// Measure of the torus, `L^n`.
    pub fn volume(&self) -> f64 {
        self.inner.period.powi(self.inner.dim as i32)
    }

    /// Integer wavenumber of mode `idx`, each entry in `[-N/2, N/2)`.
    pub fn wavenumber(&self, idx: usize) -> &[i32] {
        let d = self.inner.dim;
        &self.inner.wavenumbers[idx * d..(idx + 1) * d]
    }

    /// Physical wavevector `2πk/L`.
    pub fn wavevector(&self, idx: usize) -> Vec<f64> {
        let s = 2.0 * std::f64::consts::PI / self.inner.period;
        self.wavenumber(idx).iter().map(|&k| s * k as f64).collect()
    }

    /// `|ξ|²` of mode `idx`.
    pub fn xi_sq(&self, idx: usize) -> f64 {
        self.inner.xi_sq[idx]
    }

    /// Smallest nonzero `|ξ|²` on the grid.
    pub fn lowest_eigenvalue(&self) -> f64 {
        (2.0 * std::f64::consts::PI / self.inner.period).powi(2)
    }

    /// Flat index of an integer wavenumber, if it is representable.
    pub fn index_of(&self, k: &[i32]) -> Option<usize> {
        if k.len() != self.inner.dim {
            return None;
        }
        let n = self.inner.n as i32;
        let mut idx = 0usize;
        for &ka in k {
            if ka < -n / 2 || ka >= n / 2 {
                return None;
            }
            let i = if ka < 0 { ka + n } else { ka };
            idx = idx * self.inner.n + i as usize;
        }
        Some(idx)
    }

    /// Index of the mode `-k` (the Nyquist component maps to itself).
    pub fn neg_index(&self, idx: usize) -> usize {
        let n = self.inner.n;
        let mut rem = idx;
        let mut out = 0usize;
        let mut mult = 1usize;
        for _ in 0..self.inner.dim {
            let i = rem % n;
            rem /= n;
            out += ((n - i) % n) * mult;
            mult *= n;
        }
        out
    }

    /// Physical coordinates of grid point `idx`.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        let n = self.inner.n;
        let h = self.spacing();
        let mut rem = idx;
        let mut x = vec![0.0; self.inner.dim];
        for a in (0..self.inner.dim).rev() {
            x[a] = (rem % n) as f64 * h;
            rem /= n;
        }
        x
    }

    /// Whether mode `idx` survives 2/3-rule dealiasing (`|k_a| < N/3` on every axis).
    pub fn is_resolved(&self, idx: usize) -> bool {
        let cut = self.inner.n as f64 / 3.0;
        self.wavenumber(idx).iter().all(|&k| (k.abs() as f64) < cut)
    }

    /// Largest `|k|_∞` over the dealiased band.
    pub fn dealias_cutoff(&self) -> i32 {
        let cut = self.inner.n as f64 / 3.0;
        (cut.ceil() as i32) - 1
    }

    /// Physical samples → normalized Fourier coefficients (`u(x) = Σ c_k e^{ik·x}`).
    pub(crate) fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inner.fwd);
        let s = 1.0 / self.inner.len as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    /// Coefficients → physical samples.
    pub(crate) fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inner.inv);
    }

    fn transform(&self, data: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let n = self.inner.n;
        let len = self.inner.len;
        debug_assert_eq!(data.len(), len);
        // last axis is contiguous
        fft.process(data);
        let mut buf = vec![Complex64::default(); len];
        for a in (0..self.inner.dim - 1).rev() {
            let stride = n.pow((self.inner.dim - 1 - a) as u32);
            let block = n * stride;
            let mut line = 0;
            for o in 0..len / block {
                for j in 0..stride {
                    let base = o * block + j;
                    for i in 0..n {
                        buf[line * n + i] = data[base + i * stride];
                    }
                    line += 1;
                }
            }
            fft.process(&mut buf);
            let mut line = 0;
            for o in 0..len / block {
                for j in 0..stride {
                    let base = o * block + j;
                    for i in 0..n {
                        data[base + i * stride] = buf[line * n + i];
                    }
                    line += 1;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sizes() {
        assert!(TorusGrid::new(2, 6, 1.0).is_err());
        assert!(TorusGrid::new(2, 2, 1.0).is_err());
        assert!(TorusGrid::new(0, 8, 1.0).is_err());
        assert!(TorusGrid::new(1, 8, -1.0).is_err());
        assert!(TorusGrid::new(3, 8, 1.0).is_ok());
    }

    #[test]
    fn wavenumbers_cover_symmetric_range() {
        let g = TorusGrid::new(1, 8, 1.0).unwrap();
        let ks: Vec<i32> = (0..8).map(|i| g.wavenumber(i)[0]).collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        for idx in 0..8 {
            assert_eq!(g.index_of(g.wavenumber(idx)), Some(idx));
        }
    }

    #[test]
    fn neg_index_is_involution() {
        let g = TorusGrid::new(3, 8, 1.0).unwrap();
        for idx in 0..g.len() {
            let j = g.neg_index(idx);
            assert_eq!(g.neg_index(j), idx);
            let k: Vec<i32> = g.wavenumber(idx).iter().map(|k| -k).collect();
            if k.iter().all(|&v| v < 4) {
                assert_eq!(g.index_of(&k), Some(j));
            }
        }
    }

    #[test]
    fn forward_then_inverse_is_identity() {
        let g = TorusGrid::new(2, 8, 3.0).unwrap();
        let orig: Vec<Complex64> = (0..g.len())
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut d = orig.clone();
        g.forward(&mut d);
        g.inverse(&mut d);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn forward_of_plane_wave_is_unit_coefficient() {
        let g = TorusGrid::new(2, 16, 2.0).unwrap();
        let k = [3, -2];
        let xi: Vec<f64> = k.iter().map(|&v| std::f64::consts::PI * v as f64).collect();
        let mut d: Vec<Complex64> = (0..g.len())
            .map(|i| {
                let x = g.point(i);
                Complex64::from_polar(1.0, xi[0] * x[0] + xi[1] * x[1])
            })
            .collect();
        g.forward(&mut d);
        let target = g.index_of(&k).unwrap();
        for (i, c) in d.iter().enumerate() {
            let want = if i == target { 1.0 } else { 0.0 };
            assert!((c - want).norm() < 1e-12, "mode {i}: {c}");
        }
    }
}
