//! Resolvent of `−A` rebuilt from solutions of the evolution equation:
//! with `f_z(t) = e^{zt}` on `[0, 1/Re z]` (zero afterwards) and `u_z` the
//! solution of `∂ₜu + Au = f_z x`, `R_z x = Re z ∫₀^∞ e^{-zt} u_z(t) dt`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::duhamel::{generator_eigenvalues, phi12, StepCoefficients};
use crate::error::{Error, Result};
use crate::spectral::{FourierMultiplier, SpectralField};

/// Step-size control for the per-eigenvalue time integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ResolventOptions {
    /// Steps per `min(1/|z|, 1/Re z)` on the forcing interval.
    pub steps_per_scale: f64,
    /// First step relative to `1/|λ|`, resolving the initial layer `e^{-λt}`.
    pub layer_resolution: f64,
    /// Geometric growth of the step away from the layer.
    pub growth: f64,
    /// The tail is integrated over `40/(Re z + Re λ)` decay times by default.
    pub tail_decay: f64,
}

impl Default for ResolventOptions {
    fn default() -> Self {
        Self {
            steps_per_scale: 2000.0,
            layer_resolution: 1e-3,
            growth: 1.002,
            tail_decay: 40.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolventProbe {
    pub z: Complex64,
    #[serde(skip)]
    pub r_z_applied: SpectralField,
    #[serde(skip)]
    pub exact: SpectralField,
    /// `‖R_z x − (z + A)^{-1}x‖_{L²}`
    pub deviation: f64,
    /// `‖R_z x‖ (1 + |z|) / ‖x‖`, the measured `M_p` at this `z`.
    pub bound_constant: f64,
    pub distinct_eigenvalues: usize,
    pub time_steps: usize,
}

fn push_steps(nodes: &mut Vec<f64>, end: f64, mut h: f64, h_max: f64, growth: f64) {
    let mut t = *nodes.last().expect("starts at 0");
    while t < end {
        let step = h.min(h_max);
        t = if end - t <= step * 1.000_001 { end } else { t + step };
        nodes.push(t);
        h *= growth;
    }
}

/// `Re z ∫₀^∞ e^{-zt} u(t) dt` for the scalar problem `u' + λu = f_z`.
fn resolvent_scalar(z: Complex64, lam: Complex64, opts: &ResolventOptions) -> (Complex64, usize) {
    let t1 = 1.0 / z.re;
    let lam_abs = lam.norm();
    let h_max = t1.min(1.0 / z.norm()) / opts.steps_per_scale;
    let h0 = if lam_abs > 0.0 {
        h_max.min(opts.layer_resolution / lam_abs)
    } else {
        h_max
    };
    let mut nodes = vec![0.0];
    push_steps(&mut nodes, t1, h0, h_max, opts.growth);
    let forced = nodes.len();
    let tail_end = t1 + opts.tail_decay / (z.re + lam.re);
    // after t1 only u'' = λ²u limits the step; e^{-zt} is integrated exactly
    let h_tail_max = if lam_abs > 0.0 { f64::INFINITY } else { tail_end - t1 };
    let h_tail = if lam_abs > 0.0 {
        opts.layer_resolution / lam_abs
    } else {
        h_tail_max
    };
    push_steps(&mut nodes, tail_end, h_tail.min(tail_end - t1), h_tail_max, opts.growth);

    let f = |k: usize, right: bool| -> Complex64 {
        let t = nodes[k];
        if k + 1 < forced || (k + 1 == forced && !right) {
            (z * t).exp()
        } else {
            Complex64::default()
        }
    };
    let mut u = Complex64::default();
    let mut integral = Complex64::default();
    for k in 0..nodes.len() - 1 {
        let h = nodes[k + 1] - nodes[k];
        let f0 = f(k, true);
        let f1 = f(k + 1, false);
        let u_next = StepCoefficients::new(lam, h).apply(u, f0, f1);
        let w = -z * h;
        let (p1, p2) = phi12(w);
        integral += (-z * nodes[k]).exp() * h * (p1 * u + (p1 - p2) * (u_next - u));
        u = u_next;
    }
    (integral * z.re, nodes.len())
}

/// Rebuilds `(z + A)^{-1}x` from the evolution equation and compares it with
/// the exact modewise resolvent.
pub fn resolvent_via_maxreg(
    operator: &FourierMultiplier,
    z: Complex64,
    x: &SpectralField,
    opts: &ResolventOptions,
) -> Result<ResolventProbe> {
    if !(z.re > 0.0) {
        return Err(Error::InvalidParameter(format!("Re z must be positive, got z = {z}")));
    }
    let grid = x.grid();
    let len = grid.len();
    let eig = generator_eigenvalues(operator, grid)?;
    let mut distinct: BTreeMap<(u64, u64), Complex64> = BTreeMap::new();
    for c in 0..x.components() {
        for (idx, v) in x.component(c).iter().enumerate() {
            if *v != Complex64::default() {
                let l = eig[idx];
                distinct.insert((l.re.to_bits(), l.im.to_bits()), l);
            }
        }
    }
    let keys: Vec<((u64, u64), Complex64)> = distinct.into_iter().collect();
    let values: Vec<(Complex64, usize)> = keys
        .par_iter()
        .map(|(_, l)| resolvent_scalar(z, *l, opts))
        .collect();
    let table: BTreeMap<(u64, u64), Complex64> =
        keys.iter().zip(&values).map(|((k, _), (v, _))| (*k, *v)).collect();
    let time_steps = values.iter().map(|(_, n)| n).sum();

    let mut applied = SpectralField::zeros(grid, x.components());
    let mut exact = SpectralField::zeros(grid, x.components());
    for c in 0..x.components() {
        for idx in 0..len {
            let v = x.component(c)[idx];
            if v == Complex64::default() {
                continue;
            }
            let l = eig[idx];
            applied.component_mut(c)[idx] = table[&(l.re.to_bits(), l.im.to_bits())] * v;
            exact.component_mut(c)[idx] = v / (z + l);
        }
    }
    let deviation = applied.sub(&exact)?.l2_norm();
    let xn = x.l2_norm();
    let bound_constant = if xn > 0.0 {
        applied.l2_norm() * (1.0 + z.norm()) / xn
    } else {
        0.0
    };
    Ok(ResolventProbe {
        z,
        r_z_applied: applied,
        exact,
        deviation,
        bound_constant,
        distinct_eigenvalues: keys.len(),
        time_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_resolvent_matches_exact() {
        let opts = ResolventOptions::default();
        for &(z, lam) in &[
            (Complex64::new(1.0, 0.0), 0.0),
            (Complex64::new(1.0, 0.0), 3.0),
            (Complex64::new(1.0, 10.0), 50.0),
            (Complex64::new(100.0, 0.0), 2000.0),
            (Complex64::new(2.0, -3.0), 0.5),
        ] {
            let lam = Complex64::new(lam, 0.0);
            let (r, _) = resolvent_scalar(z, lam, &opts);
            let exact = 1.0 / (z + lam);
            assert!(
                (r - exact).norm() < 1e-7,
                "z={z} λ={lam}: {r} vs {exact}"
            );
        }
    }
}
