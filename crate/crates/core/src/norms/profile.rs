//! Closed-form radial space-time profiles on `(0, ∞) × ℝ^n` and their mixed
//! norms by adaptive quadrature. Used where genuine dilations `x ↦ λx` are
//! needed, which a fixed torus cannot provide.
//!
//! Catalogue (version 1), `r = |x|`:
//! - `Zero`
//! - `Separable`: `A g(t) h(r)` with `g ∈ {e^{-at}, (bt+d)^{-κ}}` and
//!   `h ∈ {e^{-cr²}, (1+cr²)^{-κ}}`
//! - `SpreadingGaussian`: `A (bt+d)^{-κ} exp(-c r² (bt+d)^{-ρ})`
//! - `Rational`: `A (bt + c r^m + d)^{-κ}`, optionally cut off at `t > t_max`
//!
//! Every profile is radially nonincreasing, so `q = ∞` is the value at `r = 0`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::MixedNormParams;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_half_line, QuadOptions};

pub const CATALOGUE_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TimeShape {
    /// `e^{-rate t}`
    Exponential { rate: f64 },
    /// `(b t + d)^{-kappa}`
    Algebraic { b: f64, d: f64, kappa: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceShape {
    /// `e^{-c r²}`
    Gaussian { c: f64 },
    /// `(1 + c r²)^{-kappa}`
    Lorentzian { c: f64, kappa: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Zero,
    Separable {
        amp: f64,
        time: TimeShape,
        space: SpaceShape,
    },
    SpreadingGaussian {
        amp: f64,
        b: f64,
        d: f64,
        kappa: f64,
        c: f64,
        rho: f64,
    },
    Rational {
        amp: f64,
        b: f64,
        c: f64,
        m: f64,
        d: f64,
        kappa: f64,
        t_max: Option<f64>,
    },
}

impl TimeShape {
    fn eval(&self, t: f64) -> f64 {
        match *self {
            TimeShape::Exponential { rate } => (-rate * t).exp(),
            TimeShape::Algebraic { b, d, kappa } => (b * t + d).powf(-kappa),
        }
    }

    fn dilate(&self, s: f64) -> Self {
        match *self {
            TimeShape::Exponential { rate } => TimeShape::Exponential { rate: rate * s },
            TimeShape::Algebraic { b, d, kappa } => TimeShape::Algebraic { b: b * s, d, kappa },
        }
    }

    fn scale(&self) -> f64 {
        match *self {
            TimeShape::Exponential { rate } => 1.0 / rate,
            TimeShape::Algebraic { b, d, .. } => d / b,
        }
    }
}

impl SpaceShape {
    fn eval(&self, r: f64) -> f64 {
        match *self {
            SpaceShape::Gaussian { c } => (-c * r * r).exp(),
            SpaceShape::Lorentzian { c, kappa } => (1.0 + c * r * r).powf(-kappa),
        }
    }

    fn dilate(&self, lam: f64) -> Self {
        let l2 = lam * lam;
        match *self {
            SpaceShape::Gaussian { c } => SpaceShape::Gaussian { c: c * l2 },
            SpaceShape::Lorentzian { c, kappa } => SpaceShape::Lorentzian { c: c * l2, kappa },
        }
    }

    fn scale(&self) -> f64 {
        match *self {
            SpaceShape::Gaussian { c } | SpaceShape::Lorentzian { c, .. } => 1.0 / c.sqrt(),
        }
    }
}

impl Profile {
    /// `u(t, r)`.
    pub fn eval(&self, t: f64, r: f64) -> f64 {
        match *self {
            Profile::Zero => 0.0,
            Profile::Separable { amp, time, space } => amp * time.eval(t) * space.eval(r),
            Profile::SpreadingGaussian { amp, b, d, kappa, c, rho } => {
                let s = b * t + d;
                amp * s.powf(-kappa) * (-c * r * r * s.powf(-rho)).exp()
            }
            Profile::Rational { amp, b, c, m, d, kappa, t_max } => {
                if t_max.is_some_and(|tm| t > tm) {
                    return 0.0;
                }
                amp * (b * t + c * r.powf(m) + d).powf(-kappa)
            }
        }
    }

    /// Characteristic radius at time `t`, used to map `[0, ∞)` for quadrature.
    fn radial_scale(&self, t: f64) -> f64 {
        let s = match *self {
            Profile::Zero => 1.0,
            Profile::Separable { space, .. } => space.scale(),
            Profile::SpreadingGaussian { b, d, c, rho, .. } => ((b * t + d).powf(rho) / c).sqrt(),
            Profile::Rational { b, c, m, d, .. } => ((b * t + d) / c).powf(1.0 / m),
        };
        if s.is_finite() && s > 0.0 {
            s
        } else {
            1.0
        }
    }

    fn time_scale(&self) -> f64 {
        let s = match *self {
            Profile::Zero => 1.0,
            Profile::Separable { time, .. } => time.scale(),
            Profile::SpreadingGaussian { b, d, .. } => d / b,
            Profile::Rational { b, d, t_max, .. } => t_max.unwrap_or(d / b),
        };
        if s.is_finite() && s > 0.0 {
            s
        } else {
            1.0
        }
    }

    fn time_support(&self) -> Option<f64> {
        match *self {
            Profile::Rational { t_max, .. } => t_max,
            _ => None,
        }
    }

    /// `λ^e u(λ^α t, λ x)` as a catalogue profile.
    fn dilated(&self, lam: f64, alpha: f64, e: f64) -> Profile {
        let la = lam.powf(alpha);
        let le = lam.powf(e);
        match *self {
            Profile::Zero => Profile::Zero,
            Profile::Separable { amp, time, space } => Profile::Separable {
                amp: amp * le,
                time: time.dilate(la),
                space: space.dilate(lam),
            },
            Profile::SpreadingGaussian { amp, b, d, kappa, c, rho } => Profile::SpreadingGaussian {
                amp: amp * le,
                b: b * la,
                d,
                kappa,
                c: c * lam * lam,
                rho,
            },
            Profile::Rational { amp, b, c, m, d, kappa, t_max } => Profile::Rational {
                amp: amp * le,
                b: b * la,
                c: c * lam.powf(m),
                m,
                d,
                kappa,
                t_max: t_max.map(|tm| tm / la),
            },
        }
    }
}

/// Parabolic scaling `u ↦ λ^{(α-β)/(γ-1)} u(λ^α t, λx)` of an equation whose
/// forcing term is `γ`-homogeneous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingLaw {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ScalingLaw {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let law = Self { alpha, beta, gamma };
        law.exponent()?;
        Ok(law)
    }

    /// Nonlinear heat equation with `|u|^{ν-1}u` or `|u|^ν`.
    pub fn nonlinear_heat(nu: f64) -> Result<Self> {
        Self::new(2.0, 0.0, nu)
    }

    /// Navier–Stokes: `u ↦ λ u(λ² t, λ x)`.
    pub fn navier_stokes() -> Self {
        Self {
            alpha: 2.0,
            beta: 1.0,
            gamma: 2.0,
        }
    }

    /// `(α-β)/(γ-1)`.
    pub fn exponent(&self) -> Result<f64> {
        if self.gamma == 1.0 {
            return Err(Error::InvalidParameter(
                "scaling exponent undefined for a 1-homogeneous forcing (γ = 1)".into(),
            ));
        }
        Ok((self.alpha - self.beta) / (self.gamma - 1.0))
    }

    /// Power of `λ` by which the `L^p_t(L^q_x)` norm on `ℝ^n` changes under the
    /// scaling: `(α-β)/(γ-1) - n/q - α/p`. Zero exactly at critical tuples.
    pub fn norm_exponent(&self, params: &MixedNormParams, n: usize) -> Result<f64> {
        let inv = |x: f64| if x.is_infinite() { 0.0 } else { 1.0 / x };
        Ok(self.exponent()? - n as f64 * inv(params.q) - self.alpha * inv(params.p))
    }
}

pub fn scaling_transform(profile: &Profile, lam: f64, law: &ScalingLaw) -> Result<Profile> {
    if !(lam > 0.0 && lam.is_finite()) {
        return Err(Error::InvalidParameter(format!("λ must be positive, got {lam}")));
    }
    let e = law.exponent()?;
    Ok(profile.dilated(lam, law.alpha, e))
}

fn unit_sphere_area(n: usize) -> f64 {
    // ω_n = 2π^{n/2}/Γ(n/2), Γ(n/2) by the half-integer recursion
    let mut gamma = if n % 2 == 0 { 1.0 } else { PI.sqrt() };
    let mut x = if n % 2 == 0 { 1.0 } else { 0.5 };
    while x + 1e-9 < n as f64 / 2.0 {
        gamma *= x;
        x += 1.0;
    }
    2.0 * PI.powf(n as f64 / 2.0) / gamma
}

fn inner_opts() -> QuadOptions {
    QuadOptions {
        rel_tol: 1e-12,
        abs_tol: 0.0,
        max_panels: 2000,
    }
}

fn outer_opts() -> QuadOptions {
    QuadOptions {
        rel_tol: 1e-10,
        abs_tol: 0.0,
        max_panels: 4000,
    }
}

/// `‖u(t, ·)‖_{L^q(ℝ^n)}`.
pub fn continuum_spatial_norm(profile: &Profile, t: f64, q: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be positive".into()));
    }
    if matches!(profile, Profile::Zero) {
        return Ok(0.0);
    }
    if q.is_infinite() {
        return Ok(profile.eval(t, 0.0).abs());
    }
    let nf = n as f64;
    let f = |r: f64| {
        let v = profile.eval(t, r).abs();
        if v == 0.0 {
            0.0
        } else {
            v.powf(q) * r.powf(nf - 1.0)
        }
    };
    let res = integrate_half_line(f, 0.0, profile.radial_scale(t), inner_opts())?;
    Ok((unit_sphere_area(n) * res.value).powf(1.0 / q))
}

/// `‖u‖_{L^p(0,∞; L^q(ℝ^n))}` by nested adaptive quadrature (relative target
/// 1e-10 outer, 1e-12 inner). Divergent norms surface as
/// [`Error::Divergent`]. Finite `p` only.
pub fn continuum_mixed_norm(profile: &Profile, params: &MixedNormParams, n: usize) -> Result<f64> {
    params.validate()?;
    if params.p.is_infinite() {
        return Err(Error::InvalidParameter(
            "continuum norms are implemented for finite p".into(),
        ));
    }
    if matches!(profile, Profile::Zero) {
        return Ok(0.0);
    }
    let p = params.p;
    let err = std::cell::RefCell::new(None);
    let g = |t: f64| match continuum_spatial_norm(profile, t, params.q, n) {
        Ok(v) => v.powf(p),
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let res = match profile.time_support() {
        Some(tm) => integrate(g, 0.0, tm, outer_opts()),
        None => integrate_half_line(g, 0.0, profile.time_scale(), outer_opts()),
    };
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    Ok(res?.value.powf(1.0 / p))
}
