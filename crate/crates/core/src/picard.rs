//! Picard iteration `u ↦ a + F(u)` for maps satisfying
//! `‖F(u) − F(v)‖ <= M ‖u − v‖ (‖u‖^ε + ‖v‖^ε)`, `F(0) = 0`: the smallness
//! gate `‖a‖ <= δ < 1/(2(2M)^{1/ε})`, Lipschitz-constant sampling, and a
//! certificate of what the iteration actually did.
//!
//! The constant `M` is sampled, never proved, so a passed gate means "gate
//! passed with sampled M", not a proof of the hypothesis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::Trajectory;
use crate::spectral::SpectralField;

/// Vector operations the iteration needs.
pub trait PicardVector: Clone + Send + Sync {
    fn zero_like(&self) -> Self;
    fn plus(&self, other: &Self) -> Result<Self>;
    fn minus(&self, other: &Self) -> Result<Self>;
}

impl PicardVector for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }

    fn plus(&self, other: &Self) -> Result<Self> {
        Ok(self + other)
    }

    fn minus(&self, other: &Self) -> Result<Self> {
        Ok(self - other)
    }
}

impl PicardVector for Trajectory {
    fn zero_like(&self) -> Self {
        Trajectory::zeros(self.time(), self.grid(), self.components())
    }

    fn plus(&self, other: &Self) -> Result<Self> {
        self.add(other)
    }

    fn minus(&self, other: &Self) -> Result<Self> {
        self.sub(other)
    }
}

impl PicardVector for SpectralField {
    fn zero_like(&self) -> Self {
        SpectralField::zeros(self.grid(), self.components())
    }

    fn plus(&self, other: &Self) -> Result<Self> {
        self.add(other)
    }

    fn minus(&self, other: &Self) -> Result<Self> {
        self.sub(other)
    }
}

type Map<V> = Box<dyn Fn(&V) -> Result<V> + Send + Sync>;
type Functional<V> = Box<dyn Fn(&V) -> Result<f64> + Send + Sync>;

/// `u = a + F(u)` in a normed space `Y`.
pub struct FixedPointProblem<V> {
    pub base: V,
    pub map: Map<V>,
    pub norm: Functional<V>,
    pub epsilon: f64,
    /// `M` used by the smallness gate.
    pub lipschitz: f64,
    /// Optional per-iterate diagnostic (e.g. divergence of a velocity).
    pub observer: Option<Functional<V>>,
}

impl<V: PicardVector> FixedPointProblem<V> {
    pub fn new(
        base: V,
        map: impl Fn(&V) -> Result<V> + Send + Sync + 'static,
        norm: impl Fn(&V) -> Result<f64> + Send + Sync + 'static,
        epsilon: f64,
        lipschitz: f64,
    ) -> Self {
        Self {
            base,
            map: Box::new(map),
            norm: Box::new(norm),
            epsilon,
            lipschitz,
            observer: None,
        }
    }

    pub fn with_observer(mut self, f: impl Fn(&V) -> Result<f64> + Send + Sync + 'static) -> Self {
        self.observer = Some(Box::new(f));
        self
    }

    /// `‖u − a − F(u)‖`.
    pub fn residual(&self, u: &V) -> Result<f64> {
        let phi = self.base.plus(&(self.map)(u)?)?;
        (self.norm)(&u.minus(&phi)?)
    }
}

pub const GATE_MARGIN: f64 = 1e-3;

/// `δ = (1 − 10⁻³)/(2(2M)^{1/ε})` and whether `‖a‖ <= δ`.
pub fn smallness_gate(m: f64, epsilon: f64, a_norm: f64) -> Result<(f64, bool)> {
    if !(m > 0.0 && epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gate needs M > 0 and ε > 0 (M = {m}, ε = {epsilon})"
        )));
    }
    let delta = (1.0 - GATE_MARGIN) / (2.0 * (2.0 * m).powf(1.0 / epsilon));
    Ok((delta, a_norm <= delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    /// `u₀ = a`
    #[default]
    Base,
    /// `u₀ = 0`
    Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub start: Start,
    /// Iterates beyond `factor · 2 · max(δ, ‖a‖)` count as divergence.
    pub divergence_factor: f64,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-10,
            start: Start::Base,
            divergence_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PicardCertificate {
    pub m_used: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub base_norm: f64,
    pub smallness_ok: bool,
    /// "gate passed with sampled M" or "gate failed with sampled M".
    pub gate_label: String,
    /// `2M(2δ)^ε`, the contraction rate the proof guarantees inside the ball.
    pub predicted_rate: f64,
    /// `‖u_k‖`, starting with the initial iterate.
    pub iterate_norms: Vec<f64>,
    /// `‖u_{k+1} − u_k‖`
    pub step_norms: Vec<f64>,
    /// `‖u_{k+1} − u_k‖ / ‖u_k − u_{k−1}‖`
    pub contraction_factors: Vec<f64>,
    pub observer_values: Vec<f64>,
    pub residual: f64,
    pub converged: bool,
    pub diverged: bool,
    pub iterations: usize,
    /// Every iterate norm is within `2δ(1 + 10⁻⁹)`.
    pub ball_stable: bool,
}

impl PicardCertificate {
    /// Last recorded contraction factor (0 when the iteration stopped after
    /// one step).
    pub fn final_rate(&self) -> f64 {
        self.contraction_factors.last().copied().unwrap_or(0.0)
    }

    pub fn final_norm(&self) -> f64 {
        self.iterate_norms.last().copied().unwrap_or(0.0)
    }
}

/// Iterates `u_{k+1} = a + F(u_k)` until `‖u_{k+1} − u_k‖ <= tol`.
///
/// Convergence additionally requires the final residual to be at most
/// `2 tol/(1 − rate)`. Leaving the divergence radius, or a non-finite norm,
/// yields a diverged certificate rather than an error.
pub fn run_picard<V: PicardVector>(
    prob: &FixedPointProblem<V>,
    opts: &PicardOptions,
) -> Result<(PicardCertificate, V)> {
    let base_norm = (prob.norm)(&prob.base)?;
    if !base_norm.is_finite() {
        return Err(Error::InvalidParameter("base has non-finite norm".into()));
    }
    let (delta, smallness_ok) = smallness_gate(prob.lipschitz, prob.epsilon, base_norm)?;
    let radius = opts.divergence_factor * 2.0 * delta.max(base_norm);
    let predicted_rate = 2.0 * prob.lipschitz * (2.0 * delta).powf(prob.epsilon);

    let mut u = match opts.start {
        Start::Base => prob.base.clone(),
        Start::Zero => prob.base.zero_like(),
    };
    let mut iterate_norms = vec![(prob.norm)(&u)?];
    let mut observer_values = Vec::new();
    if let Some(obs) = &prob.observer {
        observer_values.push(obs(&u)?);
    }
    let mut step_norms: Vec<f64> = Vec::new();
    let mut contraction_factors = Vec::new();
    let mut diverged = false;
    let mut small_step = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let next = match (prob.map)(&u).and_then(|fu| prob.base.plus(&fu)) {
            Ok(v) => v,
            Err(Error::NotReal(_)) => {
                diverged = true;
                break;
            }
            Err(e) => return Err(e),
        };
        let step = (prob.norm)(&next.minus(&u)?)?;
        let norm = (prob.norm)(&next)?;
        if let Some(&prev) = step_norms.last() {
            contraction_factors.push(if prev > 0.0 { step / prev } else { 0.0 });
        }
        step_norms.push(step);
        iterate_norms.push(norm);
        if let Some(obs) = &prob.observer {
            observer_values.push(obs(&next)?);
        }
        u = next;
        if !(norm.is_finite() && step.is_finite()) || norm > radius {
            diverged = true;
            break;
        }
        if step <= opts.tol {
            small_step = true;
            break;
        }
    }

    let residual = if diverged {
        f64::INFINITY
    } else {
        prob.residual(&u).unwrap_or(f64::INFINITY)
    };
    let rate = contraction_factors.last().copied().unwrap_or(0.0);
    let converged = !diverged
        && small_step
        && rate < 1.0
        && residual <= 2.0 * opts.tol / (1.0 - rate);
    let ball_stable = iterate_norms.iter().all(|&n| n <= 2.0 * delta * (1.0 + 1e-9));
    let gate_label = if smallness_ok {
        "gate passed with sampled M"
    } else {
        "gate failed with sampled M"
    };
    Ok((
        PicardCertificate {
            m_used: prob.lipschitz,
            epsilon: prob.epsilon,
            delta,
            base_norm,
            smallness_ok,
            gate_label: gate_label.into(),
            predicted_rate,
            iterate_norms,
            step_norms,
            contraction_factors,
            observer_values,
            residual,
            converged,
            diverged,
            iterations,
            ball_stable,
        },
        u,
    ))
}

/// Sampled Lipschitz data for `F`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LipschitzEstimate {
    /// Largest sampled ratio, a lower bound on the best `M`.
    pub raw: f64,
    pub safety_factor: f64,
    /// `raw · safety_factor`, the value for the gate.
    pub m_used: f64,
    /// `(max(‖u‖, ‖v‖), ratio)` per evaluated pair.
    pub ratios: Vec<(f64, f64)>,
    pub skipped: usize,
    /// Small-amplitude ratios exceed large-amplitude ones by more than 10×,
    /// i.e. the map does not vanish at the assumed order near 0.
    pub exponent_mismatch: bool,
}

/// `max ‖F(u) − F(v)‖ / (‖u − v‖(‖u‖^ε + ‖v‖^ε))` over the pairs. Pairs
/// with `u = v` are skipped.
pub fn estimate_lipschitz_m<V: PicardVector>(
    map: &(dyn Fn(&V) -> Result<V> + Sync),
    norm: &(dyn Fn(&V) -> Result<f64> + Sync),
    epsilon: f64,
    pairs: &[(V, V)],
    safety_factor: f64,
) -> Result<LipschitzEstimate> {
    estimate_lipschitz_m_with(
        map,
        norm,
        epsilon,
        pairs.len(),
        &|i| Ok(pairs[i].clone()),
        safety_factor,
    )
}

/// [`estimate_lipschitz_m`] with pairs built on demand, so that only one
/// pair is alive at a time.
pub fn estimate_lipschitz_m_with<V: PicardVector>(
    map: &(dyn Fn(&V) -> Result<V> + Sync),
    norm: &(dyn Fn(&V) -> Result<f64> + Sync),
    epsilon: f64,
    count: usize,
    pair: &(dyn Fn(usize) -> Result<(V, V)> + Sync),
    safety_factor: f64,
) -> Result<LipschitzEstimate> {
    if !(epsilon > 0.0 && safety_factor >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "need ε > 0 and safety factor >= 1 (ε = {epsilon}, safety = {safety_factor})"
        )));
    }
    let mut ratios = Vec::new();
    let mut skipped = 0;
    for i in 0..count {
        let (u, v) = pair(i)?;
        let d = norm(&u.minus(&v)?)?;
        if d == 0.0 {
            skipped += 1;
            continue;
        }
        let nu = norm(&u)?;
        let nv = norm(&v)?;
        let num = norm(&map(&u)?.minus(&map(&v)?)?)?;
        let den = d * (nu.powf(epsilon) + nv.powf(epsilon));
        ratios.push((nu.max(nv), num / den));
    }
    if ratios.is_empty() {
        return Err(Error::DegenerateEnsemble("no distinct pairs".into()));
    }
    let raw = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let mut by_scale = ratios.clone();
    by_scale.sort_by(|a, b| a.0.total_cmp(&b.0));
    let third = by_scale.len() / 3;
    let exponent_mismatch = third > 0 && {
        let small = by_scale[..third].iter().map(|r| r.1).fold(0.0, f64::max);
        let large = by_scale[by_scale.len() - third..].iter().map(|r| r.1).fold(0.0, f64::max);
        small > 10.0 * large
    };
    Ok(LipschitzEstimate {
        raw,
        safety_factor,
        m_used: raw * safety_factor,
        ratios,
        skipped,
        exponent_mismatch,
    })
}
