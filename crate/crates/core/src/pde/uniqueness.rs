//! Uniqueness of mild solutions in `C([0,T]; L^q)` by bootstrap: on a short
//! segment `[s, τ]` the difference of two solutions satisfies
//! `‖u − v‖ <= C‖u − v‖(Q₁ + Q₂ + Q₃)` in `L^p(s,τ;L^q)` with
//!
//! - `Q₁ = |‖u‖^{ν-1}_{L^∞L^q} − ‖a_ε‖^{ν-1}_{L^∞L^q}|`, `Q₂` the same for `v`,
//! - `Q₃ = √(τ−s) ‖a_ε‖^{ν-1}_{L^∞L^r}`,
//!
//! where `a_ε` is the heat extension of a spectrally truncated `u(s)`. Once
//! every `Q` is at most `1/(4C)` the factor is at most `3/4`, so `u = v` on
//! the segment; then the segment start advances to `τ`.
//!
//! `C` is measured, not derived: twice the largest ratio seen for the
//! nonlinear difference estimate and for the short-time smoothing estimate.

use serde::{Deserialize, Serialize};

use super::{heat_duhamel, MildProblem};
use crate::error::{Error, Result};
use crate::norms::{
    mixed_norm_from_series, refined_sup, spatial_lq_norm, spatial_norm_series, Trajectory,
};
use crate::rng::{stream, stream_id};
use crate::spectral::{heat_semigroup_apply, SpectralField};

const NS_PROBES: u32 = 0x554e_0001;
const PROBE_AMPLITUDES: [f64; 3] = [1.0, 0.1, 0.01];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UniquenessOptions {
    /// Time exponent of the bootstrap norm.
    pub p: f64,
    /// Spatial exponent; defaults to the problem's uniqueness class.
    pub q: Option<f64>,
    /// Factor applied to the largest measured constant.
    pub safety: f64,
    /// Mild-solution residual (in the problem's `Y`) required of `u` and `v`.
    pub residual_tolerance: f64,
    /// Relative `L^q` distance allowed between `u(0)` and `v(0)`.
    pub initial_tolerance: f64,
    /// Separation below which `u = v` on a segment is accepted.
    pub separation_tolerance: f64,
    /// Random perturbations per window for each measured constant.
    pub probes: usize,
    pub seed: u64,
}

impl Default for UniquenessOptions {
    fn default() -> Self {
        Self {
            p: 2.0,
            q: None,
            safety: 2.0,
            residual_tolerance: 1e-8,
            initial_tolerance: 1e-12,
            separation_tolerance: 1e-9,
            probes: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UniquenessStatus {
    /// Every segment contracted and the separation vanished to tolerance.
    Verified,
    /// A contracting segment carried a separation above tolerance.
    Failed,
    /// No admissible `τ` at the resolved time scale.
    Inconclusive,
    /// The inputs are not two mild solutions with the same data.
    Refused,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentRecord {
    pub start: f64,
    pub end: f64,
    pub start_index: usize,
    pub end_index: usize,
    /// Spectral cutoff `|k|_∞ <= cutoff` defining the smoothed start state.
    pub cutoff: i32,
    /// `‖u_ε(s) − u(s)‖_{L^q}`
    pub eps_mollify: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    /// `C(Q₁ + Q₂ + Q₃)`
    pub factor: f64,
    /// `‖u − v‖_{L^p(s,τ;L^q)}`
    pub separation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub status: UniquenessStatus,
    pub reason: Option<String>,
    pub p: f64,
    pub q: f64,
    /// Exponent `r` of the `a_ε` norm in `Q₃`.
    pub smoothing_exponent: f64,
    pub m_step1: f64,
    pub m_step3: f64,
    pub c_used: f64,
    pub segments: Vec<SegmentRecord>,
    pub max_factor: f64,
    pub max_separation: f64,
    pub initial_difference: f64,
    /// The dimension restriction of the whole-space theorem holds.
    pub endpoint_regime: bool,
}

impl UniquenessReport {
    fn refused(p: f64, q: f64, r: f64, endpoint: bool, init: f64, reason: String) -> Self {
        Self {
            status: UniquenessStatus::Refused,
            reason: Some(reason),
            p,
            q,
            smoothing_exponent: r,
            m_step1: 0.0,
            m_step3: 0.0,
            c_used: 0.0,
            segments: Vec::new(),
            max_factor: 0.0,
            max_separation: 0.0,
            initial_difference: init,
            endpoint_regime: endpoint,
        }
    }
}

fn sup_norm(series: &[f64]) -> f64 {
    series.iter().copied().fold(0.0, f64::max)
}

/// Largest measured ratios for the nonlinear difference estimate and the
/// short-time smoothing estimate on windows `[0, T/2^j]` around `u`.
fn measure_constants<P: MildProblem>(
    prob: &P,
    u: &Trajectory,
    p: f64,
    q: f64,
    r: f64,
    opts: &UniquenessOptions,
) -> Result<(f64, f64)> {
    let ex = prob.power() - 1.0;
    let last = u.len() - 1;
    let u0 = u.state(0);
    let smooth0 = u0.truncated((u0.grid().points_per_axis() / 4) as i32);
    let mut m1: f64 = 0.0;
    let mut m3: f64 = 0.0;
    for j in 0..4 {
        let end = last >> j;
        if end == 0 {
            break;
        }
        let uw = u.slice(0, end)?;
        let time = uw.time().clone();
        let lp_q = |t: &Trajectory| -> Result<f64> {
            Ok(mixed_norm_from_series(&spatial_norm_series(t, q)?, &time, p))
        };
        let sup_q = |t: &Trajectory| -> Result<f64> { Ok(sup_norm(&spatial_norm_series(t, q)?)) };
        let sup_r = |t: &Trajectory| -> Result<f64> { Ok(sup_norm(&spatial_norm_series(t, r)?)) };
        let fu = prob.duhamel_of(&uw)?;
        let un = lp_q(&uw)?.max(sup_q(&uw)?);
        let a = crate::norms::heat_extension(&smooth0, &time)?;
        let a_sup = sup_r(&a)?;
        let tau = time.end() - time.nodes()[0];
        for i in 0..opts.probes {
            let mut rng = stream(opts.seed, stream_id(NS_PROBES, ((j as u64) << 16) | i as u64));
            let g = prob.random_data(&mut rng)?;
            let w0 = crate::norms::heat_extension(&g, &time)?;
            let wn = lp_q(&w0)?;
            if wn == 0.0 {
                continue;
            }
            let amp = PROBE_AMPLITUDES[i % PROBE_AMPLITUDES.len()] * un.max(1e-3);
            let w = w0.scaled(amp / wn);
            let dn = lp_q(&w)?;
            let v = uw.add(&w)?;
            let diff = lp_q(&fu.sub(&prob.duhamel_of(&v)?)?)?;
            let den = dn * (sup_q(&uw)?.powf(ex) + sup_q(&v)?.powf(ex));
            if den > 0.0 {
                m1 = m1.max(diff / den);
            }
            if a_sup > 0.0 {
                let lin = Trajectory::new(
                    time.clone(),
                    a.states()
                        .iter()
                        .zip(w.states())
                        .map(|(x, y)| prob.linearized(x, y))
                        .collect::<Result<_>>()?,
                )?;
                let num = lp_q(&heat_duhamel(&lin)?)?;
                m3 = m3.max(num / (tau.sqrt() * dn * a_sup.powf(ex)));
            }
        }
    }
    Ok((m1, m3))
}

/// Smallest cutoff whose truncation changes `‖·‖_q^{ν-1}` by at most `gap`.
fn mollify(state: &SpectralField, q: f64, ex: f64, gap: f64) -> Result<(i32, SpectralField, f64)> {
    let full = spatial_lq_norm(state, q)?.powf(ex);
    let kmax = (state.grid().points_per_axis() / 2) as i32;
    for k in 0..=kmax {
        let s = state.truncated(k);
        if (spatial_lq_norm(&s, q)?.powf(ex) - full).abs() <= gap || k == kmax {
            let eps = spatial_lq_norm(&s.sub(state)?, q)?;
            return Ok((k, s, eps));
        }
    }
    unreachable!("the last cutoff keeps every mode")
}

/// Runs the bootstrap on two trajectories claimed to be mild solutions of
/// `prob` with the same initial data.
pub fn uniqueness_bootstrap<P: MildProblem>(
    prob: &P,
    u: &Trajectory,
    v: &Trajectory,
    opts: &UniquenessOptions,
) -> Result<UniquenessReport> {
    let q = opts.q.unwrap_or_else(|| prob.uniqueness_exponent());
    let p = opts.p;
    let r = prob.smoothing_data_exponent();
    let ex = prob.power() - 1.0;
    if !(p > 1.0 && q >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "bootstrap norm needs p > 1 and q >= 1 (p = {p}, q = {q})"
        )));
    }
    u.check_shape(v)?;
    if u.time() != v.time() || u.time() != prob.time() {
        return Err(Error::GridMismatch("u, v and the problem must share a time grid".into()));
    }
    let endpoint = prob.endpoint_regime();
    let d0 = spatial_lq_norm(&u.state(0).sub(v.state(0))?, q)?;
    let scale = spatial_lq_norm(prob.initial_data(), q)?.max(1e-300);
    if d0 > opts.initial_tolerance * scale {
        return Ok(UniquenessReport::refused(
            p,
            q,
            r,
            endpoint,
            d0,
            format!("initial states differ by {d0:e} in L^{q}; the data are not identical"),
        ));
    }
    for (name, w) in [("u", u), ("v", v)] {
        let res = prob.mild_residual(w)?;
        if !(res <= opts.residual_tolerance) {
            return Ok(UniquenessReport::refused(
                p,
                q,
                r,
                endpoint,
                d0,
                format!("{name} has mild-solution residual {res:e}"),
            ));
        }
    }

    let (m1, m3) = measure_constants(prob, u, p, q, r, opts)?;
    let c = opts.safety * m1.max(m3);
    let time = u.time().clone();
    let nodes = time.nodes();
    let last = u.len() - 1;
    let un = spatial_norm_series(u, q)?;
    let vn = spatial_norm_series(v, q)?;
    let dn = spatial_norm_series(&u.sub(v)?, q)?;

    let mut segments = Vec::new();
    let mut status = UniquenessStatus::Verified;
    let mut reason = None;
    let mut s = 0;
    if c == 0.0 {
        // F vanishes identically on the probes: one segment covers [0, T]
        segments.push(SegmentRecord {
            start: nodes[0],
            end: nodes[last],
            start_index: 0,
            end_index: last,
            cutoff: 0,
            eps_mollify: 0.0,
            q1: 0.0,
            q2: 0.0,
            q3: 0.0,
            factor: 0.0,
            separation: mixed_norm_from_series(&dn, &time, p),
        });
        s = last;
    }
    let bound = if c > 0.0 { 1.0 / (4.0 * c) } else { f64::INFINITY };
    while s < last {
        let (cutoff, smooth, eps) = mollify(u.state(s), q, ex, 1.0 / (8.0 * c))?;
        let a_at = |t: f64| heat_semigroup_apply(&smooth, t - nodes[s]);
        let quantities = |e: usize, refine: bool| -> Result<(f64, f64, f64)> {
            let window = &nodes[s..=e];
            let (aq, ar) = if refine {
                (
                    refined_sup(window, |t| spatial_lq_norm(&a_at(t)?, q))?,
                    refined_sup(window, |t| spatial_lq_norm(&a_at(t)?, r))?,
                )
            } else {
                let mut aq: f64 = 0.0;
                let mut ar: f64 = 0.0;
                for &t in window {
                    let a = a_at(t)?;
                    aq = aq.max(spatial_lq_norm(&a, q)?);
                    ar = ar.max(spatial_lq_norm(&a, r)?);
                }
                (aq, ar)
            };
            let q1 = (sup_norm(&un[s..=e]).powf(ex) - aq.powf(ex)).abs();
            let q2 = (sup_norm(&vn[s..=e]).powf(ex) - aq.powf(ex)).abs();
            let q3 = (nodes[e] - nodes[s]).sqrt() * ar.powf(ex);
            Ok((q1, q2, q3))
        };
        let ok = |x: (f64, f64, f64)| x.0 <= bound && x.1 <= bound && x.2 <= bound;
        // node-wise scan; the sup of a_ε over a window only grows with it
        let mut e = s;
        let mut aq_run: f64 = 0.0;
        let mut ar_run: f64 = 0.0;
        while e < last {
            let a = a_at(nodes[e + 1])?;
            let aq = aq_run.max(spatial_lq_norm(&a, q)?).max(spatial_lq_norm(&smooth, q)?);
            let ar = ar_run.max(spatial_lq_norm(&a, r)?).max(spatial_lq_norm(&smooth, r)?);
            let q1 = (sup_norm(&un[s..=e + 1]).powf(ex) - aq.powf(ex)).abs();
            let q2 = (sup_norm(&vn[s..=e + 1]).powf(ex) - aq.powf(ex)).abs();
            let q3 = (nodes[e + 1] - nodes[s]).sqrt() * ar.powf(ex);
            if !ok((q1, q2, q3)) {
                break;
            }
            aq_run = aq;
            ar_run = ar;
            e += 1;
        }
        // confirm with refined sups, shrinking if the refinement disagrees
        let mut accepted = None;
        while e > s {
            let qs = quantities(e, true)?;
            if ok(qs) {
                accepted = Some(qs);
                break;
            }
            e -= 1;
        }
        let Some((q1, q2, q3)) = accepted else {
            status = UniquenessStatus::Inconclusive;
            reason = Some(format!(
                "no admissible τ after t = {}: one time step already violates Q <= 1/(4C)",
                nodes[s]
            ));
            break;
        };
        let seg_time = time.slice(s, e)?;
        let separation = mixed_norm_from_series(&dn[s..=e], &seg_time, p);
        segments.push(SegmentRecord {
            start: nodes[s],
            end: nodes[e],
            start_index: s,
            end_index: e,
            cutoff,
            eps_mollify: eps,
            q1,
            q2,
            q3,
            factor: c * (q1 + q2 + q3),
            separation,
        });
        s = e;
    }
    let max_factor = segments.iter().map(|g| g.factor).fold(0.0, f64::max);
    let max_separation = segments.iter().map(|g| g.separation).fold(0.0, f64::max);
    if status == UniquenessStatus::Verified && max_separation > opts.separation_tolerance {
        status = UniquenessStatus::Failed;
        reason = Some(format!(
            "separation {max_separation:e} exceeds {:e} on a contracting segment",
            opts.separation_tolerance
        ));
    }
    Ok(UniquenessReport {
        status,
        reason,
        p,
        q,
        smoothing_exponent: r,
        m_step1: m1,
        m_step3: m3,
        c_used: c,
        segments,
        max_factor,
        max_separation,
        initial_difference: d0,
        endpoint_regime: endpoint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::{bochner_mixed_norm, MixedNormParams, TimeGrid};
    use crate::pde::{odd_heat_data, NlheProblem};
    use crate::picard::{run_picard, FixedPointProblem, PicardOptions, Start};
    use crate::spectral::{PowerVariant, TorusGrid};
    use std::f64::consts::PI;

    fn solve(prob: &NlheProblem, start: Start) -> Trajectory {
        let pm = prob.clone();
        let params = prob.params;
        let fp = FixedPointProblem::new(
            prob.base().unwrap(),
            move |u: &Trajectory| pm.rhs(u),
            move |u: &Trajectory| bochner_mixed_norm(u, &params),
            prob.nu - 1.0,
            1.0,
        );
        let opts = PicardOptions {
            start,
            ..PicardOptions::default()
        };
        let (c, u) = run_picard(&fp, &opts).unwrap();
        assert!(c.converged);
        u
    }

    fn problem() -> NlheProblem {
        let g = TorusGrid::new(2, 16, 2.0 * PI).unwrap();
        NlheProblem::new(
            4.0,
            PowerVariant::Signed,
            MixedNormParams::new(6.0, 6.0).unwrap(),
            odd_heat_data(&g).scaled(0.3),
            TimeGrid::uniform(0.5, 32).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn identical_trajectories_have_zero_separation() {
        let prob = problem();
        let u = solve(&prob, Start::Base);
        let rep = uniqueness_bootstrap(&prob, &u, &u, &UniquenessOptions::default()).unwrap();
        assert_eq!(rep.status, UniquenessStatus::Verified, "{rep:?}");
        assert!(rep.segments.iter().all(|s| s.separation == 0.0 && s.factor <= 0.75));
        assert_eq!(rep.segments.last().unwrap().end_index, u.len() - 1);
    }

    #[test]
    fn two_routes_agree() {
        let prob = problem();
        let u = solve(&prob, Start::Base);
        let v = solve(&prob, Start::Zero);
        let rep = uniqueness_bootstrap(&prob, &u, &v, &UniquenessOptions::default()).unwrap();
        assert_eq!(rep.status, UniquenessStatus::Verified, "{rep:?}");
        assert!(rep.max_factor <= 0.75);
        assert!(rep.max_separation <= 1e-9);
        assert!(!rep.endpoint_regime);
    }

    #[test]
    fn different_data_are_refused() {
        let prob = problem();
        let u = solve(&prob, Start::Base);
        let mut bump = SpectralField::zeros(prob.u0.grid(), 1);
        bump.coefficients_mut()[1].re = 1e-3;
        bump.symmetrize();
        let other = prob.with_initial_data(prob.u0.add(&bump).unwrap()).unwrap();
        let v = solve(&other, Start::Base);
        let rep = uniqueness_bootstrap(&prob, &u, &v, &UniquenessOptions::default()).unwrap();
        assert_eq!(rep.status, UniquenessStatus::Refused);
        assert!(rep.reason.unwrap().contains("initial states differ"));
    }
}
