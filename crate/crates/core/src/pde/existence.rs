//! Small-data existence by Picard iteration: rescale the data to a given
//! heat-extension (Besov) norm `η`, iterate `u ↦ e^{tΔ}u₀ + F(u)` in `Y`, and
//! record what happened along the `η` sweep.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{trajectory_max_divergence, MildProblem, NlheProblem, NsProblem};
use crate::error::{Error, Result};
use crate::norms::{besov_heat_norm, bochner_mixed_norm, HeatNormOptions, MixedNormParams, Trajectory};
use crate::picard::{
    estimate_lipschitz_m_with, run_picard, FixedPointProblem, LipschitzEstimate, PicardCertificate,
    PicardOptions,
};
use crate::rng::{stream, stream_id};

const NS_LIPSCHITZ: u32 = 0x4558_0001;
const PERTURBATIONS: [f64; 6] = [1.0, 0.3, -0.5, 0.05, -2.0, 0.7];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExistenceOptions {
    pub picard: PicardOptions,
    /// Trajectory pairs used to sample `M`.
    pub lipschitz_pairs: usize,
    pub lipschitz_safety: f64,
    pub seed: u64,
    pub besov: HeatNormOptions,
    /// Re-evaluate the integral equation at a few nodes of the largest
    /// converged solution.
    pub spot_check: bool,
}

impl Default for ExistenceOptions {
    fn default() -> Self {
        Self {
            picard: PicardOptions::default(),
            lipschitz_pairs: 12,
            lipschitz_safety: 1.5,
            seed: 0,
            besov: HeatNormOptions::default(),
            spot_check: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub eta: f64,
    /// Factor applied to the data profile.
    pub scale: f64,
    pub certificate: PicardCertificate,
    /// Largest divergence over all iterates (Navier–Stokes only).
    pub max_divergence: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExistenceRecord {
    pub problem: String,
    pub n: usize,
    pub power: f64,
    pub params: MixedNormParams,
    pub criticality_defect: f64,
    pub theorem_regime: bool,
    /// Heat-extension norm of the unscaled data profile.
    pub besov_norm_of_data: f64,
    pub lipschitz: LipschitzEstimate,
    pub points: Vec<SweepPoint>,
    /// Largest `η` whose iteration converged.
    pub threshold: Option<f64>,
    /// No convergence above a smaller `η` that failed.
    pub monotone: bool,
    /// Relative deviation from a direct re-evaluation of the integral
    /// equation at the largest converged `η`.
    pub spot_check: Option<f64>,
}

fn normalized(t: Trajectory, norm: f64) -> Trajectory {
    if norm > 0.0 {
        t.scaled(1.0 / norm)
    } else {
        t
    }
}

/// Samples `M` in `‖F(u) − F(v)‖_Y <= M‖u − v‖_Y(‖u‖^ε + ‖v‖^ε)`,
/// `ε = power − 1`, on heat extensions of random data and of the problem's
/// own data, over a 10× range of amplitudes.
pub fn sample_lipschitz<P: MildProblem>(prob: &P, pairs: usize, safety: f64, seed: u64) -> Result<LipschitzEstimate> {
    let params = *prob.params();
    let time = prob.time().clone();
    let norm = move |u: &Trajectory| bochner_mixed_norm(u, &params);
    let own = prob.base()?;
    let own_norm = norm(&own)?;
    let pair = |i: usize| -> Result<(Trajectory, Trajectory)> {
        let mut rng = stream(seed, stream_id(NS_LIPSCHITZ, i as u64));
        let g1 = prob.random_data(&mut rng)?;
        let g2 = prob.random_data(&mut rng)?;
        let a1 = crate::norms::heat_extension(&g1, &time)?;
        let a2 = crate::norms::heat_extension(&g2, &time)?;
        let (n1, n2) = (norm(&a1)?, norm(&a2)?);
        let dir = if i % 3 == 2 && own_norm > 0.0 {
            own.scaled(1.0 / own_norm)
        } else {
            normalized(a1, n1)
        };
        let amp = 0.1 * 10f64.powf(i as f64 / (pairs.max(2) - 1) as f64);
        let u = dir.scaled(amp);
        let mut v = u.clone();
        v.axpy(PERTURBATIONS[i % PERTURBATIONS.len()] * amp, &normalized(a2, n2));
        Ok((u, v))
    };
    let map = |u: &Trajectory| prob.duhamel_of(u);
    estimate_lipschitz_m_with(&map, &norm, prob.power() - 1.0, pairs, &pair, safety)
}

/// Runs the Picard iteration for every `η` (sorted ascending) with data
/// `η u₀ / ‖u₀‖_{heat}`. `observer` is evaluated on every iterate.
pub fn existence_sweep<P: MildProblem>(
    prob: &P,
    eta_grid: &[f64],
    opts: &ExistenceOptions,
    observer: Option<fn(&Trajectory) -> Result<f64>>,
) -> Result<ExistenceRecord> {
    if eta_grid.is_empty() || eta_grid.iter().any(|&e| !(e >= 0.0 && e.is_finite())) {
        return Err(Error::InvalidParameter("η values must be finite and nonnegative".into()));
    }
    let mut etas = eta_grid.to_vec();
    etas.sort_by(f64::total_cmp);
    let params = *prob.params();
    let u0 = prob.initial_data();
    let data_norm = if u0.max_abs_coefficient() == 0.0 {
        0.0
    } else {
        besov_heat_norm(u0, &params, &opts.besov)?.value
    };
    if data_norm == 0.0 && etas.iter().any(|&e| e > 0.0) {
        return Err(Error::InvalidParameter("zero data cannot be rescaled to η > 0".into()));
    }
    let lipschitz = sample_lipschitz(prob, opts.lipschitz_pairs, opts.lipschitz_safety, opts.seed)?;
    let eps = prob.power() - 1.0;
    let m_used = lipschitz.m_used;

    let runs: Vec<(SweepPoint, Option<Trajectory>)> = etas
        .par_iter()
        .map(|&eta| {
            let scale = if eta == 0.0 { 0.0 } else { eta / data_norm };
            let p = prob.with_initial_data(u0.scaled(scale))?;
            let base = p.base()?;
            let pm = p.clone();
            let mut fp = FixedPointProblem::new(
                base,
                move |u: &Trajectory| pm.rhs(u),
                move |u: &Trajectory| bochner_mixed_norm(u, &params),
                eps,
                m_used,
            );
            if let Some(obs) = observer {
                fp = fp.with_observer(obs);
            }
            let (certificate, u) = run_picard(&fp, &opts.picard)?;
            let max_divergence = observer
                .map(|_| certificate.observer_values.iter().copied().fold(0.0, f64::max));
            let keep = certificate.converged.then_some(u);
            Ok((
                SweepPoint {
                    eta,
                    scale,
                    certificate,
                    max_divergence,
                },
                keep,
            ))
        })
        .collect::<Result<_>>()?;

    let threshold = runs
        .iter()
        .filter(|(p, _)| p.certificate.converged)
        .map(|(p, _)| p.eta)
        .fold(None, |m: Option<f64>, e| Some(m.map_or(e, |m| m.max(e))));
    let mut seen_failure = false;
    let mut monotone = true;
    for (p, _) in &runs {
        if !p.certificate.converged {
            seen_failure = true;
        } else if seen_failure {
            monotone = false;
        }
    }
    let spot_check = match (opts.spot_check, runs.iter().rev().find(|(_, u)| u.is_some())) {
        (true, Some((point, Some(u)))) if point.eta > 0.0 => {
            let p = prob.with_initial_data(u0.scaled(point.scale))?;
            let last = u.len() - 1;
            Some(super::mild_equation_spot_check(&p, u, &[last / 4, last / 2, last])?)
        }
        _ => None,
    };
    Ok(ExistenceRecord {
        problem: prob.label().into(),
        n: prob.dim(),
        power: prob.power(),
        params,
        criticality_defect: prob.criticality_defect(),
        theorem_regime: prob.theorem_regime(),
        besov_norm_of_data: data_norm,
        lipschitz,
        points: runs.into_iter().map(|(p, _)| p).collect(),
        threshold,
        monotone,
        spot_check,
    })
}

/// Existence sweep for the nonlinear heat equation.
pub fn nlhe_existence_experiment(
    prob: &NlheProblem,
    eta_grid: &[f64],
    opts: &ExistenceOptions,
) -> Result<ExistenceRecord> {
    existence_sweep(prob, eta_grid, opts, None)
}

/// Existence sweep for Navier–Stokes, tracking the divergence of every
/// iterate.
pub fn ns_existence_experiment(
    prob: &NsProblem,
    eta_grid: &[f64],
    opts: &ExistenceOptions,
) -> Result<ExistenceRecord> {
    existence_sweep(prob, eta_grid, opts, Some(trajectory_max_divergence))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::TimeGrid;
    use crate::pde::{odd_heat_data, taylor_green_data};
    use crate::spectral::{PowerVariant, TorusGrid};
    use std::f64::consts::PI;

    fn quick() -> ExistenceOptions {
        ExistenceOptions {
            lipschitz_pairs: 6,
            ..ExistenceOptions::default()
        }
    }

    #[test]
    fn zero_eta_converges_at_once_and_sweep_is_monotone() {
        let g = TorusGrid::new(2, 16, 2.0 * PI).unwrap();
        let prob = NlheProblem::new(
            2.0,
            PowerVariant::Signed,
            MixedNormParams::new(3.0, 1.5).unwrap(),
            odd_heat_data(&g),
            TimeGrid::uniform(0.5, 32).unwrap(),
        )
        .unwrap();
        let rec = nlhe_existence_experiment(&prob, &[0.0, 0.05, 0.2, 40.0], &quick()).unwrap();
        let zero = &rec.points[0].certificate;
        assert!(zero.converged && zero.iterations == 1 && zero.residual == 0.0);
        let small = &rec.points[1].certificate;
        assert!(small.converged && small.residual <= 1e-8);
        assert!(rec.monotone);
        assert!(!rec.points[3].certificate.converged);
        assert!(rec.spot_check.unwrap() < 1e-9);
        assert!(!rec.theorem_regime);
    }

    #[test]
    fn ns_iterates_stay_solenoidal() {
        let g = TorusGrid::new(2, 16, 2.0 * PI).unwrap();
        let prob = NsProblem::new(
            MixedNormParams::new(4.0, 4.0).unwrap(),
            taylor_green_data(&g).unwrap(),
            TimeGrid::uniform(0.5, 32).unwrap(),
        )
        .unwrap();
        let rec = ns_existence_experiment(&prob, &[0.0, 0.1], &quick()).unwrap();
        assert!(rec.theorem_regime);
        let p = &rec.points[1];
        assert!(p.certificate.converged);
        assert!(p.max_divergence.unwrap() <= 1e-10);
        assert!(p.certificate.iterations > 2);
    }
}
