//! Linear parabolic problems `∂ₜu + Au = f`, `u(0) = 0`, with `A` a Fourier
//! multiplier: the Duhamel solver, measured maximal-regularity constants,
//! resolvent reconstruction, the Hörmander kernel condition, the Fourier-in-time
//! multiplier route, and R-bound estimation.
//!
//! Constants measured from finite ensembles are lower bounds on the true
//! constants, which are suprema over all forcings.

mod desimon;
mod duhamel;
mod forcing;
mod hormander;
mod rbound;
mod resolvent;

pub use desimon::{de_simon_multiplier_solve, multiplier_sup_norm, multiplier_sup_on, DeSimonOptions};
pub use duhamel::{
    generator_eigenvalues, phi12, solve_linear_duhamel, DuhamelStepper, StepCoefficients,
};
pub(crate) use duhamel::solve_with_eigenvalues;
pub use forcing::{Forcing, ForcingSpec, ForcingTerm, TimeProfile};
pub use hormander::{hormander_check, hormander_integral, HormanderReport};
pub use rbound::{rbound_estimate, rbound_estimate_with, RBoundEstimate, RBoundOptions};
pub use resolvent::{resolvent_via_maxreg, ResolventOptions, ResolventProbe};

use log::warn;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::norms::{
    mixed_norm_from_series, spatial_lq_norm, weighted_norm_from_series, MixedNormParams,
    Trajectory, WeightParams,
};
use crate::spectral::{FourierMultiplier, SpectralField};

/// `∂ₜu + Au = f`, `u(0) = 0` on `[0, horizon]`.
#[derive(Debug, Clone)]
pub struct LinearProblem {
    pub operator: FourierMultiplier,
    pub forcing: Trajectory,
    pub horizon: f64,
}

impl LinearProblem {
    pub fn new(operator: FourierMultiplier, forcing: Trajectory) -> Self {
        let horizon = forcing.time().end();
        Self {
            operator,
            forcing,
            horizon,
        }
    }
}

/// Measured norms for one forcing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxRegSample {
    pub norm_u: f64,
    pub norm_dt_u: f64,
    pub norm_au: f64,
    pub norm_f: f64,
    /// `max(‖u‖, ‖∂ₜu‖, ‖Au‖) / ‖f‖`
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxRegReport {
    pub params: MixedNormParams,
    /// Weight exponent `μ` when the norms carry the weight `t^{1-μ}`.
    pub weight_mu: Option<f64>,
    pub samples: Vec<MaxRegSample>,
    /// Norms of the forcing attaining the largest ratio.
    pub norms: MaxRegSample,
    pub ensemble_size: usize,
    pub skipped: usize,
    /// Largest ratio over the ensemble, a lower bound on the true constant.
    pub c_estimate: f64,
}

impl MaxRegReport {
    /// Equal measurements, ignoring how the norms were labeled.
    pub fn same_measurements(&self, other: &MaxRegReport) -> bool {
        self.samples == other.samples
            && self.c_estimate == other.c_estimate
            && self.skipped == other.skipped
    }
}

/// Spatial norms of `u`, `∂ₜu = f − Au`, `Au` and `f` at every node.
#[derive(Debug, Clone, Default)]
pub(crate) struct NormSeries {
    pub u: Vec<f64>,
    pub dt_u: Vec<f64>,
    pub au: Vec<f64>,
    pub f: Vec<f64>,
}

/// Solves with `forcing` node by node without storing the trajectory.
pub(crate) fn maxreg_series<F: Forcing + ?Sized>(
    eig: &[Complex64],
    forcing: &F,
    q: f64,
) -> Result<NormSeries> {
    let grid = forcing.spatial_grid().clone();
    let len = grid.len();
    let m = forcing.components();
    let time = forcing.time();
    let mut stepper = DuhamelStepper::new(eig, duhamel::active_indices(forcing));
    let mut u = vec![Complex64::default(); m * len];
    let mut out = NormSeries::default();
    let norm = |c: Vec<Complex64>| -> Result<f64> {
        spatial_lq_norm(&SpectralField::from_coefficients(&grid, m, c)?, q)
    };
    let mut f_prev = forcing.state(0).into_owned();
    for k in 0..time.len() {
        let f_now = if k == 0 {
            f_prev.clone()
        } else {
            let f_next = forcing.state(k).into_owned();
            let h = time.nodes()[k] - time.nodes()[k - 1];
            stepper.step(&mut u, h, f_prev.coefficients(), f_next.coefficients());
            f_next
        };
        let mut au = vec![Complex64::default(); m * len];
        let mut du = f_now.coefficients().to_vec();
        for &i in stepper.active() {
            au[i] = eig[i % len] * u[i];
            du[i] -= au[i];
        }
        out.u.push(norm(u.clone())?);
        out.au.push(norm(au)?);
        out.dt_u.push(norm(du)?);
        out.f.push(spatial_lq_norm(&f_now, q)?);
        f_prev = f_now;
    }
    Ok(out)
}

fn build_report(
    params: &MixedNormParams,
    weight: Option<&WeightParams>,
    measured: Vec<Option<MaxRegSample>>,
) -> Result<MaxRegReport> {
    let ensemble_size = measured.len();
    let samples: Vec<MaxRegSample> = measured.into_iter().flatten().collect();
    let skipped = ensemble_size - samples.len();
    let worst = samples
        .iter()
        .copied()
        .max_by(|a, b| a.ratio.total_cmp(&b.ratio))
        .ok_or_else(|| {
            Error::DegenerateEnsemble(format!(
                "all {ensemble_size} forcings have zero norm (or the ensemble is empty)"
            ))
        })?;
    Ok(MaxRegReport {
        params: *params,
        weight_mu: weight.map(|w| w.mu),
        samples,
        norms: worst,
        ensemble_size,
        skipped,
        c_estimate: worst.ratio,
    })
}

fn measure<F: Forcing>(
    operator: &FourierMultiplier,
    params: &MixedNormParams,
    weight: Option<&WeightParams>,
    ensemble: &[F],
) -> Result<MaxRegReport> {
    params.validate()?;
    if let Some(w) = weight {
        w.validate(params.p)?;
    }
    let measured: Vec<Option<MaxRegSample>> = ensemble
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            let eig = generator_eigenvalues(operator, f.spatial_grid())?;
            let s = maxreg_series(&eig, f, params.q)?;
            let time = f.time();
            let tn = |v: &[f64]| match weight {
                Some(w) => weighted_norm_from_series(v, time, params.p, w),
                None => mixed_norm_from_series(v, time, params.p),
            };
            let norm_f = tn(&s.f);
            if norm_f == 0.0 {
                warn!("forcing {i} has zero norm; skipped");
                return Ok(None);
            }
            let norm_u = tn(&s.u);
            let norm_dt_u = tn(&s.dt_u);
            let norm_au = tn(&s.au);
            let ratio = norm_u.max(norm_dt_u).max(norm_au) / norm_f;
            if !ratio.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "forcing {i}: non-finite ratio {ratio}"
                )));
            }
            Ok(Some(MaxRegSample {
                norm_u,
                norm_dt_u,
                norm_au,
                norm_f,
                ratio,
            }))
        })
        .collect::<Result<_>>()?;
    build_report(params, weight, measured)
}

/// Largest `max(‖u‖, ‖∂ₜu‖, ‖Au‖)/‖f‖` in `L^p_t(L^q_x)` over the ensemble.
/// Zero forcings are skipped with a warning; an ensemble with nothing left is
/// [`Error::DegenerateEnsemble`].
pub fn estimate_maxreg_constant<F: Forcing>(
    operator: &FourierMultiplier,
    params: &MixedNormParams,
    ensemble: &[F],
) -> Result<MaxRegReport> {
    measure(operator, params, None, ensemble)
}

/// [`estimate_maxreg_constant`] with the weight `t^{1-μ}` on every norm.
pub fn weighted_maxreg_check<F: Forcing>(
    operator: &FourierMultiplier,
    params: &MixedNormParams,
    w: &WeightParams,
    ensemble: &[F],
) -> Result<MaxRegReport> {
    measure(operator, params, Some(w), ensemble)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norms::TimeGrid;
    use crate::spectral::TorusGrid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn series_agree_with_stored_solution() {
        let g = TorusGrid::new(2, 16, 2.0 * std::f64::consts::PI).unwrap();
        let time = TimeGrid::uniform(1.0, 40).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = ForcingSpec::random(&g, 1, &time, 4, 3, &mut rng).unwrap();
        let traj = spec.to_trajectory().unwrap();
        let op = FourierMultiplier::neg_laplacian();
        let u = solve_linear_duhamel(&LinearProblem::new(op.clone(), traj.clone()), &time).unwrap();
        let eig = generator_eigenvalues(&op, &g).unwrap();
        let s = maxreg_series(&eig, &spec, 3.0).unwrap();
        for k in 0..time.len() {
            let want = spatial_lq_norm(u.state(k), 3.0).unwrap();
            assert!((s.u[k] - want).abs() <= 1e-12 * want.max(1e-300));
        }
    }

    #[test]
    fn empty_and_zero_ensembles_are_degenerate() {
        let g = TorusGrid::new(1, 8, 1.0).unwrap();
        let time = TimeGrid::uniform(1.0, 4).unwrap();
        let params = MixedNormParams::new(2.0, 2.0).unwrap();
        let op = FourierMultiplier::neg_laplacian();
        let zero = Trajectory::zeros(&time, &g, 1);
        assert!(matches!(
            estimate_maxreg_constant(&op, &params, &[zero]),
            Err(Error::DegenerateEnsemble(_))
        ));
        let empty: [Trajectory; 0] = [];
        assert!(matches!(
            estimate_maxreg_constant(&op, &params, &empty),
            Err(Error::DegenerateEnsemble(_))
        ));
    }

    #[test]
    fn negative_spectrum_is_rejected() {
        let g = TorusGrid::new(1, 8, 1.0).unwrap();
        let time = TimeGrid::uniform(1.0, 4).unwrap();
        let f = Trajectory::from_fn(&time, |_| SpectralField::from_fn(&g, |x| x[0].sin())).unwrap();
        let op = FourierMultiplier::scaled_laplacian(-1.0);
        assert!(matches!(
            solve_linear_duhamel(&LinearProblem::new(op, f), &time),
            Err(Error::NotAGenerator(_))
        ));
    }
}
