use std::borrow::Cow;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{TimeGrid, Trajectory};
use crate::spectral::{SpectralField, TorusGrid};

/// A right-hand side sampled on a time grid. Implemented by stored
/// trajectories and by closed-form forcings that build states on demand.
pub trait Forcing: Sync {
    fn time(&self) -> &TimeGrid;
    fn spatial_grid(&self) -> &TorusGrid;
    fn components(&self) -> usize;
    fn state(&self, k: usize) -> Cow<'_, SpectralField>;

    /// Flat coefficient indices that can be nonzero, if known in advance.
    fn active_modes(&self) -> Option<Vec<usize>> {
        None
    }
}

impl Forcing for Trajectory {
    fn time(&self) -> &TimeGrid {
        Trajectory::time(self)
    }

    fn spatial_grid(&self) -> &TorusGrid {
        self.grid()
    }

    fn components(&self) -> usize {
        Trajectory::components(self)
    }

    fn state(&self, k: usize) -> Cow<'_, SpectralField> {
        Cow::Borrowed(Trajectory::state(self, k))
    }
}

/// Scalar time profile of one forcing term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TimeProfile {
    /// `Σ_j a_j cos(ω_j t) + b_j sin(ω_j t)` with entries `(ω_j, a_j, b_j)`.
    Trig(Vec<(f64, f64, f64)>),
    /// `exp(-(t - center)² / (2 width²))`.
    Bump { center: f64, width: f64 },
}

impl TimeProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Trig(terms) => terms
                .iter()
                .map(|&(w, a, b)| a * (w * t).cos() + b * (w * t).sin())
                .sum(),
            TimeProfile::Bump { center, width } => {
                let d = (t - center) / width;
                (-0.5 * d * d).exp()
            }
        }
    }
}

/// `a e^{ik·x} + conj(a) e^{-ik·x}` in one component, times a time profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingTerm {
    pub component: usize,
    pub wavenumber: Vec<i32>,
    pub amplitude: Complex64,
    pub profile: TimeProfile,
}

/// Real forcing made of finitely many Fourier modes with smooth time
/// profiles; states are built on demand, so fine grids cost no storage.
#[derive(Debug, Clone)]
pub struct ForcingSpec {
    grid: TorusGrid,
    components: usize,
    time: TimeGrid,
    terms: Vec<ForcingTerm>,
    index: Vec<(usize, usize)>,
}

impl ForcingSpec {
    pub fn new(
        grid: &TorusGrid,
        components: usize,
        time: &TimeGrid,
        terms: Vec<ForcingTerm>,
    ) -> Result<Self> {
        let len = grid.len();
        let mut index = Vec::with_capacity(terms.len());
        for t in &terms {
            if t.component >= components {
                return Err(Error::DimensionMismatch(format!(
                    "term component {} of a {components}-component forcing",
                    t.component
                )));
            }
            let idx = grid.index_of(&t.wavenumber).ok_or_else(|| {
                Error::InvalidParameter(format!("wavenumber {:?} not on the grid", t.wavenumber))
            })?;
            let neg = grid.neg_index(idx);
            index.push((t.component * len + idx, t.component * len + neg));
        }
        Ok(Self {
            grid: grid.clone(),
            components,
            time: time.clone(),
            terms,
            index,
        })
    }

    /// `terms` random modes with `1 <= |k|_∞ <= kmax`, complex normal
    /// amplitudes and random trigonometric profiles of up to three periods
    /// over the horizon.
    pub fn random<R: Rng + ?Sized>(
        grid: &TorusGrid,
        components: usize,
        time: &TimeGrid,
        terms: usize,
        kmax: i32,
        rng: &mut R,
    ) -> Result<Self> {
        let kmax = kmax.min(grid.dealias_cutoff() - 1);
        if kmax < 1 || terms == 0 {
            return Err(Error::InvalidParameter(
                "random forcing needs at least one term and kmax >= 1".into(),
            ));
        }
        let period = time.end() - time.nodes()[0];
        let mut out = Vec::with_capacity(terms);
        while out.len() < terms {
            let k: Vec<i32> = (0..grid.dim()).map(|_| rng.random_range(-kmax..=kmax)).collect();
            if k.iter().all(|&v| v == 0) {
                continue;
            }
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let profile = TimeProfile::Trig(
                (0..=3)
                    .map(|j| {
                        let a: f64 = rng.sample(StandardNormal);
                        let b: f64 = rng.sample(StandardNormal);
                        (2.0 * std::f64::consts::PI * j as f64 / period, a, b)
                    })
                    .collect(),
            );
            out.push(ForcingTerm {
                component: rng.random_range(0..components),
                wavenumber: k,
                amplitude: Complex64::new(re, im),
                profile,
            });
        }
        Self::new(grid, components, time, out)
    }

    pub fn terms(&self) -> &[ForcingTerm] {
        &self.terms
    }

    /// Same forcing on other grids (terms keep their integer wavenumbers).
    pub fn resampled(&self, grid: &TorusGrid, time: &TimeGrid) -> Result<Self> {
        Self::new(grid, self.components, time, self.terms.clone())
    }

    pub fn to_trajectory(&self) -> Result<Trajectory> {
        let states = (0..self.time.len()).map(|k| self.state(k).into_owned()).collect();
        Trajectory::new(self.time.clone(), states)
    }
}

impl Forcing for ForcingSpec {
    fn time(&self) -> &TimeGrid {
        &self.time
    }

    fn spatial_grid(&self) -> &TorusGrid {
        &self.grid
    }

    fn components(&self) -> usize {
        self.components
    }

    fn state(&self, k: usize) -> Cow<'_, SpectralField> {
        let t = self.time.nodes()[k];
        let mut f = SpectralField::zeros(&self.grid, self.components);
        let c = f.coefficients_mut();
        for (term, &(i, j)) in self.terms.iter().zip(&self.index) {
            let g = term.profile.eval(t);
            c[i] += term.amplitude * g;
            c[j] += term.amplitude.conj() * g;
        }
        Cow::Owned(f)
    }

    fn active_modes(&self) -> Option<Vec<usize>> {
        let mut v: Vec<usize> = self.index.iter().flat_map(|&(i, j)| [i, j]).collect();
        v.sort_unstable();
        v.dedup();
        Some(v)
    }
}
