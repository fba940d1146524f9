use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{SpectralField, TorusGrid};

/// What part of the time axis a grid covers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Horizon {
    /// `[0, T]`.
    Finite(f64),
    /// `(0, ∞)` truncated to `[0, t_max]`; `tail_bound` bounds the neglected part
    /// when the grid was built for a specific integrand.
    LogTruncated {
        t_min: f64,
        t_max: f64,
        tail_bound: Option<f64>,
    },
}

/// Quadrature nodes and weights in time.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    horizon: Horizon,
}

fn trapezoid_weights(nodes: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; nodes.len()];
    for i in 0..nodes.len().saturating_sub(1) {
        let h = nodes[i + 1] - nodes[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

impl TimeGrid {
    /// `K + 1` equispaced nodes on `[0, T]` with trapezoid weights.
    pub fn uniform(horizon: f64, intervals: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) || intervals == 0 {
            return Err(Error::InvalidParameter(format!(
                "uniform grid needs T > 0 and at least one interval (T={horizon}, K={intervals})"
            )));
        }
        let h = horizon / intervals as f64;
        let nodes: Vec<f64> = (0..=intervals).map(|j| j as f64 * h).collect();
        let weights = trapezoid_weights(&nodes);
        Ok(Self {
            nodes,
            weights,
            horizon: Horizon::Finite(horizon),
        })
    }

    /// Nodes `0, t_min, t_min r, …, t_max` (geometric after the first).
    ///
    /// `[0, t_min]` uses the trapezoid rule; the geometric part uses Simpson's
    /// rule in `s = ln t` (trapezoid in `s` if `intervals` is odd).
    pub fn log_truncated(t_min: f64, t_max: f64, intervals: usize) -> Result<Self> {
        if !(t_min > 0.0 && t_max > t_min && t_max.is_finite()) || intervals < 2 {
            return Err(Error::InvalidParameter(format!(
                "log grid needs 0 < t_min < t_max and >= 2 intervals (got {t_min}, {t_max}, {intervals})"
            )));
        }
        let ds = (t_max / t_min).ln() / intervals as f64;
        let mut nodes = Vec::with_capacity(intervals + 2);
        nodes.push(0.0);
        for j in 0..=intervals {
            let t = if j == intervals { t_max } else { t_min * (ds * j as f64).exp() };
            nodes.push(t);
        }
        let mut weights = vec![0.0; nodes.len()];
        weights[0] = 0.5 * t_min;
        weights[1] = 0.5 * t_min;
        for j in 0..=intervals {
            let sw = if intervals % 2 == 0 {
                if j == 0 || j == intervals {
                    1.0 / 3.0
                } else if j % 2 == 1 {
                    4.0 / 3.0
                } else {
                    2.0 / 3.0
                }
            } else if j == 0 || j == intervals {
                0.5
            } else {
                1.0
            };
            weights[j + 1] += sw * ds * nodes[j + 1];
        }
        Ok(Self {
            nodes,
            weights,
            horizon: Horizon::LogTruncated {
                t_min,
                t_max,
                tail_bound: None,
            },
        })
    }

    /// Arbitrary increasing nodes starting at 0, trapezoid weights.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes[0] < 0.0 || nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "time nodes must be nonnegative and strictly increasing".into(),
            ));
        }
        let weights = trapezoid_weights(&nodes);
        let horizon = Horizon::Finite(*nodes.last().unwrap());
        Ok(Self {
            nodes,
            weights,
            horizon,
        })
    }

    pub fn with_tail_bound(mut self, bound: f64) -> Self {
        if let Horizon::LogTruncated { tail_bound, .. } = &mut self.horizon {
            *tail_bound = Some(bound);
        }
        self
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn horizon(&self) -> Horizon {
        self.horizon
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn end(&self) -> f64 {
        *self.nodes.last().expect("grids are nonempty")
    }

    /// Uniform spacing, if the nodes are equispaced to 1e-9 relative.
    pub fn uniform_step(&self) -> Option<f64> {
        let h = self.nodes[1] - self.nodes[0];
        let ok = self
            .nodes
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h);
        ok.then_some(h)
    }

    /// Nodes `start..=end` as a grid of their own (trapezoid weights).
    pub fn slice(&self, start: usize, end: usize) -> Result<TimeGrid> {
        if end <= start || end >= self.nodes.len() {
            return Err(Error::InvalidParameter(format!(
                "bad slice {start}..={end} of {} nodes",
                self.nodes.len()
            )));
        }
        let nodes = self.nodes[start..=end].to_vec();
        let weights = trapezoid_weights(&nodes);
        Ok(TimeGrid {
            horizon: Horizon::Finite(nodes[nodes.len() - 1]),
            nodes,
            weights,
        })
    }
}

/// Time-indexed fields sharing one spatial grid and component count.
#[derive(Debug, Clone)]
pub struct Trajectory {
    time: TimeGrid,
    states: Vec<SpectralField>,
}

impl Trajectory {
    pub fn new(time: TimeGrid, states: Vec<SpectralField>) -> Result<Self> {
        if states.len() != time.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} states for {} time nodes",
                states.len(),
                time.len()
            )));
        }
        if let Some(first) = states.first() {
            for s in &states[1..] {
                first.check_shape(s)?;
            }
        }
        Ok(Self { time, states })
    }

    pub fn zeros(time: &TimeGrid, grid: &TorusGrid, components: usize) -> Self {
        Self {
            states: vec![SpectralField::zeros(grid, components); time.len()],
            time: time.clone(),
        }
    }

    /// Samples `f(t)` at every node.
    pub fn from_fn(time: &TimeGrid, f: impl Fn(f64) -> SpectralField) -> Result<Self> {
        let states = time.nodes().iter().map(|&t| f(t)).collect();
        Self::new(time.clone(), states)
    }

    pub fn time(&self) -> &TimeGrid {
        &self.time
    }

    pub fn states(&self) -> &[SpectralField] {
        &self.states
    }

    pub fn states_mut(&mut self) -> &mut [SpectralField] {
        &mut self.states
    }

    pub fn state(&self, i: usize) -> &SpectralField {
        &self.states[i]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn grid(&self) -> &TorusGrid {
        self.states[0].grid()
    }

    pub fn components(&self) -> usize {
        self.states[0].components()
    }

    pub fn same_shape(&self, other: &Trajectory) -> bool {
        self.time == other.time
            && self.states.len() == other.states.len()
            && self.states[0].same_shape(&other.states[0])
    }

    pub fn check_shape(&self, other: &Trajectory) -> Result<()> {
        if self.time != other.time {
            return Err(Error::GridMismatch("trajectories on different time grids".into()));
        }
        self.states[0].check_shape(&other.states[0])
    }

    /// `self += a · other`. Panics on shape mismatch.
    pub fn axpy(&mut self, a: f64, other: &Trajectory) {
        assert!(self.same_shape(other), "axpy on trajectories of different shape");
        for (x, y) in self.states.iter_mut().zip(&other.states) {
            x.axpy(a, y);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for x in self.states.iter_mut() {
            x.scale(s);
        }
    }

    pub fn scaled(&self, s: f64) -> Trajectory {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    pub fn sub(&self, other: &Trajectory) -> Result<Trajectory> {
        self.check_shape(other)?;
        let mut out = self.clone();
        out.axpy(-1.0, other);
        Ok(out)
    }

    pub fn add(&self, other: &Trajectory) -> Result<Trajectory> {
        self.check_shape(other)?;
        let mut out = self.clone();
        out.axpy(1.0, other);
        Ok(out)
    }

    /// Nodes `start..=end` as a trajectory of their own.
    pub fn slice(&self, start: usize, end: usize) -> Result<Trajectory> {
        let time = self.time.slice(start, end)?;
        Ok(Trajectory {
            time,
            states: self.states[start..=end].to_vec(),
        })
    }

    /// Applies `f` to every state.
    pub fn map_states(
        &self,
        f: impl Fn(&SpectralField) -> Result<SpectralField> + Sync + Send,
    ) -> Result<Trajectory> {
        use rayon::prelude::*;
        let states: Result<Vec<_>> = self.states.par_iter().map(&f).collect();
        Trajectory::new(self.time.clone(), states?)
    }

    pub fn max_coefficient_difference(&self, other: &Trajectory) -> f64 {
        self.states
            .iter()
            .zip(&other.states)
            .map(|(a, b)| a.max_coefficient_difference(b))
            .fold(0.0, f64::max)
    }
}
