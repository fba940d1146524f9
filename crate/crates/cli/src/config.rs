//! Experiment configuration: one TOML file per run.
//!
//! Only `experiment` is required. Every other field has a per-experiment
//! default that [`ExperimentConfig::validated`] fills in, so a loaded config
//! serializes to a complete description of the run.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use maxreg_core::spectral::PowerVariant;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{field}: {constraint}")]
    Constraint { field: String, constraint: String },
}

fn constraint(field: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Constraint {
        field: field.into(),
        constraint: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Maxreg,
    Weighted,
    Resolvent,
    Hormander,
    Desimon,
    Rbound,
    Scaling,
    NlheExist,
    NsExist,
    NlheUnique,
    NsUnique,
    Lipschitz,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 12] = [
        Self::Maxreg,
        Self::Weighted,
        Self::Resolvent,
        Self::Hormander,
        Self::Desimon,
        Self::Rbound,
        Self::Scaling,
        Self::NlheExist,
        Self::NsExist,
        Self::NlheUnique,
        Self::NsUnique,
        Self::Lipschitz,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Maxreg => "maxreg",
            Self::Weighted => "weighted",
            Self::Resolvent => "resolvent",
            Self::Hormander => "hormander",
            Self::Desimon => "desimon",
            Self::Rbound => "rbound",
            Self::Scaling => "scaling",
            Self::NlheExist => "nlhe-exist",
            Self::NsExist => "ns-exist",
            Self::NlheUnique => "nlhe-unique",
            Self::NsUnique => "ns-unique",
            Self::Lipschitz => "lipschitz",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            Self::Maxreg => "maximal-regularity constant over a forcing ensemble, with grid refinement",
            Self::Weighted => "power-weighted constants t^{1-μ}; μ = 1 against the unweighted run",
            Self::Resolvent => "resolvent rebuilt from evolution solutions vs the exact inverse",
            Self::Hormander => "Hörmander integral of A e^{-tA} vs brute-force quadrature, spectrum scaling",
            Self::Desimon => "L²-in-time route through the symbol iσ(iσ+A)^{-1}",
            Self::Rbound => "R-bounds of scalar families by sign enumeration",
            Self::Scaling => "mixed norms of continuum profiles under the parabolic scaling",
            Self::NlheExist => "Picard iteration for the nonlinear heat equation along an η sweep",
            Self::NsExist => "Picard iteration for Navier–Stokes along an η sweep",
            Self::NlheUnique => "uniqueness bootstrap for two nonlinear-heat solutions",
            Self::NsUnique => "uniqueness bootstrap for two Navier–Stokes solutions",
            Self::Lipschitz => "sampled pointwise inequality for |x|^{ν-1}x",
        }
    }

    /// Tolerance keys understood by the experiment, with defaults.
    pub fn tolerance_defaults(self) -> &'static [(&'static str, f64)] {
        match self {
            Self::Maxreg | Self::Weighted => &[("refinement_change", 0.05)],
            Self::Resolvent => &[("deviation", 1e-6), ("bound", 2.1)],
            Self::Hormander => &[("oracle", 1e-6), ("scaling", 1e-6)],
            Self::Desimon => &[("ratio_bound", 1.05), ("sup_lower", 0.99)],
            Self::Rbound => &[("family", 0.05), ("identity", 0.02)],
            Self::Scaling => &[("invariance", 1e-6), ("exponent", 1e-4)],
            Self::NlheExist => &[("picard", 1e-10), ("residual", 1e-8), ("contraction_slack", 0.05)],
            Self::NsExist => &[
                ("picard", 1e-10),
                ("residual", 1e-8),
                ("divergence", 1e-10),
                ("contraction_slack", 0.05),
            ],
            Self::NlheUnique => &[
                ("picard", 1e-10),
                ("residual", 1e-8),
                ("contraction", 0.75),
                ("separation_factor", 10.0),
                ("smoothing_ratio", 3.0),
            ],
            Self::NsUnique => &[
                ("picard", 1e-10),
                ("residual", 1e-8),
                ("contraction", 0.75),
                ("separation_factor", 10.0),
            ],
            Self::Lipschitz => &[("violation", 0.0)],
        }
    }

    fn is_spatial(self) -> bool {
        !matches!(self, Self::Scaling | Self::Lipschitz)
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A single number or a list of numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalars {
    One(f64),
    Many(Vec<f64>),
}

impl Scalars {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Scalars::One(v) => vec![*v],
            Scalars::Many(v) => v.clone(),
        }
    }

    fn single(&self, field: &str) -> Result<f64, ConfigError> {
        match self.values().as_slice() {
            [v] => Ok(*v),
            _ => Err(constraint(field, "this experiment takes a single value")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub dim: Option<usize>,
    /// Points per axis.
    pub points: Option<usize>,
    pub period: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub horizon: Option<f64>,
    pub nodes: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeConfig {
    pub nu: Option<Scalars>,
    pub p: Option<Scalars>,
    pub q: Option<f64>,
    /// Space dimension of continuum profiles; must match the grid otherwise.
    pub n: Option<usize>,
    pub mu: Option<Scalars>,
    pub eta_grid: Option<Vec<f64>>,
    pub lambda_set: Option<Vec<f64>>,
    pub variant: Option<PowerVariant>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingConfig {
    /// Random forcings per ensemble.
    pub ensemble: Option<usize>,
    /// Modes per random forcing.
    pub terms: Option<usize>,
    /// Largest `|k|_∞` of random forcings and fields.
    pub kmax: Option<i32>,
    /// Pairs for the pointwise inequality.
    pub samples: Option<usize>,
    pub trials: Option<usize>,
    pub vectors_per_trial: Option<usize>,
    pub family_size: Option<usize>,
    pub lipschitz_pairs: Option<usize>,
    /// Random perturbations per window in the uniqueness constants.
    pub probes: Option<usize>,
}

/// Parameters of individual probes.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    /// Resolvent points as `[re, im]`.
    pub z_set: Option<Vec<[f64; 2]>>,
    /// Shifts `s` for the Hörmander integral.
    pub s_samples: Option<Vec<f64>>,
    /// Largest `|σ|` for the symbol sup.
    pub sigma_max: Option<f64>,
    /// `[p, q]` used for the off-critical exponent.
    pub off_critical: Option<[f64; 2]>,
    /// Time exponent of the uniqueness norm.
    pub bootstrap_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub pde: PdeConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

fn fill<T: Clone>(slot: &mut Option<T>, v: T) {
    if slot.is_none() {
        *slot = Some(v);
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(constraint(field, format!("must be positive and finite, got {v}")))
    }
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            rng_seed: 0,
            output_dir: None,
            grid: GridConfig::default(),
            time: TimeConfig::default(),
            pde: PdeConfig::default(),
            sampling: SamplingConfig::default(),
            probe: ProbeConfig::default(),
            tolerances: BTreeMap::new(),
        }
    }

    /// Defaults filled in and every constraint checked.
    pub fn validated(mut self) -> Result<Self, ConfigError> {
        use ExperimentKind::*;
        let kind = self.experiment;

        let (dim, points) = match kind {
            Hormander => (1, 32),
            Rbound => (1, 16),
            _ => (2, 64),
        };
        fill(&mut self.grid.dim, dim);
        fill(&mut self.grid.points, points);
        fill(&mut self.grid.period, 2.0 * std::f64::consts::PI);
        fill(&mut self.time.horizon, 1.0);
        fill(&mut self.time.nodes, 256);

        let pde = &mut self.pde;
        match kind {
            Maxreg => {
                fill(&mut pde.p, Scalars::Many(vec![1.5, 2.0, 4.0]));
                fill(&mut pde.q, 2.0);
            }
            Weighted => {
                fill(&mut pde.p, Scalars::One(2.0));
                fill(&mut pde.q, 2.0);
                fill(&mut pde.mu, Scalars::Many(vec![0.6, 0.8]));
            }
            Desimon => {
                fill(&mut pde.p, Scalars::One(2.0));
                fill(&mut pde.q, 2.0);
            }
            Scaling => {
                fill(&mut pde.nu, Scalars::One(3.0));
                fill(&mut pde.p, Scalars::One(4.0));
                fill(&mut pde.q, 4.0);
                fill(&mut pde.lambda_set, vec![0.25, 0.5, 2.0, 4.0]);
                fill(&mut self.probe.off_critical, [3.0, 3.0]);
            }
            NlheExist => {
                fill(&mut pde.nu, Scalars::One(2.0));
                fill(&mut pde.p, Scalars::One(3.0));
                fill(&mut pde.q, 1.5);
                fill(&mut pde.variant, PowerVariant::Signed);
                fill(
                    &mut pde.eta_grid,
                    vec![0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0, 30.0],
                );
            }
            NsExist => {
                fill(&mut pde.p, Scalars::One(4.0));
                fill(&mut pde.q, 4.0);
                fill(&mut pde.eta_grid, vec![0.01, 0.03, 0.1, 0.3, 1.0, 3.0, 10.0]);
            }
            NlheUnique => {
                fill(&mut pde.nu, Scalars::One(4.0));
                fill(&mut pde.p, Scalars::One(6.0));
                fill(&mut pde.q, 6.0);
                fill(&mut pde.variant, PowerVariant::Signed);
                fill(&mut pde.eta_grid, vec![1.0]);
                fill(&mut self.probe.bootstrap_p, 2.0);
            }
            NsUnique => {
                fill(&mut pde.p, Scalars::One(4.0));
                fill(&mut pde.q, 4.0);
                fill(&mut pde.eta_grid, vec![0.5]);
                fill(&mut self.probe.bootstrap_p, 2.0);
            }
            Lipschitz => fill(&mut pde.nu, Scalars::Many(vec![1.5, 2.0, 3.0])),
            Resolvent | Hormander | Rbound => {}
        }
        if kind.is_spatial() {
            fill(&mut pde.n, self.grid.dim.unwrap_or(2));
        } else if kind == Scaling {
            fill(&mut pde.n, 2);
        }

        let s = &mut self.sampling;
        match kind {
            Maxreg | Weighted | Desimon => {
                fill(&mut s.ensemble, 20);
                fill(&mut s.terms, 4);
                fill(&mut s.kmax, 6);
            }
            Resolvent => fill(&mut s.kmax, 6),
            Rbound => {
                fill(&mut s.trials, 64);
                fill(&mut s.vectors_per_trial, 4096);
                fill(&mut s.family_size, 12);
            }
            NlheExist | NsExist => fill(&mut s.lipschitz_pairs, 12),
            NlheUnique | NsUnique => {
                fill(&mut s.lipschitz_pairs, 12);
                fill(&mut s.probes, 4);
            }
            Lipschitz => fill(&mut s.samples, 1_000_000),
            Hormander | Scaling => {}
        }
        let probe = &mut self.probe;
        match kind {
            Resolvent => fill(
                &mut probe.z_set,
                vec![[1.0, 0.0], [1.0, 10.0], [100.0, 0.0]],
            ),
            Hormander => fill(
                &mut probe.s_samples,
                vec![-1.0, -0.3, -0.05, 0.01, 0.05, 0.3, 1.0, 3.0],
            ),
            Desimon => fill(&mut probe.sigma_max, 1e6),
            _ => {}
        }

        let allowed = kind.tolerance_defaults();
        for (k, v) in &self.tolerances {
            if !allowed.iter().any(|(a, _)| a == k) {
                let names: Vec<&str> = allowed.iter().map(|(a, _)| *a).collect();
                return Err(constraint(
                    &format!("tolerances.{k}"),
                    format!("unknown key for {kind} (expected one of {})", names.join(", ")),
                ));
            }
            if !(*v >= 0.0 && v.is_finite()) {
                return Err(constraint(&format!("tolerances.{k}"), "must be finite and nonnegative"));
            }
        }
        for (k, v) in allowed {
            self.tolerances.entry((*k).into()).or_insert(*v);
        }

        self.check()?;
        Ok(self)
    }

    fn check(&self) -> Result<(), ConfigError> {
        use ExperimentKind::*;
        let kind = self.experiment;
        let g = &self.grid;
        if let (Some(dim), Some(points), Some(period)) = (g.dim, g.points, g.period) {
            maxreg_core::TorusGrid::new(dim, points, period)
                .map_err(|e| constraint("grid", e.to_string()))?;
        }
        if let Some(h) = self.time.horizon {
            positive("time.horizon", h)?;
        }
        if self.time.nodes.is_some_and(|n| n < 2) {
            return Err(constraint("time.nodes", "need at least 2 nodes"));
        }
        let pde = &self.pde;
        if let Some(nu) = &pde.nu {
            for v in nu.values() {
                if !(v > 1.0 && v.is_finite()) {
                    return Err(constraint("pde.nu", format!("ν must exceed 1, got {v}")));
                }
            }
            if kind != Lipschitz && kind != Scaling {
                nu.single("pde.nu")?;
            }
        }
        let ps = pde.p.as_ref().map(Scalars::values).unwrap_or_default();
        for &p in &ps {
            if !(p > 1.0) {
                return Err(constraint("pde.p", format!("p must exceed 1, got {p}")));
            }
        }
        if let Some(p) = &pde.p {
            if kind != Maxreg {
                p.single("pde.p")?;
            }
        }
        if let Some(q) = pde.q {
            if !(q > 1.0) {
                return Err(constraint("pde.q", format!("q must exceed 1, got {q}")));
            }
        }
        if let Some(mu) = &pde.mu {
            let p = ps.first().copied().unwrap_or(2.0);
            for m in mu.values() {
                if !(m > 1.0 / p) {
                    return Err(constraint(
                        "pde.mu",
                        format!("μ must exceed 1/p (μ = {m}, p = {p})"),
                    ));
                }
                if m > 1.0 {
                    return Err(constraint("pde.mu", format!("μ must be at most 1, got {m}")));
                }
            }
        }
        if let (Some(n), Some(dim)) = (pde.n, g.dim) {
            if kind.is_spatial() && n != dim {
                return Err(constraint(
                    "pde.n",
                    format!("must match grid.dim for {kind} (n = {n}, dim = {dim})"),
                ));
            }
            if n == 0 {
                return Err(constraint("pde.n", "must be positive"));
            }
        }
        if let Some(eta) = &pde.eta_grid {
            if eta.is_empty() {
                return Err(constraint("pde.eta_grid", "must not be empty"));
            }
            if eta.iter().any(|&e| !(e >= 0.0 && e.is_finite())) {
                return Err(constraint("pde.eta_grid", "η values must be finite and nonnegative"));
            }
        }
        if let Some(ls) = &pde.lambda_set {
            if ls.is_empty() {
                return Err(constraint("pde.lambda_set", "must not be empty"));
            }
            for &l in ls {
                positive("pde.lambda_set", l)?;
            }
        }
        if matches!(kind, NsExist | NsUnique) && g.dim.is_some_and(|d| d != 2) {
            return Err(constraint("grid.dim", "Navier–Stokes data are two-dimensional"));
        }
        if let Some(z) = &self.probe.z_set {
            if z.is_empty() {
                return Err(constraint("probe.z_set", "must not be empty"));
            }
            if z.iter().any(|z| !(z[0] > 0.0)) {
                return Err(constraint("probe.z_set", "Re z must be positive"));
            }
        }
        if let Some(s) = &self.probe.s_samples {
            if s.is_empty() || s.iter().any(|&s| s == 0.0 || !s.is_finite()) {
                return Err(constraint("probe.s_samples", "need nonzero finite shifts"));
            }
        }
        if let Some(s) = self.probe.sigma_max {
            positive("probe.sigma_max", s)?;
        }
        if let Some([p, q]) = self.probe.off_critical {
            if !(p > 1.0 && q > 1.0) {
                return Err(constraint("probe.off_critical", "p and q must exceed 1"));
            }
        }
        if let Some(p) = self.probe.bootstrap_p {
            if !(p > 1.0) {
                return Err(constraint("probe.bootstrap_p", format!("p must exceed 1, got {p}")));
            }
        }
        if self.sampling.kmax.is_some_and(|k| k < 1) {
            return Err(constraint("sampling.kmax", "must be at least 1"));
        }
        if self.sampling.terms == Some(0) {
            return Err(constraint("sampling.terms", "must be at least 1"));
        }
        if kind == Rbound && self.sampling.family_size == Some(0) {
            return Err(constraint("sampling.family_size", "must be at least 1"));
        }
        Ok(())
    }

    pub fn tolerance(&self, key: &str) -> f64 {
        self.tolerances.get(key).copied().unwrap_or_else(|| {
            self.experiment
                .tolerance_defaults()
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, v)| *v)
                .unwrap_or_else(|| panic!("no tolerance {key} for {}", self.experiment))
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }
}

/// Parses and validates a config held in memory.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let raw: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    raw.validated()
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}
