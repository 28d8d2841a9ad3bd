//! Run configuration: flat `key = value` text, `#` comments, no nesting.
//!
//! `scenario` is required and selects a set of desk defaults; every other
//! key overrides one of them. Unknown and repeated keys are errors.

use std::collections::BTreeMap;
use std::path::PathBuf;

use thiserror::Error;

use crate::ensemble::{Bandwidth, DensityEstimator};
use crate::grid::Grid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { key: String, line: usize },
    #[error("line {line}: key `{key}` given more than once")]
    Duplicate { key: String, line: usize },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("`{key}`: cannot read `{value}` as {expected}")]
    Type {
        key: &'static str,
        value: String,
        expected: &'static str,
    },
    #[error("`{key}`: {reason}")]
    Constraint { key: &'static str, reason: String },
}

/// Named experiment setups.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Linear spreading Gaussian checked against its closed form.
    FreeGaussianOracle,
    /// Superposition of ladder modes under linear dynamics with a uniform
    /// initial `rho`: the coarse-grained relaxation baseline.
    BoxModesLinear,
    /// Gaussian wave with a displaced particle density under the damped
    /// equation.
    NonlinearRelax,
    /// Particles drawn from `|psi_0|^2` under linear dynamics.
    Equivariance,
    /// One particle with a fixed-width kernel under the damped equation.
    SingleParticleKernel,
}

impl Scenario {
    pub const ALL: [Scenario; 5] = [
        Scenario::FreeGaussianOracle,
        Scenario::BoxModesLinear,
        Scenario::NonlinearRelax,
        Scenario::Equivariance,
        Scenario::SingleParticleKernel,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Self::FreeGaussianOracle => "free-gaussian-oracle",
            Self::BoxModesLinear => "box-modes-linear",
            Self::NonlinearRelax => "nonlinear-relax",
            Self::Equivariance => "equivariance",
            Self::SingleParticleKernel => "single-particle-kernel",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.name() == name)
    }

    /// Whether the initial wave is a mode superposition rather than a Gaussian.
    pub fn uses_modes(&self) -> bool {
        matches!(self, Self::BoxModesLinear | Self::Equivariance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialKind {
    Zero,
    /// `m omega^2 |x - c|^2 / 2` about the domain centre.
    Harmonic { omega: f64 },
}

/// Where `rho` comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensitySource {
    Particles,
    /// Evolved on the grid without particles (1D, linear dynamics only).
    Transported,
}

/// Form of the coupling function; only the linear `alpha (1 - f)` exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GForm {
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub dim: usize,
    pub n: usize,
    pub length: f64,
    pub hbar: f64,
    pub mass: f64,
    pub alpha: f64,
    pub g_form: GForm,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub snapshot_every: usize,
    pub n_particles: usize,
    pub estimator: DensityEstimator,
    pub density: DensitySource,
    pub cg_cell_factor: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub potential: PotentialKind,
    /// Width of Gaussian initial states (`|psi|^2` standard deviation).
    pub sigma: f64,
    /// Offset of the initial `rho` along x, in units of `sigma`.
    pub rho_shift: f64,
    /// `int |psi_0|^2`.
    pub psi_norm2: f64,
    /// Number of ladder modes in mode-superposition states.
    pub modes: usize,
}

impl RunConfig {
    /// Desk parameters of a scenario.
    pub fn defaults(scenario: Scenario) -> Self {
        use std::f64::consts::PI;
        let base = Self {
            scenario,
            dim: 1,
            n: 1024,
            length: 40.0,
            hbar: 1.0,
            mass: 1.0,
            alpha: 0.0,
            g_form: GForm::Linear,
            dt: 1e-3,
            t_end: 1.0,
            record_every: 100,
            snapshot_every: 10,
            n_particles: 50_000,
            estimator: DensityEstimator::GaussianKde(Bandwidth::Silverman),
            density: DensitySource::Particles,
            cg_cell_factor: 16,
            seed: 1,
            out_dir: PathBuf::from(format!("runs/{}", scenario.name())),
            potential: PotentialKind::Zero,
            sigma: 0.5,
            rho_shift: 1.0,
            psi_norm2: 1.0,
            modes: 16,
        };
        match scenario {
            Scenario::FreeGaussianOracle => Self {
                density: DensitySource::Transported,
                ..base
            },
            Scenario::BoxModesLinear => Self {
                n: 2048,
                length: 2.0 * PI,
                t_end: 4.0 * PI,
                density: DensitySource::Transported,
                ..base
            },
            Scenario::NonlinearRelax => Self {
                alpha: 0.5,
                t_end: 20.0,
                ..base
            },
            Scenario::Equivariance => Self {
                n: 256,
                length: 2.0 * PI,
                t_end: 5.0,
                n_particles: 20_000,
                modes: 4,
                ..base
            },
            Scenario::SingleParticleKernel => Self {
                alpha: 0.5,
                t_end: 5.0,
                n_particles: 1,
                estimator: DensityEstimator::GaussianKde(Bandwidth::Fixed(0.25)),
                ..base
            },
        }
    }

    pub fn grid(&self) -> Grid {
        Grid::new(self.dim, self.n, self.length).expect("validated at parse time")
    }

    /// Number of steps and the step actually taken, which is `dt` shrunk
    /// just enough to land on `t_end`.
    pub fn schedule(&self) -> (usize, f64) {
        let steps = (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize;
        if steps == 0 {
            (0, self.dt)
        } else {
            (steps, self.t_end / steps as f64)
        }
    }

    pub fn is_linear(&self) -> bool {
        self.alpha == 0.0
    }

    /// Re-checks every cross-key constraint.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |key, reason: &str| Err(ConfigError::Constraint { key, reason: reason.into() });
        if !(1..=2).contains(&self.dim) {
            return fail("dim", "must be 1 or 2");
        }
        if self.n < 2 || !self.n.is_power_of_two() {
            return fail("n", "must be a power of two >= 2");
        }
        for (key, v) in [
            ("length", self.length),
            ("hbar", self.hbar),
            ("mass", self.mass),
            ("dt", self.dt),
            ("sigma", self.sigma),
            ("psi_norm2", self.psi_norm2),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return fail(key, "must be finite and > 0");
            }
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return fail("alpha", "must be finite and >= 0");
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return fail("t_end", "must be finite and >= 0");
        }
        if !self.rho_shift.is_finite() {
            return fail("rho_shift", "must be finite");
        }
        if self.record_every == 0 {
            return fail("record_every", "must be >= 1");
        }
        if self.snapshot_every == 0 {
            return fail("snapshot_every", "must be >= 1");
        }
        if self.cg_cell_factor == 0 || self.n % self.cg_cell_factor != 0 {
            return fail("cg_cell_factor", "must be >= 1 and divide n");
        }
        if let DensityEstimator::GaussianKde(Bandwidth::Fixed(h)) = self.estimator {
            if !(h.is_finite() && h > 0.0) {
                return fail("bandwidth", "must be finite and > 0");
            }
        }
        if let PotentialKind::Harmonic { omega } = self.potential {
            if !(omega.is_finite() && omega >= 0.0) {
                return fail("omega", "must be finite and >= 0");
            }
        }
        if self.scenario.uses_modes() {
            if self.dim != 1 {
                return fail("dim", "mode-superposition scenarios are one-dimensional");
            }
            if self.modes == 0 || 2 * self.modes >= self.n {
                return fail("modes", "must be >= 1 and below n / 2");
            }
        }
        match self.density {
            DensitySource::Transported => {
                if self.dim != 1 {
                    return fail("density", "`transported` needs dim = 1");
                }
                if !self.is_linear() {
                    return fail("density", "`transported` needs alpha = 0");
                }
            }
            DensitySource::Particles => {
                if self.n_particles == 0 {
                    return fail("n_particles", "must be >= 1");
                }
            }
        }
        Ok(())
    }
}

const KEYS: [&str; 25] = [
    "dim",
    "n",
    "length",
    "hbar",
    "mass",
    "alpha",
    "g_form",
    "dt",
    "t_end",
    "record_every",
    "snapshot_every",
    "scenario",
    "n_particles",
    "estimator",
    "bandwidth",
    "density",
    "cg_cell_factor",
    "seed",
    "out_dir",
    "potential",
    "omega",
    "sigma",
    "rho_shift",
    "psi_norm2",
    "modes",
];

fn known_key(key: &str) -> Option<&'static str> {
    KEYS.iter().copied().find(|k| *k == key)
}

fn parse_as<T: std::str::FromStr>(key: &'static str, value: &str, expected: &'static str) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Type {
        key,
        value: value.to_string(),
        expected,
    })
}

fn real(key: &'static str, value: &str) -> Result<f64, ConfigError> {
    parse_as(key, value, "a real number")
}

fn count(key: &'static str, value: &str) -> Result<usize, ConfigError> {
    parse_as(key, value, "a non-negative integer")
}

fn choice<T: Copy>(key: &'static str, value: &str, options: &[(&str, T)]) -> Result<T, ConfigError> {
    options
        .iter()
        .find(|(name, _)| *name == value)
        .map(|(_, v)| *v)
        .ok_or_else(|| ConfigError::Type {
            key,
            value: value.to_string(),
            expected: "one of the listed options",
        })
}

/// Parses and validates a configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut entries: BTreeMap<&'static str, String> = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: line_no })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax { line: line_no });
        }
        let known = known_key(key).ok_or_else(|| ConfigError::UnknownKey {
            key: key.to_string(),
            line: line_no,
        })?;
        if entries.insert(known, value.to_string()).is_some() {
            return Err(ConfigError::Duplicate {
                key: key.to_string(),
                line: line_no,
            });
        }
    }

    let scenario_name = entries.remove("scenario").ok_or(ConfigError::Missing("scenario"))?;
    let scenario = Scenario::from_name(&scenario_name).ok_or_else(|| ConfigError::Type {
        key: "scenario",
        value: scenario_name.clone(),
        expected: "a registered scenario name",
    })?;
    let mut cfg = RunConfig::defaults(scenario);

    // `bandwidth` and `omega` refine other keys, so they are applied last
    let mut bandwidth = None;
    let mut omega = None;
    for (key, value) in &entries {
        let v = value.as_str();
        match *key {
            "dim" => cfg.dim = count(key, v)?,
            "n" => cfg.n = count(key, v)?,
            "length" => cfg.length = real(key, v)?,
            "hbar" => cfg.hbar = real(key, v)?,
            "mass" => cfg.mass = real(key, v)?,
            "alpha" => cfg.alpha = real(key, v)?,
            "g_form" => cfg.g_form = choice(key, v, &[("linear", GForm::Linear)])?,
            "dt" => cfg.dt = real(key, v)?,
            "t_end" => cfg.t_end = real(key, v)?,
            "record_every" => cfg.record_every = count(key, v)?,
            "snapshot_every" => cfg.snapshot_every = count(key, v)?,
            "n_particles" => cfg.n_particles = count(key, v)?,
            "estimator" => {
                cfg.estimator = choice(
                    key,
                    v,
                    &[
                        ("histogram", DensityEstimator::Histogram),
                        ("gaussian_kde", DensityEstimator::GaussianKde(Bandwidth::Silverman)),
                    ],
                )?
            }
            "bandwidth" => {
                bandwidth = Some(if v == "silverman" {
                    Bandwidth::Silverman
                } else {
                    Bandwidth::Fixed(parse_as(key, v, "a real number or `silverman`")?)
                })
            }
            "density" => {
                cfg.density = choice(
                    key,
                    v,
                    &[("particles", DensitySource::Particles), ("transported", DensitySource::Transported)],
                )?
            }
            "cg_cell_factor" => cfg.cg_cell_factor = count(key, v)?,
            "seed" => cfg.seed = parse_as(key, v, "an unsigned 64-bit integer")?,
            "out_dir" => cfg.out_dir = PathBuf::from(v),
            "potential" => {
                cfg.potential = choice(
                    key,
                    v,
                    &[("zero", PotentialKind::Zero), ("harmonic", PotentialKind::Harmonic { omega: 1.0 })],
                )?
            }
            "omega" => omega = Some(real(key, v)?),
            "sigma" => cfg.sigma = real(key, v)?,
            "rho_shift" => cfg.rho_shift = real(key, v)?,
            "psi_norm2" => cfg.psi_norm2 = real(key, v)?,
            "modes" => cfg.modes = count(key, v)?,
            _ => unreachable!("keys are filtered against the known list"),
        }
    }
    if let Some(b) = bandwidth {
        match cfg.estimator {
            DensityEstimator::GaussianKde(_) => cfg.estimator = DensityEstimator::GaussianKde(b),
            DensityEstimator::Histogram => {
                return Err(ConfigError::Constraint {
                    key: "bandwidth",
                    reason: "only meaningful with estimator = gaussian_kde".into(),
                })
            }
        }
    }
    if let Some(w) = omega {
        match cfg.potential {
            PotentialKind::Harmonic { .. } => cfg.potential = PotentialKind::Harmonic { omega: w },
            PotentialKind::Zero => {
                return Err(ConfigError::Constraint {
                    key: "omega",
                    reason: "only meaningful with potential = harmonic".into(),
                })
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}
