//! The particle side: an ensemble of one-body systems whose empirical
//! distribution realizes `rho`, advected along the guidance field and
//! deposited back onto the grid.

mod advect;
mod density;
mod rng;
mod sampling;

use std::fmt::Write as _;

use thiserror::Error;

pub use advect::{advect, advect_with, rk4_step, FnVelocity, GridVelocity, VelocitySource};
pub use density::{estimate_density, histogram_counts, silverman_bandwidth, Bandwidth, DensityEstimator};
pub use rng::{auxiliary_stream, particle_stream};
pub use sampling::sample;

use crate::field::{ensure_same_grid, ComplexField, FieldError, ScalarField};
use crate::grid::Grid;
use crate::kinematics::DensityFloor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("ensemble needs at least one particle")]
    Empty,
    #[error("density is zero everywhere")]
    ZeroDensity,
    #[error("density has a negative or non-finite value at node {0}")]
    BadDensity(usize),
    #[error("expected {expected} coordinates, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("position {0} is outside the periodic domain")]
    OutOfDomain(f64),
    #[error("ensemble and grid describe different domains")]
    DomainMismatch,
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// `N` particle positions in `[0, L)^dim`, flattened with stride `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    grid: Grid,
    positions: Vec<f64>,
    seed: u64,
}

impl ParticleEnsemble {
    pub fn from_positions(grid: Grid, positions: Vec<f64>, seed: u64) -> Result<Self, EnsembleError> {
        let dim = grid.dim();
        if positions.is_empty() {
            return Err(EnsembleError::Empty);
        }
        if positions.len() % dim != 0 {
            return Err(EnsembleError::Shape {
                expected: dim * positions.len().div_ceil(dim),
                got: positions.len(),
            });
        }
        if let Some(&x) = positions
            .iter()
            .find(|x| !(x.is_finite() && (0.0..grid.length()).contains(*x)))
        {
            return Err(EnsembleError::OutOfDomain(x));
        }
        Ok(Self {
            grid,
            positions,
            seed,
        })
    }

    pub(crate) fn from_parts(grid: Grid, positions: Vec<f64>, seed: u64) -> Self {
        Self {
            grid,
            positions,
            seed,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn len(&self) -> usize {
        self.positions.len() / self.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn position(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.positions[i * d..(i + 1) * d]
    }

    pub fn is_finite(&self) -> bool {
        self.positions.iter().all(|x| x.is_finite())
    }

    /// Plain-text dump: `# N=<n> seed=<s> t=<t>` then one position per line.
    pub fn snapshot(&self, t: f64) -> String {
        let mut out = String::with_capacity(self.positions.len() * 25 + 64);
        let _ = writeln!(out, "# N={} seed={} t={:.16e}", self.len(), self.seed, t);
        for p in self.positions.chunks(self.dim()) {
            let line: Vec<String> = p.iter().map(|x| format!("{x:.16e}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }
}

/// `f_q = rho / |psi|^2` with the nodes it could not be formed on.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioField {
    pub values: ScalarField,
    /// `true` where `|psi|^2` passed the floor.
    pub passing: Vec<bool>,
}

impl RatioField {
    pub fn passing_range(&self) -> (f64, f64) {
        self.values
            .values()
            .iter()
            .zip(&self.passing)
            .filter(|(_, ok)| **ok)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&v, _)| (lo.min(v), hi.max(v)))
    }
}

/// Ratio of particle density to wave density. Nodes where `|psi|^2` is
/// below the floor are excluded and carry the neutral value 1.
pub fn f_q_field(rho: &ScalarField, psi: &ComplexField, floor: &DensityFloor) -> Result<RatioField, EnsembleError> {
    ensure_same_grid(rho.grid(), psi.grid())?;
    let wave = psi.density();
    let passing = floor.mask(wave.values());
    let values = rho
        .values()
        .iter()
        .zip(wave.values())
        .zip(&passing)
        .map(|((&r, &p), &ok)| if ok { r.max(0.0) / p } else { 1.0 })
        .collect();
    Ok(RatioField {
        values: ScalarField::new(*rho.grid(), values)?,
        passing,
    })
}
