//! Closed-form solutions of the linear equation with `V = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::ensemble::auxiliary_stream;
use crate::field::{ComplexField, PhysicalParams};
use crate::grid::Grid;

/// Largest Gaussian tail mass tolerated beyond the periodic boundary.
pub const MAX_TAIL_MASS: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("sigma must be finite and > 0, got {0}")]
    Width(f64),
    #[error("Gaussian too wide for the domain: tail mass up to {0:e} beyond the boundary")]
    SupportTooWide(f64),
    #[error("need at least one mode")]
    NoModes,
    #[error("mode {0} appears more than once")]
    RepeatedMode(i64),
    #[error("mode {0} is not resolved by the grid")]
    Unresolved(i64),
    #[error("{modes} modes but {phases} phases")]
    PhaseCount { modes: usize, phases: usize },
    #[error("mode superpositions are one-dimensional")]
    Dimension,
}

/// Upper bound on the mass of a unit-normalized Gaussian with standard
/// deviation `s` lying more than `d` from its centre (both sides).
fn two_sided_tail(d: f64, s: f64) -> f64 {
    let z = d / s;
    (2.0 / PI).sqrt() * (-0.5 * z * z).exp() / z
}

/// The freely spreading Gaussian whose `|psi|^2` has standard deviation
/// `sigma0` at `t = 0`, centred at `center` (per axis), at time `t`:
/// `psi = (2 pi s0^2)^(-1/4) (1 + i a)^(-1/2) exp(-(x - c)^2 / (4 s0^2 (1 + i a)))`
/// with `a = hbar t / (2 m s0^2)`, as a product over axes in 2D.
pub fn oracle_free_gaussian(
    grid: Grid,
    sigma0: f64,
    params: &PhysicalParams,
    t: f64,
    center: [f64; 2],
) -> Result<ComplexField, OracleError> {
    if !(sigma0.is_finite() && sigma0 > 0.0) {
        return Err(OracleError::Width(sigma0));
    }
    let a = params.hbar() * t / (2.0 * params.mass() * sigma0 * sigma0);
    let width_t = sigma0 * (1.0 + a * a).sqrt();
    let mut tail = 0.0;
    for c in center.iter().take(grid.dim()) {
        let room = c.min(grid.length() - c);
        tail += if room > 0.0 { two_sided_tail(room, width_t) } else { 1.0 };
    }
    if tail > MAX_TAIL_MASS {
        return Err(OracleError::SupportTooWide(tail));
    }
    let spread = Complex64::new(1.0, a);
    let amplitude = (2.0 * PI * sigma0 * sigma0).powf(-0.25) / spread.sqrt();
    let denom = 4.0 * sigma0 * sigma0 * spread;
    let axis = |x: f64, c: f64| amplitude * (-(x - c) * (x - c) / denom).exp();
    Ok(ComplexField::from_fn(grid, |p| match grid.dim() {
        1 => axis(p[0], center[0]),
        _ => axis(p[0], center[0]) * axis(p[1], center[1]),
    }))
}

/// Seeded phases in `[0, 2 pi)` for a mode superposition.
pub fn box_mode_phases(seed: u64, count: usize) -> Vec<f64> {
    let mut rng = auxiliary_stream(seed, 0);
    (0..count).map(|_| rng.gen::<f64>() * 2.0 * PI).collect()
}

/// Time after which every ladder mode returns to its initial phase,
/// `m L^2 / (pi hbar)`.
pub fn recurrence_time(grid: &Grid, params: &PhysicalParams) -> f64 {
    params.mass() * grid.length().powi(2) / (PI * params.hbar())
}

/// `psi = (M L)^(-1/2) sum_m exp(i (k_m x + theta_m - hbar k_m^2 t / 2m))`
/// with `k_m = 2 pi m / L` for the ladder indices `modes`.
pub fn oracle_box_modes(
    grid: Grid,
    modes: &[i64],
    phases: &[f64],
    params: &PhysicalParams,
    t: f64,
) -> Result<ComplexField, OracleError> {
    if grid.dim() != 1 {
        return Err(OracleError::Dimension);
    }
    if modes.is_empty() {
        return Err(OracleError::NoModes);
    }
    if modes.len() != phases.len() {
        return Err(OracleError::PhaseCount {
            modes: modes.len(),
            phases: phases.len(),
        });
    }
    let half = (grid.points_per_dim() / 2) as i64;
    for (i, &m) in modes.iter().enumerate() {
        if modes[..i].contains(&m) {
            return Err(OracleError::RepeatedMode(m));
        }
        if m.abs() >= half {
            return Err(OracleError::Unresolved(m));
        }
    }
    let l = grid.length();
    let scale = 1.0 / (modes.len() as f64 * l).sqrt();
    let terms: Vec<(f64, f64)> = modes
        .iter()
        .zip(phases)
        .map(|(&m, &theta)| {
            let k = 2.0 * PI * m as f64 / l;
            (k, theta - params.hbar_over_mass() * k * k * t / 2.0)
        })
        .collect();
    Ok(ComplexField::from_fn(grid, |[x, _]| {
        terms
            .iter()
            .map(|&(k, phase)| Complex64::from_polar(scale, k * x + phase))
            .sum()
    }))
}
