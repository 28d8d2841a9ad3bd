//! Grid-level evolution of `rho` under linear dynamics in 1D, without
//! particles.
//!
//! On a line the guidance flow preserves the ordering of trajectories and
//! the `|psi|^2` mass between any two of them. Labelling a trajectory by
//! its mass coordinate `u = int_0^x |psi|^2 - Phi(t)`, where `Phi` is the
//! mass that has crossed the origin, `u` is constant along the flow. The
//! `rho` mass between two points is then a fixed function `K(u)` tabulated
//! once at `t = 0` on a refined grid, and cell masses at later times follow
//! from the current wave density alone.

use num_complex::Complex64;
use thiserror::Error;

use crate::field::{ensure_same_grid, ComplexField, FieldError, PhysicalParams, ScalarField};
use crate::grid::Grid;
use crate::spectral::line;

/// Refinement factor of the `t = 0` tables.
pub const DEFAULT_REFINEMENT: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("transported density is only available in one dimension")]
    Dimension,
    #[error("refinement factor must be at least 1")]
    Refinement,
    #[error("initial wave density has no mass")]
    NoMass,
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone)]
pub struct TransportedDensity {
    grid: Grid,
    params: PhysicalParams,
    /// Cumulative `|psi_0|^2` mass at the refined nodes, ending with the total.
    wave_mass: Vec<f64>,
    /// Cumulative `rho_0` mass at the same points.
    rho_mass: Vec<f64>,
    /// Mass that has crossed `x = 0` in the positive direction.
    flux: f64,
    current_at_origin: f64,
}

fn current_at_origin(psi: &ComplexField, params: &PhysicalParams) -> f64 {
    let d = line::derivative_at_origin(psi.values(), psi.grid().length());
    params.hbar_over_mass() * (psi.values()[0].conj() * d).im
}

fn cumulative(fine: &[f64], length: f64) -> Vec<f64> {
    let mut out = line::antiderivative(fine, length, 0.0);
    out.push(fine.iter().sum::<f64>() * length / fine.len() as f64);
    out
}

impl TransportedDensity {
    pub fn new(
        psi0: &ComplexField,
        rho0: &ScalarField,
        params: PhysicalParams,
        refinement: usize,
    ) -> Result<Self, TransportError> {
        let grid = *psi0.grid();
        ensure_same_grid(&grid, rho0.grid())?;
        if grid.dim() != 1 {
            return Err(TransportError::Dimension);
        }
        if refinement == 0 {
            return Err(TransportError::Refinement);
        }
        let fine_psi = line::refine(psi0.values(), refinement);
        let fine_wave: Vec<f64> = fine_psi.iter().map(|z| z.norm_sqr()).collect();
        let rho_c: Vec<Complex64> = rho0.values().iter().map(|&r| Complex64::new(r, 0.0)).collect();
        let fine_rho: Vec<f64> = line::refine(&rho_c, refinement)
            .iter()
            .map(|z| z.re.max(0.0))
            .collect();
        let wave_mass = cumulative(&fine_wave, grid.length());
        if !(wave_mass.last().copied().unwrap_or(0.0) > 0.0) {
            return Err(TransportError::NoMass);
        }
        let rho_mass = cumulative(&fine_rho, grid.length());
        Ok(Self {
            grid,
            params,
            wave_mass,
            rho_mass,
            flux: 0.0,
            current_at_origin: current_at_origin(psi0, &params),
        })
    }

    /// Accounts for one step that produced `psi_after`, integrating the
    /// current through the origin with the trapezoidal rule.
    pub fn advance(&mut self, psi_after: &ComplexField, dt: f64) {
        let j = current_at_origin(psi_after, &self.params);
        self.flux += 0.5 * dt * (self.current_at_origin + j);
        self.current_at_origin = j;
    }

    pub fn flux(&self) -> f64 {
        self.flux
    }

    fn rho_mass_at(&self, u: f64) -> f64 {
        let total_wave = *self.wave_mass.last().expect("non-empty table");
        let total_rho = *self.rho_mass.last().expect("non-empty table");
        let turns = (u / total_wave).floor();
        let r = u - turns * total_wave;
        let table = &self.wave_mass;
        let hi = table.partition_point(|&f| f <= r).clamp(1, table.len() - 1);
        let lo = hi - 1;
        let width = table[hi] - table[lo];
        let frac = if width > 0.0 { ((r - table[lo]) / width).clamp(0.0, 1.0) } else { 0.0 };
        let k = self.rho_mass[lo] + frac * (self.rho_mass[hi] - self.rho_mass[lo]);
        k + turns * total_rho
    }

    /// `rho` on the grid given the wavefunction at the same instant.
    pub fn density(&self, psi: &ComplexField) -> Result<ScalarField, TransportError> {
        ensure_same_grid(&self.grid, psi.grid())?;
        let dx = self.grid.spacing();
        let l = self.grid.length();
        let wave: Vec<f64> = psi.values().iter().map(|z| z.norm_sqr()).collect();
        let total = wave.iter().sum::<f64>() * dx;
        let mut edges = line::antiderivative(&wave, l, -0.5 * dx);
        edges.push(edges[0] + total);
        let masses: Vec<f64> = edges.iter().map(|&f| self.rho_mass_at(f - self.flux)).collect();
        let cell: Vec<f64> = masses.windows(2).map(|w| (w[1] - w[0]) / dx).collect();
        let nodes = line::cell_average_to_nodes(&cell, l)
            .into_iter()
            .map(|v| v.max(0.0))
            .collect();
        Ok(ScalarField::new(self.grid, nodes)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{linear_step, Potential, StepScheme};

    fn gaussian(grid: Grid, c: f64, s: f64, k: f64) -> ComplexField {
        let a = (2.0 * std::f64::consts::PI * s * s).powf(-0.25);
        ComplexField::from_fn(grid, |[x, _]| {
            Complex64::from_polar(a * (-(x - c).powi(2) / (4.0 * s * s)).exp(), k * x)
        })
    }

    #[test]
    fn initial_density_is_reproduced() {
        let g = Grid::one_d(512, 40.0).unwrap();
        let psi = gaussian(g, 20.0, 0.5, 0.0);
        let rho = gaussian(g, 20.5, 0.5, 0.0).density();
        let t = TransportedDensity::new(&psi, &rho, PhysicalParams::default(), 64).unwrap();
        let out = t.density(&psi).unwrap();
        let err = out
            .values()
            .iter()
            .zip(rho.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
        assert!((out.integral() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn equilibrium_follows_moving_packet() {
        let g = Grid::one_d(512, 40.0).unwrap();
        let params = PhysicalParams::default();
        let mut psi = gaussian(g, 35.0, 1.0, 2.0);
        let mut t = TransportedDensity::new(&psi, &psi.density(), params, 64).unwrap();
        let scheme = StepScheme::new(1e-2).unwrap();
        let v = Potential::zero(g);
        for _ in 0..300 {
            psi = linear_step(&psi, &v, &params, &scheme).unwrap();
            t.advance(&psi, scheme.dt());
        }
        // the packet has crossed the origin of the periodic box
        assert!(t.flux() > 0.5);
        let out = t.density(&psi).unwrap();
        let err = out
            .values()
            .iter()
            .zip(psi.density().values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn rejects_planes() {
        let g = Grid::new(2, 8, 1.0).unwrap();
        let psi = ComplexField::from_fn(g, |_| Complex64::new(1.0, 0.0));
        assert!(matches!(
            TransportedDensity::new(&psi, &psi.density(), PhysicalParams::default(), 4),
            Err(TransportError::Dimension)
        ));
    }
}
