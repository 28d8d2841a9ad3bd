//! Quantities the wavefunction imposes on the particles: the guidance
//! velocity `v = (hbar/m) Im(grad psi / psi)` and the quantum potential
//! `Q = -(hbar^2 / 2m) lap R / R`.
//!
//! The phase is never unwrapped. `lap R / R` is obtained from derivatives
//! of `psi` itself through `lap R / R = Re(lap psi / psi) + |Im(grad psi / psi)|^2`,
//! which stays smooth where `|psi|` has a cusp.

use num_complex::Complex64;

use crate::field::{ComplexField, PhysicalParams, ScalarField, VectorField};
use crate::spectral;

/// Relative floor below which `|psi|^2` counts as numerically absent.
pub const DEFAULT_FLOOR: f64 = 1e-12;

/// Threshold `floor * max|psi|^2` and the per-node pass mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityFloor {
    relative: f64,
}

impl DensityFloor {
    pub fn new(relative: f64) -> Self {
        Self { relative }
    }

    pub fn relative(&self) -> f64 {
        self.relative
    }

    pub fn threshold(&self, values: &[f64]) -> f64 {
        let max = values.iter().copied().fold(0.0, f64::max);
        self.relative * max
    }

    /// `true` where the value is at or above the floor. An all-zero field
    /// has no passing nodes.
    pub fn mask(&self, values: &[f64]) -> Vec<bool> {
        let eps = self.threshold(values);
        values.iter().map(|&v| v >= eps && v > 0.0).collect()
    }
}

impl Default for DensityFloor {
    fn default() -> Self {
        Self::new(DEFAULT_FLOOR)
    }
}

/// How near-node singularities are tamed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularization {
    pub floor: DensityFloor,
    /// Bound on `|v|` at nodes below the floor, normally `dx / dt`.
    /// `None` leaves the computed value, zeroing it only when non-finite.
    pub velocity_cap: Option<f64>,
}

impl Regularization {
    pub fn with_cap(cap: f64) -> Self {
        Self {
            floor: DensityFloor::default(),
            velocity_cap: Some(cap),
        }
    }
}

impl Default for Regularization {
    fn default() -> Self {
        Self {
            floor: DensityFloor::default(),
            velocity_cap: None,
        }
    }
}

fn clamp_floor_value(v: f64, cap: Option<f64>) -> f64 {
    if !v.is_finite() {
        return 0.0;
    }
    match cap {
        Some(c) => v.clamp(-c, c),
        None => v,
    }
}

/// Guidance velocity field from the spectral gradient of `psi`.
pub fn velocity_field(psi: &ComplexField, params: &PhysicalParams, reg: &Regularization) -> VectorField {
    let grid = *psi.grid();
    let density = psi.density();
    let pass = reg.floor.mask(density.values());
    let grad = spectral::gradient_complex(psi);
    let scale = params.hbar_over_mass();
    let components = grad
        .iter()
        .map(|d| {
            psi.values()
                .iter()
                .zip(d)
                .zip(density.values())
                .zip(&pass)
                .map(|(((p, dp), &rho), &ok)| {
                    let v = scale * (p.conj() * dp).im / rho;
                    if ok {
                        v
                    } else {
                        clamp_floor_value(v, reg.velocity_cap)
                    }
                })
                .collect()
        })
        .collect();
    VectorField::new(grid, components).expect("one component per axis")
}

/// Probability current `j = (hbar/m) Im(psi* grad psi)`, smooth everywhere.
pub fn probability_current(psi: &ComplexField, params: &PhysicalParams) -> VectorField {
    let grid = *psi.grid();
    let scale = params.hbar_over_mass();
    let components = spectral::gradient_complex(psi)
        .iter()
        .map(|d| {
            psi.values()
                .iter()
                .zip(d)
                .map(|(p, dp)| scale * (p.conj() * dp).im)
                .collect()
        })
        .collect();
    VectorField::new(grid, components).expect("one component per axis")
}

/// Quantum potential; nodes below the density floor carry 0.
pub fn quantum_potential(psi: &ComplexField, params: &PhysicalParams, reg: &Regularization) -> ScalarField {
    let grid = *psi.grid();
    let density = psi.density();
    let pass = reg.floor.mask(density.values());
    let grad = spectral::gradient_complex(psi);
    let lap = spectral::laplacian_complex(psi);
    let prefactor = -params.hbar() * params.hbar() / (2.0 * params.mass());
    let values = (0..grid.node_count())
        .map(|idx| {
            if !pass[idx] {
                return 0.0;
            }
            let p = psi.values()[idx];
            let inv = Complex64::new(1.0, 0.0) / p;
            let phase_grad_sq: f64 = grad.iter().map(|d| (d[idx] * inv).im.powi(2)).sum();
            let lap_r_over_r = (lap[idx] * inv).re + phase_grad_sq;
            prefactor * lap_r_over_r
        })
        .collect();
    ScalarField::new(grid, values).expect("one value per node")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use std::f64::consts::PI;

    #[test]
    fn plane_wave_velocity_is_wavenumber() {
        let l = 40.0;
        let g = Grid::one_d(1024, l).unwrap();
        let k = 2.0 * PI * 5.0 / l;
        let psi = ComplexField::from_fn(g, |[x, _]| Complex64::from_polar(1.0, k * x));
        let v = velocity_field(&psi, &PhysicalParams::default(), &Regularization::default());
        assert!(v.component(0).iter().all(|u| (u - k).abs() < 1e-10));
        let q = quantum_potential(&psi, &PhysicalParams::default(), &Regularization::default());
        assert!(q.values().iter().all(|u| u.abs() < 1e-10));
    }

    #[test]
    fn real_gaussian_has_no_velocity() {
        let l = 40.0;
        let g = Grid::one_d(1024, l).unwrap();
        let psi = ComplexField::from_fn(g, |[x, _]| {
            Complex64::new((-(x - l / 2.0).powi(2)).exp(), 0.0)
        });
        let v = velocity_field(&psi, &PhysicalParams::default(), &Regularization::with_cap(10.0));
        assert!(v.component(0).iter().all(|u| u.abs() < 1e-10));
    }

    #[test]
    fn real_cosine_superposition_has_no_velocity() {
        let g = Grid::one_d(256, 2.0 * PI).unwrap();
        let psi = ComplexField::from_fn(g, |[x, _]| Complex64::new(2.0 * (3.0 * x).cos(), 0.0));
        let v = velocity_field(&psi, &PhysicalParams::default(), &Regularization::with_cap(5.0));
        let pass = DensityFloor::default().mask(psi.density().values());
        for (u, ok) in v.component(0).iter().zip(pass) {
            if ok {
                assert!(u.abs() < 1e-10);
            } else {
                assert!(u.abs() <= 5.0);
            }
        }
    }

    #[test]
    fn gaussian_quantum_potential_matches_closed_form() {
        let (l, sigma) = (40.0, 0.5);
        let g = Grid::one_d(1024, l).unwrap();
        let c = l / 2.0;
        let psi = ComplexField::from_fn(g, |[x, _]| {
            Complex64::new((-(x - c).powi(2) / (4.0 * sigma * sigma)).exp(), 0.0)
        });
        let q = quantum_potential(&psi, &PhysicalParams::default(), &Regularization::default());
        let s2 = sigma * sigma;
        for (idx, v) in q.values().iter().enumerate() {
            let d = g.coordinate(idx) - c;
            if d.abs() <= 4.0 * sigma {
                let exact = 1.0 / (4.0 * s2) - d * d / (8.0 * s2 * s2);
                assert!((v - exact).abs() < 1e-6, "x={d} {v} {exact}");
            }
        }
    }

    #[test]
    fn sine_mode_has_constant_quantum_potential() {
        let l = 2.0 * PI;
        let g = Grid::one_d(512, l).unwrap();
        let k = 3.0;
        let psi = ComplexField::from_fn(g, |[x, _]| Complex64::new((k * x).sin(), 0.0));
        let q = quantum_potential(&psi, &PhysicalParams::default(), &Regularization::default());
        let pass = DensityFloor::default().mask(psi.density().values());
        for (v, ok) in q.values().iter().zip(pass) {
            if ok {
                assert!((v - k * k / 2.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn floor_mask_excludes_tiny_values() {
        let m = DensityFloor::default().mask(&[1.0, 1e-13, 1e-11, 0.0]);
        assert_eq!(m, vec![true, false, true, false]);
        assert_eq!(DensityFloor::default().mask(&[0.0, 0.0]), vec![false, false]);
    }
}
