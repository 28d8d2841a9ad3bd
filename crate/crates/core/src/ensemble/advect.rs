//! Trajectory integration: classical RK4 with the velocity field frozen over
//! the step and read between nodes by periodic Catmull-Rom interpolation.

use rayon::prelude::*;

use super::{EnsembleError, ParticleEnsemble};
use crate::field::VectorField;

/// Anything that can report a velocity at an arbitrary point.
pub trait VelocitySource: Sync {
    fn velocity(&self, x: [f64; 2]) -> [f64; 2];

    /// First component on a line; the default defers to `velocity`.
    #[inline]
    fn velocity_line(&self, x: f64) -> f64 {
        self.velocity([x, 0.0])[0]
    }
}

/// A closure velocity, mainly for tests with known flows.
pub struct FnVelocity<F>(pub F);

impl<F> VelocitySource for FnVelocity<F>
where
    F: Fn([f64; 2]) -> [f64; 2] + Sync,
{
    fn velocity(&self, x: [f64; 2]) -> [f64; 2] {
        (self.0)(x)
    }
}

/// A gridded velocity field read with periodic piecewise-cubic
/// (Catmull-Rom) interpolation, tensor product in 2D.
pub struct GridVelocity<'a> {
    field: &'a VectorField,
    n: usize,
    inv_dx: f64,
    /// Per-cell polynomial coefficients of the 1D interpolant.
    cells: Vec<[f64; 4]>,
}

impl<'a> GridVelocity<'a> {
    pub fn new(field: &'a VectorField) -> Self {
        let grid = field.grid();
        let n = grid.points_per_dim();
        let cells = match grid.dim() {
            1 => {
                let c = field.component(0);
                (0..n)
                    .map(|i| {
                        let v = [c[(i + n - 1) % n], c[i], c[(i + 1) % n], c[(i + 2) % n]];
                        cubic(v)
                    })
                    .collect()
            }
            _ => Vec::new(),
        };
        Self {
            field,
            n,
            inv_dx: 1.0 / grid.spacing(),
            cells,
        }
    }

    /// Cell index and offset in `[0, 1)` of coordinate `x`.
    #[inline(always)]
    fn locate(&self, x: f64) -> (i64, f64) {
        let s = x * self.inv_dx;
        // truncation is the floor for s >= 0 and avoids a libm call
        let base = if s >= 0.0 { (s as i64) as f64 } else { s.floor() };
        (base as i64, s - base)
    }

    #[inline(always)]
    fn stencil(&self, x: f64) -> ([usize; 4], f64) {
        let (b, t) = self.locate(x);
        let n = self.n as i64;
        if (1..n - 2).contains(&b) {
            let i = b as usize;
            return ([i - 1, i, i + 1, i + 2], t);
        }
        let w = |o: i64| (b + o).rem_euclid(n) as usize;
        ([w(-1), w(0), w(1), w(2)], t)
    }
}

/// Catmull-Rom coefficients through `v[1]` and `v[2]`, written on
/// differences so constant data reproduces exactly.
#[inline]
fn cubic(v: [f64; 4]) -> [f64; 4] {
    let [v0, v1, v2, v3] = v;
    [
        v1,
        0.5 * (v2 - v0),
        0.5 * (2.0 * v0 - 5.0 * v1 + 4.0 * v2 - v3),
        0.5 * (3.0 * (v1 - v2) + v3 - v0),
    ]
}

#[inline(always)]
fn horner(c: &[f64; 4], t: f64) -> f64 {
    c[0] + t * (c[1] + t * (c[2] + t * c[3]))
}

#[inline]
fn catmull_rom(v0: f64, v1: f64, v2: f64, v3: f64, t: f64) -> f64 {
    horner(&cubic([v0, v1, v2, v3]), t)
}

impl GridVelocity<'_> {
    #[inline(never)]
    fn plane(&self, x: [f64; 2]) -> [f64; 2] {
        let n = self.n;
        let (ix, tx) = self.stencil(x[0]);
        let (iy, ty) = self.stencil(x[1]);
        let mut out = [0.0; 2];
        for (axis, slot) in out.iter_mut().enumerate() {
            let c = self.field.component(axis);
            let rows = ix.map(|i| {
                let r = &c[i * n..(i + 1) * n];
                catmull_rom(r[iy[0]], r[iy[1]], r[iy[2]], r[iy[3]], ty)
            });
            *slot = catmull_rom(rows[0], rows[1], rows[2], rows[3], tx);
        }
        out
    }
}

impl VelocitySource for GridVelocity<'_> {
    #[inline]
    fn velocity(&self, x: [f64; 2]) -> [f64; 2] {
        if self.cells.is_empty() {
            return self.plane(x);
        }
        [self.velocity_line(x[0]), 0.0]
    }

    #[inline(always)]
    fn velocity_line(&self, x: f64) -> f64 {
        let (b, t) = self.locate(x);
        let n = self.n as i64;
        let i = if (0..n).contains(&b) { b } else { b.rem_euclid(n) };
        horner(&self.cells[i as usize], t)
    }
}

/// One RK4 step of `dx/dt = v(x)` without wrapping.
pub fn rk4_step<V: VelocitySource + ?Sized>(x: [f64; 2], dt: f64, v: &V) -> [f64; 2] {
    let shift = |a: [f64; 2], k: [f64; 2], h: f64| [a[0] + h * k[0], a[1] + h * k[1]];
    let k1 = v.velocity(x);
    let k2 = v.velocity(shift(x, k1, 0.5 * dt));
    let k3 = v.velocity(shift(x, k2, 0.5 * dt));
    let k4 = v.velocity(shift(x, k3, dt));
    let step = |i: usize| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    [step(0), step(1)]
}

/// `rk4_step` on a line, for a block of independent points at once so
/// their dependency chains overlap. Same arithmetic as the first
/// component of `rk4_step`.
#[inline(always)]
fn rk4_line<V: VelocitySource + ?Sized>(x: &mut [f64; LANES], dt: f64, v: &V) {
    let mut k1 = [0.0; LANES];
    let mut k2 = [0.0; LANES];
    let mut k3 = [0.0; LANES];
    let mut k4 = [0.0; LANES];
    for j in 0..LANES {
        k1[j] = v.velocity_line(x[j]);
    }
    for j in 0..LANES {
        k2[j] = v.velocity_line(x[j] + 0.5 * dt * k1[j]);
    }
    for j in 0..LANES {
        k3[j] = v.velocity_line(x[j] + 0.5 * dt * k2[j]);
    }
    for j in 0..LANES {
        k4[j] = v.velocity_line(x[j] + dt * k3[j]);
    }
    for j in 0..LANES {
        x[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
    }
}

const LANES: usize = 8;

/// Moves every particle one RK4 step through `v` and wraps it back into
/// the domain.
pub fn advect_with<V: VelocitySource + ?Sized>(ens: &ParticleEnsemble, v: &V, dt: f64) -> ParticleEnsemble {
    let grid = *ens.grid();
    let dim = grid.dim();
    let mut positions = ens.positions().to_vec();
    let single = |p: &mut [f64]| {
        let x = if dim == 1 { [p[0], 0.0] } else { [p[0], p[1]] };
        let y = rk4_step(x, dt, v);
        for (d, slot) in p.iter_mut().enumerate() {
            *slot = grid.wrap(y[d]);
        }
    };
    positions.par_chunks_mut(dim * 1024).for_each(|block| {
        if dim > 1 {
            block.chunks_exact_mut(dim).for_each(single);
            return;
        }
        let mut groups = block.chunks_exact_mut(LANES);
        for group in &mut groups {
            let mut x: [f64; LANES] = group.try_into().expect("exact chunk");
            rk4_line(&mut x, dt, v);
            for (slot, y) in group.iter_mut().zip(x) {
                *slot = grid.wrap(y);
            }
        }
        groups.into_remainder().chunks_exact_mut(1).for_each(single);
    });
    ParticleEnsemble::from_parts(grid, positions, ens.seed())
}

/// Advects through a gridded velocity field defined on the ensemble's grid.
pub fn advect(ens: &ParticleEnsemble, v: &VectorField, dt: f64) -> Result<ParticleEnsemble, EnsembleError> {
    crate::field::ensure_same_grid(ens.grid(), v.grid())?;
    Ok(advect_with(ens, &GridVelocity::new(v), dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    use crate::grid::Grid;

    #[test]
    fn exponential_flow_matches_fourth_order_taylor() {
        let v = FnVelocity(|x: [f64; 2]| [x[0], 0.0]);
        let (x0, dt) = (0.3_f64, 0.1_f64);
        let y = rk4_step([x0, 0.0], dt, &v)[0];
        let taylor = x0 * (1.0 + dt + dt * dt / 2.0 + dt.powi(3) / 6.0 + dt.powi(4) / 24.0);
        assert!((y - taylor).abs() < 1e-15);
        assert!((y - x0 * dt.exp()).abs() < 1e-7);
    }

    #[test]
    fn uniform_field_translates_exactly() {
        let g = Grid::one_d(32, 4.0).unwrap();
        let v = VectorField::constant(g, &[0.75]);
        let e = ParticleEnsemble::from_positions(g, vec![0.1, 1.3, 3.9], 0).unwrap();
        let moved = advect(&e, &v, 0.2).unwrap();
        let expect = [0.25, 1.45, 0.05];
        for (a, b) in moved.positions().iter().zip(expect) {
            assert!((a - b).abs() < 1e-14, "{a} {b}");
        }
    }

    #[test]
    fn interpolation_is_accurate_and_exact_at_nodes() {
        let g = Grid::one_d(128, 2.0 * PI).unwrap();
        let v = VectorField::new(g, vec![(0..128).map(|i| g.coordinate(i).sin()).collect()]).unwrap();
        let src = GridVelocity::new(&v);
        assert_eq!(src.velocity([g.coordinate(7), 0.0])[0], v.component(0)[7]);
        for k in 0..200 {
            let x = k as f64 * 0.0371;
            assert!((src.velocity([x, 0.0])[0] - x.sin()).abs() < 2e-5);
        }
        // wraps below zero and past L
        assert!((src.velocity([-0.5, 0.0])[0] - (-0.5_f64).sin()).abs() < 2e-5);
    }

    #[test]
    fn plane_interpolation_matches_separable_field() {
        let g = Grid::new(2, 64, 2.0 * PI).unwrap();
        let vx = (0..g.node_count()).map(|i| {
            let [x, y] = g.node_position(i);
            x.cos() * y.sin()
        });
        let v = VectorField::new(g, vec![vx.collect(), vec![1.0; g.node_count()]]).unwrap();
        let src = GridVelocity::new(&v);
        for k in 0..50 {
            let p = [0.13 * k as f64, 0.29 * k as f64];
            let u = src.velocity(p);
            assert!((u[0] - p[0].cos() * p[1].sin()).abs() < 2e-4);
            assert_eq!(u[1], 1.0);
        }
    }
}
