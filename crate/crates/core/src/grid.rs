//! Uniform periodic grids.
//!
//! A grid has the same number of points and the same length along every
//! axis. Nodes sit at `x_j = j * dx` for `j = 0..n`, so the domain is
//! `[0, L)` per axis. Multi-dimensional fields are stored row-major: the
//! flat index of node `(i, j)` is `i * n + j`, with `i` the x index.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("dimension must be 1 or 2, got {0}")]
    Dimension(usize),
    #[error("points per dimension must be a power of two >= 2, got {0}")]
    Points(usize),
    #[error("domain length must be finite and > 0, got {0}")]
    Length(f64),
}

/// Discretization of the periodic domain `[0, L)^dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, length: f64) -> Result<Self, GridError> {
        if !(1..=2).contains(&dim) {
            return Err(GridError::Dimension(dim));
        }
        if n < 2 || !n.is_power_of_two() {
            return Err(GridError::Points(n));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(GridError::Length(length));
        }
        Ok(Self { dim, n, length })
    }

    pub fn one_d(n: usize, length: f64) -> Result<Self, GridError> {
        Self::new(1, n, length)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_dim(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// `dx^dim`, the quadrature weight of one node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    pub fn node_count(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Coordinate of node `j` along any axis.
    pub fn coordinate(&self, j: usize) -> f64 {
        j as f64 * self.spacing()
    }

    /// Per-axis node indices of a flat index.
    pub fn unflatten(&self, idx: usize) -> [usize; 2] {
        match self.dim {
            1 => [idx, 0],
            _ => [idx / self.n, idx % self.n],
        }
    }

    /// Position of a node; unused trailing components are zero.
    pub fn node_position(&self, idx: usize) -> [f64; 2] {
        let [i, j] = self.unflatten(idx);
        match self.dim {
            1 => [self.coordinate(i), 0.0],
            _ => [self.coordinate(i), self.coordinate(j)],
        }
    }

    /// Index of the nearest node along one axis for a position in `[0, L)`.
    /// Each node owns the centred cell `[x_j - dx/2, x_j + dx/2)`.
    pub fn nearest_index(&self, x: f64) -> usize {
        let s = x / self.spacing();
        let n = self.n as i64;
        if (0.0..n as f64).contains(&s) {
            // same as round() here: the fractional part is exact
            let r = s as i64;
            let j = r + i64::from(s - r as f64 >= 0.5);
            return if j == n { 0 } else { j as usize };
        }
        (s.round() as i64).rem_euclid(n) as usize
    }

    /// Wrap a coordinate into `[0, L)`.
    pub fn wrap(&self, x: f64) -> f64 {
        if (0.0..self.length).contains(&x) {
            return x;
        }
        let r = x.rem_euclid(self.length);
        // rem_euclid of a tiny negative number can round up to L
        if r >= self.length {
            0.0
        } else {
            r
        }
    }

    /// Angular wavenumbers in FFT order. Index `n/2` is the Nyquist mode and
    /// carries `-pi * n / L`; every other mode `k` has its partner `-k`.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as i64;
        let base = 2.0 * PI / self.length;
        (0..n)
            .map(|j| {
                let m = if j < n / 2 { j } else { j - n };
                base * m as f64
            })
            .collect()
    }

    pub fn nyquist_index(&self) -> usize {
        self.n / 2
    }

    pub fn node_coordinates(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.coordinate(j)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(Grid::new(3, 64, 1.0), Err(GridError::Dimension(3)));
        assert_eq!(Grid::new(1, 1000, 1.0), Err(GridError::Points(1000)));
        assert_eq!(Grid::new(1, 64, 0.0), Err(GridError::Length(0.0)));
        assert!(Grid::new(1, 64, f64::NAN).is_err());
    }

    #[test]
    fn cell_volume_tiles_domain_exactly() {
        for &(dim, n, l) in &[(1, 1024, 40.0), (2, 256, 40.0), (1, 64, 2.0 * PI), (2, 32, 3.7)] {
            let g = Grid::new(dim, n, l).unwrap();
            assert_eq!(g.cell_volume() * g.node_count() as f64, g.volume());
        }
    }

    #[test]
    fn wavenumber_ladder_is_symmetric() {
        let g = Grid::one_d(16, 2.0 * PI).unwrap();
        let k = g.wavenumbers();
        assert_eq!(k[0], 0.0);
        assert_eq!(k[g.nyquist_index()], -8.0);
        for j in 1..16 {
            if j == g.nyquist_index() {
                continue;
            }
            assert_eq!(k[j], -k[16 - j]);
        }
    }

    #[test]
    fn wrap_stays_in_range() {
        let g = Grid::one_d(8, 1.0).unwrap();
        assert_eq!(g.wrap(0.25), 0.25);
        assert!((g.wrap(1.25) - 0.25).abs() < 1e-15);
        assert!((g.wrap(-0.25) - 0.75).abs() < 1e-15);
        let w = g.wrap(-1e-18);
        assert!((0.0..1.0).contains(&w));
    }

    #[test]
    fn nearest_index_uses_centred_cells() {
        let g = Grid::one_d(8, 8.0).unwrap();
        assert_eq!(g.nearest_index(0.49), 0);
        assert_eq!(g.nearest_index(0.51), 1);
        assert_eq!(g.nearest_index(7.6), 0);
    }
}
