//! Field containers on a [`Grid`] and the physical constants they are
//! interpreted with.

use std::fmt::Write as _;

use num_complex::Complex64;
use thiserror::Error;

use crate::grid::Grid;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("expected {expected} values for the grid, got {got}")]
    Length { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("{0} must be finite and > 0")]
    NonPositive(&'static str),
}

/// `hbar` and particle `mass`; both default to 1 (nondimensional units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    hbar: f64,
    mass: f64,
}

impl PhysicalParams {
    pub fn new(hbar: f64, mass: f64) -> Result<Self, FieldError> {
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(FieldError::NonPositive("hbar"));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(FieldError::NonPositive("mass"));
        }
        Ok(Self { hbar, mass })
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// `hbar / m`, the prefactor of the guidance law.
    pub fn hbar_over_mass(&self) -> f64 {
        self.hbar / self.mass
    }
}

impl Default for PhysicalParams {
    fn default() -> Self {
        Self {
            hbar: 1.0,
            mass: 1.0,
        }
    }
}

pub(crate) fn ensure_same_grid(a: &Grid, b: &Grid) -> Result<(), FieldError> {
    if a == b {
        Ok(())
    } else {
        Err(FieldError::GridMismatch)
    }
}

/// Wavefunction samples, one complex value per node.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: Grid,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: Grid, values: Vec<Complex64>) -> Result<Self, FieldError> {
        if values.len() != grid.node_count() {
            return Err(FieldError::Length {
                expected: grid.node_count(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(0.0, 0.0); grid.node_count()],
        }
    }

    /// Samples `f` at every node position.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> Complex64) -> Self {
        let values = (0..grid.node_count())
            .map(|idx| f(grid.node_position(idx)))
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// `|psi|^2` per node.
    pub fn density(&self) -> ScalarField {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|z| z.norm_sqr()).collect(),
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Plain-text dump: one node per line, `x [y] re im abs2`, 17 significant
    /// digits, row-major node order.
    pub fn snapshot(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 100);
        match self.grid.dim() {
            1 => out.push_str("# x re_psi im_psi abs2_psi\n"),
            _ => out.push_str("# x y re_psi im_psi abs2_psi\n"),
        }
        for (idx, z) in self.values.iter().enumerate() {
            let pos = self.grid.node_position(idx);
            for p in pos.iter().take(self.grid.dim()) {
                let _ = write!(out, "{p:.16e} ");
            }
            let _ = writeln!(out, "{:.16e} {:.16e} {:.16e}", z.re, z.im, z.norm_sqr());
        }
        out
    }
}

/// `sum_i |psi_i|^2 * dx^dim`.
pub fn norm_squared(psi: &ComplexField) -> f64 {
    psi.values.iter().map(|z| z.norm_sqr()).sum::<f64>() * psi.grid.cell_volume()
}

/// One real value per node: densities, ratios, potentials, source terms.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != grid.node_count() {
            return Err(FieldError::Length {
                expected: grid.node_count(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.node_count()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.node_count())
            .map(|idx| f(grid.node_position(idx)))
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Quadrature `sum_i f_i * dx^dim`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// `dim` real components per node, stored component-major.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    components: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(grid: Grid, components: Vec<Vec<f64>>) -> Result<Self, FieldError> {
        if components.len() != grid.dim() {
            return Err(FieldError::Length {
                expected: grid.dim(),
                got: components.len(),
            });
        }
        for c in &components {
            if c.len() != grid.node_count() {
                return Err(FieldError::Length {
                    expected: grid.node_count(),
                    got: c.len(),
                });
            }
        }
        Ok(Self { grid, components })
    }

    pub fn constant(grid: Grid, value: &[f64]) -> Self {
        let components = (0..grid.dim())
            .map(|d| vec![value[d]; grid.node_count()])
            .collect();
        Self { grid, components }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn component(&self, axis: usize) -> &[f64] {
        &self.components[axis]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn negated(&self) -> Self {
        Self {
            grid: self.grid,
            components: self
                .components
                .iter()
                .map(|c| c.iter().map(|v| -v).collect())
                .collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().flatten().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn norm_of_zero_field_is_zero() {
        let g = Grid::one_d(64, 3.0).unwrap();
        assert_eq!(norm_squared(&ComplexField::zeros(g)), 0.0);
    }

    #[test]
    fn normalized_constant_has_unit_norm() {
        let l = 40.0;
        let g = Grid::one_d(1024, l).unwrap();
        let psi = ComplexField::from_fn(g, |_| Complex64::new(1.0 / l.sqrt(), 0.0));
        assert!((norm_squared(&psi) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_is_normalized() {
        let (l, sigma) = (40.0, 0.5);
        let g = Grid::one_d(1024, l).unwrap();
        let amp = (2.0 * PI * sigma * sigma).powf(-0.25);
        let psi = ComplexField::from_fn(g, |[x, _]| {
            let d = x - l / 2.0;
            Complex64::new(amp * (-d * d / (4.0 * sigma * sigma)).exp(), 0.0)
        });
        assert!((norm_squared(&psi) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_wrong_length() {
        let g = Grid::one_d(8, 1.0).unwrap();
        assert!(ScalarField::new(g, vec![0.0; 7]).is_err());
        assert!(ComplexField::new(g, vec![Complex64::new(0.0, 0.0); 9]).is_err());
        assert!(VectorField::new(g, vec![vec![0.0; 8], vec![0.0; 8]]).is_err());
    }

    #[test]
    fn params_must_be_positive() {
        assert!(PhysicalParams::new(0.0, 1.0).is_err());
        assert!(PhysicalParams::new(1.0, -1.0).is_err());
        assert_eq!(PhysicalParams::default().hbar_over_mass(), 1.0);
    }

    #[test]
    fn snapshot_has_one_line_per_node() {
        let g = Grid::new(2, 4, 1.0).unwrap();
        let psi = ComplexField::from_fn(g, |[x, y]| Complex64::new(x, y));
        let text = psi.snapshot();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 17);
        assert_eq!(lines[0], "# x y re_psi im_psi abs2_psi");
        let cols: Vec<f64> = lines[2].split(' ').map(|s| s.parse().unwrap()).collect();
        // row-major: second node is (x0, y1)
        assert_eq!(cols, vec![0.0, 0.25, 0.0, 0.25, 0.0625]);
    }
}
