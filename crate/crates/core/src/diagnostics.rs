//! Scalar and nodewise monitors: the symmetric H-function, the
//! density-weighted H-function with its coarse-grained counterpart, the
//! pointwise `dH/dt` integrand and simple distances.
//!
//! Every logarithmic functional skips nodes where either density falls
//! below its own relative floor; the mass on those nodes is reported
//! separately by [`excluded_mass`]. Ratios inside logarithms are clamped
//! to `[RATIO_MIN, RATIO_MAX]`.

use thiserror::Error;

use crate::ensemble::ParticleEnsemble;
use crate::evolve::NonlinearCoupling;
use crate::field::{ensure_same_grid, ComplexField, FieldError, ScalarField};
use crate::grid::Grid;
use crate::kinematics::DensityFloor;
use crate::spectral::line;

pub const RATIO_MIN: f64 = 1e-12;
pub const RATIO_MAX: f64 = 1e12;

/// Column order of the diagnostics time series.
pub const CSV_HEADER: &str =
    "t,norm_psi,h_sym,h_val,h_val_coarse,l1_dist,fq_min,fq_max,cont_residual_sup,dh_integrand_max,excluded_mass";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("cg_cell_factor {factor} does not divide {n} points per dimension")]
    CellFactor { factor: usize, n: usize },
    #[error("this monitor is only defined in one dimension")]
    Dimension,
    #[error("ensemble and wavefunction live on different domains")]
    DomainMismatch,
    #[error(transparent)]
    Field(#[from] FieldError),
}

fn clamped_ln(ratio: f64) -> f64 {
    ratio.clamp(RATIO_MIN, RATIO_MAX).ln()
}

/// Nodes on which both `rho` and `|psi|^2` clear their floors.
pub fn passing_nodes(rho: &[f64], wave: &[f64], floor: &DensityFloor) -> Vec<bool> {
    floor
        .mask(rho)
        .into_iter()
        .zip(floor.mask(wave))
        .map(|(a, b)| a && b)
        .collect()
}

fn checked_pair(rho: &ScalarField, psi: &ComplexField) -> Result<(Grid, Vec<f64>), DiagnosticsError> {
    ensure_same_grid(rho.grid(), psi.grid())?;
    Ok((*rho.grid(), psi.density().into_values()))
}

fn weighted_sum(grid: &Grid, rho: &[f64], wave: &[f64], term: impl Fn(f64, f64) -> f64) -> f64 {
    let pass = passing_nodes(rho, wave, &DensityFloor::default());
    let sum: f64 = rho
        .iter()
        .zip(wave)
        .zip(&pass)
        .filter(|(_, ok)| **ok)
        .map(|((&r, &p), _)| term(r, p))
        .sum();
    sum * grid.cell_volume()
}

/// `int (rho - |psi|^2) ln(rho / |psi|^2)`, never negative.
pub fn h_sym(rho: &ScalarField, psi: &ComplexField) -> Result<f64, DiagnosticsError> {
    let (grid, wave) = checked_pair(rho, psi)?;
    Ok(weighted_sum(&grid, rho.values(), &wave, |r, p| (r - p) * clamped_ln(r / p)))
}

fn valentini(grid: &Grid, rho: &[f64], wave: &[f64]) -> f64 {
    weighted_sum(grid, rho, wave, |r, p| r * clamped_ln(r / p))
}

/// Fine-grained `int rho ln(rho / |psi|^2)` and the same functional on the
/// cell-averaged densities.
pub fn h_valentini(
    rho: &ScalarField,
    psi: &ComplexField,
    cg: &CoarseGraining,
) -> Result<(f64, f64), DiagnosticsError> {
    let (grid, wave) = checked_pair(rho, psi)?;
    cg.check(&grid)?;
    let fine = valentini(&grid, rho.values(), &wave);
    let rho_bar = cg.average(&grid, rho.values());
    let wave_bar = cg.average(&grid, &wave);
    let coarse = valentini(&grid, &rho_bar, &wave_bar);
    Ok((fine, coarse))
}

/// Ehrenfest cell averaging over blocks of `cell_factor^dim` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoarseGraining {
    cell_factor: usize,
}

impl CoarseGraining {
    pub fn new(cell_factor: usize, grid: &Grid) -> Result<Self, DiagnosticsError> {
        let cg = Self { cell_factor };
        cg.check(grid)?;
        Ok(cg)
    }

    pub fn cell_factor(&self) -> usize {
        self.cell_factor
    }

    fn check(&self, grid: &Grid) -> Result<(), DiagnosticsError> {
        let n = grid.points_per_dim();
        if self.cell_factor == 0 || n % self.cell_factor != 0 {
            return Err(DiagnosticsError::CellFactor {
                factor: self.cell_factor,
                n,
            });
        }
        Ok(())
    }

    fn cell_of(&self, grid: &Grid, idx: usize) -> usize {
        let cells = grid.points_per_dim() / self.cell_factor;
        let [i, j] = grid.unflatten(idx);
        match grid.dim() {
            1 => i / self.cell_factor,
            _ => (i / self.cell_factor) * cells + j / self.cell_factor,
        }
    }

    fn average(&self, grid: &Grid, values: &[f64]) -> Vec<f64> {
        let cells = (grid.points_per_dim() / self.cell_factor).pow(grid.dim() as u32);
        let per_cell = self.cell_factor.pow(grid.dim() as u32) as f64;
        let mut sums = vec![0.0; cells];
        for (idx, v) in values.iter().enumerate() {
            sums[self.cell_of(grid, idx)] += v;
        }
        (0..values.len())
            .map(|idx| sums[self.cell_of(grid, idx)] / per_cell)
            .collect()
    }
}

/// Replaces every node by the mean of its coarse cell.
pub fn coarse_grain(f: &ScalarField, cg: &CoarseGraining) -> Result<ScalarField, DiagnosticsError> {
    cg.check(f.grid())?;
    Ok(ScalarField::new(*f.grid(), cg.average(f.grid(), f.values()))?)
}

/// Nodewise `2 alpha (1 - f)(f - 1 + ln f) |psi|^2`, which is never
/// positive. Nodes where `|psi|^2` is below the floor carry 0.
pub fn dh_integrand(
    f_q: &ScalarField,
    psi: &ComplexField,
    coupling: &NonlinearCoupling,
) -> Result<ScalarField, DiagnosticsError> {
    ensure_same_grid(f_q.grid(), psi.grid())?;
    let wave = psi.density();
    let pass = DensityFloor::default().mask(wave.values());
    let two_alpha = 2.0 * coupling.alpha();
    let values = f_q
        .values()
        .iter()
        .zip(wave.values())
        .zip(&pass)
        .map(|((&f, &p), &ok)| {
            if ok {
                two_alpha * (1.0 - f) * (f - 1.0 + clamped_ln(f)) * p
            } else {
                0.0
            }
        })
        .collect();
    Ok(ScalarField::new(*f_q.grid(), values)?)
}

/// `int |rho - |psi|^2|`.
pub fn l1_distance(rho: &ScalarField, psi: &ComplexField) -> Result<f64, DiagnosticsError> {
    let (grid, wave) = checked_pair(rho, psi)?;
    let sum: f64 = rho.values().iter().zip(&wave).map(|(r, p)| (r - p).abs()).sum();
    Ok(sum * grid.cell_volume())
}

/// `int (rho + |psi|^2)` over the nodes the logarithmic functionals skip.
pub fn excluded_mass(rho: &ScalarField, psi: &ComplexField) -> Result<f64, DiagnosticsError> {
    let (grid, wave) = checked_pair(rho, psi)?;
    let pass = passing_nodes(rho.values(), &wave, &DensityFloor::default());
    let sum: f64 = rho
        .values()
        .iter()
        .zip(&wave)
        .zip(&pass)
        .filter(|(_, ok)| !**ok)
        .map(|((r, p), _)| r.max(0.0) + p)
        .sum();
    Ok(sum * grid.cell_volume())
}

/// Refinement used to tabulate the wave CDF for [`ks_distance`].
const KS_REFINEMENT: usize = 8;

/// Kolmogorov-Smirnov distance between the particle positions and the
/// normalized `|psi|^2` on the line, with both CDFs measured from `x = 0`.
pub fn ks_distance(ens: &ParticleEnsemble, psi: &ComplexField) -> Result<f64, DiagnosticsError> {
    let grid = *psi.grid();
    if grid.dim() != 1 || ens.dim() != 1 {
        return Err(DiagnosticsError::Dimension);
    }
    if ens.grid().length() != grid.length() {
        return Err(DiagnosticsError::DomainMismatch);
    }
    let fine: Vec<f64> = line::refine(psi.values(), KS_REFINEMENT)
        .iter()
        .map(|z| z.norm_sqr())
        .collect();
    let m = fine.len();
    let h = grid.length() / m as f64;
    let mut cdf = line::antiderivative(&fine, grid.length(), 0.0);
    let total = fine.iter().sum::<f64>() * h;
    cdf.push(total);
    cdf.iter_mut().for_each(|c| *c /= total);
    let mut xs = ens.positions().to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let sup = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let s = (x / h).clamp(0.0, m as f64);
            let j = (s.floor() as usize).min(m - 1);
            let f = cdf[j] + (s - j as f64) * (cdf[j + 1] - cdf[j]);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max);
    Ok(sup)
}

/// One record of the time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub norm_psi: f64,
    pub h_sym: f64,
    pub h_val: f64,
    pub h_val_coarse: f64,
    pub l1_dist: f64,
    pub fq_min: f64,
    pub fq_max: f64,
    pub cont_residual_sup: f64,
    pub dh_integrand_max: f64,
    pub excluded_mass: f64,
}

impl DiagnosticsRow {
    pub fn values(&self) -> [f64; 11] {
        [
            self.t,
            self.norm_psi,
            self.h_sym,
            self.h_val,
            self.h_val_coarse,
            self.l1_dist,
            self.fq_min,
            self.fq_max,
            self.cont_residual_sup,
            self.dh_integrand_max,
            self.excluded_mass,
        ]
    }

    /// CSV line without the trailing newline.
    pub fn to_csv(&self) -> String {
        let cells: Vec<String> = self.values().iter().map(|v| format!("{v:.16e}")).collect();
        cells.join(",")
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn wave_from(grid: Grid, density: &[f64]) -> ComplexField {
        ComplexField::new(grid, density.iter().map(|p| Complex64::new(p.sqrt(), 0.0)).collect()).unwrap()
    }

    #[test]
    fn two_node_h_sym() {
        let g = Grid::one_d(2, 2.0).unwrap();
        let rho = ScalarField::new(g, vec![0.6, 0.4]).unwrap();
        let psi = wave_from(g, &[0.4, 0.6]);
        let direct = 0.2 * (0.6_f64 / 0.4).ln() + (-0.2) * (0.4_f64 / 0.6).ln();
        let h = h_sym(&rho, &psi).unwrap();
        assert!((h - direct).abs() < 1e-15);
        assert!((h - 0.4 * 1.5_f64.ln()).abs() < 1e-12);
        assert!((h - 0.16219).abs() < 1e-5);
    }

    #[test]
    fn equilibrium_functionals_vanish() {
        let g = Grid::one_d(64, 4.0).unwrap();
        let psi = ComplexField::from_fn(g, |[x, _]| Complex64::from_polar(1.0 + 0.5 * x.sin(), x));
        let rho = psi.density();
        let cg = CoarseGraining::new(8, &g).unwrap();
        assert_eq!(h_sym(&rho, &psi).unwrap(), 0.0);
        let (fine, coarse) = h_valentini(&rho, &psi, &cg).unwrap();
        assert_eq!(fine, 0.0);
        assert!(coarse.abs() < 1e-15);
        assert_eq!(l1_distance(&rho, &psi).unwrap(), 0.0);
    }

    #[test]
    fn constant_fields() {
        let g = Grid::one_d(16, 1.0).unwrap();
        let (a, b) = (0.7, 1.3);
        let rho = ScalarField::constant(g, a);
        let psi = wave_from(g, &[b; 16]);
        let (fine, coarse) = h_valentini(&rho, &psi, &CoarseGraining::new(4, &g).unwrap()).unwrap();
        assert!((fine - a * (a / b).ln()).abs() < 1e-14);
        assert!((coarse - fine).abs() < 1e-14);
        let l = 3.0;
        let g = Grid::one_d(16, l).unwrap();
        let rho = ScalarField::constant(g, 2.0 / l);
        let psi = wave_from(g, &[1.0 / l; 16]);
        assert!((l1_distance(&rho, &psi).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn coarse_grain_examples() {
        let g = Grid::one_d(16, 1.0).unwrap();
        let cg = CoarseGraining::new(2, &g).unwrap();
        let alt = ScalarField::from_fn(g, |[x, _]| if (x * 16.0).round() as i64 % 2 == 0 { 1.0 } else { -1.0 });
        assert!(coarse_grain(&alt, &cg).unwrap().values().iter().all(|v| *v == 0.0));
        let c = ScalarField::constant(g, 0.3);
        assert_eq!(coarse_grain(&c, &cg).unwrap(), c);
        assert_eq!(
            CoarseGraining::new(3, &g),
            Err(DiagnosticsError::CellFactor { factor: 3, n: 16 })
        );
        assert!(CoarseGraining::new(0, &g).is_err());
    }

    #[test]
    fn plane_coarse_cells_are_square_blocks() {
        let g = Grid::new(2, 4, 1.0).unwrap();
        let f = ScalarField::new(g, (0..16).map(|i| i as f64).collect()).unwrap();
        let cg = CoarseGraining::new(2, &g).unwrap();
        let out = coarse_grain(&f, &cg).unwrap();
        // block {0,1,4,5}
        assert_eq!(out.values()[0], 2.5);
        assert_eq!(out.values()[5], 2.5);
        assert_eq!(out.values()[15], 12.5);
    }

    #[test]
    fn dh_integrand_examples() {
        let g = Grid::one_d(4, 4.0).unwrap();
        let psi = wave_from(g, &[1.0; 4]);
        let c = NonlinearCoupling::new(0.5).unwrap();
        let f = ScalarField::new(g, vec![1.0, 2.0, 0.5, 0.0]).unwrap();
        let d = dh_integrand(&f, &psi, &c).unwrap();
        assert_eq!(d.values()[0], 0.0);
        assert!((d.values()[1] + 1.0 + 2.0_f64.ln()).abs() < 1e-14);
        assert!((d.values()[2] - 0.5 * (-0.5 + 0.5_f64.ln())).abs() < 1e-14);
        assert!((d.values()[1] + 1.6931).abs() < 1e-4);
        assert!((d.values()[2] + 0.5966).abs() < 1e-4);
        assert!(d.values()[3] < 0.0 && d.values()[3].is_finite());
    }

    #[test]
    fn one_sided_vacancy_is_excluded_and_reported() {
        let g = Grid::one_d(4, 4.0).unwrap();
        let rho = ScalarField::new(g, vec![0.5, 0.5, 0.0, 0.0]).unwrap();
        let psi = wave_from(g, &[0.5, 0.0, 0.5, 0.0]);
        assert!(h_sym(&rho, &psi).unwrap().abs() < 1e-15);
        assert!((excluded_mass(&rho, &psi).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ks_of_quantiles_is_half_a_step() {
        let l = 2.0;
        let g = Grid::one_d(64, l).unwrap();
        let psi = wave_from(g, &[1.0 / l; 64]);
        let n = 1000;
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64 * l).collect();
        let e = ParticleEnsemble::from_positions(g, xs, 0).unwrap();
        let d = ks_distance(&e, &psi).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-12, "{d}");
        let bunched = ParticleEnsemble::from_positions(g, vec![0.5; 10], 0).unwrap();
        assert!((ks_distance(&bunched, &psi).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn csv_row_layout() {
        let row = DiagnosticsRow {
            t: 0.5,
            norm_psi: 1.0,
            h_sym: 0.0,
            h_val: 0.0,
            h_val_coarse: 0.0,
            l1_dist: 0.0,
            fq_min: 1.0,
            fq_max: 1.0,
            cont_residual_sup: 0.0,
            dh_integrand_max: 0.0,
            excluded_mass: 0.0,
        };
        let line = row.to_csv();
        assert_eq!(line.split(',').count(), CSV_HEADER.split(',').count());
        assert!(line.starts_with("5.0000000000000000e-1,1.0000000000000000e0,"));
    }
}
