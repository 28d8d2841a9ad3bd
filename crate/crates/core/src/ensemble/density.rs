//! Deposition of the ensemble onto the grid.

use rayon::prelude::*;

use super::{EnsembleError, ParticleEnsemble};
use crate::field::ScalarField;
use crate::grid::Grid;
use crate::spectral;

/// Smoothing length of the kernel estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bandwidth {
    /// Rule-of-thumb width from the sample spread, recomputed on every call.
    Silverman,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityEstimator {
    /// Count per centred cell divided by `N dx^dim`.
    Histogram,
    /// Histogram convolved with a periodic Gaussian kernel.
    GaussianKde(Bandwidth),
}

impl DensityEstimator {
    /// Kernel width that `estimate_density` would use for this ensemble.
    pub fn bandwidth_for(&self, ens: &ParticleEnsemble) -> Option<f64> {
        match self {
            Self::Histogram => None,
            Self::GaussianKde(Bandwidth::Fixed(h)) => Some(*h),
            Self::GaussianKde(Bandwidth::Silverman) => Some(silverman_bandwidth(ens)),
        }
    }
}

/// Particles per grid cell, each particle assigned to its nearest node.
/// Integer counts make the result independent of particle order.
pub fn histogram_counts(ens: &ParticleEnsemble) -> Vec<u64> {
    let grid = *ens.grid();
    let dim = grid.dim();
    let side = grid.points_per_dim();
    let cells = grid.node_count();
    ens.positions()
        .par_chunks(dim)
        .with_min_len(4096)
        .fold(
            || vec![0u64; cells],
            |mut acc, p| {
                let idx = p.iter().fold(0, |k, &x| k * side + grid.nearest_index(x));
                acc[idx] += 1;
                acc
            },
        )
        .reduce(
            || vec![0u64; cells],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// Unbiased sample variance of coordinates lying in `[0, length)`.
/// Sums run in fixed point with integer accumulators, so the result does
/// not depend on particle order.
fn sample_variance<I: Iterator<Item = f64> + Clone>(coords: I, n: f64, length: f64) -> f64 {
    if n < 2.0 {
        return 0.0;
    }
    // |x| * scale < 2^46, leaving headroom for squares and long sums
    let scale = 2f64.powi(46 - length.log2().ceil() as i32);
    // casts go through i64, which is native, and widen afterwards
    let s1: i128 = coords.clone().map(|x| i128::from((x * scale) as i64)).sum();
    let mean = s1 as f64 / scale / n;
    let s2: u128 = coords
        .map(|x| {
            let d = i128::from(((x - mean) * scale) as i64);
            (d * d) as u128
        })
        .sum();
    s2 as f64 / (scale * scale) / (n - 1.0)
}

/// Sample-spread bandwidth `1.06 s N^(-1/5)` in 1D and `s N^(-1/6)` in 2D,
/// with `s` the root-mean-square per-axis standard deviation. Falls back to
/// the grid spacing when the spread vanishes (a single particle, say).
pub fn silverman_bandwidth(ens: &ParticleEnsemble) -> f64 {
    let dim = ens.dim();
    let n = ens.len() as f64;
    let length = ens.grid().length();
    let variance: f64 = (0..dim)
        .map(|axis| sample_variance(ens.positions().iter().skip(axis).step_by(dim).copied(), n, length))
        .sum();
    let spread = (variance / dim as f64).sqrt();
    let h = if dim == 1 {
        1.06 * spread * n.powf(-0.2)
    } else {
        spread * n.powf(-1.0 / 6.0)
    };
    if h.is_finite() && h > 0.0 {
        h
    } else {
        ens.grid().spacing()
    }
}

/// Grid density of the ensemble, non-negative and integrating to 1 up to
/// roundoff.
pub fn estimate_density(
    ens: &ParticleEnsemble,
    grid: &Grid,
    estimator: &DensityEstimator,
) -> Result<ScalarField, EnsembleError> {
    if ens.grid().dim() != grid.dim() || ens.grid().length() != grid.length() {
        return Err(EnsembleError::DomainMismatch);
    }
    let counts = if ens.grid() == grid {
        histogram_counts(ens)
    } else {
        let rebinned = ParticleEnsemble::from_parts(*grid, ens.positions().to_vec(), ens.seed());
        histogram_counts(&rebinned)
    };
    let weight = 1.0 / (ens.len() as f64 * grid.cell_volume());
    let hist = ScalarField::new(*grid, counts.into_iter().map(|c| c as f64 * weight).collect())?;
    Ok(match estimator.bandwidth_for(ens) {
        None => hist,
        Some(h) => spectral::gaussian_smooth(&hist, h).map(|v| v.max(0.0)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_is_normalized_counts() {
        let g = Grid::one_d(8, 8.0).unwrap();
        let e = ParticleEnsemble::from_positions(g, vec![0.1, 0.2, 3.0, 7.9], 0).unwrap();
        assert_eq!(histogram_counts(&e), vec![3, 0, 0, 1, 0, 0, 0, 0]);
        let d = estimate_density(&e, &g, &DensityEstimator::Histogram).unwrap();
        assert_eq!(d.values()[0], 0.75);
        assert_eq!(d.integral(), 1.0);
    }

    #[test]
    fn kde_of_one_particle_is_a_gaussian_bump() {
        let g = Grid::one_d(256, 20.0).unwrap();
        let x0 = g.coordinate(128);
        let e = ParticleEnsemble::from_positions(g, vec![x0], 0).unwrap();
        let h = 1.0;
        let d = estimate_density(&e, &g, &DensityEstimator::GaussianKde(Bandwidth::Fixed(h))).unwrap();
        assert!((d.integral() - 1.0).abs() < 1e-12);
        let norm = 1.0 / (h * (2.0 * std::f64::consts::PI).sqrt());
        for (j, v) in d.values().iter().enumerate() {
            let r = g.coordinate(j) - x0;
            assert!((v - norm * (-0.5 * r * r / (h * h)).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn silverman_falls_back_to_spacing() {
        let g = Grid::one_d(64, 8.0).unwrap();
        let e = ParticleEnsemble::from_positions(g, vec![2.0], 0).unwrap();
        assert_eq!(silverman_bandwidth(&e), g.spacing());
        let two = ParticleEnsemble::from_positions(g, vec![2.0, 4.0], 0).unwrap();
        let expect = 1.06 * 2.0_f64.sqrt() * 2.0_f64.powf(-0.2);
        assert!((silverman_bandwidth(&two) - expect).abs() < 1e-14);
    }

    #[test]
    fn rejects_other_domains() {
        let g = Grid::one_d(8, 8.0).unwrap();
        let e = ParticleEnsemble::from_positions(g, vec![1.0], 0).unwrap();
        let other = Grid::one_d(8, 4.0).unwrap();
        assert_eq!(
            estimate_density(&e, &other, &DensityEstimator::Histogram),
            Err(EnsembleError::DomainMismatch)
        );
        let finer = Grid::one_d(16, 8.0).unwrap();
        assert!(estimate_density(&e, &finer, &DensityEstimator::Histogram).is_ok());
    }
}
