use rand::Rng;
use rayon::prelude::*;

use super::rng::particle_stream;
use super::{EnsembleError, ParticleEnsemble};
use crate::field::ScalarField;

/// Draws `n` i.i.d. positions from a gridded density.
///
/// The density is read as a histogram: node `j` owns the centred cell
/// `[x_j - dx/2, x_j + dx/2)` with constant density. In 1D the cumulative
/// distribution is therefore piecewise linear and is inverted exactly; in
/// 2D positions come from rejection sampling against the same histogram.
/// The density is normalized internally.
pub fn sample(density: &ScalarField, n: usize, seed: u64) -> Result<ParticleEnsemble, EnsembleError> {
    if n == 0 {
        return Err(EnsembleError::Empty);
    }
    if let Some(bad) = density.values().iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(EnsembleError::BadDensity(bad));
    }
    let total: f64 = density.values().iter().sum();
    if total <= 0.0 {
        return Err(EnsembleError::ZeroDensity);
    }
    let grid = *density.grid();
    let positions = match grid.dim() {
        1 => sample_line(density, n, seed),
        _ => sample_plane(density, n, seed),
    };
    Ok(ParticleEnsemble::from_parts(grid, positions, seed))
}

fn sample_line(density: &ScalarField, n: usize, seed: u64) -> Vec<f64> {
    let grid = *density.grid();
    let dx = grid.spacing();
    // cumulative mass at the left edge of each cell, plus the total
    let mut cdf = Vec::with_capacity(density.values().len() + 1);
    let mut acc = 0.0;
    cdf.push(0.0);
    for &v in density.values() {
        acc += v;
        cdf.push(acc);
    }
    (0..n)
        .into_par_iter()
        .with_min_len(1024)
        .map(|i| {
            let u: f64 = particle_stream(seed, i as u64).gen();
            let target = u * acc;
            // first cell whose right edge exceeds target, skipping empty cells
            let j = cdf.partition_point(|&c| c <= target).clamp(1, cdf.len() - 1) - 1;
            let width = cdf[j + 1] - cdf[j];
            let frac = if width > 0.0 { ((target - cdf[j]) / width).clamp(0.0, 1.0) } else { 0.5 };
            let x = (j as f64 - 0.5 + frac) * dx;
            let w = grid.wrap(x);
            // keep the draw inside its own cell after wrapping
            if grid.nearest_index(w) != j {
                j as f64 * dx
            } else {
                w
            }
        })
        .collect()
}

fn sample_plane(density: &ScalarField, n: usize, seed: u64) -> Vec<f64> {
    let grid = *density.grid();
    let l = grid.length();
    let side = grid.points_per_dim();
    let max = density.max();
    let values = density.values();
    (0..n)
        .into_par_iter()
        .with_min_len(256)
        .flat_map_iter(|i| {
            let mut rng = particle_stream(seed, i as u64);
            loop {
                let x = grid.wrap(rng.gen::<f64>() * l);
                let y = grid.wrap(rng.gen::<f64>() * l);
                let cell = grid.nearest_index(x) * side + grid.nearest_index(y);
                if rng.gen::<f64>() * max < values[cell] {
                    return [x, y];
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn spike_puts_every_particle_in_its_cell() {
        let g = Grid::one_d(64, 8.0).unwrap();
        let mut d = ScalarField::constant(g, 0.0);
        d.values_mut()[17] = 1.0 / g.spacing();
        let e = sample(&d, 5000, 3).unwrap();
        assert!(e.positions().iter().all(|&x| g.nearest_index(x) == 17));
        d.values_mut()[17] = 0.0;
        d.values_mut()[0] = 1.0 / g.spacing();
        let e = sample(&d, 5000, 3).unwrap();
        assert!(e.positions().iter().all(|&x| g.nearest_index(x) == 0));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let g = Grid::one_d(64, 8.0).unwrap();
        let d = ScalarField::from_fn(g, |[x, _]| (-(x - 4.0).powi(2)).exp());
        assert_eq!(sample(&d, 1000, 9).unwrap(), sample(&d, 1000, 9).unwrap());
        assert_ne!(sample(&d, 1000, 9).unwrap(), sample(&d, 1000, 10).unwrap());
    }

    #[test]
    fn rejects_degenerate_densities() {
        let g = Grid::one_d(8, 1.0).unwrap();
        assert_eq!(sample(&ScalarField::constant(g, 0.0), 10, 0), Err(EnsembleError::ZeroDensity));
        let mut d = ScalarField::constant(g, 1.0);
        d.values_mut()[2] = f64::NAN;
        assert_eq!(sample(&d, 10, 0), Err(EnsembleError::BadDensity(2)));
        assert_eq!(sample(&ScalarField::constant(g, 1.0), 0, 0), Err(EnsembleError::Empty));
    }

    #[test]
    fn plane_sampling_respects_support() {
        let g = Grid::new(2, 16, 4.0).unwrap();
        let mut d = ScalarField::constant(g, 0.0);
        d.values_mut()[5 * 16 + 9] = 1.0;
        let e = sample(&d, 200, 1).unwrap();
        for p in e.positions().chunks(2) {
            assert_eq!((g.nearest_index(p[0]), g.nearest_index(p[1])), (5, 9));
        }
    }
}
