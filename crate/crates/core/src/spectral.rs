//! FFT-based differential operators on periodic grids.
//!
//! All transforms go through a process-wide plan cache, so the operators
//! are plain functions of their input. The forward transform is
//! unnormalized and the inverse divides by the node count.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::field::{ComplexField, ScalarField, VectorField};
use crate::grid::Grid;

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> Plans {
    static CACHE: OnceLock<Mutex<(FftPlanner<f64>, HashMap<usize, Plans>)>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new((FftPlanner::new(), HashMap::new())));
    let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
    let (planner, map) = &mut *guard;
    if let Some(p) = map.get(&n) {
        return p.clone();
    }
    let p = (planner.plan_fft_forward(n), planner.plan_fft_inverse(n));
    map.insert(n, p.clone());
    p
}

fn transform_1d(data: &mut [Complex64], inverse: bool) {
    let (fwd, inv) = plans(data.len());
    if inverse {
        inv.process(data);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    } else {
        fwd.process(data);
    }
}

fn transform(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    let n = grid.points_per_dim();
    match grid.dim() {
        1 => transform_1d(data, inverse),
        _ => {
            let (fwd, inv) = plans(n);
            let plan = if inverse { inv } else { fwd };
            // rows (contiguous y) in one batch
            plan.process(data);
            let mut column = vec![Complex64::new(0.0, 0.0); n];
            for j in 0..n {
                for i in 0..n {
                    column[i] = data[i * n + j];
                }
                plan.process(&mut column);
                for i in 0..n {
                    data[i * n + j] = column[i];
                }
            }
            if inverse {
                let scale = 1.0 / (n * n) as f64;
                data.iter_mut().for_each(|z| *z *= scale);
            }
        }
    }
}

/// In-place forward transform of a field laid out on `grid`.
pub fn forward(grid: &Grid, data: &mut [Complex64]) {
    transform(grid, data, false);
}

/// In-place normalized inverse transform.
pub fn inverse(grid: &Grid, data: &mut [Complex64]) {
    transform(grid, data, true);
}

/// Multiplies the spectrum of `data` by `symbol(kx, ky)` and transforms back.
/// For `dim == 1`, `ky` is always zero.
pub fn apply_symbol(
    grid: &Grid,
    data: &mut [Complex64],
    symbol: impl Fn(usize, usize, f64, f64) -> Complex64,
) {
    forward(grid, data);
    let k = grid.wavenumbers();
    let n = grid.points_per_dim();
    match grid.dim() {
        1 => {
            for (j, z) in data.iter_mut().enumerate() {
                *z *= symbol(j, 0, k[j], 0.0);
            }
        }
        _ => {
            for i in 0..n {
                for j in 0..n {
                    data[i * n + j] *= symbol(i, j, k[i], k[j]);
                }
            }
        }
    }
    inverse(grid, data);
}

/// First-derivative symbol `i k` along `axis`; the Nyquist mode is dropped
/// so real fields stay real.
fn derivative_symbol(grid: &Grid, axis: usize) -> impl Fn(usize, usize, f64, f64) -> Complex64 + Copy {
    let nyq = grid.nyquist_index();
    move |i, j, kx, ky| {
        let (idx, k) = if axis == 0 { (i, kx) } else { (j, ky) };
        if idx == nyq {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, k)
        }
    }
}

fn laplacian_symbol(_: usize, _: usize, kx: f64, ky: f64) -> Complex64 {
    Complex64::new(-(kx * kx + ky * ky), 0.0)
}

/// Applies a real-valued operator to the real and imaginary parts
/// separately, so that the image of a real field is exactly real.
fn apply_split(
    grid: &Grid,
    values: &[Complex64],
    symbol: impl Fn(usize, usize, f64, f64) -> Complex64 + Copy,
) -> Vec<Complex64> {
    let mut re: Vec<Complex64> = values.iter().map(|z| Complex64::new(z.re, 0.0)).collect();
    let mut im: Vec<Complex64> = values.iter().map(|z| Complex64::new(z.im, 0.0)).collect();
    apply_symbol(grid, &mut re, symbol);
    apply_symbol(grid, &mut im, symbol);
    re.iter().zip(&im).map(|(a, b)| Complex64::new(a.re, b.re)).collect()
}

/// Per-axis partial derivatives of a complex field.
pub fn gradient_complex(psi: &ComplexField) -> Vec<Vec<Complex64>> {
    let grid = *psi.grid();
    (0..grid.dim())
        .map(|axis| apply_split(&grid, psi.values(), derivative_symbol(&grid, axis)))
        .collect()
}

pub fn laplacian_complex(psi: &ComplexField) -> Vec<Complex64> {
    let grid = *psi.grid();
    apply_split(&grid, psi.values(), laplacian_symbol)
}

fn to_complex(f: &[f64]) -> Vec<Complex64> {
    f.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

pub fn spectral_gradient(f: &ScalarField) -> VectorField {
    let grid = *f.grid();
    let components = (0..grid.dim())
        .map(|axis| {
            let mut data = to_complex(f.values());
            apply_symbol(&grid, &mut data, derivative_symbol(&grid, axis));
            data.into_iter().map(|z| z.re).collect()
        })
        .collect();
    VectorField::new(grid, components).expect("component shapes follow the grid")
}

pub fn spectral_laplacian(f: &ScalarField) -> ScalarField {
    let grid = *f.grid();
    let mut data = to_complex(f.values());
    apply_symbol(&grid, &mut data, laplacian_symbol);
    ScalarField::new(grid, data.into_iter().map(|z| z.re).collect())
        .expect("same node count as input")
}

pub fn spectral_divergence(v: &VectorField) -> ScalarField {
    let grid = *v.grid();
    let mut total = vec![0.0; grid.node_count()];
    for axis in 0..grid.dim() {
        let mut data = to_complex(v.component(axis));
        apply_symbol(&grid, &mut data, derivative_symbol(&grid, axis));
        for (t, z) in total.iter_mut().zip(&data) {
            *t += z.re;
        }
    }
    ScalarField::new(grid, total).expect("same node count as input")
}

/// Convolution with the periodic (wrapped) Gaussian of standard deviation
/// `width` along every axis. The zero mode is untouched, so integrals are
/// preserved to roundoff.
pub fn gaussian_smooth(f: &ScalarField, width: f64) -> ScalarField {
    let grid = *f.grid();
    let mut data = to_complex(f.values());
    let w2 = width * width;
    apply_symbol(&grid, &mut data, |_, _, kx, ky| {
        Complex64::new((-0.5 * w2 * (kx * kx + ky * ky)).exp(), 0.0)
    });
    ScalarField::new(grid, data.into_iter().map(|z| z.re).collect())
        .expect("same node count as input")
}

/// 1D helpers used by the density transport and the distance monitors.
pub mod line {
    use super::*;

    /// Trigonometric interpolation of `values` onto `factor` times as many
    /// equispaced points (zero padding; the Nyquist mode is dropped).
    pub fn refine(values: &[Complex64], factor: usize) -> Vec<Complex64> {
        let n = values.len();
        let mut spec = values.to_vec();
        transform_1d(&mut spec, false);
        let m = n * factor;
        let mut padded = vec![Complex64::new(0.0, 0.0); m];
        let half = n / 2;
        padded[..half].copy_from_slice(&spec[..half]);
        for j in half + 1..n {
            padded[m - (n - j)] = spec[j];
        }
        transform_1d(&mut padded, true);
        let scale = factor as f64;
        padded.iter_mut().for_each(|z| *z *= scale);
        padded
    }

    /// `F(x_j + shift) = int_0^{x_j + shift} p(x) dx` for the trigonometric
    /// interpolant of the samples `p` on a periodic line of length `length`.
    pub fn antiderivative(p: &[f64], length: f64, shift: f64) -> Vec<f64> {
        let n = p.len();
        let grid_k = {
            let base = 2.0 * std::f64::consts::PI / length;
            (0..n as i64)
                .map(|j| base * (if j < n as i64 / 2 { j } else { j - n as i64 }) as f64)
                .collect::<Vec<_>>()
        };
        let mut spec = to_complex(p);
        transform_1d(&mut spec, false);
        let mean = spec[0].re / n as f64;
        let nyq = n / 2;
        // periodic part G with G' = p - mean; subtract G(0) so F(0) = 0
        let mut g = vec![Complex64::new(0.0, 0.0); n];
        let mut g_at_zero = 0.0;
        for j in 1..n {
            if j == nyq {
                continue;
            }
            let c = spec[j] / Complex64::new(0.0, grid_k[j]);
            g_at_zero += c.re;
            g[j] = c * Complex64::from_polar(1.0, grid_k[j] * shift);
        }
        g_at_zero /= n as f64;
        transform_1d(&mut g, true);
        let dx = length / n as f64;
        g.iter()
            .enumerate()
            .map(|(j, z)| mean * (j as f64 * dx + shift) + z.re - g_at_zero)
            .collect()
    }

    /// Derivative of the trigonometric interpolant at node 0.
    pub fn derivative_at_origin(values: &[Complex64], length: f64) -> Complex64 {
        let n = values.len();
        let mut spec = values.to_vec();
        transform_1d(&mut spec, false);
        let base = 2.0 * std::f64::consts::PI / length;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, z) in spec.iter().enumerate() {
            if j == n / 2 {
                continue;
            }
            let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
            acc += z * Complex64::new(0.0, base * m);
        }
        acc / n as f64
    }

    /// Recovers node values from cell averages over `[x_j - dx/2, x_j + dx/2]`
    /// by dividing out the cell-average symbol `sinc(k dx / 2)`.
    pub fn cell_average_to_nodes(cell: &[f64], length: f64) -> Vec<f64> {
        let n = cell.len();
        let dx = length / n as f64;
        let base = 2.0 * std::f64::consts::PI / length;
        let mut spec = to_complex(cell);
        transform_1d(&mut spec, false);
        for (j, z) in spec.iter_mut().enumerate() {
            let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
            let a = 0.5 * base * m * dx;
            if a != 0.0 {
                *z /= a.sin() / a;
            }
        }
        transform_1d(&mut spec, true);
        spec.into_iter().map(|z| z.re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::one_d(128, 2.0 * PI).unwrap()
    }

    #[test]
    fn gradient_of_sine_is_cosine() {
        let g = grid();
        let k = 5.0;
        let f = ScalarField::from_fn(g, |[x, _]| (k * x).sin());
        let d = spectral_gradient(&f);
        for (idx, v) in d.component(0).iter().enumerate() {
            let x = g.coordinate(idx);
            assert!((v - k * (k * x).cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_has_zero_derivatives() {
        let g = grid();
        let f = ScalarField::constant(g, 3.5);
        assert!(spectral_gradient(&f).component(0).iter().all(|v| v.abs() < 1e-12));
        assert!(spectral_laplacian(&f).values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn laplacian_of_plane_wave() {
        let g = Grid::one_d(256, 40.0).unwrap();
        let k = 2.0 * PI * 7.0 / 40.0;
        let psi = ComplexField::from_fn(g, |[x, _]| Complex64::from_polar(1.0, k * x));
        let lap = laplacian_complex(&psi);
        for (z, p) in lap.iter().zip(psi.values()) {
            assert!((z + k * k * p).norm() < 1e-10);
        }
    }

    #[test]
    fn two_dimensional_gradient() {
        let g = Grid::new(2, 32, 2.0 * PI).unwrap();
        let f = ScalarField::from_fn(g, |[x, y]| (2.0 * x).sin() * (3.0 * y).cos());
        let d = spectral_gradient(&f);
        let lap = spectral_laplacian(&f);
        for idx in 0..g.node_count() {
            let [x, y] = g.node_position(idx);
            assert!((d.component(0)[idx] - 2.0 * (2.0 * x).cos() * (3.0 * y).cos()).abs() < 1e-10);
            assert!((d.component(1)[idx] + 3.0 * (2.0 * x).sin() * (3.0 * y).sin()).abs() < 1e-10);
            assert!((lap.values()[idx] + 13.0 * f.values()[idx]).abs() < 1e-10);
        }
    }

    #[test]
    fn antiderivative_of_band_limited_density() {
        let l = 2.0 * PI;
        let n = 64;
        let p: Vec<f64> = (0..n).map(|j| 1.0 + (3.0 * j as f64 * l / n as f64).cos()).collect();
        let dx = l / n as f64;
        for shift in [0.0, -0.5 * dx, 0.3 * dx] {
            let f = line::antiderivative(&p, l, shift);
            for (j, v) in f.iter().enumerate() {
                let x = j as f64 * dx + shift;
                let exact = x + (3.0 * x).sin() / 3.0;
                assert!((v - exact).abs() < 1e-12, "{v} {exact}");
            }
        }
    }

    #[test]
    fn refine_interpolates_exactly() {
        let n = 32;
        let l = 2.0 * PI;
        let vals: Vec<Complex64> = (0..n)
            .map(|j| Complex64::from_polar(1.0, 4.0 * j as f64 * l / n as f64))
            .collect();
        let fine = line::refine(&vals, 4);
        for (j, z) in fine.iter().enumerate() {
            let x = j as f64 * l / (4 * n) as f64;
            assert!((z - Complex64::from_polar(1.0, 4.0 * x)).norm() < 1e-12);
        }
    }

    #[test]
    fn cell_average_inversion() {
        let n = 64;
        let l = 2.0 * PI;
        let dx = l / n as f64;
        // cell average of cos(3x) is cos(3x) * sinc(3 dx / 2)
        let s = (1.5 * dx).sin() / (1.5 * dx);
        let cell: Vec<f64> = (0..n).map(|j| 2.0 + s * (3.0 * j as f64 * dx).cos()).collect();
        let nodes = line::cell_average_to_nodes(&cell, l);
        for (j, v) in nodes.iter().enumerate() {
            assert!((v - 2.0 - (3.0 * j as f64 * dx).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn gaussian_smoothing_preserves_integral() {
        let g = grid();
        let f = ScalarField::from_fn(g, |[x, _]| if x < 1.0 { 2.0 } else { 0.0 });
        let s = gaussian_smooth(&f, 0.3);
        assert!((s.integral() - f.integral()).abs() < 1e-12);
    }
}
