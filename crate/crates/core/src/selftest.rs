//! Fast randomized property checks bundled with the binary.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::{dh_integrand, h_sym, h_valentini, CoarseGraining};
use crate::ensemble::{advect_with, auxiliary_stream, estimate_density, f_q_field, sample, Bandwidth, DensityEstimator, FnVelocity};
use crate::evolve::{NonlinearCoupling, Potential, Propagator, StepScheme};
use crate::field::{norm_squared, ComplexField, PhysicalParams, ScalarField};
use crate::grid::Grid;
use crate::kinematics::DensityFloor;

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, worst: f64, bound: f64) -> CheckOutcome {
    CheckOutcome {
        name,
        passed: worst <= bound,
        detail: format!("worst {worst:.3e}, bound {bound:.1e}"),
    }
}

fn random_wave(rng: &mut ChaCha8Rng, grid: Grid) -> ComplexField {
    let terms: Vec<(f64, f64, f64)> = (0..6)
        .map(|_| (rng.gen_range(-8..=8) as f64, rng.gen::<f64>(), rng.gen::<f64>() * 2.0 * PI))
        .collect();
    let l = grid.length();
    let raw = ComplexField::from_fn(grid, |[x, _]| {
        terms
            .iter()
            .map(|&(m, a, th)| Complex64::from_polar(a, 2.0 * PI * m * x / l + th))
            .sum()
    });
    let s = norm_squared(&raw).sqrt();
    raw.scaled(Complex64::new(1.0 / s, 0.0))
}

fn random_density(rng: &mut ChaCha8Rng, grid: Grid) -> ScalarField {
    let raw = ScalarField::new(grid, (0..grid.node_count()).map(|_| rng.gen::<f64>()).collect())
        .expect("one value per node");
    let total = raw.integral();
    raw.map(|v| v / total)
}

fn dh_sign(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let g = Grid::one_d(1024, 1.0).unwrap();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..10 {
        let f = ScalarField::new(
            g,
            (0..1024)
                .map(|i| match i % 8 {
                    0 => 0.0,
                    1 => 1.0,
                    2 => 1e-300,
                    3 => 1e12 * rng.gen::<f64>(),
                    _ => 10f64.powf(rng.gen_range(-6.0..6.0)),
                })
                .collect(),
        )
        .unwrap();
        let psi = ComplexField::new(
            g,
            (0..1024)
                .map(|_| Complex64::new(10f64.powf(rng.gen_range(-3.0..1.0)), 0.0))
                .collect(),
        )
        .unwrap();
        let c = NonlinearCoupling::new(rng.gen_range(0.0..5.0)).unwrap();
        let d = dh_integrand(&f, &psi, &c).unwrap();
        worst = d.values().iter().copied().fold(worst, f64::max);
    }
    outcome("dh integrand is never positive", worst, 1e-12)
}

fn h_functionals(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let g = Grid::one_d(128, 2.0).unwrap();
    let cg = CoarseGraining::new(8, &g).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let psi = random_wave(rng, g);
        let rho = random_density(rng, g);
        worst = worst.max(-h_sym(&rho, &psi).unwrap());
        worst = worst.max(h_sym(&psi.density(), &psi).unwrap().abs());
        let (fine, coarse) = h_valentini(&rho, &psi, &cg).unwrap();
        worst = worst.max(coarse - fine - 1e-12);
    }
    outcome("h_sym >= 0, zero at equilibrium, coarse <= fine", worst, 0.0)
}

fn equilibrium_ratio(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let g = Grid::one_d(128, 2.0).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let psi = random_wave(rng, g);
        let r = f_q_field(&psi.density(), &psi, &DensityFloor::default()).unwrap();
        worst = r.values.values().iter().fold(worst, |m, v| m.max((v - 1.0).abs()));
    }
    outcome("f_q = 1 when rho = |psi|^2", worst, 0.0)
}

fn propagators(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let g = Grid::one_d(256, 2.0).unwrap();
    let params = PhysicalParams::default();
    let prop = Propagator::new(params, StepScheme::new(1e-3).unwrap(), &Potential::zero(g));
    let ones = ScalarField::constant(g, 1.0);
    let zero = NonlinearCoupling::new(0.0).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let psi = random_wave(rng, g);
        let a = prop.linear_step(&psi).unwrap();
        worst = worst.max((norm_squared(&a) - 1.0).abs());
        let f = random_density(rng, g);
        let b = prop.nonlinear_step(&psi, &f, &zero).unwrap();
        let c = prop.nonlinear_step(&psi, &ones, &NonlinearCoupling::default()).unwrap();
        if a != b || a != c {
            worst = f64::INFINITY;
        }
    }
    outcome("linear step unitary; g = 0 step bitwise linear", worst, 1e-12)
}

fn ensembles(rng: &mut ChaCha8Rng) -> CheckOutcome {
    let g = Grid::one_d(128, 4.0).unwrap();
    let rho = random_density(rng, g);
    let seed = rng.gen();
    let mut worst: f64 = 0.0;
    let a = sample(&rho, 5000, seed).unwrap();
    if a != sample(&rho, 5000, seed).unwrap() {
        worst = f64::INFINITY;
    }
    for est in [
        DensityEstimator::Histogram,
        DensityEstimator::GaussianKde(Bandwidth::Silverman),
        DensityEstimator::GaussianKde(Bandwidth::Fixed(0.3)),
    ] {
        let d = estimate_density(&a, &g, &est).unwrap();
        worst = worst.max((d.integral() - 1.0).abs());
        if d.min() < 0.0 {
            worst = f64::INFINITY;
        }
    }
    let flow = |s: f64| FnVelocity(move |x: [f64; 2]| [s * (1.0 + 0.5 * (2.0 * PI * x[0] / 4.0).sin()), 0.0]);
    let there = advect_with(&a, &flow(1.0), 1e-3);
    let back = advect_with(&there, &flow(-1.0), 1e-3);
    for (x, y) in a.positions().iter().zip(back.positions()) {
        let d = (x - y).abs();
        worst = worst.max(d.min(4.0 - d) / g.spacing());
    }
    outcome("sampling deterministic, deposits normalized, advection reversible", worst, 1e-9)
}

/// Runs every check with a fixed seed.
pub fn run_all() -> Vec<CheckOutcome> {
    let mut rng = auxiliary_stream(0x5e1f_7e57, 0);
    vec![
        dh_sign(&mut rng),
        h_functionals(&mut rng),
        equilibrium_ratio(&mut rng),
        propagators(&mut rng),
        ensembles(&mut rng),
    ]
}

#[cfg(test)]
mod tests {
    #[test]
    fn all_checks_pass() {
        for c in super::run_all() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
