//! Initial `psi_0` and `rho_0` for each scenario.

use crate::field::{norm_squared, ComplexField, PhysicalParams, ScalarField};
use crate::grid::Grid;

use super::config::{RunConfig, Scenario};
use super::oracle::{box_mode_phases, oracle_box_modes, oracle_free_gaussian, OracleError};

#[derive(Debug, Clone)]
pub struct InitialState {
    pub psi: ComplexField,
    pub rho: ScalarField,
    /// Phases of the mode superposition, when there is one.
    pub phases: Option<Vec<f64>>,
}

/// Ladder indices `1..=count`.
pub fn ladder(count: usize) -> Vec<i64> {
    (1..=count as i64).collect()
}

/// Normalized Gaussian density with standard deviation `sigma` about
/// `center`, using the minimum-image distance on the periodic domain.
pub fn gaussian_density(grid: Grid, sigma: f64, center: [f64; 2]) -> ScalarField {
    let l = grid.length();
    let image = |x: f64, c: f64| {
        let d = (x - c).rem_euclid(l);
        if d > 0.5 * l {
            d - l
        } else {
            d
        }
    };
    let raw = ScalarField::from_fn(grid, |p| {
        let r2: f64 = (0..grid.dim()).map(|a| image(p[a], center[a]).powi(2)).sum();
        (-0.5 * r2 / (sigma * sigma)).exp()
    });
    let total = raw.integral();
    raw.map(|v| v / total)
}

pub fn initial_state(cfg: &RunConfig) -> Result<InitialState, OracleError> {
    let grid = cfg.grid();
    let params = PhysicalParams::new(cfg.hbar, cfg.mass).expect("validated at parse time");
    let mid = 0.5 * cfg.length;
    if cfg.scenario.uses_modes() {
        let phases = box_mode_phases(cfg.seed, cfg.modes);
        let psi = oracle_box_modes(grid, &ladder(cfg.modes), &phases, &params, 0.0)?;
        let psi = rescale(psi, cfg.psi_norm2);
        let rho = match cfg.scenario {
            Scenario::Equivariance => {
                let p = psi.density();
                let total = p.integral();
                p.map(|v| v / total)
            }
            _ => ScalarField::constant(grid, 1.0 / grid.volume()),
        };
        return Ok(InitialState {
            psi,
            rho,
            phases: Some(phases),
        });
    }
    let psi = oracle_free_gaussian(grid, cfg.sigma, &params, 0.0, [mid, mid])?;
    let psi = rescale(psi, cfg.psi_norm2);
    let rho = gaussian_density(grid, cfg.sigma, [mid + cfg.rho_shift * cfg.sigma, mid]);
    Ok(InitialState { psi, rho, phases: None })
}

fn rescale(psi: ComplexField, norm2: f64) -> ComplexField {
    let factor = (norm2 / norm_squared(&psi)).sqrt();
    psi.scaled(num_complex::Complex64::new(factor, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_scenario_starts_normalized() {
        for s in Scenario::ALL {
            let cfg = RunConfig::defaults(s);
            let init = initial_state(&cfg).unwrap();
            assert!((norm_squared(&init.psi) - cfg.psi_norm2).abs() < 1e-9, "{}", s.name());
            assert!((init.rho.integral() - 1.0).abs() < 1e-9, "{}", s.name());
        }
    }

    #[test]
    fn shifted_density_peaks_one_sigma_right() {
        let cfg = RunConfig::defaults(Scenario::NonlinearRelax);
        let init = initial_state(&cfg).unwrap();
        let g = cfg.grid();
        let peak = (0..g.node_count())
            .max_by(|&a, &b| init.rho.values()[a].total_cmp(&init.rho.values()[b]))
            .unwrap();
        assert!((g.coordinate(peak) - 20.5).abs() <= g.spacing());
    }

    #[test]
    fn scaled_norm_is_honoured() {
        let mut cfg = RunConfig::defaults(Scenario::NonlinearRelax);
        cfg.psi_norm2 = 0.8;
        let init = initial_state(&cfg).unwrap();
        assert!((norm_squared(&init.psi) - 0.8).abs() < 1e-12);
    }
}
