//! The coupled field/ensemble main loop and its file outputs.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use log::warn;
use thiserror::Error;

use crate::diagnostics::{self, CoarseGraining, DiagnosticsError, DiagnosticsRow, CSV_HEADER};
use crate::ensemble::{
    advect, estimate_density, f_q_field, sample, DensityEstimator, EnsembleError, ParticleEnsemble, RatioField,
};
use crate::evolve::{continuity_residual, EvolveError, NonlinearCoupling, Potential, Propagator, StepScheme};
use crate::field::{norm_squared, ComplexField, FieldError, PhysicalParams, ScalarField, VectorField};
use crate::kinematics::{velocity_field, DensityFloor, Regularization};
use crate::transport::{TransportError, TransportedDensity, DEFAULT_REFINEMENT};

use super::config::{ConfigError, DensitySource, PotentialKind, RunConfig, Scenario};
use super::initial::initial_state;
use super::oracle::{oracle_free_gaussian, OracleError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("initial state: {0}")]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error("non-finite values after step {step}")]
    NonFinite { step: usize },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl RunError {
    /// Process exit status: 2 for invalid input, 3 for a numerical abort,
    /// 1 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::NonFinite { .. } => 3,
            Self::Io { .. } => 1,
            _ => 2,
        }
    }
}

/// What the observer sees at each recorded step.
pub struct Record<'a> {
    pub step: usize,
    /// Index of this record among all records, starting at 0.
    pub index: usize,
    pub is_last: bool,
    pub row: &'a DiagnosticsRow,
    pub psi: &'a ComplexField,
    pub rho: &'a ScalarField,
    pub ensemble: Option<&'a ParticleEnsemble>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub rows: Vec<DiagnosticsRow>,
    pub steps: usize,
    pub dt: f64,
    pub final_psi: ComplexField,
    pub final_ensemble: Option<ParticleEnsemble>,
    /// KS distance of the ensemble to `|psi|^2` at each record (1D particle
    /// runs only).
    pub ks: Vec<f64>,
    /// Kernel width used in the last deposit, for kernel estimators.
    pub last_bandwidth: Option<f64>,
    /// Max nodewise distance to the closed-form solution at `t_end`
    /// (free Gaussian without potential only).
    pub oracle_error: Option<f64>,
}

enum DensityState {
    Particles(ParticleEnsemble, DensityEstimator),
    Transported(TransportedDensity),
}

fn averaged(a: &VectorField, b: &VectorField) -> VectorField {
    let components = a
        .components()
        .iter()
        .zip(b.components())
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| 0.5 * (u + v)).collect())
        .collect();
    VectorField::new(*a.grid(), components).expect("same grid")
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Runs a configuration in memory, calling `observer` at every record.
///
/// Each step: deposit `rho`, form `f_q`, advance `psi`, recompute the
/// guidance field, advect the particles. The particles move through the
/// average of the guidance fields at the two ends of the step. With linear
/// dynamics `rho` does not feed back and is only formed when recorded.
pub fn simulate(cfg: &RunConfig, mut observer: impl FnMut(&Record<'_>) -> Result<(), RunError>) -> Result<RunResult, RunError> {
    cfg.validate()?;
    let grid = cfg.grid();
    let params = PhysicalParams::new(cfg.hbar, cfg.mass)?;
    let potential = match cfg.potential {
        PotentialKind::Zero => Potential::zero(grid),
        PotentialKind::Harmonic { omega } => Potential::harmonic(grid, omega, &params),
    };
    let (steps, dt) = cfg.schedule();
    let scheme = StepScheme::new(dt)?;
    if scheme.exceeds_sanity_bound(&grid, &params) {
        warn!(
            "dt = {dt} exceeds dx^2 m / hbar = {}; accuracy may suffer",
            grid.spacing().powi(2) * params.mass() / params.hbar()
        );
    }
    let propagator = Propagator::new(params, scheme, &potential);
    let coupling = NonlinearCoupling::new(cfg.alpha)?;
    let linear = cfg.is_linear();
    let reg = Regularization::with_cap(grid.spacing() / dt);
    let floor = DensityFloor::default();
    let cg = CoarseGraining::new(cfg.cg_cell_factor, &grid)?;

    let init = initial_state(cfg)?;
    let mut psi = init.psi;
    let mut state = match cfg.density {
        DensitySource::Particles => DensityState::Particles(sample(&init.rho, cfg.n_particles, cfg.seed)?, cfg.estimator),
        DensitySource::Transported => {
            DensityState::Transported(TransportedDensity::new(&psi, &init.rho, params, DEFAULT_REFINEMENT)?)
        }
    };
    let mut velocity = match state {
        DensityState::Particles(..) => Some(velocity_field(&psi, &params, &reg)),
        DensityState::Transported(_) => None,
    };

    let mut rows = Vec::new();
    let mut ks = Vec::new();
    let mut last_bandwidth = None;
    let mut previous: Option<(ComplexField, Option<ScalarField>)> = None;
    for step in 0..=steps {
        let record = step % cfg.record_every == 0 || step == steps;
        let t = if step == steps { cfg.t_end } else { step as f64 * dt };
        let mut ratio: Option<RatioField> = None;
        if record || !linear {
            let rho = match &state {
                DensityState::Particles(ens, est) => {
                    if record {
                        // the last step always records, so this ends up
                        // holding the width of the final deposit
                        last_bandwidth = est.bandwidth_for(ens);
                    }
                    estimate_density(ens, &grid, est)?
                }
                DensityState::Transported(tr) => tr.density(&psi)?,
            };
            let f = f_q_field(&rho, &psi, &floor)?;
            if record {
                let residual = match &previous {
                    Some((before, f_before)) => {
                        let r = continuity_residual(before, &psi, f_before.as_ref(), &coupling, &params, dt)?;
                        r.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
                    }
                    None => 0.0,
                };
                let (h_val, h_val_coarse) = diagnostics::h_valentini(&rho, &psi, &cg)?;
                let (fq_min, fq_max) = match f.passing_range() {
                    (lo, hi) if lo <= hi => (lo, hi),
                    _ => (1.0, 1.0),
                };
                let row = DiagnosticsRow {
                    t,
                    norm_psi: norm_squared(&psi),
                    h_sym: diagnostics::h_sym(&rho, &psi)?,
                    h_val,
                    h_val_coarse,
                    l1_dist: diagnostics::l1_distance(&rho, &psi)?,
                    fq_min,
                    fq_max,
                    cont_residual_sup: residual,
                    dh_integrand_max: max_of(diagnostics::dh_integrand(&f.values, &psi, &coupling)?.values()),
                    excluded_mass: diagnostics::excluded_mass(&rho, &psi)?,
                };
                if !row.is_finite() {
                    return Err(RunError::NonFinite { step });
                }
                let ensemble = match &state {
                    DensityState::Particles(ens, _) => Some(ens),
                    DensityState::Transported(_) => None,
                };
                if let Some(ens) = ensemble {
                    if grid.dim() == 1 {
                        ks.push(diagnostics::ks_distance(ens, &psi)?);
                    }
                }
                observer(&Record {
                    step,
                    index: rows.len(),
                    is_last: step == steps,
                    row: &row,
                    psi: &psi,
                    rho: &rho,
                    ensemble,
                })?;
                rows.push(row);
            }
            ratio = Some(f);
        }
        if step == steps {
            break;
        }

        let next = match (&ratio, linear) {
            (Some(f), false) => propagator.nonlinear_step(&psi, &f.values, &coupling)?,
            _ => propagator.linear_step(&psi)?,
        };
        if !next.is_finite() {
            return Err(RunError::NonFinite { step: step + 1 });
        }
        match &mut state {
            DensityState::Particles(ens, _) => {
                let v_next = velocity_field(&next, &params, &reg);
                let v = averaged(velocity.as_ref().expect("particle runs track velocity"), &v_next);
                let moved = advect(ens, &v, dt)?;
                if !moved.is_finite() {
                    return Err(RunError::NonFinite { step: step + 1 });
                }
                *ens = moved;
                velocity = Some(v_next);
            }
            DensityState::Transported(tr) => tr.advance(&next, dt),
        }
        let f_before = if linear { None } else { ratio.map(|r| r.values) };
        previous = Some((std::mem::replace(&mut psi, next), f_before));
    }

    let oracle_error = match (cfg.scenario, cfg.potential) {
        (Scenario::FreeGaussianOracle, PotentialKind::Zero) if cfg.psi_norm2 == 1.0 => {
            let mid = 0.5 * cfg.length;
            let exact = oracle_free_gaussian(grid, cfg.sigma, &params, cfg.t_end, [mid, mid])?;
            Some(
                psi.values()
                    .iter()
                    .zip(exact.values())
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max),
            )
        }
        _ => None,
    };
    let final_ensemble = match state {
        DensityState::Particles(ens, _) => Some(ens),
        DensityState::Transported(_) => None,
    };
    Ok(RunResult {
        rows,
        steps,
        dt,
        final_psi: psi,
        final_ensemble,
        ks,
        last_bandwidth,
        oracle_error,
    })
}

/// The diagnostics time series as CSV text, header included.
pub fn csv_text(rows: &[DiagnosticsRow]) -> String {
    let mut out = String::with_capacity((rows.len() + 1) * 260);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv());
        out.push('\n');
    }
    out
}

/// `key = value` digest of a finished run.
pub fn summary_text(cfg: &RunConfig, result: &RunResult) -> String {
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        let _ = writeln!(out, "{k} = {v}");
    };
    let e = |v: f64| format!("{v:.16e}");
    line("scenario", cfg.scenario.name().to_string());
    line("seed", cfg.seed.to_string());
    line("steps", result.steps.to_string());
    line("dt", e(result.dt));
    line("t_end", e(cfg.t_end));
    line("records", result.rows.len().to_string());
    if let (Some(first), Some(last)) = (result.rows.first(), result.rows.last()) {
        line("norm_psi_initial", e(first.norm_psi));
        line("norm_psi_final", e(last.norm_psi));
        line("h_sym_initial", e(first.h_sym));
        line("h_sym_final", e(last.h_sym));
        line("h_val_initial", e(first.h_val));
        line("h_val_final", e(last.h_val));
        line("h_val_coarse_initial", e(first.h_val_coarse));
        line("h_val_coarse_final", e(last.h_val_coarse));
        line("l1_dist_final", e(last.l1_dist));
        let sup = result.rows.iter().map(|r| r.cont_residual_sup).fold(0.0, f64::max);
        line("cont_residual_sup_max", e(sup));
    }
    if let Some(h) = result.last_bandwidth {
        line("bandwidth_final", e(h));
    }
    if let Some(k) = result.ks.iter().copied().reduce(f64::max) {
        line("ks_max", e(k));
    }
    if let Some(err) = result.oracle_error {
        line("oracle_max_error", e(err));
    }
    out
}

fn write_file(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs a configuration and writes `diagnostics.csv`, `summary.txt` and
/// the snapshots under `cfg.out_dir`.
pub fn run_scenario(cfg: &RunConfig) -> Result<RunResult, RunError> {
    let snapshots = cfg.out_dir.join("snapshots");
    fs::create_dir_all(&snapshots).map_err(|source| RunError::Io {
        path: snapshots.clone(),
        source,
    })?;
    let every = cfg.snapshot_every;
    let result = simulate(cfg, |rec| {
        if rec.index % every == 0 || rec.is_last {
            write_file(&snapshots.join(format!("field_{:08}.txt", rec.step)), &rec.psi.snapshot())?;
            if let Some(ens) = rec.ensemble {
                write_file(
                    &snapshots.join(format!("ensemble_{:08}.txt", rec.step)),
                    &ens.snapshot(rec.row.t),
                )?;
            }
        }
        Ok(())
    })?;
    write_file(&cfg.out_dir.join("diagnostics.csv"), &csv_text(&result.rows))?;
    write_file(&cfg.out_dir.join("summary.txt"), &summary_text(cfg, &result))?;
    Ok(result)
}
