//! Split-step propagators for the linear Schrödinger equation and for the
//! damped equation `d psi/dt = (i hbar / 2m) lap psi - g(f_q) psi` with
//! `g(f_q) = alpha (1 - f_q)`, plus the nodewise continuity residual.
//!
//! Both propagators share one Strang layout: a nodewise half-step factor,
//! a full kinetic step in Fourier space, and the same half-step factor
//! again. For the linear equation the half factor is the potential phase
//! `exp(-i V dt / 2 hbar)`; the nonlinear one multiplies it by the damping
//! `exp(-g dt / 2)`. With `g == 0` both factors are the same bits, so the
//! two propagators agree exactly.

use num_complex::Complex64;
use thiserror::Error;

use crate::field::{ensure_same_grid, ComplexField, FieldError, PhysicalParams, ScalarField};
use crate::grid::Grid;
use crate::kinematics::probability_current;
use crate::spectral;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolveError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("time step must be finite and > 0, got {0}")]
    TimeStep(f64),
    #[error("coupling alpha must be finite and >= 0, got {0}")]
    Alpha(f64),
    #[error("f_q must be finite and >= 0 (node {node} has {value})")]
    NegativeRatio { node: usize, value: f64 },
    #[error("potential must be real and finite")]
    Potential,
}

/// Time-independent external potential evaluated once onto the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    values: ScalarField,
}

impl Potential {
    pub fn zero(grid: Grid) -> Self {
        Self {
            values: ScalarField::constant(grid, 0.0),
        }
    }

    /// `V = m omega^2 |x - c|^2 / 2` about the domain centre `c`.
    pub fn harmonic(grid: Grid, omega: f64, params: &PhysicalParams) -> Self {
        let c = 0.5 * grid.length();
        let k = 0.5 * params.mass() * omega * omega;
        let dim = grid.dim();
        Self {
            values: ScalarField::from_fn(grid, |pos| {
                k * pos.iter().take(dim).map(|x| (x - c).powi(2)).sum::<f64>()
            }),
        }
    }

    pub fn tabulated(values: ScalarField) -> Result<Self, EvolveError> {
        if !values.is_finite() {
            return Err(EvolveError::Potential);
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &ScalarField {
        &self.values
    }

    pub fn grid(&self) -> &Grid {
        self.values.grid()
    }

    pub fn is_zero(&self) -> bool {
        self.values.values().iter().all(|&v| v == 0.0)
    }
}

/// Strength of the back-reaction term, a rate in 1/time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearCoupling {
    alpha: f64,
}

impl NonlinearCoupling {
    pub fn new(alpha: f64) -> Result<Self, EvolveError> {
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(EvolveError::Alpha(alpha));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn g(&self, f_q: f64) -> f64 {
        self.alpha * (1.0 - f_q)
    }
}

impl Default for NonlinearCoupling {
    fn default() -> Self {
        Self { alpha: 0.5 }
    }
}

/// Symmetric (Strang) splitting with a fixed step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepScheme {
    dt: f64,
}

impl StepScheme {
    pub fn new(dt: f64) -> Result<Self, EvolveError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(EvolveError::TimeStep(dt));
        }
        Ok(Self { dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// `dt > dx^2 m / hbar`: the step resolves the fastest grid mode poorly.
    pub fn exceeds_sanity_bound(&self, grid: &Grid, params: &PhysicalParams) -> bool {
        self.dt > grid.spacing().powi(2) / params.hbar_over_mass()
    }
}

/// `g = alpha (1 - f_q)` nodewise.
pub fn g_of_fq(f_q: &ScalarField, coupling: &NonlinearCoupling) -> ScalarField {
    f_q.map(|f| coupling.g(f))
}

fn check_ratio(f_q: &ScalarField) -> Result<(), EvolveError> {
    match f_q
        .values()
        .iter()
        .enumerate()
        .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
    {
        Some((node, &value)) => Err(EvolveError::NegativeRatio { node, value }),
        None => Ok(()),
    }
}

/// Precomputed step factors for one grid, step size and potential.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: Grid,
    params: PhysicalParams,
    dt: f64,
    potential: Vec<f64>,
    kinetic: Vec<Complex64>,
    potential_half: Vec<Complex64>,
}

impl Propagator {
    pub fn new(
        params: PhysicalParams,
        scheme: StepScheme,
        potential: &Potential,
    ) -> Self {
        let grid = *potential.grid();
        let dt = scheme.dt();
        let k = grid.wavenumbers();
        let n = grid.points_per_dim();
        let rate = params.hbar() / (2.0 * params.mass());
        let kinetic = (0..grid.node_count())
            .map(|idx| {
                let k2 = match grid.dim() {
                    1 => k[idx] * k[idx],
                    _ => k[idx / n].powi(2) + k[idx % n].powi(2),
                };
                Complex64::from_polar(1.0, -rate * k2 * dt)
            })
            .collect();
        let potential = potential.values().values().to_vec();
        let mut prop = Self {
            grid,
            params,
            dt,
            potential,
            kinetic,
            potential_half: Vec::new(),
        };
        prop.potential_half = (0..grid.node_count())
            .map(|idx| Complex64::from_polar(1.0, prop.half_angle(idx)))
            .collect();
        prop
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn half_angle(&self, idx: usize) -> f64 {
        -self.potential[idx] * self.dt / (2.0 * self.params.hbar())
    }

    fn strang(&self, psi: &ComplexField, half: &[Complex64]) -> ComplexField {
        let mut data: Vec<Complex64> = psi.values().iter().zip(half).map(|(p, h)| p * h).collect();
        spectral::forward(&self.grid, &mut data);
        data.iter_mut().zip(&self.kinetic).for_each(|(z, k)| *z *= k);
        spectral::inverse(&self.grid, &mut data);
        data.iter_mut().zip(half).for_each(|(z, h)| *z *= h);
        ComplexField::new(self.grid, data).expect("node count preserved")
    }

    pub fn linear_step(&self, psi: &ComplexField) -> Result<ComplexField, EvolveError> {
        ensure_same_grid(psi.grid(), &self.grid)?;
        Ok(self.strang(psi, &self.potential_half))
    }

    /// One step with `f_q` frozen over the step.
    pub fn nonlinear_step(
        &self,
        psi: &ComplexField,
        f_q: &ScalarField,
        coupling: &NonlinearCoupling,
    ) -> Result<ComplexField, EvolveError> {
        ensure_same_grid(psi.grid(), &self.grid)?;
        ensure_same_grid(f_q.grid(), &self.grid)?;
        check_ratio(f_q)?;
        let half: Vec<Complex64> = f_q
            .values()
            .iter()
            .enumerate()
            .map(|(idx, &f)| {
                let damping = (-coupling.g(f) * self.dt / 2.0).exp();
                Complex64::from_polar(damping, self.half_angle(idx))
            })
            .collect();
        Ok(self.strang(psi, &half))
    }
}

/// One linear Strang step `V/2, T, V/2`.
pub fn linear_step(
    psi: &ComplexField,
    potential: &Potential,
    params: &PhysicalParams,
    scheme: &StepScheme,
) -> Result<ComplexField, EvolveError> {
    ensure_same_grid(psi.grid(), potential.grid())?;
    Propagator::new(*params, *scheme, potential).linear_step(psi)
}

/// One damped Strang step `(D V)/2, T, (D V)/2` with `D = exp(-g dt)`.
pub fn nonlinear_step(
    psi: &ComplexField,
    f_q: &ScalarField,
    coupling: &NonlinearCoupling,
    params: &PhysicalParams,
    scheme: &StepScheme,
    potential: &Potential,
) -> Result<ComplexField, EvolveError> {
    ensure_same_grid(psi.grid(), potential.grid())?;
    Propagator::new(*params, *scheme, potential).nonlinear_step(psi, f_q, coupling)
}

/// The three terms of `d|psi|^2/dt + div(j) + 2 g |psi|^2 = 0` across one step.
#[derive(Debug, Clone)]
pub struct ContinuityTerms {
    /// `(|psi_after|^2 - |psi_before|^2) / dt`
    pub rate: ScalarField,
    /// Divergence of the step-averaged current.
    pub divergence: ScalarField,
    /// `2 g |psi|^2` with the density averaged over the step as for
    /// exponential growth (logarithmic mean); zero for linear dynamics.
    pub source: ScalarField,
}

impl ContinuityTerms {
    pub fn residual(&self) -> ScalarField {
        let values = self
            .rate
            .values()
            .iter()
            .zip(self.divergence.values())
            .zip(self.source.values())
            .map(|((r, d), s)| r + d + s)
            .collect();
        ScalarField::new(*self.rate.grid(), values).expect("same grid")
    }

    /// `rate + divergence`, the part the source has to balance.
    pub fn transport(&self) -> ScalarField {
        let values = self
            .rate
            .values()
            .iter()
            .zip(self.divergence.values())
            .map(|(r, d)| r + d)
            .collect();
        ScalarField::new(*self.rate.grid(), values).expect("same grid")
    }
}

fn logarithmic_mean(a: f64, b: f64) -> f64 {
    if a <= 0.0 || b <= 0.0 {
        return 0.5 * (a + b);
    }
    if a == b {
        return a;
    }
    (a - b) / ((a - b) / b).ln_1p()
}

/// Terms of the continuity balance between two snapshots one step apart.
/// `f_q = None` means linear dynamics (`g == 0`).
pub fn continuity_terms(
    before: &ComplexField,
    after: &ComplexField,
    f_q: Option<&ScalarField>,
    coupling: &NonlinearCoupling,
    params: &PhysicalParams,
    dt: f64,
) -> Result<ContinuityTerms, EvolveError> {
    ensure_same_grid(before.grid(), after.grid())?;
    if let Some(f) = f_q {
        ensure_same_grid(before.grid(), f.grid())?;
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(EvolveError::TimeStep(dt));
    }
    let grid = *before.grid();
    let pb = before.density();
    let pa = after.density();
    let rate: Vec<f64> = pa
        .values()
        .iter()
        .zip(pb.values())
        .map(|(a, b)| (a - b) / dt)
        .collect();
    let jb = probability_current(before, params);
    let ja = probability_current(after, params);
    let mid = (0..grid.dim())
        .map(|d| {
            jb.component(d)
                .iter()
                .zip(ja.component(d))
                .map(|(x, y)| 0.5 * (x + y))
                .collect()
        })
        .collect();
    let mid = crate::field::VectorField::new(grid, mid).expect("one component per axis");
    let divergence = spectral::spectral_divergence(&mid);
    let source: Vec<f64> = match f_q {
        None => vec![0.0; grid.node_count()],
        Some(f) => f
            .values()
            .iter()
            .zip(pa.values().iter().zip(pb.values()))
            .map(|(&f, (&a, &b))| 2.0 * coupling.g(f) * logarithmic_mean(a, b))
            .collect(),
    };
    Ok(ContinuityTerms {
        rate: ScalarField::new(grid, rate).expect("same grid"),
        divergence,
        source: ScalarField::new(grid, source).expect("same grid"),
    })
}

/// Nodewise residual of the continuity balance.
pub fn continuity_residual(
    before: &ComplexField,
    after: &ComplexField,
    f_q: Option<&ScalarField>,
    coupling: &NonlinearCoupling,
    params: &PhysicalParams,
    dt: f64,
) -> Result<ScalarField, EvolveError> {
    Ok(continuity_terms(before, after, f_q, coupling, params, dt)?.residual())
}
