//! Pilot-wave ensembles on periodic grids: a wavefunction evolved by
//! split-step Fourier methods, optionally coupled back to the particle
//! density through a damping term, together with the particle ensemble it
//! guides and the H-function monitors that track relaxation toward
//! `rho = |psi|^2`.

pub mod diagnostics;
pub mod ensemble;
pub mod evolve;
pub mod field;
pub mod grid;
pub mod kinematics;
pub mod spectral;
pub mod transport;
pub mod harness;
pub mod selftest;
