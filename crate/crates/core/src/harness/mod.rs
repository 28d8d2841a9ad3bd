//! Experiment orchestration: configuration, scenarios, analytic oracles
//! and the main loop.

mod config;
mod initial;
mod oracle;
mod run;

pub use config::{parse_config, ConfigError, DensitySource, GForm, PotentialKind, RunConfig, Scenario};
pub use initial::{gaussian_density, initial_state, ladder, InitialState};
pub use oracle::{
    box_mode_phases, oracle_box_modes, oracle_free_gaussian, recurrence_time, OracleError, MAX_TAIL_MASS,
};
pub use run::{csv_text, run_scenario, simulate, summary_text, Record, RunError, RunResult};
