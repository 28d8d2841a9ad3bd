use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pilotwave::field::PhysicalParams;
use pilotwave::grid::Grid;
use pilotwave::harness::{
    box_mode_phases, ladder, oracle_box_modes, oracle_free_gaussian, parse_config, run_scenario, RunError,
};

#[derive(Parser)]
#[command(name = "pilotwave", version, about = "Wavefunction and particle-ensemble co-evolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a configured scenario and write its outputs.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the `seed` key.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the `out_dir` key.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a closed-form field snapshot.
    Oracle {
        #[arg(long, value_parser = ["free-gaussian", "box-modes"])]
        case: String,
        #[arg(long, default_value_t = 0.0)]
        t: f64,
    },
    /// Run the built-in property checks.
    Selftest,
}

fn simulate(config: PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> Result<(), RunError> {
    let text = std::fs::read_to_string(&config).map_err(|source| RunError::Io {
        path: config.clone(),
        source,
    })?;
    let mut cfg = parse_config(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(dir) = out {
        cfg.out_dir = dir;
    }
    let result = run_scenario(&cfg)?;
    println!(
        "{}: {} steps, {} records written to {}",
        cfg.scenario.name(),
        result.steps,
        result.rows.len(),
        cfg.out_dir.display()
    );
    Ok(())
}

fn oracle(case: &str, t: f64) -> Result<(), RunError> {
    if !t.is_finite() {
        return Err(RunError::Oracle(pilotwave::harness::OracleError::Width(t)));
    }
    let params = PhysicalParams::default();
    let psi = match case {
        "free-gaussian" => {
            let grid = Grid::one_d(1024, 40.0).expect("valid grid");
            oracle_free_gaussian(grid, 0.5, &params, t, [20.0, 20.0])?
        }
        _ => {
            let grid = Grid::one_d(2048, 2.0 * std::f64::consts::PI).expect("valid grid");
            oracle_box_modes(grid, &ladder(16), &box_mode_phases(1, 16), &params, t)?
        }
    };
    // a closed pipe (e.g. `| head`) just ends the output
    let _ = std::io::stdout().lock().write_all(psi.snapshot().as_bytes());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate { config, seed, out } => simulate(config, seed, out),
        Command::Oracle { case, t } => oracle(&case, t),
        Command::Selftest => {
            let checks = pilotwave::selftest::run_all();
            let mut ok = true;
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            return if ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
