//! Command line front end: derive Euler-Lagrange systems, simulate
//! trajectories to CSV, and run the invariant check suite.
//!
//! Exit codes are a stable contract: 0 on success, 1 for validation or
//! check failures, 2 for runtime (integration) failures.

mod config;
mod render;
mod simulate;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};

use cliffmech::checks::{all_passed, CheckSuite, Fault};
use cliffmech::dynamics::pairing_table;
use cliffmech::geometry::StructureLabel;

const EXIT_OK: i32 = 0;
const EXIT_VALIDATION: i32 = 1;
const EXIT_RUNTIME: i32 = 2;

#[derive(Parser)]
#[command(
    name = "cliffmech",
    version,
    about = "Lagrangian mechanics on R^{8n} with the three canonical structures J1, J2, J3"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum DeriveFormat {
    Ascii,
    Latex,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Print the eight block Euler-Lagrange equations of a structure
    Derive {
        /// Structure label: J1, J2 or J3
        #[arg(long)]
        structure: String,
        /// Block size n (ambient dimension is 8n)
        #[arg(long, default_value_t = 1)]
        n: usize,
        /// Output format
        #[arg(long, value_enum, default_value_t = DeriveFormat::Ascii)]
        format: DeriveFormat,
    },
    /// Integrate a configured system and write the trajectory CSV
    Simulate {
        /// Path to a JSON system configuration
        #[arg(long)]
        config: String,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the invariant check suite
    Check {
        /// Block sizes to check, comma separated
        #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 2])]
        n: Vec<usize>,
        /// Seed for the randomized checks
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Corrupt one structure before checking, e.g. `J2:3`
        /// (flips the sign of block 3 of J2); for testing the checker
        #[arg(long)]
        inject_fault: Option<String>,
    },
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_VALIDATION,
            };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Derive {
            structure,
            n,
            format,
        } => cmd_derive(&structure, n, format),
        Command::Simulate { config, out } => cmd_simulate(&config, &out),
        Command::Check {
            n,
            seed,
            inject_fault,
        } => cmd_check(&n, seed, inject_fault.as_deref()),
    }
}

fn cmd_derive(structure: &str, n: usize, format: DeriveFormat) -> i32 {
    let label: StructureLabel = match structure.parse() {
        Ok(label) => label,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    if n == 0 {
        eprintln!("error: n must be at least 1");
        return EXIT_VALIDATION;
    }
    let table = pairing_table(label);
    let text = match format {
        DeriveFormat::Ascii => render::render_ascii(&table, n),
        DeriveFormat::Latex => render::render_latex(&table, n),
        DeriveFormat::Json => render::render_json(&table, n),
    };
    print!("{text}");
    EXIT_OK
}

fn cmd_simulate(config_path: &str, out: &Path) -> i32 {
    let system = match config::load(config_path) {
        Ok(system) => system,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    let outcome = match simulate::run(&system) {
        Ok(outcome) => outcome,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_RUNTIME;
        }
    };
    if let Err(e) = simulate::write_csv(out, &outcome.trajectory) {
        eprintln!("error: {e}");
        return EXIT_RUNTIME;
    }
    let report = outcome.report;
    println!(
        "wrote {} ({} samples, dt = {}, t_final = {})",
        out.display(),
        outcome.trajectory.len(),
        outcome.trajectory.dt,
        outcome.trajectory.times.last().copied().unwrap_or(0.0),
    );
    println!(
        "energy drift = {:.6e}, max EL residual = {:.6e}, min Hessian rcond = {:.3e}",
        report.max_energy_drift, report.max_residual, report.min_hessian_rcond
    );
    EXIT_OK
}

fn cmd_check(dims: &[usize], seed: u64, fault_spec: Option<&str>) -> i32 {
    if dims.is_empty() {
        eprintln!("error: --n needs at least one block size");
        return EXIT_VALIDATION;
    }
    if let Some(&bad) = dims.iter().find(|&&n| n == 0) {
        eprintln!("error: block size n must be at least 1, got {bad}");
        return EXIT_VALIDATION;
    }
    let fault: Option<Fault> = match fault_spec {
        Some(spec) => match spec.parse() {
            Ok(fault) => Some(fault),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_VALIDATION;
            }
        },
        None => None,
    };
    if fault.is_some() {
        println!(
            "note: running with an injected fault ({})",
            fault_spec.unwrap_or("")
        );
    }
    let outcomes = CheckSuite::new(dims.to_vec(), seed).with_fault(fault).run();
    for outcome in &outcomes {
        let tag = if outcome.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {}: {}", outcome.name, outcome.detail);
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("{passed}/{} checks passed", outcomes.len());
    if all_passed(&outcomes) {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    }
}
