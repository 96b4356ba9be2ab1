//! Running a configured system and exporting the trajectory as CSV.

use std::io::{self, BufWriter, Write};
use std::path::Path;

use cliffmech::integrate::{diagnose, integrate, DiagnosticsReport, MechanicalSystem, Trajectory};

use crate::config::BuiltSystem;

#[derive(Debug, thiserror::Error)]
pub enum SimulateError {
    #[error("integration failed at step {step}: {message}")]
    Integration { step: usize, message: String },
    #[error("cannot write `{path}`: {source}")]
    Output { path: String, source: io::Error },
    #[error("{0}")]
    Diagnose(String),
}

pub struct SimulationOutcome {
    pub trajectory: Trajectory,
    pub report: DiagnosticsReport,
}

/// Integrates the configured system and recomputes its diagnostics.
pub fn run(system: &BuiltSystem) -> Result<SimulationOutcome, SimulateError> {
    let sys = MechanicalSystem::new(&system.structure, &system.lagrangian)
        .expect("config validation matched dimensions");
    let trajectory = integrate(
        &sys,
        &system.initial_x,
        system.dt,
        system.steps,
        system.integrator.as_ref(),
    )
    .map_err(|e| SimulateError::Integration {
        step: e.step,
        message: e.cause.to_string(),
    })?;
    let report = diagnose(&trajectory, &system.structure, &system.lagrangian)
        .map_err(|e| SimulateError::Diagnose(e.to_string()))?;
    Ok(SimulationOutcome { trajectory, report })
}

/// Writes `t, x0.., v0.., energy, residual_max` rows. Floats use the
/// shortest representation that round-trips, so identical runs produce
/// byte-identical files.
pub fn write_csv(path: &Path, traj: &Trajectory) -> Result<(), SimulateError> {
    let file = std::fs::File::create(path).map_err(|source| SimulateError::Output {
        path: path.display().to_string(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    write_csv_to(&mut w, traj).map_err(|source| SimulateError::Output {
        path: path.display().to_string(),
        source,
    })
}

fn write_csv_to(w: &mut impl Write, traj: &Trajectory) -> io::Result<()> {
    let d = traj.states.first().map_or(0, |x| x.len());
    write!(w, "t")?;
    for i in 0..d {
        write!(w, ",x{i}")?;
    }
    for i in 0..d {
        write!(w, ",v{i}")?;
    }
    writeln!(w, ",energy,residual_max")?;
    for k in 0..traj.len() {
        write!(w, "{}", traj.times[k])?;
        for value in traj.states[k].iter() {
            write!(w, ",{value}")?;
        }
        for value in traj.velocities[k].iter() {
            write!(w, ",{value}")?;
        }
        writeln!(w, ",{},{}", traj.energies[k], traj.residual_max[k])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config;

    fn harmonic(steps: usize) -> BuiltSystem {
        config::build(
            serde_json::from_value(serde_json::json!({
                "version": 1,
                "n": 1,
                "structure": "J1",
                "lagrangian": { "builtin": { "masses": [1.0], "gravity": 0.0, "height_index": 0 } },
                "initial_x": [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                "integrator": "rk4",
                "dt": 0.001,
                "steps": steps
            }))
            .unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_steps_yields_single_row_csv() {
        let outcome = run(&harmonic(0)).unwrap();
        let mut buf = Vec::new();
        write_csv_to(&mut buf, &outcome.trajectory).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("t,x0,"));
        assert!(lines[0].ends_with(",energy,residual_max"));
        assert!(lines[1].starts_with("0,1,0,"));
    }

    #[test]
    fn csv_rows_match_sample_count() {
        let outcome = run(&harmonic(5)).unwrap();
        let mut buf = Vec::new();
        write_csv_to(&mut buf, &outcome.trajectory).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 7);
        // 1 time + 8 states + 8 velocities + energy + residual
        assert_eq!(text.lines().next().unwrap().split(',').count(), 19);
    }

    #[test]
    fn linear_lagrangian_fails_at_step_zero() {
        let system = config::build(
            serde_json::from_value(serde_json::json!({
                "version": 1,
                "n": 1,
                "structure": "J1",
                "lagrangian": { "expression": "x0" },
                "initial_x": [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
                "integrator": "rk4",
                "dt": 0.001,
                "steps": 3
            }))
            .unwrap(),
        )
        .unwrap();
        let err = match run(&system) {
            Ok(_) => panic!("expected the degenerate system to fail"),
            Err(e) => e,
        };
        match err {
            SimulateError::Integration { step, message } => {
                assert_eq!(step, 0);
                assert!(message.contains("singular Hessian"), "message: {message}");
            }
            other => panic!("expected integration failure, got {other}"),
        }
    }
}
