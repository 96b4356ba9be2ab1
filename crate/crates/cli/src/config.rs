//! JSON system configuration for the `simulate` command.

use nalgebra::DVector;
use serde::Deserialize;

use cliffmech::dim::Dimension;
use cliffmech::geometry::{make_structure, StructureLabel, StructureMatrix};
use cliffmech::integrate::{integrator_by_name, Integrator, INTEGRATOR_NAMES};
use cliffmech::lagrangian::LagrangianField;

pub const SCHEMA_VERSION: u32 = 1;

/// On-disk schema, version 1.
///
/// ```json
/// {
///   "version": 1,
///   "n": 1,
///   "structure": "J1",
///   "lagrangian": { "builtin": { "masses": [1.0], "gravity": 0.0, "height_index": 0 } },
///   "initial_x": [1, 0, 0, 0, 0, 0, 0, 0],
///   "integrator": "rk4",
///   "dt": 0.001,
///   "steps": 1000,
///   "rng_seed": 42
/// }
/// ```
///
/// The Lagrangian is either the builtin family as above or
/// `{ "expression": "x0^2 + ..." }`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub version: u32,
    pub n: usize,
    pub structure: String,
    pub lagrangian: LagrangianSpec,
    pub initial_x: Vec<f64>,
    pub integrator: String,
    pub dt: f64,
    pub steps: usize,
    /// Accepted for schema completeness; simulation itself is
    /// deterministic and only the check command consumes seeds.
    #[serde(default)]
    #[allow(dead_code)]
    pub rng_seed: u64,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LagrangianSpec {
    Builtin {
        masses: Vec<f64>,
        gravity: f64,
        height_index: usize,
    },
    Expression(String),
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("config is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config field `{field}`: {message}")]
    Invalid {
        field: &'static str,
        message: String,
    },
}

fn invalid(field: &'static str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field,
        message: message.into(),
    }
}

/// A validated, ready-to-run system.
pub struct BuiltSystem {
    pub structure: StructureMatrix,
    pub lagrangian: LagrangianField,
    pub integrator: Box<dyn Integrator>,
    pub initial_x: DVector<f64>,
    pub dt: f64,
    pub steps: usize,
}

pub fn load(path: &str) -> Result<BuiltSystem, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_string(),
        source,
    })?;
    let config: SystemConfig = serde_json::from_str(&text)?;
    build(config)
}

pub fn build(config: SystemConfig) -> Result<BuiltSystem, ConfigError> {
    if config.version != SCHEMA_VERSION {
        return Err(invalid(
            "version",
            format!(
                "expected schema version {SCHEMA_VERSION}, got {}",
                config.version
            ),
        ));
    }
    let dim = Dimension::new(config.n).map_err(|e| invalid("n", e.to_string()))?;
    let label: StructureLabel = config
        .structure
        .parse()
        .map_err(|e: String| invalid("structure", e))?;
    let structure = make_structure(label, dim);

    let lagrangian = match config.lagrangian {
        LagrangianSpec::Builtin {
            masses,
            gravity,
            height_index,
        } => LagrangianField::builtin(dim, masses, gravity, height_index)
            .map_err(|e| invalid("lagrangian", e.to_string()))?,
        LagrangianSpec::Expression(source) => LagrangianField::from_expression(dim, &source)
            .map_err(|e| invalid("lagrangian", e.to_string()))?,
    };

    if config.initial_x.len() != dim.total() {
        return Err(invalid(
            "initial_x",
            format!(
                "expected {} coordinates for n = {}, got {}",
                dim.total(),
                config.n,
                config.initial_x.len()
            ),
        ));
    }
    if !(config.dt > 0.0 && config.dt.is_finite()) {
        return Err(invalid(
            "dt",
            format!("must be positive and finite, got {}", config.dt),
        ));
    }
    let integrator = integrator_by_name(&config.integrator).ok_or_else(|| {
        invalid(
            "integrator",
            format!(
                "unknown integrator `{}` (available: {})",
                config.integrator,
                INTEGRATOR_NAMES.join(", ")
            ),
        )
    })?;

    Ok(BuiltSystem {
        structure,
        lagrangian,
        integrator,
        initial_x: DVector::from_vec(config.initial_x),
        dt: config.dt,
        steps: config.steps,
    })
}
