//! Config-driven scenario loading and execution.
//!
//! Scenarios are JSON files with a strict schema (unknown keys are errors).
//! A scenario picks one of three kinds — `locomotion`, `swarm` or
//! `optimize` — plus terrain, mode/pattern, morphology overrides, duration,
//! timestep and seed. Terrain presets (`flat`, `slope15`, `snow`, `rocks`)
//! expand to full terrain specs. Angles are degrees in files, radians in
//! code.

mod config;
mod run;

pub use config::{load_scenario, load_scenario_str, pattern_to_config, PatternConfig};
pub use run::{compare, run, write_summary_json, CompareReport, RunSummary};

use std::path::PathBuf;

use thiserror::Error;

use crate::dynamics::{Heightfield, Terrain};
use crate::gait::LocomotionMode;
use crate::morphology::RobotMorphology;
use crate::swarm::SwarmParticle;

/// Maximum allowed timestep in scenario files, ms.
pub const MAX_DT_MS: f64 = 2.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error in {path}: {detail}")]
    Parse { path: PathBuf, detail: String },
    #[error("invalid value for \"{field}\": {message}")]
    Validation { field: String, message: String },
    #[error("run failed: {0}")]
    Run(String),
}

fn invalid(field: &str, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    Locomotion,
    Swarm,
    Optimize,
}

/// Swarm section of a resolved scenario.
#[derive(Debug, Clone)]
pub struct SwarmSetup {
    pub latch_radius_m: f64,
    pub particles: Vec<SwarmParticle>,
}

/// A fully resolved, validated scenario ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// Stem of the scenario file; used to derive output names.
    pub name: String,
    pub kind: ScenarioKind,
    pub morphology: RobotMorphology,
    pub terrain: Terrain,
    /// Present for locomotion and optimize kinds.
    pub mode: Option<LocomotionMode>,
    /// Present for the swarm kind.
    pub swarm: Option<SwarmSetup>,
    pub duration_s: f64,
    pub dt_s: f64,
    pub seed: u64,
    /// Optimizer evaluation budget (optimize kind).
    pub budget: usize,
    pub trajectory_path: Option<PathBuf>,
    pub summary_path: Option<PathBuf>,
}

impl Scenario {
    /// Override the timestep, keeping the scenario invariant.
    pub fn set_dt_ms(&mut self, dt_ms: f64) -> Result<(), ScenarioError> {
        if !(dt_ms > 0.0 && dt_ms <= MAX_DT_MS) {
            return Err(invalid(
                "dt_ms",
                format!("dt must lie in (0, {MAX_DT_MS}] ms, got {dt_ms}"),
            ));
        }
        self.dt_s = dt_ms / 1000.0;
        Ok(())
    }
}

/// Expand a terrain preset name.
pub fn terrain_preset(name: &str) -> Option<Terrain> {
    match name {
        "flat" => Some(Terrain::flat(0.8)),
        "slope15" => Some(Terrain::slope(15.0_f64.to_radians(), 0.8)),
        "snow" => Some(Terrain::heightfield(snow_heightfield(), 0.05)),
        "rocks" => Some(Terrain::heightfield(rocks_heightfield(), 0.6)),
        _ => None,
    }
}

/// Crud snow: slippery with lumps of about 40 mm amplitude and 150-300 mm
/// spacing, sampled over a 6 m square.
pub fn snow_heightfield() -> Heightfield {
    Heightfield::from_fn(301, 301, 0.02, |x, y| {
        0.020
            * ((39.0 * x).sin() * (33.0 * y).cos()
                + (27.0 * x + 1.7).sin() * (21.0 * y + 0.6).sin())
    })
    .expect("snow heightfield parameters are valid")
}

/// Rocky ground: grippy but strewn with sharper lumps up to 60 mm.
pub fn rocks_heightfield() -> Heightfield {
    Heightfield::from_fn(401, 401, 0.015, |x, y| {
        0.030
            * ((50.0 * x).sin() * (45.0 * y).cos()
                + (35.0 * x + 0.9).sin() * (29.0 * y + 2.1).sin())
    })
    .expect("rocks heightfield parameters are valid")
}
