//! JSON schema of scenario files and its resolution into a [`Scenario`].

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use nalgebra::{Point3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::{DriveCommand, Heightfield, Terrain, TerrainKind};
use crate::gait::{GaitPattern, LocomotionMode, Waveform};
use crate::morphology::{reference_morphology, RobotMorphology, SPINE_COUNT};
use crate::pose::Pose;
use crate::swarm::{MotionProgram, SwarmParticle, DEFAULT_LATCH_RADIUS_M};
use crate::units::mm_to_m;

use super::{invalid, terrain_preset, Scenario, ScenarioError, ScenarioKind, SwarmSetup, MAX_DT_MS};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioConfig {
    kind: KindConfig,
    duration_s: f64,
    #[serde(default = "default_dt_ms")]
    dt_ms: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    morphology: Option<MorphologyConfig>,
    #[serde(default)]
    terrain: Option<TerrainConfig>,
    #[serde(default)]
    mode: Option<ModeConfig>,
    #[serde(default)]
    swarm: Option<SwarmConfig>,
    #[serde(default)]
    optimize: Option<OptimizeConfig>,
    #[serde(default)]
    output: Option<OutputConfig>,
}

fn default_dt_ms() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KindConfig {
    Locomotion,
    Swarm,
    Optimize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MorphologyConfig {
    mass_total_kg: Option<f64>,
    inner_mass_fraction: Option<f64>,
    pendulum_arm_mm: Option<f64>,
    inertia_factor: Option<f64>,
    link_pitch_mm: Option<f64>,
    max_rate_mm_s: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TerrainConfig {
    /// One of "flat", "slope15", "snow", "rocks".
    preset: Option<String>,
    kind: Option<TerrainKindConfig>,
    friction: Option<f64>,
    contact_stiffness: Option<f64>,
    contact_damping: Option<f64>,
    tangential_damping: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum TerrainKindConfig {
    Flat,
    Slope { angle_deg: f64 },
    Heightfield { file: PathBuf },
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum ModeConfig {
    Roll {
        drive_torque_nm: Option<f64>,
        #[serde(default)]
        heading_deg: f64,
    },
    Walk {
        pattern: PatternConfig,
    },
    Hybrid {
        drive_torque_nm: Option<f64>,
        #[serde(default)]
        heading_deg: f64,
        pattern: PatternConfig,
    },
}

/// Gait pattern as written in scenario files (angles in degrees).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternConfig {
    pub period_s: f64,
    pub amplitude_mm: f64,
    pub mid_extension_mm: f64,
    /// Exactly 14 entries when present; defaults to all zeros.
    #[serde(default)]
    pub phases_deg: Option<Vec<f64>>,
    /// Defaults to every spine.
    #[serde(default)]
    pub active_set: Option<Vec<usize>>,
    /// "sine" (default) or "triangle".
    #[serde(default)]
    pub waveform: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SwarmConfig {
    latch_radius_mm: Option<f64>,
    particles: Vec<ParticleConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParticleConfig {
    id: Option<usize>,
    position_m: [f64; 3],
    #[serde(default)]
    orientation_rpy_deg: [f64; 3],
    extensions_mm: Option<Vec<f64>>,
    #[serde(default)]
    program: Option<ProgramConfig>,
    /// Master switch for all 14 electromagnets.
    magnets_on: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
enum ProgramConfig {
    Hold,
    ToPose {
        position_m: [f64; 3],
        #[serde(default)]
        orientation_rpy_deg: [f64; 3],
        speed_m_s: f64,
        #[serde(default)]
        angular_speed_deg_s: f64,
    },
    Oscillate {
        frequency_hz: f64,
        axis: [f64; 3],
        speed_m_s: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OptimizeConfig {
    budget: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct OutputConfig {
    trajectory: Option<PathBuf>,
    summary: Option<PathBuf>,
}

/// Load and validate a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base_dir = path.parent().unwrap_or_else(|| Path::new("."));
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    load_scenario_str(&text, base_dir, &name).map_err(|e| match e {
        ScenarioError::Parse { detail, .. } => ScenarioError::Parse {
            path: path.to_path_buf(),
            detail,
        },
        other => other,
    })
}

/// Load a scenario from JSON text. Relative heightfield paths resolve
/// against `base_dir`.
pub fn load_scenario_str(
    text: &str,
    base_dir: &Path,
    name: &str,
) -> Result<Scenario, ScenarioError> {
    let config: ScenarioConfig =
        serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            path: PathBuf::new(),
            detail: e.to_string(),
        })?;
    resolve(config, base_dir, name)
}

fn resolve(config: ScenarioConfig, base_dir: &Path, name: &str) -> Result<Scenario, ScenarioError> {
    if config.duration_s <= 0.0 || config.duration_s.is_nan() {
        return Err(invalid("duration_s", "duration must be positive"));
    }
    if !(config.dt_ms > 0.0 && config.dt_ms <= MAX_DT_MS) {
        return Err(invalid(
            "dt_ms",
            format!("dt must lie in (0, {MAX_DT_MS}] ms, got {}", config.dt_ms),
        ));
    }

    let morphology = resolve_morphology(config.morphology.as_ref())?;
    let terrain = resolve_terrain(config.terrain.as_ref(), base_dir)?;

    let kind = match config.kind {
        KindConfig::Locomotion => ScenarioKind::Locomotion,
        KindConfig::Swarm => ScenarioKind::Swarm,
        KindConfig::Optimize => ScenarioKind::Optimize,
    };

    let mode = match (&kind, config.mode.as_ref()) {
        (ScenarioKind::Swarm, _) => None,
        (_, None) => return Err(invalid("mode", "locomotion/optimize scenarios need a mode")),
        (_, Some(mode_config)) => Some(resolve_mode(mode_config, &morphology)?),
    };
    if kind == ScenarioKind::Optimize
        && matches!(mode, Some(LocomotionMode::Roll { .. }))
    {
        return Err(invalid("mode", "optimize scenarios need a walk or hybrid mode"));
    }

    let swarm = match (&kind, config.swarm) {
        (ScenarioKind::Swarm, None) => {
            return Err(invalid("swarm", "swarm scenarios need a swarm section"))
        }
        (ScenarioKind::Swarm, Some(sc)) => Some(resolve_swarm(sc, &morphology)?),
        (_, _) => None,
    };

    let (trajectory_path, summary_path) = match config.output {
        Some(out) => (out.trajectory, out.summary),
        None => (None, None),
    };

    Ok(Scenario {
        name: name.to_string(),
        kind,
        morphology,
        terrain,
        mode,
        swarm,
        duration_s: config.duration_s,
        dt_s: config.dt_ms / 1000.0,
        seed: config.seed,
        budget: config.optimize.map(|o| o.budget).unwrap_or(200),
        trajectory_path,
        summary_path,
    })
}

fn resolve_morphology(config: Option<&MorphologyConfig>) -> Result<RobotMorphology, ScenarioError> {
    let mut m = reference_morphology();
    if let Some(c) = config {
        if let Some(v) = c.mass_total_kg {
            m.mass_total_kg = v;
        }
        if let Some(v) = c.inner_mass_fraction {
            m.inner_mass_fraction = v;
        }
        if let Some(v) = c.pendulum_arm_mm {
            m.pendulum_arm_mm = v;
        }
        if let Some(v) = c.inertia_factor {
            m.inertia_factor = v;
        }
        if let Some(v) = c.link_pitch_mm {
            m.spine.link_pitch_mm = v;
        }
        if let Some(v) = c.max_rate_mm_s {
            m.spine.max_rate_mm_s = v;
        }
    }
    m.validate()
        .map_err(|e| invalid("morphology", e.to_string()))?;
    Ok(m)
}

fn resolve_terrain(
    config: Option<&TerrainConfig>,
    base_dir: &Path,
) -> Result<Terrain, ScenarioError> {
    let Some(c) = config else {
        return Ok(Terrain::flat(0.8));
    };
    let mut terrain = match (&c.preset, &c.kind) {
        (Some(_), Some(_)) => {
            return Err(invalid("terrain", "give either a preset or a kind, not both"))
        }
        (Some(preset), None) => terrain_preset(preset)
            .ok_or_else(|| invalid("terrain.preset", format!("unknown preset \"{preset}\"")))?,
        (None, Some(kind)) => {
            let kind = match kind {
                TerrainKindConfig::Flat => TerrainKind::Flat,
                TerrainKindConfig::Slope { angle_deg } => TerrainKind::Slope {
                    angle_rad: angle_deg.to_radians(),
                },
                TerrainKindConfig::Heightfield { file } => {
                    let path = if file.is_absolute() {
                        file.clone()
                    } else {
                        base_dir.join(file)
                    };
                    if !path.exists() {
                        return Err(invalid(
                            "terrain.kind.heightfield.file",
                            format!("{} does not exist", path.display()),
                        ));
                    }
                    TerrainKind::Heightfield(
                        Heightfield::load(&path)
                            .map_err(|e| invalid("terrain.kind.heightfield", e.to_string()))?,
                    )
                }
            };
            Terrain::new(kind, 0.8)
        }
        (None, None) => Terrain::flat(0.8),
    };
    if let Some(v) = c.friction {
        terrain.friction = v;
    }
    if let Some(v) = c.contact_stiffness {
        terrain.contact_stiffness = v;
    }
    if let Some(v) = c.contact_damping {
        terrain.contact_damping = v;
    }
    if let Some(v) = c.tangential_damping {
        terrain.tangential_damping = v;
    }
    terrain
        .validate()
        .map_err(|e| invalid("terrain", e.to_string()))?;
    Ok(terrain)
}

fn resolve_mode(
    config: &ModeConfig,
    morphology: &RobotMorphology,
) -> Result<LocomotionMode, ScenarioError> {
    let drive = |torque: Option<f64>, heading_deg: f64| {
        DriveCommand::new(
            torque.unwrap_or_else(|| morphology.pendulum_torque_limit_nm()),
            heading_deg.to_radians(),
        )
    };
    Ok(match config {
        ModeConfig::Roll {
            drive_torque_nm,
            heading_deg,
        } => LocomotionMode::Roll {
            drive: drive(*drive_torque_nm, *heading_deg),
        },
        ModeConfig::Walk { pattern } => LocomotionMode::Walk {
            pattern: resolve_pattern(pattern, morphology)?,
        },
        ModeConfig::Hybrid {
            drive_torque_nm,
            heading_deg,
            pattern,
        } => LocomotionMode::Hybrid {
            drive: drive(*drive_torque_nm, *heading_deg),
            pattern: resolve_pattern(pattern, morphology)?,
        },
    })
}

fn resolve_pattern(
    config: &PatternConfig,
    morphology: &RobotMorphology,
) -> Result<GaitPattern, ScenarioError> {
    let phases_rad = match &config.phases_deg {
        None => [0.0; SPINE_COUNT],
        Some(list) => {
            if list.len() != SPINE_COUNT {
                return Err(invalid(
                    "mode.pattern.phases_deg",
                    format!("expected {SPINE_COUNT} phases, got {}", list.len()),
                ));
            }
            let mut phases = [0.0; SPINE_COUNT];
            for (p, deg) in phases.iter_mut().zip(list) {
                *p = deg.to_radians().rem_euclid(std::f64::consts::TAU);
            }
            phases
        }
    };
    let active_set: BTreeSet<usize> = match &config.active_set {
        None => (0..SPINE_COUNT).collect(),
        Some(list) => list.iter().copied().collect(),
    };
    let waveform = match config.waveform.as_deref() {
        None | Some("sine") => Waveform::Sine,
        Some("triangle") => Waveform::Triangle,
        Some(other) => {
            return Err(invalid(
                "mode.pattern.waveform",
                format!("unknown waveform \"{other}\" (use \"sine\" or \"triangle\")"),
            ))
        }
    };
    let pattern = GaitPattern {
        period_s: config.period_s,
        amplitude_mm: config.amplitude_mm,
        mid_extension_mm: config.mid_extension_mm,
        phases_rad,
        active_set,
        waveform,
    };
    pattern
        .validate(morphology)
        .map_err(|e| invalid("mode.pattern", e.to_string()))?;
    Ok(pattern)
}

/// Serialize a pattern back into the file representation (degrees).
pub fn pattern_to_config(pattern: &GaitPattern) -> PatternConfig {
    PatternConfig {
        period_s: pattern.period_s,
        amplitude_mm: pattern.amplitude_mm,
        mid_extension_mm: pattern.mid_extension_mm,
        phases_deg: Some(pattern.phases_rad.iter().map(|p| p.to_degrees()).collect()),
        active_set: Some(pattern.active_set.iter().copied().collect()),
        waveform: Some(
            match pattern.waveform {
                Waveform::Sine => "sine",
                Waveform::Triangle => "triangle",
            }
            .to_string(),
        ),
    }
}

fn resolve_swarm(
    config: SwarmConfig,
    morphology: &RobotMorphology,
) -> Result<SwarmSetup, ScenarioError> {
    let latch_radius_m = match config.latch_radius_mm {
        Some(mm) if mm > 0.0 => mm_to_m(mm),
        Some(mm) => {
            return Err(invalid(
                "swarm.latch_radius_mm",
                format!("latch radius must be positive, got {mm}"),
            ))
        }
        None => DEFAULT_LATCH_RADIUS_M,
    };
    let mut particles = Vec::with_capacity(config.particles.len());
    for (index, pc) in config.particles.into_iter().enumerate() {
        let id = pc.id.unwrap_or(index);
        let [roll, pitch, yaw] = pc.orientation_rpy_deg;
        let pose = Pose::new(
            Point3::new(pc.position_m[0], pc.position_m[1], pc.position_m[2]),
            UnitQuaternion::from_euler_angles(
                roll.to_radians(),
                pitch.to_radians(),
                yaw.to_radians(),
            ),
        );
        let mut particle = SwarmParticle::new(id, pose);
        if let Some(ext) = pc.extensions_mm {
            if ext.len() != SPINE_COUNT {
                return Err(invalid(
                    "swarm.particles.extensions_mm",
                    format!("expected {SPINE_COUNT} extensions, got {}", ext.len()),
                ));
            }
            for (slot, value) in particle.extensions_mm.iter_mut().zip(ext) {
                *slot = value;
            }
        }
        if let Some(on) = pc.magnets_on {
            particle.magnets_enabled = [on; SPINE_COUNT];
        }
        if let Some(program) = pc.program {
            particle.program = resolve_program(program);
        }
        let stroke = morphology.spine.stroke_mm;
        if particle
            .extensions_mm
            .iter()
            .any(|e| !(0.0..=stroke).contains(e))
        {
            return Err(invalid(
                "swarm.particles.extensions_mm",
                format!("extensions must lie in [0, {stroke}] mm"),
            ));
        }
        particles.push(particle);
    }
    Ok(SwarmSetup {
        latch_radius_m,
        particles,
    })
}

fn resolve_program(config: ProgramConfig) -> MotionProgram {
    match config {
        ProgramConfig::Hold => MotionProgram::Hold,
        ProgramConfig::ToPose {
            position_m,
            orientation_rpy_deg,
            speed_m_s,
            angular_speed_deg_s,
        } => {
            let [roll, pitch, yaw] = orientation_rpy_deg;
            MotionProgram::ToPose {
                target: Pose::new(
                    Point3::new(position_m[0], position_m[1], position_m[2]),
                    UnitQuaternion::from_euler_angles(
                        roll.to_radians(),
                        pitch.to_radians(),
                        yaw.to_radians(),
                    ),
                ),
                speed_m_s,
                angular_speed_rad_s: angular_speed_deg_s.to_radians(),
            }
        }
        ProgramConfig::Oscillate {
            frequency_hz,
            axis,
            speed_m_s,
        } => MotionProgram::Oscillate {
            frequency_hz,
            axis: Vector3::new(axis[0], axis[1], axis[2]).normalize(),
            speed_m_s,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::TerrainKind;

    fn load(json: &str) -> Result<Scenario, ScenarioError> {
        load_scenario_str(json, Path::new("."), "test")
    }

    #[test]
    fn minimal_roll_scenario_gets_defaults() {
        let s = load(r#"{"kind": "locomotion", "duration_s": 5.0, "mode": {"roll": {}}}"#)
            .unwrap();
        assert_eq!(s.kind, ScenarioKind::Locomotion);
        assert_eq!(s.dt_s, 0.001);
        assert_eq!(s.seed, 0);
        assert!(matches!(s.terrain.kind, TerrainKind::Flat));
        assert_eq!(s.terrain.friction, 0.8);
        let Some(LocomotionMode::Roll { drive }) = s.mode else {
            panic!("expected roll mode");
        };
        assert_eq!(drive.torque_nm, s.morphology.pendulum_torque_limit_nm());
    }

    #[test]
    fn out_of_range_dt_is_rejected_by_name() {
        let err = load(r#"{"kind": "locomotion", "duration_s": 5.0, "dt_ms": 5, "mode": {"roll": {}}}"#)
            .unwrap_err();
        let message = err.to_string();
        assert!(message.contains("dt"), "message: {message}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = load(r#"{"kind": "locomotion", "duration_s": 5.0, "mode": {"roll": {}}, "extra": 1}"#)
            .unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { .. }));
    }

    #[test]
    fn snow_preset_expands_to_slippery_heightfield() {
        let s = load(
            r#"{"kind": "locomotion", "duration_s": 5.0, "mode": {"roll": {}},
                "terrain": {"preset": "snow"}}"#,
        )
        .unwrap();
        assert_eq!(s.terrain.friction, 0.05);
        let TerrainKind::Heightfield(hf) = &s.terrain.kind else {
            panic!("snow should be a heightfield");
        };
        // Lump amplitude reaches about 40 mm somewhere on the grid.
        let max = hf.heights_m.iter().cloned().fold(f64::MIN, f64::max);
        assert!(max > 0.035 && max <= 0.0401, "max lump height {max}");
    }

    #[test]
    fn walk_pattern_parses_degrees_and_validates() {
        let s = load(
            r#"{"kind": "locomotion", "duration_s": 2.0,
                "mode": {"walk": {"pattern": {
                    "period_s": 1.0, "amplitude_mm": 30.0, "mid_extension_mm": 60.0,
                    "phases_deg": [0,0,0,0,0,90,180,0,0,0,0,0,0,270],
                    "active_set": [5, 6, 13], "waveform": "triangle"}}}}"#,
        )
        .unwrap();
        let Some(LocomotionMode::Walk { pattern }) = s.mode else {
            panic!("expected walk");
        };
        assert_eq!(pattern.phases_rad[5], std::f64::consts::FRAC_PI_2);
        assert_eq!(pattern.phases_rad[13], 1.5 * std::f64::consts::PI);
        assert_eq!(pattern.active_set.len(), 3);
        assert_eq!(pattern.waveform, Waveform::Triangle);

        let err = load(
            r#"{"kind": "locomotion", "duration_s": 2.0,
                "mode": {"walk": {"pattern": {
                    "period_s": 1.0, "amplitude_mm": 90.0, "mid_extension_mm": 60.0}}}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("pattern"));
    }

    #[test]
    fn missing_heightfield_file_fails_at_load() {
        let err = load(
            r#"{"kind": "locomotion", "duration_s": 2.0, "mode": {"roll": {}},
                "terrain": {"kind": {"heightfield": {"file": "no_such_grid.txt"}}}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("does not exist"));
    }

    #[test]
    fn swarm_scenario_builds_particles() {
        let s = load(
            r#"{"kind": "swarm", "duration_s": 3.0,
                "swarm": {"latch_radius_mm": 5.0, "particles": [
                  {"position_m": [0,0,0],
                   "program": {"to_pose": {"position_m": [0.2,0,0], "speed_m_s": 0.1}}},
                  {"position_m": [0.6,0,0], "orientation_rpy_deg": [0,0,180]}
                ]}}"#,
        )
        .unwrap();
        let swarm = s.swarm.unwrap();
        assert_eq!(swarm.particles.len(), 2);
        assert_eq!(swarm.particles[0].id, 0);
        assert_eq!(swarm.particles[1].id, 1);
        assert!(matches!(
            swarm.particles[0].program,
            MotionProgram::ToPose { .. }
        ));
        assert!((swarm.latch_radius_m - 0.005).abs() < 1e-12);
    }

    #[test]
    fn morphology_overrides_apply_and_validate() {
        let s = load(
            r#"{"kind": "locomotion", "duration_s": 1.0, "mode": {"roll": {}},
                "morphology": {"mass_total_kg": 3.0, "pendulum_arm_mm": 100.0}}"#,
        )
        .unwrap();
        assert_eq!(s.morphology.mass_total_kg, 3.0);
        assert_eq!(s.morphology.pendulum_arm_mm, 100.0);

        let err = load(
            r#"{"kind": "locomotion", "duration_s": 1.0, "mode": {"roll": {}},
                "morphology": {"inner_mass_fraction": 1.5}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("morphology"));
    }
}
