//! Scenario execution: simulate, collect run statistics, and write the
//! trajectory CSV and summary JSON.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::UnitQuaternion;
use serde::Serialize;

use crate::dynamics::{
    detect_contacts, mechanical_energy_with_contacts, rolling_slip_residual, step_dynamics,
    BodyState, ContactSource,
};
use crate::gait::{
    is_statically_stable, mode_controller, optimize_gait, EvaluationSetup, LocomotionMode,
    DEFAULT_STABILITY_MARGIN_M,
};
use crate::swarm::SwarmWorld;

use super::config::pattern_to_config;
use super::{Scenario, ScenarioError, ScenarioKind, SwarmSetup};

/// Headline statistics of one run. Serialized as the summary JSON.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    /// Net horizontal displacement of the body (swarm: of the swarm
    /// centroid, in 3D), m.
    pub net_displacement: f64,
    /// Net displacement divided by the duration, m/s.
    pub mean_speed: f64,
    /// Largest shell contact-point speed seen during the run, m/s.
    pub max_slip_residual: f64,
    /// Largest single-step mechanical energy change, J. At most ~0 for
    /// unpowered runs.
    pub energy_audit: f64,
    /// Fraction of steps spent statically stable on spine tips.
    pub stance_stability_fraction: f64,
    /// Assembly sizes at the end of a swarm run, largest first.
    pub final_assembly_sizes: Vec<usize>,
}

/// Paired summaries from [`compare`].
#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub a: RunSummary,
    pub b: RunSummary,
    /// b over a; 1.0 when both displacements are zero.
    pub displacement_ratio: f64,
}

fn fmt_f64(value: f64) -> String {
    format!("{value:.9}")
}

const TRAJECTORY_HEADER: &str = "t_s,x_m,y_m,z_m,qw,qx,qy,qz,wx,wy,wz,\
e00_mm,e01_mm,e02_mm,e03_mm,e04_mm,e05_mm,e06_mm,e07_mm,e08_mm,e09_mm,\
e10_mm,e11_mm,e12_mm,e13_mm,mode,n_contacts";

const SWARM_HEADER: &str = "t_s,id,x_m,y_m,z_m,qw,qx,qy,qz,n_edges";

/// Execute a scenario, writing its trajectory CSV and summary JSON under
/// `out_dir` (scenario-relative output paths also resolve against it).
pub fn run(scenario: &Scenario, out_dir: &Path) -> Result<RunSummary, ScenarioError> {
    let trajectory_path = output_path(
        scenario.trajectory_path.as_deref(),
        out_dir,
        &format!("{}_trajectory.csv", scenario.name),
    );
    let summary_path = output_path(
        scenario.summary_path.as_deref(),
        out_dir,
        &format!("{}_summary.json", scenario.name),
    );

    let (summary, csv) = match scenario.kind {
        ScenarioKind::Locomotion => {
            let mode = scenario
                .mode
                .as_ref()
                .ok_or_else(|| ScenarioError::Run("locomotion scenario without a mode".into()))?;
            run_locomotion(scenario, mode)?
        }
        ScenarioKind::Optimize => {
            let (summary, csv, pattern) = run_optimize(scenario)?;
            let pattern_path = output_path(
                None,
                out_dir,
                &format!("{}_optimized_pattern.json", scenario.name),
            );
            let text = serde_json::to_string_pretty(&pattern)
                .map_err(|e| ScenarioError::Run(e.to_string()))?;
            write_atomic(&pattern_path, text.as_bytes())?;
            (summary, csv)
        }
        ScenarioKind::Swarm => {
            let setup = scenario
                .swarm
                .as_ref()
                .ok_or_else(|| ScenarioError::Run("swarm scenario without a swarm section".into()))?;
            run_swarm(scenario, setup)?
        }
    };

    write_atomic(&trajectory_path, csv.as_bytes())?;
    write_summary_json(&summary, &summary_path)?;
    Ok(summary)
}

/// Run two scenarios with identical seeds (the first scenario's seed) and
/// report paired summaries plus the displacement ratio.
pub fn compare(
    a: &Scenario,
    b: &Scenario,
    out_dir: &Path,
) -> Result<CompareReport, ScenarioError> {
    let mut b_seeded = b.clone();
    b_seeded.seed = a.seed;
    let summary_a = run(a, out_dir)?;
    let summary_b = run(&b_seeded, out_dir)?;
    let displacement_ratio =
        if summary_a.net_displacement == 0.0 && summary_b.net_displacement == 0.0 {
            1.0
        } else {
            summary_b.net_displacement / summary_a.net_displacement
        };
    Ok(CompareReport {
        a: summary_a,
        b: summary_b,
        displacement_ratio,
    })
}

/// Serialize a summary to pretty JSON at `path` (atomic).
pub fn write_summary_json(summary: &RunSummary, path: &Path) -> Result<(), ScenarioError> {
    let text =
        serde_json::to_string_pretty(summary).map_err(|e| ScenarioError::Run(e.to_string()))?;
    write_atomic(path, format!("{text}\n").as_bytes())
}

fn output_path(configured: Option<&Path>, out_dir: &Path, default_name: &str) -> PathBuf {
    match configured {
        Some(p) if p.is_absolute() => p.to_path_buf(),
        Some(p) => out_dir.join(p),
        None => out_dir.join(default_name),
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ScenarioError> {
    let io_err = |source: std::io::Error| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
    }
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    let tmp = path.with_file_name(format!("{file_name}.tmp"));
    {
        let mut f = fs::File::create(&tmp).map_err(io_err)?;
        f.write_all(bytes).map_err(io_err)?;
        f.sync_all().map_err(io_err)?;
    }
    fs::rename(&tmp, path).map_err(io_err)
}

fn run_locomotion(
    scenario: &Scenario,
    mode: &LocomotionMode,
) -> Result<(RunSummary, String), ScenarioError> {
    let morphology = &scenario.morphology;
    let terrain = &scenario.terrain;
    let dt = scenario.dt_s;
    let steps = (scenario.duration_s / dt).round().max(1.0) as usize;

    let mut state = BodyState::settled_on_terrain(
        morphology,
        terrain,
        0.0,
        0.0,
        UnitQuaternion::identity(),
    );
    let start = state.position;

    let mut csv = String::with_capacity((steps + 2) * 200);
    csv.push_str(TRAJECTORY_HEADER);
    csv.push('\n');

    let mut max_slip: f64 = 0.0;
    let mut max_energy_gain = f64::NEG_INFINITY;
    let mut previous_energy: Option<f64> = None;
    let mut stable_steps = 0usize;

    for k in 0..=steps {
        let time = k as f64 * dt;
        let contacts = detect_contacts(&state, morphology, terrain);

        let row_mode = mode.name();
        push_trajectory_row(&mut csv, time, &state, row_mode, contacts.len());

        if contacts
            .iter()
            .any(|c| c.source == ContactSource::Shell)
        {
            if let Ok(slip) = rolling_slip_residual(&state, morphology, &contacts) {
                max_slip = max_slip.max(slip);
            }
        }
        let energy = mechanical_energy_with_contacts(&state, morphology, terrain, &contacts);
        if let Some(prev) = previous_energy {
            max_energy_gain = max_energy_gain.max(energy - prev);
        }
        previous_energy = Some(energy);
        if is_statically_stable(&state, morphology, terrain, DEFAULT_STABILITY_MARGIN_M) {
            stable_steps += 1;
        }

        if k == steps {
            break;
        }
        let (drive, rates) = mode_controller(mode, &state, morphology, time)
            .map_err(|e| ScenarioError::Run(e.to_string()))?;
        step_dynamics(&mut state, morphology, terrain, &drive, &rates, dt)
            .map_err(|e| ScenarioError::Run(e.to_string()))?;
    }

    let delta = state.position - start;
    let net_displacement = (delta.x * delta.x + delta.y * delta.y).sqrt();
    let summary = RunSummary {
        net_displacement,
        mean_speed: net_displacement / scenario.duration_s,
        max_slip_residual: max_slip,
        energy_audit: if max_energy_gain.is_finite() {
            max_energy_gain
        } else {
            0.0
        },
        stance_stability_fraction: stable_steps as f64 / (steps + 1) as f64,
        final_assembly_sizes: Vec::new(),
    };
    Ok((summary, csv))
}

fn push_trajectory_row(
    csv: &mut String,
    time: f64,
    state: &BodyState,
    mode: &str,
    n_contacts: usize,
) {
    let q = state.orientation.quaternion();
    let w = state.angular_velocity;
    let _ = write!(
        csv,
        "{},{},{},{},{},{},{},{},{},{},{}",
        fmt_f64(time),
        fmt_f64(state.position.x),
        fmt_f64(state.position.y),
        fmt_f64(state.position.z),
        fmt_f64(q.w),
        fmt_f64(q.i),
        fmt_f64(q.j),
        fmt_f64(q.k),
        fmt_f64(w.x),
        fmt_f64(w.y),
        fmt_f64(w.z),
    );
    for e in state.extensions_mm() {
        let _ = write!(csv, ",{}", fmt_f64(e));
    }
    let _ = writeln!(csv, ",{mode},{n_contacts}");
}

fn run_optimize(
    scenario: &Scenario,
) -> Result<(RunSummary, String, super::config::PatternConfig), ScenarioError> {
    let mode = scenario
        .mode
        .as_ref()
        .ok_or_else(|| ScenarioError::Run("optimize scenario without a mode".into()))?;
    let (initial, drive) = match mode {
        LocomotionMode::Walk { pattern } => (pattern, None),
        LocomotionMode::Hybrid { drive, pattern } => (pattern, Some(*drive)),
        LocomotionMode::Roll { .. } => {
            return Err(ScenarioError::Run(
                "optimize scenarios need a walk or hybrid mode".into(),
            ))
        }
    };
    let setup = EvaluationSetup {
        morphology: scenario.morphology.clone(),
        terrain: scenario.terrain.clone(),
        drive,
        horizon_s: scenario.duration_s,
        dt_s: scenario.dt_s,
    };
    let result = optimize_gait(initial, &setup, scenario.budget, scenario.seed);
    let optimized_mode = match drive {
        None => LocomotionMode::Walk {
            pattern: result.pattern.clone(),
        },
        Some(drive) => LocomotionMode::Hybrid {
            drive,
            pattern: result.pattern.clone(),
        },
    };
    let (summary, csv) = run_locomotion(scenario, &optimized_mode)?;
    Ok((summary, csv, pattern_to_config(&result.pattern)))
}

fn run_swarm(
    scenario: &Scenario,
    setup: &SwarmSetup,
) -> Result<(RunSummary, String), ScenarioError> {
    let mut world = SwarmWorld::new(scenario.morphology.clone(), setup.latch_radius_m);
    for particle in &setup.particles {
        world
            .add_particle(particle.clone())
            .map_err(|e| ScenarioError::Run(e.to_string()))?;
    }
    let dt = scenario.dt_s;
    let steps = (scenario.duration_s / dt).round().max(1.0) as usize;

    let centroid = |world: &SwarmWorld| {
        let mut sum = nalgebra::Vector3::zeros();
        for p in world.particles() {
            sum += p.pose.position.coords;
        }
        sum / world.particles().len().max(1) as f64
    };
    let start_centroid = centroid(&world);

    let mut csv = String::with_capacity((steps + 2) * world.particles().len() * 120);
    csv.push_str(SWARM_HEADER);
    csv.push('\n');
    for k in 0..=steps {
        let time = k as f64 * dt;
        for p in world.particles() {
            let q = p.pose.orientation.quaternion();
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{},{},{},{}",
                fmt_f64(time),
                p.id,
                fmt_f64(p.pose.position.x),
                fmt_f64(p.pose.position.y),
                fmt_f64(p.pose.position.z),
                fmt_f64(q.w),
                fmt_f64(q.i),
                fmt_f64(q.j),
                fmt_f64(q.k),
                world.edges().len(),
            );
        }
        if k == steps {
            break;
        }
        world.step(dt);
    }

    let mut sizes: Vec<usize> = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for p in world.particles() {
        if seen.contains(&p.id) {
            continue;
        }
        let assembly = world
            .assembly_of(p.id)
            .map_err(|e| ScenarioError::Run(e.to_string()))?;
        seen.extend(assembly.iter().copied());
        sizes.push(assembly.len());
    }
    sizes.sort_unstable_by(|x, y| y.cmp(x));

    let net_displacement = (centroid(&world) - start_centroid).norm();
    let summary = RunSummary {
        net_displacement,
        mean_speed: net_displacement / scenario.duration_s,
        max_slip_residual: 0.0,
        energy_audit: 0.0,
        stance_stability_fraction: 0.0,
        final_assembly_sizes: sizes,
    };
    Ok((summary, csv))
}
