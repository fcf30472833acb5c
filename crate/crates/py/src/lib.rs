//! Python bindings: the robot's geometry, one actuator, the locomotion
//! simulation, the swarm world, and the scenario runner, driven in-process.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::{Point3, UnitQuaternion, Vector3};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use particle_robot::actuator::{ActuatorState, LinkMode};
use particle_robot::dynamics::{
    detect_contacts, mechanical_energy, rolling_slip_residual, step_dynamics, BodyState,
    DriveCommand, Terrain,
};
use particle_robot::gait::{
    is_statically_stable, mode_controller, GaitPattern, LocomotionMode, Waveform,
};
use particle_robot::morphology::{self, RobotMorphology, SPINE_COUNT};
use particle_robot::pose::Pose;
use particle_robot::scenario;
use particle_robot::swarm::{MotionProgram, SwarmParticle, SwarmWorld};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn terrain_from_name(name: &str, friction: Option<f64>) -> PyResult<Terrain> {
    let mut terrain = scenario::terrain_preset(name)
        .ok_or_else(|| value_err(format!("unknown terrain preset \"{name}\"")))?;
    if let Some(mu) = friction {
        terrain.friction = mu;
    }
    terrain.validate().map_err(value_err)?;
    Ok(terrain)
}

/// Geometric and inertial constants of the robot.
#[pyclass(frozen)]
struct Morphology {
    inner: RobotMorphology,
}

#[pymethods]
impl Morphology {
    /// The reference robot: 260 mm shell, 14 spines, 128 mm stroke.
    #[new]
    fn new() -> Self {
        Self {
            inner: morphology::reference_morphology(),
        }
    }

    #[getter]
    fn outer_diameter_mm(&self) -> f64 {
        self.inner.shell.outer_diameter_mm
    }

    #[getter]
    fn shell_part_count(&self) -> u32 {
        self.inner.shell.shell_part_count
    }

    #[getter]
    fn spine_count(&self) -> usize {
        self.inner.spine_directions.len()
    }

    #[getter]
    fn base_height_mm(&self) -> f64 {
        self.inner.spine.base_height_mm
    }

    #[getter]
    fn stroke_mm(&self) -> f64 {
        self.inner.spine.stroke_mm
    }

    #[getter]
    fn extended_length_mm(&self) -> f64 {
        self.inner.spine.extended_length_mm
    }

    #[getter]
    fn extension_ratio(&self) -> f64 {
        self.inner.spine.extension_ratio()
    }

    #[getter]
    fn max_rate_mm_s(&self) -> f64 {
        self.inner.spine.max_rate_mm_s
    }

    #[getter]
    fn mass_total_kg(&self) -> f64 {
        self.inner.mass_total_kg
    }

    #[getter]
    fn pendulum_torque_limit_nm(&self) -> f64 {
        self.inner.pendulum_torque_limit_nm()
    }

    /// Unit direction of each spine in the body frame.
    fn spine_directions(&self) -> Vec<(f64, f64, f64)> {
        self.inner
            .spine_directions
            .iter()
            .map(|d| (d.x, d.y, d.z))
            .collect()
    }

    /// World position (m) of a spine tip for a body at the origin with
    /// identity orientation.
    fn spine_tip_position(&self, index: usize, extension_mm: f64) -> PyResult<(f64, f64, f64)> {
        let tip =
            morphology::spine_tip_position(&Pose::identity(), &self.inner, index, extension_mm)
                .map_err(value_err)?;
        Ok((tip.x, tip.y, tip.z))
    }

    fn __repr__(&self) -> String {
        format!(
            "Morphology(outer_diameter_mm={}, spines={}, stroke_mm={})",
            self.inner.shell.outer_diameter_mm,
            self.inner.spine_directions.len(),
            self.inner.spine.stroke_mm
        )
    }
}

/// One telescopic spine actuator with its rack lock state machine.
#[pyclass]
struct Actuator {
    inner: ActuatorState,
}

#[pymethods]
impl Actuator {
    #[new]
    fn new() -> Self {
        Self {
            inner: ActuatorState::new(&morphology::reference_morphology().spine),
        }
    }

    /// Command a signed extension rate, mm/s (clamped to the rate limit).
    fn command_rate(&mut self, rate_mm_s: f64) {
        self.inner.command_rate(rate_mm_s);
    }

    /// Advance by `dt_s` seconds.
    fn step(&mut self, dt_s: f64) -> PyResult<()> {
        if dt_s <= 0.0 {
            return Err(value_err("dt must be positive"));
        }
        self.inner.step(dt_s);
        Ok(())
    }

    #[getter]
    fn extension_mm(&self) -> f64 {
        self.inner.extension_mm
    }

    #[getter]
    fn commanded_rate_mm_s(&self) -> f64 {
        self.inner.commanded_rate_mm_s
    }

    /// Per-link mode, outermost first: "rigid" or "folded".
    fn link_modes(&self) -> Vec<&'static str> {
        self.inner
            .links
            .iter()
            .map(|l| match l.mode {
                LinkMode::Rigid => "rigid",
                LinkMode::Folded => "folded",
            })
            .collect()
    }

    /// Check the rigid-prefix and lock-arm invariants.
    fn lock_state_audit(&self) -> bool {
        self.inner.lock_state_audit()
    }

    fn __repr__(&self) -> String {
        format!(
            "Actuator(extension_mm={:.2}, rate_mm_s={:.1}, links={})",
            self.inner.extension_mm,
            self.inner.commanded_rate_mm_s,
            self.inner.links.len()
        )
    }
}

fn pattern_from_py(
    period_s: f64,
    amplitude_mm: f64,
    mid_extension_mm: f64,
    phases_deg: Option<Vec<f64>>,
    active_set: Option<Vec<usize>>,
    waveform: &str,
    morphology: &RobotMorphology,
) -> PyResult<GaitPattern> {
    let mut phases_rad = [0.0; SPINE_COUNT];
    if let Some(degrees) = phases_deg {
        if degrees.len() != SPINE_COUNT {
            return Err(value_err(format!("need {SPINE_COUNT} phases")));
        }
        for (slot, deg) in phases_rad.iter_mut().zip(degrees) {
            *slot = deg.to_radians().rem_euclid(std::f64::consts::TAU);
        }
    }
    let active: BTreeSet<usize> = match active_set {
        Some(list) => list.into_iter().collect(),
        None => (0..SPINE_COUNT).collect(),
    };
    let waveform = match waveform {
        "sine" => Waveform::Sine,
        "triangle" => Waveform::Triangle,
        other => return Err(value_err(format!("unknown waveform \"{other}\""))),
    };
    let pattern = GaitPattern {
        period_s,
        amplitude_mm,
        mid_extension_mm,
        phases_rad,
        active_set: active,
        waveform,
    };
    pattern.validate(morphology).map_err(value_err)?;
    Ok(pattern)
}

/// Fixed-timestep simulation of one robot on terrain.
#[pyclass]
struct Simulation {
    morphology: RobotMorphology,
    terrain: Terrain,
    mode: LocomotionMode,
    state: BodyState,
    time_s: f64,
    dt_s: f64,
}

#[pymethods]
impl Simulation {
    /// Create a simulation on a terrain preset ("flat", "slope15", "snow",
    /// "rocks"), starting at rest with all spines retracted.
    #[new]
    #[pyo3(signature = (terrain="flat", friction=None, dt_ms=1.0))]
    fn new(terrain: &str, friction: Option<f64>, dt_ms: f64) -> PyResult<Self> {
        if !(dt_ms > 0.0 && dt_ms <= 2.0) {
            return Err(value_err("dt_ms must lie in (0, 2]"));
        }
        let morphology = morphology::reference_morphology();
        let terrain = terrain_from_name(terrain, friction)?;
        let state = BodyState::settled_on_terrain(
            &morphology,
            &terrain,
            0.0,
            0.0,
            UnitQuaternion::identity(),
        );
        Ok(Self {
            morphology,
            terrain,
            mode: LocomotionMode::Roll {
                drive: DriveCommand::none(),
            },
            state,
            time_s: 0.0,
            dt_s: dt_ms / 1000.0,
        })
    }

    /// Roll on the internal drive. Torque defaults to the pendulum limit.
    #[pyo3(signature = (torque_nm=None, heading_deg=0.0))]
    fn set_roll(&mut self, torque_nm: Option<f64>, heading_deg: f64) {
        let torque = torque_nm.unwrap_or_else(|| self.morphology.pendulum_torque_limit_nm());
        self.mode = LocomotionMode::Roll {
            drive: DriveCommand::new(torque, heading_deg.to_radians()),
        };
    }

    /// Walk on a periodic spine pattern (angles in degrees).
    #[pyo3(signature = (period_s, amplitude_mm, mid_extension_mm, phases_deg=None, active_set=None, waveform="sine"))]
    fn set_walk(
        &mut self,
        period_s: f64,
        amplitude_mm: f64,
        mid_extension_mm: f64,
        phases_deg: Option<Vec<f64>>,
        active_set: Option<Vec<usize>>,
        waveform: &str,
    ) -> PyResult<()> {
        self.mode = LocomotionMode::Walk {
            pattern: pattern_from_py(
                period_s,
                amplitude_mm,
                mid_extension_mm,
                phases_deg,
                active_set,
                waveform,
                &self.morphology,
            )?,
        };
        Ok(())
    }

    /// Combine the internal drive with a walking pattern.
    #[pyo3(signature = (period_s, amplitude_mm, mid_extension_mm, phases_deg=None, active_set=None, waveform="sine", torque_nm=None, heading_deg=0.0))]
    #[allow(clippy::too_many_arguments)]
    fn set_hybrid(
        &mut self,
        period_s: f64,
        amplitude_mm: f64,
        mid_extension_mm: f64,
        phases_deg: Option<Vec<f64>>,
        active_set: Option<Vec<usize>>,
        waveform: &str,
        torque_nm: Option<f64>,
        heading_deg: f64,
    ) -> PyResult<()> {
        let torque = torque_nm.unwrap_or_else(|| self.morphology.pendulum_torque_limit_nm());
        self.mode = LocomotionMode::Hybrid {
            drive: DriveCommand::new(torque, heading_deg.to_radians()),
            pattern: pattern_from_py(
                period_s,
                amplitude_mm,
                mid_extension_mm,
                phases_deg,
                active_set,
                waveform,
                &self.morphology,
            )?,
        };
        Ok(())
    }

    /// Advance `n` timesteps.
    #[pyo3(signature = (n=1))]
    fn step(&mut self, n: usize) -> PyResult<()> {
        for _ in 0..n {
            let (drive, rates) =
                mode_controller(&self.mode, &self.state, &self.morphology, self.time_s)
                    .map_err(runtime_err)?;
            step_dynamics(
                &mut self.state,
                &self.morphology,
                &self.terrain,
                &drive,
                &rates,
                self.dt_s,
            )
            .map_err(runtime_err)?;
            self.time_s += self.dt_s;
        }
        Ok(())
    }

    #[getter]
    fn time_s(&self) -> f64 {
        self.time_s
    }

    fn position(&self) -> (f64, f64, f64) {
        let p = self.state.position;
        (p.x, p.y, p.z)
    }

    fn velocity(&self) -> (f64, f64, f64) {
        let v = self.state.linear_velocity;
        (v.x, v.y, v.z)
    }

    fn orientation_wxyz(&self) -> (f64, f64, f64, f64) {
        let q = self.state.orientation.quaternion();
        (q.w, q.i, q.j, q.k)
    }

    fn extensions_mm(&self) -> Vec<f64> {
        self.state.extensions_mm().to_vec()
    }

    fn contact_count(&self) -> usize {
        detect_contacts(&self.state, &self.morphology, &self.terrain).len()
    }

    /// Shell contact-point speed, m/s; None without a shell contact.
    fn slip_residual(&self) -> Option<f64> {
        let contacts = detect_contacts(&self.state, &self.morphology, &self.terrain);
        rolling_slip_residual(&self.state, &self.morphology, &contacts).ok()
    }

    fn mechanical_energy(&self) -> f64 {
        mechanical_energy(&self.state, &self.morphology, &self.terrain)
    }

    /// Static stability of the current stance at the given margin.
    #[pyo3(signature = (margin_mm=10.0))]
    fn statically_stable(&self, margin_mm: f64) -> bool {
        is_statically_stable(
            &self.state,
            &self.morphology,
            &self.terrain,
            margin_mm / 1000.0,
        )
    }

    fn __repr__(&self) -> String {
        let p = self.state.position;
        format!(
            "Simulation(t={:.3} s, mode={}, position=({:.3}, {:.3}, {:.3}))",
            self.time_s,
            self.mode.name(),
            p.x,
            p.y,
            p.z
        )
    }
}

/// Gravity-free kinematic swarm of particles with tip latching.
#[pyclass]
struct Swarm {
    world: SwarmWorld,
    dt_s: f64,
}

#[pymethods]
impl Swarm {
    #[new]
    #[pyo3(signature = (latch_radius_mm=5.0, dt_ms=1.0))]
    fn new(latch_radius_mm: f64, dt_ms: f64) -> PyResult<Self> {
        if latch_radius_mm <= 0.0 || dt_ms <= 0.0 {
            return Err(value_err("latch radius and dt must be positive"));
        }
        Ok(Self {
            world: SwarmWorld::new(
                morphology::reference_morphology(),
                latch_radius_mm / 1000.0,
            ),
            dt_s: dt_ms / 1000.0,
        })
    }

    #[pyo3(signature = (id, position_m, rpy_deg=(0.0, 0.0, 0.0)))]
    fn add_particle(
        &mut self,
        id: usize,
        position_m: (f64, f64, f64),
        rpy_deg: (f64, f64, f64),
    ) -> PyResult<()> {
        let pose = Pose::new(
            Point3::new(position_m.0, position_m.1, position_m.2),
            UnitQuaternion::from_euler_angles(
                rpy_deg.0.to_radians(),
                rpy_deg.1.to_radians(),
                rpy_deg.2.to_radians(),
            ),
        );
        self.world
            .add_particle(SwarmParticle::new(id, pose))
            .map_err(value_err)
    }

    fn set_extension(&mut self, id: usize, spine: usize, extension_mm: f64) -> PyResult<()> {
        if spine >= SPINE_COUNT {
            return Err(value_err("spine index out of range"));
        }
        let mut extensions = self.world.particle(id).map_err(value_err)?.extensions_mm;
        extensions[spine] = extension_mm;
        self.world.set_extensions(id, extensions).map_err(value_err)
    }

    #[pyo3(signature = (id, target_m, speed_m_s, target_rpy_deg=(0.0, 0.0, 0.0), angular_speed_deg_s=0.0))]
    fn set_to_pose(
        &mut self,
        id: usize,
        target_m: (f64, f64, f64),
        speed_m_s: f64,
        target_rpy_deg: (f64, f64, f64),
        angular_speed_deg_s: f64,
    ) -> PyResult<()> {
        let target = Pose::new(
            Point3::new(target_m.0, target_m.1, target_m.2),
            UnitQuaternion::from_euler_angles(
                target_rpy_deg.0.to_radians(),
                target_rpy_deg.1.to_radians(),
                target_rpy_deg.2.to_radians(),
            ),
        );
        self.world
            .set_program(
                id,
                MotionProgram::ToPose {
                    target,
                    speed_m_s,
                    angular_speed_rad_s: angular_speed_deg_s.to_radians(),
                },
            )
            .map_err(value_err)
    }

    fn set_oscillate(
        &mut self,
        id: usize,
        frequency_hz: f64,
        axis: (f64, f64, f64),
        speed_m_s: f64,
    ) -> PyResult<()> {
        let axis = Vector3::new(axis.0, axis.1, axis.2);
        if axis.norm() < 1e-9 {
            return Err(value_err("axis must be non-zero"));
        }
        self.world
            .set_program(
                id,
                MotionProgram::Oscillate {
                    frequency_hz,
                    axis: axis.normalize(),
                    speed_m_s,
                },
            )
            .map_err(value_err)
    }

    fn set_magnet(&mut self, id: usize, spine: usize, enabled: bool) -> PyResult<()> {
        self.world.set_magnet(id, spine, enabled).map_err(value_err)
    }

    #[pyo3(signature = (n=1))]
    fn step(&mut self, n: usize) {
        for _ in 0..n {
            self.world.step(self.dt_s);
        }
    }

    fn position(&self, id: usize) -> PyResult<(f64, f64, f64)> {
        let p = self.world.particle(id).map_err(value_err)?.pose.position;
        Ok((p.x, p.y, p.z))
    }

    /// Latch edges as ((id, spine), (id, spine)) pairs.
    fn edges(&self) -> Vec<((usize, usize), (usize, usize))> {
        self.world.edges().iter().map(|e| (e.a, e.b)).collect()
    }

    fn assembly_of(&self, id: usize) -> PyResult<Vec<usize>> {
        Ok(self
            .world
            .assembly_of(id)
            .map_err(value_err)?
            .into_iter()
            .collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Swarm(particles={}, edges={})",
            self.world.particles().len(),
            self.world.edges().len()
        )
    }
}

/// The four highly-extendable linear actuator families, as dicts.
#[pyfunction]
fn actuator_catalog(py: Python<'_>) -> PyResult<Vec<Py<PyAny>>> {
    use pyo3::types::PyDict;
    morphology::actuator_catalog()
        .into_iter()
        .map(|entry| {
            let d = PyDict::new(py);
            d.set_item("name", entry.name)?;
            d.set_item("chain_count", entry.chain_count)?;
            d.set_item("speed_mm_s", entry.speed_mm_s)?;
            d.set_item("locked_axes", entry.locked_axes)?;
            Ok(d.into_any().unbind())
        })
        .collect()
}

/// Run a scenario file like the CLI `run` subcommand; returns the summary
/// as a JSON string. Output files land in `out_dir`.
#[pyfunction]
fn run_scenario(path: &str, out_dir: &str) -> PyResult<String> {
    let scenario = scenario::load_scenario(Path::new(path)).map_err(value_err)?;
    let summary = scenario::run(&scenario, Path::new(out_dir)).map_err(runtime_err)?;
    serde_json::to_string(&summary).map_err(runtime_err)
}

/// Run two scenario files with identical seeds; returns the compare report
/// as a JSON string.
#[pyfunction]
fn compare_scenarios(path_a: &str, path_b: &str, out_dir: &str) -> PyResult<String> {
    let a = scenario::load_scenario(Path::new(path_a)).map_err(value_err)?;
    let b = scenario::load_scenario(Path::new(path_b)).map_err(value_err)?;
    let report = scenario::compare(&a, &b, Path::new(out_dir)).map_err(runtime_err)?;
    serde_json::to_string(&report).map_err(runtime_err)
}

#[pymodule]
fn particle_robot_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("SPINE_COUNT", SPINE_COUNT)?;
    m.add_class::<Morphology>()?;
    m.add_class::<Actuator>()?;
    m.add_class::<Simulation>()?;
    m.add_class::<Swarm>()?;
    m.add_function(wrap_pyfunction!(actuator_catalog, m)?)?;
    m.add_function(wrap_pyfunction!(run_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(compare_scenarios, m)?)?;
    Ok(())
}
