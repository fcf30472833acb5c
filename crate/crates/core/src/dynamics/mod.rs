//! Fixed-timestep rigid-body simulation of one robot on terrain.
//!
//! One semi-implicit Euler step: accumulate gravity, penalty contact forces
//! and the saturated internal drive torque; integrate velocities, then pose;
//! renormalize the orientation; step the 14 spine actuators. Everything is
//! plain f64 arithmetic in a fixed order, so trajectories are bit-identical
//! across runs.

mod contact;
pub mod terrain;

pub use contact::{
    contact_forces, contact_point_velocity, detect_contacts, ContactPoint, ContactSource,
    SHIELD_CONE_DEG, SHIELD_MIN_EXTENSION_MM,
};
pub use terrain::{Heightfield, Terrain, TerrainKind};

use nalgebra::{Point3, UnitQuaternion, Vector3};
use thiserror::Error;

use crate::actuator::ActuatorState;
use crate::morphology::{RobotMorphology, SPINE_COUNT};
use crate::pose::Pose;
use crate::units::GRAVITY_M_S2;

/// Upper bound on the integration timestep, s.
pub const MAX_TIMESTEP_S: f64 = 0.002;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("timestep {0} s outside (0, {MAX_TIMESTEP_S}] s")]
    InvalidTimestep(f64),
    #[error("simulation diverged at t={time_s} s: {detail}")]
    NonFiniteState { time_s: f64, detail: String },
    #[error("no shell contact to measure slip against")]
    NoShellContact,
    #[error("invalid terrain: {0}")]
    InvalidTerrain(String),
}

/// Full dynamic state of one robot.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyState {
    /// Center of the shell in world frame, m.
    pub position: Point3<f64>,
    /// Body-to-world rotation, renormalized every step.
    pub orientation: UnitQuaternion<f64>,
    /// m/s, world frame.
    pub linear_velocity: Vector3<f64>,
    /// rad/s, world frame.
    pub angular_velocity: Vector3<f64>,
    /// Per-spine actuator states; extensions live here.
    pub actuators: [ActuatorState; SPINE_COUNT],
}

impl BodyState {
    /// Body at rest with all spines retracted.
    pub fn at_rest(pose: Pose, morphology: &RobotMorphology) -> Self {
        Self {
            position: pose.position,
            orientation: pose.orientation,
            linear_velocity: Vector3::zeros(),
            angular_velocity: Vector3::zeros(),
            actuators: std::array::from_fn(|_| ActuatorState::new(&morphology.spine)),
        }
    }

    /// Body resting on the terrain at (x, y) with the shell penetration that
    /// balances gravity, so a zero-drive simulation starts in equilibrium.
    pub fn settled_on_terrain(
        morphology: &RobotMorphology,
        terrain: &Terrain,
        x: f64,
        y: f64,
        orientation: UnitQuaternion<f64>,
    ) -> Self {
        let (height, normal) = terrain.surface(x, y);
        let weight = morphology.mass_total_kg * GRAVITY_M_S2;
        let settle = weight / terrain.contact_stiffness;
        let center = Point3::new(x, y, height) + normal * (morphology.outer_radius_m() - settle);
        Self::at_rest(
            Pose::new(center, orientation),
            morphology,
        )
    }

    pub fn pose(&self) -> Pose {
        Pose::new(self.position, self.orientation)
    }

    /// Current spine extensions, mm. Mirrors the actuator states exactly.
    pub fn extensions_mm(&self) -> [f64; SPINE_COUNT] {
        std::array::from_fn(|i| self.actuators[i].extension_mm)
    }

    /// World position of a spine tip at its current extension.
    pub fn spine_tip(&self, morphology: &RobotMorphology, index: usize) -> Point3<f64> {
        let reach =
            morphology.outer_radius_m() + crate::units::mm_to_m(self.actuators[index].extension_mm);
        self.position + (self.orientation * morphology.spine_directions[index]) * reach
    }

    pub fn is_finite(&self) -> bool {
        self.position.coords.iter().all(|v| v.is_finite())
            && self.orientation.coords.iter().all(|v| v.is_finite())
            && self.linear_velocity.iter().all(|v| v.is_finite())
            && self.angular_velocity.iter().all(|v| v.is_finite())
            && self.actuators.iter().all(|a| a.extension_mm.is_finite())
    }
}

/// Commanded internal drive: a torque magnitude about a horizontal axis
/// chosen so the robot rolls toward `heading_rad` (0 = +x).
///
/// The torque the inner mass can actually exert saturates at the pendulum
/// limit; `step_dynamics` applies the clamp.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveCommand {
    pub torque_nm: f64,
    pub heading_rad: f64,
}

impl DriveCommand {
    pub fn new(torque_nm: f64, heading_rad: f64) -> Self {
        Self {
            torque_nm,
            heading_rad,
        }
    }

    pub fn none() -> Self {
        Self::new(0.0, 0.0)
    }
}

/// World-frame drive torque after pendulum saturation.
pub fn drive_torque_vector(cmd: &DriveCommand, morphology: &RobotMorphology) -> Vector3<f64> {
    let limit = morphology.pendulum_torque_limit_nm();
    let torque = cmd.torque_nm.clamp(-limit, limit);
    // Axis perpendicular to the heading so positive torque rolls forward.
    let axis = Vector3::new(-cmd.heading_rad.sin(), cmd.heading_rad.cos(), 0.0);
    axis * torque
}

/// Advance the state by one timestep.
pub fn step_dynamics(
    state: &mut BodyState,
    morphology: &RobotMorphology,
    terrain: &Terrain,
    drive: &DriveCommand,
    spine_rates_mm_s: &[f64; SPINE_COUNT],
    dt_s: f64,
) -> Result<(), DynamicsError> {
    if !(dt_s > 0.0 && dt_s <= MAX_TIMESTEP_S) {
        return Err(DynamicsError::InvalidTimestep(dt_s));
    }

    let mass = morphology.mass_total_kg;
    let inertia = morphology.moment_of_inertia();

    let mut force = Vector3::new(0.0, 0.0, -mass * GRAVITY_M_S2);
    let mut torque = drive_torque_vector(drive, morphology);

    let mut contacts = detect_contacts(state, morphology, terrain);
    contact_forces(&mut contacts, state, morphology, terrain);
    for contact in &contacts {
        let f = contact.total_force();
        force += f;
        torque += (contact.location - state.position).cross(&f);
    }

    state.linear_velocity += force * (dt_s / mass);
    state.angular_velocity += torque * (dt_s / inertia);
    state.position += state.linear_velocity * dt_s;
    let delta = UnitQuaternion::from_scaled_axis(state.angular_velocity * dt_s);
    state.orientation =
        UnitQuaternion::new_normalize((delta * state.orientation).into_inner());

    for (actuator, &rate) in state.actuators.iter_mut().zip(spine_rates_mm_s) {
        actuator.command_rate(rate);
        actuator.step(dt_s);
    }

    if !state.is_finite() {
        return Err(DynamicsError::NonFiniteState {
            time_s: f64::NAN,
            detail: format!(
                "position {:?}, velocity {:?}",
                state.position, state.linear_velocity
            ),
        });
    }
    Ok(())
}

/// Speed of the shell surface point at the shell contact, m/s. Near zero
/// means rolling without slipping.
pub fn rolling_slip_residual(
    state: &BodyState,
    morphology: &RobotMorphology,
    contacts: &[ContactPoint],
) -> Result<f64, DynamicsError> {
    let shell = contacts
        .iter()
        .find(|c| c.source == ContactSource::Shell)
        .ok_or(DynamicsError::NoShellContact)?;
    Ok(contact_point_velocity(state, morphology, shell).norm())
}

/// Total mechanical energy: kinetic + gravitational + contact-spring
/// potential of the currently detected contacts, J.
pub fn mechanical_energy(
    state: &BodyState,
    morphology: &RobotMorphology,
    terrain: &Terrain,
) -> f64 {
    let contacts = detect_contacts(state, morphology, terrain);
    mechanical_energy_with_contacts(state, morphology, terrain, &contacts)
}

/// [`mechanical_energy`] when the contact set is already at hand.
pub fn mechanical_energy_with_contacts(
    state: &BodyState,
    morphology: &RobotMorphology,
    terrain: &Terrain,
    contacts: &[ContactPoint],
) -> f64 {
    let mass = morphology.mass_total_kg;
    let inertia = morphology.moment_of_inertia();
    let kinetic = 0.5 * mass * state.linear_velocity.norm_squared()
        + 0.5 * inertia * state.angular_velocity.norm_squared();
    let gravitational = mass * GRAVITY_M_S2 * state.position.z;
    let spring: f64 = contacts
        .iter()
        .map(|c| 0.5 * terrain.contact_stiffness * c.penetration_m * c.penetration_m)
        .sum();
    kinetic + gravitational + spring
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::morphology::reference_morphology;
    use approx::assert_relative_eq;

    const ZERO_RATES: [f64; SPINE_COUNT] = [0.0; SPINE_COUNT];

    #[test]
    fn rejects_out_of_range_timesteps() {
        let m = reference_morphology();
        let t = Terrain::flat(0.8);
        let mut state = BodyState::settled_on_terrain(&m, &t, 0.0, 0.0, UnitQuaternion::identity());
        for dt in [0.0, -0.001, 0.003] {
            assert!(matches!(
                step_dynamics(&mut state, &m, &t, &DriveCommand::none(), &ZERO_RATES, dt),
                Err(DynamicsError::InvalidTimestep(_))
            ));
        }
    }

    #[test]
    fn equilibrium_state_stays_put() {
        let m = reference_morphology();
        let t = Terrain::flat(0.8);
        let mut state = BodyState::settled_on_terrain(&m, &t, 0.0, 0.0, UnitQuaternion::identity());
        let initial = state.clone();
        for _ in 0..1000 {
            step_dynamics(&mut state, &m, &t, &DriveCommand::none(), &ZERO_RATES, 0.001).unwrap();
        }
        assert!((state.position - initial.position).norm() < 1e-9);
        assert!(state.linear_velocity.norm() < 1e-9);
        assert!(state.angular_velocity.norm() < 1e-9);
    }

    #[test]
    fn drive_torque_saturates_at_pendulum_limit() {
        let m = reference_morphology();
        let limit = m.pendulum_torque_limit_nm();
        let wild = DriveCommand::new(10.0 * limit, 0.0);
        let applied = drive_torque_vector(&wild, &m);
        assert_relative_eq!(applied.norm(), limit, epsilon = 1e-12);
        let reverse = DriveCommand::new(-10.0 * limit, 0.0);
        assert_relative_eq!(drive_torque_vector(&reverse, &m).norm(), limit, epsilon = 1e-12);
    }

    #[test]
    fn heading_selects_the_roll_direction() {
        let m = reference_morphology();
        let t = Terrain::flat(0.8);
        let limit = m.pendulum_torque_limit_nm();
        for (heading, expect) in [
            (0.0, Vector3::new(1.0, 0.0, 0.0)),
            (std::f64::consts::FRAC_PI_2, Vector3::new(0.0, 1.0, 0.0)),
        ] {
            let mut state =
                BodyState::settled_on_terrain(&m, &t, 0.0, 0.0, UnitQuaternion::identity());
            let drive = DriveCommand::new(limit, heading);
            for _ in 0..500 {
                step_dynamics(&mut state, &m, &t, &drive, &ZERO_RATES, 0.001).unwrap();
            }
            let v = state.linear_velocity.normalize();
            assert!(v.dot(&expect) > 0.99, "heading {heading}: v = {v:?}");
        }
    }

    #[test]
    fn nan_state_is_reported_as_divergence() {
        let m = reference_morphology();
        let t = Terrain::flat(0.8);
        let mut state = BodyState::settled_on_terrain(&m, &t, 0.0, 0.0, UnitQuaternion::identity());
        state.linear_velocity.x = f64::NAN;
        assert!(matches!(
            step_dynamics(&mut state, &m, &t, &DriveCommand::none(), &ZERO_RATES, 0.001),
            Err(DynamicsError::NonFiniteState { .. })
        ));
    }

    #[test]
    fn pure_rolling_has_negligible_slip() {
        let m = reference_morphology();
        let t = Terrain::flat(0.8);
        let mut state = BodyState::settled_on_terrain(&m, &t, 0.0, 0.0, UnitQuaternion::identity());
        let v = 0.5;
        state.linear_velocity = Vector3::new(v, 0.0, 0.0);
        // Rolling toward +x on ground below: omega about -y ... omega = v/R
        // about the axis that makes the bottom point stationary.
        state.angular_velocity = Vector3::new(0.0, v / m.outer_radius_m(), 0.0);
        let contacts = detect_contacts(&state, &m, &t);
        let slip = rolling_slip_residual(&state, &m, &contacts).unwrap();
        assert!(slip < 1e-6, "slip = {slip}");
    }

    #[test]
    fn spinning_in_place_slips_at_omega_r() {
        let m = reference_morphology();
        let t = Terrain::flat(0.0);
        let mut state = BodyState::settled_on_terrain(&m, &t, 0.0, 0.0, UnitQuaternion::identity());
        state.angular_velocity = Vector3::new(0.0, 2.0, 0.0);
        let contacts = detect_contacts(&state, &m, &t);
        let slip = rolling_slip_residual(&state, &m, &contacts).unwrap();
        assert_relative_eq!(slip, 2.0 * m.outer_radius_m(), epsilon = 1e-9);
    }

    #[test]
    fn slip_query_needs_a_shell_contact() {
        let m = reference_morphology();
        let state = BodyState::at_rest(Pose::from_position(Point3::new(0.0, 0.0, 1.0)), &m);
        assert!(matches!(
            rolling_slip_residual(&state, &m, &[]),
            Err(DynamicsError::NoShellContact)
        ));
    }
}
