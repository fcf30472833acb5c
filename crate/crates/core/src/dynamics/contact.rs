//! Contact detection and penalty forces.
//!
//! The shell is a sphere tested against the terrain under its center; each
//! spine tip is a point contact. Normal forces come from a spring-damper on
//! the penetration depth, tangential forces from Coulomb friction with
//! viscous regularization.

use nalgebra::{Point3, Vector3};

use crate::morphology::{RobotMorphology, SPINE_COUNT};
use crate::units::mm_to_m;

use super::terrain::Terrain;
use super::BodyState;

/// A spine suppresses the shell contact when it points within this cone of
/// the contact direction and is extended, on the reasoning that the tip hits
/// the ground before the shell does there.
pub const SHIELD_CONE_DEG: f64 = 25.0;
/// Minimum extension for a spine to shield the shell, mm.
pub const SHIELD_MIN_EXTENSION_MM: f64 = 5.0;

/// Which body feature produced a contact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContactSource {
    Shell,
    SpineTip(usize),
}

/// One contact between the robot and the terrain.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactPoint {
    /// World-frame contact location, m.
    pub location: Point3<f64>,
    pub source: ContactSource,
    /// Penetration depth along the normal, m (positive).
    pub penetration_m: f64,
    /// Terrain surface normal at the contact (unit, points away from the
    /// ground).
    pub normal: Vector3<f64>,
    /// Normal force magnitude, N. Zero until forces are computed.
    pub normal_force_n: f64,
    /// Tangential friction force, N. Zero until forces are computed.
    pub friction_force_n: Vector3<f64>,
}

impl ContactPoint {
    pub fn total_force(&self) -> Vector3<f64> {
        self.normal * self.normal_force_n + self.friction_force_n
    }
}

/// Find all shell and spine-tip contacts of the current state.
///
/// Contacts are ordered shell first, then spine tips by ascending index, so
/// the result is deterministic.
pub fn detect_contacts(
    state: &BodyState,
    morphology: &RobotMorphology,
    terrain: &Terrain,
) -> Vec<ContactPoint> {
    let mut contacts = Vec::new();
    let center = state.position;
    let radius = morphology.outer_radius_m();

    let (height, normal) = terrain.surface(center.x, center.y);
    let surface_point = Point3::new(center.x, center.y, height);
    let shell_penetration = radius - (center - surface_point).dot(&normal);
    if shell_penetration > 0.0 && !shell_is_shielded(state, morphology, &normal) {
        contacts.push(ContactPoint {
            location: center - normal * radius,
            source: ContactSource::Shell,
            penetration_m: shell_penetration,
            normal,
            normal_force_n: 0.0,
            friction_force_n: Vector3::zeros(),
        });
    }

    for index in 0..SPINE_COUNT {
        // A fully retracted tip is flush with the shell surface and is not a
        // separate contact point.
        if state.actuators[index].extension_mm <= 0.0 {
            continue;
        }
        let tip = state.spine_tip(morphology, index);
        let (depth, tip_normal) = terrain.point_penetration(&tip);
        if depth > 0.0 {
            contacts.push(ContactPoint {
                location: tip,
                source: ContactSource::SpineTip(index),
                penetration_m: depth,
                normal: tip_normal,
                normal_force_n: 0.0,
                friction_force_n: Vector3::zeros(),
            });
        }
    }
    contacts
}

fn shell_is_shielded(
    state: &BodyState,
    morphology: &RobotMorphology,
    contact_normal: &Vector3<f64>,
) -> bool {
    let cone_cos = SHIELD_CONE_DEG.to_radians().cos();
    let toward_ground = -contact_normal;
    morphology
        .spine_directions
        .iter()
        .zip(state.actuators.iter())
        .any(|(dir, actuator)| {
            actuator.extension_mm > SHIELD_MIN_EXTENSION_MM
                && (state.orientation * dir).dot(&toward_ground) > cone_cos
        })
}

/// Material velocity of the contact point: rigid-body velocity plus, for a
/// spine tip, the extension rate along the spine axis.
pub fn contact_point_velocity(
    state: &BodyState,
    morphology: &RobotMorphology,
    contact: &ContactPoint,
) -> Vector3<f64> {
    let rigid = state.linear_velocity
        + state
            .angular_velocity
            .cross(&(contact.location - state.position));
    match contact.source {
        ContactSource::Shell => rigid,
        ContactSource::SpineTip(index) => {
            let dir_world = state.orientation * morphology.spine_directions[index];
            rigid + dir_world * mm_to_m(state.actuators[index].effective_rate_mm_s())
        }
    }
}

/// Fill in normal and friction forces for every contact.
///
/// Normal: `F_n = max(0, k*d + c*d_dot)` along the surface normal.
/// Tangential: `F_t = -min(mu*F_n, c_t*|v_t|) * v_t_hat`.
pub fn contact_forces(
    contacts: &mut [ContactPoint],
    state: &BodyState,
    morphology: &RobotMorphology,
    terrain: &Terrain,
) {
    for contact in contacts.iter_mut() {
        let v = contact_point_velocity(state, morphology, contact);
        let penetration_rate = -v.dot(&contact.normal);
        let fn_mag = (terrain.contact_stiffness * contact.penetration_m
            + terrain.contact_damping * penetration_rate)
            .max(0.0);
        contact.normal_force_n = fn_mag;

        let v_t = v - contact.normal * v.dot(&contact.normal);
        let speed = v_t.norm();
        if speed > 1e-12 {
            let magnitude = (terrain.friction * fn_mag).min(terrain.tangential_damping * speed);
            contact.friction_force_n = -v_t * (magnitude / speed);
        } else {
            contact.friction_force_n = Vector3::zeros();
        }
    }
}
