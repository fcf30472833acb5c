//! Geometric constants of the particle robot.
//!
//! The robot is a 260 mm sphere carrying 14 radially mounted telescopic
//! spines. This module owns every dimension of that machine and maps spine
//! indices to directions and world-space tip positions. The spine layout is
//! the 6 cube-face axes plus the 8 cube corners, which is inversion-symmetric
//! and lets the robot stand on 3, 4 or 5 spines in many orientations.

use nalgebra::{Point3, Vector3};
use thiserror::Error;

use crate::pose::Pose;
use crate::units::{mm_to_m, GRAVITY_M_S2};

/// Number of telescopic spines on the robot.
pub const SPINE_COUNT: usize = 14;

#[derive(Debug, Error, PartialEq)]
pub enum MorphologyError {
    #[error("spine index {0} out of range (must be < {SPINE_COUNT})")]
    SpineIndexOutOfRange(usize),
    #[error("extension {extension_mm} mm outside [0, {stroke_mm}] mm")]
    ExtensionOutOfRange { extension_mm: f64, stroke_mm: f64 },
    #[error("invalid morphology: {0}")]
    Invalid(String),
}

/// Outer shell dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellSpec {
    /// Outer diameter of the assembled shell, mm.
    pub outer_diameter_mm: f64,
    /// Number of printed parts forming the sphere.
    pub shell_part_count: u32,
    /// Diameter of the sealed inner sphere, mm.
    pub inner_sphere_diameter_mm: f64,
}

impl ShellSpec {
    pub fn outer_radius_mm(&self) -> f64 {
        self.outer_diameter_mm / 2.0
    }

    pub fn outer_radius_m(&self) -> f64 {
        mm_to_m(self.outer_radius_mm())
    }
}

/// Dimensions and rate limit of one telescopic spine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpineSpec {
    /// Height of the fixed base level, mm.
    pub base_height_mm: f64,
    /// Maximum extension beyond the top of the base, mm.
    pub stroke_mm: f64,
    /// Total length when fully extended, mm.
    pub extended_length_mm: f64,
    /// Number of telescopic levels including the base.
    pub level_count: u32,
    /// Maximum extension/retraction rate, mm/s.
    pub max_rate_mm_s: f64,
    /// Length of one articulated rack link, mm.
    pub link_pitch_mm: f64,
}

impl SpineSpec {
    /// Ratio of extended length to compressed length.
    pub fn extension_ratio(&self) -> f64 {
        self.extended_length_mm / self.base_height_mm
    }
}

/// One row of the highly-extendable linear actuator comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorCatalogEntry {
    pub name: &'static str,
    /// Number of articulated chains the mechanism needs.
    pub chain_count: u32,
    /// Maximum extension speed, mm/s.
    pub speed_mm_s: f64,
    /// Number of axes the extended column resists loads on (2 or 3).
    pub locked_axes: u32,
}

/// Full geometric and inertial description of one robot.
#[derive(Debug, Clone, PartialEq)]
pub struct RobotMorphology {
    pub shell: ShellSpec,
    pub spine: SpineSpec,
    /// Unit direction of each spine in the body frame.
    pub spine_directions: [Vector3<f64>; SPINE_COUNT],
    /// Total robot mass, kg. Default value; the hardware is not weighed here.
    pub mass_total_kg: f64,
    /// Fraction of the total mass in the inner drive sphere.
    pub inner_mass_fraction: f64,
    /// Effective lever arm of the inner drive mass, mm.
    pub pendulum_arm_mm: f64,
    /// Hollow-shell correction applied to the solid-sphere inertia.
    pub inertia_factor: f64,
}

impl RobotMorphology {
    pub fn outer_radius_m(&self) -> f64 {
        self.shell.outer_radius_m()
    }

    pub fn inner_mass_kg(&self) -> f64 {
        self.mass_total_kg * self.inner_mass_fraction
    }

    /// Largest internal drive torque the inner mass can sustain against
    /// gravity, N·m. Requests beyond this saturate.
    pub fn pendulum_torque_limit_nm(&self) -> f64 {
        self.inner_mass_kg() * GRAVITY_M_S2 * mm_to_m(self.pendulum_arm_mm)
    }

    /// Moment of inertia about any axis through the center, kg·m².
    pub fn moment_of_inertia(&self) -> f64 {
        let r = self.outer_radius_m();
        self.inertia_factor * 0.4 * self.mass_total_kg * r * r
    }

    /// Check every structural invariant, naming the first violated one.
    pub fn validate(&self) -> Result<(), MorphologyError> {
        let err = |msg: String| Err(MorphologyError::Invalid(msg));
        if self.shell.outer_diameter_mm <= 0.0 {
            return err("outer_diameter must be positive".into());
        }
        if self.shell.inner_sphere_diameter_mm >= self.shell.outer_diameter_mm {
            return err("inner sphere must fit inside the outer shell".into());
        }
        if self.spine.max_rate_mm_s <= 0.0 {
            return err("max_rate must be positive".into());
        }
        if self.spine.link_pitch_mm <= 0.0 {
            return err("link_pitch must be positive".into());
        }
        let length_sum = self.spine.base_height_mm + self.spine.stroke_mm;
        if (self.spine.extended_length_mm - length_sum).abs() > 1e-9 {
            return err(format!(
                "extended_length {} != base_height + stroke {}",
                self.spine.extended_length_mm, length_sum
            ));
        }
        if self.mass_total_kg <= 0.0 {
            return err("mass_total must be positive".into());
        }
        if self.inner_mass_fraction <= 0.0 || self.inner_mass_fraction >= 1.0 {
            return err("inner_mass_fraction must be in (0, 1)".into());
        }
        for (i, d) in self.spine_directions.iter().enumerate() {
            if (d.norm() - 1.0).abs() > 1e-9 {
                return err(format!("spine direction {i} is not unit-norm"));
            }
            let has_antipode = self
                .spine_directions
                .iter()
                .any(|other| (other + d).norm() < 1e-9);
            if !has_antipode {
                return err(format!("spine direction {i} has no antipode"));
            }
        }
        Ok(())
    }
}

/// The reference robot: 260 mm shell in 24 parts, 14 spines with 50 mm bases
/// and 128 mm stroke (178 mm extended, ratio 1:3.56), rated 100 mm/s.
///
/// Mass properties are working defaults and scenario-overridable.
pub fn reference_morphology() -> RobotMorphology {
    RobotMorphology {
        shell: ShellSpec {
            outer_diameter_mm: 260.0,
            shell_part_count: 24,
            inner_sphere_diameter_mm: 160.0,
        },
        spine: SpineSpec {
            base_height_mm: 50.0,
            stroke_mm: 128.0,
            extended_length_mm: 178.0,
            level_count: 4,
            max_rate_mm_s: 100.0,
            link_pitch_mm: 8.0,
        },
        spine_directions: spine_directions_cube14(),
        mass_total_kg: 2.0,
        inner_mass_fraction: 0.5,
        pendulum_arm_mm: 80.0,
        inertia_factor: 1.2,
    }
}

/// The 14 spine directions: the 6 axis-aligned unit vectors followed by the
/// 8 normalized cube corners.
///
/// Order is fixed: +x, -x, +y, -y, +z, -z (indices 0..=5), then the corners
/// (sx, sy, sz)/sqrt(3) in lexicographic sign order with - before +, i.e.
/// (-,-,-), (-,-,+), (-,+,-), (-,+,+), (+,-,-), (+,-,+), (+,+,-), (+,+,+)
/// (indices 6..=13). The set is closed under central inversion.
pub fn spine_directions_cube14() -> [Vector3<f64>; SPINE_COUNT] {
    let s = 1.0 / 3.0_f64.sqrt();
    let mut dirs = [Vector3::zeros(); SPINE_COUNT];
    dirs[0] = Vector3::new(1.0, 0.0, 0.0);
    dirs[1] = Vector3::new(-1.0, 0.0, 0.0);
    dirs[2] = Vector3::new(0.0, 1.0, 0.0);
    dirs[3] = Vector3::new(0.0, -1.0, 0.0);
    dirs[4] = Vector3::new(0.0, 0.0, 1.0);
    dirs[5] = Vector3::new(0.0, 0.0, -1.0);
    let mut i = 6;
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for sz in [-1.0, 1.0] {
                dirs[i] = Vector3::new(sx * s, sy * s, sz * s);
                i += 1;
            }
        }
    }
    dirs
}

/// World-frame position of a spine tip, meters.
///
/// Spine bases are modeled flush with the outer shell surface, so the tip
/// sits at `outer_radius + extension` from the center along the spine
/// direction.
pub fn spine_tip_position(
    body_pose: &Pose,
    morphology: &RobotMorphology,
    index: usize,
    extension_mm: f64,
) -> Result<Point3<f64>, MorphologyError> {
    if index >= SPINE_COUNT {
        return Err(MorphologyError::SpineIndexOutOfRange(index));
    }
    if !(0.0..=morphology.spine.stroke_mm).contains(&extension_mm) {
        return Err(MorphologyError::ExtensionOutOfRange {
            extension_mm,
            stroke_mm: morphology.spine.stroke_mm,
        });
    }
    let reach_m = morphology.outer_radius_m() + mm_to_m(extension_mm);
    let dir_world = body_pose.transform_vector(&morphology.spine_directions[index]);
    Ok(body_pose.position + dir_world * reach_m)
}

/// The four highly-extendable linear actuator families compared when the
/// spine mechanism was chosen.
pub fn actuator_catalog() -> Vec<ActuatorCatalogEntry> {
    vec![
        ActuatorCatalogEntry {
            name: "Rigid chain",
            chain_count: 1,
            speed_mm_s: 1000.0,
            locked_axes: 2,
        },
        ActuatorCatalogEntry {
            name: "Rigid zip",
            chain_count: 2,
            speed_mm_s: 1000.0,
            locked_axes: 3,
        },
        ActuatorCatalogEntry {
            name: "Spiralift",
            chain_count: 1,
            speed_mm_s: 10.0,
            locked_axes: 3,
        },
        ActuatorCatalogEntry {
            name: "Articulated rack",
            chain_count: 1,
            speed_mm_s: 100.0,
            locked_axes: 3,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::UnitQuaternion;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn reference_dimensions_match_the_hardware() {
        let m = reference_morphology();
        assert_eq!(m.shell.outer_diameter_mm, 260.0);
        assert_eq!(m.shell.shell_part_count, 24);
        assert_eq!(m.spine.base_height_mm, 50.0);
        assert_eq!(m.spine.stroke_mm, 128.0);
        assert_eq!(m.spine.extended_length_mm, 178.0);
        assert_eq!(m.spine.level_count, 4);
        assert_eq!(m.spine.max_rate_mm_s, 100.0);
        assert_eq!(m.spine_directions.len(), 14);
        m.validate().unwrap();
    }

    #[test]
    fn extension_ratio_is_3_56_exactly() {
        let m = reference_morphology();
        assert_eq!(m.spine.extension_ratio(), 3.56);
        assert_eq!(
            m.spine.base_height_mm + m.spine.stroke_mm,
            m.spine.extended_length_mm
        );
    }

    #[test]
    fn directions_are_unit_norm_and_inversion_symmetric() {
        let dirs = spine_directions_cube14();
        assert_eq!(dirs[0], Vector3::new(1.0, 0.0, 0.0));
        for d in &dirs {
            assert!((d.norm() - 1.0).abs() < 1e-9);
            assert!(dirs.iter().any(|o| (o + d).norm() < 1e-9));
        }
    }

    // Oracle: brute-force minimum angle over all 91 unordered pairs. The
    // closest pair is an axis and an adjacent corner, acos(1/sqrt(3)).
    #[test]
    fn min_pairwise_angle_is_54_7356_deg() {
        let dirs = spine_directions_cube14();
        let mut min_angle = f64::MAX;
        let mut pairs = 0;
        for i in 0..dirs.len() {
            for j in (i + 1)..dirs.len() {
                let angle = dirs[i].dot(&dirs[j]).clamp(-1.0, 1.0).acos();
                min_angle = min_angle.min(angle);
                pairs += 1;
            }
        }
        assert_eq!(pairs, 91);
        assert!((min_angle.to_degrees() - 54.7356).abs() < 1e-3);
    }

    #[test]
    fn tip_at_zero_extension_lies_on_the_shell() {
        let m = reference_morphology();
        for i in 0..SPINE_COUNT {
            let tip = spine_tip_position(&Pose::identity(), &m, i, 0.0).unwrap();
            assert_relative_eq!(tip.coords.norm(), 0.130, epsilon = 1e-9);
        }
    }

    #[test]
    fn tip_at_full_extension_reaches_258_mm() {
        let m = reference_morphology();
        let tip = spine_tip_position(&Pose::identity(), &m, 0, 128.0).unwrap();
        assert_relative_eq!(tip.coords.norm(), 0.258, epsilon = 1e-9);
        assert_relative_eq!(tip.x, 0.258, epsilon = 1e-9);
    }

    #[test]
    fn tip_follows_body_rotation() {
        let m = reference_morphology();
        let pose = Pose::new(
            Point3::origin(),
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), FRAC_PI_2),
        );
        // Spine 0 points along +x in the body frame; rotated 90 deg about z
        // it must point along +y.
        let tip = spine_tip_position(&pose, &m, 0, 0.0).unwrap();
        assert_relative_eq!(tip.coords, Vector3::new(0.0, 0.130, 0.0), epsilon = 1e-9);
    }

    #[test]
    fn tip_rejects_bad_index_and_extension() {
        let m = reference_morphology();
        assert_eq!(
            spine_tip_position(&Pose::identity(), &m, 14, 0.0),
            Err(MorphologyError::SpineIndexOutOfRange(14))
        );
        assert!(matches!(
            spine_tip_position(&Pose::identity(), &m, 0, -1.0),
            Err(MorphologyError::ExtensionOutOfRange { .. })
        ));
        assert!(matches!(
            spine_tip_position(&Pose::identity(), &m, 0, 128.5),
            Err(MorphologyError::ExtensionOutOfRange { .. })
        ));
    }

    #[test]
    fn catalog_matches_the_comparison_table() {
        let catalog = actuator_catalog();
        assert_eq!(catalog.len(), 4);
        let by_name = |n: &str| catalog.iter().find(|e| e.name == n).unwrap();
        assert_eq!(by_name("Spiralift").speed_mm_s, 10.0);
        assert_eq!(by_name("Rigid zip").chain_count, 2);
        assert_eq!(by_name("Articulated rack").locked_axes, 3);
        assert_eq!(by_name("Articulated rack").speed_mm_s, 100.0);
        assert_eq!(by_name("Rigid chain").speed_mm_s, 1000.0);
        assert_eq!(by_name("Rigid chain").locked_axes, 2);
        for e in &catalog {
            assert!(e.locked_axes == 2 || e.locked_axes == 3);
            assert!(e.speed_mm_s > 0.0);
        }
    }

    #[test]
    fn pendulum_torque_limit_uses_inner_mass_and_arm() {
        let m = reference_morphology();
        // 1.0 kg * 9.81 m/s^2 * 0.08 m
        assert_relative_eq!(m.pendulum_torque_limit_nm(), 0.7848, epsilon = 1e-12);
    }
}
