//! Rigid-body pose (position + orientation) shared by the dynamics and swarm
//! modules.

use nalgebra::{Point3, UnitQuaternion, Vector3};

/// A rigid transform from body frame to world frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    /// Position in world frame, meters.
    pub position: Point3<f64>,
    /// Body-to-world rotation.
    pub orientation: UnitQuaternion<f64>,
}

impl Pose {
    pub fn new(position: Point3<f64>, orientation: UnitQuaternion<f64>) -> Self {
        Self {
            position,
            orientation,
        }
    }

    pub fn identity() -> Self {
        Self {
            position: Point3::origin(),
            orientation: UnitQuaternion::identity(),
        }
    }

    pub fn from_position(position: Point3<f64>) -> Self {
        Self {
            position,
            orientation: UnitQuaternion::identity(),
        }
    }

    /// Map a point from body frame to world frame.
    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        self.position + self.orientation * p.coords
    }

    /// Map a direction from body frame to world frame.
    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.orientation * v
    }

    /// The pose of `other` expressed in this pose's frame.
    pub fn relative_to(&self, other: &Pose) -> Pose {
        let inv = self.orientation.inverse();
        Pose {
            position: Point3::from(inv * (other.position - self.position)),
            orientation: inv * other.orientation,
        }
    }

    /// Translation distance and rotation angle separating two poses.
    pub fn separation(&self, other: &Pose) -> (f64, f64) {
        let dist = (other.position - self.position).norm();
        let angle = self.orientation.angle_to(&other.orientation);
        (dist, angle)
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn relative_pose_round_trips() {
        let a = Pose::new(
            Point3::new(1.0, 2.0, 3.0),
            UnitQuaternion::from_euler_angles(0.1, 0.2, 0.3),
        );
        let b = Pose::new(
            Point3::new(-0.5, 0.25, 1.0),
            UnitQuaternion::from_euler_angles(0.4, -0.1, 0.9),
        );
        let rel = a.relative_to(&b);
        let b_again = Pose {
            position: a.transform_point(&rel.position),
            orientation: a.orientation * rel.orientation,
        };
        assert_relative_eq!(b_again.position, b.position, epsilon = 1e-12);
        assert!(b_again.orientation.angle_to(&b.orientation) < 1e-12);
    }

    #[test]
    fn transform_point_rotates_then_translates() {
        let pose = Pose::new(
            Point3::new(1.0, 0.0, 0.0),
            UnitQuaternion::from_axis_angle(&Vector3::z_axis(), FRAC_PI_2),
        );
        let p = pose.transform_point(&Point3::new(1.0, 0.0, 0.0));
        assert_relative_eq!(p, Point3::new(1.0, 1.0, 0.0), epsilon = 1e-12);
    }
}
