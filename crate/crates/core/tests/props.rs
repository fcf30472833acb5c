//! Property tests for the geometric and kinematic invariants.

use nalgebra::{Point2, Point3, UnitQuaternion, Vector3};
use proptest::prelude::*;

use particle_robot::actuator::ActuatorState;
use particle_robot::gait::{convex_hull, stability_margin, GaitPattern, Waveform};
use particle_robot::morphology::{reference_morphology, spine_tip_position, SPINE_COUNT};
use particle_robot::pose::Pose;

fn arbitrary_quaternion() -> impl Strategy<Value = UnitQuaternion<f64>> {
    (
        -1.0..1.0f64,
        -1.0..1.0f64,
        -1.0..1.0f64,
        0.0..std::f64::consts::TAU,
    )
        .prop_filter_map("axis must be non-zero", |(x, y, z, angle)| {
            let axis = Vector3::new(x, y, z);
            (axis.norm() > 1e-3).then(|| {
                UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle)
            })
        })
}

proptest! {
    /// Tips of antipodal spines at equal extension sit exactly
    /// 2 * (outer_radius + extension) apart, in any pose.
    #[test]
    fn antipodal_tips_are_diameter_apart(
        q in arbitrary_quaternion(),
        pos in (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64),
        extension in 0.0..128.0f64,
    ) {
        let m = reference_morphology();
        let pose = Pose::new(Point3::new(pos.0, pos.1, pos.2), q);
        for i in 0..SPINE_COUNT {
            let antipode = m
                .spine_directions
                .iter()
                .position(|d| (d + m.spine_directions[i]).norm() < 1e-9)
                .expect("cube-14 set is inversion symmetric");
            let a = spine_tip_position(&pose, &m, i, extension).unwrap();
            let b = spine_tip_position(&pose, &m, antipode, extension).unwrap();
            let expected = 2.0 * (m.outer_radius_m() + extension / 1000.0);
            prop_assert!(((a - b).norm() - expected).abs() < 1e-9);
        }
    }

    /// Pattern targets never leave [0, stroke], whatever the parameters.
    #[test]
    fn pattern_extension_stays_in_stroke(
        period in 0.05..10.0f64,
        amplitude in 0.0..200.0f64,
        mid in -50.0..200.0f64,
        phase in 0.0..std::f64::consts::TAU,
        t in 0.0..100.0f64,
        triangle in any::<bool>(),
    ) {
        let m = reference_morphology();
        let pattern = GaitPattern {
            period_s: period,
            amplitude_mm: amplitude,
            mid_extension_mm: mid,
            phases_rad: [phase; SPINE_COUNT],
            active_set: (0..SPINE_COUNT).collect(),
            waveform: if triangle { Waveform::Triangle } else { Waveform::Sine },
        };
        for i in 0..SPINE_COUNT {
            let e = pattern.extension_at(&m, i, t);
            prop_assert!((0.0..=m.spine.stroke_mm).contains(&e));
        }
    }

    /// Every input point lies inside or on its own convex hull.
    #[test]
    fn hull_contains_its_inputs(
        points in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 3..12),
    ) {
        let pts: Vec<Point2<f64>> = points.iter().map(|&(x, y)| Point2::new(x, y)).collect();
        let hull = convex_hull(pts.clone());
        prop_assume!(hull.len() >= 3);
        for p in &pts {
            prop_assert!(stability_margin(&hull, p) >= -1e-9);
        }
    }

    /// Random command sequences keep the actuator inside its stroke, under
    /// its rate limit, and lock-consistent.
    #[test]
    fn actuator_invariants_hold_for_any_commands(
        commands in proptest::collection::vec(-400.0..400.0f64, 1..200),
        dt in 0.0005..0.05f64,
    ) {
        let m = reference_morphology();
        let mut actuator = ActuatorState::new(&m.spine);
        for rate in commands {
            actuator.command_rate(rate);
            let before = actuator.extension_mm;
            actuator.step(dt);
            prop_assert!((0.0..=m.spine.stroke_mm).contains(&actuator.extension_mm));
            prop_assert!(
                (actuator.extension_mm - before).abs() <= m.spine.max_rate_mm_s * dt + 1e-12
            );
            prop_assert!(actuator.lock_state_audit());
        }
    }
}
