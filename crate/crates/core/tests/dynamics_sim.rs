//! Simulation-level checks of the dynamics module: the rolling oracle,
//! energy accounting, friction cone, and long-run numeric health.

use nalgebra::{Point3, UnitQuaternion, Vector3};
use particle_robot::dynamics::{
    detect_contacts, mechanical_energy, rolling_slip_residual, step_dynamics, BodyState,
    ContactSource, DriveCommand, Terrain,
};
use particle_robot::morphology::reference_morphology;
use particle_robot::pose::Pose;

const DT: f64 = 0.001;
const ZERO_RATES: [f64; 14] = [0.0; 14];

/// Constant torque on grippy flat ground settles into rolling with
/// acceleration a = tau * R / (I + M * R^2).
#[test]
fn steady_rolling_acceleration_matches_analytic_value() {
    let m = reference_morphology();
    let t = Terrain::flat(0.8);
    let tau = m.pendulum_torque_limit_nm();
    let r = m.outer_radius_m();
    let analytic = tau * r / (m.moment_of_inertia() + m.mass_total_kg * r * r);

    let mut state = BodyState::settled_on_terrain(&m, &t, 0.0, 0.0, UnitQuaternion::identity());
    let drive = DriveCommand::new(tau, 0.0);
    let mut v_at_2s = 0.0;
    for k in 0..4000 {
        if k == 2000 {
            v_at_2s = state.linear_velocity.x;
        }
        step_dynamics(&mut state, &m, &t, &drive, &ZERO_RATES, DT).unwrap();
    }
    let measured = (state.linear_velocity.x - v_at_2s) / 2.0;
    let rel_err = (measured - analytic).abs() / analytic;
    assert!(rel_err < 0.05, "a = {measured}, analytic {analytic}, rel err {rel_err}");
}

/// After the drive is released the contact point comes to rest: rolling
/// without slipping.
#[test]
fn slip_residual_vanishes_in_steady_rolling() {
    let m = reference_morphology();
    let t = Terrain::flat(0.8);
    let mut state = BodyState::settled_on_terrain(&m, &t, 0.0, 0.0, UnitQuaternion::identity());
    let drive = DriveCommand::new(m.pendulum_torque_limit_nm(), 0.0);
    for _ in 0..2000 {
        step_dynamics(&mut state, &m, &t, &drive, &ZERO_RATES, DT).unwrap();
    }
    for _ in 0..1000 {
        step_dynamics(&mut state, &m, &t, &DriveCommand::none(), &ZERO_RATES, DT).unwrap();
    }
    let contacts = detect_contacts(&state, &m, &t);
    let slip = rolling_slip_residual(&state, &m, &contacts).unwrap();
    assert!(slip < 1e-3, "slip residual {slip} m/s");
    assert!(state.linear_velocity.x > 1.0, "robot should still be rolling");
}

/// Unpowered drop-and-settle never gains more than 1e-6 J in one step.
#[test]
fn drop_and_settle_energy_is_monotone() {
    let m = reference_morphology();
    let t = Terrain::flat(0.8);
    // 1 mm above tangency.
    let mut state = BodyState::at_rest(
        Pose::from_position(Point3::new(0.0, 0.0, m.outer_radius_m() + 0.001)),
        &m,
    );
    let mut previous = mechanical_energy(&state, &m, &t);
    let mut max_gain = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        step_dynamics(&mut state, &m, &t, &DriveCommand::none(), &ZERO_RATES, DT).unwrap();
        let energy = mechanical_energy(&state, &m, &t);
        max_gain = max_gain.max(energy - previous);
        previous = energy;
    }
    assert!(max_gain <= 1e-6, "max per-step energy gain {max_gain} J");
    // It actually settled.
    assert!(state.linear_velocity.norm() < 1e-6);
}

/// A sphere spun against slippery ground stays inside the Coulomb cone at
/// every contact of every step.
#[test]
fn friction_respects_the_cone_while_spinning() {
    let m = reference_morphology();
    let t = Terrain::flat(0.05);
    let mut state = BodyState::settled_on_terrain(&m, &t, 0.0, 0.0, UnitQuaternion::identity());
    state.angular_velocity = Vector3::new(0.0, 30.0, 0.0);
    for _ in 0..2000 {
        let mut contacts = detect_contacts(&state, &m, &t);
        particle_robot::dynamics::contact_forces(&mut contacts, &state, &m, &t);
        for c in &contacts {
            assert!(
                c.friction_force_n.norm() <= t.friction * c.normal_force_n + 1e-9,
                "cone violated: |f|={} mu*N={}",
                c.friction_force_n.norm(),
                t.friction * c.normal_force_n
            );
        }
        step_dynamics(&mut state, &m, &t, &DriveCommand::none(), &ZERO_RATES, DT).unwrap();
    }
}

/// The orientation stays unit-norm through a million steps of driven
/// rolling.
#[test]
fn orientation_norm_survives_a_million_steps() {
    let m = reference_morphology();
    let t = Terrain::flat(0.8);
    let mut state = BodyState::settled_on_terrain(&m, &t, 0.0, 0.0, UnitQuaternion::identity());
    // Curving drive so the rotation axis keeps changing.
    for k in 0..1_000_000u64 {
        let heading = (k as f64) * 1e-5;
        let drive = DriveCommand::new(0.3, heading);
        step_dynamics(&mut state, &m, &t, &drive, &ZERO_RATES, DT).unwrap();
    }
    let norm = state.orientation.quaternion().norm();
    assert!((norm - 1.0).abs() < 1e-9, "quaternion norm {norm}");
}

/// Identical inputs give bit-identical trajectories.
#[test]
fn trajectories_are_bit_identical_across_runs() {
    let run = || {
        let m = reference_morphology();
        let t = Terrain::slope(0.1, 0.6);
        let mut state =
            BodyState::settled_on_terrain(&m, &t, 0.0, 0.0, UnitQuaternion::identity());
        let drive = DriveCommand::new(0.5, 0.3);
        let rates = [25.0; 14];
        for _ in 0..5000 {
            step_dynamics(&mut state, &m, &t, &drive, &rates, DT).unwrap();
        }
        state
    };
    let a = run();
    let b = run();
    assert_eq!(a.position, b.position);
    assert_eq!(a.orientation, b.orientation);
    assert_eq!(a.linear_velocity, b.linear_velocity);
    assert_eq!(a.angular_velocity, b.angular_velocity);
    assert_eq!(a.extensions_mm(), b.extensions_mm());
}

/// An unpowered ball released on a slope rolls downhill.
#[test]
fn ball_rolls_down_the_slope() {
    let m = reference_morphology();
    let t = Terrain::slope(15.0_f64.to_radians(), 0.8);
    let mut state = BodyState::settled_on_terrain(&m, &t, 0.0, 0.0, UnitQuaternion::identity());
    for _ in 0..3000 {
        step_dynamics(&mut state, &m, &t, &DriveCommand::none(), &ZERO_RATES, DT).unwrap();
    }
    assert!(
        state.position.x < -0.2,
        "expected downhill (-x) travel, got x = {}",
        state.position.x
    );
}

/// Spine-tip contacts carry the robot: standing on extended spines keeps the
/// shell off the ground.
#[test]
fn tripod_contacts_are_spine_tips_only() {
    let m = reference_morphology();
    let t = Terrain::flat(0.8);
    let stance = particle_robot::gait::Stance::new(vec![1, 3, 5], 128.0);
    let q = particle_robot::gait::stance_orientation(&m, &stance.support_indices);
    let state = particle_robot::gait::place_stance(&m, &t, &q, &stance).unwrap();
    let contacts = detect_contacts(&state, &m, &t);
    assert_eq!(contacts.len(), 3);
    assert!(contacts
        .iter()
        .all(|c| matches!(c.source, ContactSource::SpineTip(_))));
}
