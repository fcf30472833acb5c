//! Simulation and control library for the particle robot: a spherical mobile
//! robot wearing an actuated exoskeleton of 14 telescopic spines.
//!
//! The crate covers the full desk-scale behavior of the machine:
//!
//! - [`morphology`] — geometric constants of the robot and the spine layout.
//! - [`actuator`] — one telescopic spine: rate-limited extension plus the
//!   articulated rack lock/unlock state machine.
//! - [`dynamics`] — fixed-timestep rigid-body simulation of one robot on
//!   terrain with penalty contacts and Coulomb friction.
//! - [`gait`] — spine extension patterns, static stability checks and a
//!   derivative-free gait optimizer.
//! - [`swarm`] — kinematic multi-robot simulation in gravity-free space with
//!   spine-tip latching.
//! - [`scenario`] — config-driven runner producing trajectory CSVs and
//!   summary JSON files, shared by the CLI and the Python bindings.
//!
//! Conventions: lengths at the morphology/actuator interface are millimeters,
//! world-space state is SI (meters, seconds, radians). All stepping is
//! deterministic: identical inputs produce bit-identical trajectories.

pub mod actuator;
pub mod dynamics;
pub mod gait;
pub mod morphology;
pub mod pose;
pub mod scenario;
pub mod swarm;
pub mod units;

pub use morphology::{reference_morphology, RobotMorphology, SPINE_COUNT};
pub use pose::Pose;
