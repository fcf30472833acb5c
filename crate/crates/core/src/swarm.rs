//! Kinematic multi-robot simulation in gravity-free space.
//!
//! Particles carry no inertia: velocity is commanded, not integrated from
//! force. Spine tips latch to nearby tips of other assemblies when both
//! electromagnets are on; latched assemblies move rigidly as one body driven
//! by the average of their members' commands. Unlatching is an explicit
//! magnet-off command.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Point3, UnitQuaternion, Vector3};
use thiserror::Error;

use crate::morphology::{RobotMorphology, SPINE_COUNT};
use crate::pose::Pose;
use crate::units::mm_to_m;

/// Default capture radius for tip-to-tip latching, m (5 mm).
pub const DEFAULT_LATCH_RADIUS_M: f64 = 0.005;

#[derive(Debug, Error, PartialEq)]
pub enum SwarmError {
    #[error("unknown particle id {0}")]
    UnknownParticle(usize),
    #[error("duplicate particle id {0}")]
    DuplicateParticle(usize),
    #[error("invalid particle: {0}")]
    InvalidParticle(String),
}

/// Velocity command generator for one particle.
#[derive(Debug, Clone, PartialEq)]
pub enum MotionProgram {
    /// Stay put.
    Hold,
    /// Head for a target pose in a straight line at the given speeds,
    /// stopping exactly on arrival.
    ToPose {
        target: Pose,
        speed_m_s: f64,
        angular_speed_rad_s: f64,
    },
    /// Sinusoidal velocity along a fixed axis: `v(t) = speed * sin(2*pi*f*t)`.
    Oscillate {
        frequency_hz: f64,
        axis: Vector3<f64>,
        speed_m_s: f64,
    },
}

impl MotionProgram {
    fn validate(&self) -> Result<(), SwarmError> {
        let check = |v: f64, name: &str| {
            if v < 0.0 {
                Err(SwarmError::InvalidParticle(format!(
                    "{name} must be non-negative"
                )))
            } else {
                Ok(())
            }
        };
        match self {
            MotionProgram::Hold => Ok(()),
            MotionProgram::ToPose {
                speed_m_s,
                angular_speed_rad_s,
                ..
            } => {
                check(*speed_m_s, "speed")?;
                check(*angular_speed_rad_s, "angular speed")
            }
            MotionProgram::Oscillate {
                frequency_hz,
                speed_m_s,
                ..
            } => {
                check(*frequency_hz, "frequency")?;
                check(*speed_m_s, "speed")
            }
        }
    }
}

/// One robot in the swarm, reduced to its pose, frozen spine extensions and
/// per-spine electromagnet switches.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmParticle {
    pub id: usize,
    pub pose: Pose,
    pub extensions_mm: [f64; SPINE_COUNT],
    pub program: MotionProgram,
    pub magnets_enabled: [bool; SPINE_COUNT],
}

impl SwarmParticle {
    pub fn new(id: usize, pose: Pose) -> Self {
        Self {
            id,
            pose,
            extensions_mm: [0.0; SPINE_COUNT],
            program: MotionProgram::Hold,
            magnets_enabled: [true; SPINE_COUNT],
        }
    }
}

/// A tip-to-tip latch. Endpoints are (particle id, spine index); the
/// relative pose of tip frame `b` in tip frame `a` is frozen at latch time.
#[derive(Debug, Clone, PartialEq)]
pub struct LatchEdge {
    pub a: (usize, usize),
    pub b: (usize, usize),
    pub relative_pose: Pose,
}

/// The gravity-free world: particles, the latch graph and the capture
/// radius.
#[derive(Debug, Clone)]
pub struct SwarmWorld {
    pub morphology: RobotMorphology,
    pub latch_radius_m: f64,
    particles: Vec<SwarmParticle>,
    edges: Vec<LatchEdge>,
    time_s: f64,
}

impl SwarmWorld {
    pub fn new(morphology: RobotMorphology, latch_radius_m: f64) -> Self {
        Self {
            morphology,
            latch_radius_m,
            particles: Vec::new(),
            edges: Vec::new(),
            time_s: 0.0,
        }
    }

    pub fn add_particle(&mut self, particle: SwarmParticle) -> Result<(), SwarmError> {
        if self.particles.iter().any(|p| p.id == particle.id) {
            return Err(SwarmError::DuplicateParticle(particle.id));
        }
        particle.program.validate()?;
        let stroke = self.morphology.spine.stroke_mm;
        if particle
            .extensions_mm
            .iter()
            .any(|&e| !(0.0..=stroke).contains(&e))
        {
            return Err(SwarmError::InvalidParticle(format!(
                "extensions must lie in [0, {stroke}] mm"
            )));
        }
        let at = self
            .particles
            .partition_point(|p| p.id < particle.id);
        self.particles.insert(at, particle);
        Ok(())
    }

    pub fn particles(&self) -> &[SwarmParticle] {
        &self.particles
    }

    pub fn edges(&self) -> &[LatchEdge] {
        &self.edges
    }

    pub fn time_s(&self) -> f64 {
        self.time_s
    }

    pub fn particle(&self, id: usize) -> Result<&SwarmParticle, SwarmError> {
        self.particles
            .iter()
            .find(|p| p.id == id)
            .ok_or(SwarmError::UnknownParticle(id))
    }

    fn particle_mut(&mut self, id: usize) -> Result<&mut SwarmParticle, SwarmError> {
        self.particles
            .iter_mut()
            .find(|p| p.id == id)
            .ok_or(SwarmError::UnknownParticle(id))
    }

    pub fn set_program(&mut self, id: usize, program: MotionProgram) -> Result<(), SwarmError> {
        program.validate()?;
        self.particle_mut(id)?.program = program;
        Ok(())
    }

    /// Replace one particle's spine extensions (frozen thereafter; swarm
    /// particles do not run actuator dynamics).
    pub fn set_extensions(
        &mut self,
        id: usize,
        extensions_mm: [f64; SPINE_COUNT],
    ) -> Result<(), SwarmError> {
        let stroke = self.morphology.spine.stroke_mm;
        if extensions_mm.iter().any(|e| !(0.0..=stroke).contains(e)) {
            return Err(SwarmError::InvalidParticle(format!(
                "extensions must lie in [0, {stroke}] mm"
            )));
        }
        self.particle_mut(id)?.extensions_mm = extensions_mm;
        Ok(())
    }

    /// Switch one spine's electromagnet. Turning it off releases any latch
    /// held by that spine.
    pub fn set_magnet(&mut self, id: usize, spine: usize, enabled: bool) -> Result<(), SwarmError> {
        let particle = self.particle_mut(id)?;
        particle.magnets_enabled[spine] = enabled;
        if !enabled {
            let endpoint = (id, spine);
            self.edges.retain(|e| e.a != endpoint && e.b != endpoint);
        }
        Ok(())
    }

    /// World position of a spine tip.
    pub fn tip_position(&self, particle: &SwarmParticle, spine: usize) -> Point3<f64> {
        let reach = self.morphology.outer_radius_m() + mm_to_m(particle.extensions_mm[spine]);
        particle.pose.position
            + particle
                .pose
                .transform_vector(&self.morphology.spine_directions[spine])
                * reach
    }

    fn tip_frame(&self, particle: &SwarmParticle, spine: usize) -> Pose {
        Pose::new(
            self.tip_position(particle, spine),
            particle.pose.orientation,
        )
    }

    /// Connected component of the latch graph containing `id`.
    pub fn assembly_of(&self, id: usize) -> Result<BTreeSet<usize>, SwarmError> {
        self.particle(id)?;
        let mut component = BTreeSet::from([id]);
        let mut queue = vec![id];
        while let Some(current) = queue.pop() {
            for edge in &self.edges {
                for (from, to) in [(edge.a.0, edge.b.0), (edge.b.0, edge.a.0)] {
                    if from == current && component.insert(to) {
                        queue.push(to);
                    }
                }
            }
        }
        Ok(component)
    }

    fn assemblies(&self) -> Vec<BTreeSet<usize>> {
        let mut seen = BTreeSet::new();
        let mut assemblies = Vec::new();
        for p in &self.particles {
            if seen.contains(&p.id) {
                continue;
            }
            let component = self.assembly_of(p.id).expect("particle exists");
            seen.extend(component.iter().copied());
            assemblies.push(component);
        }
        assemblies
    }

    /// Translation and rotation drift between an edge's current tip-to-tip
    /// relative pose and the one stored at latch time, (m, rad).
    pub fn relative_pose_drift(&self, edge: &LatchEdge) -> Result<(f64, f64), SwarmError> {
        let frame_a = self.tip_frame(self.particle(edge.a.0)?, edge.a.1);
        let frame_b = self.tip_frame(self.particle(edge.b.0)?, edge.b.1);
        let current = frame_a.relative_to(&frame_b);
        Ok(edge.relative_pose.separation(&current))
    }

    /// Advance the world one step: assemblies move per their (averaged)
    /// member commands, then latch detection runs.
    pub fn step(&mut self, dt_s: f64) {
        assert!(dt_s > 0.0, "timestep must be positive");
        for assembly in self.assemblies() {
            let mut linear = Vector3::zeros();
            let mut angular = Vector3::zeros();
            let mut centroid = Vector3::zeros();
            for &id in &assembly {
                let p = self.particle(id).expect("assembly member exists");
                let (v, w) = self.commanded_twist(p, dt_s);
                linear += v;
                angular += w;
                centroid += p.pose.position.coords;
            }
            let n = assembly.len() as f64;
            linear /= n;
            angular /= n;
            centroid /= n;

            let rotation = UnitQuaternion::from_scaled_axis(angular * dt_s);
            let translation = linear * dt_s;
            for &id in &assembly {
                let p = self.particle_mut(id).expect("assembly member exists");
                let arm = p.pose.position.coords - centroid;
                p.pose.position = Point3::from(centroid + rotation * arm + translation);
                p.pose.orientation =
                    UnitQuaternion::new_normalize((rotation * p.pose.orientation).into_inner());
            }
        }
        self.time_s += dt_s;
        let radius = self.latch_radius_m;
        self.detect_latches(radius);
    }

    /// Commanded twist (linear, angular velocity) of one particle. ToPose
    /// clamps so a lone particle lands exactly on its target.
    fn commanded_twist(&self, particle: &SwarmParticle, dt_s: f64) -> (Vector3<f64>, Vector3<f64>) {
        match &particle.program {
            MotionProgram::Hold => (Vector3::zeros(), Vector3::zeros()),
            MotionProgram::ToPose {
                target,
                speed_m_s,
                angular_speed_rad_s,
            } => {
                let offset = target.position - particle.pose.position;
                let distance = offset.norm();
                let linear = if distance > 1e-15 {
                    offset * ((speed_m_s.min(distance / dt_s)) / distance)
                } else {
                    Vector3::zeros()
                };
                let to_target = particle.pose.orientation.rotation_to(&target.orientation);
                let scaled_axis = to_target.scaled_axis();
                let angle = scaled_axis.norm();
                let angular = if angle > 1e-15 {
                    scaled_axis * ((angular_speed_rad_s.min(angle / dt_s)) / angle)
                } else {
                    Vector3::zeros()
                };
                (linear, angular)
            }
            MotionProgram::Oscillate {
                frequency_hz,
                axis,
                speed_m_s,
            } => {
                let phase = std::f64::consts::TAU * frequency_hz * self.time_s;
                (axis * (speed_m_s * phase.sin()), Vector3::zeros())
            }
        }
    }

    /// Latch every eligible tip pair within the capture radius: both magnets
    /// on, both endpoints free, tips on different assemblies (as of the call).
    /// Pairs are taken greedily by ascending distance, ties broken by
    /// (id, spine index). Returns the newly created edges.
    pub fn detect_latches(&mut self, latch_radius_m: f64) -> Vec<LatchEdge> {
        let mut assembly_label = BTreeMap::new();
        for assembly in self.assemblies() {
            let label = *assembly.iter().next().expect("assemblies are non-empty");
            for id in assembly {
                assembly_label.insert(id, label);
            }
        }
        let mut occupied: BTreeSet<(usize, usize)> = BTreeSet::new();
        for edge in &self.edges {
            occupied.insert(edge.a);
            occupied.insert(edge.b);
        }

        // Tip pairs can only be in range when the shells are near each other.
        let max_reach =
            self.morphology.outer_radius_m() + mm_to_m(self.morphology.spine.stroke_mm);
        let center_cutoff = 2.0 * max_reach + latch_radius_m;

        type Candidate = (f64, (usize, usize), (usize, usize));
        let mut candidates: Vec<Candidate> = Vec::new();
        for (pi, pa) in self.particles.iter().enumerate() {
            for pb in self.particles.iter().skip(pi + 1) {
                if assembly_label[&pa.id] == assembly_label[&pb.id] {
                    continue;
                }
                if (pb.pose.position - pa.pose.position).norm() > center_cutoff {
                    continue;
                }
                for sa in 0..SPINE_COUNT {
                    if !pa.magnets_enabled[sa] || occupied.contains(&(pa.id, sa)) {
                        continue;
                    }
                    let tip_a = self.tip_position(pa, sa);
                    for sb in 0..SPINE_COUNT {
                        if !pb.magnets_enabled[sb] || occupied.contains(&(pb.id, sb)) {
                            continue;
                        }
                        let distance = (self.tip_position(pb, sb) - tip_a).norm();
                        if distance < latch_radius_m {
                            candidates.push((distance, (pa.id, sa), (pb.id, sb)));
                        }
                    }
                }
            }
        }
        candidates.sort_by(|x, y| {
            x.0.total_cmp(&y.0)
                .then_with(|| (x.1, x.2).cmp(&(y.1, y.2)))
        });

        let mut new_edges = Vec::new();
        for (_, a, b) in candidates {
            if occupied.contains(&a) || occupied.contains(&b) {
                continue;
            }
            occupied.insert(a);
            occupied.insert(b);
            let frame_a = self.tip_frame(self.particle(a.0).expect("endpoint exists"), a.1);
            let frame_b = self.tip_frame(self.particle(b.0).expect("endpoint exists"), b.1);
            new_edges.push(LatchEdge {
                a,
                b,
                relative_pose: frame_a.relative_to(&frame_b),
            });
        }
        self.edges.extend(new_edges.iter().cloned());
        new_edges
    }
}
