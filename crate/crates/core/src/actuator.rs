//! One telescopic spine: rate-limited extension kinematics plus the
//! articulated rack lock/unlock state machine.
//!
//! The rack is a chain of gear-toothed links. Stored links are foldable;
//! as the pinion drives a link out through the holder guide its lock arm
//! seats in the rack slot and the link becomes rigid. Driving it back in
//! rotates the unlock arm, releasing the lock arm and folding the link
//! again. Link 0 is the outermost link, so the rigid links always form a
//! prefix of the chain.

use crate::morphology::SpineSpec;

/// Articulation state of one rack link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkMode {
    Folded,
    Rigid,
}

/// One link of the articulated rack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RackLinkState {
    /// 0 = outermost link.
    pub index: usize,
    pub mode: LinkMode,
    /// Whether the lock arm is seated in the rack slot. Always equivalent
    /// to `mode == Rigid`; kept separate so audits can catch drift.
    pub arm_lock_engaged: bool,
}

/// Kinematic state of one spine actuator.
#[derive(Debug, Clone, PartialEq)]
pub struct ActuatorState {
    /// Current extension beyond the base top, mm.
    pub extension_mm: f64,
    /// Commanded signed extension rate, mm/s. Positive extends (pinion
    /// clockwise), negative retracts.
    pub commanded_rate_mm_s: f64,
    /// Rack links, outermost first.
    pub links: Vec<RackLinkState>,
    /// Length of one rack link, mm.
    pub link_pitch_mm: f64,
    /// Maximum extension, mm.
    pub stroke_mm: f64,
    /// Rate limit applied to commands, mm/s.
    pub max_rate_mm_s: f64,
}

fn rigid_link_count(extension_mm: f64, link_pitch_mm: f64) -> usize {
    if extension_mm <= 0.0 {
        0
    } else {
        (extension_mm / link_pitch_mm).ceil() as usize
    }
}

impl ActuatorState {
    /// Fresh actuator: fully retracted, all links folded. The chain holds
    /// `ceil(stroke / link_pitch)` links.
    pub fn new(spec: &SpineSpec) -> Self {
        let link_count = rigid_link_count(spec.stroke_mm, spec.link_pitch_mm);
        let links = (0..link_count)
            .map(|index| RackLinkState {
                index,
                mode: LinkMode::Folded,
                arm_lock_engaged: false,
            })
            .collect();
        Self {
            extension_mm: 0.0,
            commanded_rate_mm_s: 0.0,
            links,
            link_pitch_mm: spec.link_pitch_mm,
            stroke_mm: spec.stroke_mm,
            max_rate_mm_s: spec.max_rate_mm_s,
        }
    }

    /// Actuator pre-set to a given extension with a consistent lock state.
    pub fn at_extension(spec: &SpineSpec, extension_mm: f64) -> Self {
        let mut state = Self::new(spec);
        state.extension_mm = extension_mm.clamp(0.0, spec.stroke_mm);
        state.refresh_links();
        state
    }

    /// Set the commanded rate, clamped to the spine's rate limit.
    pub fn command_rate(&mut self, rate_mm_s: f64) {
        self.commanded_rate_mm_s = rate_mm_s.clamp(-self.max_rate_mm_s, self.max_rate_mm_s);
    }

    /// Advance the extension by one timestep and relock/unlock links that
    /// passed through the holder guide.
    pub fn step(&mut self, dt_s: f64) {
        debug_assert!(dt_s > 0.0);
        self.extension_mm =
            (self.extension_mm + self.commanded_rate_mm_s * dt_s).clamp(0.0, self.stroke_mm);
        self.refresh_links();
    }

    /// The rate the extension can actually move at right now: zero when the
    /// command pushes into an end stop.
    pub fn effective_rate_mm_s(&self) -> f64 {
        let r = self.commanded_rate_mm_s;
        if (r > 0.0 && self.extension_mm >= self.stroke_mm)
            || (r < 0.0 && self.extension_mm <= 0.0)
        {
            0.0
        } else {
            r
        }
    }

    /// Verify the rigid-prefix invariant and lock-arm consistency. Intended
    /// as a runtime assertion hook.
    pub fn lock_state_audit(&self) -> bool {
        let rigid = rigid_link_count(self.extension_mm, self.link_pitch_mm);
        self.links.iter().all(|link| {
            let should_be_rigid = link.index < rigid;
            (link.mode == LinkMode::Rigid) == should_be_rigid
                && link.arm_lock_engaged == (link.mode == LinkMode::Rigid)
        })
    }

    fn refresh_links(&mut self) {
        let rigid = rigid_link_count(self.extension_mm, self.link_pitch_mm);
        for link in &mut self.links {
            let is_rigid = link.index < rigid;
            link.mode = if is_rigid {
                LinkMode::Rigid
            } else {
                LinkMode::Folded
            };
            link.arm_lock_engaged = is_rigid;
        }
    }
}
