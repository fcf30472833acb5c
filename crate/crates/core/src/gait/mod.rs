//! Spine extension patterns, stances and the locomotion mode controller.
//!
//! Walking is parameterized as a family of periodic per-spine waves: every
//! active spine tracks `mid + amplitude * wave(2*pi*t/period + phase_i)`.
//! The controller turns a mode (roll, walk, or both combined) into a drive
//! command plus 14 rate commands each step.

mod optimize;
mod stability;

pub use optimize::{evaluate_pattern, optimize_gait, EvaluationSetup, OptimizedGait};
pub use stability::{convex_hull, is_statically_stable, stability_margin, support_polygon};

use std::collections::BTreeSet;

use nalgebra::{Point3, UnitQuaternion, Vector3};
use thiserror::Error;

use crate::actuator::ActuatorState;
use crate::dynamics::{BodyState, DriveCommand, Terrain};
use crate::morphology::{RobotMorphology, SPINE_COUNT};
use crate::pose::Pose;
use crate::units::{mm_to_m, GRAVITY_M_S2};

/// Proportional gain of the spine tracking law, 1/s.
pub const TRACKING_GAIN_PER_S: f64 = 20.0;
/// Rolling requires the spines contracted into the body; this is the slack
/// allowed at mode activation, mm.
pub const ROLL_MAX_EXTENSION_MM: f64 = 2.0;
/// Default static stability margin, m (10 mm).
pub const DEFAULT_STABILITY_MARGIN_M: f64 = 0.010;

#[derive(Debug, Error, PartialEq)]
pub enum GaitError {
    #[error("invalid gait pattern: {0}")]
    InvalidPattern(String),
    #[error("invalid stance: {0}")]
    InvalidStance(String),
    #[error("stance not realizable: {0}")]
    InfeasibleStance(String),
    #[error("roll mode requires retracted spines (max extension {0} mm)")]
    RollWithExtendedSpines(f64),
    #[error("no spine-tip contacts; support polygon undefined")]
    NoSupportContacts,
}

/// Wave shape of the extension profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Waveform {
    Sine,
    Triangle,
}

impl Waveform {
    /// Unit wave in [-1, 1]. The triangle matches the sine's phase layout:
    /// 0 at 0, peak at pi/2, zero at pi, trough at 3*pi/2.
    pub fn eval(&self, phase_rad: f64) -> f64 {
        match self {
            Waveform::Sine => phase_rad.sin(),
            Waveform::Triangle => phase_rad.sin().asin() * std::f64::consts::FRAC_2_PI,
        }
    }
}

/// Periodic per-spine extension profile.
#[derive(Debug, Clone, PartialEq)]
pub struct GaitPattern {
    pub period_s: f64,
    pub amplitude_mm: f64,
    pub mid_extension_mm: f64,
    /// Phase offset per spine, rad, in [0, 2*pi).
    pub phases_rad: [f64; SPINE_COUNT],
    /// Spines driven by the pattern; the rest hold zero extension.
    pub active_set: BTreeSet<usize>,
    pub waveform: Waveform,
}

impl GaitPattern {
    /// A pattern that keeps every spine retracted.
    pub fn idle() -> Self {
        Self {
            period_s: 1.0,
            amplitude_mm: 0.0,
            mid_extension_mm: 0.0,
            phases_rad: [0.0; SPINE_COUNT],
            active_set: BTreeSet::new(),
            waveform: Waveform::Sine,
        }
    }

    pub fn validate(&self, morphology: &RobotMorphology) -> Result<(), GaitError> {
        let stroke = morphology.spine.stroke_mm;
        if self.period_s <= 0.0 || self.period_s.is_nan() {
            return Err(GaitError::InvalidPattern("period must be positive".into()));
        }
        if self.amplitude_mm < 0.0 {
            return Err(GaitError::InvalidPattern(
                "amplitude must be non-negative".into(),
            ));
        }
        if self.mid_extension_mm - self.amplitude_mm < -1e-9
            || self.mid_extension_mm + self.amplitude_mm > stroke + 1e-9
        {
            return Err(GaitError::InvalidPattern(format!(
                "mid {} +/- amplitude {} leaves [0, {stroke}] mm",
                self.mid_extension_mm, self.amplitude_mm
            )));
        }
        if self
            .phases_rad
            .iter()
            .any(|p| !(0.0..std::f64::consts::TAU).contains(p))
        {
            return Err(GaitError::InvalidPattern(
                "phases must lie in [0, 2*pi)".into(),
            ));
        }
        if self.active_set.iter().any(|&i| i >= SPINE_COUNT) {
            return Err(GaitError::InvalidPattern(
                "active_set index out of range".into(),
            ));
        }
        Ok(())
    }

    /// Target extension of one spine at time `t`, mm, clamped to the stroke.
    pub fn extension_at(&self, morphology: &RobotMorphology, index: usize, t_s: f64) -> f64 {
        if !self.active_set.contains(&index) {
            return 0.0;
        }
        let phase = std::f64::consts::TAU * t_s / self.period_s + self.phases_rad[index];
        let value = self.mid_extension_mm + self.amplitude_mm * self.waveform.eval(phase);
        value.clamp(0.0, morphology.spine.stroke_mm)
    }
}

/// Target extension of one spine at time `t`, mm.
pub fn spine_extension_at(
    pattern: &GaitPattern,
    morphology: &RobotMorphology,
    index: usize,
    t_s: f64,
) -> f64 {
    pattern.extension_at(morphology, index, t_s)
}

/// A standing configuration: which spines carry the body and at what nominal
/// extension.
#[derive(Debug, Clone, PartialEq)]
pub struct Stance {
    pub support_indices: Vec<usize>,
    pub support_extension_mm: f64,
}

impl Stance {
    pub fn new(support_indices: Vec<usize>, support_extension_mm: f64) -> Self {
        Self {
            support_indices,
            support_extension_mm,
        }
    }

    pub fn validate(&self) -> Result<(), GaitError> {
        if !(3..=5).contains(&self.support_indices.len()) {
            return Err(GaitError::InvalidStance(format!(
                "stance needs 3, 4 or 5 support spines, got {}",
                self.support_indices.len()
            )));
        }
        let unique: BTreeSet<_> = self.support_indices.iter().collect();
        if unique.len() != self.support_indices.len() {
            return Err(GaitError::InvalidStance("duplicate support index".into()));
        }
        if self.support_indices.iter().any(|&i| i >= SPINE_COUNT) {
            return Err(GaitError::InvalidStance("support index out of range".into()));
        }
        Ok(())
    }
}

/// Orientation that points the mean support direction straight down, so the
/// support spines share the load symmetrically.
pub fn stance_orientation(
    morphology: &RobotMorphology,
    support_indices: &[usize],
) -> UnitQuaternion<f64> {
    let mean: Vector3<f64> = support_indices
        .iter()
        .map(|&i| morphology.spine_directions[i])
        .sum();
    UnitQuaternion::rotation_between(&mean.normalize(), &-Vector3::z())
        .unwrap_or_else(UnitQuaternion::identity)
}

/// Per-spine extensions that bring every support tip onto a common
/// horizontal plane under the given orientation.
///
/// The plane is set by the shallowest support spine at the stance's nominal
/// extension; steeper spines retract accordingly. Fails if a support spine
/// points sideways/up or the required extension leaves the stroke.
pub fn level_stance_extensions(
    morphology: &RobotMorphology,
    orientation: &UnitQuaternion<f64>,
    stance: &Stance,
) -> Result<[f64; SPINE_COUNT], GaitError> {
    stance.validate()?;
    let radius = morphology.outer_radius_m();
    let nominal_reach = radius + mm_to_m(stance.support_extension_mm);
    let down = -Vector3::z();

    let mut depth = f64::MAX;
    for &i in &stance.support_indices {
        let c = (orientation * morphology.spine_directions[i]).dot(&down);
        if c <= 0.0 {
            return Err(GaitError::InfeasibleStance(format!(
                "support spine {i} does not point downward"
            )));
        }
        depth = depth.min(nominal_reach * c);
    }
    if depth <= radius {
        return Err(GaitError::InfeasibleStance(
            "support tips do not clear the shell".into(),
        ));
    }

    let mut extensions = [0.0; SPINE_COUNT];
    for &i in &stance.support_indices {
        let c = (orientation * morphology.spine_directions[i]).dot(&down);
        let extension_mm = (depth / c - radius) * 1000.0;
        if !(0.0..=morphology.spine.stroke_mm + 1e-9).contains(&extension_mm) {
            return Err(GaitError::InfeasibleStance(format!(
                "support spine {i} needs {extension_mm:.1} mm extension"
            )));
        }
        extensions[i] = extension_mm.min(morphology.spine.stroke_mm);
    }
    Ok(extensions)
}

/// Body standing on the given stance over flat ground at the origin, with
/// the tip penetration that balances gravity.
pub fn place_stance(
    morphology: &RobotMorphology,
    terrain: &Terrain,
    orientation: &UnitQuaternion<f64>,
    stance: &Stance,
) -> Result<BodyState, GaitError> {
    let extensions = level_stance_extensions(morphology, orientation, stance)?;
    let radius = morphology.outer_radius_m();
    let down = -Vector3::z();
    // All support tips share one depth below the center by construction.
    let i0 = stance.support_indices[0];
    let c0 = (orientation * morphology.spine_directions[i0]).dot(&down);
    let depth = (radius + mm_to_m(extensions[i0])) * c0;

    let n = stance.support_indices.len() as f64;
    let settle = morphology.mass_total_kg * GRAVITY_M_S2 / (n * terrain.contact_stiffness);
    let (ground, _) = terrain.surface(0.0, 0.0);

    let mut state = BodyState::at_rest(
        Pose::new(
            Point3::new(0.0, 0.0, ground + depth - settle),
            *orientation,
        ),
        morphology,
    );
    for (i, &e) in extensions.iter().enumerate() {
        state.actuators[i] = ActuatorState::at_extension(&morphology.spine, e);
    }
    Ok(state)
}

/// Locomotion mode: rolling on the internal drive, walking on spine
/// patterns, or both at once.
#[derive(Debug, Clone, PartialEq)]
pub enum LocomotionMode {
    Roll { drive: DriveCommand },
    Walk { pattern: GaitPattern },
    Hybrid { drive: DriveCommand, pattern: GaitPattern },
}

impl LocomotionMode {
    pub fn name(&self) -> &'static str {
        match self {
            LocomotionMode::Roll { .. } => "roll",
            LocomotionMode::Walk { .. } => "walk",
            LocomotionMode::Hybrid { .. } => "hybrid",
        }
    }
}

/// Controller outputs for one step: a drive command plus 14 spine rates.
///
/// Rolling retracts all spines toward zero; walking tracks the pattern with
/// a proportional rate law; hybrid does both at once. Rates never exceed
/// the spine rate limit.
pub fn mode_controller(
    mode: &LocomotionMode,
    state: &BodyState,
    morphology: &RobotMorphology,
    t_s: f64,
) -> Result<(DriveCommand, [f64; SPINE_COUNT]), GaitError> {
    let max_rate = morphology.spine.max_rate_mm_s;
    let track = |target: f64, current: f64| {
        (TRACKING_GAIN_PER_S * (target - current)).clamp(-max_rate, max_rate)
    };
    let extensions = state.extensions_mm();
    match mode {
        LocomotionMode::Roll { drive } => {
            let max_extension = extensions.iter().cloned().fold(0.0, f64::max);
            if max_extension > ROLL_MAX_EXTENSION_MM {
                return Err(GaitError::RollWithExtendedSpines(max_extension));
            }
            let rates = std::array::from_fn(|i| track(0.0, extensions[i]));
            Ok((*drive, rates))
        }
        LocomotionMode::Walk { pattern } => {
            let rates = std::array::from_fn(|i| {
                track(pattern.extension_at(morphology, i, t_s), extensions[i])
            });
            Ok((DriveCommand::none(), rates))
        }
        LocomotionMode::Hybrid { drive, pattern } => {
            let rates = std::array::from_fn(|i| {
                track(pattern.extension_at(morphology, i, t_s), extensions[i])
            });
            Ok((*drive, rates))
        }
    }
}
