//! Derivative-free gait search: coordinate descent with shrinking steps
//! over period, amplitude, mid extension and the active spines' phases.
//!
//! The objective is net horizontal displacement over a fixed, deterministic
//! simulation horizon, so a (seed, budget) pair always reproduces the same
//! result. The best-so-far pattern only ever improves.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{step_dynamics, BodyState, DriveCommand, Terrain};
use crate::morphology::RobotMorphology;

use super::{mode_controller, GaitPattern, LocomotionMode};

/// Everything needed to score one candidate pattern.
#[derive(Debug, Clone)]
pub struct EvaluationSetup {
    pub morphology: RobotMorphology,
    pub terrain: Terrain,
    /// Drive applied while walking; `Some` makes the evaluation hybrid.
    pub drive: Option<DriveCommand>,
    pub horizon_s: f64,
    pub dt_s: f64,
}

/// Result of a gait search.
#[derive(Debug, Clone)]
pub struct OptimizedGait {
    pub pattern: GaitPattern,
    /// Net horizontal displacement of the returned pattern, m.
    pub displacement_m: f64,
    /// Simulation evaluations spent.
    pub evaluations: usize,
}

/// Net horizontal displacement of one pattern over the setup's horizon, m.
/// Diverging or controller-rejected candidates score negative infinity.
pub fn evaluate_pattern(pattern: &GaitPattern, setup: &EvaluationSetup) -> f64 {
    let mode = match setup.drive {
        Some(drive) => LocomotionMode::Hybrid {
            drive,
            pattern: pattern.clone(),
        },
        None => LocomotionMode::Walk {
            pattern: pattern.clone(),
        },
    };
    let mut state = BodyState::settled_on_terrain(
        &setup.morphology,
        &setup.terrain,
        0.0,
        0.0,
        nalgebra::UnitQuaternion::identity(),
    );
    let start = state.position;
    let steps = (setup.horizon_s / setup.dt_s).round() as usize;
    for k in 0..steps {
        let t = k as f64 * setup.dt_s;
        let Ok((drive, rates)) = mode_controller(&mode, &state, &setup.morphology, t) else {
            return f64::NEG_INFINITY;
        };
        if step_dynamics(
            &mut state,
            &setup.morphology,
            &setup.terrain,
            &drive,
            &rates,
            setup.dt_s,
        )
        .is_err()
        {
            return f64::NEG_INFINITY;
        }
    }
    let delta = state.position - start;
    (delta.x * delta.x + delta.y * delta.y).sqrt()
}

#[derive(Clone, Copy)]
enum Coordinate {
    Period,
    Amplitude,
    MidExtension,
    Phase(usize),
}

fn clamp_amplitude(pattern: &mut GaitPattern, stroke_mm: f64) {
    let cap = pattern
        .mid_extension_mm
        .min(stroke_mm - pattern.mid_extension_mm)
        .max(0.0);
    pattern.amplitude_mm = pattern.amplitude_mm.clamp(0.0, cap);
}

fn perturbed(
    base: &GaitPattern,
    coordinate: Coordinate,
    delta: f64,
    stroke_mm: f64,
) -> GaitPattern {
    let mut p = base.clone();
    match coordinate {
        Coordinate::Period => p.period_s = (p.period_s + delta).clamp(0.2, 10.0),
        Coordinate::Amplitude => {
            p.amplitude_mm += delta;
            clamp_amplitude(&mut p, stroke_mm);
        }
        Coordinate::MidExtension => {
            p.mid_extension_mm = (p.mid_extension_mm + delta).clamp(0.0, stroke_mm);
            clamp_amplitude(&mut p, stroke_mm);
        }
        Coordinate::Phase(i) => p.phases_rad[i] = (p.phases_rad[i] + delta).rem_euclid(TAU),
    }
    p
}

/// Search for a pattern maximizing horizontal displacement, spending at most
/// `budget` simulation evaluations (the initial pattern counts as one).
pub fn optimize_gait(
    initial: &GaitPattern,
    setup: &EvaluationSetup,
    budget: usize,
    seed: u64,
) -> OptimizedGait {
    assert!(budget >= 1, "optimizer budget must be at least 1");
    let stroke = setup.morphology.spine.stroke_mm;
    let mut best = initial.clone();
    clamp_amplitude(&mut best, stroke);
    let mut best_score = evaluate_pattern(&best, setup);
    let mut evaluations = 1;

    let coordinates: Vec<Coordinate> = [
        Coordinate::Period,
        Coordinate::Amplitude,
        Coordinate::MidExtension,
    ]
    .into_iter()
    .chain(best.active_set.iter().map(|&i| Coordinate::Phase(i)))
    .collect();

    const INITIAL_STEPS: [f64; 4] = [0.25, 16.0, 16.0, std::f64::consts::FRAC_PI_2];
    // Once the amplitude step has shrunk this far the search is considered
    // stalled and a seeded random restart fires.
    const RESTART_AMP_STEP: f64 = 2.0;
    let step_index = |c: &Coordinate| match c {
        Coordinate::Period => 0,
        Coordinate::Amplitude => 1,
        Coordinate::MidExtension => 2,
        Coordinate::Phase(_) => 3,
    };
    let mut steps = INITIAL_STEPS;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    'search: while evaluations < budget {
        let mut improved = false;
        for coordinate in &coordinates {
            // Phase moves do nothing while the wave is flat.
            if matches!(coordinate, Coordinate::Phase(_)) && best.amplitude_mm == 0.0 {
                continue;
            }
            for sign in [1.0, -1.0] {
                if evaluations >= budget {
                    break 'search;
                }
                let candidate =
                    perturbed(&best, *coordinate, sign * steps[step_index(coordinate)], stroke);
                if candidate == best {
                    continue;
                }
                let score = evaluate_pattern(&candidate, setup);
                evaluations += 1;
                if score > best_score {
                    best = candidate;
                    best_score = score;
                    improved = true;
                    break;
                }
            }
        }
        if !improved {
            for s in &mut steps {
                *s *= 0.5;
            }
            if steps[1] < RESTART_AMP_STEP && evaluations < budget {
                // Seeded restart: jump to a random candidate; keep it only
                // if it beats the best so far.
                let mut candidate = best.clone();
                for &i in &best.active_set.clone() {
                    candidate.phases_rad[i] = rng.random_range(0.0..TAU);
                }
                candidate.period_s = rng.random_range(0.5..6.0);
                candidate.mid_extension_mm = rng.random_range(0.0..stroke);
                candidate.amplitude_mm = rng.random_range(0.0..stroke / 2.0);
                clamp_amplitude(&mut candidate, stroke);
                let score = evaluate_pattern(&candidate, setup);
                evaluations += 1;
                if score > best_score {
                    best = candidate;
                    best_score = score;
                }
                steps = INITIAL_STEPS;
            }
        }
    }

    OptimizedGait {
        pattern: best,
        displacement_m: best_score,
        evaluations,
    }
}
