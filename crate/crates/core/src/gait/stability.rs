//! Static stability: support polygon construction and the margin test.

use nalgebra::Point2;

use crate::dynamics::{detect_contacts, BodyState, ContactSource, Terrain};
use crate::morphology::RobotMorphology;

use super::GaitError;

/// Convex hull of the ground-contact spine-tip positions projected onto the
/// horizontal plane, counter-clockwise. Errors when no spine tip touches.
pub fn support_polygon(
    state: &BodyState,
    morphology: &RobotMorphology,
    terrain: &Terrain,
) -> Result<Vec<Point2<f64>>, GaitError> {
    let points: Vec<Point2<f64>> = detect_contacts(state, morphology, terrain)
        .iter()
        .filter(|c| matches!(c.source, ContactSource::SpineTip(_)))
        .map(|c| Point2::new(c.location.x, c.location.y))
        .collect();
    if points.is_empty() {
        return Err(GaitError::NoSupportContacts);
    }
    Ok(convex_hull(points))
}

/// Signed distance from the point to the polygon boundary: positive inside,
/// negative outside. Polygons with fewer than 3 vertices have no interior,
/// reported as -infinity.
pub fn stability_margin(hull: &[Point2<f64>], point: &Point2<f64>) -> f64 {
    if hull.len() < 3 {
        return f64::NEG_INFINITY;
    }
    let mut margin = f64::MAX;
    for i in 0..hull.len() {
        let a = hull[i];
        let b = hull[(i + 1) % hull.len()];
        let edge = b - a;
        let len = edge.norm();
        if len < 1e-12 {
            continue;
        }
        // CCW hull: positive cross product means the point is left of the
        // edge, i.e. inside.
        let cross = edge.x * (point.y - a.y) - edge.y * (point.x - a.x);
        margin = margin.min(cross / len);
    }
    margin
}

/// True when the horizontal projection of the center of mass lies inside
/// the support polygon with at least `margin_m` clearance to every edge.
///
/// Degenerate support (fewer than 3 non-collinear contacts) is always
/// unstable; so is a missing support polygon.
pub fn is_statically_stable(
    state: &BodyState,
    morphology: &RobotMorphology,
    terrain: &Terrain,
    margin_m: f64,
) -> bool {
    let hull = match support_polygon(state, morphology, terrain) {
        Ok(hull) => hull,
        Err(_) => return false,
    };
    let com = Point2::new(state.position.x, state.position.y);
    stability_margin(&hull, &com) >= margin_m
}

/// Monotone-chain convex hull, counter-clockwise. Collinear points are
/// dropped; degenerate inputs return fewer than 3 vertices.
pub fn convex_hull(mut points: Vec<Point2<f64>>) -> Vec<Point2<f64>> {
    points.sort_by(|a, b| (a.x, a.y).partial_cmp(&(b.x, b.y)).unwrap());
    points.dedup_by(|a, b| (a.x - b.x).abs() < 1e-15 && (a.y - b.y).abs() < 1e-15);
    let n = points.len();
    if n <= 2 {
        return points;
    }
    let cross = |o: &Point2<f64>, a: &Point2<f64>, b: &Point2<f64>| {
        (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
    };
    let mut lower: Vec<Point2<f64>> = Vec::new();
    for p in &points {
        while lower.len() >= 2 && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 0.0
        {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<Point2<f64>> = Vec::new();
    for p in points.iter().rev() {
        while upper.len() >= 2 && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 0.0
        {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    if lower.len() < 3 {
        // All input points collinear.
        lower.truncate(2);
    }
    lower
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Terrain;
    use crate::gait::{place_stance, stance_orientation, Stance};
    use crate::morphology::reference_morphology;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Brute-force hull oracle: a point is a hull vertex iff it is not
    // strictly inside the hull of the others; an edge (i, j) is on the hull
    // iff all other points lie on one side. O(n^3), fine for <= 5 points.
    fn oracle_hull_edges(points: &[Point2<f64>]) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for i in 0..points.len() {
            for j in 0..points.len() {
                if i == j {
                    continue;
                }
                let (a, b) = (points[i], points[j]);
                let all_left = points.iter().enumerate().all(|(k, p)| {
                    k == i
                        || k == j
                        || (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) > 0.0
                });
                if all_left {
                    edges.push((i, j));
                }
            }
        }
        edges
    }

    #[test]
    fn tripod_polygon_is_an_equilateral_triangle_under_the_body() {
        let m = reference_morphology();
        let t = Terrain::flat(0.8);
        let stance = Stance::new(vec![1, 3, 5], 128.0);
        let q = stance_orientation(&m, &stance.support_indices);
        let state = place_stance(&m, &t, &q, &stance).unwrap();
        let hull = support_polygon(&state, &m, &t).unwrap();
        assert_eq!(hull.len(), 3);
        let side = |i: usize, j: usize| (hull[i] - hull[j]).norm();
        assert_relative_eq!(side(0, 1), side(1, 2), epsilon = 1e-9);
        assert_relative_eq!(side(1, 2), side(0, 2), epsilon = 1e-9);
        let centroid = Point2::new(
            (hull[0].x + hull[1].x + hull[2].x) / 3.0,
            (hull[0].y + hull[1].y + hull[2].y) / 3.0,
        );
        assert!(centroid.coords.norm() < 1e-9);
    }

    #[test]
    fn four_coplanar_contacts_give_that_square() {
        let m = reference_morphology();
        let t = Terrain::flat(0.8);
        let stance = Stance::new(vec![6, 8, 10, 12], 128.0);
        let state =
            place_stance(&m, &t, &nalgebra::UnitQuaternion::identity(), &stance).unwrap();
        let hull = support_polygon(&state, &m, &t).unwrap();
        assert_eq!(hull.len(), 4);
        // Corners at (+-r, +-r) with r = 258 mm / sqrt(3).
        let r = 0.258 / 3.0_f64.sqrt();
        for p in &hull {
            assert_relative_eq!(p.x.abs(), r, epsilon = 1e-9);
            assert_relative_eq!(p.y.abs(), r, epsilon = 1e-9);
        }
    }

    #[test]
    fn hull_matches_brute_force_oracle_on_random_point_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..500 {
            let n = rng.random_range(3..=5);
            let points: Vec<Point2<f64>> = (0..n)
                .map(|_| Point2::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let hull = convex_hull(points.clone());
            let oracle = oracle_hull_edges(&points);
            assert_eq!(hull.len(), oracle.len(), "points: {points:?}");
            // Every oracle edge appears consecutively in the hull.
            for (i, j) in oracle {
                let a = points[i];
                let b = points[j];
                let pos_a = hull
                    .iter()
                    .position(|p| (p - a).norm() < 1e-12)
                    .expect("oracle vertex missing from hull");
                let next = hull[(pos_a + 1) % hull.len()];
                assert!((next - b).norm() < 1e-12, "edge order mismatch");
            }
        }
    }

    #[test]
    fn stability_agrees_with_ray_casting_on_random_stances() {
        // Ray casting along +x, independent of the signed-distance test.
        fn ray_cast_inside(hull: &[Point2<f64>], p: &Point2<f64>) -> bool {
            let mut inside = false;
            let n = hull.len();
            for i in 0..n {
                let a = hull[i];
                let b = hull[(i + 1) % n];
                if (a.y > p.y) != (b.y > p.y) {
                    let x_cross = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                    if x_cross > p.x {
                        inside = !inside;
                    }
                }
            }
            inside
        }

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut agreements = 0;
        for _ in 0..1000 {
            let n = rng.random_range(3..=5);
            let points: Vec<Point2<f64>> = (0..n)
                .map(|_| Point2::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)))
                .collect();
            let hull = convex_hull(points);
            if hull.len() < 3 {
                continue;
            }
            let com = Point2::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
            let by_margin = stability_margin(&hull, &com) >= 0.0;
            let by_ray = ray_cast_inside(&hull, &com);
            assert_eq!(by_margin, by_ray, "hull: {hull:?}, com: {com:?}");
            agreements += 1;
        }
        assert!(agreements > 900);
    }

    #[test]
    fn margin_shrinks_towards_the_boundary() {
        let hull = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        assert_relative_eq!(
            stability_margin(&hull, &Point2::new(0.5, 0.5)),
            0.5,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            stability_margin(&hull, &Point2::new(0.1, 0.5)),
            0.1,
            epsilon = 1e-12
        );
        assert!(stability_margin(&hull, &Point2::new(-0.2, 0.5)) < 0.0);
    }

    #[test]
    fn two_contact_stances_are_never_stable() {
        let m = reference_morphology();
        let t = Terrain::flat(0.8);
        // Stand on two opposite corners only: tips on a line under the body.
        let mut state = crate::dynamics::BodyState::at_rest(
            crate::pose::Pose::from_position(nalgebra::Point3::new(0.0, 0.0, 0.14)),
            &m,
        );
        state.actuators[6] =
            crate::actuator::ActuatorState::at_extension(&m.spine, 128.0);
        state.actuators[12] =
            crate::actuator::ActuatorState::at_extension(&m.spine, 128.0);
        assert!(!is_statically_stable(&state, &m, &t, 0.0));
    }

    #[test]
    fn no_contacts_is_unstable_and_polygon_errors() {
        let m = reference_morphology();
        let t = Terrain::flat(0.8);
        let state = crate::dynamics::BodyState::at_rest(
            crate::pose::Pose::from_position(nalgebra::Point3::new(0.0, 0.0, 1.0)),
            &m,
        );
        assert!(matches!(
            support_polygon(&state, &m, &t),
            Err(GaitError::NoSupportContacts)
        ));
        assert!(!is_statically_stable(&state, &m, &t, 0.0));
    }
}
