//! The three reference models used by the verification suite.

use crate::cone::{BoundaryStatus, ConeGeometry, Wall};
use crate::step_law::{LatticePoint, StepLaw};

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub name: String,
    pub law: StepLaw,
    pub cone: ConeGeometry,
}

/// Nearest-neighbour law with drift `(0.3, 0.3)`.
pub fn drifted_law() -> StepLaw {
    StepLaw::from_triples(&[(1, 0, 0.4), (-1, 0, 0.1), (0, 1, 0.4), (0, -1, 0.1)]).expect("valid law")
}

/// Five atoms including the jump `(−2, 0)`, drift `(0.1, 0.2)`.
pub fn asymmetric_law() -> StepLaw {
    StepLaw::from_triples(&[(1, 0, 0.4), (0, 1, 0.3), (-1, 0, 0.1), (0, -1, 0.1), (-2, 0, 0.1)]).expect("valid law")
}

pub fn quadrant() -> Model {
    Model { name: "quadrant".into(), law: drifted_law(), cone: ConeGeometry::quadrant() }
}

/// The cone between `(1, 0)` and `(1, 1)`.
pub fn cone45() -> Model {
    let cone = ConeGeometry::from_dirs(LatticePoint::new(1, 0), LatticePoint::new(1, 1)).expect("valid cone");
    Model { name: "cone45".into(), law: drifted_law(), cone }
}

pub fn asym5() -> Model {
    Model { name: "asym5".into(), law: asymmetric_law(), cone: ConeGeometry::quadrant() }
}

pub fn bundled() -> Vec<Model> {
    vec![quadrant(), cone45(), asym5()]
}

pub fn by_name(name: &str) -> Option<Model> {
    bundled().into_iter().find(|m| m.name == name)
}

/// An interior lattice point next to wall `i`, about `depth` lattice steps out
/// along it: the point with the smallest `f_i·z` near the target, then the
/// closest to it, then the farthest from the vertex.
pub fn near_wall_probe(cone: &ConeGeometry, wall: Wall, depth: i64) -> LatticePoint {
    let target = match cone.exact_dirs() {
        Some(dirs) => (dirs[wall.index()].to_vec2()) * depth as f64,
        None => cone.c(wall) * depth as f64,
    };
    let reach = 3;
    let (cx, cy) = (target.x.round() as i64, target.y.round() as i64);
    let mut best: Option<((f64, f64, f64), LatticePoint)> = None;
    for x in cx - reach..=cx + reach {
        for y in cy - reach..=cy + reach {
            let z = LatticePoint::new(x, y);
            if cone.which_boundary(z) != BoundaryStatus::None {
                continue;
            }
            let key = (cone.f_dot(wall, z), (z.to_vec2() - target).norm(), -z.to_vec2().norm());
            let better = best.is_none_or(|(k, _)| {
                key.0 < k.0 - 1e-9
                    || ((key.0 - k.0).abs() <= 1e-9 && (key.1 < k.1 - 1e-9 || ((key.1 - k.1).abs() <= 1e-9 && key.2 < k.2)))
            });
            if better {
                best = Some((key, z));
            }
        }
    }
    best.expect("a cone contains lattice points next to each wall").1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probes_sit_one_lattice_gap_off_the_wall() {
        let q = ConeGeometry::quadrant();
        assert_eq!(near_wall_probe(&q, Wall::First, 10), LatticePoint::new(1, 10));
        assert_eq!(near_wall_probe(&q, Wall::Second, 10), LatticePoint::new(10, 1));
        let c = cone45().cone;
        assert_eq!(near_wall_probe(&c, Wall::First, 10), LatticePoint::new(10, 1));
        assert_eq!(near_wall_probe(&c, Wall::Second, 10), LatticePoint::new(11, 10));
        for m in bundled() {
            for wall in Wall::both() {
                let z = near_wall_probe(&m.cone, wall, 10);
                assert!((m.cone.f_dot(wall, z) - m.cone.lattice_gap(wall)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bundled_drifts_are_non_zero() {
        for m in bundled() {
            assert!(m.law.drift().norm() > 0.1, "{}", m.name);
        }
    }
}
