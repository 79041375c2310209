//! Planar convex cones with vertex at the origin.
//!
//! The cone `K` is the open sector swept from `c1` to `c2`. It is the
//! intersection of the open half-planes `H_i = {z : f_i·z > 0}`, where `f_i` is
//! the unit normal of the ray `c_i` pointing into the cone. Lattice points on
//! either ray are outside `K`.

use crate::error::{Error, Result};
use crate::step_law::{gcd, LatticePoint};
use crate::vec2::Vec2;

/// Guard band for membership tests of cones given by floating-point angles.
pub const MEMBERSHIP_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    Interior,
    Exit,
}

/// Which half-plane constraints fail at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryStatus {
    None,
    H1Violated,
    H2Violated,
    Both,
}

/// One of the two walls of the cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Wall {
    First,
    Second,
}

impl Wall {
    pub fn index(self) -> usize {
        match self {
            Wall::First => 0,
            Wall::Second => 1,
        }
    }

    pub fn other(self) -> Wall {
        match self {
            Wall::First => Wall::Second,
            Wall::Second => Wall::First,
        }
    }

    pub fn both() -> [Wall; 2] {
        [Wall::First, Wall::Second]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct ExactDirs {
    dirs: [LatticePoint; 2],
    /// Primitive integer inward normals.
    normals: [LatticePoint; 2],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeGeometry {
    c: [Vec2; 2],
    f: [Vec2; 2],
    opening_angle: f64,
    exact: Option<ExactDirs>,
}

impl ConeGeometry {
    /// Builds the cone between two integer direction vectors.
    pub fn from_dirs(dir1: LatticePoint, dir2: LatticePoint) -> Result<Self> {
        if dir1 == LatticePoint::default() || dir2 == LatticePoint::default() {
            return Err(Error::InvalidCone("direction vectors must be non-zero".into()));
        }
        if dir1.cross(dir2) == 0 {
            return Err(Error::InvalidCone(format!(
                "directions {dir1} and {dir2} are collinear (opening angle 0 or π)"
            )));
        }
        let normal = |d: LatticePoint, other: LatticePoint| {
            let g = gcd(d.x, d.y);
            let n = LatticePoint::new(-d.y / g, d.x / g);
            if n.dot(other) > 0 {
                n
            } else {
                LatticePoint::new(-n.x, -n.y)
            }
        };
        let normals = [normal(dir1, dir2), normal(dir2, dir1)];
        let c = [dir1.to_vec2().normalized(), dir2.to_vec2().normalized()];
        let f = [normals[0].to_vec2().normalized(), normals[1].to_vec2().normalized()];
        Ok(ConeGeometry {
            c,
            f,
            opening_angle: c[0].angle_to(c[1]),
            exact: Some(ExactDirs { dirs: [dir1, dir2], normals }),
        })
    }

    /// Builds the cone between two rays given by their polar angles in degrees.
    ///
    /// Membership then relies on floating-point projections with a
    /// [`MEMBERSHIP_GUARD`] band: points within the band of a wall are exits.
    pub fn from_angles_deg(theta1: f64, theta2: f64) -> Result<Self> {
        if !theta1.is_finite() || !theta2.is_finite() {
            return Err(Error::InvalidCone("angles must be finite".into()));
        }
        let c = [Vec2::from_angle(theta1.to_radians()), Vec2::from_angle(theta2.to_radians())];
        let s = c[0].cross(c[1]);
        if s.abs() < 1e-12 {
            return Err(Error::InvalidCone(format!(
                "angles {theta1}° and {theta2}° give an opening angle of 0 or π"
            )));
        }
        let orient = |ci: Vec2, other: Vec2| {
            let n = ci.perp();
            if n.dot(other) > 0.0 {
                n
            } else {
                -n
            }
        };
        let f = [orient(c[0], c[1]), orient(c[1], c[0])];
        Ok(ConeGeometry { c, f, opening_angle: c[0].angle_to(c[1]), exact: None })
    }

    /// The positive quadrant `c1 = (0,1)`, `c2 = (1,0)`.
    pub fn quadrant() -> Self {
        ConeGeometry::from_dirs(LatticePoint::new(0, 1), LatticePoint::new(1, 0)).expect("valid cone")
    }

    pub fn c(&self, wall: Wall) -> Vec2 {
        self.c[wall.index()]
    }

    pub fn f(&self, wall: Wall) -> Vec2 {
        self.f[wall.index()]
    }

    pub fn c1(&self) -> Vec2 {
        self.c[0]
    }

    pub fn c2(&self) -> Vec2 {
        self.c[1]
    }

    pub fn f1(&self) -> Vec2 {
        self.f[0]
    }

    pub fn f2(&self) -> Vec2 {
        self.f[1]
    }

    pub fn opening_angle(&self) -> f64 {
        self.opening_angle
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Integer direction vectors, when the cone was built from them.
    pub fn exact_dirs(&self) -> Option<[LatticePoint; 2]> {
        self.exact.map(|e| e.dirs)
    }

    /// Primitive integer inward normal of wall `i` (0-based), when rational.
    pub fn integer_normal(&self, i: usize) -> Option<LatticePoint> {
        self.exact.map(|e| e.normals[i])
    }

    /// `f_i·z` in floating point.
    pub fn f_dot(&self, wall: Wall, z: LatticePoint) -> f64 {
        self.f(wall).dot(z.to_vec2())
    }

    /// Smallest positive value of `f_i·z` over the lattice (0 for irrational walls).
    pub fn lattice_gap(&self, wall: Wall) -> f64 {
        match self.exact {
            Some(e) => 1.0 / e.normals[wall.index()].to_vec2().norm(),
            None => 0.0,
        }
    }

    fn in_half_plane(&self, wall: Wall, z: LatticePoint) -> bool {
        match self.exact {
            Some(e) => e.normals[wall.index()].dot(z) > 0,
            None => self.f_dot(wall, z) > MEMBERSHIP_GUARD,
        }
    }

    /// Floating-point membership, ignoring any exact representation.
    pub fn contains_float(&self, z: LatticePoint) -> Membership {
        if self.f[0].dot(z.to_vec2()) > MEMBERSHIP_GUARD && self.f[1].dot(z.to_vec2()) > MEMBERSHIP_GUARD {
            Membership::Interior
        } else {
            Membership::Exit
        }
    }

    pub fn contains(&self, z: LatticePoint) -> Membership {
        if self.which_boundary(z) == BoundaryStatus::None {
            Membership::Interior
        } else {
            Membership::Exit
        }
    }

    pub fn which_boundary(&self, z: LatticePoint) -> BoundaryStatus {
        match (self.in_half_plane(Wall::First, z), self.in_half_plane(Wall::Second, z)) {
            (true, true) => BoundaryStatus::None,
            (false, true) => BoundaryStatus::H1Violated,
            (true, false) => BoundaryStatus::H2Violated,
            (false, false) => BoundaryStatus::Both,
        }
    }

    /// Whether a unit direction lies in the closed sector `Σ`, with slack `tol` radians.
    pub fn sector_contains(&self, q: Vec2, tol: f64) -> bool {
        self.f[0].dot(q) >= -tol && self.f[1].dot(q) >= -tol
    }

    /// Whether a unit direction lies strictly inside the sector, by more than `tol` radians.
    pub fn sector_interior_contains(&self, q: Vec2, tol: f64) -> bool {
        q.dot(self.c[0] + self.c[1]) > 0.0
            && self.c[0].angle_to(q) > tol
            && self.c[1].angle_to(q) > tol
            && self.sector_contains(q, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: i64, y: i64) -> LatticePoint {
        LatticePoint::new(x, y)
    }

    #[test]
    fn quadrant_normals_and_angle() {
        let q = ConeGeometry::from_dirs(p(0, 1), p(1, 0)).unwrap();
        assert_eq!(q.f1(), Vec2::new(1.0, 0.0));
        assert_eq!(q.f2(), Vec2::new(0.0, 1.0));
        assert!((q.opening_angle() - std::f64::consts::FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn forty_five_degree_cone() {
        let k = ConeGeometry::from_dirs(p(1, 0), p(1, 1)).unwrap();
        assert_eq!(k.f1(), Vec2::new(0.0, 1.0));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!((k.f2().x - s).abs() < 1e-15 && (k.f2().y + s).abs() < 1e-15);
        assert_eq!(k.contains(p(3, 2)), Membership::Interior);
        assert_eq!(k.contains(p(2, 3)), Membership::Exit);
        assert_eq!(k.contains(p(2, 2)), Membership::Exit);
    }

    #[test]
    fn straight_angle_rejected() {
        assert!(ConeGeometry::from_dirs(p(1, 0), p(-1, 0)).is_err());
        assert!(ConeGeometry::from_dirs(p(1, 0), p(2, 0)).is_err());
        assert!(ConeGeometry::from_dirs(p(0, 0), p(1, 0)).is_err());
        assert!(ConeGeometry::from_angles_deg(0.0, 180.0).is_err());
    }

    #[test]
    fn quadrant_membership_examples() {
        let q = ConeGeometry::quadrant();
        assert_eq!(q.contains(p(1, 1)), Membership::Interior);
        assert_eq!(q.contains(p(0, 5)), Membership::Exit);
        assert_eq!(q.which_boundary(p(-1, 3)), BoundaryStatus::H1Violated);
        assert_eq!(q.which_boundary(p(-1, -1)), BoundaryStatus::Both);
        assert_eq!(q.which_boundary(p(2, 2)), BoundaryStatus::None);
        assert_eq!(q.which_boundary(p(4, 0)), BoundaryStatus::H2Violated);
    }

    #[test]
    fn quadrant_is_positive_integers() {
        let q = ConeGeometry::quadrant();
        for x in -20..=20 {
            for y in -20..=20 {
                let expect = if x >= 1 && y >= 1 { Membership::Interior } else { Membership::Exit };
                assert_eq!(q.contains(p(x, y)), expect);
            }
        }
    }

    #[test]
    fn exact_and_float_membership_agree() {
        for (d1, d2) in [((0, 1), (1, 0)), ((1, 0), (1, 1)), ((2, 1), (-1, 3)), ((3, -1), (1, 4))] {
            let k = ConeGeometry::from_dirs(p(d1.0, d1.1), p(d2.0, d2.1)).unwrap();
            for x in (-1000..=1000).step_by(7) {
                for y in (-1000..=1000).step_by(7) {
                    assert_eq!(k.contains(p(x, y)), k.contains_float(p(x, y)), "{d1:?} {d2:?} at ({x},{y})");
                }
            }
        }
    }

    #[test]
    fn angle_cone_matches_quadrant_away_from_walls() {
        let k = ConeGeometry::from_angles_deg(90.0, 0.0).unwrap();
        assert!(!k.is_exact());
        let q = ConeGeometry::quadrant();
        for x in -10..=10 {
            for y in -10..=10 {
                assert_eq!(k.contains(p(x, y)), q.contains(p(x, y)));
            }
        }
    }

    #[test]
    fn sector_tests() {
        let q = ConeGeometry::quadrant();
        assert!(q.sector_interior_contains(Vec2::new(1.0, 1.0).normalized(), 1e-8));
        assert!(!q.sector_interior_contains(Vec2::new(0.0, 1.0), 1e-8));
        assert!(q.sector_contains(Vec2::new(0.0, 1.0), 1e-8));
        assert!(!q.sector_contains(Vec2::new(-1.0, 1.0).normalized(), 1e-8));
    }

    proptest! {
        #[test]
        fn contains_iff_no_violation(x in -500i64..500, y in -500i64..500, a in -5i64..5, b in -5i64..5, c in -5i64..5, d in -5i64..5) {
            prop_assume!(a * d - b * c != 0);
            let k = ConeGeometry::from_dirs(p(a, b), p(c, d)).unwrap();
            let z = p(x, y);
            prop_assert_eq!(k.contains(z) == Membership::Interior, k.which_boundary(z) == BoundaryStatus::None);
            prop_assert!(k.f1().dot(k.c1()).abs() < 1e-14 && k.f2().dot(k.c2()).abs() < 1e-14);
            prop_assert!(k.f1().dot(k.c2()) > 0.0 && k.f2().dot(k.c1()) > 0.0);
            prop_assert!(k.opening_angle() > 0.0 && k.opening_angle() < std::f64::consts::PI);
        }
    }
}
