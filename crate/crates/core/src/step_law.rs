//! The increment law of the walk and its exponential transforms.
//!
//! Only finitely supported laws are represented, so the jump generating
//! function `φ(a) = Σ γ(z) e^{a·z}` is an exact finite sum and is finite for
//! every tilt `a`.

use std::collections::{BTreeMap, HashSet, VecDeque};
use std::fmt;

use crate::cone::{ConeGeometry, Membership};
use crate::error::{Error, Result};
use crate::vec2::{Mat2, Vec2};

/// Largest exponent `a·z` accepted before reporting a range error.
pub const EXPONENT_GUARD: f64 = 700.0;

/// Probabilities must sum to one within this tolerance before renormalisation.
pub const MASS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct LatticePoint {
    pub x: i64,
    pub y: i64,
}

impl LatticePoint {
    pub const fn new(x: i64, y: i64) -> Self {
        LatticePoint { x, y }
    }

    pub fn to_vec2(self) -> Vec2 {
        Vec2::new(self.x as f64, self.y as f64)
    }

    pub fn norm_inf(self) -> i64 {
        self.x.abs().max(self.y.abs())
    }

    pub fn cross(self, other: LatticePoint) -> i64 {
        self.x * other.y - self.y * other.x
    }

    pub fn dot(self, other: LatticePoint) -> i64 {
        self.x * other.x + self.y * other.y
    }
}

impl std::ops::Add for LatticePoint {
    type Output = LatticePoint;
    fn add(self, rhs: LatticePoint) -> LatticePoint {
        LatticePoint::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for LatticePoint {
    type Output = LatticePoint;
    fn sub(self, rhs: LatticePoint) -> LatticePoint {
        LatticePoint::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// A finitely supported probability law on `ℤ²`.
///
/// Atoms are kept in lexicographic order so that every sum over the support is
/// evaluated in the same order on every platform.
#[derive(Debug, Clone, PartialEq)]
pub struct StepLaw {
    atoms: Vec<(LatticePoint, f64)>,
    max_jump: i64,
}

impl StepLaw {
    /// Builds a law from `(step, probability)` pairs.
    ///
    /// Probabilities must be in `(0, 1]` and sum to one within
    /// [`MASS_TOLERANCE`]; the residual round-off is removed by renormalising.
    /// The modelling assumptions (non-zero drift, irreducibility) are not
    /// checked here, see [`validate`].
    pub fn new<I>(atoms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (LatticePoint, f64)>,
    {
        let mut merged: BTreeMap<LatticePoint, f64> = BTreeMap::new();
        for (z, p) in atoms {
            if !(p > 0.0 && p <= 1.0) || !p.is_finite() {
                return Err(Error::InvalidLaw(format!("probability {p} at {z} is not in (0, 1]")));
            }
            if merged.insert(z, p).is_some() {
                return Err(Error::InvalidLaw(format!("step {z} listed twice")));
            }
        }
        if merged.is_empty() {
            return Err(Error::InvalidLaw("empty support".into()));
        }
        let total: f64 = merged.values().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidLaw(format!("probabilities sum to {total}, not 1")));
        }
        let atoms: Vec<_> = merged.into_iter().map(|(z, p)| (z, p / total)).collect();
        let max_jump = atoms.iter().map(|(z, _)| z.norm_inf()).max().unwrap_or(0);
        Ok(StepLaw { atoms, max_jump })
    }

    /// Convenience constructor from `(dx, dy, p)` triples.
    pub fn from_triples(triples: &[(i64, i64, f64)]) -> Result<Self> {
        StepLaw::new(triples.iter().map(|&(x, y, p)| (LatticePoint::new(x, y), p)))
    }

    pub fn atoms(&self) -> &[(LatticePoint, f64)] {
        &self.atoms
    }

    /// Largest `∞`-norm over the support.
    pub fn max_jump(&self) -> i64 {
        self.max_jump
    }

    pub fn prob(&self, z: LatticePoint) -> f64 {
        self.atoms
            .binary_search_by(|(w, _)| w.cmp(&z))
            .map(|i| self.atoms[i].1)
            .unwrap_or(0.0)
    }

    pub fn drift(&self) -> Vec2 {
        self.atoms
            .iter()
            .fold(Vec2::ZERO, |acc, &(z, p)| acc + z.to_vec2() * p)
    }

    /// Exponential weights `e^{a·z}` of every atom, in atom order.
    fn exp_weights(&self, a: Vec2) -> Result<Vec<f64>> {
        self.atoms
            .iter()
            .map(|(z, _)| {
                let e = a.dot(z.to_vec2());
                if e > EXPONENT_GUARD {
                    Err(Error::Range { exponent: e, limit: EXPONENT_GUARD })
                } else {
                    Ok(e.exp())
                }
            })
            .collect()
    }

    /// The jump generating function `φ(a)`.
    pub fn phi(&self, a: Vec2) -> Result<f64> {
        let w = self.exp_weights(a)?;
        Ok(self.atoms.iter().zip(&w).map(|((_, p), e)| p * e).sum())
    }

    pub fn grad_phi(&self, a: Vec2) -> Result<Vec2> {
        Ok(self.phi_derivatives(a)?.1)
    }

    pub fn hessian_phi(&self, a: Vec2) -> Result<Mat2> {
        Ok(self.phi_derivatives(a)?.2)
    }

    /// `φ`, `∇φ` and the Hessian in one pass over the support.
    pub fn phi_derivatives(&self, a: Vec2) -> Result<(f64, Vec2, Mat2)> {
        let w = self.exp_weights(a)?;
        let mut value = 0.0;
        let mut grad = Vec2::ZERO;
        let mut hess = Mat2::default();
        for ((z, p), e) in self.atoms.iter().zip(&w) {
            let m = p * e;
            let (x, y) = (z.x as f64, z.y as f64);
            value += m;
            grad += Vec2::new(x * m, y * m);
            hess.xx += x * x * m;
            hess.xy += x * y * m;
            hess.yy += y * y * m;
        }
        hess.yx = hess.xy;
        Ok((value, grad, hess))
    }

    /// Exponentially tilted increment weights `γ(w) e^{a·w}`.
    pub fn tilt(&self, a: Vec2) -> Result<TiltedLaw> {
        let w = self.exp_weights(a)?;
        let atoms: Vec<_> = self
            .atoms
            .iter()
            .zip(&w)
            .map(|(&(z, p), e)| (z, p * e))
            .collect();
        let total_mass = atoms.iter().map(|(_, m)| m).sum();
        Ok(TiltedLaw { base: self.clone(), a, atoms, total_mass })
    }
}

/// The tilted (possibly substochastic) increment weights of a [`StepLaw`].
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedLaw {
    base: StepLaw,
    a: Vec2,
    atoms: Vec<(LatticePoint, f64)>,
    total_mass: f64,
}

impl TiltedLaw {
    pub fn base(&self) -> &StepLaw {
        &self.base
    }

    pub fn tilt(&self) -> Vec2 {
        self.a
    }

    pub fn atoms(&self) -> &[(LatticePoint, f64)] {
        &self.atoms
    }

    /// `φ(a)`; one exactly when `a` lies on the boundary of `D`.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// Mass lost per step, `1 − φ(a)`, clamped at zero.
    pub fn kill_mass(&self) -> f64 {
        (1.0 - self.total_mass).max(0.0)
    }

    /// Drift of the normalised tilted law, `∇φ(a)/φ(a)`.
    pub fn normalized_drift(&self) -> Vec2 {
        self.atoms
            .iter()
            .fold(Vec2::ZERO, |acc, &(z, m)| acc + z.to_vec2() * (m / self.total_mass))
    }
}

/// Outcome of the aperiodicity check for one projected walk `f_i·S`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Aperiodicity {
    Aperiodic,
    /// The projected support generates `period · (f_i·ℤ²)`.
    Periodic { period: i64 },
    /// The normal has no rational direction; nothing decidable from finitely many atoms.
    NotCheckable,
}

/// Diagnostics for the modelling assumptions on a law and a cone.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub drift: Vec2,
    /// Non-zero drift.
    pub drift_nonzero: bool,
    /// The group generated by the support is all of `ℤ²`.
    pub generates_lattice: bool,
    /// The support positively spans the plane (needed for the walk to return and for `D` to be compact).
    pub spans_plane: bool,
    /// Box half-width used for the killed-walk irreducibility check.
    pub a2_box_radius: i64,
    pub killed_irreducible: bool,
    pub aperiodicity: [Aperiodicity; 2],
    pub warnings: Vec<String>,
}

impl AssumptionReport {
    /// Irreducibility of the free walk: the support generates `ℤ²` as a semigroup.
    pub fn irreducible(&self) -> bool {
        self.generates_lattice && self.spans_plane
    }

    /// Hard failures are a zero drift, a reducible walk, or a reducible killed walk.
    pub fn passes(&self) -> bool {
        self.drift_nonzero && self.irreducible() && self.killed_irreducible
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.drift_nonzero {
            out.push("A1: drift is zero".to_string());
        }
        if !self.generates_lattice {
            out.push("A1: support generates a proper sublattice of Z^2 (not irreducible)".to_string());
        }
        if !self.spans_plane {
            out.push("A1: support lies in a closed half-plane (not irreducible)".to_string());
        }
        if !self.killed_irreducible {
            out.push(format!(
                "A2: killed walk is not irreducible on the box of radius {}",
                self.a2_box_radius
            ));
        }
        for (i, ap) in self.aperiodicity.iter().enumerate() {
            if let Aperiodicity::Periodic { period } = ap {
                out.push(format!("A4: projection on f{} has period {period}", i + 1));
            }
        }
        out
    }
}

/// Default half-width of the box on which killed-walk irreducibility is checked.
pub const DEFAULT_A2_RADIUS: i64 = 50;

/// Checks the modelling assumptions for `law` on `cone`.
///
/// Irreducibility of the killed walk is only certified on the box
/// `|z|∞ ≤ a2_radius`; aperiodicity of `f_i·S` only when the cone has integer
/// direction vectors.
pub fn validate(law: &StepLaw, cone: &ConeGeometry, a2_radius: i64) -> AssumptionReport {
    let drift = law.drift();
    let steps: Vec<LatticePoint> = law.atoms().iter().map(|(z, _)| *z).collect();
    let mut warnings = Vec::new();

    let aperiodicity = [0, 1].map(|i| match cone.integer_normal(i) {
        Some(n) => {
            let g = steps.iter().fold(0_i64, |g, w| gcd(g, n.dot(*w)));
            let lattice = gcd(n.x, n.y);
            if g == 0 {
                Aperiodicity::Periodic { period: 0 }
            } else if g == lattice {
                Aperiodicity::Aperiodic
            } else {
                Aperiodicity::Periodic { period: g / lattice }
            }
        }
        None => Aperiodicity::NotCheckable,
    });
    if aperiodicity.contains(&Aperiodicity::NotCheckable) {
        warnings.push("A4 not mechanically checkable: cone normals are not rational".to_string());
    }
    if !cone.is_exact() {
        warnings.push("cone given by angles: membership uses a 1e-12 guard band".to_string());
    }

    AssumptionReport {
        drift,
        drift_nonzero: drift.norm() > 0.0,
        generates_lattice: generates_lattice(&steps),
        spans_plane: positively_spans(&steps),
        a2_box_radius: a2_radius,
        killed_irreducible: killed_irreducible(&steps, cone, a2_radius),
        aperiodicity,
        warnings,
    }
}

pub(crate) fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// The index of the subgroup generated by `steps` is the gcd of all 2×2 minors.
fn generates_lattice(steps: &[LatticePoint]) -> bool {
    let mut g = 0;
    for (i, u) in steps.iter().enumerate() {
        for v in &steps[i + 1..] {
            g = gcd(g, u.cross(*v));
        }
    }
    g == 1
}

/// True when the non-zero steps are not contained in any closed half-plane through 0.
fn positively_spans(steps: &[LatticePoint]) -> bool {
    let mut dirs: Vec<LatticePoint> = steps.iter().copied().filter(|z| *z != LatticePoint::default()).collect();
    if dirs.len() < 3 {
        return false;
    }
    dirs.sort_by(|a, b| {
        let ta = (a.y as f64).atan2(a.x as f64);
        let tb = (b.y as f64).atan2(b.x as f64);
        ta.total_cmp(&tb)
    });
    // Every cyclic gap between consecutive directions must be strictly below π.
    (0..dirs.len()).all(|k| {
        let u = dirs[k];
        let v = dirs[(k + 1) % dirs.len()];
        let c = u.cross(v);
        c > 0 || (c == 0 && u.dot(v) > 0)
    })
}

/// Every interior state of the box communicates with every other one through
/// paths inside `K`, allowed to leave the box by up to two jump radii.
fn killed_irreducible(steps: &[LatticePoint], cone: &ConeGeometry, radius: i64) -> bool {
    let max_jump = steps.iter().map(|z| z.norm_inf()).max().unwrap_or(0);
    let outer = radius + 2 * max_jump;
    let targets: Vec<LatticePoint> = (-radius..=radius)
        .flat_map(|x| (-radius..=radius).map(move |y| LatticePoint::new(x, y)))
        .filter(|z| cone.contains(*z) == Membership::Interior)
        .collect();
    let Some(&hub) = targets.first() else {
        return false;
    };
    let reach = |sign: i64| -> HashSet<LatticePoint> {
        let mut seen = HashSet::from([hub]);
        let mut queue = VecDeque::from([hub]);
        while let Some(z) = queue.pop_front() {
            for w in steps {
                let next = LatticePoint::new(z.x + sign * w.x, z.y + sign * w.y);
                if next.norm_inf() <= outer
                    && cone.contains(next) == Membership::Interior
                    && seen.insert(next)
                {
                    queue.push_back(next);
                }
            }
        }
        seen
    };
    let forward = reach(1);
    let backward = reach(-1);
    targets.iter().all(|z| forward.contains(z) && backward.contains(z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone::ConeGeometry;

    fn drifted() -> StepLaw {
        StepLaw::from_triples(&[(1, 0, 0.4), (-1, 0, 0.1), (0, 1, 0.4), (0, -1, 0.1)]).unwrap()
    }

    fn quadrant() -> ConeGeometry {
        ConeGeometry::from_dirs(LatticePoint::new(0, 1), LatticePoint::new(1, 0)).unwrap()
    }

    #[test]
    fn drift_examples() {
        let m = drifted().drift();
        assert!((m.x - 0.3).abs() < 1e-15 && (m.y - 0.3).abs() < 1e-15);
        let sym = StepLaw::from_triples(&[(1, 0, 0.25), (-1, 0, 0.25), (0, 1, 0.25), (0, -1, 0.25)]).unwrap();
        assert_eq!(sym.drift(), Vec2::ZERO);
        let single = StepLaw::from_triples(&[(1, 1, 1.0)]).unwrap();
        assert_eq!(single.drift(), Vec2::new(1.0, 1.0));
    }

    #[test]
    fn phi_examples() {
        let law = drifted();
        let ln2 = std::f64::consts::LN_2;
        assert!((law.phi(Vec2::ZERO).unwrap() - 1.0).abs() < 1e-15);
        assert!((law.phi(Vec2::new(-ln2, 0.0)).unwrap() - 0.9).abs() < 1e-15);
        assert!((law.phi(Vec2::new(ln2, 0.0)).unwrap() - 1.35).abs() < 1e-15);
    }

    #[test]
    fn grad_and_hessian_examples() {
        let law = drifted();
        let g = law.grad_phi(Vec2::new(-std::f64::consts::LN_2, 0.0)).unwrap();
        assert!(g.x.abs() < 1e-15 && (g.y - 0.3).abs() < 1e-15);
        assert_eq!(law.grad_phi(Vec2::ZERO).unwrap(), law.drift());
        let h = law.hessian_phi(Vec2::ZERO).unwrap();
        assert!((h.xx - 0.5).abs() < 1e-15 && (h.yy - 0.5).abs() < 1e-15 && h.xy == 0.0);
    }

    #[test]
    fn overflow_guard() {
        let err = drifted().phi(Vec2::new(701.0, 0.0)).unwrap_err();
        assert!(matches!(err, Error::Range { .. }));
        assert!(matches!(drifted().phi(Vec2::new(-701.0, 0.0)), Err(Error::Range { .. })));
        assert!(drifted().phi(Vec2::new(699.0, -699.0)).is_ok());
    }

    #[test]
    fn rejects_malformed_laws() {
        assert!(StepLaw::from_triples(&[]).is_err());
        assert!(StepLaw::from_triples(&[(1, 0, 0.5), (1, 0, 0.5)]).is_err());
        assert!(StepLaw::from_triples(&[(1, 0, 0.5), (0, 1, 0.4)]).is_err());
        assert!(StepLaw::from_triples(&[(1, 0, 1.5), (0, 1, -0.5)]).is_err());
    }

    #[test]
    fn zero_tilt_is_identity() {
        let law = drifted();
        let t = law.tilt(Vec2::ZERO).unwrap();
        assert_eq!(t.atoms(), law.atoms());
        assert_eq!(t.total_mass(), 1.0);
    }

    #[test]
    fn validate_drifted_quadrant_passes() {
        let r = validate(&drifted(), &quadrant(), 50);
        assert!(r.passes(), "{:?}", r.failures());
        assert_eq!(r.aperiodicity, [Aperiodicity::Aperiodic, Aperiodicity::Aperiodic]);
        assert!(r.warnings.is_empty());
    }

    #[test]
    fn validate_rejects_zero_drift() {
        let sym = StepLaw::from_triples(&[(1, 0, 0.25), (-1, 0, 0.25), (0, 1, 0.25), (0, -1, 0.25)]).unwrap();
        let r = validate(&sym, &quadrant(), 10);
        assert!(!r.drift_nonzero && !r.passes());
    }

    #[test]
    fn validate_rejects_sublattice() {
        let even = StepLaw::from_triples(&[(2, 0, 0.4), (0, 2, 0.4), (-2, 0, 0.1), (0, -2, 0.1)]).unwrap();
        let r = validate(&even, &quadrant(), 10);
        assert!(!r.generates_lattice && !r.irreducible());
    }

    #[test]
    fn validate_single_atom_fails_killed_irreducibility() {
        let single = StepLaw::from_triples(&[(1, 1, 1.0)]).unwrap();
        let r = validate(&single, &quadrant(), 10);
        assert!(!r.killed_irreducible);
        assert!(!r.irreducible());
    }

    #[test]
    fn half_plane_support_is_not_irreducible() {
        let law = StepLaw::from_triples(&[(1, 0, 0.5), (0, 1, 0.5)]).unwrap();
        let r = validate(&law, &quadrant(), 10);
        assert!(r.generates_lattice && !r.spans_plane);
    }

    #[test]
    fn periodic_projection_is_reported() {
        // Diagonal steps only: x + y changes by ±2 or 0, x - y likewise.
        let law = StepLaw::from_triples(&[(1, 1, 0.4), (1, -1, 0.2), (-1, 1, 0.2), (-1, -1, 0.2)]).unwrap();
        let cone = ConeGeometry::from_dirs(LatticePoint::new(1, 1), LatticePoint::new(1, -1)).unwrap();
        let r = validate(&law, &cone, 10);
        assert_eq!(r.aperiodicity[0], Aperiodicity::Periodic { period: 2 });
    }
}
