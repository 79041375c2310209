//! The positive harmonic functions `h_a` of the killed walk, assembled from
//! exit expectations, with positivity and harmonicity diagnostics.

use std::sync::Arc;

use crate::cone::{ConeGeometry, Wall};
use crate::error::{Error, Result};
use crate::solver::{
    Bracket, FieldKind, HarmonicField, LatticeSolver, Payoff, Restriction, SolveOptions, TruncatedDomain,
};
use crate::step_law::{LatticePoint, StepLaw};
use crate::tilt::{a_of, epsilon_for_delta, q_of, TiltPoint, ANGLE_TOL};
use crate::vec2::Vec2;

/// Which formula defines `h_a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `q(a) = c_i`: `h = (f_i·z) e^{a·z} − E_z[(f_i·S(τ)) e^{a·S(τ)}; τ < ∞]`.
    Endpoint(Wall),
    /// `q(a)` strictly inside the sector: `h = e^{a·z} − E_z[e^{a·S(τ)}; τ < ∞]`.
    Interior,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::Endpoint(Wall::First) => "endpoint_c1",
            Branch::Endpoint(Wall::Second) => "endpoint_c2",
            Branch::Interior => "interior_gamma",
        }
    }
}

#[derive(Debug, Clone)]
pub struct HarmonicSpec {
    pub law: StepLaw,
    pub cone: ConeGeometry,
    pub a: TiltPoint,
    pub branch: Branch,
    /// Set when `q(a)` is within ten angular tolerances of a wall direction.
    pub warnings: Vec<String>,
}

impl HarmonicSpec {
    /// Dispatches the branch from `q(a)`; `a` must lie on `∂D` with `q(a) ∈ Σ`.
    pub fn new(law: &StepLaw, cone: &ConeGeometry, a: TiltPoint) -> Result<Self> {
        if !a.on_boundary() {
            return Err(Error::Branch(format!("tilt {} is not on ∂D (φ = {})", a.a, a.phi)));
        }
        let q = q_of(&a)?;
        let angles = [q.angle_to(cone.c1()), q.angle_to(cone.c2())];
        let mut warnings = Vec::new();
        let branch = if angles[0] <= ANGLE_TOL {
            Branch::Endpoint(Wall::First)
        } else if angles[1] <= ANGLE_TOL {
            Branch::Endpoint(Wall::Second)
        } else if cone.sector_interior_contains(q, ANGLE_TOL) {
            Branch::Interior
        } else {
            return Err(Error::Branch(format!("q(a) = {q} lies outside the sector of the cone")));
        };
        if let Some(k) = angles.iter().position(|&t| t > ANGLE_TOL && t <= 10.0 * ANGLE_TOL) {
            warnings.push(format!(
                "q(a) is {:.3e} rad from c{}: close to the branch switch",
                angles[k],
                k + 1
            ));
        }
        Ok(HarmonicSpec { law: law.clone(), cone: *cone, a, branch, warnings })
    }

    /// The endpoint branch at `a(c_i)`.
    pub fn endpoint(law: &StepLaw, cone: &ConeGeometry, wall: Wall) -> Result<Self> {
        HarmonicSpec::new(law, cone, a_of(law, cone.c(wall))?)
    }

    /// The function attached to the direction `q ∈ Σ`, at `a(q)`.
    pub fn for_direction(law: &StepLaw, cone: &ConeGeometry, q: Vec2) -> Result<Self> {
        HarmonicSpec::new(law, cone, a_of(law, q)?)
    }

    /// The exit payoff whose expectation is subtracted.
    pub fn payoff(&self) -> Payoff {
        match self.branch {
            Branch::Endpoint(wall) => Payoff::LinearExp(wall),
            Branch::Interior => Payoff::Exp,
        }
    }

    /// `e^{-a·z}` times the free part: `f_i·z` or `1`.
    pub fn free_scaled(&self, z: LatticePoint) -> f64 {
        match self.branch {
            Branch::Endpoint(wall) => self.cone.f_dot(wall, z),
            Branch::Interior => 1.0,
        }
    }
}

/// `h` together with the exit expectation it was assembled from.
#[derive(Debug, Clone)]
pub struct HarmonicBuild {
    pub h: HarmonicField,
    pub exit: HarmonicField,
}

/// Builds `h_a` on `domain`. Values are scaled by `e^{-a·z}`.
pub fn build_h(spec: &HarmonicSpec, domain: &Arc<TruncatedDomain>) -> Result<HarmonicField> {
    Ok(build_h_detailed(spec, domain, &SolveOptions::default())?.h)
}

pub fn build_h_detailed(spec: &HarmonicSpec, domain: &Arc<TruncatedDomain>, options: &SolveOptions) -> Result<HarmonicBuild> {
    if domain.cone() != &spec.cone {
        return Err(Error::Precondition("domain was built for a different cone".into()));
    }
    let solver = LatticeSolver::new(&spec.law, domain, &spec.a, options)?;
    build_h_with(spec, &solver)
}

/// Builds `h_a` with an existing solver for `(law, domain, a)`.
pub fn build_h_with(spec: &HarmonicSpec, solver: &LatticeSolver) -> Result<HarmonicBuild> {
    if solver.tilt().a != spec.a.a {
        return Err(Error::Branch("solver tilt differs from the requested tilt".into()));
    }
    let exit = solver.exit_expectation(spec.payoff(), Restriction::AllExits)?;
    let domain = solver.domain();
    let values = domain
        .states()
        .iter()
        .zip(exit.scaled_values())
        .map(|(z, u)| Bracket::point(spec.free_scaled(*z)) - *u)
        .collect();
    let kind = match spec.branch {
        Branch::Endpoint(wall) => FieldKind::HarmonicEndpoint(wall),
        Branch::Interior => FieldKind::HarmonicInterior,
    };
    let mut h = HarmonicField::from_scaled(Arc::clone(domain), kind, spec.a.a, spec.a.a, values);
    h.certified = exit.is_certified();
    h.residual = exit.solve_residual();
    h.far = exit.far_values().to_vec();
    h.warnings = spec.warnings.iter().chain(exit.warnings()).cloned().collect();
    Ok(HarmonicBuild { h, exit })
}

/// Three-way positivity classification of the states of an `h` field.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivityReport {
    pub positive: usize,
    /// Bracket straddles 0: increase R.
    pub inconclusive: Vec<LatticePoint>,
    /// Whole bracket below 0.
    pub violations: Vec<LatticePoint>,
}

impl PositivityReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }

    /// Inconclusive states with `|z|∞ ≤ radius`.
    pub fn inconclusive_within(&self, radius: i64) -> usize {
        self.inconclusive.iter().filter(|z| z.norm_inf() <= radius).count()
    }
}

pub fn check_positive(h: &HarmonicField) -> PositivityReport {
    let mut report = PositivityReport { positive: 0, inconclusive: Vec::new(), violations: Vec::new() };
    for (z, b) in h.domain().states().iter().zip(h.scaled_values()) {
        if b.lo > 0.0 {
            report.positive += 1;
        } else if b.hi < 0.0 {
            report.violations.push(*z);
        } else {
            report.inconclusive.push(*z);
        }
    }
    report
}

/// `f_q(z) = (q⊥·z) e^{a(q)·z}` and its one-step defect for the free walk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MartingaleDefect {
    pub value: f64,
    /// `E_z[f_q(S(1))] − f_q(z)` by direct summation over the support.
    pub residual: f64,
}

pub fn free_martingale_defect(law: &StepLaw, q: Vec2, q_perp: Vec2, z: LatticePoint) -> Result<MartingaleDefect> {
    let q = q.normalized();
    if (q.dot(q_perp)).abs() > 1e-14 || (q_perp.norm() - 1.0).abs() > 1e-14 {
        return Err(Error::Precondition(format!("{q_perp} is not a unit vector orthogonal to {q}")));
    }
    let a = a_of(law, q)?.a;
    let zv = z.to_vec2();
    let base = a.dot(zv);
    let scale = base.exp();
    let mean: f64 = law
        .atoms()
        .iter()
        .map(|(w, p)| p * (a.dot(w.to_vec2())).exp() * q_perp.dot(zv + w.to_vec2()))
        .sum();
    Ok(MartingaleDefect {
        value: q_perp.dot(zv) * scale,
        residual: (mean - q_perp.dot(zv)) * scale,
    })
}

/// The opposite-wall term of an endpoint function against its exponential bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BTermReport {
    pub z: LatticePoint,
    pub delta: f64,
    pub epsilon: f64,
    /// `e^{-a·z} E_z[(f_i·S(τ)) e^{a·S(τ)}; τ = τ_j < τ_i]`.
    pub computed: Bracket,
    /// `(1/δ) e^{(ε f_j − δ f_i)·z}`.
    pub bound_flipped_sign: f64,
    /// `(1/δ) e^{(δ f_i − ε f_j)·z}`, which is what the estimate yields.
    pub bound_derived: f64,
}

impl BTermReport {
    pub fn holds_flipped_sign(&self, tol: f64) -> bool {
        self.computed.hi <= self.bound_flipped_sign + tol
    }

    pub fn holds_derived(&self, tol: f64) -> bool {
        self.computed.hi <= self.bound_derived + tol
    }
}

/// Evaluates the opposite-wall term at `z` and both forms of its bound.
///
/// `opposite` must be the field `exit_expectation(LinearExp(i), only(j))` at
/// `a(c_i)`, as produced by [`b_term_field`].
pub fn b_term_bound(spec: &HarmonicSpec, opposite: &HarmonicField, z: LatticePoint, delta: f64) -> Result<BTermReport> {
    let Branch::Endpoint(wall) = spec.branch else {
        return Err(Error::Branch("the opposite-wall term belongs to the endpoint branch".into()));
    };
    let computed = opposite
        .scaled_at(z)
        .ok_or_else(|| Error::Precondition(format!("{z} is not an interior state of the domain")))?;
    let (fi, fj) = (spec.cone.f(wall), spec.cone.f(wall.other()));
    let epsilon = epsilon_for_delta(&spec.law, &spec.a, delta, fi, fj)?;
    let zv = z.to_vec2();
    let exponent = delta * fi.dot(zv) - epsilon * fj.dot(zv);
    Ok(BTermReport {
        z,
        delta,
        epsilon,
        computed,
        bound_flipped_sign: (-exponent).exp() / delta,
        bound_derived: exponent.exp() / delta,
    })
}

/// `exit_expectation(LinearExp(i), only_tau_j_first)` for an endpoint spec.
pub fn b_term_field(spec: &HarmonicSpec, solver: &LatticeSolver) -> Result<HarmonicField> {
    let Branch::Endpoint(wall) = spec.branch else {
        return Err(Error::Branch("the opposite-wall term belongs to the endpoint branch".into()));
    };
    solver.exit_expectation(Payoff::LinearExp(wall), Restriction::only(wall.other()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{harmonicity_residual, survival_probability};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn drifted() -> StepLaw {
        StepLaw::from_triples(&[(1, 0, 0.4), (-1, 0, 0.1), (0, 1, 0.4), (0, -1, 0.1)]).unwrap()
    }

    fn domain(cone: &ConeGeometry, law: &StepLaw, r: i64) -> Arc<TruncatedDomain> {
        Arc::new(TruncatedDomain::build(cone, law, r).unwrap())
    }

    #[test]
    fn branch_dispatch() {
        let law = drifted();
        let cone = ConeGeometry::quadrant();
        assert_eq!(HarmonicSpec::endpoint(&law, &cone, Wall::First).unwrap().branch, Branch::Endpoint(Wall::First));
        assert_eq!(HarmonicSpec::endpoint(&law, &cone, Wall::Second).unwrap().branch, Branch::Endpoint(Wall::Second));
        let mid = HarmonicSpec::for_direction(&law, &cone, Vec2::new(1.0, 1.0)).unwrap();
        assert_eq!(mid.branch, Branch::Interior);
        assert!(matches!(HarmonicSpec::for_direction(&law, &cone, Vec2::new(-1.0, 1.0)), Err(Error::Branch(_))));
        let inside = TiltPoint::evaluate(&law, Vec2::new(-0.1, 0.0)).unwrap();
        assert!(matches!(HarmonicSpec::new(&law, &cone, inside), Err(Error::Branch(_))));
        let near = Vec2::from_angle(std::f64::consts::FRAC_PI_2 - 5e-8);
        let spec = HarmonicSpec::for_direction(&law, &cone, near).unwrap();
        assert_eq!(spec.branch, Branch::Interior);
        assert_eq!(spec.warnings.len(), 1);
    }

    #[test]
    fn zero_tilt_interior_branch_is_survival() {
        let law = drifted();
        let cone = ConeGeometry::quadrant();
        let spec = HarmonicSpec::for_direction(&law, &cone, law.drift()).unwrap();
        assert!(spec.a.a.norm() < 1e-12);
        let d = domain(&cone, &law, 30);
        let h = build_h(&spec, &d).unwrap();
        let s = survival_probability(&law, &d, &spec.a).unwrap();
        for i in 0..d.len() {
            assert!(h.scaled(i).overlaps(&s.scaled(i), 1e-10));
        }
    }

    #[test]
    fn interior_and_endpoint_functions_are_harmonic_and_nonnegative() {
        let law = drifted();
        let cone = ConeGeometry::quadrant();
        let d = domain(&cone, &law, 60);
        for spec in [
            HarmonicSpec::endpoint(&law, &cone, Wall::First).unwrap(),
            HarmonicSpec::endpoint(&law, &cone, Wall::Second).unwrap(),
            HarmonicSpec::for_direction(&law, &cone, Vec2::new(1.0, 3.0)).unwrap(),
        ] {
            let h = build_h(&spec, &d).unwrap();
            let rep = harmonicity_residual(&h, &law);
            assert!(rep.passes, "{:?}: {rep:?}", spec.branch);
            assert!(check_positive(&h).passes());
        }
    }

    #[test]
    fn positivity_near_walls_improves_with_radius() {
        let law = drifted();
        let cone = ConeGeometry::quadrant();
        let spec = HarmonicSpec::endpoint(&law, &cone, Wall::First).unwrap();
        let small = check_positive(&build_h(&spec, &domain(&cone, &law, 30)).unwrap());
        let large = check_positive(&build_h(&spec, &domain(&cone, &law, 50)).unwrap());
        assert!(large.inconclusive_within(30) <= small.inconclusive.len());
    }

    #[test]
    fn free_martingale_defect_examples() {
        let law = drifted();
        let m = law.drift().normalized();
        let r = free_martingale_defect(&law, m, m.perp(), LatticePoint::new(5, 3)).unwrap();
        assert!(r.residual.abs() < 1e-14);
        let flipped = free_martingale_defect(&law, m, -m.perp(), LatticePoint::new(5, 3)).unwrap();
        assert_eq!(flipped.value, -r.value);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let q = Vec2::from_angle(rng.random_range(0.0..std::f64::consts::TAU));
            let z = LatticePoint::new(rng.random_range(-20..=20), rng.random_range(-20..=20));
            let r = free_martingale_defect(&law, q, q.perp(), z).unwrap();
            assert!(r.residual.abs() <= 1e-10 * r.value.abs() + 1e-12, "{q} {z} {r:?}");
        }
    }

    #[test]
    fn free_martingale_defect_rejects_non_orthogonal() {
        let q = Vec2::new(1.0, 0.0);
        assert!(free_martingale_defect(&drifted(), q, Vec2::new(0.6, 0.8), LatticePoint::new(1, 1)).is_err());
    }

    #[test]
    fn derived_b_bound_holds_and_symmetric_law_is_symmetric() {
        let law = StepLaw::from_triples(&[(1, 0, 0.35), (-1, 0, 0.15), (0, 1, 0.35), (0, -1, 0.15)]).unwrap();
        let cone = ConeGeometry::quadrant();
        let d = domain(&cone, &law, 40);
        let mut reports = Vec::new();
        for wall in Wall::both() {
            let spec = HarmonicSpec::endpoint(&law, &cone, wall).unwrap();
            let solver = LatticeSolver::new(&law, &d, &spec.a, &SolveOptions::default()).unwrap();
            let opp = b_term_field(&spec, &solver).unwrap();
            let z = if wall == Wall::First { LatticePoint::new(3, 9) } else { LatticePoint::new(9, 3) };
            let mut eps_prev = f64::INFINITY;
            for k in 1..6 {
                let rep = b_term_bound(&spec, &opp, z, 0.5_f64.powi(k)).unwrap();
                assert!(rep.holds_derived(1e-10), "{rep:?}");
                assert!(rep.epsilon < eps_prev);
                eps_prev = rep.epsilon;
            }
            reports.push(b_term_bound(&spec, &opp, z, 0.25).unwrap());
        }
        assert!((reports[0].bound_derived - reports[1].bound_derived).abs() < 1e-9 * reports[0].bound_derived);
        assert!((reports[0].computed.hi - reports[1].computed.hi).abs() < 1e-10);
    }
}
