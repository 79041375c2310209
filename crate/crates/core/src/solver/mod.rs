//! Exit expectations, survival probabilities and Green functions of the walk
//! killed on leaving the cone, computed on truncated domains with certified
//! brackets for the truncation error.

mod bounds;
mod domain;
mod field;
mod linear;

use std::sync::Arc;

pub use domain::{Successor, TruncatedDomain, DEFAULT_STATE_CAP};
pub use field::{Bracket, FieldKind, HarmonicField};
pub use linear::{LinearMethod, SolveOptions, DIRECT_STATE_LIMIT};

pub(crate) use bounds::FarBounds;

use crate::cone::{BoundaryStatus, ConeGeometry, Membership, Wall};
use crate::error::{Error, Result};
use crate::step_law::{LatticePoint, StepLaw};
use crate::tilt::{q_of, TiltPoint, ANGLE_TOL};
use crate::vec2::Vec2;

use linear::KernelSystem;

/// Slack allowed on `φ(a) ≤ 1` for a tilt to count as a point of `D`.
pub const D_MEMBERSHIP_TOL: f64 = 1e-10;

/// Exit payoff `g(S(τ))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Payoff {
    /// `e^{a·z}`.
    Exp,
    /// `(f_i·z) e^{a·z}`.
    LinearExp(Wall),
}

impl Payoff {
    /// The bucket that receives exits violating both half-planes at once.
    pub fn tie_owner(self) -> Wall {
        match self {
            Payoff::Exp => Wall::First,
            Payoff::LinearExp(wall) => wall,
        }
    }
}

/// Which exits contribute to an exit expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Restriction {
    #[default]
    AllExits,
    /// Exits where `H_1` is left first (`τ = τ_1`).
    OnlyTau1First,
    /// Exits where `H_2` is left first (`τ = τ_2`).
    OnlyTau2First,
}

impl Restriction {
    pub fn only(wall: Wall) -> Self {
        match wall {
            Wall::First => Restriction::OnlyTau1First,
            Wall::Second => Restriction::OnlyTau2First,
        }
    }

    pub fn bucket(self) -> Option<Wall> {
        match self {
            Restriction::AllExits => None,
            Restriction::OnlyTau1First => Some(Wall::First),
            Restriction::OnlyTau2First => Some(Wall::Second),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Restriction::AllExits => "all_exits",
            Restriction::OnlyTau1First => "only_tau1_first",
            Restriction::OnlyTau2First => "only_tau2_first",
        }
    }

    fn admits(self, status: BoundaryStatus, owner: Wall) -> bool {
        match self.bucket() {
            None => true,
            Some(wall) => exit_bucket(status, owner) == Some(wall),
        }
    }
}

/// The wall an exit is charged to; ties go to `owner`.
pub fn exit_bucket(status: BoundaryStatus, owner: Wall) -> Option<Wall> {
    match status {
        BoundaryStatus::None => None,
        BoundaryStatus::H1Violated => Some(Wall::First),
        BoundaryStatus::H2Violated => Some(Wall::Second),
        BoundaryStatus::Both => Some(owner),
    }
}

/// Whether `a` is the boundary point `a(c_i)` to within the angular tolerance.
pub fn is_endpoint_tilt(a: &TiltPoint, cone: &ConeGeometry, wall: Wall) -> bool {
    a.on_boundary() && q_of(a).map(|q| q.angle_to(cone.c(wall)) <= ANGLE_TOL).unwrap_or(false)
}

enum Source {
    None,
    Uniform(f64),
    Unit(usize),
}

struct Job {
    exit: Vec<f64>,
    far: Vec<Bracket>,
    source: Source,
}

/// A kernel system for one `(law, domain, a)`, factored once and reused for
/// every payoff.
pub struct LatticeSolver {
    domain: Arc<TruncatedDomain>,
    a: TiltPoint,
    weights: Vec<f64>,
    kill: f64,
    system: KernelSystem,
    /// Absent only for the untilted Green-function solver, which needs none.
    bounds: Option<FarBounds>,
    options: SolveOptions,
}

impl LatticeSolver {
    pub fn new(law: &StepLaw, domain: &Arc<TruncatedDomain>, a: &TiltPoint, options: &SolveOptions) -> Result<Self> {
        let mut solver = LatticeSolver::without_bounds(law, domain, a, options)?;
        solver.bounds = Some(FarBounds::new(law, domain.cone(), a)?);
        Ok(solver)
    }

    fn without_bounds(law: &StepLaw, domain: &Arc<TruncatedDomain>, a: &TiltPoint, options: &SolveOptions) -> Result<Self> {
        domain.check_law(law)?;
        if a.phi > 1.0 + D_MEMBERSHIP_TOL {
            return Err(Error::Precondition(format!("tilt {} lies outside D (φ = {})", a.a, a.phi)));
        }
        let tilted = law.tilt(a.a)?;
        let weights: Vec<f64> = tilted.atoms().iter().map(|(_, w)| *w).collect();
        let kill = tilted.kill_mass().max(0.0);
        let system = KernelSystem::new(domain, &weights, options)?;
        Ok(LatticeSolver { domain: Arc::clone(domain), a: *a, weights, kill, system, bounds: None, options: *options })
    }

    fn bounds(&self) -> &FarBounds {
        self.bounds.as_ref().expect("far-frontier bounds are built by LatticeSolver::new")
    }

    pub fn domain(&self) -> &Arc<TruncatedDomain> {
        &self.domain
    }

    pub fn tilt(&self) -> &TiltPoint {
        &self.a
    }

    /// Largest `λ` with `φ(a − λ f_i) = 1`.
    pub fn lundberg_shift(&self, wall: Wall) -> f64 {
        self.bounds().lundberg(wall)
    }

    /// `(δ, ε)` pairs used for the opposite-wall bound of wall `i`.
    pub fn delta_ladder(&self, wall: Wall) -> &[(f64, f64)] {
        self.bounds().ladder(wall)
    }

    /// `max(0, max_w(−f_i·w) − gap_i)`: the depth below wall `i` one step can reach.
    pub fn overshoot(&self, wall: Wall) -> f64 {
        self.bounds().overshoot(wall)
    }

    pub fn exit_expectation(&self, payoff: Payoff, restriction: Restriction) -> Result<HarmonicField> {
        Ok(self.exit_expectations(&[(payoff, restriction)])?.remove(0))
    }

    /// Several exit expectations sharing one factorization.
    ///
    /// Values are scaled by `e^{-a·z}`. The linear payoff needs `a = a(c_i)`:
    /// its far-frontier bounds rest on `(f_i·z) e^{a·z}` being harmonic.
    pub fn exit_expectations(&self, requests: &[(Payoff, Restriction)]) -> Result<Vec<HarmonicField>> {
        let cone = *self.domain.cone();
        let mut jobs = Vec::with_capacity(requests.len());
        for &(payoff, restriction) in requests {
            if let Payoff::LinearExp(wall) = payoff {
                if !is_endpoint_tilt(&self.a, &cone, wall) {
                    return Err(Error::Precondition(format!(
                        "linear payoff for wall {} needs the endpoint tilt a(c{}), got {}",
                        wall.index() + 1,
                        wall.index() + 1,
                        self.a.a
                    )));
                }
            }
            let owner = payoff.tie_owner();
            let exit = self
                .domain
                .exit_frontier()
                .iter()
                .map(|&(z, status)| {
                    if !restriction.admits(status, owner) {
                        return 0.0;
                    }
                    match payoff {
                        Payoff::Exp => 1.0,
                        Payoff::LinearExp(wall) => cone.f_dot(wall, z),
                    }
                })
                .collect();
            let far = self
                .domain
                .far_frontier()
                .iter()
                .map(|&z| self.bounds().payoff(payoff, restriction, z))
                .collect();
            jobs.push(Job { exit, far, source: Source::None });
        }
        let solved = self.solve_jobs(&jobs)?;
        requests
            .iter()
            .zip(solved)
            .zip(jobs)
            .map(|((&(payoff, restriction), (values, residual)), job)| {
                let kind = match payoff {
                    Payoff::Exp => FieldKind::ExpPayoff,
                    Payoff::LinearExp(wall) => FieldKind::LinearExpPayoff(wall),
                };
                self.finish(kind, restriction, self.a.a, values, job.far, true, residual)
            })
            .collect()
    }

    /// Brackets `P_z(τ_a = ∞)`, counting killing before exit as survival.
    pub fn survival(&self) -> Result<HarmonicField> {
        let far: Vec<Bracket> = self
            .domain
            .far_frontier()
            .iter()
            .map(|&z| Bracket::new(1.0 - self.bounds().exit_mass_hi(z), 1.0))
            .collect();
        let job = Job { exit: vec![0.0; self.domain.exit_frontier().len()], far, source: Source::Uniform(self.kill) };
        let (values, residual) = self.solve_jobs(std::slice::from_ref(&job))?.remove(0);
        self.finish(FieldKind::Survival, Restriction::AllExits, Vec2::ZERO, values, job.far, true, residual)
    }

    fn solve_jobs(&self, jobs: &[Job]) -> Result<Vec<(Vec<Bracket>, f64)>> {
        let n = self.domain.len();
        let mut rhs = Vec::with_capacity(2 * jobs.len());
        for job in jobs {
            let mut lo = vec![0.0; n];
            let mut hi = vec![0.0; n];
            for i in 0..n {
                let base = match job.source {
                    Source::None => 0.0,
                    Source::Uniform(s) => s,
                    Source::Unit(t) => f64::from(u8::from(i == t)),
                };
                let (mut l, mut h) = (base, base);
                for (s, &w) in self.domain.successors(i).iter().zip(&self.weights) {
                    match *s {
                        Successor::Interior(_) => {}
                        Successor::Exit(e) => {
                            l += w * job.exit[e as usize];
                            h += w * job.exit[e as usize];
                        }
                        Successor::Far(f) => {
                            l += w * job.far[f as usize].lo;
                            h += w * job.far[f as usize].hi;
                        }
                    }
                }
                lo[i] = l;
                hi[i] = h;
            }
            rhs.push(lo);
            rhs.push(hi);
        }
        let (x, residual) = self.system.solve(&rhs)?;
        Ok(x.chunks(2)
            .map(|pair| (pair[0].iter().zip(&pair[1]).map(|(&l, &h)| Bracket::new(l, h)).collect(), residual))
            .collect())
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        kind: FieldKind,
        restriction: Restriction,
        scale: Vec2,
        values: Vec<Bracket>,
        far: Vec<Bracket>,
        certified: bool,
        residual: f64,
    ) -> Result<HarmonicField> {
        let mut field = HarmonicField {
            domain: Arc::clone(&self.domain),
            kind,
            restriction,
            tilt: self.a.a,
            scale,
            values,
            far,
            certified,
            residual,
            warnings: Vec::new(),
        };
        let gap = field.max_width_scaled();
        if let Some(limit) = self.options.max_gap {
            if gap > limit {
                return Err(Error::Domain(format!(
                    "bracket width {gap:.3e} exceeds {limit:.3e}: increase R (now {})",
                    self.domain.radius()
                )));
            }
        }
        if gap > 1e-3 {
            field.warnings.push(format!(
                "widest scaled bracket is {gap:.3e}; increase R (now {}) to tighten",
                self.domain.radius()
            ));
        }
        Ok(field)
    }
}

pub fn exit_expectation(
    law: &StepLaw,
    domain: &Arc<TruncatedDomain>,
    a: &TiltPoint,
    payoff: Payoff,
    restriction: Restriction,
) -> Result<HarmonicField> {
    LatticeSolver::new(law, domain, a, &SolveOptions::default())?.exit_expectation(payoff, restriction)
}

pub fn survival_probability(law: &StepLaw, domain: &Arc<TruncatedDomain>, a: &TiltPoint) -> Result<HarmonicField> {
    LatticeSolver::new(law, domain, a, &SolveOptions::default())?.survival()
}

/// `G(z, target) = Σ_n P_z(S(n) = target, τ > n)` for the untilted walk.
///
/// The lower bracket takes 0 on the far frontier and is certified. The upper
/// bracket uses the largest lower value as far-frontier value, which is a
/// heuristic, so the field is marked uncertified.
pub fn green_column(
    law: &StepLaw,
    domain: &Arc<TruncatedDomain>,
    target: LatticePoint,
    options: &SolveOptions,
) -> Result<HarmonicField> {
    let t = domain
        .index_of(target)
        .ok_or_else(|| Error::Precondition(format!("target {target} is not an interior state")))?;
    let a = TiltPoint::evaluate(law, Vec2::ZERO)?;
    let solver = LatticeSolver::without_bounds(law, domain, &a, options)?;
    let n_far = domain.far_frontier().len();
    let exit = vec![0.0; domain.exit_frontier().len()];
    let lo_job = Job { exit: exit.clone(), far: vec![Bracket::point(0.0); n_far], source: Source::Unit(t) };
    let (lo, _) = solver.solve_jobs(std::slice::from_ref(&lo_job))?.remove(0);
    let cap = lo.iter().map(|b| b.lo).fold(0.0, f64::max);
    let hi_job = Job { exit, far: vec![Bracket::new(0.0, cap); n_far], source: Source::Unit(t) };
    let (values, residual) = solver.solve_jobs(std::slice::from_ref(&hi_job))?.remove(0);
    let mut field = solver.finish(FieldKind::Green, Restriction::AllExits, Vec2::ZERO, values, hi_job.far, false, residual)?;
    field.warnings.push("upper bracket uses a heuristic far-frontier value".into());
    Ok(field)
}

/// One-step harmonicity defect of a field extended by zero outside the cone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualReport {
    /// States whose whole one-step neighbourhood is interior or exit.
    pub evaluated: usize,
    pub max_residual: f64,
    pub max_value: f64,
    /// `max_residual / max_value`.
    pub relative: f64,
    /// Largest `|r(z)| − (1e-8·max|h| + local bracket width)`; non-positive on pass.
    pub worst_excess: f64,
    pub passes: bool,
}

/// Relative tolerance on the one-step residual of a harmonic field.
pub const HARMONICITY_TOL: f64 = 1e-8;

/// `r(z) = h(z) − Σ_{z' ∈ K} γ(z' − z) h(z')` at bracket midpoints, with the
/// local bracket width added to the tolerance.
pub fn harmonicity_residual(field: &HarmonicField, law: &StepLaw) -> ResidualReport {
    let domain = field.domain();
    let probs: Vec<f64> = law.atoms().iter().map(|(_, p)| *p).collect();
    let mut rows = Vec::new();
    let mut max_value = 0.0_f64;
    for i in 0..domain.len() {
        let v = field.value(i);
        max_value = max_value.max(v.mid().abs());
        if !domain.is_fully_interior(i) {
            continue;
        }
        let (mut mean, mut width) = (0.0, v.width());
        for (s, &p) in domain.successors(i).iter().zip(&probs) {
            if let Successor::Interior(j) = *s {
                let vj = field.value(j as usize);
                mean += p * vj.mid();
                width += p * vj.width();
            }
        }
        rows.push(((v.mid() - mean).abs(), width));
    }
    let max_residual = rows.iter().map(|r| r.0).fold(0.0, f64::max);
    let allowance = HARMONICITY_TOL * max_value;
    let worst_excess = rows.iter().map(|&(r, w)| r - allowance - w).fold(f64::NEG_INFINITY, f64::max);
    ResidualReport {
        evaluated: rows.len(),
        max_residual,
        max_value,
        relative: if max_value > 0.0 { max_residual / max_value } else { 0.0 },
        worst_excess,
        passes: worst_excess <= 0.0,
    }
}

/// `P_{z0}(τ_a ≤ horizon)` for the tilted walk, by propagating mass exactly.
pub fn absorption_by_horizon(law: &StepLaw, cone: &ConeGeometry, a: Vec2, z0: LatticePoint, horizon: usize) -> Result<f64> {
    if cone.contains(z0) != Membership::Interior {
        return Err(Error::Precondition(format!("start {z0} is not inside the cone")));
    }
    let jump = law.max_jump();
    let radius = (z0.norm_inf() + horizon as i64 * jump).max(2 * jump);
    let domain = TruncatedDomain::build(cone, law, radius)?;
    let tilted = law.tilt(a)?;
    let weights: Vec<f64> = tilted.atoms().iter().map(|(_, w)| *w).collect();
    let start = domain.index_of(z0).expect("start lies in the box");
    let mut mass = vec![0.0; domain.len()];
    mass[start] = 1.0;
    let mut absorbed = 0.0;
    for _ in 0..horizon {
        let mut next = vec![0.0; domain.len()];
        for (i, &m) in mass.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for (s, &w) in domain.successors(i).iter().zip(&weights) {
                match *s {
                    Successor::Interior(j) => next[j as usize] += m * w,
                    Successor::Exit(_) => absorbed += m * w,
                    Successor::Far(_) => unreachable!("the box covers every path of the horizon"),
                }
            }
        }
        mass = next;
    }
    Ok(absorbed)
}

#[cfg(test)]
mod tests;
