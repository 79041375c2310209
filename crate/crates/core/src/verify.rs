//! The property suite over the bundled models: one verdict per criterion, with
//! per-model details and wall-clock timing.

use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cone::Wall;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::harmonic::{b_term_bound, b_term_field, build_h_with, check_positive, free_martingale_defect, HarmonicSpec};
use crate::models::{near_wall_probe, Model};
use crate::monte_carlo::{exit_probability_crosscheck, nearest_interior_point, strong_local_irreducibility_scan, McOptions, RngSpec};
use crate::quadrant::{quadrant_h, QuadrantBranch};
use crate::solver::{
    harmonicity_residual, LatticeSolver, Payoff, Restriction, SolveOptions, TruncatedDomain,
};
use crate::step_law::LatticePoint;
use crate::tilt::{a_of, gamma_arc, q_of, TiltPoint};
use crate::vec2::Vec2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    pub seed: u64,
    pub mc_samples: usize,
    pub execution: Execution,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 1, mc_samples: 100_000, execution: Execution::default() }
    }
}

impl VerifyOptions {
    fn solve(&self) -> SolveOptions {
        SolveOptions { execution: self.execution, ..SolveOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub elapsed: Duration,
    pub time_limit: Option<Duration>,
    pub details: Vec<String>,
}

impl CriterionResult {
    pub fn within_time(&self) -> bool {
        self.time_limit.is_none_or(|t| self.elapsed <= t)
    }

    /// `[PASS]` or `[FAIL]`, the id and name, and the elapsed time.
    pub fn line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let limit = self.time_limit.map(|t| format!(" / limit {:.0}s", t.as_secs_f64())).unwrap_or_default();
        format!("[{verdict}] {:>2} {} ({:.2}s{limit})", self.id, self.name, self.elapsed.as_secs_f64())
    }
}

/// Identifiers accepted by [`run_criterion`], in suite order.
pub const CRITERIA: [&str; 11] = ["1", "2", "3", "4", "5", "6", "7", "8", "8-derived", "9", "10"];

pub const SUITE_TIME_LIMIT: Duration = Duration::from_secs(600);

type Outcome = Result<(bool, Vec<String>)>;

fn timed(id: &'static str, name: &'static str, limit: Option<u64>, run: impl FnOnce() -> Outcome) -> CriterionResult {
    let start = Instant::now();
    let outcome = run();
    let elapsed = start.elapsed();
    let time_limit = limit.map(Duration::from_secs);
    let (ok, details) = match outcome {
        Ok(r) => r,
        Err(e) => (false, vec![format!("error: {e}")]),
    };
    let mut result = CriterionResult { id, name, passed: ok, elapsed, time_limit, details };
    if !result.within_time() {
        result.passed = false;
        result.details.push(format!("exceeded the time limit of {}s", limit.unwrap_or(0)));
    }
    result
}

pub fn run_criterion(id: &str, models: &[Model], opts: &VerifyOptions) -> Result<CriterionResult> {
    Ok(match id {
        "1" => timed("1", "homeomorphism round trip", Some(1), || homeomorphism(models)),
        "2" => timed("2", "martingale identity", Some(1), || martingale(models, opts)),
        "3" => timed("3", "exit expectation vs survival and simulation", Some(120), || oracle_equivalence(models, opts)),
        "4" => timed("4", "harmonicity", Some(120), || harmonicity(models, opts)),
        "5" => timed("5", "positivity", None, || positivity(models, opts)),
        "6" => timed("6", "quadrant oracle", None, || quadrant_oracle(models, opts)),
        "7" => timed("7", "endpoint survival decay", None, || endpoint_decay(models, opts)),
        "8" => timed("8", "opposite-wall bound, flipped exponent sign", None, || b_term(models, opts, BForm::FlippedSign)),
        "8-derived" => timed("8-derived", "opposite-wall bound with corrected sign", None, || b_term(models, opts, BForm::Derived)),
        "9" => timed("9", "bracket nesting and complementarity", None, || invariants(models, opts)),
        "10" => timed("10", "strong local irreducibility", None, || irreducibility(models, opts)),
        other => return Err(Error::Precondition(format!("unknown criterion {other}"))),
    })
}

pub fn run_all(models: &[Model], opts: &VerifyOptions) -> Vec<CriterionResult> {
    CRITERIA.iter().map(|id| run_criterion(id, models, opts).expect("known criterion")).collect()
}

fn domain(m: &Model, r: i64) -> Result<Arc<TruncatedDomain>> {
    Ok(Arc::new(TruncatedDomain::build(&m.cone, &m.law, r)?))
}

/// Both endpoint branches and the interior branch at the middle of the arc.
fn branch_specs(m: &Model) -> Result<Vec<HarmonicSpec>> {
    let arc = gamma_arc(&m.law, &m.cone)?;
    Ok(vec![
        HarmonicSpec::endpoint(&m.law, &m.cone, Wall::First)?,
        HarmonicSpec::endpoint(&m.law, &m.cone, Wall::Second)?,
        HarmonicSpec::for_direction(&m.law, &m.cone, arc.direction_at(0.5))?,
    ])
}

fn homeomorphism(models: &[Model]) -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for m in models {
        let (mut phi_dev, mut angle_dev) = (0.0_f64, 0.0_f64);
        for k in 0..64 {
            let q = Vec2::from_angle(std::f64::consts::TAU * k as f64 / 64.0);
            let a = a_of(&m.law, q)?;
            phi_dev = phi_dev.max((a.phi - 1.0).abs());
            angle_dev = angle_dev.max(q_of(&a)?.angle_to(q));
        }
        let pass = phi_dev <= 1e-10 && angle_dev <= 1e-8;
        ok &= pass;
        details.push(format!("{}: max |phi-1| = {phi_dev:.2e}, max angle = {angle_dev:.2e} rad", m.name));
    }
    Ok((ok, details))
}

fn martingale(models: &[Model], opts: &VerifyOptions) -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for m in models {
        let mut worst = 0.0_f64;
        for _ in 0..100 {
            let q = Vec2::from_angle(rng.random_range(0.0..std::f64::consts::TAU));
            let z = LatticePoint::new(rng.random_range(-20..=20), rng.random_range(-20..=20));
            let r = free_martingale_defect(&m.law, q, q.perp(), z)?;
            worst = worst.max(r.residual.abs() / (1e-10 * r.value.abs() + 1e-12));
        }
        ok &= worst <= 1.0;
        details.push(format!("{}: worst residual / tolerance = {worst:.2e}", m.name));
    }
    Ok((ok, details))
}

/// `a = 0`, two points inside `D` and two points on the interior of `Γ`.
fn suite_tilts(m: &Model) -> Result<Vec<(&'static str, TiltPoint)>> {
    let arc = gamma_arc(&m.law, &m.cone)?;
    let mid = a_of(&m.law, arc.direction_at(0.5))?.a;
    let chord = (arc.a_c1.a + arc.a_c2.a) * 0.5;
    let inner = (arc.a_c1.a + mid) * 0.5;
    let tilts = vec![
        ("zero", TiltPoint::evaluate(&m.law, Vec2::ZERO)?),
        ("inside_chord", TiltPoint::evaluate(&m.law, chord)?),
        ("inside_half", TiltPoint::evaluate(&m.law, inner)?),
        ("gamma_third", a_of(&m.law, arc.direction_at(1.0 / 3.0))?),
        ("gamma_two_thirds", a_of(&m.law, arc.direction_at(2.0 / 3.0))?),
    ];
    for (label, t) in &tilts[1..3] {
        if !(t.phi < 1.0) {
            return Err(Error::Precondition(format!("{} tilt {label} is not inside D", m.name)));
        }
    }
    Ok(tilts)
}

fn oracle_equivalence(models: &[Model], opts: &VerifyOptions) -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for (mi, m) in models.iter().enumerate() {
        let d = domain(m, 100)?;
        let arc = gamma_arc(&m.law, &m.cone)?;
        let starts = [
            nearest_interior_point(&m.cone, arc.direction_at(0.5), 3.0),
            nearest_interior_point(&m.cone, arc.direction_at(0.5), 8.0),
        ];
        for (ti, (label, a)) in suite_tilts(m)?.into_iter().enumerate() {
            let solver = LatticeSolver::new(&m.law, &d, &a, &opts.solve())?;
            let u = solver.exit_expectation(Payoff::Exp, Restriction::AllExits)?;
            let s = solver.survival()?;
            let mut gap = 0.0_f64;
            for i in 0..d.len() {
                let (ub, sb) = (u.scaled(i), s.scaled(i));
                let complement = crate::solver::Bracket::new(1.0 - sb.hi, 1.0 - sb.lo);
                if !ub.overlaps(&complement, 1e-10) {
                    gap = gap.max((ub.lo - complement.hi).max(complement.lo - ub.hi));
                }
            }
            let overlap = gap == 0.0;
            let mut mc_ok = true;
            let mut mc_text = Vec::new();
            for (si, z0) in starts.iter().enumerate() {
                let z0 = z0.ok_or_else(|| Error::Precondition("no start state".into()))?;
                let mc = McOptions {
                    samples: opts.mc_samples,
                    rng: RngSpec::new(opts.seed, (mi * 100 + ti * 10 + si) as u64),
                    execution: opts.execution,
                    ..McOptions::default()
                };
                let rep = exit_probability_crosscheck(&m.law, &u, z0, &mc)?;
                mc_ok &= rep.passes;
                mc_text.push(format!(
                    "{z0}: [{:.6}, {:.6}] vs {:.6}±{:.1e}",
                    rep.bracket.lo, rep.bracket.hi, rep.mc.mean, rep.mc.stderr
                ));
            }
            ok &= overlap && mc_ok;
            details.push(format!(
                "{} a={label}: overlap {} (gap {gap:.1e}); mc {}: {}",
                m.name,
                if overlap { "ok" } else { "FAIL" },
                if mc_ok { "ok" } else { "FAIL" },
                mc_text.join("; ")
            ));
        }
    }
    Ok((ok, details))
}

fn harmonicity(models: &[Model], opts: &VerifyOptions) -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for m in models {
        let d = domain(m, 150)?;
        for spec in branch_specs(m)? {
            let solver = LatticeSolver::new(&m.law, &d, &spec.a, &opts.solve())?;
            let h = build_h_with(&spec, &solver)?.h;
            let rep = harmonicity_residual(&h, &m.law);
            ok &= rep.passes;
            details.push(format!(
                "{} {}: relative residual {:.2e}, excess over allowance {:.2e}",
                m.name,
                spec.branch.label(),
                rep.relative,
                rep.worst_excess
            ));
        }
    }
    Ok((ok, details))
}

fn positivity(models: &[Model], opts: &VerifyOptions) -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for m in models {
        let (small, large) = (domain(m, 100)?, domain(m, 150)?);
        for spec in branch_specs(m)? {
            let build = |d: &Arc<TruncatedDomain>| -> Result<_> {
                let solver = LatticeSolver::new(&m.law, d, &spec.a, &opts.solve())?;
                Ok(check_positive(&build_h_with(&spec, &solver)?.h))
            };
            let (p100, p150) = (build(&small)?, build(&large)?);
            let (n100, n150) = (p100.inconclusive_within(100), p150.inconclusive_within(100));
            let shrinks = n150 < n100 || (n100 == 0 && n150 == 0);
            let pass = p100.passes() && p150.passes() && shrinks;
            ok &= pass;
            details.push(format!(
                "{} {}: negative {}/{}, inconclusive within |z|<=100: {n100} -> {n150}",
                m.name,
                spec.branch.label(),
                p100.violations.len(),
                p150.violations.len()
            ));
        }
    }
    Ok((ok, details))
}

fn quadrant_oracle(models: &[Model], opts: &VerifyOptions) -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    let quadrant = crate::cone::ConeGeometry::quadrant();
    for m in models.iter().filter(|m| m.cone == quadrant) {
        let r = 100;
        let d = domain(m, r)?;
        for spec in branch_specs(m)? {
            let branch = match spec.branch {
                crate::harmonic::Branch::Endpoint(Wall::First) => QuadrantBranch::FirstCoordinate,
                crate::harmonic::Branch::Endpoint(Wall::Second) => QuadrantBranch::SecondCoordinate,
                crate::harmonic::Branch::Interior => QuadrantBranch::Exponential,
            };
            let solver = LatticeSolver::new(&m.law, &d, &spec.a, &opts.solve())?;
            let h = build_h_with(&spec, &solver)?.h;
            let oracle = quadrant_h(&m.law, spec.a.a, branch, r)?;
            let mut worst = 0.0_f64;
            for (z, b) in d.states().iter().zip(h.scaled_values()) {
                let o = oracle.scaled_at(*z).ok_or_else(|| Error::Precondition(format!("{z} missing from the oracle")))?;
                worst = worst.max((b.hi - o).abs());
            }
            ok &= worst <= 1e-10;
            details.push(format!("{} {}: max scaled difference {worst:.2e} over {} states", m.name, spec.branch.label(), d.len()));
        }
    }
    if details.is_empty() {
        return Ok((true, vec!["not applicable: no model on the quadrant".into()]));
    }
    Ok((ok, details))
}

fn endpoint_decay(models: &[Model], opts: &VerifyOptions) -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for m in models {
        for wall in Wall::both() {
            let z = near_wall_probe(&m.cone, wall, 10);
            let a = a_of(&m.law, m.cone.c(wall))?;
            let mut his = Vec::new();
            for r in [50, 100, 200] {
                let solver = LatticeSolver::new(&m.law, &domain(m, r)?, &a, &opts.solve())?;
                let s = solver.survival()?;
                his.push(s.scaled_at(z).ok_or_else(|| Error::Precondition(format!("{z} outside domain")))?.hi);
            }
            let pass = his[0] > his[1] && his[1] > his[2] && his[2] <= 0.1;
            ok &= pass;
            details.push(format!(
                "{} c{} at {z}: survival hi {:.4} / {:.4} / {:.4}",
                m.name,
                wall.index() + 1,
                his[0],
                his[1],
                his[2]
            ));
        }
    }
    Ok((ok, details))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BForm {
    FlippedSign,
    Derived,
}

fn b_term(models: &[Model], opts: &VerifyOptions, form: BForm) -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for m in models {
        let d = domain(m, 100)?;
        let candidates: Vec<LatticePoint> = d.states().iter().copied().filter(|z| z.norm_inf() <= 20).collect();
        for wall in Wall::both() {
            let spec = HarmonicSpec::endpoint(&m.law, &m.cone, wall)?;
            let solver = LatticeSolver::new(&m.law, &d, &spec.a, &opts.solve())?;
            let opposite = b_term_field(&spec, &solver)?;
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ (0xb0 + wall.index() as u64));
            let (mut held, mut drawn, mut worst) = (0, 0, f64::NEG_INFINITY);
            let mut attempts = 0;
            while drawn < 20 {
                attempts += 1;
                if attempts > 2000 {
                    return Err(Error::Precondition("too many rejected delta values".into()));
                }
                let z = candidates[rng.random_range(0..candidates.len())];
                let delta = 0.5_f64.powi(rng.random_range(1..=6));
                let rep = match b_term_bound(&spec, &opposite, z, delta) {
                    Ok(rep) => rep,
                    Err(Error::DeltaTooLarge(_)) => continue,
                    Err(e) => return Err(e),
                };
                drawn += 1;
                let (holds, bound) = match form {
                    BForm::FlippedSign => (rep.holds_flipped_sign(1e-10), rep.bound_flipped_sign),
                    BForm::Derived => (rep.holds_derived(1e-10), rep.bound_derived),
                };
                held += usize::from(holds);
                worst = worst.max(rep.computed.hi - bound);
            }
            ok &= held == drawn;
            details.push(format!(
                "{} c{}: {held}/{drawn} samples within the bound, worst excess {worst:.3e}",
                m.name,
                wall.index() + 1
            ));
        }
    }
    Ok((ok, details))
}

fn invariants(models: &[Model], opts: &VerifyOptions) -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for m in models {
        let (small, large) = (domain(m, 50)?, domain(m, 100)?);
        let (mut nest, mut comp, mut order, mut additive) = (0usize, 0usize, 0usize, 0usize);
        let mut checked = 0usize;
        for (_, a) in suite_tilts(m)? {
            let solve = |d: &Arc<TruncatedDomain>| -> Result<_> {
                let solver = LatticeSolver::new(&m.law, d, &a, &opts.solve())?;
                let f = solver.exit_expectations(&[
                    (Payoff::Exp, Restriction::AllExits),
                    (Payoff::Exp, Restriction::OnlyTau1First),
                    (Payoff::Exp, Restriction::OnlyTau2First),
                ])?;
                Ok((f, solver.survival()?))
            };
            let ((fs, ss), (fl, sl)) = (solve(&small)?, solve(&large)?);
            for (i, z) in small.states().iter().enumerate() {
                checked += 1;
                let j = large.index_of(*z).expect("nested domains");
                if !(fl[0].scaled(j).within(&fs[0].scaled(i), 1e-12) && sl.scaled(j).within(&ss.scaled(i), 1e-12)) {
                    nest += 1;
                }
            }
            for (f, s) in [(&fs, &ss), (&fl, &sl)] {
                for i in 0..s.len() {
                    let (u, v) = (f[0].scaled(i), s.scaled(i));
                    if (u.lo + v.hi - 1.0).abs() > 1e-10 || (u.hi + v.lo - 1.0).abs() > 1e-10 {
                        comp += 1;
                    }
                    if f.iter().any(|g| g.scaled(i).lo > g.scaled(i).hi) || v.lo > v.hi {
                        order += 1;
                    }
                    let parts = f[1].scaled(i) + f[2].scaled(i);
                    if (u.lo - parts.lo).abs() > 1e-12 || u.hi > parts.hi + 1e-12 {
                        additive += 1;
                    }
                }
            }
        }
        let pass = nest + comp + order + additive == 0;
        ok &= pass;
        details.push(format!(
            "{}: {checked} nested comparisons; violations nesting {nest}, complementarity {comp}, ordering {order}, additivity {additive}",
            m.name
        ));
    }
    Ok((ok, details))
}

fn irreducibility(models: &[Model], opts: &VerifyOptions) -> Outcome {
    let mut ok = true;
    let mut details = Vec::new();
    for m in models {
        let scan = strong_local_irreducibility_scan(&m.law, &m.cone, 10, 40, opts.execution);
        ok &= scan.passes();
        details.push(match (scan.max_radius, scan.failure) {
            (Some(r), _) => format!("{}: {} states, {} moves, minimal R = {r}", m.name, scan.states, scan.moves),
            (None, Some((z, e))) => format!("{}: move {e} from {z} fails at R = {}", m.name, scan.r_max),
            (None, None) => format!("{}: no states scanned", m.name),
        });
    }
    Ok((ok, details))
}
