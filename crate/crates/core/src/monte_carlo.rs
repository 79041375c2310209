//! Simulation of tilted, possibly killed walks in the cone.
//!
//! Every path draws from its own ChaCha8 position: the stream is the caller's
//! `stream_id` and path `k` starts at word `k·2^40`, so estimates are
//! bit-identical across thread counts.

use std::sync::Arc;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cone::{BoundaryStatus, ConeGeometry, Wall, MEMBERSHIP_GUARD};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::harmonic::{build_h, HarmonicSpec};
use crate::solver::{green_column, Bracket, HarmonicField, SolveOptions, TruncatedDomain};
use crate::step_law::{LatticePoint, StepLaw, TiltedLaw};
use crate::tilt::{a_of, far_boundary_shift};
use crate::vec2::Vec2;

/// Paths per work item; results are summed item by item in index order.
const CHUNK: usize = 512;
/// Word offset between consecutive paths of one stream.
const PATH_STRIDE: u128 = 1 << 40;

/// Default horizon for tilts at `a(c_i)`, where exit times are heavy tailed.
pub const ENDPOINT_HORIZON: usize = 1_000_000;
pub const DEFAULT_HORIZON: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngSpec {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngSpec { seed, stream_id }
    }

    /// Generator for path `path` of this stream.
    pub fn path_rng(&self, path: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng.set_word_pos(u128::from(path) * PATH_STRIDE);
        rng
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
    /// Fraction of paths stopped by the horizon without resolving.
    pub truncated_fraction: f64,
}

impl MCEstimate {
    fn from_sums(sum: f64, sum_sq: f64, count: usize, n: usize, truncated: usize) -> Self {
        let mean = if count > 0 { sum / count as f64 } else { 0.0 };
        let var = if count > 1 { ((sum_sq - count as f64 * mean * mean) / (count as f64 - 1.0)).max(0.0) } else { 0.0 };
        MCEstimate {
            mean,
            stderr: (var / count.max(1) as f64).sqrt(),
            n,
            truncated_fraction: truncated as f64 / n.max(1) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitKind {
    Tau1First,
    Tau2First,
    BothSimultaneous,
    /// Removed by the killing of a substochastic tilt before leaving the cone.
    Killed,
    /// Far enough inside that a further exit has probability below the escape tolerance.
    Escaped,
    Horizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExitRecord {
    /// Set exactly when the walk left the cone.
    pub exit_point: Option<LatticePoint>,
    pub steps: usize,
    pub which: ExitKind,
}

impl ExitRecord {
    pub fn exited(&self) -> bool {
        self.exit_point.is_some()
    }
}

/// Draws steps of a tilted law, with an extra "kill" outcome for the missing mass.
#[derive(Debug, Clone)]
struct StepSampler {
    steps: Vec<LatticePoint>,
    dist: WeightedIndex<f64>,
}

impl StepSampler {
    fn new(tilted: &TiltedLaw) -> Result<Self> {
        let mass = tilted.total_mass();
        if mass > 1.0 + 1e-10 {
            return Err(Error::Precondition(format!("tilted mass {mass} exceeds 1: the tilt lies outside D")));
        }
        let mut weights: Vec<f64> = tilted.atoms().iter().map(|(_, w)| *w).collect();
        let kill = 1.0 - mass;
        if kill > 1e-10 {
            weights.push(kill);
        }
        let dist = WeightedIndex::new(&weights).map_err(|e| Error::InvalidLaw(format!("{e}")))?;
        Ok(StepSampler { steps: tilted.atoms().iter().map(|(w, _)| *w).collect(), dist })
    }

    /// `None` means the walk is killed.
    fn draw(&self, rng: &mut ChaCha8Rng) -> Option<LatticePoint> {
        self.steps.get(self.dist.sample(rng)).copied()
    }
}

/// Stops a path once `Σ_i e^{-λ_i f_i·z}`, a bound on the probability of any
/// later exit, falls below the tolerance.
#[derive(Debug, Clone, Copy)]
struct EscapeRule {
    f: [Vec2; 2],
    lundberg: [f64; 2],
    threshold: f64,
}

impl EscapeRule {
    fn new(law: &StepLaw, cone: &ConeGeometry, a: Vec2, tolerance: f64) -> Result<Option<Self>> {
        let l1 = far_boundary_shift(law, a, cone.f1())?;
        let l2 = far_boundary_shift(law, a, cone.f2())?;
        if l1 <= 0.0 || l2 <= 0.0 || tolerance <= 0.0 {
            return Ok(None);
        }
        // Each term below tolerance/2 is sufficient.
        Ok(Some(EscapeRule { f: [cone.f1(), cone.f2()], lundberg: [l1, l2], threshold: (2.0 / tolerance).ln() }))
    }

    fn escaped(&self, z: LatticePoint) -> bool {
        let z = z.to_vec2();
        self.lundberg[0] * self.f[0].dot(z) > self.threshold && self.lundberg[1] * self.f[1].dot(z) > self.threshold
    }
}

fn run_path<R: Region>(
    sampler: &StepSampler,
    region: &R,
    z0: LatticePoint,
    horizon: usize,
    escape: Option<&EscapeRule>,
    rng: &mut ChaCha8Rng,
) -> ExitRecord {
    let mut z = z0;
    for steps in 0..=horizon {
        let which = match region.status(z) {
            BoundaryStatus::None => None,
            BoundaryStatus::H1Violated => Some(ExitKind::Tau1First),
            BoundaryStatus::H2Violated => Some(ExitKind::Tau2First),
            BoundaryStatus::Both => Some(ExitKind::BothSimultaneous),
        };
        if let Some(which) = which {
            return ExitRecord { exit_point: Some(z), steps, which };
        }
        if steps == horizon {
            break;
        }
        if steps % 16 == 0 && escape.is_some_and(|e| e.escaped(z)) {
            return ExitRecord { exit_point: None, steps, which: ExitKind::Escaped };
        }
        match sampler.draw(rng) {
            Some(w) => z = z + w,
            None => return ExitRecord { exit_point: None, steps: steps + 1, which: ExitKind::Killed },
        }
    }
    ExitRecord { exit_point: None, steps: horizon, which: ExitKind::Horizon }
}

/// Simulates one path of the tilted walk (killed at rate `1 − φ(a)` per step)
/// until it leaves the cone, is killed, or reaches the horizon.
pub fn sample_exit(tilted: &TiltedLaw, cone: &ConeGeometry, z0: LatticePoint, horizon: usize, rng: &RngSpec) -> Result<ExitRecord> {
    if horizon == 0 {
        return Err(Error::Precondition("horizon must be at least 1".into()));
    }
    let sampler = StepSampler::new(tilted)?;
    Ok(run_path(&sampler, cone, z0, horizon, None, &mut rng.path_rng(0)))
}

/// Runs paths `0..n` in fixed chunks and returns their records in path order.
#[allow(clippy::too_many_arguments)]
fn simulate<R: Region>(
    sampler: &StepSampler,
    region: &R,
    z0: LatticePoint,
    horizon: usize,
    escape: Option<&EscapeRule>,
    n: usize,
    rng: &RngSpec,
    execution: Execution,
) -> Vec<ExitRecord> {
    let chunks = n.div_ceil(CHUNK);
    let parts = execution.map_indexed(chunks, |c| {
        (c * CHUNK..((c + 1) * CHUNK).min(n))
            .map(|k| run_path(sampler, region, z0, horizon, escape, &mut rng.path_rng(k as u64)))
            .collect::<Vec<_>>()
    });
    parts.into_iter().flatten().collect()
}

/// Sampling parameters shared by the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub samples: usize,
    pub horizon: usize,
    pub rng: RngSpec,
    pub execution: Execution,
    /// Paths whose remaining exit probability is certified below this are stopped
    /// and counted as non-absorbed; 0 disables the rule.
    pub escape_tolerance: f64,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions {
            samples: 100_000,
            horizon: DEFAULT_HORIZON,
            rng: RngSpec::new(0, 0),
            execution: Execution::default(),
            escape_tolerance: 1e-9,
        }
    }
}

/// Absorption frequencies by horizon, from one set of paths.
#[derive(Debug, Clone, PartialEq)]
pub struct AbsorptionCurve {
    pub horizons: Vec<usize>,
    /// `P(τ_a ≤ horizon)` estimates, one per horizon.
    pub estimates: Vec<MCEstimate>,
}

/// Estimates `P_{z0}(τ_a ≤ H)` for every `H` in `horizons` from the same
/// paths, so the estimates are non-decreasing in `H`.
pub fn absorption_curve(
    law: &StepLaw,
    cone: &ConeGeometry,
    a: Vec2,
    z0: LatticePoint,
    horizons: &[usize],
    opts: &McOptions,
) -> Result<AbsorptionCurve> {
    let longest = horizons.iter().copied().max().ok_or_else(|| Error::Precondition("no horizon given".into()))?;
    if longest == 0 {
        return Err(Error::Precondition("horizon must be at least 1".into()));
    }
    let sampler = StepSampler::new(&law.tilt(a)?)?;
    let escape = EscapeRule::new(law, cone, a, opts.escape_tolerance)?;
    let records = simulate(&sampler, cone, z0, longest, escape.as_ref(), opts.samples, &opts.rng, opts.execution);
    let estimates = horizons
        .iter()
        .map(|&h| {
            let hits = records.iter().filter(|r| r.exited() && r.steps <= h).count();
            let pending = records.iter().filter(|r| r.which == ExitKind::Horizon || r.steps > h).count();
            let p = hits as f64;
            MCEstimate::from_sums(p, p, records.len(), records.len(), pending)
        })
        .collect();
    Ok(AbsorptionCurve { horizons: horizons.to_vec(), estimates })
}

/// `P_{z0}(τ_a < ∞)` from simulation against the solver bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExitCrosscheck {
    pub z0: LatticePoint,
    /// `e^{-a·z0} E_{z0}[e^{a·S(τ)}; τ < ∞]` from the solver.
    pub bracket: Bracket,
    pub mc: MCEstimate,
    /// One-sided bias of the simulation: horizon-censored fraction plus escape tolerance.
    pub bias: f64,
    pub passes: bool,
}

/// Compares the scaled exit-expectation bracket at `z0` with the simulated
/// absorption frequency of the tilted walk. The simulation can only miss
/// absorptions, so the check is `mean ≤ hi + 3σ` and `lo ≤ mean + bias + 3σ`.
pub fn exit_probability_crosscheck(
    law: &StepLaw,
    exit_field: &HarmonicField,
    z0: LatticePoint,
    opts: &McOptions,
) -> Result<ExitCrosscheck> {
    let bracket = exit_field
        .scaled_at(z0)
        .ok_or_else(|| Error::Precondition(format!("{z0} is not an interior state of the domain")))?;
    let cone = *exit_field.domain().cone();
    let curve = absorption_curve(law, &cone, exit_field.tilt(), z0, &[opts.horizon], opts)?;
    let mc = curve.estimates[0];
    let bias = mc.truncated_fraction + opts.escape_tolerance;
    let passes = mc.mean <= bracket.hi + 3.0 * mc.stderr && bracket.lo <= mc.mean + bias + 3.0 * mc.stderr;
    Ok(ExitCrosscheck { z0, bracket, mc, bias, passes })
}

/// Mean overshoot `|f_i·S_a(τ_i)|` of the walk tilted by `a(c_i)` below wall `i`.
///
/// Only the half-plane `H_i` matters here. Paths still in `H_i` at the horizon
/// are left out of the mean and counted in `truncated_fraction`.
pub fn overshoot_moment(law: &StepLaw, cone: &ConeGeometry, wall: Wall, z0: LatticePoint, opts: &McOptions) -> Result<MCEstimate> {
    let a = a_of(law, cone.c(wall))?;
    let tilted = law.tilt(a.a)?;
    let f = cone.f(wall);
    let projected_mean: f64 = tilted.atoms().iter().map(|(w, p)| p * f.dot(w.to_vec2())).sum();
    if projected_mean.abs() > 1e-10 {
        return Err(Error::Precondition(format!(
            "projected tilted walk has mean {projected_mean:.3e}: a(c{}) is mis-solved",
            wall.index() + 1
        )));
    }
    if cone.f_dot(wall, z0) <= 0.0 {
        return Err(Error::Precondition(format!("{z0} is not inside the half-plane of wall {}", wall.index() + 1)));
    }
    if opts.horizon == 0 {
        return Err(Error::Precondition("horizon must be at least 1".into()));
    }
    let sampler = StepSampler::new(&tilted)?;
    let half_plane = half_plane_cone(cone, wall);
    let records = simulate(&sampler, &half_plane, z0, opts.horizon, None, opts.samples, &opts.rng, opts.execution);
    let (mut sum, mut sum_sq, mut count) = (0.0, 0.0, 0);
    for r in &records {
        if let Some(z) = r.exit_point {
            let o = cone.f_dot(wall, z).abs();
            sum += o;
            sum_sq += o * o;
            count += 1;
        }
    }
    Ok(MCEstimate::from_sums(sum, sum_sq, count, records.len(), records.len() - count))
}

fn half_plane_cone(cone: &ConeGeometry, wall: Wall) -> HalfPlane {
    HalfPlane { f: cone.f(wall), exact: cone.integer_normal(wall.index()) }
}

/// `{z : f·z > 0}` with the same membership rule as the cone it came from.
#[derive(Debug, Clone, Copy)]
struct HalfPlane {
    f: Vec2,
    exact: Option<LatticePoint>,
}

trait Region: Sync {
    fn status(&self, z: LatticePoint) -> BoundaryStatus;
}

impl Region for ConeGeometry {
    fn status(&self, z: LatticePoint) -> BoundaryStatus {
        self.which_boundary(z)
    }
}

impl Region for HalfPlane {
    fn status(&self, z: LatticePoint) -> BoundaryStatus {
        let inside = match self.exact {
            Some(n) => n.dot(z) > 0,
            None => self.f.dot(z.to_vec2()) > MEMBERSHIP_GUARD,
        };
        if inside {
            BoundaryStatus::None
        } else {
            BoundaryStatus::H1Violated
        }
    }
}

/// One row of a Martin-kernel experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MartinRow {
    pub r: i64,
    pub z_n: LatticePoint,
    pub probe: LatticePoint,
    /// `G(probe, z_n) / G(z_ref, z_n)` from bracket midpoints.
    pub m: f64,
    /// `h_{a(q)}(probe) / h_{a(q)}(z_ref)` from bracket midpoints.
    pub h_ratio: f64,
    /// `G(z_ref, z_n)` is not resolved away from zero, so `m` is meaningless.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MartinTable {
    pub q: Vec2,
    pub z_ref: LatticePoint,
    pub radius: i64,
    pub rows: Vec<MartinRow>,
}

impl MartinTable {
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W, header_lines: &[String]) -> std::io::Result<()> {
        for line in header_lines {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "r,z_n_x,z_n_y,probe_x,probe_y,M,h_ratio,degenerate")?;
        for row in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{:e},{:e},{}",
                row.r, row.z_n.x, row.z_n.y, row.probe.x, row.probe.y, row.m, row.h_ratio, row.degenerate
            )?;
        }
        Ok(())
    }
}

/// Nearest interior lattice point to `r·q`, ties broken lexicographically.
pub fn nearest_interior_point(cone: &ConeGeometry, q: Vec2, r: f64) -> Option<LatticePoint> {
    let target = q.normalized() * r;
    let (cx, cy) = (target.x.round() as i64, target.y.round() as i64);
    let mut best: Option<(f64, LatticePoint)> = None;
    for reach in 0..=8i64 {
        for x in cx - reach..=cx + reach {
            for y in cy - reach..=cy + reach {
                let z = LatticePoint::new(x, y);
                if cone.which_boundary(z) != BoundaryStatus::None {
                    continue;
                }
                let d = (z.to_vec2() - target).norm();
                if best.is_none_or(|(bd, bz)| d < bd - 1e-12 || (d <= bd + 1e-12 && (z.x, z.y) < (bz.x, bz.y))) {
                    best = Some((d, z));
                }
            }
        }
        // Any point outside the current square is farther than `reach`.
        if best.is_some_and(|(d, _)| d <= reach as f64) {
            break;
        }
    }
    best.map(|(_, z)| z)
}

/// Green-function ratios `G(z′, z_n)/G(z_ref, z_n)` for targets `z_n` moving
/// out along `q`, next to the ratios of the harmonic function `h_{a(q)}`.
///
/// All Green columns are computed on one domain of radius `radius`. The table
/// is exploratory: nothing about its trend is asserted.
#[allow(clippy::too_many_arguments)]
pub fn martin_ratio_experiment(
    law: &StepLaw,
    cone: &ConeGeometry,
    q: Vec2,
    radii: &[i64],
    probes: &[LatticePoint],
    z_ref: LatticePoint,
    radius: i64,
    options: &SolveOptions,
) -> Result<MartinTable> {
    let q = q.normalized();
    if !cone.sector_interior_contains(q, 0.0) {
        return Err(Error::Precondition(format!("direction {q} is not inside the cone")));
    }
    let domain = Arc::new(TruncatedDomain::build(cone, law, radius)?);
    let spec = HarmonicSpec::for_direction(law, cone, q)?;
    let h = build_h(&spec, &domain)?;
    let h_at = |z: LatticePoint| -> Result<f64> {
        h.value_at(z)
            .map(|b| b.mid())
            .ok_or_else(|| Error::Precondition(format!("{z} is not an interior state of the radius-{radius} domain")))
    };
    let h_ref = h_at(z_ref)?;
    let h_probes = probes.iter().map(|&z| h_at(z)).collect::<Result<Vec<_>>>()?;
    let targets = radii
        .iter()
        .map(|&r| {
            let z_n = nearest_interior_point(cone, q, r as f64)
                .filter(|z| domain.index_of(*z).is_some())
                .ok_or_else(|| Error::Precondition(format!("target at radius {r} is outside the radius-{radius} domain")))?;
            Ok((r, z_n))
        })
        .collect::<Result<Vec<_>>>()?;
    let columns = options.execution.map_slice(&targets, |&(_, z_n)| {
        let serial = SolveOptions { execution: Execution::Sequential, ..*options };
        green_column(law, &domain, z_n, &serial)
    });
    let mut rows = Vec::with_capacity(targets.len() * probes.len());
    for (&(r, z_n), g) in targets.iter().zip(columns) {
        let g = g?;
        let g_ref = g.value_at(z_ref).expect("reference state checked above");
        let degenerate = !(g_ref.lo > 0.0) || !(g_ref.mid() > 1e-300);
        for (&probe, &hp) in probes.iter().zip(&h_probes) {
            let gp = g.value_at(probe).expect("probe states checked above").mid();
            let m = if probe == z_ref { 1.0 } else if degenerate { f64::NAN } else { gp / g_ref.mid() };
            rows.push(MartinRow { r, z_n, probe, m, h_ratio: hp / h_ref, degenerate });
        }
    }
    Ok(MartinTable { q, z_ref, radius, rows })
}

/// The four unit moves.
pub const UNIT_MOVES: [LatticePoint; 4] =
    [LatticePoint::new(1, 0), LatticePoint::new(0, 1), LatticePoint::new(-1, 0), LatticePoint::new(0, -1)];

#[derive(Debug, Clone, PartialEq)]
pub struct IrreducibilityScan {
    pub r_max: i64,
    pub states: usize,
    pub moves: usize,
    /// Largest over checked moves of the smallest integer `R` that works.
    pub max_radius: Option<i64>,
    /// Smallest working `R` per state (worst over its moves), in lexicographic state order.
    pub per_state: Vec<(LatticePoint, i64)>,
    /// A move `z → z + e` with no path inside `K ∩ B_{R_max}(z)`.
    pub failure: Option<(LatticePoint, LatticePoint)>,
}

impl IrreducibilityScan {
    pub fn passes(&self) -> bool {
        self.failure.is_none()
    }
}

/// Smallest `R` for which `z` reaches each `z + e` by a positive-probability
/// path staying in `K ∩ B_R(z)`, or `None` for moves that fail at `r_max`.
///
/// Runs a bottleneck search: the cost of a path is the largest squared distance
/// from `z` along it.
fn local_radii(law: &StepLaw, cone: &ConeGeometry, z: LatticePoint, r_max: i64) -> Vec<(LatticePoint, Option<i64>)> {
    use std::cmp::Reverse;
    use std::collections::{BinaryHeap, HashMap};

    let limit = r_max * r_max;
    let goals: Vec<LatticePoint> = UNIT_MOVES.iter().copied().filter(|&e| cone.which_boundary(z + e) == BoundaryStatus::None).collect();
    let mut best: HashMap<LatticePoint, i64> = HashMap::new();
    let mut heap = BinaryHeap::new();
    best.insert(z, 0);
    heap.push(Reverse((0i64, z.x, z.y)));
    let mut remaining = goals.len();
    let mut settled: HashMap<LatticePoint, i64> = HashMap::new();
    while let Some(Reverse((cost, x, y))) = heap.pop() {
        let p = LatticePoint::new(x, y);
        if settled.contains_key(&p) {
            continue;
        }
        settled.insert(p, cost);
        if p != z && goals.contains(&(p - z)) {
            remaining -= 1;
            if remaining == 0 {
                break;
            }
        }
        for (w, _) in law.atoms() {
            let next = p + *w;
            let d = next - z;
            let d2 = d.dot(d);
            if d2 > limit || settled.contains_key(&next) || cone.which_boundary(next) != BoundaryStatus::None {
                continue;
            }
            let c = cost.max(d2);
            if best.get(&next).is_none_or(|&b| c < b) {
                best.insert(next, c);
                heap.push(Reverse((c, next.x, next.y)));
            }
        }
    }
    goals
        .into_iter()
        .map(|e| (e, settled.get(&(z + e)).map(|&d2| integer_sqrt_ceil(d2).max(1))))
        .collect()
}

fn integer_sqrt_ceil(n: i64) -> i64 {
    let mut r = (n as f64).sqrt() as i64;
    while r * r < n {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= n {
        r -= 1;
    }
    r
}

/// Checks every cone state with `|z|∞ ≤ extent` and every unit move `e` with
/// `z + e ∈ K` for a positive-probability path from `z` to `z + e` inside
/// `K ∩ B_R(z)`, `R ≤ r_max`.
pub fn strong_local_irreducibility_scan(
    law: &StepLaw,
    cone: &ConeGeometry,
    r_max: i64,
    extent: i64,
    execution: Execution,
) -> IrreducibilityScan {
    let mut states = Vec::new();
    for x in -extent..=extent {
        for y in -extent..=extent {
            let z = LatticePoint::new(x, y);
            if cone.which_boundary(z) == BoundaryStatus::None {
                states.push(z);
            }
        }
    }
    let results = execution.map_slice(&states, |&z| local_radii(law, cone, z, r_max));
    let mut scan = IrreducibilityScan { r_max, states: states.len(), moves: 0, max_radius: None, per_state: Vec::new(), failure: None };
    for (&z, moves) in states.iter().zip(results) {
        let mut worst = 0;
        for (e, r) in moves {
            scan.moves += 1;
            match r {
                Some(r) => worst = worst.max(r),
                None => {
                    if scan.failure.is_none() {
                        scan.failure = Some((z, e));
                    }
                }
            }
        }
        scan.per_state.push((z, worst));
    }
    if scan.failure.is_none() {
        scan.max_radius = Some(scan.per_state.iter().map(|&(_, r)| r).max().unwrap_or(0));
    }
    scan
}

#[cfg(test)]
mod tests;
