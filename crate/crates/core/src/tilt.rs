//! Geometry of the level set `D = {a : φ(a) ≤ 1}`.
//!
//! `D` is strictly convex and compact for irreducible laws with non-zero
//! drift, and `q(a) = ∇φ(a)/|∇φ(a)|` maps its boundary homeomorphically onto
//! the unit circle. Every root-find here works on scalar slices
//! `t ↦ φ(p − t·f)`, which are convex, so bracketing plus bisection always
//! converges.

use crate::cone::{ConeGeometry, Wall};
use crate::error::{Error, Result};
use crate::step_law::StepLaw;
use crate::vec2::{solve2, Vec2};

/// Tolerance for classifying a tilt as lying on `∂D`.
pub const BOUNDARY_TOL: f64 = 1e-10;
/// Residual `|φ − 1|` required from every boundary root-find.
pub const ROOT_TOL: f64 = 1e-12;
/// Angular tolerance separating endpoint and interior directions of `Σ`.
pub const ANGLE_TOL: f64 = 1e-8;
/// Angular residual required from [`a_of`].
pub const A_OF_ANGLE_TOL: f64 = 1e-10;

const MAX_EXPANSIONS: usize = 80;
const MAX_BISECTIONS: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DClass {
    InteriorD,
    BoundaryD,
    ExteriorD,
}

/// A tilt `a` with `φ(a)` and `∇φ(a)` cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltPoint {
    pub a: Vec2,
    pub phi: f64,
    pub grad: Vec2,
    pub class: DClass,
}

impl TiltPoint {
    pub fn evaluate(law: &StepLaw, a: Vec2) -> Result<Self> {
        let (phi, grad, _) = law.phi_derivatives(a)?;
        let class = if (phi - 1.0).abs() <= BOUNDARY_TOL {
            DClass::BoundaryD
        } else if phi < 1.0 {
            DClass::InteriorD
        } else {
            DClass::ExteriorD
        };
        Ok(TiltPoint { a, phi, grad, class })
    }

    pub fn in_d(&self) -> bool {
        self.class != DClass::ExteriorD
    }

    pub fn on_boundary(&self) -> bool {
        self.class == DClass::BoundaryD
    }
}

/// The normalised gradient `q(a)`.
pub fn q_of(a: &TiltPoint) -> Result<Vec2> {
    let n = a.grad.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::ZeroGradient(a.a.x, a.a.y));
    }
    Ok(a.grad * (1.0 / n))
}

/// Evaluates `t ↦ φ(base − t·dir)` and its derivative.
struct Slice<'a> {
    law: &'a StepLaw,
    base: Vec2,
    dir: Vec2,
}

impl Slice<'_> {
    fn eval(&self, t: f64) -> Result<(f64, f64)> {
        let (phi, grad, _) = self.law.phi_derivatives(self.base - self.dir * t)?;
        Ok((phi, -grad.dot(self.dir)))
    }

    fn value(&self, t: f64) -> Result<f64> {
        self.law.phi(self.base - self.dir * t)
    }

    /// Some `t > 0` with `g(t) > 1` and `g'(t) > 0`.
    fn upper(&self) -> Result<f64> {
        let mut t = 0.125;
        for _ in 0..MAX_EXPANSIONS {
            let (g, dg) = self.eval(t)?;
            if g > 1.0 && dg > 0.0 {
                return Ok(t);
            }
            t *= 2.0;
        }
        Err(Error::NoIntersection)
    }

    /// Minimiser of the convex slice on `[0, ∞)`.
    fn argmin(&self) -> Result<f64> {
        if self.eval(0.0)?.1 >= 0.0 {
            return Ok(0.0);
        }
        let (mut lo, mut hi) = (0.0, self.upper()?);
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.eval(mid)?.1 < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Root of `g − 1` in `[lo, hi]` given a sign change between the ends.
    fn bisect(&self, mut lo: f64, mut hi: f64) -> Result<f64> {
        let rising = self.value(lo)? < self.value(hi)?;
        let mut best = (f64::INFINITY, lo);
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            let r = self.value(mid)? - 1.0;
            if r.abs() < best.0 {
                best = (r.abs(), mid);
            }
            if r == 0.0 || mid <= lo || mid >= hi {
                break;
            }
            if (r < 0.0) == rising {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if best.0 > ROOT_TOL {
            return Err(Error::NonConvergence {
                what: "boundary bisection",
                iterations: MAX_BISECTIONS,
                residual: best.0,
            });
        }
        Ok(best.1)
    }

    /// Smallest `t ≥ 0` with `g(t) = 1`.
    fn first_crossing(&self) -> Result<f64> {
        let g0 = self.value(0.0)?;
        if (g0 - 1.0).abs() <= ROOT_TOL {
            return Ok(0.0);
        }
        if g0 < 1.0 {
            return self.bisect(0.0, self.upper()?);
        }
        let tmin = self.argmin()?;
        let gmin = self.value(tmin)?;
        if gmin > 1.0 + ROOT_TOL {
            return Err(Error::NoIntersection);
        }
        if (gmin - 1.0).abs() <= ROOT_TOL {
            return Ok(tmin);
        }
        self.bisect(0.0, tmin)
    }

    /// Largest `t ≥ 0` with `g(t) = 1`.
    fn last_crossing(&self) -> Result<f64> {
        let tmin = self.argmin()?;
        let gmin = self.value(tmin)?;
        if gmin > 1.0 + ROOT_TOL {
            return Err(Error::NoIntersection);
        }
        if gmin >= 1.0 - ROOT_TOL {
            // The slice touches 1 only at its minimiser (or starts there and rises).
            return Ok(tmin);
        }
        self.bisect(tmin, self.upper()?)
    }
}

/// Smallest `λ ≥ 0` with `φ(a_tilde − λ f) = 1`.
///
/// Returns `0` when `a_tilde` already lies on `∂D`, and
/// [`Error::NoIntersection`] when the ray never meets `D`.
pub fn boundary_shift(law: &StepLaw, a_tilde: Vec2, f: Vec2) -> Result<f64> {
    Slice { law, base: a_tilde, dir: f }.first_crossing()
}

/// Largest `λ ≥ 0` with `φ(a − λ f) = 1`: the point where the ray leaves `D`.
///
/// For `a` on `∂D` with `∇φ(a)·f > 0` this is the second intersection of the
/// ray with `∂D`; for `a` inside `D` it is the unique one.
pub fn far_boundary_shift(law: &StepLaw, a: Vec2, f: Vec2) -> Result<f64> {
    Slice { law, base: a, dir: f }.last_crossing()
}

/// Smallest `ε ≥ 0` with `φ(a + δ f_add − ε f_sub) = 1`, for `a` on `∂D`.
pub fn epsilon_for_delta(law: &StepLaw, a: &TiltPoint, delta: f64, f_add: Vec2, f_sub: Vec2) -> Result<f64> {
    if !a.on_boundary() {
        return Err(Error::Precondition(format!("tilt {} is not on ∂D (φ = {})", a.a, a.phi)));
    }
    if !(delta > 0.0) {
        return Err(Error::Precondition(format!("delta must be positive, got {delta}")));
    }
    let slice = Slice { law, base: a.a + f_add * delta, dir: f_sub };
    match slice.first_crossing() {
        Err(Error::NoIntersection) => Err(Error::DeltaTooLarge(delta)),
        other => other,
    }
}

/// `min_t φ(s q + t p)` over `t`, returning `(t*, value)`.
fn min_across(law: &StepLaw, q: Vec2, p: Vec2, s: f64) -> Result<(f64, f64)> {
    let deriv = |t: f64| -> Result<(f64, f64, f64)> {
        let (phi, grad, hess) = law.phi_derivatives(q * s + p * t)?;
        Ok((phi, grad.dot(p), hess.quad(p, p)))
    };
    // Bracket the stationary point of the convex function.
    let (mut lo, mut hi) = (0.0, 0.0);
    let d0 = deriv(0.0)?.1;
    if d0 == 0.0 {
        return Ok((0.0, deriv(0.0)?.0));
    }
    let mut step = 0.25;
    for i in 0..=MAX_EXPANSIONS {
        if i == MAX_EXPANSIONS {
            return Err(Error::NonConvergence { what: "a_of bracket", iterations: i, residual: d0.abs() });
        }
        let t = if d0 > 0.0 { -step } else { step };
        if (deriv(t)?.1 > 0.0) == (d0 < 0.0) {
            (lo, hi) = if d0 > 0.0 { (t, 0.0) } else { (0.0, t) };
            break;
        }
        step *= 2.0;
    }
    // Safeguarded Newton on ψ'(t) = 0.
    let mut t = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECTIONS {
        let (_, d, dd) = deriv(t)?;
        if d == 0.0 {
            break;
        }
        if d < 0.0 {
            lo = t;
        } else {
            hi = t;
        }
        let newton = t - d / dd;
        t = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if hi - lo <= 1e-15 * (1.0 + t.abs()) || (newton - t).abs() <= 1e-16 * (1.0 + t.abs()) {
            break;
        }
    }
    Ok((t, deriv(t)?.0))
}

/// The unique boundary point `a(q)` of `D` with outward normal `q`.
///
/// Computed as the maximiser of `q·a` over `D`: the support value `s` is found
/// by bisection on the convex profile `s ↦ min_t φ(s q + t q⊥)`, then the
/// Lagrange system `q⊥·∇φ(a) = 0, φ(a) = 1` is polished by Newton steps.
pub fn a_of(law: &StepLaw, q: Vec2) -> Result<TiltPoint> {
    let qn = q.norm();
    if qn == 0.0 || !qn.is_finite() {
        return Err(Error::Precondition("direction must be non-zero".into()));
    }
    let q = q * (1.0 / qn);
    let p = q.perp();
    let profile = |s: f64| -> Result<(f64, f64)> {
        let (t, v) = min_across(law, q, p, s)?;
        Ok((t, v - 1.0))
    };

    // The origin is feasible; expand until the profile exceeds 1 and is rising.
    let mut lo = 0.0;
    let mut hi = 0.5;
    for i in 0..=MAX_EXPANSIONS {
        if i == MAX_EXPANSIONS {
            return Err(Error::NonConvergence { what: "a_of expansion", iterations: i, residual: f64::NAN });
        }
        let (t, r) = profile(hi)?;
        let rising = law.grad_phi(q * hi + p * t)?.dot(q) > 0.0;
        if r > 0.0 && rising {
            break;
        }
        if r <= 0.0 {
            lo = hi;
        }
        hi *= 2.0;
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if profile(mid)?.1 <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (t, _) = profile(lo)?;
    let mut a = q * lo + p * t;

    let residual = |a: Vec2| -> Result<f64> {
        let (phi, grad, _) = law.phi_derivatives(a)?;
        Ok((phi - 1.0).abs().max(grad.normalized().angle_to(q)))
    };
    let mut best = residual(a)?;
    for _ in 0..8 {
        let (phi, grad, hess) = law.phi_derivatives(a)?;
        let hp = hess.mul_vec(p);
        let Some(step) = solve2([[hp.x, hp.y], [grad.x, grad.y]], [-grad.dot(p), 1.0 - phi]) else {
            break;
        };
        let candidate = a + Vec2::new(step[0], step[1]);
        let r = residual(candidate)?;
        if r < best {
            best = r;
            a = candidate;
        } else {
            break;
        }
    }

    let point = TiltPoint::evaluate(law, a)?;
    let angle = q_of(&point)?.angle_to(q);
    let lambda = point.grad.dot(q);
    if (point.phi - 1.0).abs() > ROOT_TOL || angle > A_OF_ANGLE_TOL || lambda <= 0.0 {
        return Err(Error::NonConvergence {
            what: "a_of",
            iterations: MAX_BISECTIONS,
            residual: (point.phi - 1.0).abs().max(angle),
        });
    }
    Ok(point)
}

/// The arc `Γ ⊂ ∂D` of tilts whose normal direction lies in the closed sector `Σ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaArc {
    pub a_c1: TiltPoint,
    pub a_c2: TiltPoint,
    pub cone: ConeGeometry,
}

pub fn gamma_arc(law: &StepLaw, cone: &ConeGeometry) -> Result<GammaArc> {
    Ok(GammaArc { a_c1: a_of(law, cone.c1())?, a_c2: a_of(law, cone.c2())?, cone: *cone })
}

impl GammaArc {
    pub fn endpoint(&self, wall: Wall) -> &TiltPoint {
        match wall {
            Wall::First => &self.a_c1,
            Wall::Second => &self.a_c2,
        }
    }

    pub fn is_in_gamma(&self, a: &TiltPoint) -> bool {
        a.on_boundary() && q_of(a).is_ok_and(|q| self.cone.sector_contains(q, ANGLE_TOL))
    }

    pub fn is_in_gamma_interior(&self, a: &TiltPoint) -> bool {
        a.on_boundary() && q_of(a).is_ok_and(|q| self.cone.sector_interior_contains(q, ANGLE_TOL))
    }

    /// Direction obtained by rotating `c1` towards `c2` by the fraction `t` of the opening angle.
    pub fn direction_at(&self, t: f64) -> Vec2 {
        let (c1, c2) = (self.cone.c1(), self.cone.c2());
        let sign = if c1.cross(c2) > 0.0 { 1.0 } else { -1.0 };
        let theta = c1.y.atan2(c1.x) + sign * t * self.cone.opening_angle();
        Vec2::from_angle(theta)
    }
}

/// Samples `∂D` at `n` equally spaced normal directions, starting at angle 0.
pub fn boundary_polyline(law: &StepLaw, n: usize) -> Result<Vec<(TiltPoint, Vec2)>> {
    (0..n)
        .map(|k| {
            let q = Vec2::from_angle(std::f64::consts::TAU * k as f64 / n as f64);
            a_of(law, q).map(|a| (a, q))
        })
        .collect()
}
