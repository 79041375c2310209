use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use crate::cone::Wall;
use crate::step_law::LatticePoint;
use crate::vec2::Vec2;

use super::domain::TruncatedDomain;
use super::Restriction;

/// A closed interval `[lo, hi]` certified to contain a value.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    /// Builds `[lo, hi]`, widening to `[min, max]` when rounding has inverted
    /// bounds that coincide in exact arithmetic.
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo.is_finite() && hi.is_finite(), "bracket bounds must be finite: [{lo}, {hi}]");
        Bracket { lo: lo.min(hi), hi: lo.max(hi) }
    }

    pub fn point(v: f64) -> Self {
        Bracket::new(v, v)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn scale(&self, s: f64) -> Self {
        Bracket::new(self.lo * s, self.hi * s)
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lo - tol && v <= self.hi + tol
    }

    /// Whether `self ⊆ other`, up to `tol`.
    pub fn within(&self, other: &Bracket, tol: f64) -> bool {
        self.lo >= other.lo - tol && self.hi <= other.hi + tol
    }

    pub fn overlaps(&self, other: &Bracket, tol: f64) -> bool {
        self.lo <= other.hi + tol && other.lo <= self.hi + tol
    }
}

impl std::ops::Add for Bracket {
    type Output = Bracket;
    fn add(self, rhs: Bracket) -> Bracket {
        Bracket::new(self.lo + rhs.lo, self.hi + rhs.hi)
    }
}

impl std::ops::Sub for Bracket {
    type Output = Bracket;
    fn sub(self, rhs: Bracket) -> Bracket {
        Bracket::new(self.lo - rhs.hi, self.hi - rhs.lo)
    }
}

impl fmt::Display for Bracket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:.6e}, {:.6e}]", self.lo, self.hi)
    }
}

/// What a [`HarmonicField`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// `E_z[e^{a·S(τ)}; τ < ∞]`.
    ExpPayoff,
    /// `E_z[(f_i·S(τ)) e^{a·S(τ)}; τ < ∞]`.
    LinearExpPayoff(Wall),
    /// `P_z(τ_a = ∞)` under the tilted kernel.
    Survival,
    /// `G(z, target)` for the killed walk.
    Green,
    /// `e^{a·z} − E_z[e^{a·S(τ)}; τ < ∞]`.
    HarmonicInterior,
    /// `(f_i·z) e^{a·z} − E_z[(f_i·S(τ)) e^{a·S(τ)}; τ < ∞]`.
    HarmonicEndpoint(Wall),
}

impl FieldKind {
    pub fn label(self) -> &'static str {
        match self {
            FieldKind::ExpPayoff => "exp_payoff",
            FieldKind::LinearExpPayoff(Wall::First) => "linear_exp_payoff_f1",
            FieldKind::LinearExpPayoff(Wall::Second) => "linear_exp_payoff_f2",
            FieldKind::Survival => "survival",
            FieldKind::Green => "green",
            FieldKind::HarmonicInterior => "h_interior_gamma",
            FieldKind::HarmonicEndpoint(Wall::First) => "h_endpoint_c1",
            FieldKind::HarmonicEndpoint(Wall::Second) => "h_endpoint_c2",
        }
    }

    /// Fields extended by zero outside the cone.
    pub fn vanishes_outside(self) -> bool {
        matches!(self, FieldKind::HarmonicInterior | FieldKind::HarmonicEndpoint(_) | FieldKind::Green)
    }
}

/// Per-state brackets on a truncated domain.
///
/// Values are stored scaled: the raw bracket at `z` is `e^{scale·z}` times the
/// stored one, which keeps exponentially growing fields representable and
/// well conditioned.
#[derive(Debug, Clone)]
pub struct HarmonicField {
    pub(crate) domain: Arc<TruncatedDomain>,
    pub(crate) kind: FieldKind,
    pub(crate) restriction: Restriction,
    pub(crate) tilt: Vec2,
    pub(crate) scale: Vec2,
    pub(crate) values: Vec<Bracket>,
    pub(crate) far: Vec<Bracket>,
    pub(crate) certified: bool,
    pub(crate) residual: f64,
    pub(crate) warnings: Vec<String>,
}

impl HarmonicField {
    /// Wraps externally computed scaled brackets, one per domain state.
    pub fn from_scaled(
        domain: Arc<TruncatedDomain>,
        kind: FieldKind,
        tilt: Vec2,
        scale: Vec2,
        values: Vec<Bracket>,
    ) -> Self {
        assert_eq!(values.len(), domain.len(), "one bracket per interior state");
        HarmonicField {
            domain,
            kind,
            restriction: Restriction::AllExits,
            tilt,
            scale,
            values,
            far: Vec::new(),
            certified: false,
            residual: 0.0,
            warnings: Vec::new(),
        }
    }

    pub fn domain(&self) -> &Arc<TruncatedDomain> {
        &self.domain
    }

    pub fn kind(&self) -> FieldKind {
        self.kind
    }

    pub fn restriction(&self) -> Restriction {
        self.restriction
    }

    /// The tilt `a` the field was computed for.
    pub fn tilt(&self) -> Vec2 {
        self.tilt
    }

    /// Raw value at `z` is `e^{scale·z}` times the scaled bracket.
    pub fn scale(&self) -> Vec2 {
        self.scale
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn scaled(&self, i: usize) -> Bracket {
        self.values[i]
    }

    pub fn scaled_values(&self) -> &[Bracket] {
        &self.values
    }

    pub fn scale_factor(&self, z: LatticePoint) -> f64 {
        self.scale.dot(z.to_vec2()).exp()
    }

    /// Raw bracket at state `i`.
    pub fn value(&self, i: usize) -> Bracket {
        let s = self.scale_factor(self.domain.states()[i]);
        Bracket { lo: self.values[i].lo * s, hi: self.values[i].hi * s }
    }

    pub fn value_at(&self, z: LatticePoint) -> Option<Bracket> {
        self.domain.index_of(z).map(|i| self.value(i))
    }

    pub fn scaled_at(&self, z: LatticePoint) -> Option<Bracket> {
        self.domain.index_of(z).map(|i| self.values[i])
    }

    /// Scaled brackets used on the far frontier, in frontier order.
    pub fn far_values(&self) -> &[Bracket] {
        &self.far
    }

    /// False when the upper bracket rests on a heuristic far-frontier value.
    pub fn is_certified(&self) -> bool {
        self.certified
    }

    /// Relative residual of the final linear solve.
    pub fn solve_residual(&self) -> f64 {
        self.residual
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn max_width_scaled(&self) -> f64 {
        self.values.iter().map(Bracket::width).fold(0.0, f64::max)
    }

    /// Writes `x,y,lo,hi,kind,a1,a2` rows after the given `#` comment lines.
    pub fn write_csv<W: Write>(&self, mut out: W, header: &[String]) -> io::Result<()> {
        for line in header {
            writeln!(out, "# {line}")?;
        }
        writeln!(out, "x,y,lo,hi,kind,a1,a2")?;
        let label = match self.restriction {
            Restriction::AllExits => self.kind.label().to_string(),
            r => format!("{}:{}", self.kind.label(), r.label()),
        };
        for (i, z) in self.domain.states().iter().enumerate() {
            let b = self.value(i);
            writeln!(
                out,
                "{},{},{:e},{:e},{},{:e},{:e}",
                z.x, z.y, b.lo, b.hi, label, self.tilt.x, self.tilt.y
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_arithmetic() {
        let a = Bracket::new(1.0, 2.0);
        let b = Bracket::new(0.5, 0.75);
        assert_eq!(a + b, Bracket::new(1.5, 2.75));
        assert_eq!(a - b, Bracket::new(0.25, 1.5));
        assert!(b.within(&Bracket::new(0.0, 1.0), 0.0));
        assert!(!a.overlaps(&b, 0.0));
        assert_eq!(Bracket::new(2.0, 1.0), Bracket::new(1.0, 2.0));
    }
}
