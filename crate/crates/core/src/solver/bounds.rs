//! Certified values on the far frontier.
//!
//! Every bound here is built from functions that are super- or sub-harmonic
//! for the tilted kernel and dominate (or are dominated by) the exit payoff,
//! so the truncated solutions nest as the radius grows. All values are in
//! scaled units: a raw quantity `U(z)` is stored as `e^{-a·z} U(z)`.

use crate::cone::{ConeGeometry, Wall};
use crate::error::{Error, Result};
use crate::step_law::{LatticePoint, StepLaw};
use crate::tilt::{epsilon_for_delta, far_boundary_shift, TiltPoint};

use super::field::Bracket;
use super::{Payoff, Restriction};

/// Number of dyadic values `δ = 2^{-k}` tried for the opposite-wall bound.
const DELTA_LADDER: u32 = 16;

#[derive(Debug, Clone)]
pub(crate) struct FarBounds {
    cone: ConeGeometry,
    /// `λ_i` with `φ(a − λ_i f_i) = 1`, largest root.
    lundberg: [f64; 2],
    /// `J_i − gap_i`, clipped at 0: how far below wall `i` one step can land.
    overshoot: [f64; 2],
    /// `(δ, ε)` pairs with `φ(a + δ f_i − ε f_j) = 1`, per wall `i`.
    ladders: [Vec<(f64, f64)>; 2],
}

impl FarBounds {
    pub(crate) fn new(law: &StepLaw, cone: &ConeGeometry, a: &TiltPoint) -> Result<Self> {
        let mut lundberg = [0.0; 2];
        let mut overshoot = [0.0; 2];
        let mut ladders: [Vec<(f64, f64)>; 2] = [Vec::new(), Vec::new()];
        for wall in Wall::both() {
            let i = wall.index();
            let f = cone.f(wall);
            lundberg[i] = far_boundary_shift(law, a.a, f)?.max(0.0);
            let jump = law.atoms().iter().map(|(w, _)| -f.dot(w.to_vec2())).fold(0.0, f64::max);
            overshoot[i] = (jump - cone.lattice_gap(wall)).max(0.0);
            if a.on_boundary() {
                for k in 1..=DELTA_LADDER {
                    let delta = 0.5_f64.powi(k as i32);
                    match epsilon_for_delta(law, a, delta, f, cone.f(wall.other())) {
                        Ok(eps) => ladders[i].push((delta, eps)),
                        Err(Error::DeltaTooLarge(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
        }
        Ok(FarBounds { cone: *cone, lundberg, overshoot, ladders })
    }

    pub(crate) fn overshoot(&self, wall: Wall) -> f64 {
        self.overshoot[wall.index()]
    }

    pub(crate) fn lundberg(&self, wall: Wall) -> f64 {
        self.lundberg[wall.index()]
    }

    /// `e^{-λ_i f_i·z}`: bounds the scaled exit mass through wall `i`.
    fn wall_mass(&self, wall: Wall, z: LatticePoint) -> f64 {
        (-self.lundberg[wall.index()] * self.cone.f_dot(wall, z)).exp()
    }

    /// Scaled total exit mass bound `min(1, Σ_i e^{-λ_i f_i·z})`.
    pub(crate) fn exit_mass_hi(&self, z: LatticePoint) -> f64 {
        (self.wall_mass(Wall::First, z) + self.wall_mass(Wall::Second, z)).min(1.0)
    }

    /// `min_δ (1/δ) e^{(δ f_i − ε f_j)·z}`: bounds the scaled
    /// `E[(f_i·S) e^{a·S}; exit through wall j first]`.
    pub(crate) fn opposite_wall(&self, wall: Wall, z: LatticePoint) -> f64 {
        let fi = self.cone.f_dot(wall, z);
        let fj = self.cone.f_dot(wall.other(), z);
        self.ladders[wall.index()]
            .iter()
            .map(|&(delta, eps)| (delta * fi - eps * fj).exp() / delta)
            .fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn ladder(&self, wall: Wall) -> &[(f64, f64)] {
        &self.ladders[wall.index()]
    }

    /// Certified scaled bracket for the exit expectation started at far state `z`.
    pub(crate) fn payoff(&self, payoff: Payoff, restriction: Restriction, z: LatticePoint) -> Bracket {
        match payoff {
            Payoff::Exp => {
                let hi = match restriction {
                    Restriction::AllExits => self.exit_mass_hi(z),
                    Restriction::OnlyTau1First => self.wall_mass(Wall::First, z).min(1.0),
                    Restriction::OnlyTau2First => self.wall_mass(Wall::Second, z).min(1.0),
                };
                Bracket::new(0.0, hi)
            }
            Payoff::LinearExp(wall) => {
                let fi = self.cone.f_dot(wall, z);
                let o = self.overshoot(wall);
                let b = self.opposite_wall(wall, z);
                match restriction.bucket() {
                    None => Bracket::new(-o, fi.min(b)),
                    Some(k) if k == wall => Bracket::new(-o, 0.0),
                    Some(_) => Bracket::new(0.0, (fi + o).min(b)),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tilt::a_of;

    fn drifted() -> StepLaw {
        StepLaw::from_triples(&[(1, 0, 0.4), (-1, 0, 0.1), (0, 1, 0.4), (0, -1, 0.1)]).unwrap()
    }

    #[test]
    fn exp_bound_dominates_payoff_at_exits() {
        let law = drifted();
        let cone = ConeGeometry::quadrant();
        let a = a_of(&law, crate::vec2::Vec2::new(1.0, 1.0)).unwrap();
        let fb = FarBounds::new(&law, &cone, &a).unwrap();
        for x in -1..=0 {
            for y in -1..30 {
                assert!(fb.exit_mass_hi(LatticePoint::new(x, y)) >= 1.0 - 1e-12);
                assert!(fb.exit_mass_hi(LatticePoint::new(y, x)) >= 1.0 - 1e-12);
            }
        }
        assert!(fb.exit_mass_hi(LatticePoint::new(40, 40)) < 1e-3);
    }

    #[test]
    fn opposite_wall_bound_beats_linear_near_the_wall() {
        let law = drifted();
        let cone = ConeGeometry::quadrant();
        let a = a_of(&law, cone.c1()).unwrap();
        let fb = FarBounds::new(&law, &cone, &a).unwrap();
        assert!(!fb.ladder(Wall::First).is_empty());
        let z = LatticePoint::new(2, 200);
        let fi = cone.f_dot(Wall::First, z);
        assert!(fb.opposite_wall(Wall::First, z) < fi);
    }
}
