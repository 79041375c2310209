//! Direct construction of `h_a` for the positive quadrant `{x₁ > 0, x₂ > 0}`.
//!
//! Written against coordinates only, without the cone machinery: states are
//! the box `[1, R]²`, exits are the points with a non-positive coordinate, and
//! the payoffs are `x₁e^{a·z}`, `x₂e^{a·z}` or `e^{a·z}` in raw (unscaled)
//! form. Beyond the box the continuation is the smallest payoff weight an exit
//! can carry, times `e^{a·z}`. The linear system is solved by banded Gaussian
//! elimination. It serves as an oracle for the general-cone solver.

use crate::error::{Error, Result};
use crate::step_law::{LatticePoint, StepLaw};
use crate::vec2::Vec2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadrantBranch {
    /// `q(a) = (0, 1)`: payoff `x₁ e^{a·z}`.
    FirstCoordinate,
    /// `q(a) = (1, 0)`: payoff `x₂ e^{a·z}`.
    SecondCoordinate,
    /// `q(a)` strictly inside the quadrant: payoff `e^{a·z}`.
    Exponential,
}

impl QuadrantBranch {
    /// Smallest payoff weight over the exits reachable in one step from the box.
    fn lowest_exit_weight(self, law: &StepLaw) -> f64 {
        let deepest = |coord: fn(&LatticePoint) -> i64| law.atoms().iter().map(|(w, _)| -coord(w)).max().unwrap_or(0);
        match self {
            QuadrantBranch::FirstCoordinate => (1 - deepest(|w| w.x)).min(0) as f64,
            QuadrantBranch::SecondCoordinate => (1 - deepest(|w| w.y)).min(0) as f64,
            QuadrantBranch::Exponential => 0.0,
        }
    }

    fn weight(self, z: LatticePoint) -> f64 {
        match self {
            QuadrantBranch::FirstCoordinate => z.x as f64,
            QuadrantBranch::SecondCoordinate => z.y as f64,
            QuadrantBranch::Exponential => 1.0,
        }
    }
}

/// `h_a` on `[1, R]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadrantH {
    pub radius: i64,
    pub a: Vec2,
    /// Raw `h_a(z)` in `x`-major order.
    pub values: Vec<f64>,
}

impl QuadrantH {
    pub fn at(&self, z: LatticePoint) -> Option<f64> {
        let r = self.radius;
        if z.x < 1 || z.y < 1 || z.x > r || z.y > r {
            return None;
        }
        Some(self.values[((z.x - 1) * r + (z.y - 1)) as usize])
    }

    /// `e^{-a·z} h_a(z)`.
    pub fn scaled_at(&self, z: LatticePoint) -> Option<f64> {
        self.at(z).map(|v| v * (-self.a.dot(z.to_vec2())).exp())
    }
}

pub fn quadrant_h(law: &StepLaw, a: Vec2, branch: QuadrantBranch, radius: i64) -> Result<QuadrantH> {
    let jump = law.max_jump();
    if radius < 1 || radius < 2 * jump {
        return Err(Error::Domain(format!("radius {radius} too small for jumps of size {jump}")));
    }
    let r = radius;
    let n = (r * r) as usize;
    let index = |x: i64, y: i64| ((x - 1) * r + (y - 1)) as usize;
    let e = |z: LatticePoint| a.dot(z.to_vec2()).exp();
    let far_weight = branch.lowest_exit_weight(law);

    let band = (jump * r + jump) as usize;
    let mut m = Banded::new(n, band);
    let mut rhs = vec![0.0; n];
    for x in 1..=r {
        for y in 1..=r {
            let i = index(x, y);
            m.add(i, i, 1.0);
            for (w, p) in law.atoms() {
                let next = LatticePoint::new(x + w.x, y + w.y);
                if next.x <= 0 || next.y <= 0 {
                    rhs[i] += p * branch.weight(next) * e(next);
                } else if next.x > r || next.y > r {
                    rhs[i] += p * far_weight * e(next);
                } else {
                    m.add(i, index(next.x, next.y), -p);
                }
            }
        }
    }
    let exits = m.solve(rhs)?;
    let values = (0..n)
        .map(|i| {
            let z = LatticePoint::new(i as i64 / r + 1, i as i64 % r + 1);
            branch.weight(z) * e(z) - exits[i]
        })
        .collect();
    Ok(QuadrantH { radius, a, values })
}

/// Square matrix with entries only within `band` of the diagonal.
struct Banded {
    n: usize,
    band: usize,
    /// Row `i` holds columns `i − band ..= i + band`.
    rows: Vec<f64>,
}

impl Banded {
    fn new(n: usize, band: usize) -> Self {
        Banded { n, band, rows: vec![0.0; n * (2 * band + 1)] }
    }

    fn slot(&self, i: usize, j: usize) -> usize {
        i * (2 * self.band + 1) + (j + self.band - i)
    }

    fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.rows[s] += v;
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[self.slot(i, j)]
    }

    /// Gaussian elimination without pivoting; the matrices here are
    /// diagonally dominant, so the band does not fill in beyond `band`.
    fn solve(mut self, mut b: Vec<f64>) -> Result<Vec<f64>> {
        let (n, band) = (self.n, self.band);
        for k in 0..n {
            let pivot = self.get(k, k);
            if !(pivot.abs() > 1e-300) {
                return Err(Error::Domain(format!("zero pivot in row {k}")));
            }
            let last = (k + band).min(n - 1);
            for i in k + 1..=last {
                let l = self.get(i, k) / pivot;
                if l == 0.0 {
                    continue;
                }
                for j in k..=last {
                    let v = self.get(k, j);
                    if v != 0.0 {
                        self.add(i, j, -l * v);
                    }
                }
                b[i] -= l * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let last = (i + band).min(n - 1);
            let s: f64 = (i + 1..=last).map(|j| self.get(i, j) * x[j]).sum();
            x[i] = (b[i] - s) / self.get(i, i);
        }
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn banded_solve_matches_a_hand_solution() {
        // [[4, -1, 0], [-1, 4, -1], [0, -1, 4]] x = [3, 2, 3] has x = (1, 1, 1).
        let mut m = Banded::new(3, 1);
        for i in 0..3 {
            m.add(i, i, 4.0);
        }
        for i in 0..2 {
            m.add(i, i + 1, -1.0);
            m.add(i + 1, i, -1.0);
        }
        let x = m.solve(vec![3.0, 2.0, 3.0]).unwrap();
        for v in x {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn one_dimensional_gamblers_ruin_column() {
        // Only vertical steps: each column is a ruin problem in x₂ with absorption at 0
        // and continuation 0 above R, so the exit probability from height k is (R+1−k)/(R+1)
        // for the symmetric walk.
        let law = StepLaw::from_triples(&[(0, 1, 0.5), (0, -1, 0.5)]).unwrap();
        let h = quadrant_h(&law, Vec2::ZERO, QuadrantBranch::Exponential, 9).unwrap();
        for k in 1..=9 {
            let expected = 1.0 - (10 - k) as f64 / 10.0;
            assert!((h.at(LatticePoint::new(4, k)).unwrap() - expected).abs() < 1e-14);
        }
    }
}
