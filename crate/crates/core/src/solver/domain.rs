use std::collections::BTreeMap;

use crate::cone::{BoundaryStatus, ConeGeometry, Membership};
use crate::error::{Error, Result};
use crate::step_law::{LatticePoint, StepLaw};

/// Default cap on the number of interior states of a truncated domain.
pub const DEFAULT_STATE_CAP: usize = 2_000_000;

/// Where one step from an interior state lands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Successor {
    Interior(u32),
    /// In `K` but outside the box `|z|∞ ≤ R`.
    Far(u32),
    /// Outside `K`.
    Exit(u32),
}

/// The lattice points of `K` in the box `|z|∞ ≤ R`, with the one-step
/// neighbourhood split into interior states, far-frontier states and exits.
///
/// States are listed in lexicographic `(x, y)` order.
#[derive(Debug, Clone)]
pub struct TruncatedDomain {
    cone: ConeGeometry,
    radius: i64,
    max_jump: i64,
    steps: Vec<LatticePoint>,
    states: Vec<LatticePoint>,
    far: Vec<LatticePoint>,
    exits: Vec<(LatticePoint, BoundaryStatus)>,
    /// Row-major `states.len() × steps.len()`.
    successors: Vec<Successor>,
    grid_offset: i64,
    grid_side: usize,
    grid: Vec<i32>,
}

impl TruncatedDomain {
    pub fn build(cone: &ConeGeometry, law: &StepLaw, radius: i64) -> Result<Self> {
        TruncatedDomain::build_with_cap(cone, law, radius, DEFAULT_STATE_CAP)
    }

    pub fn build_with_cap(cone: &ConeGeometry, law: &StepLaw, radius: i64, state_cap: usize) -> Result<Self> {
        let max_jump = law.max_jump();
        if radius < 2 * max_jump || radius < 1 {
            return Err(Error::Domain(format!(
                "radius {radius} is below twice the maximal jump {max_jump}"
            )));
        }
        let side = 2 * radius as usize + 1;
        if side.saturating_mul(side) > state_cap.saturating_mul(8) {
            return Err(Error::Domain(format!("radius {radius} exceeds the state cap {state_cap}")));
        }
        let states: Vec<LatticePoint> = (-radius..=radius)
            .flat_map(|x| (-radius..=radius).map(move |y| LatticePoint::new(x, y)))
            .filter(|z| cone.contains(*z) == Membership::Interior)
            .collect();
        if states.is_empty() {
            return Err(Error::Domain("no lattice point of the cone lies in the box".into()));
        }
        if states.len() > state_cap {
            return Err(Error::Domain(format!("{} states exceed the state cap {state_cap}", states.len())));
        }

        let grid_offset = radius + max_jump;
        let grid_side = (2 * grid_offset + 1) as usize;
        let mut grid = vec![-1_i32; grid_side * grid_side];
        for (i, z) in states.iter().enumerate() {
            grid[((z.x + grid_offset) as usize) * grid_side + (z.y + grid_offset) as usize] = i as i32;
        }

        let steps: Vec<LatticePoint> = law.atoms().iter().map(|(w, _)| *w).collect();
        let mut far_ids: BTreeMap<LatticePoint, u32> = BTreeMap::new();
        let mut exit_ids: BTreeMap<LatticePoint, u32> = BTreeMap::new();
        let mut raw = Vec::with_capacity(states.len() * steps.len());
        for z in &states {
            for w in &steps {
                let next = *z + *w;
                let idx = grid[((next.x + grid_offset) as usize) * grid_side + (next.y + grid_offset) as usize];
                raw.push(if idx >= 0 {
                    (0_u8, next, idx as u32)
                } else if cone.contains(next) == Membership::Exit {
                    exit_ids.insert(next, 0);
                    (2, next, 0)
                } else {
                    far_ids.insert(next, 0);
                    (1, next, 0)
                });
            }
        }
        for (k, v) in far_ids.values_mut().enumerate() {
            *v = k as u32;
        }
        for (k, v) in exit_ids.values_mut().enumerate() {
            *v = k as u32;
        }
        let successors = raw
            .into_iter()
            .map(|(tag, next, idx)| match tag {
                0 => Successor::Interior(idx),
                1 => Successor::Far(far_ids[&next]),
                _ => Successor::Exit(exit_ids[&next]),
            })
            .collect();
        let far = far_ids.into_keys().collect();
        let exits = exit_ids.into_keys().map(|z| (z, cone.which_boundary(z))).collect();

        Ok(TruncatedDomain {
            cone: *cone,
            radius,
            max_jump,
            steps,
            states,
            far,
            exits,
            successors,
            grid_offset,
            grid_side,
            grid,
        })
    }

    pub fn cone(&self) -> &ConeGeometry {
        &self.cone
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    pub fn max_jump(&self) -> i64 {
        self.max_jump
    }

    /// Support of the law the domain was built for, in atom order.
    pub fn steps(&self) -> &[LatticePoint] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[LatticePoint] {
        &self.states
    }

    pub fn far_frontier(&self) -> &[LatticePoint] {
        &self.far
    }

    /// Exit points with the half-planes they violate.
    pub fn exit_frontier(&self) -> &[(LatticePoint, BoundaryStatus)] {
        &self.exits
    }

    pub fn index_of(&self, z: LatticePoint) -> Option<usize> {
        if z.norm_inf() > self.radius {
            return None;
        }
        let idx = self.grid[((z.x + self.grid_offset) as usize) * self.grid_side + (z.y + self.grid_offset) as usize];
        (idx >= 0).then_some(idx as usize)
    }

    /// Successors of state `i`, one per atom of the law.
    pub fn successors(&self, i: usize) -> &[Successor] {
        let n = self.steps.len();
        &self.successors[i * n..(i + 1) * n]
    }

    /// True when no successor of state `i` lies on the far frontier.
    pub fn is_fully_interior(&self, i: usize) -> bool {
        self.successors(i).iter().all(|s| !matches!(s, Successor::Far(_)))
    }

    /// Checks that the domain was built for the support of `law`.
    pub fn check_law(&self, law: &StepLaw) -> Result<()> {
        let same = law.atoms().len() == self.steps.len()
            && law.atoms().iter().zip(&self.steps).all(|((w, _), s)| w == s);
        if same {
            Ok(())
        } else {
            Err(Error::Domain("domain was built for a different step law".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nearest_neighbour() -> StepLaw {
        StepLaw::from_triples(&[(1, 0, 0.4), (-1, 0, 0.1), (0, 1, 0.4), (0, -1, 0.1)]).unwrap()
    }

    #[test]
    fn quadrant_radius_three() {
        let d = TruncatedDomain::build(&ConeGeometry::quadrant(), &nearest_neighbour(), 3).unwrap();
        let expect: Vec<_> = (1..=3).flat_map(|x| (1..=3).map(move |y| LatticePoint::new(x, y))).collect();
        assert_eq!(d.states(), &expect[..]);
        assert_eq!(d.len(), 9);
    }

    #[test]
    fn forty_five_degree_radius_three() {
        let cone = ConeGeometry::from_dirs(LatticePoint::new(1, 0), LatticePoint::new(1, 1)).unwrap();
        let d = TruncatedDomain::build(&cone, &nearest_neighbour(), 3).unwrap();
        assert_eq!(
            d.states(),
            &[LatticePoint::new(2, 1), LatticePoint::new(3, 1), LatticePoint::new(3, 2)]
        );
    }

    #[test]
    fn radius_below_two_jumps_rejected() {
        let law = StepLaw::from_triples(&[(2, 0, 0.5), (-1, 0, 0.2), (0, 1, 0.2), (0, -1, 0.1)]).unwrap();
        assert!(matches!(
            TruncatedDomain::build(&ConeGeometry::quadrant(), &law, 3),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn state_cap_enforced() {
        let r = TruncatedDomain::build_with_cap(&ConeGeometry::quadrant(), &nearest_neighbour(), 20, 100);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn successors_partition_neighbourhood() {
        let law = StepLaw::from_triples(&[(1, 0, 0.3), (-2, 0, 0.1), (0, 1, 0.3), (0, -1, 0.2), (1, 1, 0.1)]).unwrap();
        let cone = ConeGeometry::from_dirs(LatticePoint::new(1, 0), LatticePoint::new(1, 2)).unwrap();
        let d = TruncatedDomain::build(&cone, &law, 12).unwrap();
        for (i, z) in d.states().iter().enumerate() {
            assert_eq!(d.index_of(*z), Some(i));
            for (s, w) in d.successors(i).iter().zip(d.steps()) {
                let next = *z + *w;
                match *s {
                    Successor::Interior(j) => assert_eq!(d.states()[j as usize], next),
                    Successor::Far(k) => {
                        assert_eq!(d.far_frontier()[k as usize], next);
                        assert!(next.norm_inf() > 12 && cone.contains(next) == Membership::Interior);
                    }
                    Successor::Exit(k) => {
                        assert_eq!(d.exit_frontier()[k as usize].0, next);
                        assert_eq!(cone.contains(next), Membership::Exit);
                    }
                }
            }
        }
        assert!(d.states().windows(2).all(|w| w[0] < w[1]));
    }
}
