//! Positive harmonic functions of random walks killed when leaving a planar
//! convex lattice cone.
//!
//! For a finitely supported step law `γ` with non-zero drift and a cone `K`
//! with walls `c1`, `c2`, every tilt `a` on the arc `Γ` of the level set
//! `∂D = {φ = 1}` yields a harmonic function `h_a` of the killed walk. The
//! crate computes these functions on truncated domains with certified
//! two-sided brackets and checks them against independent oracles.

pub mod cone;
pub mod error;
pub mod exec;
pub mod harmonic;
pub mod models;
pub mod monte_carlo;
pub mod quadrant;
pub mod solver;
pub mod step_law;
pub mod tilt;
pub mod vec2;
pub mod verify;

pub use cone::{BoundaryStatus, ConeGeometry, Membership, Wall};
pub use error::{Error, Result};
pub use exec::Execution;
pub use solver::{Bracket, FieldKind, HarmonicField, LatticeSolver, Payoff, Restriction, SolveOptions, TruncatedDomain};
pub use step_law::{validate, AssumptionReport, LatticePoint, StepLaw, TiltedLaw};
pub use tilt::{a_of, q_of, DClass, GammaArc, TiltPoint};
pub use vec2::Vec2;
