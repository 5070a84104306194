//! Optimal unitary trajectories: for a diagonal state and two commuting observables (target
//! and cost), find the unitaries that reach every target value at minimal cost.
//!
//! The problem lives on the permutation polytope of the spectrum. The optimal path is a
//! chain of polytope edges (swaps of adjacently valued populations) picked greedily by
//! cost-per-target gradient; [`trajectory::build`] computes it, [`lift`] turns points on it
//! into doubly-stochastic matrices and rotations, and [`oracle`] checks it by brute force.

#![forbid(unsafe_code)]

pub mod conserved;
pub mod cooling;
pub mod error;
pub mod lift;
pub mod linalg;
pub mod oracle;
pub mod polytope;
pub mod problem;
pub mod simplex;
pub mod trajectory;

pub use error::{Error, Result};
pub use problem::{validate, PreferredOrder, ProblemInstance};
pub use trajectory::{build, build_from, omega_opt, state_at, OptimalTrajectory};
