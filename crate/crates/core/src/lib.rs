//! Numerical laboratory for the cutoff soft-potential Boltzmann equation.
//!
//! The crate has two halves that meet in the solver:
//!
//! * an **exact** half — rational exponent algebra for Strichartz-type
//!   triplets (admissibility, solvable families, conjugates, companions,
//!   weighted scaling relations), where no floating point is allowed;
//! * a **floating-point** half — truncated phase-space grids, spherical
//!   quadrature, the gain/loss collision operators, free transport and
//!   damped mild propagation, the Picard/series solvers for the gain-only
//!   equation, the Kaniel–Shinbrot monotone iteration for the full
//!   equation, and a probe harness that stress-tests the bilinear and
//!   Strichartz inequalities on sampled function families.
//!
//! Everything float-valued is deterministic: parallel reductions use fixed
//! chunk boundaries, so a rerun with the same inputs is bit-identical
//! regardless of thread count.

pub mod collision;
pub mod estimates;
pub mod exponents;
pub mod field;
pub mod grid;
pub mod io;
pub mod kinematics;
pub mod norm;
pub mod quadrature;
pub mod rational;
pub mod solver;
pub mod transport;

pub use exponents::{SpaceDim, Triplet, WeightSpec};
pub use field::PhaseField;
pub use grid::{SpatialGrid, TimeGrid, VelocityGrid};
pub use kinematics::{KernelSpec, Velocity};
pub use norm::NormSpec;
pub use quadrature::SphereQuadrature;
pub use rational::Rational;
pub use transport::Trajectory;
