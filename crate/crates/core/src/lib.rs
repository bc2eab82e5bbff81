//! Worst-case benchmarks for continuous-variable teleportation and
//! photon-number detection under an input energy budget.
//!
//! The teleportation side asks how well an additive-noise channel of
//! variance `xi` approximates the identity channel over inputs of mean
//! photon number at most `E`. Twin-Fock inputs suffice, which turns the
//! worst case into a convex quadratic program over the energy-bounded
//! probability simplex ([`kernel`], [`solver`]). Solutions are certified by
//! KKT duality ([`certify`]), bracketed against the untruncated problem
//! ([`bounds`]), and compared to the standard coherent and two-mode
//! squeezed vacuum tests ([`baselines`]). The detector side has closed
//! forms ([`detector`]). Brute-force verifiers live in [`oracle`].

pub mod baselines;
pub mod bounds;
pub mod certify;
pub mod detector;
mod error;
pub mod kernel;
mod math;
pub mod oracle;
pub mod solver;

pub use error::{Error, Result};
pub use kernel::{KernelMatrix, NoiseModel, SpectrumVector};
pub use solver::{QpProblem, QpSolution, SolveOptions, SolveStatus};
