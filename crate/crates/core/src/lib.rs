//! Trust-region solvers whose radius tracks the gradient norm or the negative
//! curvature of the Hessian, a fixed-radius variant built on exact subproblem
//! solutions, and a verifier that replays solve traces against the decrease
//! floors and iteration-count caps those rules guarantee.
//!
//! The pieces:
//!
//! - [`linalg`]: packed symmetric matrices and a dense Jacobi eigensolver.
//! - [`model`]: the local quadratic model and its two Cauchy points.
//! - [`trs`]: exact trust-region subproblem solutions, hard case included.
//! - [`strategy`]: the radius rules (`update1`, `update2`) behind a common
//!   trait, registered by name.
//! - [`solver`]: the adaptive accept/reject loop over any registered rule.
//! - [`fixed`]: the fixed-radius, accept-everything method.
//! - [`bounds`]: closed forms for the guaranteed constants and count caps.
//! - [`problems`]: built-in objectives with certified constants, JSON-loadable
//!   polynomial problems, and finite-difference validation.
//! - [`trace`] / [`verify`]: JSONL trace files and the post-hoc checker.
//! - [`sweep`]: tolerance sweeps with observed-vs-cap tables and slope fits.

pub mod bounds;
pub mod error;
pub mod fixed;
pub mod linalg;
pub mod model;
pub mod problems;
pub mod solver;
pub mod strategy;
pub mod sweep;
pub mod trace;
pub mod trs;
pub mod verify;

pub use error::{Error, Result};

/// Deterministic RNG for every sampled quantity: a single seed fixes random
/// test matrices, sample points, and spot-check pairs.
pub fn seeded_rng(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}
