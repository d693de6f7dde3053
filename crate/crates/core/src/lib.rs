//! Policy Augmentation: an exploration strategy that fills in the unexplored
//! entries of a tabular action-value matrix with inductive matrix completion
//! and acts greedily on the completed matrix during the first part of
//! training.
//!
//! The crate is organised bottom-up:
//!
//! - [`envs`]: MountainCar and CartPole with seeded resets.
//! - [`discretize`]: grid binning of observations and the side-information
//!   matrices `X` (state features) and `Y` (action features).
//! - [`qcore`]: the Q-table, visit counts and count normalisation.
//! - [`imc`]: the multiplicative-update inductive matrix completion solver.
//! - [`agents`]: the augmentation schedule and the baseline learners.
//! - [`harness`]: multi-repetition experiments, CSV and SVG output.

pub mod agents;
pub mod discretize;
pub mod envs;
pub mod error;
pub mod harness;
pub mod imc;
pub mod qcore;

pub use error::{Error, Result};

/// Seeded generator used everywhere a random source is needed.
///
/// ChaCha is used instead of `StdRng` because its output is stable across
/// platforms and crate versions, which the determinism guarantees rely on.
pub type Rng = rand_chacha::ChaCha8Rng;

/// Build a generator for `seed` on an independent `stream`.
pub fn seeded_rng(seed: u64, stream: u64) -> Rng {
    use rand::SeedableRng;
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
