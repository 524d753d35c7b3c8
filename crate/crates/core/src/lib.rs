//! Contextual dynamic pricing with binary feedback.
//!
//! The policy learns the revenue-maximizing price as a function of a scalar
//! utility index: contexts are compressed to an index estimate by a pilot,
//! the index range is split into bins, and each bin first localizes an anchor
//! price on a coarse grid and then refines a local polynomial price map with
//! a zeroth-order bandit convex optimization routine.
//!
//! Module layout:
//! - [`env`]: tail functions, demand instances, the oracle price map.
//! - [`orbit`]: binning, coarse localization and trust-region refinement.
//! - [`bco`]: the anytime refinement generator.
//! - [`pilot`]: the adaptive ridge pilot and the explore-then-commit oracles.
//! - [`hard_instance`]: the bump-perturbed lower-bound family.
//! - [`verify`]: numerical structure checks.
//! - [`harness`]: experiment configuration, simulation and output.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bco;
pub mod env;
pub mod error;
pub mod hard_instance;
pub mod harness;
pub mod numeric;
pub mod orbit;
pub mod pilot;
pub mod seed;
pub mod verify;

pub use error::{OrbitError, Result};
