//! Single-step, compound-action policy-gradient search over categorical
//! design spaces.
//!
//! A policy network consumes a constant input and emits one categorical
//! distribution per design dimension. Each improvement cycle samples a batch
//! of complete designs, scores them in an [`envs::Environment`], and updates
//! the network with a proximal policy-gradient objective (importance-ratio
//! update loss, reverse-KL regularizer, entropy bonus).
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the external
//! evaluator protocol and the command line live in the `theta-dse` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod diff;
pub mod envs;
mod error;
pub mod ga;
pub mod policy;
pub mod resonance;
pub mod space;
pub mod trace;

pub use error::{Error, Result};
