//! Policy networks and the factorized categorical policy they emit.

mod checkpoint;
mod dist;
mod net;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, CheckpointHeader, TensorEntry, CHECKPOINT_FORMAT};
pub use dist::{AlphaMode, PolicyOutput, PolicyValues};
pub use net::{Architecture, PolicyNet};

use crate::diff::Graph;
use crate::Result;

impl PolicyNet {
    /// Forward pass whose result is only read, never differentiated.
    pub fn policy_values(&self) -> Result<PolicyValues> {
        let mut g = Graph::new();
        let (out, _) = self.forward(&mut g)?;
        Ok(out.values(&g))
    }
}
