//! Checkpoints: one JSON header line, then the parameters as little-endian
//! `f64` in registration order.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{Architecture, PolicyNet};
use crate::space::DesignSpace;
use crate::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "theta-dse-checkpoint";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub architecture: Architecture,
    pub space_hash: String,
    pub seed: u64,
    pub tensors: Vec<TensorEntry>,
}

impl CheckpointHeader {
    pub fn for_net(net: &PolicyNet) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: 1,
            architecture: net.architecture().clone(),
            space_hash: net.space_hash().into(),
            seed: net.seed(),
            tensors: net
                .params()
                .iter()
                .map(|(name, t)| TensorEntry {
                    name: name.into(),
                    shape: t.shape().to_vec(),
                })
                .collect(),
        }
    }
}

pub fn encode_checkpoint(net: &PolicyNet) -> Vec<u8> {
    let header = serde_json::to_string(&CheckpointHeader::for_net(net)).expect("header serializes");
    let values = net.params().flat_values();
    let mut out = Vec::with_capacity(header.len() + 1 + values.len() * 8);
    out.extend_from_slice(header.as_bytes());
    out.push(b'\n');
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Rebuilds a network for `space` from checkpoint bytes.
pub fn decode_checkpoint(bytes: &[u8], space: &DesignSpace) -> Result<PolicyNet> {
    let bad = |m: &str| Error::Parse {
        dimension: None,
        message: alloc::format!("checkpoint: {m}"),
    };
    let nl = bytes.iter().position(|b| *b == b'\n').ok_or_else(|| bad("missing header"))?;
    let header: CheckpointHeader = serde_json::from_slice(&bytes[..nl]).map_err(|e| bad(&e.to_string()))?;
    if header.format != CHECKPOINT_FORMAT || header.version != 1 {
        return Err(bad("unsupported format or version"));
    }
    if header.space_hash != space.hash_hex() {
        return Err(bad("space hash does not match"));
    }
    let mut net = PolicyNet::build(space, header.architecture.clone(), header.seed)?;
    if header != CheckpointHeader::for_net(&net) {
        return Err(bad("tensor layout does not match architecture"));
    }
    let blob = &bytes[nl + 1..];
    if blob.len() != net.params().numel() * 8 {
        return Err(bad("parameter blob has the wrong length"));
    }
    let flat: Vec<f64> = blob
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    net.params_mut().load_flat(&flat)?;
    Ok(net)
}
