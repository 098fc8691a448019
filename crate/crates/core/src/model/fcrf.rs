//! Network-wide full channel receptive field check.

use serde::{Deserialize, Serialize};

use super::{Layer, NetworkSpec};
use crate::cdg::{cdg_of_block, cdg_of_kernel, crf_sizes, has_fcrf};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcrfEntry {
    pub layer_index: usize,
    pub name: String,
    /// `"clc_block"` or `"conv"`.
    pub kind: String,
    pub in_channels: usize,
    pub crf_min: usize,
    pub crf_max: usize,
    pub fcrf: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcrfReport {
    pub entries: Vec<FcrfEntry>,
}

impl FcrfReport {
    pub fn blocks(&self) -> impl Iterator<Item = &FcrfEntry> {
        self.entries.iter().filter(|e| e.kind == "clc_block")
    }

    pub fn block_count(&self) -> usize {
        self.blocks().count()
    }

    pub fn blocks_with_fcrf(&self) -> usize {
        self.blocks().filter(|e| e.fcrf).count()
    }

    pub fn all_fcrf(&self) -> bool {
        self.entries.iter().all(|e| e.fcrf)
    }
}

/// Composes the dependency graph of every convolution and CLC block and
/// reports whether it covers all of its inputs.
pub fn verify_network_fcrf(spec: &NetworkSpec) -> Result<FcrfReport> {
    spec.shapes()?;
    let mut entries = Vec::new();
    for (idx, layer) in spec.layers.iter().enumerate() {
        let (kind, cdg) = match layer {
            Layer::Conv { conv, .. } => ("conv", cdg_of_kernel(&conv.kernel)?),
            Layer::ClcBlock { block, .. } => ("clc_block", cdg_of_block(block)?),
            _ => continue,
        };
        let sizes = crf_sizes(&cdg);
        entries.push(FcrfEntry {
            layer_index: idx,
            name: layer.name().to_string(),
            kind: kind.to_string(),
            in_channels: cdg.in_channels(),
            crf_min: sizes.iter().copied().min().unwrap_or(0),
            crf_max: sizes.iter().copied().max().unwrap_or(0),
            fcrf: has_fcrf(&cdg),
        });
    }
    Ok(FcrfReport { entries })
}
