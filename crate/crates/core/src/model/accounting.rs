//! Multiply-accumulate and parameter counts.
//!
//! Convolutions count `out_h * out_w * macs_per_location` MACs and
//! `macs_per_location` weights (no bias). Batch norm contributes two learnable
//! parameters per channel and no MACs; pooling and ReLU are free. The fully
//! connected layer has `in * out` MACs and `in * out + out` parameters.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::{Layer, NetworkSpec};
use crate::conv::KernelSpec;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub name: String,
    pub kind: String,
    pub in_channels: usize,
    pub out_channels: usize,
    pub groups: usize,
    pub stride: usize,
    pub out_h: usize,
    pub out_w: usize,
    pub macs: u64,
    pub params: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindTotals {
    pub macs: u64,
    pub params: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostReport {
    pub layers: Vec<LayerRecord>,
    pub total_macs: u64,
    pub total_params: u64,
    pub conv_params: u64,
    pub bn_params: u64,
    pub fc_params: u64,
    pub by_kind: BTreeMap<String, KindTotals>,
}

pub const KIND_BATCH_NORM: &str = "batch_norm";
pub const KIND_AVG_POOL: &str = "avg_pool";
pub const KIND_FC: &str = "fully_connected";

fn conv_record(name: String, k: &KernelSpec, out_h: usize, out_w: usize) -> LayerRecord {
    let per_location = k.macs_per_location();
    LayerRecord {
        name,
        kind: k.kind.as_str().to_string(),
        in_channels: k.in_channels,
        out_channels: k.out_channels,
        groups: k.groups,
        stride: k.stride,
        out_h,
        out_w,
        macs: (out_h * out_w) as u64 * per_location,
        params: per_location,
    }
}

fn bn_record(name: String, channels: usize, out_h: usize, out_w: usize) -> LayerRecord {
    LayerRecord {
        name,
        kind: KIND_BATCH_NORM.to_string(),
        in_channels: channels,
        out_channels: channels,
        groups: 1,
        stride: 1,
        out_h,
        out_w,
        macs: 0,
        params: 2 * channels as u64,
    }
}

/// Per-layer MAC and parameter accounting for a network.
pub fn cost_report(spec: &NetworkSpec) -> Result<CostReport> {
    let shapes = spec.shapes()?;
    let mut layers = Vec::new();
    let mut prev = (spec.input_channels, spec.input_resolution, spec.input_resolution);
    for (layer, &(c, h, w)) in spec.layers.iter().zip(&shapes) {
        match layer {
            Layer::Conv { name, conv } => {
                layers.push(conv_record(name.clone(), &conv.kernel, h, w));
                layers.push(bn_record(format!("{name}.bn"), c, h, w));
            }
            Layer::ClcBlock { name, block } => {
                // the GC is 1x1 stride 1, so both convolutions run at the block's output size
                layers.push(conv_record(format!("{name}.igc"), &block.igc, h, w));
                layers.push(bn_record(format!("{name}.bn1"), block.mid_channels(), h, w));
                layers.push(conv_record(format!("{name}.gc"), &block.gc, h, w));
                layers.push(bn_record(format!("{name}.bn2"), c, h, w));
            }
            Layer::GlobalAvgPool => layers.push(LayerRecord {
                name: "avg_pool".into(),
                kind: KIND_AVG_POOL.into(),
                in_channels: prev.0,
                out_channels: c,
                groups: 1,
                stride: 1,
                out_h: h,
                out_w: w,
                macs: 0,
                params: 0,
            }),
            Layer::FullyConnected {
                in_features,
                out_features,
            } => {
                let weights = (*in_features * *out_features) as u64;
                layers.push(LayerRecord {
                    name: "fc".into(),
                    kind: KIND_FC.into(),
                    in_channels: *in_features,
                    out_channels: *out_features,
                    groups: 1,
                    stride: 1,
                    out_h: 1,
                    out_w: 1,
                    macs: weights,
                    params: weights + *out_features as u64,
                });
            }
        }
        prev = (c, h, w);
    }

    let mut by_kind: BTreeMap<String, KindTotals> = BTreeMap::new();
    for r in &layers {
        let t = by_kind.entry(r.kind.clone()).or_default();
        t.macs += r.macs;
        t.params += r.params;
    }
    let params_of = |kind: &str| by_kind.get(kind).map_or(0, |t| t.params);
    let bn_params = params_of(KIND_BATCH_NORM);
    let fc_params = params_of(KIND_FC);
    let total_params = layers.iter().map(|r| r.params).sum();
    Ok(CostReport {
        total_macs: layers.iter().map(|r| r.macs).sum(),
        total_params,
        conv_params: total_params - bn_params - fc_params,
        bn_params,
        fc_params,
        by_kind,
        layers,
    })
}

pub fn count_macs(spec: &NetworkSpec) -> Result<u64> {
    Ok(cost_report(spec)?.total_macs)
}

pub fn count_params(spec: &NetworkSpec) -> Result<u64> {
    Ok(cost_report(spec)?.total_params)
}

impl CostReport {
    pub fn layer(&self, name: &str) -> Option<&LayerRecord> {
        self.layers.iter().find(|r| r.name == name)
    }
}

/// Aligned plain-text table.
impl fmt::Display for CostReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<14} {:<18} {:>5} {:>5} {:>4} {:>6} {:>9} {:>14} {:>10}",
            "layer", "kind", "in", "out", "g", "stride", "out_hw", "macs", "params"
        );
        for r in &self.layers {
            let _ = writeln!(
                s,
                "{:<14} {:<18} {:>5} {:>5} {:>4} {:>6} {:>9} {:>14} {:>10}",
                r.name,
                r.kind,
                r.in_channels,
                r.out_channels,
                r.groups,
                r.stride,
                format!("{}x{}", r.out_h, r.out_w),
                r.macs,
                r.params
            );
        }
        let _ = writeln!(s);
        for (kind, t) in &self.by_kind {
            let _ = writeln!(s, "{kind:<18} macs {:>14}  params {:>10}", t.macs, t.params);
        }
        let _ = writeln!(
            s,
            "params: conv {} + batch_norm {} + fc {}",
            self.conv_params, self.bn_params, self.fc_params
        );
        let _ = writeln!(
            s,
            "total: {} MACs ({:.1}M), {} params ({:.2}M)",
            self.total_macs,
            self.total_macs as f64 / 1e6,
            self.total_params,
            self.total_params as f64 / 1e6
        );
        f.write_str(&s)
    }
}
