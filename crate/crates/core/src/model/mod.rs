//! clcNet: network construction, cost accounting, FCRF verification and
//! forward inference.
//!
//! The network is a 3×3 stride-2 regular stem (BN + ReLU), a sequence of CLC
//! blocks whose channel widths double at every stride-2 stage, global average
//! pooling and a fully connected classifier. Every block uses `L = M` and
//! `g2 = 2`, with `g1` chosen by [`fixed_g2_policy`].

mod accounting;
mod config;
mod fcrf;
mod forward;

pub use accounting::{cost_report, count_macs, count_params, CostReport, KindTotals, LayerRecord};
pub use config::{parse_config, serialize_config};
pub use fcrf::{verify_network_fcrf, FcrfEntry, FcrfReport};
pub use forward::{forward, forward_traced, LayerWeights, WeightBundle};

use serde::{Deserialize, Serialize};

use crate::conv::{BlockSpec, KernelSpec};
use crate::error::{Error, Result};
use crate::optimizer::{fixed_g2_policy, CostQuery};

/// Total downsampling factor of the network (five stride-2 layers).
pub const NETWORK_STRIDE: usize = 32;

/// `g2` used by every CLC block.
pub const FIXED_G2: usize = 2;

/// Repetition counts and input/output sizes of a clcNet instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub a: usize,
    pub b: usize,
    pub c: usize,
    pub d: usize,
    #[serde(default = "default_resolution")]
    pub input_resolution: usize,
    #[serde(default = "default_classes")]
    pub num_classes: usize,
    /// Replace every IGC with a plain grouped convolution.
    #[serde(default)]
    pub ablate_igc_to_gc: bool,
}

fn default_resolution() -> usize {
    224
}

fn default_classes() -> usize {
    1000
}

impl NetworkConfig {
    pub fn new(a: usize, b: usize, c: usize, d: usize) -> Self {
        Self {
            a,
            b,
            c,
            d,
            input_resolution: default_resolution(),
            num_classes: default_classes(),
            ablate_igc_to_gc: false,
        }
    }

    /// `(1, 1, 5, 2)`
    pub fn clcnet_a() -> Self {
        Self::new(1, 1, 5, 2)
    }

    /// `(1, 1, 7, 3)`
    pub fn clcnet_b() -> Self {
        Self::new(1, 1, 7, 3)
    }

    pub fn with_resolution(mut self, resolution: usize) -> Self {
        self.input_resolution = resolution;
        self
    }

    pub fn ablated(mut self) -> Self {
        self.ablate_igc_to_gc = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_resolution == 0 || self.input_resolution % NETWORK_STRIDE != 0 {
            return Err(Error::Config(format!(
                "input_resolution must be a positive multiple of {NETWORK_STRIDE}, got {}",
                self.input_resolution
            )));
        }
        if self.num_classes == 0 {
            return Err(Error::Config("num_classes must be >= 1".into()));
        }
        Ok(())
    }

    pub fn block_count(&self) -> usize {
        5 + self.a + self.b + self.c + self.d
    }
}

/// A regular convolution followed by batch norm and ReLU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvLayer {
    pub kernel: KernelSpec,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Layer {
    Conv { name: String, conv: ConvLayer },
    ClcBlock { name: String, block: BlockSpec },
    GlobalAvgPool,
    FullyConnected { in_features: usize, out_features: usize },
}

impl Layer {
    pub fn name(&self) -> &str {
        match self {
            Layer::Conv { name, .. } | Layer::ClcBlock { name, .. } => name,
            Layer::GlobalAvgPool => "avg_pool",
            Layer::FullyConnected { .. } => "fc",
        }
    }
}

/// Activation shape after a layer: `(channels, height, width)`.
pub type ActivationShape = (usize, usize, usize);

/// Ordered layer list of a network, checked to chain correctly.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_channels: usize,
    pub input_resolution: usize,
    pub layers: Vec<Layer>,
}

impl NetworkSpec {
    pub fn new(input_channels: usize, input_resolution: usize, layers: Vec<Layer>) -> Result<Self> {
        let spec = Self {
            input_channels,
            input_resolution,
            layers,
        };
        spec.shapes()?;
        Ok(spec)
    }

    /// Output shape of every layer, in order.
    pub fn shapes(&self) -> Result<Vec<ActivationShape>> {
        let mut cur = (self.input_channels, self.input_resolution, self.input_resolution);
        let mut out = Vec::with_capacity(self.layers.len());
        for (idx, layer) in self.layers.iter().enumerate() {
            cur = layer_output(layer, cur).map_err(|e| e.at_layer(idx, layer.name()))?;
            out.push(cur);
        }
        Ok(out)
    }

    pub fn clc_blocks(&self) -> impl Iterator<Item = &BlockSpec> {
        self.layers.iter().filter_map(|l| match l {
            Layer::ClcBlock { block, .. } => Some(block),
            _ => None,
        })
    }

    pub fn block_count(&self) -> usize {
        self.clc_blocks().count()
    }

    /// Same network with every IGC swapped for a plain grouped convolution.
    pub fn ablated(&self) -> Self {
        let layers = self
            .layers
            .iter()
            .map(|l| match l {
                Layer::ClcBlock { name, block } => Layer::ClcBlock {
                    name: name.clone(),
                    block: block.ablated(),
                },
                other => other.clone(),
            })
            .collect();
        Self {
            layers,
            ..self.clone()
        }
    }

    pub fn output_classes(&self) -> Option<usize> {
        self.shapes().ok()?.last().map(|s| s.0)
    }
}

fn layer_output(layer: &Layer, (c, h, w): ActivationShape) -> Result<ActivationShape> {
    let conv_out = |k: &KernelSpec| -> Result<ActivationShape> {
        k.validate()?;
        if k.in_channels != c {
            return Err(Error::ChannelMismatch(format!(
                "layer expects {} channels, previous layer produces {c}",
                k.in_channels
            )));
        }
        let (oh, ow) = k.output_size(h, w)?;
        Ok((k.out_channels, oh, ow))
    };
    match layer {
        Layer::Conv { conv, .. } => conv_out(&conv.kernel),
        Layer::ClcBlock { block, .. } => {
            block.validate()?;
            let mid = conv_out(&block.igc)?;
            let k = &block.gc;
            let (oh, ow) = k.output_size(mid.1, mid.2)?;
            Ok((k.out_channels, oh, ow))
        }
        Layer::GlobalAvgPool => Ok((c, 1, 1)),
        Layer::FullyConnected {
            in_features,
            out_features,
        } => {
            if (h, w) != (1, 1) || c != *in_features {
                return Err(Error::shape(format!(
                    "fully connected layer expects {in_features}x1x1, got {c}x{h}x{w}"
                )));
            }
            if *out_features == 0 {
                return Err(Error::shape("fully connected layer has zero outputs"));
            }
            Ok((*out_features, 1, 1))
        }
    }
}

/// One row of the stage table: `(in, out, stride, repeats)`.
fn stage_rows(cfg: &NetworkConfig) -> [(usize, usize, usize, usize); 9] {
    [
        (32, 64, 1, 1),
        (64, 128, 2, 1),
        (128, 128, 1, cfg.a),
        (128, 256, 2, 1),
        (256, 256, 1, cfg.b),
        (256, 512, 2, 1),
        (512, 512, 1, cfg.c),
        (512, 1024, 2, 1),
        (1024, 1024, 1, cfg.d),
    ]
}

/// Builds clcNet for the given repetition counts.
pub fn build_clcnet(cfg: &NetworkConfig) -> Result<NetworkSpec> {
    cfg.validate()?;
    let mut layers = vec![Layer::Conv {
        name: "stem".into(),
        conv: ConvLayer {
            kernel: KernelSpec::regular(3, 32, 3, 2),
        },
    }];
    let mut index = 0;
    for (m, n, stride, repeats) in stage_rows(cfg) {
        for _ in 0..repeats {
            index += 1;
            let l = m;
            let g1 = fixed_g2_policy(&CostQuery::new(m, l, n), FIXED_G2)?.g1;
            let mut block = BlockSpec::new(m, l, n, g1, FIXED_G2, stride)?;
            if cfg.ablate_igc_to_gc {
                block = block.ablated();
            }
            layers.push(Layer::ClcBlock {
                name: format!("block{index}"),
                block,
            });
        }
    }
    layers.push(Layer::GlobalAvgPool);
    layers.push(Layer::FullyConnected {
        in_features: 1024,
        out_features: cfg.num_classes,
    });
    NetworkSpec::new(3, cfg.input_resolution, layers)
}
