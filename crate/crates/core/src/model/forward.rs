//! Whole-network forward inference.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Layer, NetworkSpec};
use crate::conv::{batchnorm_inference, clc_block_forward, conv2d, relu, BatchNorm, BlockWeights, KernelSpec};
use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor4D, WeightTensor};

#[derive(Debug, Clone, PartialEq)]
pub enum LayerWeights {
    Conv { weights: WeightTensor, bn: BatchNorm },
    ClcBlock(BlockWeights),
    None,
    FullyConnected { weights: WeightTensor, bias: Vec<Scalar> },
}

/// Weights for every layer of a [`NetworkSpec`], index-aligned with its layers.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightBundle {
    pub layers: Vec<LayerWeights>,
}

fn uniform_weights(rng: &mut ChaCha8Rng, k: &KernelSpec) -> Result<WeightTensor> {
    let [o, i, kh, kw] = k.weight_shape();
    let fan_in = (i * kh * kw) as Scalar;
    let bound = (6.0 / fan_in).sqrt();
    WeightTensor::from_fn(o, i, kh, kw, |_, _, _, _| rng.gen_range(-bound..bound))
}

impl WeightBundle {
    /// Fan-in-scaled uniform weights in `±sqrt(6 / fan_in)` from a seeded
    /// ChaCha8 stream; batch norms start at unit scale, zero mean, unit
    /// variance and FC biases at zero.
    pub fn random(spec: &NetworkSpec, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = spec
            .layers
            .iter()
            .map(|layer| {
                Ok(match layer {
                    Layer::Conv { conv, .. } => LayerWeights::Conv {
                        weights: uniform_weights(&mut rng, &conv.kernel)?,
                        bn: BatchNorm::new(conv.kernel.out_channels),
                    },
                    Layer::ClcBlock { block, .. } => LayerWeights::ClcBlock(BlockWeights {
                        igc: uniform_weights(&mut rng, &block.igc)?,
                        bn1: BatchNorm::new(block.mid_channels()),
                        gc: uniform_weights(&mut rng, &block.gc)?,
                        bn2: BatchNorm::new(block.out_channels()),
                    }),
                    Layer::GlobalAvgPool => LayerWeights::None,
                    Layer::FullyConnected {
                        in_features,
                        out_features,
                    } => LayerWeights::FullyConnected {
                        weights: uniform_weights(
                            &mut rng,
                            &KernelSpec::regular(*in_features, *out_features, 1, 1),
                        )?,
                        bias: vec![0.0; *out_features],
                    },
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { layers })
    }
}

fn global_avg_pool(x: &Tensor4D) -> Result<Tensor4D> {
    let [n, c, _, _] = x.shape();
    let area = x.plane_len() as Scalar;
    Tensor4D::from_fn(n, c, 1, 1, |b, ch, _, _| {
        x.plane(b, ch).iter().sum::<Scalar>() / area
    })
}

fn fully_connected(x: &Tensor4D, weights: &WeightTensor, bias: &[Scalar]) -> Result<Tensor4D> {
    let out = weights.out_channels();
    if bias.len() != out {
        return Err(Error::shape(format!("FC bias has {} entries, expected {out}", bias.len())));
    }
    let y = conv2d(x, weights, &KernelSpec::regular(x.channels(), out, 1, 1))?;
    Ok(Tensor4D::from_fn(y.batch(), out, 1, 1, |b, j, _, _| y.get(b, j, 0, 0) + bias[j])?)
}

fn apply_layer(layer: &Layer, weights: &LayerWeights, x: &Tensor4D) -> Result<Tensor4D> {
    match (layer, weights) {
        (Layer::Conv { conv, .. }, LayerWeights::Conv { weights, bn }) => {
            let y = conv2d(x, weights, &conv.kernel)?;
            Ok(relu(&batchnorm_inference(&y, bn)?))
        }
        (Layer::ClcBlock { block, .. }, LayerWeights::ClcBlock(w)) => clc_block_forward(x, block, w),
        (Layer::GlobalAvgPool, LayerWeights::None) => global_avg_pool(x),
        (
            Layer::FullyConnected { in_features, .. },
            LayerWeights::FullyConnected { weights, bias },
        ) => {
            if x.channels() != *in_features || x.plane_len() != 1 {
                return Err(Error::shape(format!(
                    "FC expects {in_features}x1x1 input, got {}x{}x{}",
                    x.channels(),
                    x.height(),
                    x.width()
                )));
            }
            fully_connected(x, weights, bias)
        }
        _ => Err(Error::shape("weights do not match layer type")),
    }
}

/// Runs the network and also returns the output shape of every layer.
pub fn forward_traced(
    spec: &NetworkSpec,
    weights: &WeightBundle,
    input: &Tensor4D,
) -> Result<(Tensor4D, Vec<[usize; 4]>)> {
    if weights.layers.len() != spec.layers.len() {
        return Err(Error::shape(format!(
            "weight bundle has {} layers, network has {}",
            weights.layers.len(),
            spec.layers.len()
        )));
    }
    let expect = [spec.input_channels, spec.input_resolution, spec.input_resolution];
    if input.shape()[1..] != expect {
        return Err(Error::shape(format!(
            "input shape {:?} does not match network input {}x{}x{}",
            input.shape(),
            expect[0],
            expect[1],
            expect[2]
        )));
    }
    let mut trace = Vec::with_capacity(spec.layers.len());
    let mut x = input.clone();
    for (idx, (layer, w)) in spec.layers.iter().zip(&weights.layers).enumerate() {
        x = apply_layer(layer, w, &x).map_err(|e| e.at_layer(idx, layer.name()))?;
        trace.push(x.shape());
    }
    Ok((x, trace))
}

/// Logits of shape `batch × classes × 1 × 1`.
pub fn forward(spec: &NetworkSpec, weights: &WeightBundle, input: &Tensor4D) -> Result<Tensor4D> {
    forward_traced(spec, weights, input).map(|(y, _)| y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_clcnet, NetworkConfig};

    fn input(res: usize, seed: u64) -> Tensor4D {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor4D::from_fn(1, 3, res, res, |_, _, _, _| rng.gen_range(-1.0..1.0)).unwrap()
    }

    #[test]
    fn reduced_resolution_forward() {
        let spec = build_clcnet(&NetworkConfig::new(0, 0, 1, 0).with_resolution(64)).unwrap();
        let w = WeightBundle::random(&spec, 3).unwrap();
        let (y, trace) = forward_traced(&spec, &w, &input(64, 1)).unwrap();
        assert_eq!(y.shape(), [1, 1000, 1, 1]);
        assert_eq!(trace[0], [1, 32, 32, 32]);
        // last block output is 2x2 before pooling
        assert_eq!(trace[trace.len() - 3], [1, 1024, 2, 2]);
        assert!(y.data().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let spec = build_clcnet(&NetworkConfig::new(0, 0, 0, 0).with_resolution(32)).unwrap();
        let x = input(32, 5);
        let a = forward(&spec, &WeightBundle::random(&spec, 7).unwrap(), &x).unwrap();
        let b = forward(&spec, &WeightBundle::random(&spec, 7).unwrap(), &x).unwrap();
        assert_eq!(a, b);
        let c = forward(&spec, &WeightBundle::random(&spec, 8).unwrap(), &x).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn mismatched_input_is_rejected() {
        let spec = build_clcnet(&NetworkConfig::new(0, 0, 0, 0).with_resolution(32)).unwrap();
        let w = WeightBundle::random(&spec, 1).unwrap();
        assert!(forward(&spec, &w, &input(64, 1)).is_err());
        let mut bad = w.clone();
        bad.layers.swap(1, 2);
        match forward(&spec, &bad, &input(32, 1)) {
            Err(Error::Layer { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pooling_is_plane_mean() {
        let x = Tensor4D::from_fn(1, 2, 2, 2, |_, c, y, x| (c * 4 + y * 2 + x) as Scalar).unwrap();
        assert_eq!(global_avg_pool(&x).unwrap().data(), &[1.5, 5.5]);
    }
}
