//! Forward convolution kernels and the CLC block composite.
//!
//! Every kernel accumulates each output element in the same order: input
//! channel, then kernel row, then kernel column, starting from zero. Results
//! are therefore reproducible bit-for-bit across kernel kinds that reduce to
//! one another (grouped with one group vs. regular, depthwise vs. grouped with
//! `g == M`, monolithic IGC vs. grouped-then-interlace) and independent of how
//! work is split across threads.

use std::fmt;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{interlace_channels, interlace_source, Scalar, Tensor4D, WeightTensor};

/// Default batch-norm epsilon.
pub const BN_EPSILON: Scalar = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Regular,
    Grouped,
    Depthwise,
    InterlacedGrouped,
}

impl KernelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            KernelKind::Regular => "regular",
            KernelKind::Grouped => "grouped",
            KernelKind::Depthwise => "depthwise",
            KernelKind::InterlacedGrouped => "interlaced_grouped",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Shape and grouping of a single convolution kernel.
///
/// For [`KernelKind::InterlacedGrouped`] the weight tensor is laid out exactly
/// as for a grouped convolution; output position `k` is produced by filter
/// `π(k)` (see [`interlace_source`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub groups: usize,
    pub stride: usize,
    pub padding: usize,
}

impl KernelSpec {
    /// Square kernel, padding `size / 2`.
    fn square(
        kind: KernelKind,
        in_channels: usize,
        out_channels: usize,
        size: usize,
        groups: usize,
        stride: usize,
    ) -> Self {
        Self {
            kind,
            in_channels,
            out_channels,
            kernel_h: size,
            kernel_w: size,
            groups,
            stride,
            padding: size / 2,
        }
    }

    pub fn regular(in_channels: usize, out_channels: usize, size: usize, stride: usize) -> Self {
        Self::square(KernelKind::Regular, in_channels, out_channels, size, 1, stride)
    }

    pub fn grouped(
        in_channels: usize,
        out_channels: usize,
        size: usize,
        groups: usize,
        stride: usize,
    ) -> Self {
        Self::square(KernelKind::Grouped, in_channels, out_channels, size, groups, stride)
    }

    pub fn depthwise(channels: usize, size: usize, stride: usize) -> Self {
        Self::square(KernelKind::Depthwise, channels, channels, size, channels, stride)
    }

    pub fn interlaced(
        in_channels: usize,
        out_channels: usize,
        size: usize,
        groups: usize,
        stride: usize,
    ) -> Self {
        Self::square(
            KernelKind::InterlacedGrouped,
            in_channels,
            out_channels,
            size,
            groups,
            stride,
        )
    }

    pub fn with_padding(mut self, padding: usize) -> Self {
        self.padding = padding;
        self
    }

    /// Same kernel with a different kind, keeping every other field.
    pub fn with_kind(mut self, kind: KernelKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.in_channels,
            self.out_channels,
            self.kernel_h,
            self.kernel_w,
            self.groups,
            self.stride,
        ];
        if dims.contains(&0) {
            return Err(Error::InvalidKernel(format!(
                "channels, kernel size, groups and stride must be >= 1: {self:?}"
            )));
        }
        if self.in_channels % self.groups != 0 {
            return Err(Error::Divisibility {
                value: self.in_channels,
                divisor: self.groups,
                context: "kernel in_channels by groups",
            });
        }
        if self.out_channels % self.groups != 0 {
            return Err(Error::Divisibility {
                value: self.out_channels,
                divisor: self.groups,
                context: "kernel out_channels by groups",
            });
        }
        match self.kind {
            KernelKind::Regular if self.groups != 1 => Err(Error::InvalidKernel(format!(
                "regular convolution must have one group, got {}",
                self.groups
            ))),
            KernelKind::Depthwise
                if self.groups != self.in_channels || self.in_channels != self.out_channels =>
            {
                Err(Error::InvalidKernel(format!(
                    "depthwise convolution needs groups == in == out, got groups {} in {} out {}",
                    self.groups, self.in_channels, self.out_channels
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn in_per_group(&self) -> usize {
        self.in_channels / self.groups
    }

    pub fn out_per_group(&self) -> usize {
        self.out_channels / self.groups
    }

    /// Kernel spatial area `A`.
    pub fn area(&self) -> usize {
        self.kernel_h * self.kernel_w
    }

    /// Multiplies per output location, which is also the weight count.
    pub fn macs_per_location(&self) -> u64 {
        (self.out_channels * self.in_per_group() * self.area()) as u64
    }

    pub fn weight_shape(&self) -> [usize; 4] {
        [self.out_channels, self.in_per_group(), self.kernel_h, self.kernel_w]
    }

    /// `(out_h, out_w)` for an `h × w` input.
    pub fn output_size(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let dim = |len: usize, k: usize, axis: &str| {
            let padded = len + 2 * self.padding;
            if padded < k {
                return Err(Error::shape(format!(
                    "{axis} {len} with padding {} is smaller than kernel {k}",
                    self.padding
                )));
            }
            Ok((padded - k) / self.stride + 1)
        };
        Ok((dim(h, self.kernel_h, "height")?, dim(w, self.kernel_w, "width")?))
    }

    /// Group of grouped-convolution output channel `n`.
    pub fn group_of_output(&self, n: usize) -> usize {
        n / self.out_per_group()
    }

    /// Filter index that produces output position `k`.
    pub fn filter_for_output(&self, k: usize) -> usize {
        match self.kind {
            KernelKind::InterlacedGrouped => interlace_source(k, self.out_channels, self.groups),
            _ => k,
        }
    }
}

/// Output positions `o` for which `o * stride + k - padding` lands inside `0..in_len`.
fn valid_outputs(out_len: usize, in_len: usize, k: usize, stride: usize, padding: usize) -> Range<usize> {
    let lo = if k >= padding {
        0
    } else {
        (padding - k).div_ceil(stride)
    };
    let limit = in_len + padding;
    let hi = if limit <= k {
        0
    } else {
        (limit - k).div_ceil(stride).min(out_len)
    };
    lo..hi.max(lo)
}

fn check_conv(input: &Tensor4D, weights: &WeightTensor, spec: &KernelSpec) -> Result<(usize, usize)> {
    spec.validate()?;
    if input.channels() != spec.in_channels {
        return Err(Error::ChannelMismatch(format!(
            "input has {} channels, kernel expects {}",
            input.channels(),
            spec.in_channels
        )));
    }
    if weights.shape() != spec.weight_shape() {
        return Err(Error::shape(format!(
            "weight shape {:?} does not match kernel {:?}",
            weights.shape(),
            spec.weight_shape()
        )));
    }
    spec.output_size(input.height(), input.width())
}

/// Forward convolution of any [`KernelKind`]. No bias.
///
/// Interlaced grouped convolution is computed monolithically: output position
/// `k` reads filter `π(k)` and that filter's input group directly.
pub fn conv2d(input: &Tensor4D, weights: &WeightTensor, spec: &KernelSpec) -> Result<Tensor4D> {
    let (out_h, out_w) = check_conv(input, weights, spec)?;
    let mut out = vec![0.0; input.batch() * spec.out_channels * out_h * out_w];
    let plane = out_h * out_w;
    out.par_chunks_mut(plane).enumerate().for_each(|(idx, dst)| {
        let b = idx / spec.out_channels;
        let k = idx % spec.out_channels;
        conv_plane(input, weights, spec, b, spec.filter_for_output(k), out_w, dst);
    });
    Tensor4D::from_vec(input.batch(), spec.out_channels, out_h, out_w, out)
}

/// Accumulates filter `filter` over its input group into `dst` (one output plane).
fn conv_plane(
    input: &Tensor4D,
    weights: &WeightTensor,
    spec: &KernelSpec,
    b: usize,
    filter: usize,
    out_w: usize,
    dst: &mut [Scalar],
) {
    let out_h = dst.len() / out_w;
    let (in_h, in_w) = (input.height(), input.width());
    let group = spec.group_of_output(filter);
    let in_per_group = spec.in_per_group();
    let (s, pad) = (spec.stride, spec.padding);
    let taps = weights.filter(filter);

    for i in 0..in_per_group {
        let src = input.plane(b, group * in_per_group + i);
        for ky in 0..spec.kernel_h {
            let rows = valid_outputs(out_h, in_h, ky, s, pad);
            for kx in 0..spec.kernel_w {
                let w = taps[(i * spec.kernel_h + ky) * spec.kernel_w + kx];
                let cols = valid_outputs(out_w, in_w, kx, s, pad);
                for oy in rows.clone() {
                    let iy = oy * s + ky - pad;
                    let src_row = &src[iy * in_w..(iy + 1) * in_w];
                    let dst_row = &mut dst[oy * out_w..(oy + 1) * out_w];
                    for ox in cols.clone() {
                        dst_row[ox] += w * src_row[ox * s + kx - pad];
                    }
                }
            }
        }
    }
}

/// Two-step interlaced grouped convolution: plain grouped convolution with
/// the same weights followed by [`interlace_channels`].
pub fn interlaced_two_step(input: &Tensor4D, weights: &WeightTensor, spec: &KernelSpec) -> Result<Tensor4D> {
    let grouped = spec.with_kind(KernelKind::Grouped);
    let out = conv2d(input, weights, &grouped)?;
    interlace_channels(&out, spec.groups)
}

/// True iff the monolithic IGC output equals grouped-then-interlace element
/// for element.
pub fn igc_equivalence_check(input: &Tensor4D, weights: &WeightTensor, spec: &KernelSpec) -> Result<bool> {
    if spec.kind != KernelKind::InterlacedGrouped {
        return Err(Error::InvalidKernel(format!(
            "equivalence check needs an interlaced grouped kernel, got {}",
            spec.kind
        )));
    }
    let mono = conv2d(input, weights, spec)?;
    let two_step = interlaced_two_step(input, weights, spec)?;
    Ok(mono.data() == two_step.data())
}

/// Interlaced grouped convolution with channel receptive field 2, built from
/// two depthwise convolutions: one over the input, one over the input with
/// each even/odd channel pair swapped. Requires `M == L` and `g == M / 2`.
///
/// Each output is the sum of two separately accumulated depthwise results, so
/// it matches [`conv2d`] up to floating-point reassociation.
pub fn igc_via_depthwise_pair(input: &Tensor4D, weights: &WeightTensor, spec: &KernelSpec) -> Result<Tensor4D> {
    check_conv(input, weights, spec)?;
    let m = spec.in_channels;
    if spec.kind != KernelKind::InterlacedGrouped
        || m != spec.out_channels
        || m % 2 != 0
        || spec.groups * 2 != m
    {
        return Err(Error::InvalidKernel(format!(
            "depthwise-pair construction needs an interlaced kernel with M == L and g == M/2, got {spec:?}"
        )));
    }
    let (kh, kw) = (spec.kernel_h, spec.kernel_w);
    // Filter c = 2j + o reads x[2j] and x[2j + 1]; tap o hits channel c itself,
    // tap 1 - o hits its pair partner c ^ 1.
    let same = WeightTensor::from_fn(m, 1, kh, kw, |c, _, ky, kx| weights.get(c, c % 2, ky, kx))?;
    let partner = WeightTensor::from_fn(m, 1, kh, kw, |c, _, ky, kx| weights.get(c, 1 - c % 2, ky, kx))?;
    let swapped = input.permute_channels(|c| c ^ 1);

    let dw = KernelSpec {
        kind: KernelKind::Depthwise,
        groups: m,
        ..*spec
    };
    let a = conv2d(input, &same, &dw)?;
    let b = conv2d(&swapped, &partner, &dw)?;
    let [n, c, h, w] = a.shape();
    let sum = a.data().iter().zip(b.data()).map(|(x, y)| x + y).collect();
    interlace_channels(&Tensor4D::from_vec(n, c, h, w, sum)?, spec.groups)
}

/// Per-channel inference-mode batch normalisation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub scale: Vec<Scalar>,
    pub shift: Vec<Scalar>,
    pub mean: Vec<Scalar>,
    pub var: Vec<Scalar>,
    pub epsilon: Scalar,
}

impl BatchNorm {
    /// Unit scale, zero shift, zero mean, unit variance, default epsilon.
    pub fn new(channels: usize) -> Self {
        Self {
            scale: vec![1.0; channels],
            shift: vec![0.0; channels],
            mean: vec![0.0; channels],
            var: vec![1.0; channels],
            epsilon: BN_EPSILON,
        }
    }

    /// Exact identity: like [`BatchNorm::new`] but with `epsilon == 0`.
    pub fn identity(channels: usize) -> Self {
        Self {
            epsilon: 0.0,
            ..Self::new(channels)
        }
    }

    pub fn channels(&self) -> usize {
        self.scale.len()
    }

    fn validate(&self) -> Result<()> {
        let c = self.scale.len();
        if self.shift.len() != c || self.mean.len() != c || self.var.len() != c {
            return Err(Error::shape(format!(
                "batch-norm parameter lengths differ: scale {} shift {} mean {} var {}",
                c,
                self.shift.len(),
                self.mean.len(),
                self.var.len()
            )));
        }
        if let Some(i) = self.var.iter().position(|&v| v + self.epsilon <= 0.0) {
            return Err(Error::Domain(format!(
                "batch-norm channel {i}: variance + epsilon must be positive"
            )));
        }
        Ok(())
    }
}

/// `scale * (x - mean) / sqrt(var + eps) + shift`, per channel.
pub fn batchnorm_inference(t: &Tensor4D, bn: &BatchNorm) -> Result<Tensor4D> {
    bn.validate()?;
    if bn.channels() != t.channels() {
        return Err(Error::ChannelMismatch(format!(
            "batch norm has {} channels, tensor has {}",
            bn.channels(),
            t.channels()
        )));
    }
    let plane = t.plane_len();
    let mut data = t.data().to_vec();
    data.par_chunks_mut(plane).enumerate().for_each(|(idx, chunk)| {
        let c = idx % bn.channels();
        let denom = (bn.var[c] + bn.epsilon).sqrt();
        let (scale, shift, mean) = (bn.scale[c], bn.shift[c], bn.mean[c]);
        for v in chunk {
            *v = scale * (*v - mean) / denom + shift;
        }
    });
    let [n, c, h, w] = t.shape();
    Tensor4D::from_vec(n, c, h, w, data)
}

pub fn relu(t: &Tensor4D) -> Tensor4D {
    t.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// Structure of a CLC block: 3×3 interlaced grouped convolution (carries the
/// stride) followed by a 1×1 grouped convolution with stride 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockSpec {
    pub igc: KernelSpec,
    pub gc: KernelSpec,
}

impl BlockSpec {
    pub fn new(m: usize, l: usize, n: usize, g1: usize, g2: usize, stride: usize) -> Result<Self> {
        let block = Self {
            igc: KernelSpec::interlaced(m, l, 3, g1, stride),
            gc: KernelSpec::grouped(l, n, 1, g2, 1),
        };
        block.validate()?;
        Ok(block)
    }

    /// The same block with its IGC replaced by a plain grouped convolution.
    pub fn ablated(&self) -> Self {
        Self {
            igc: self.igc.with_kind(KernelKind::Grouped),
            gc: self.gc,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.igc.validate()?;
        self.gc.validate()?;
        if self.igc.out_channels != self.gc.in_channels {
            return Err(Error::ChannelMismatch(format!(
                "IGC produces {} channels, GC expects {}",
                self.igc.out_channels, self.gc.in_channels
            )));
        }
        if self.gc.stride != 1 {
            return Err(Error::InvalidKernel(format!(
                "GC stride must be 1, got {}",
                self.gc.stride
            )));
        }
        Ok(())
    }

    pub fn in_channels(&self) -> usize {
        self.igc.in_channels
    }

    pub fn mid_channels(&self) -> usize {
        self.igc.out_channels
    }

    pub fn out_channels(&self) -> usize {
        self.gc.out_channels
    }

    pub fn stride(&self) -> usize {
        self.igc.stride
    }
}

/// Learned tensors of one CLC block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockWeights {
    pub igc: WeightTensor,
    pub bn1: BatchNorm,
    pub gc: WeightTensor,
    pub bn2: BatchNorm,
}

/// IGC → BN → GC → BN → ReLU. No activation between the two convolutions.
pub fn clc_block_forward(input: &Tensor4D, block: &BlockSpec, weights: &BlockWeights) -> Result<Tensor4D> {
    block.validate()?;
    let x = conv2d(input, &weights.igc, &block.igc)?;
    let x = batchnorm_inference(&x, &weights.bn1)?;
    let x = conv2d(&x, &weights.gc, &block.gc)?;
    let x = batchnorm_inference(&x, &weights.bn2)?;
    Ok(relu(&x))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_tensor(seed: u64, n: usize, c: usize, h: usize, w: usize) -> Tensor4D {
        let mut s = seed;
        Tensor4D::from_fn(n, c, h, w, |_, _, _, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 40) as Scalar / (1u64 << 24) as Scalar) - 0.5
        })
        .unwrap()
    }

    fn lcg_weights(seed: u64, spec: &KernelSpec) -> WeightTensor {
        let [o, i, kh, kw] = spec.weight_shape();
        let t = lcg_tensor(seed, o, i, kh, kw);
        WeightTensor::new(o, i, kh, kw, t.into_data()).unwrap()
    }

    #[test]
    fn identity_pointwise_kernel_is_identity() {
        let x = lcg_tensor(1, 2, 5, 4, 3);
        let spec = KernelSpec::regular(5, 5, 1, 1);
        let w = WeightTensor::from_fn(5, 5, 1, 1, |o, i, _, _| if o == i { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(conv2d(&x, &w, &spec).unwrap(), x);
    }

    #[test]
    fn one_group_equals_regular() {
        let x = lcg_tensor(2, 1, 6, 7, 7);
        let reg = KernelSpec::regular(6, 4, 3, 2);
        let w = lcg_weights(3, &reg);
        let grp = reg.with_kind(KernelKind::Grouped);
        assert_eq!(conv2d(&x, &w, &reg).unwrap(), conv2d(&x, &w, &grp).unwrap());
    }

    #[test]
    fn depthwise_equals_grouped_with_m_groups() {
        let x = lcg_tensor(4, 1, 6, 5, 5);
        let dw = KernelSpec::depthwise(6, 3, 1);
        let w = lcg_weights(5, &dw);
        let grp = KernelSpec::grouped(6, 6, 3, 6, 1);
        assert_eq!(conv2d(&x, &w, &dw).unwrap(), conv2d(&x, &w, &grp).unwrap());
    }

    #[test]
    fn output_size_formula() {
        let spec = KernelSpec::regular(3, 32, 3, 2);
        assert_eq!(spec.output_size(224, 224).unwrap(), (112, 112));
        assert_eq!(spec.output_size(112, 112).unwrap(), (56, 56));
        assert_eq!(KernelSpec::regular(1, 1, 3, 1).output_size(5, 5).unwrap(), (5, 5));
        let no_pad = KernelSpec::regular(1, 1, 3, 1).with_padding(0);
        assert!(no_pad.output_size(2, 5).is_err());
    }

    #[test]
    fn invalid_kernels_are_rejected() {
        assert!(KernelSpec::grouped(6, 6, 3, 4, 1).validate().is_err());
        assert!(KernelSpec::grouped(8, 6, 3, 4, 1).validate().is_err());
        let mut reg = KernelSpec::regular(4, 4, 3, 1);
        reg.groups = 2;
        assert!(reg.validate().is_err());
        let mut dw = KernelSpec::depthwise(4, 3, 1);
        dw.out_channels = 8;
        assert!(dw.validate().is_err());
        assert!(KernelSpec::regular(4, 4, 3, 0).validate().is_err());
    }

    #[test]
    fn shape_mismatches_are_errors() {
        let spec = KernelSpec::grouped(4, 4, 3, 2, 1);
        let w = lcg_weights(1, &spec);
        let x = lcg_tensor(1, 1, 3, 4, 4);
        assert!(matches!(conv2d(&x, &w, &spec), Err(Error::ChannelMismatch(_))));
        let x = lcg_tensor(1, 1, 4, 4, 4);
        let wrong = lcg_weights(1, &KernelSpec::regular(4, 4, 3, 1));
        assert!(matches!(conv2d(&x, &wrong, &spec), Err(Error::Shape(_))));
    }

    #[test]
    fn igc_two_step_and_monolithic_agree() {
        let x = lcg_tensor(9, 2, 8, 6, 6);
        let spec = KernelSpec::interlaced(8, 8, 3, 4, 1);
        let w = lcg_weights(10, &spec);
        assert!(igc_equivalence_check(&x, &w, &spec).unwrap());
        assert!(igc_equivalence_check(&x, &w, &KernelSpec::grouped(8, 8, 3, 4, 1)).is_err());
    }

    #[test]
    fn igc_with_one_group_is_regular() {
        let x = lcg_tensor(11, 1, 4, 5, 5);
        let spec = KernelSpec::interlaced(4, 6, 3, 1, 1);
        let w = lcg_weights(12, &spec);
        assert!(igc_equivalence_check(&x, &w, &spec).unwrap());
        let reg = conv2d(&x, &w, &KernelSpec::regular(4, 6, 3, 1)).unwrap();
        assert_eq!(conv2d(&x, &w, &spec).unwrap(), reg);
    }

    #[test]
    fn igc_channel_provenance_four_channels() {
        // Group k's filters are all k + 1, input all ones: grouped output is
        // [2, 2, 4, 4] (two inputs per group), interlaced is [2, 4, 2, 4].
        let x = Tensor4D::new(1, 4, 1, 1, 1.0).unwrap();
        let spec = KernelSpec::interlaced(4, 4, 1, 2, 1);
        let w = WeightTensor::from_fn(4, 2, 1, 1, |o, _, _, _| (o / 2 + 1) as Scalar).unwrap();
        let out = conv2d(&x, &w, &spec).unwrap();
        assert_eq!(out.data(), &[2.0, 4.0, 2.0, 4.0]);
        let grouped = conv2d(&x, &w, &spec.with_kind(KernelKind::Grouped)).unwrap();
        assert_eq!(grouped.data(), &[2.0, 2.0, 4.0, 4.0]);
    }

    #[test]
    fn depthwise_pair_matches_igc() {
        for m in [2, 4, 8] {
            let spec = KernelSpec::interlaced(m, m, 3, m / 2, 1);
            let x = lcg_tensor(m as u64, 1, m, 5, 5);
            let w = lcg_weights(m as u64 + 100, &spec);
            let a = conv2d(&x, &w, &spec).unwrap();
            let b = igc_via_depthwise_pair(&x, &w, &spec).unwrap();
            for (p, q) in a.data().iter().zip(b.data()) {
                assert!((p - q).abs() <= 1e-5, "{p} vs {q}");
            }
        }
        let bad = KernelSpec::interlaced(8, 8, 3, 2, 1);
        let x = lcg_tensor(1, 1, 8, 4, 4);
        assert!(igc_via_depthwise_pair(&x, &lcg_weights(1, &bad), &bad).is_err());
    }

    #[test]
    fn batchnorm_examples() {
        let x = lcg_tensor(20, 2, 3, 4, 4);
        assert_eq!(batchnorm_inference(&x, &BatchNorm::identity(3)).unwrap(), x);

        let mut bn = BatchNorm::new(3);
        bn.scale = vec![0.0; 3];
        bn.shift = vec![1.5, -2.0, 0.25];
        let y = batchnorm_inference(&x, &bn).unwrap();
        for c in 0..3 {
            assert!(y.plane(1, c).iter().all(|&v| v == bn.shift[c]));
        }

        let bn = BatchNorm {
            scale: vec![0.5, -1.25, 2.0],
            shift: vec![0.1, 0.2, -0.3],
            mean: vec![0.05, -0.1, 0.3],
            var: vec![0.8, 1.7, 0.02],
            epsilon: 1e-3,
        };
        let y = batchnorm_inference(&x, &bn).unwrap();
        for b in 0..2 {
            for c in 0..3 {
                for i in 0..4 {
                    for j in 0..4 {
                        let v = x.get(b, c, i, j);
                        let expect = bn.scale[c] * (v - bn.mean[c]) / (bn.var[c] + bn.epsilon).sqrt()
                            + bn.shift[c];
                        assert_eq!(y.get(b, c, i, j), expect);
                    }
                }
            }
        }
    }

    #[test]
    fn batchnorm_rejects_bad_params() {
        let x = lcg_tensor(1, 1, 3, 2, 2);
        assert!(batchnorm_inference(&x, &BatchNorm::new(4)).is_err());
        let mut bn = BatchNorm::identity(3);
        bn.var[1] = 0.0;
        assert!(matches!(batchnorm_inference(&x, &bn), Err(Error::Domain(_))));
        bn.var[1] = 1.0;
        bn.mean.pop();
        assert!(batchnorm_inference(&x, &bn).is_err());
    }

    #[test]
    fn relu_examples() {
        let t = Tensor4D::from_vec(1, 3, 1, 1, vec![-1.0, 0.0, 2.0]).unwrap();
        assert_eq!(relu(&t).data(), &[0.0, 0.0, 2.0]);
        let neg = Tensor4D::new(1, 2, 2, 2, -3.0).unwrap();
        assert!(relu(&neg).data().iter().all(|&v| v == 0.0));
        let pos = lcg_tensor(3, 1, 2, 3, 3).map(|v| v.abs() + 0.1);
        assert_eq!(relu(&pos), pos);
    }

    #[test]
    fn clc_block_shapes() {
        let block = BlockSpec::new(32, 32, 64, 16, 2, 1).unwrap();
        let weights = BlockWeights {
            igc: lcg_weights(1, &block.igc),
            bn1: BatchNorm::new(32),
            gc: lcg_weights(2, &block.gc),
            bn2: BatchNorm::new(64),
        };
        let x = lcg_tensor(3, 1, 32, 56, 56);
        let y = clc_block_forward(&x, &block, &weights).unwrap();
        assert_eq!(y.shape(), [1, 64, 56, 56]);
        assert!(y.data().iter().all(|&v| v >= 0.0));

        let strided = BlockSpec::new(32, 32, 64, 16, 2, 2).unwrap();
        let x = lcg_tensor(4, 1, 32, 112, 112);
        assert_eq!(clc_block_forward(&x, &strided, &weights).unwrap().shape(), [1, 64, 56, 56]);
    }

    #[test]
    fn block_spec_validation() {
        assert!(BlockSpec::new(32, 32, 64, 16, 3, 1).is_err());
        let mut b = BlockSpec::new(32, 32, 64, 16, 2, 1).unwrap();
        b.gc.stride = 2;
        assert!(b.validate().is_err());
        let mut b = BlockSpec::new(32, 32, 64, 16, 2, 1).unwrap();
        b.gc.in_channels = 64;
        assert!(b.validate().is_err());
        assert_eq!(b.ablated().igc.kind, KernelKind::Grouped);
    }

    #[test]
    fn valid_output_ranges() {
        // 3-tap kernel, pad 1, stride 1 over 5 inputs.
        assert_eq!(valid_outputs(5, 5, 0, 1, 1), 1..5);
        assert_eq!(valid_outputs(5, 5, 1, 1, 1), 0..5);
        assert_eq!(valid_outputs(5, 5, 2, 1, 1), 0..4);
        // stride 2, pad 1, 4 inputs, 2 outputs: taps at 2o + k - 1.
        assert_eq!(valid_outputs(2, 4, 0, 2, 1), 1..2);
        assert_eq!(valid_outputs(2, 4, 2, 2, 1), 0..2);
    }
}
