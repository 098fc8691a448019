//! Dense NCHW tensors and the channel interlace permutation.

use crate::error::{Error, Result};

/// Scalar type used by every tensor and kernel in the crate.
pub type Scalar = f32;

/// Dense 4-D activation tensor stored batch-major: batch, channel, row, column.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4D {
    batch: usize,
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<Scalar>,
}

fn check_dims(dims: &[usize], what: &str) -> Result<usize> {
    if let Some(pos) = dims.iter().position(|&d| d == 0) {
        return Err(Error::shape(format!(
            "{what} dimension {pos} is zero (dims {dims:?})"
        )));
    }
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::shape(format!("{what} dims {dims:?} overflow")))
}

impl Tensor4D {
    /// Tensor of the given shape with every element set to `fill`.
    pub fn new(batch: usize, channels: usize, height: usize, width: usize, fill: Scalar) -> Result<Self> {
        let len = check_dims(&[batch, channels, height, width], "tensor")?;
        Ok(Self {
            batch,
            channels,
            height,
            width,
            data: vec![fill; len],
        })
    }

    pub fn zeros(batch: usize, channels: usize, height: usize, width: usize) -> Result<Self> {
        Self::new(batch, channels, height, width, 0.0)
    }

    pub fn from_vec(
        batch: usize,
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<Scalar>,
    ) -> Result<Self> {
        let len = check_dims(&[batch, channels, height, width], "tensor")?;
        if data.len() != len {
            return Err(Error::shape(format!(
                "tensor data has {} elements, shape {:?} needs {len}",
                data.len(),
                [batch, channels, height, width]
            )));
        }
        Ok(Self {
            batch,
            channels,
            height,
            width,
            data,
        })
    }

    /// Builds a tensor by evaluating `f(b, c, y, x)` at every position.
    pub fn from_fn(
        batch: usize,
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> Scalar,
    ) -> Result<Self> {
        let len = check_dims(&[batch, channels, height, width], "tensor")?;
        let mut data = Vec::with_capacity(len);
        for b in 0..batch {
            for c in 0..channels {
                for y in 0..height {
                    for x in 0..width {
                        data.push(f(b, c, y, x));
                    }
                }
            }
        }
        Ok(Self {
            batch,
            channels,
            height,
            width,
            data,
        })
    }

    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// `[batch, channels, height, width]`
    pub fn shape(&self) -> [usize; 4] {
        [self.batch, self.channels, self.height, self.width]
    }

    pub fn data(&self) -> &[Scalar] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Scalar> {
        self.data
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    /// Flat offset of `(b, c, y, x)`. Panics on out-of-range indices.
    pub fn offset(&self, b: usize, c: usize, y: usize, x: usize) -> usize {
        assert!(
            b < self.batch && c < self.channels && y < self.height && x < self.width,
            "index ({b}, {c}, {y}, {x}) out of range for shape {:?}",
            self.shape()
        );
        ((b * self.channels + c) * self.height + y) * self.width + x
    }

    pub fn get(&self, b: usize, c: usize, y: usize, x: usize) -> Scalar {
        self.data[self.offset(b, c, y, x)]
    }

    pub fn set(&mut self, b: usize, c: usize, y: usize, x: usize, value: Scalar) {
        let i = self.offset(b, c, y, x);
        self.data[i] = value;
    }

    /// The `height * width` plane of channel `c` in batch element `b`.
    pub fn plane(&self, b: usize, c: usize) -> &[Scalar] {
        let start = (b * self.channels + c) * self.plane_len();
        &self.data[start..start + self.plane_len()]
    }

    /// Applies `f` to every element.
    pub fn map(&self, f: impl Fn(Scalar) -> Scalar) -> Self {
        Self {
            data: self.data.iter().map(|&v| f(v)).collect(),
            ..*self
        }
    }

    /// Reorders channels so that output channel `k` holds input channel
    /// `source(k)`. `source` must be a permutation of `0..channels`.
    pub fn permute_channels(&self, source: impl Fn(usize) -> usize) -> Self {
        let plane = self.plane_len();
        let mut data = Vec::with_capacity(self.data.len());
        for b in 0..self.batch {
            for k in 0..self.channels {
                data.extend_from_slice(self.plane(b, source(k)));
            }
        }
        debug_assert_eq!(data.len(), self.batch * self.channels * plane);
        Self { data, ..*self }
    }

    /// Index of the largest element; ties resolve to the first.
    pub fn argmax(&self) -> usize {
        self.data
            .iter()
            .enumerate()
            .fold((0, Scalar::NEG_INFINITY), |(bi, bv), (i, &v)| {
                if v > bv {
                    (i, v)
                } else {
                    (bi, bv)
                }
            })
            .0
    }
}

/// Convolution weights: `[out_channels, in_channels_per_group, kernel_h, kernel_w]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTensor {
    out_channels: usize,
    in_channels_per_group: usize,
    kernel_h: usize,
    kernel_w: usize,
    data: Vec<Scalar>,
}

impl WeightTensor {
    pub fn new(
        out_channels: usize,
        in_channels_per_group: usize,
        kernel_h: usize,
        kernel_w: usize,
        data: Vec<Scalar>,
    ) -> Result<Self> {
        let len = check_dims(
            &[out_channels, in_channels_per_group, kernel_h, kernel_w],
            "weight",
        )?;
        if data.len() != len {
            return Err(Error::shape(format!(
                "weight data has {} elements, shape {:?} needs {len}",
                data.len(),
                [out_channels, in_channels_per_group, kernel_h, kernel_w]
            )));
        }
        Ok(Self {
            out_channels,
            in_channels_per_group,
            kernel_h,
            kernel_w,
            data,
        })
    }

    pub fn filled(
        out_channels: usize,
        in_channels_per_group: usize,
        kernel_h: usize,
        kernel_w: usize,
        fill: Scalar,
    ) -> Result<Self> {
        let len = check_dims(
            &[out_channels, in_channels_per_group, kernel_h, kernel_w],
            "weight",
        )?;
        Self::new(out_channels, in_channels_per_group, kernel_h, kernel_w, vec![fill; len])
    }

    pub fn from_fn(
        out_channels: usize,
        in_channels_per_group: usize,
        kernel_h: usize,
        kernel_w: usize,
        mut f: impl FnMut(usize, usize, usize, usize) -> Scalar,
    ) -> Result<Self> {
        let len = check_dims(
            &[out_channels, in_channels_per_group, kernel_h, kernel_w],
            "weight",
        )?;
        let mut data = Vec::with_capacity(len);
        for o in 0..out_channels {
            for i in 0..in_channels_per_group {
                for ky in 0..kernel_h {
                    for kx in 0..kernel_w {
                        data.push(f(o, i, ky, kx));
                    }
                }
            }
        }
        Self::new(out_channels, in_channels_per_group, kernel_h, kernel_w, data)
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn in_channels_per_group(&self) -> usize {
        self.in_channels_per_group
    }

    pub fn kernel_h(&self) -> usize {
        self.kernel_h
    }

    pub fn kernel_w(&self) -> usize {
        self.kernel_w
    }

    /// `[out_channels, in_channels_per_group, kernel_h, kernel_w]`
    pub fn shape(&self) -> [usize; 4] {
        [
            self.out_channels,
            self.in_channels_per_group,
            self.kernel_h,
            self.kernel_w,
        ]
    }

    pub fn data(&self) -> &[Scalar] {
        &self.data
    }

    pub fn get(&self, o: usize, i: usize, ky: usize, kx: usize) -> Scalar {
        self.data[self.offset(o, i, ky, kx)]
    }

    pub fn offset(&self, o: usize, i: usize, ky: usize, kx: usize) -> usize {
        ((o * self.in_channels_per_group + i) * self.kernel_h + ky) * self.kernel_w + kx
    }

    /// Weights of output channel `o`: `in_channels_per_group * kernel_h * kernel_w` values.
    pub fn filter(&self, o: usize) -> &[Scalar] {
        let len = self.in_channels_per_group * self.kernel_h * self.kernel_w;
        &self.data[o * len..(o + 1) * len]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

/// Source channel of interlaced position `k` for `channels` channels split
/// into `groups` contiguous blocks.
///
/// `π(k) = (k mod g) * (C / g) + k / g`: consecutive positions cycle through
/// the groups, so every window of `g` consecutive positions holds one channel
/// from each block.
pub fn interlace_source(k: usize, channels: usize, groups: usize) -> usize {
    (k % groups) * (channels / groups) + k / groups
}

/// Inverse of [`interlace_source`]: the interlaced position holding channel `c`.
pub fn interlace_position(c: usize, channels: usize, groups: usize) -> usize {
    let per_group = channels / groups;
    (c % per_group) * groups + c / per_group
}

fn check_interlace(channels: usize, groups: usize) -> Result<()> {
    if groups == 0 || channels % groups != 0 {
        return Err(Error::Divisibility {
            value: channels,
            divisor: groups,
            context: "interlace channels by groups",
        });
    }
    Ok(())
}

/// Interlaces the channels of `t` across `groups` contiguous blocks.
pub fn interlace_channels(t: &Tensor4D, groups: usize) -> Result<Tensor4D> {
    check_interlace(t.channels(), groups)?;
    let c = t.channels();
    Ok(t.permute_channels(|k| interlace_source(k, c, groups)))
}

/// Undoes [`interlace_channels`].
pub fn deinterlace_channels(t: &Tensor4D, groups: usize) -> Result<Tensor4D> {
    check_interlace(t.channels(), groups)?;
    let c = t.channels();
    Ok(t.permute_channels(|k| interlace_position(k, c, groups)))
}
