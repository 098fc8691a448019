//! Independent reference implementations shared by the integration tests.
//!
//! Nothing here calls into the library's convolution, interlace or
//! accounting code paths.

#![allow(dead_code)]

use clcnet::conv::{KernelKind, KernelSpec};
use clcnet::{Scalar, Tensor4D, WeightTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_tensor(rng: &mut ChaCha8Rng, n: usize, c: usize, h: usize, w: usize) -> Tensor4D {
    Tensor4D::from_fn(n, c, h, w, |_, _, _, _| rng.gen_range(-1.0..1.0)).unwrap()
}

/// Small integers, so every partial sum is exact in f32.
pub fn integer_tensor(rng: &mut ChaCha8Rng, n: usize, c: usize, h: usize, w: usize) -> Tensor4D {
    Tensor4D::from_fn(n, c, h, w, |_, _, _, _| rng.gen_range(-8i32..=8) as Scalar).unwrap()
}

pub fn random_weights(rng: &mut ChaCha8Rng, spec: &KernelSpec) -> WeightTensor {
    let [o, i, kh, kw] = spec.weight_shape();
    WeightTensor::from_fn(o, i, kh, kw, |_, _, _, _| rng.gen_range(-1.0..1.0)).unwrap()
}

pub fn integer_weights(rng: &mut ChaCha8Rng, spec: &KernelSpec) -> WeightTensor {
    let [o, i, kh, kw] = spec.weight_shape();
    WeightTensor::from_fn(o, i, kh, kw, |_, _, _, _| rng.gen_range(-8i32..=8) as Scalar).unwrap()
}

/// Filter order of an interlaced output: lay filters out as a
/// `groups × (C / groups)` grid and read it column by column.
pub fn interlace_order(channels: usize, groups: usize) -> Vec<usize> {
    let per = channels / groups;
    let mut order = Vec::with_capacity(channels);
    for col in 0..per {
        for row in 0..groups {
            order.push(row * per + col);
        }
    }
    order
}

/// Brute-force direct convolution over raw buffers.
///
/// For each output element: sum over input channels in ascending order that
/// share the filter's group, then kernel rows, then kernel columns, skipping
/// taps that fall in the zero padding.
pub fn naive_conv(input: &Tensor4D, weights: &WeightTensor, spec: &KernelSpec) -> Tensor4D {
    let [batch, in_c, in_h, in_w] = input.shape();
    let x = input.data();
    let wd = weights.data();
    let (kh, kw, s, p) = (spec.kernel_h, spec.kernel_w, spec.stride, spec.padding as isize);
    let out_c = spec.out_channels;
    let out_h = (in_h + 2 * spec.padding - kh) / s + 1;
    let out_w = (in_w + 2 * spec.padding - kw) / s + 1;
    let in_per_group = in_c / spec.groups;
    let out_per_group = out_c / spec.groups;
    let order: Vec<usize> = match spec.kind {
        KernelKind::InterlacedGrouped => interlace_order(out_c, spec.groups),
        _ => (0..out_c).collect(),
    };

    let mut out = vec![0.0 as Scalar; batch * out_c * out_h * out_w];
    for b in 0..batch {
        for k in 0..out_c {
            let f = order[k];
            let group = f / out_per_group;
            for oy in 0..out_h {
                for ox in 0..out_w {
                    let mut acc: Scalar = 0.0;
                    for ic in 0..in_c {
                        if ic / in_per_group != group {
                            continue;
                        }
                        let local = ic - group * in_per_group;
                        for ky in 0..kh {
                            for kx in 0..kw {
                                let iy = (oy * s + ky) as isize - p;
                                let ix = (ox * s + kx) as isize - p;
                                if iy < 0 || ix < 0 || iy >= in_h as isize || ix >= in_w as isize {
                                    continue;
                                }
                                let xv = x[((b * in_c + ic) * in_h + iy as usize) * in_w + ix as usize];
                                let wv = wd[((f * in_per_group + local) * kh + ky) * kw + kx];
                                acc += xv * wv;
                            }
                        }
                    }
                    out[((b * out_c + k) * out_h + oy) * out_w + ox] = acc;
                }
            }
        }
    }
    Tensor4D::from_vec(batch, out_c, out_h, out_w, out).unwrap()
}

/// Applies [`interlace_order`] to the channels of a tensor.
pub fn naive_interlace(t: &Tensor4D, groups: usize) -> Tensor4D {
    let order = interlace_order(t.channels(), groups);
    let [n, c, h, w] = t.shape();
    Tensor4D::from_fn(n, c, h, w, |b, k, y, x| t.get(b, order[k], y, x)).unwrap()
}

/// Spreadsheet rows for clcNet: `(name, in, out, stride, g1, g2, out_hw)`.
/// The stem has `g1 = g2 = 0`.
pub fn clcnet_rows(a: usize, b: usize, c: usize, d: usize, res: usize) -> Vec<(String, u64, u64, u64, u64, u64, u64)> {
    let mut rows = vec![("stem".to_string(), 3, 32, 2, 0, 0, (res / 2) as u64)];
    let stages: [(u64, u64, u64, u64, usize, usize); 9] = [
        (32, 64, 1, 16, 1, 2),
        (64, 128, 2, 32, 1, 4),
        (128, 128, 1, 64, a, 4),
        (128, 256, 2, 64, 1, 8),
        (256, 256, 1, 128, b, 8),
        (256, 512, 2, 128, 1, 16),
        (512, 512, 1, 256, c, 16),
        (512, 1024, 2, 256, 1, 32),
        (1024, 1024, 1, 512, d, 32),
    ];
    let mut idx = 0;
    for (m, n, s, g1, reps, div) in stages {
        for _ in 0..reps {
            idx += 1;
            rows.push((format!("block{idx}"), m, n, s, g1, 2, (res / div) as u64));
        }
    }
    rows
}

/// Hand accounting: `(name, macs, params)` for every conv, BN and FC line.
pub fn hand_ledger(a: usize, b: usize, c: usize, d: usize, res: usize) -> Vec<(String, u64, u64)> {
    let mut out = Vec::new();
    for (name, m, n, _s, g1, g2, hw) in clcnet_rows(a, b, c, d, res) {
        let area = hw * hw;
        if name == "stem" {
            let w = 3 * 3 * m * n;
            out.push((name.clone(), area * w, w));
            out.push((format!("{name}.bn"), 0, 2 * n));
            continue;
        }
        let l = m;
        let igc = 9 * l * m / g1;
        let gc = n * l / g2;
        out.push((format!("{name}.igc"), area * igc, igc));
        out.push((format!("{name}.bn1"), 0, 2 * l));
        out.push((format!("{name}.gc"), area * gc, gc));
        out.push((format!("{name}.bn2"), 0, 2 * n));
    }
    out.push(("avg_pool".into(), 0, 0));
    out.push(("fc".into(), 1024 * 1000, 1024 * 1000 + 1000));
    out
}
