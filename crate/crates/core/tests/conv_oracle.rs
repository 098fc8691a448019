mod support;

use clcnet::conv::{
    batchnorm_inference, clc_block_forward, conv2d, interlaced_two_step, relu, BatchNorm, BlockSpec,
    BlockWeights, KernelKind, KernelSpec,
};
use clcnet::tensor::interlace_channels;
use proptest::prelude::*;
use support::*;

fn divisors(x: usize) -> Vec<usize> {
    (1..=x).filter(|d| x % d == 0).collect()
}

#[test]
fn grouped_g4_matches_oracle() {
    let mut r = rng(42);
    let spec = KernelSpec::grouped(8, 8, 3, 4, 1);
    let x = random_tensor(&mut r, 1, 8, 5, 5);
    let w = random_weights(&mut r, &spec);
    assert_eq!(conv2d(&x, &w, &spec).unwrap().data(), naive_conv(&x, &w, &spec).data());
}

#[test]
fn interlace_matches_oracle_order() {
    let mut r = rng(3);
    for (c, g) in [(4, 2), (6, 3), (12, 4), (16, 8)] {
        let t = random_tensor(&mut r, 2, c, 2, 3);
        assert_eq!(interlace_channels(&t, g).unwrap(), naive_interlace(&t, g));
    }
}

#[test]
fn clc_block_reduces_to_composed_oracle() {
    // identity batch norm; ReLU applied to the composed oracle output
    let mut r = rng(11);
    let block = BlockSpec::new(8, 8, 16, 4, 2, 2).unwrap();
    let x = random_tensor(&mut r, 2, 8, 8, 8);
    let weights = BlockWeights {
        igc: random_weights(&mut r, &block.igc),
        bn1: BatchNorm::identity(8),
        gc: random_weights(&mut r, &block.gc),
        bn2: BatchNorm::identity(16),
    };
    let got = clc_block_forward(&x, &block, &weights).unwrap();
    let mid = naive_conv(&x, &weights.igc, &block.igc);
    let expect = relu(&naive_conv(&mid, &weights.gc, &block.gc));
    assert_eq!(got.shape(), [2, 16, 4, 4]);
    assert_eq!(got.data(), expect.data());
}

#[test]
fn batchnorm_after_conv_is_per_channel() {
    let mut r = rng(5);
    let spec = KernelSpec::grouped(4, 4, 3, 2, 1);
    let x = random_tensor(&mut r, 1, 4, 4, 4);
    let w = random_weights(&mut r, &spec);
    let mut bn = BatchNorm::new(4);
    bn.shift = vec![1.0, 2.0, 3.0, 4.0];
    bn.scale = vec![0.0; 4];
    let y = batchnorm_inference(&conv2d(&x, &w, &spec).unwrap(), &bn).unwrap();
    for c in 0..4 {
        assert!(y.plane(0, c).iter().all(|&v| v == (c + 1) as f32));
    }
}

fn any_kind() -> impl Strategy<Value = KernelKind> {
    prop_oneof![
        Just(KernelKind::Regular),
        Just(KernelKind::Grouped),
        Just(KernelKind::Depthwise),
        Just(KernelKind::InterlacedGrouped),
    ]
}

fn kernel_case(
    kinds: impl Strategy<Value = KernelKind>,
) -> impl Strategy<Value = (KernelSpec, usize, usize, usize, u64)> {
    (kinds, 1usize..=16, 1usize..=16, prop_oneof![Just(1usize), Just(3)], 1usize..=2, 1usize..=8, 1usize..=8, 1usize..=2, any::<u64>())
        .prop_flat_map(|(kind, m, n, k, s, h, w, batch, seed)| {
            let n = if kind == KernelKind::Depthwise { m } else { n };
            let groups = match kind {
                KernelKind::Regular => vec![1],
                KernelKind::Depthwise => vec![m],
                _ => divisors(m).into_iter().filter(|g| n % g == 0).collect(),
            };
            (proptest::sample::select(groups), Just((kind, m, n, k, s, h, w, batch, seed)))
        })
        .prop_map(|(g, (kind, m, n, k, s, h, w, batch, seed))| {
            let spec = KernelSpec {
                kind,
                in_channels: m,
                out_channels: n,
                kernel_h: k,
                kernel_w: k,
                groups: g,
                stride: s,
                padding: k / 2,
            };
            (spec, h, w, batch, seed)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn every_kind_matches_brute_force((spec, h, w, batch, seed) in kernel_case(any_kind())) {
        let mut r = rng(seed);
        let x = random_tensor(&mut r, batch, spec.in_channels, h, w);
        let wt = random_weights(&mut r, &spec);
        let got = conv2d(&x, &wt, &spec).unwrap();
        let want = naive_conv(&x, &wt, &spec);
        prop_assert_eq!(got.data(), want.data());
    }

    #[test]
    fn igc_two_paths_agree((spec, h, w, batch, seed) in kernel_case(Just(KernelKind::InterlacedGrouped))) {
        let mut r = rng(seed);
        let x = random_tensor(&mut r, batch, spec.in_channels, h, w);
        let wt = random_weights(&mut r, &spec);
        let mono = conv2d(&x, &wt, &spec).unwrap();
        let two = interlaced_two_step(&x, &wt, &spec).unwrap();
        prop_assert_eq!(mono.data(), two.data());
    }
}
