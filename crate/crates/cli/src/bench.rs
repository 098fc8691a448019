use std::time::{Duration, Instant};

use clcnet::conv::{conv2d, interlaced_two_step, KernelKind, KernelSpec};
use clcnet::{Tensor4D, WeightTensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::BenchArgs;
use crate::error::{CliError, CliResult, EXIT_OK};

#[derive(Debug, Serialize)]
struct Timing {
    kernel: String,
    path: &'static str,
    output_shape: [usize; 4],
    macs: u64,
    median_us: f64,
    p10_us: f64,
    p90_us: f64,
    gmacs_per_s: f64,
}

/// Nearest-rank percentile of sorted samples.
fn percentile(sorted: &[Duration], p: f64) -> Duration {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn describe(k: &KernelSpec) -> String {
    format!(
        "{} {}->{} {}x{} g={} s={}",
        k.kind, k.in_channels, k.out_channels, k.kernel_h, k.kernel_w, k.groups, k.stride
    )
}

fn time_path(
    args: &BenchArgs,
    spec: &KernelSpec,
    path: &'static str,
    macs: u64,
    mut f: impl FnMut() -> clcnet::Result<Tensor4D>,
) -> Result<Timing, CliError> {
    let mut shape = [0; 4];
    for _ in 0..args.warmup {
        shape = f()?.shape();
    }
    let mut samples = Vec::with_capacity(args.iters);
    for _ in 0..args.iters {
        let start = Instant::now();
        let out = f()?;
        samples.push(start.elapsed());
        shape = out.shape();
    }
    samples.sort();
    let median = percentile(&samples, 50.0);
    let us = |d: Duration| d.as_secs_f64() * 1e6;
    Ok(Timing {
        kernel: describe(spec),
        path,
        output_shape: shape,
        macs,
        median_us: us(median),
        p10_us: us(percentile(&samples, 10.0)),
        p90_us: us(percentile(&samples, 90.0)),
        gmacs_per_s: macs as f64 / median.as_secs_f64().max(1e-12) / 1e9,
    })
}

pub fn bench(args: BenchArgs) -> CliResult {
    if args.iters == 0 {
        return Err(CliError::Usage("--iters must be at least 1".into()));
    }
    if args.size == 0 || args.batch == 0 {
        return Err(CliError::Usage("--size and --batch must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut timings = Vec::new();
    for spec in &args.kernels {
        let (oh, ow) = spec.output_size(args.size, args.size)?;
        let macs = (oh * ow * args.batch) as u64 * spec.macs_per_location();
        let input = Tensor4D::from_fn(args.batch, spec.in_channels, args.size, args.size, |_, _, _, _| {
            rng.gen_range(-1.0..1.0)
        })?;
        let [o, i, kh, kw] = spec.weight_shape();
        let weights = WeightTensor::from_fn(o, i, kh, kw, |_, _, _, _| rng.gen_range(-1.0..1.0))?;

        if spec.kind == KernelKind::InterlacedGrouped {
            let mono = conv2d(&input, &weights, spec)?;
            let two = interlaced_two_step(&input, &weights, spec)?;
            if mono.data() != two.data() {
                return Err(CliError::Data(format!(
                    "{}: monolithic and two-step results differ",
                    describe(spec)
                )));
            }
            timings.push(time_path(&args, spec, "monolithic", macs, || conv2d(&input, &weights, spec))?);
            timings.push(time_path(&args, spec, "two_step", macs, || {
                interlaced_two_step(&input, &weights, spec)
            })?);
        } else {
            timings.push(time_path(&args, spec, "direct", macs, || conv2d(&input, &weights, spec))?);
        }
    }

    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&timings).map_err(|e| CliError::Data(e.to_string()))?
        );
    } else {
        println!(
            "input {}x{}x{}, {} iters, {} warm-up",
            args.batch, args.size, args.size, args.iters, args.warmup
        );
        for t in &timings {
            println!(
                "{:<40} {:<10} median {:>10.1} us  p10 {:>10.1}  p90 {:>10.1}  {:>7.3} GMAC/s",
                t.kernel, t.path, t.median_us, t.p10_us, t.p90_us, t.gmacs_per_s
            );
        }
    }
    Ok(EXIT_OK)
}
