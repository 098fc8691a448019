use std::fs;
use std::path::Path;
use std::time::Instant;

use clcnet::cdg::{cdg_of_block, cdg_of_kernel, crf_sizes, export_dot as render_dot, has_fcrf, DotLabels};
use clcnet::model::{
    build_clcnet, cost_report, forward, parse_config, verify_network_fcrf, NetworkConfig, WeightBundle,
};
use clcnet::optimizer::{fixed_g2_policy, minimize_cost, CostQuery};
use clcnet::Tensor4D;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::args::{AnalyzeArgs, ExportDotArgs, OptimizeArgs, ReportArgs, RunArgs};
use crate::error::{CliError, CliResult, EXIT_NOT_FCRF, EXIT_OK};

fn load_config(path: &Path) -> Result<NetworkConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "yes"
    } else {
        "no"
    }
}

fn fcrf_exit(ok: bool) -> u8 {
    if ok {
        EXIT_OK
    } else {
        EXIT_NOT_FCRF
    }
}

pub fn analyze(args: AnalyzeArgs) -> CliResult {
    if let Some(b) = args.block {
        let block = b.to_spec()?;
        let igc = crf_sizes(&cdg_of_kernel(&block.igc)?);
        let gc = crf_sizes(&cdg_of_kernel(&block.gc)?);
        let cdg = cdg_of_block(&block)?;
        let sizes = crf_sizes(&cdg);
        let ok = has_fcrf(&cdg);
        println!("block M={} L={} N={} g1={} g2={}", b.m, b.l, b.n, b.g1, b.g2);
        println!("  IGC CRF size: {}", igc[0]);
        println!("  GC CRF size: {}", gc[0]);
        println!(
            "  block CRF size: min {} max {} of {} inputs",
            sizes.iter().min().unwrap_or(&0),
            sizes.iter().max().unwrap_or(&0),
            b.m
        );
        println!(
            "  g1*g2 = {} {} L = {}",
            b.g1 * b.g2,
            if b.g1 * b.g2 <= b.l { "<=" } else { ">" },
            b.l
        );
        println!("FCRF: {}", verdict(ok));
        return Ok(fcrf_exit(ok));
    }

    let path = args.config.expect("clap enforces --block or --config");
    let cfg = load_config(&path)?;
    let spec = build_clcnet(&cfg)?;
    let report = verify_network_fcrf(&spec)?;
    for e in report.blocks() {
        println!(
            "{:<8} M={:<5} CRF {:>4}..{:<4} FCRF: {}",
            e.name,
            e.in_channels,
            e.crf_min,
            e.crf_max,
            verdict(e.fcrf)
        );
    }
    let ok = report.all_fcrf();
    println!("{}/{} blocks FCRF", report.blocks_with_fcrf(), report.block_count());
    println!("FCRF: {}", verdict(ok));
    Ok(fcrf_exit(ok))
}

pub fn optimize(args: OptimizeArgs) -> CliResult {
    let (m, l, n) = args.channels;
    let q = CostQuery::new(m, l, n).with_area(args.area);
    let r = match args.fix_g2 {
        Some(g2) => fixed_g2_policy(&q, g2),
        None => minimize_cost(&q),
    }
    .map_err(|e| CliError::Data(format!("infeasible: {e}")))?;
    println!("g1={} g2={} cost={}", r.g1, r.g2, r.cost);
    Ok(EXIT_OK)
}

pub fn report(args: ReportArgs) -> CliResult {
    let cfg = load_config(&args.config)?;
    let report = cost_report(&build_clcnet(&cfg)?)?;
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report).map_err(|e| CliError::Data(e.to_string()))?
        );
    } else {
        print!("{report}");
    }
    Ok(EXIT_OK)
}

#[derive(Debug, Serialize)]
struct RunSummary {
    resolution: usize,
    seed: u64,
    logits_shape: [usize; 4],
    argmax: usize,
    max_logit: f32,
    mean_logit: f32,
    elapsed_ms: f64,
}

pub fn run(args: RunArgs) -> CliResult {
    let mut cfg = load_config(&args.config)?;
    if let Some(r) = args.resolution {
        cfg.input_resolution = r;
    }
    let spec = build_clcnet(&cfg)?;
    let weights = WeightBundle::random(&spec, args.seed)?;
    let res = cfg.input_resolution;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed.wrapping_add(1));
    let input = Tensor4D::from_fn(1, 3, res, res, |_, _, _, _| rng.gen_range(-1.0..1.0))?;

    let start = Instant::now();
    let logits = forward(&spec, &weights, &input)?;
    let elapsed = start.elapsed();

    let data = logits.data();
    let argmax = logits.argmax();
    let summary = RunSummary {
        resolution: res,
        seed: args.seed,
        logits_shape: logits.shape(),
        argmax,
        max_logit: data[argmax],
        mean_logit: data.iter().sum::<f32>() / data.len() as f32,
        elapsed_ms: elapsed.as_secs_f64() * 1e3,
    };
    if args.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&summary).map_err(|e| CliError::Data(e.to_string()))?
        );
    } else {
        let [n, c, h, w] = summary.logits_shape;
        println!("input 1x3x{res}x{res}, seed {}", summary.seed);
        println!("logits {n}x{c}x{h}x{w}");
        println!("argmax {} (logit {:.6})", summary.argmax, summary.max_logit);
        println!("mean logit {:.6}", summary.mean_logit);
        println!("forward {:.1} ms", summary.elapsed_ms);
    }
    Ok(EXIT_OK)
}

pub fn export_dot(args: ExportDotArgs) -> CliResult {
    let (cdg, name) = match (args.block, args.kernel) {
        (Some(b), _) => (
            cdg_of_block(&b.to_spec()?)?,
            format!("clc_block_{}_{}_{}_g{}_{}", b.m, b.l, b.n, b.g1, b.g2),
        ),
        (None, Some(k)) => (cdg_of_kernel(&k)?, format!("{}_{}_{}_g{}", k.kind, k.in_channels, k.out_channels, k.groups)),
        (None, None) => unreachable!("clap enforces --block or --kernel"),
    };
    let dot = render_dot(
        &cdg,
        &DotLabels {
            graph_name: name,
            ..DotLabels::default()
        },
    );
    match args.out {
        Some(path) => {
            fs::write(&path, &dot)
                .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
            println!("wrote {} ({} edges)", path.display(), cdg.edge_count());
        }
        None => print!("{dot}"),
    }
    Ok(EXIT_OK)
}
