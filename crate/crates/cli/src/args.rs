use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use clcnet::conv::{KernelKind, KernelSpec};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "clcnet", version, about = "Channel-local convolution analysis, clcNet accounting and inference")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Channel receptive field analysis of a CLC block or a whole network.
    Analyze(AnalyzeArgs),
    /// Cheapest (g1, g2) for an IGC + GC block.
    Optimize(OptimizeArgs),
    /// Per-layer MAC and parameter report.
    Report(ReportArgs),
    /// Forward pass with seeded random weights.
    Run(RunArgs),
    /// Time convolution kernels.
    Bench(BenchArgs),
    /// Write a channel dependency graph as DOT.
    ExportDot(ExportDotArgs),
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("target").required(true).args(["block", "config"])))]
pub struct AnalyzeArgs {
    /// CLC block as M,L,N,g1,g2
    #[arg(long, value_parser = parse_block)]
    pub block: Option<BlockArg>,
    /// Network config file (JSON)
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    /// Block channels as M,L,N
    #[arg(long, value_parser = parse_channels)]
    pub channels: (usize, usize, usize),
    /// Spatial area of the IGC kernel
    #[arg(long, default_value_t = 9)]
    pub area: usize,
    /// Hold g2 at this value and optimise g1 only
    #[arg(long)]
    pub fix_g2: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Emit JSON instead of a text table
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Override the config's input resolution
    #[arg(long)]
    pub resolution: Option<usize>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Kernel description, e.g. `kind=igc,in=32,out=32,k=3,g=16,s=1`; repeatable
    #[arg(long = "kernel", required = true, value_parser = parse_kernel)]
    pub kernels: Vec<KernelSpec>,
    /// Timed iterations per kernel
    #[arg(long)]
    pub iters: usize,
    /// Untimed warm-up iterations
    #[arg(long, default_value_t = 1)]
    pub warmup: usize,
    /// Input height and width
    #[arg(long, default_value_t = 56)]
    pub size: usize,
    #[arg(long, default_value_t = 1)]
    pub batch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("target").required(true).args(["block", "kernel"])))]
pub struct ExportDotArgs {
    /// CLC block as M,L,N,g1,g2 (composite graph)
    #[arg(long, value_parser = parse_block)]
    pub block: Option<BlockArg>,
    /// Single kernel, same syntax as `bench --kernel`
    #[arg(long, value_parser = parse_kernel)]
    pub kernel: Option<KernelSpec>,
    /// Output file; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy)]
pub struct BlockArg {
    pub m: usize,
    pub l: usize,
    pub n: usize,
    pub g1: usize,
    pub g2: usize,
}

fn parse_counts(s: &str, expect: usize, what: &str) -> Result<Vec<usize>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != expect {
        return Err(format!("expected {expect} comma-separated counts ({what}), got {s:?}"));
    }
    parts
        .iter()
        .map(|p| match p.parse::<usize>() {
            Ok(0) => Err(format!("{what}: counts must be >= 1")),
            Ok(v) => Ok(v),
            Err(_) => Err(format!("{what}: {p:?} is not a count")),
        })
        .collect()
}

fn parse_block(s: &str) -> Result<BlockArg, String> {
    let v = parse_counts(s, 5, "M,L,N,g1,g2")?;
    Ok(BlockArg {
        m: v[0],
        l: v[1],
        n: v[2],
        g1: v[3],
        g2: v[4],
    })
}

fn parse_channels(s: &str) -> Result<(usize, usize, usize), String> {
    let v = parse_counts(s, 3, "M,L,N")?;
    Ok((v[0], v[1], v[2]))
}

/// `kind=<regular|grouped|depthwise|igc>,in=M[,out=N][,k=3][,g=1][,s=1][,pad=k/2]`
pub fn parse_kernel(s: &str) -> Result<KernelSpec, String> {
    let mut kind = None;
    let (mut m, mut n, mut k, mut g, mut stride, mut pad) = (None, None, 3, None, 1, None);
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got {part:?}"))?;
        if key == "kind" {
            kind = Some(match value {
                "regular" => KernelKind::Regular,
                "grouped" | "gc" => KernelKind::Grouped,
                "depthwise" | "dw" => KernelKind::Depthwise,
                "igc" | "interlaced" | "interlaced_grouped" => KernelKind::InterlacedGrouped,
                other => return Err(format!("unknown kernel kind {other:?}")),
            });
            continue;
        }
        let v: usize = value
            .parse()
            .map_err(|_| format!("{key}: {value:?} is not a count"))?;
        match key {
            "in" => m = Some(v),
            "out" => n = Some(v),
            "k" => k = v,
            "g" => g = Some(v),
            "s" => stride = v,
            "pad" => pad = Some(v),
            other => return Err(format!("unknown kernel key {other:?}")),
        }
    }
    let kind = kind.ok_or("missing kind=")?;
    let m = m.ok_or("missing in=")?;
    let n = n.unwrap_or(m);
    let groups = match kind {
        KernelKind::Regular => g.unwrap_or(1),
        KernelKind::Depthwise => g.unwrap_or(m),
        _ => g.ok_or("grouped kernels need g=")?,
    };
    let spec = KernelSpec {
        kind,
        in_channels: m,
        out_channels: n,
        kernel_h: k,
        kernel_w: k,
        groups,
        stride,
        padding: pad.unwrap_or(k / 2),
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

impl BlockArg {
    pub fn to_spec(self) -> Result<clcnet::conv::BlockSpec, CliError> {
        clcnet::conv::BlockSpec::new(self.m, self.l, self.n, self.g1, self.g2, 1)
            .map_err(|e| CliError::Usage(format!("--block: {e}")))
    }
}
