//! Channel dependency graphs.
//!
//! A [`ChannelDependencyGraph`] records, for every output channel of a kernel
//! or stacked block, the set of input channels it is computed from. Composing
//! graphs in application order gives the channel receptive field of a block.

use std::fmt::Write as _;

use crate::conv::{BlockSpec, KernelKind, KernelSpec};
use crate::error::{Error, Result};
use crate::tensor::interlace_source;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelDependencyGraph {
    in_channels: usize,
    deps: Vec<Vec<usize>>,
}

impl ChannelDependencyGraph {
    /// Builds a graph from explicit dependency sets. Each set is sorted and
    /// deduplicated; every index must lie in `0..in_channels` and no set may
    /// be empty.
    pub fn new(in_channels: usize, deps: Vec<Vec<usize>>) -> Result<Self> {
        if in_channels == 0 || deps.is_empty() {
            return Err(Error::shape("dependency graph needs at least one input and one output"));
        }
        let mut deps = deps;
        for (n, set) in deps.iter_mut().enumerate() {
            set.sort_unstable();
            set.dedup();
            if set.is_empty() {
                return Err(Error::Domain(format!("output channel {n} has no dependencies")));
            }
            if let Some(&bad) = set.iter().find(|&&i| i >= in_channels) {
                return Err(Error::Domain(format!(
                    "output channel {n} depends on input {bad}, only {in_channels} inputs"
                )));
            }
        }
        Ok(Self { in_channels, deps })
    }

    /// `deps[n] = {n}`.
    pub fn identity(channels: usize) -> Self {
        Self {
            in_channels: channels,
            deps: (0..channels).map(|n| vec![n]).collect(),
        }
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.deps.len()
    }

    /// Sorted input channels that output `n` depends on.
    pub fn deps(&self, n: usize) -> &[usize] {
        &self.deps[n]
    }

    pub fn all_deps(&self) -> &[Vec<usize>] {
        &self.deps
    }

    pub fn edge_count(&self) -> usize {
        self.deps.iter().map(Vec::len).sum()
    }
}

/// Dependency graph of a single kernel.
pub fn cdg_of_kernel(spec: &KernelSpec) -> Result<ChannelDependencyGraph> {
    spec.validate()?;
    let m = spec.in_channels;
    let per_group = spec.in_per_group();
    let grouped = |n: usize| {
        let g = spec.group_of_output(n);
        (g * per_group..(g + 1) * per_group).collect::<Vec<_>>()
    };
    let deps = (0..spec.out_channels)
        .map(|k| match spec.kind {
            KernelKind::Regular => (0..m).collect(),
            KernelKind::Grouped | KernelKind::Depthwise => grouped(k),
            KernelKind::InterlacedGrouped => {
                grouped(interlace_source(k, spec.out_channels, spec.groups))
            }
        })
        .collect();
    Ok(ChannelDependencyGraph {
        in_channels: m,
        deps,
    })
}

/// Graph of `first` followed by `second`: output `n` depends on the union of
/// `first.deps(m)` over every `m` in `second.deps(n)`.
pub fn compose(
    first: &ChannelDependencyGraph,
    second: &ChannelDependencyGraph,
) -> Result<ChannelDependencyGraph> {
    if first.out_channels() != second.in_channels() {
        return Err(Error::ChannelMismatch(format!(
            "first graph has {} outputs, second expects {} inputs",
            first.out_channels(),
            second.in_channels()
        )));
    }
    let mut mask = vec![false; first.in_channels];
    let deps = second
        .deps
        .iter()
        .map(|mids| {
            mask.iter_mut().for_each(|m| *m = false);
            for &mid in mids {
                for &i in &first.deps[mid] {
                    mask[i] = true;
                }
            }
            mask.iter()
                .enumerate()
                .filter_map(|(i, &hit)| hit.then_some(i))
                .collect()
        })
        .collect();
    Ok(ChannelDependencyGraph {
        in_channels: first.in_channels,
        deps,
    })
}

/// Composes a chain of kernels in application order.
pub fn cdg_of_chain(kernels: &[KernelSpec]) -> Result<ChannelDependencyGraph> {
    let (head, rest) = kernels
        .split_first()
        .ok_or_else(|| Error::shape("empty kernel chain"))?;
    rest.iter().try_fold(cdg_of_kernel(head)?, |acc, k| {
        compose(&acc, &cdg_of_kernel(k)?)
    })
}

pub fn cdg_of_block(block: &BlockSpec) -> Result<ChannelDependencyGraph> {
    cdg_of_chain(&[block.igc, block.gc])
}

/// Channel receptive field size of every output channel.
pub fn crf_sizes(cdg: &ChannelDependencyGraph) -> Vec<usize> {
    cdg.deps.iter().map(Vec::len).collect()
}

/// Every output depends on every input.
pub fn has_fcrf(cdg: &ChannelDependencyGraph) -> bool {
    // deps are sorted and deduplicated, so full length means the full set
    cdg.deps.iter().all(|d| d.len() == cdg.in_channels)
}

/// Node labels for [`export_dot`].
#[derive(Debug, Clone)]
pub struct DotLabels {
    pub graph_name: String,
    pub input_prefix: String,
    pub output_prefix: String,
}

impl Default for DotLabels {
    fn default() -> Self {
        Self {
            graph_name: "cdg".to_string(),
            input_prefix: "i".to_string(),
            output_prefix: "o".to_string(),
        }
    }
}

fn dot_id(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Renders the graph as a DOT digraph. Inputs sit on the top rank, outputs on
/// the bottom; edges point from each output to the inputs it depends on.
pub fn export_dot(cdg: &ChannelDependencyGraph, labels: &DotLabels) -> String {
    let input = |i: usize| dot_id(&format!("{}{i}", labels.input_prefix));
    let output = |n: usize| dot_id(&format!("{}{n}", labels.output_prefix));
    let mut s = String::new();
    let _ = writeln!(s, "digraph {} {{", dot_id(&labels.graph_name));
    let _ = writeln!(s, "  rankdir=TB;");
    let _ = writeln!(s, "  node [shape=circle];");
    let inputs: Vec<String> = (0..cdg.in_channels).map(input).collect();
    let _ = writeln!(s, "  {{ rank=min; {}; }}", inputs.join("; "));
    let outputs: Vec<String> = (0..cdg.out_channels()).map(output).collect();
    let _ = writeln!(s, "  {{ rank=max; {}; }}", outputs.join("; "));
    for (n, deps) in cdg.deps.iter().enumerate() {
        for &i in deps {
            let _ = writeln!(s, "  {} -> {};", output(n), input(i));
        }
    }
    s.push_str("}\n");
    s
}
