use std::ops::Range;

use super::hypergraph::HiGraph;
use crate::error::{invalid, Result};

/// Split of a graph into subgraphs over disjoint, contiguous target ranges.
/// Every subgraph keeps all vertices but only the edges and faces pointing
/// into its own range.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphPartition {
    parts: Vec<HiGraph>,
}

impl GraphPartition {
    pub fn parts(&self) -> &[HiGraph] {
        &self.parts
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.parts.first().map_or(0, HiGraph::vertex_count)
    }

    pub fn target_ranges(&self) -> Vec<Range<usize>> {
        self.parts.iter().map(HiGraph::targets).collect()
    }
}

/// Balanced contiguous ranges: sizes differ by at most one, larger ranges first.
pub fn balanced_ranges(range: Range<usize>, n_parts: usize) -> Vec<Range<usize>> {
    let len = range.len();
    let (base, extra) = (len / n_parts, len % n_parts);
    let mut start = range.start;
    (0..n_parts)
        .map(|p| {
            let size = base + usize::from(p < extra);
            let r = start..start + size;
            start += size;
            r
        })
        .collect()
}

/// Evenly splits `graph` into `n_parts` subgraphs by target index.
pub fn partition_graph(graph: &HiGraph, n_parts: usize) -> Result<GraphPartition> {
    let targets = graph.targets();
    if n_parts == 0 || n_parts > targets.len() {
        return Err(invalid(
            "n_parts",
            format!("must lie in [1, {}], got {n_parts}", targets.len()),
        ));
    }
    Ok(GraphPartition {
        parts: balanced_ranges(targets, n_parts)
            .into_iter()
            .map(|r| graph.restrict(r))
            .collect(),
    })
}
