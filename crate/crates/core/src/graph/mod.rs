//! Hypergraph construction (vertices, edges, faces), neighbor search and
//! target-based partitioning.

mod hypergraph;
mod neighbor;
mod partition;

pub use hypergraph::{build_graph, Face, HiGraph};
pub use neighbor::{brute_force as brute_force_neighbors, neighbor_search};
pub use partition::{balanced_ranges, partition_graph, GraphPartition};
