//! Topology, forwarding trees and load-aware tree selection.

mod steiner;
mod topology;
mod tree;

pub use steiner::{
    edge_cost, edge_weights, select_path, select_tree, takahashi_matsuyama, tree_weight, GraphError,
};
pub use topology::{EdgeId, NodeId, Topology, TopologyError, TopologySpec, DEFAULT_CAPACITY};
pub use tree::{ForwardingTree, TreeError};
