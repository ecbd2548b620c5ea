use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{EdgeId, NodeId, Topology};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("edge {0} is not in the topology")]
    UnknownEdge(EdgeId),
    #[error("edge {0} appears twice")]
    DuplicateEdge(EdgeId),
    #[error("node {0} has more than one parent")]
    MultipleParents(NodeId),
    #[error("root {0} has an incoming edge")]
    RootHasParent(NodeId),
    #[error("node {0} is not reachable from the root")]
    Unreachable(NodeId),
    #[error("leaf {0} is neither the root nor a terminal")]
    DanglingLeaf(NodeId),
}

/// The edge set a P2MP transfer is multicast over, oriented away from the source.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForwardingTree {
    root: NodeId,
    terminals: Vec<NodeId>,
    edges: Vec<EdgeId>,
}

impl ForwardingTree {
    /// Wraps an edge list without checking it; see [`ForwardingTree::validate`].
    pub fn new(
        root: NodeId,
        terminals: impl IntoIterator<Item = NodeId>,
        edges: Vec<EdgeId>,
    ) -> Self {
        let terminals: BTreeSet<NodeId> = terminals.into_iter().collect();
        Self {
            root,
            terminals: terminals.into_iter().collect(),
            edges,
        }
    }

    /// A path given as a node sequence from the root to the single terminal.
    pub fn from_path(path: &[NodeId]) -> Self {
        assert!(path.len() >= 2, "a path needs at least two nodes");
        let edges = path.windows(2).map(|w| EdgeId::new(w[0], w[1])).collect();
        Self::new(path[0], [path[path.len() - 1]], edges)
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn terminals(&self) -> &[NodeId] {
        &self.terminals
    }

    /// Edges in the order they were attached.
    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn contains_edge(&self, edge: EdgeId) -> bool {
        self.edges.contains(&edge)
    }

    /// Every node the tree touches, root included.
    pub fn nodes(&self) -> BTreeSet<NodeId> {
        std::iter::once(self.root)
            .chain(self.edges.iter().map(|e| e.head))
            .collect()
    }

    pub fn validate(&self, topology: &Topology) -> Result<(), TreeError> {
        let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for &e in &self.edges {
            if !topology.contains_edge(e) {
                return Err(TreeError::UnknownEdge(e));
            }
            if !seen.insert(e) {
                return Err(TreeError::DuplicateEdge(e));
            }
            if e.head == self.root {
                return Err(TreeError::RootHasParent(self.root));
            }
            if parent.insert(e.head, e.tail).is_some() {
                return Err(TreeError::MultipleParents(e.head));
            }
        }
        // Single parent per node plus every node reaching the root makes it an arborescence.
        for &node in parent.keys() {
            let mut cur = node;
            let mut steps = 0;
            while cur != self.root {
                match parent.get(&cur) {
                    Some(&p) if steps <= parent.len() => {
                        cur = p;
                        steps += 1;
                    }
                    _ => return Err(TreeError::Unreachable(node)),
                }
            }
        }
        for &t in &self.terminals {
            if t != self.root && !parent.contains_key(&t) {
                return Err(TreeError::Unreachable(t));
            }
        }
        let inner: BTreeSet<NodeId> = self.edges.iter().map(|e| e.tail).collect();
        for &node in parent.keys() {
            if !inner.contains(&node) && self.terminals.binary_search(&node).is_err() {
                return Err(TreeError::DanglingLeaf(node));
            }
        }
        Ok(())
    }

    pub fn describe(&self, topology: &Topology) -> String {
        self.edges
            .iter()
            .map(|&e| topology.edge_label(e))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

impl fmt::Display for ForwardingTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for e in &self.edges {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(i: u32) -> NodeId {
        NodeId(i)
    }

    fn square() -> Topology {
        Topology::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap()
    }

    #[test]
    fn accepts_valid_tree() {
        let topo = square();
        let tree = ForwardingTree::new(
            n(0),
            [n(2), n(3)],
            vec![
                EdgeId::new(n(0), n(1)),
                EdgeId::new(n(1), n(2)),
                EdgeId::new(n(0), n(3)),
            ],
        );
        tree.validate(&topo).unwrap();
        assert_eq!(tree.nodes().len(), tree.len() + 1);
    }

    #[test]
    fn rejects_structural_violations() {
        let topo = square();
        let e = |a, b| EdgeId::new(n(a), n(b));
        let cases = [
            (vec![e(0, 2)], TreeError::UnknownEdge(e(0, 2))),
            (vec![e(0, 1), e(0, 1)], TreeError::DuplicateEdge(e(0, 1))),
            (
                vec![e(0, 1), e(1, 2), e(3, 2), e(0, 3)],
                TreeError::MultipleParents(n(2)),
            ),
            (vec![e(0, 1), e(1, 0)], TreeError::RootHasParent(n(0))),
            (
                vec![e(1, 2), e(2, 3), e(3, 0)],
                TreeError::RootHasParent(n(0)),
            ),
            (
                vec![e(0, 1), e(1, 2), e(2, 3)],
                TreeError::DanglingLeaf(n(3)),
            ),
        ];
        for (edges, expected) in cases {
            let tree = ForwardingTree::new(n(0), [n(2)], edges);
            assert_eq!(tree.validate(&topo), Err(expected));
        }
        // detached cycle
        let tree = ForwardingTree::new(n(0), [n(1)], vec![e(0, 1), e(2, 3), e(3, 2)]);
        assert!(matches!(
            tree.validate(&topo),
            Err(TreeError::Unreachable(_))
        ));
        // terminal not covered
        let tree = ForwardingTree::new(n(0), [n(1), n(2)], vec![e(0, 1)]);
        assert_eq!(tree.validate(&topo), Err(TreeError::Unreachable(n(2))));
    }

    #[test]
    fn path_constructor() {
        let tree = ForwardingTree::from_path(&[n(0), n(1), n(2)]);
        assert_eq!(tree.root(), n(0));
        assert_eq!(tree.terminals(), &[n(2)]);
        assert_eq!(tree.to_string(), "n0->n1 n1->n2");
        tree.validate(&square()).unwrap();
    }
}
