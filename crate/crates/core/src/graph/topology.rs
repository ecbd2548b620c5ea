//! Datacenter topology: named nodes joined by full-duplex links.
//!
//! Every undirected link is expanded into two directed edges that carry
//! independent capacity. All edges share one per-slot capacity.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense node index, assigned in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

/// A directed edge `tail -> head`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeId {
    pub tail: NodeId,
    pub head: NodeId,
}

impl EdgeId {
    pub const fn new(tail: NodeId, head: NodeId) -> Self {
        Self { tail, head }
    }

    pub const fn reversed(self) -> Self {
        Self {
            tail: self.head,
            head: self.tail,
        }
    }
}

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}->{}", self.tail, self.head)
    }
}

pub const DEFAULT_CAPACITY: f64 = 1.0;

fn default_capacity() -> f64 {
    DEFAULT_CAPACITY
}

/// On-disk topology description (TOML).
///
/// ```toml
/// name = "example"
/// capacity = 1.0          # optional, rate units per slot per direction
/// nodes = ["a", "b", "c"]
/// links = [["a", "b"], ["b", "c"]]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "default_capacity")]
    pub capacity: f64,
    pub nodes: Vec<String>,
    pub links: Vec<[String; 2]>,
}

#[derive(Debug, Error)]
pub enum TopologyError {
    #[error("failed to read topology file {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed topology file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("topology has no nodes")]
    Empty,
    #[error("duplicate node name `{0}`")]
    DuplicateNode(String),
    #[error("link references unknown node `{0}`")]
    UnknownNode(String),
    #[error("self-loop on node `{0}`")]
    SelfLoop(String),
    #[error("duplicate link between `{0}` and `{1}`")]
    DuplicateLink(String, String),
    #[error("capacity must be positive and finite, got {0}")]
    BadCapacity(f64),
    #[error("topology is not connected: `{0}` is unreachable from `{1}`")]
    Disconnected(String, String),
}

#[derive(Debug, Clone)]
pub struct Topology {
    name: String,
    capacity: f64,
    nodes: Vec<String>,
    index: HashMap<String, NodeId>,
    links: Vec<(NodeId, NodeId)>,
    /// Directed edges sorted by `(tail, head)`; position is the dense edge index.
    edges: Vec<EdgeId>,
    /// Out-neighbours per node, sorted by head id, with the dense edge index.
    out: Vec<Vec<(NodeId, usize)>>,
}

impl Topology {
    pub fn from_spec(spec: &TopologySpec) -> Result<Self, TopologyError> {
        if spec.nodes.is_empty() {
            return Err(TopologyError::Empty);
        }
        if !(spec.capacity.is_finite() && spec.capacity > 0.0) {
            return Err(TopologyError::BadCapacity(spec.capacity));
        }
        let mut index = HashMap::with_capacity(spec.nodes.len());
        for (i, name) in spec.nodes.iter().enumerate() {
            if index.insert(name.clone(), NodeId(i as u32)).is_some() {
                return Err(TopologyError::DuplicateNode(name.clone()));
            }
        }
        let lookup = |name: &String| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| TopologyError::UnknownNode(name.clone()))
        };

        let n = spec.nodes.len();
        let mut out: Vec<Vec<(NodeId, usize)>> = vec![Vec::new(); n];
        let mut links = Vec::with_capacity(spec.links.len());
        for [a, b] in &spec.links {
            let (u, v) = (lookup(a)?, lookup(b)?);
            if u == v {
                return Err(TopologyError::SelfLoop(a.clone()));
            }
            if out[u.index()].iter().any(|&(h, _)| h == v) {
                return Err(TopologyError::DuplicateLink(a.clone(), b.clone()));
            }
            out[u.index()].push((v, 0));
            out[v.index()].push((u, 0));
            links.push((u, v));
        }

        let mut edges = Vec::with_capacity(2 * links.len());
        for (tail, heads) in out.iter_mut().enumerate() {
            heads.sort_unstable();
            for (head, idx) in heads.iter_mut() {
                *idx = edges.len();
                edges.push(EdgeId::new(NodeId(tail as u32), *head));
            }
        }

        let topology = Self {
            name: spec.name.clone().unwrap_or_else(|| "unnamed".to_string()),
            capacity: spec.capacity,
            nodes: spec.nodes.clone(),
            index,
            links,
            edges,
            out,
        };
        topology.check_connected()?;
        Ok(topology)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, TopologyError> {
        let spec: TopologySpec = toml::from_str(text)?;
        Self::from_spec(&spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TopologyError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TopologyError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Builds a topology with nodes named `n0..n{count-1}`.
    pub fn from_edges(count: usize, links: &[(u32, u32)]) -> Result<Self, TopologyError> {
        let name = |i: u32| format!("n{i}");
        Self::from_spec(&TopologySpec {
            name: None,
            capacity: DEFAULT_CAPACITY,
            nodes: (0..count as u32).map(name).collect(),
            links: links.iter().map(|&(a, b)| [name(a), name(b)]).collect(),
        })
    }

    /// Returns a copy with every edge capacity replaced.
    pub fn with_capacity(mut self, capacity: f64) -> Result<Self, TopologyError> {
        if !(capacity.is_finite() && capacity > 0.0) {
            return Err(TopologyError::BadCapacity(capacity));
        }
        self.capacity = capacity;
        Ok(self)
    }

    fn check_connected(&self) -> Result<(), TopologyError> {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([NodeId(0)]);
        seen[0] = true;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.out[u.index()] {
                if !seen[v.index()] {
                    seen[v.index()] = true;
                    queue.push_back(v);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(TopologyError::Disconnected(
                self.nodes[i].clone(),
                self.nodes[0].clone(),
            )),
            None => Ok(()),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    pub fn contains_node(&self, node: NodeId) -> bool {
        node.index() < self.nodes.len()
    }

    pub fn node_name(&self, node: NodeId) -> &str {
        &self.nodes[node.index()]
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.index.get(name).copied()
    }

    /// Undirected links in declaration order.
    pub fn links(&self) -> &[(NodeId, NodeId)] {
        &self.links
    }

    /// Directed edges, sorted by `(tail, head)`.
    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_index(&self, edge: EdgeId) -> Option<usize> {
        if !self.contains_node(edge.tail) {
            return None;
        }
        self.out[edge.tail.index()]
            .iter()
            .find(|&&(h, _)| h == edge.head)
            .map(|&(_, idx)| idx)
    }

    pub fn contains_edge(&self, edge: EdgeId) -> bool {
        self.edge_index(edge).is_some()
    }

    /// Out-neighbours of `node` with their dense edge indices, sorted by head.
    pub fn out_edges(&self, node: NodeId) -> &[(NodeId, usize)] {
        &self.out[node.index()]
    }

    pub fn spec(&self) -> TopologySpec {
        TopologySpec {
            name: Some(self.name.clone()),
            capacity: self.capacity,
            nodes: self.nodes.clone(),
            links: self
                .links
                .iter()
                .map(|&(a, b)| [self.nodes[a.index()].clone(), self.nodes[b.index()].clone()])
                .collect(),
        }
    }

    pub fn edge_label(&self, edge: EdgeId) -> String {
        format!(
            "{}->{}",
            self.node_name(edge.tail),
            self.node_name(edge.head)
        )
    }
}
