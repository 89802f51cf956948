//! Network topologies and their JSON file schema:
//! `{"nodes":[{"id":0,"alphabet":2},...],"edges":[[0,1],...],"root":0}`.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::twonode::NodeId;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeEntry {
    pub id: NodeId,
    /// Number of letters: the node measures a value in `0..alphabet`.
    pub alphabet: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub nodes: Vec<NodeEntry>,
    pub edges: Vec<[NodeId; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<NodeId>,
}

impl NetworkFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// A connected simple graph. Nodes are stored in ascending id order, so
/// comparing indices is comparing ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    ids: Vec<NodeId>,
    alphabet: Vec<u32>,
    /// Edges as index pairs, in file order.
    edges: Vec<(usize, usize)>,
    /// Neighbours of each node, ascending.
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(nodes: &[NodeEntry], edges: &[[NodeId; 2]]) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::network("network has no nodes"));
        }
        let mut sorted: Vec<&NodeEntry> = nodes.iter().collect();
        sorted.sort_by_key(|n| n.id);
        if let Some(w) = sorted.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::network(format!("duplicate node id {}", w[0].id)));
        }
        if let Some(n) = sorted.iter().find(|n| n.alphabet < 2) {
            return Err(Error::network(format!(
                "node {} has alphabet size {}, need at least 2",
                n.id, n.alphabet
            )));
        }
        let ids: Vec<NodeId> = sorted.iter().map(|n| n.id).collect();
        let alphabet = sorted.iter().map(|n| n.alphabet).collect();
        let lookup: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();

        let mut seen = BTreeSet::new();
        let mut index_edges = Vec::with_capacity(edges.len());
        let mut adjacency = vec![Vec::new(); ids.len()];
        for &[u, v] in edges {
            let iu = *lookup
                .get(&u)
                .ok_or_else(|| Error::network(format!("edge names unknown node {u}")))?;
            let iv = *lookup
                .get(&v)
                .ok_or_else(|| Error::network(format!("edge names unknown node {v}")))?;
            if iu == iv {
                return Err(Error::network(format!("self loop on node {u}")));
            }
            if !seen.insert((iu.min(iv), iu.max(iv))) {
                return Err(Error::network(format!("duplicate edge ({u}, {v})")));
            }
            index_edges.push((iu, iv));
            adjacency[iu].push(iv);
            adjacency[iv].push(iu);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        let graph = Graph {
            ids,
            alphabet,
            edges: index_edges,
            adjacency,
        };
        if graph.reachable_from(0).len() != graph.node_count() {
            return Err(Error::network("network is not connected"));
        }
        Ok(graph)
    }

    pub fn from_file(file: &NetworkFile) -> Result<Self> {
        Self::new(&file.nodes, &file.edges)
    }

    /// Complete graph on ids `0..n` with the given alphabet sizes.
    pub fn complete(alphabet: &[u32]) -> Result<Self> {
        let n = alphabet.len() as NodeId;
        let edges: Vec<[NodeId; 2]> = (0..n).flat_map(|u| (u + 1..n).map(move |v| [u, v])).collect();
        Self::new(&entries(alphabet), &edges)
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn id(&self, index: usize) -> NodeId {
        self.ids[index]
    }

    pub fn index_of(&self, id: NodeId) -> Result<usize> {
        self.ids
            .binary_search(&id)
            .map_err(|_| Error::network(format!("unknown node {id}")))
    }

    pub fn alphabet(&self) -> &[u32] {
        &self.alphabet
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edge as a pair of node ids.
    pub fn edge_ids(&self, e: usize) -> (NodeId, NodeId) {
        let (u, v) = self.edges[e];
        (self.ids[u], self.ids[v])
    }

    /// Index of the edge joining two node ids, in either orientation.
    pub fn edge_index(&self, u: NodeId, v: NodeId) -> Result<usize> {
        let (iu, iv) = (self.index_of(u)?, self.index_of(v)?);
        self.edges
            .iter()
            .position(|&(a, b)| (a, b) == (iu, iv) || (a, b) == (iv, iu))
            .ok_or_else(|| Error::network(format!("no edge ({u}, {v})")))
    }

    pub fn neighbours(&self, index: usize) -> &[usize] {
        &self.adjacency[index]
    }

    pub fn is_complete(&self) -> bool {
        let n = self.node_count();
        self.edge_count() == n * (n - 1) / 2
    }

    pub fn is_tree(&self) -> bool {
        self.edge_count() + 1 == self.node_count()
    }

    /// Largest measurement a node can hold (`alphabet - 1`).
    pub fn max_value(&self, index: usize) -> u32 {
        self.alphabet[index] - 1
    }

    pub fn total_max_sum(&self) -> u32 {
        (0..self.node_count()).map(|i| self.max_value(i)).sum()
    }

    fn reachable_from(&self, start: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                if seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    pub fn to_file(&self, root: Option<NodeId>) -> NetworkFile {
        NetworkFile {
            nodes: entries_with_ids(&self.ids, &self.alphabet),
            edges: (0..self.edge_count())
                .map(|e| {
                    let (u, v) = self.edge_ids(e);
                    [u, v]
                })
                .collect(),
            root,
        }
    }
}

/// Node entries with ids `0..n`.
pub fn entries(alphabet: &[u32]) -> Vec<NodeEntry> {
    let ids: Vec<NodeId> = (0..alphabet.len() as NodeId).collect();
    entries_with_ids(&ids, alphabet)
}

fn entries_with_ids(ids: &[NodeId], alphabet: &[u32]) -> Vec<NodeEntry> {
    ids.iter()
        .zip(alphabet)
        .map(|(&id, &alphabet)| NodeEntry { id, alphabet })
        .collect()
}
