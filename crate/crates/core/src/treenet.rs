//! Convergecast/broadcast block protocol on rooted trees.
//!
//! Every edge runs the two-node scheme with the child's subtree acting as
//! a single starting node whose measurement is the subtree sum. Codewords
//! flow up in post-order; once the root holds all of them it knows the
//! function block and replies flow back down, each node answering its
//! children after its own reply arrived. The subtree letter a node sends is
//! the separation class of its partial sum, and the class representative is
//! enough to form the parent's partial sum, so intermediate nodes never
//! need exact sums.

use std::collections::{BTreeSet, VecDeque};

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{ceil_block_bits, interval_bounds, threshold_complexity, BoundReport};
use crate::error::{Error, Result};
use crate::funckernel::FunctionSpec;
use crate::network::{Graph, NetworkFile};
use crate::real::Real;
use crate::space::{AssignmentSpace, EXHAUSTIVE_GUARD};
use crate::twonode::{pick_worst, LinkScheme, NodeId, Phase, Transcript};

/// A tree rooted at one of its nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TreeNetwork {
    graph: Graph,
    root: usize,
    parent: Vec<Option<usize>>,
    /// Edge index joining each node to its parent.
    parent_edge: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    post_order: Vec<usize>,
    bfs_order: Vec<usize>,
    subtree_max: Vec<u32>,
}

impl TreeNetwork {
    pub fn new(graph: Graph, root: NodeId) -> Result<Self> {
        if !graph.is_tree() {
            return Err(Error::network(format!(
                "{} nodes need exactly {} edges to form a tree, found {}",
                graph.node_count(),
                graph.node_count() - 1,
                graph.edge_count()
            )));
        }
        let root = graph.index_of(root)?;
        let n = graph.node_count();
        let mut parent = vec![None; n];
        let mut parent_edge = vec![None; n];
        let mut children = vec![Vec::new(); n];
        let mut bfs_order = Vec::with_capacity(n);
        let mut visited = vec![false; n];
        let mut queue = VecDeque::from([root]);
        visited[root] = true;
        while let Some(u) = queue.pop_front() {
            bfs_order.push(u);
            for &v in graph.neighbours(u) {
                if !visited[v] {
                    visited[v] = true;
                    parent[v] = Some(u);
                    parent_edge[v] = Some(graph.edge_index(graph.id(u), graph.id(v))?);
                    children[u].push(v);
                    queue.push_back(v);
                }
            }
        }

        let mut post_order = Vec::with_capacity(n);
        let mut stack = vec![(root, 0usize)];
        while let Some((u, next)) = stack.pop() {
            if next < children[u].len() {
                stack.push((u, next + 1));
                stack.push((children[u][next], 0));
            } else {
                post_order.push(u);
            }
        }

        let mut subtree_max: Vec<u32> = (0..n).map(|i| graph.max_value(i)).collect();
        for &u in &post_order {
            if let Some(p) = parent[u] {
                subtree_max[p] += subtree_max[u];
            }
        }

        Ok(TreeNetwork {
            graph,
            root,
            parent,
            parent_edge,
            children,
            post_order,
            bfs_order,
            subtree_max,
        })
    }

    /// Builds a tree from the file schema; `root` overrides the file's root,
    /// and the smallest id is used when neither names one.
    pub fn from_file(file: &NetworkFile, root: Option<NodeId>) -> Result<Self> {
        let graph = Graph::from_file(file)?;
        let root = root.or(file.root).unwrap_or(graph.id(0));
        Self::new(graph, root)
    }

    /// Path `ids[0] - ids[1] - ...` rooted at its first node.
    pub fn path(ids: &[NodeId], alphabet: &[u32]) -> Result<Self> {
        let nodes = ids
            .iter()
            .zip(alphabet)
            .map(|(&id, &alphabet)| crate::network::NodeEntry { id, alphabet })
            .collect::<Vec<_>>();
        let edges: Vec<[NodeId; 2]> = ids.windows(2).map(|w| [w[0], w[1]]).collect();
        Self::new(Graph::new(&nodes, &edges)?, ids[0])
    }

    /// Star with centre 0 and leaves `1..n`, rooted at the centre.
    pub fn star(alphabet: &[u32]) -> Result<Self> {
        let edges: Vec<[NodeId; 2]> = (1..alphabet.len() as NodeId).map(|v| [0, v]).collect();
        Self::new(Graph::new(&crate::network::entries(alphabet), &edges)?, 0)
    }

    pub fn rerooted(&self, root: NodeId) -> Result<Self> {
        Self::new(self.graph.clone(), root)
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn root(&self) -> NodeId {
        self.graph.id(self.root)
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn parent_of(&self, index: usize) -> Option<usize> {
        self.parent[index]
    }

    pub fn children_of(&self, index: usize) -> &[usize] {
        &self.children[index]
    }

    /// Largest sum the subtree below (and including) a node can reach.
    pub fn subtree_max(&self, index: usize) -> u32 {
        self.subtree_max[index]
    }

    pub fn total_max_sum(&self) -> u32 {
        self.subtree_max[self.root]
    }

    /// Child endpoint (index) of an edge under the current rooting.
    fn child_of_edge(&self, e: usize) -> usize {
        let (u, v) = self.graph.edges()[e];
        if self.parent[v] == Some(u) {
            v
        } else {
            u
        }
    }
}

/// Splits the tree at `edge` and returns `(A_e, rest)` as sorted id lists:
/// `A_e` is the side with the smaller maximum sum, ties going to the side
/// that holds the smaller node id.
pub fn edge_components(tree: &TreeNetwork, edge: (NodeId, NodeId)) -> Result<(Vec<NodeId>, Vec<NodeId>)> {
    let e = tree.graph.edge_index(edge.0, edge.1)?;
    let child = tree.child_of_edge(e);
    let mut below = BTreeSet::new();
    let mut stack = vec![child];
    while let Some(u) = stack.pop() {
        below.insert(u);
        stack.extend_from_slice(&tree.children[u]);
    }
    let above: Vec<usize> = (0..tree.node_count()).filter(|i| !below.contains(i)).collect();
    let below: Vec<usize> = below.into_iter().collect();
    let (s_below, s_above) = (tree.subtree_max[child], tree.total_max_sum() - tree.subtree_max[child]);
    let below_first = match s_below.cmp(&s_above) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => below[0] < above[0],
    };
    let ids = |side: &[usize]| side.iter().map(|&i| tree.graph.id(i)).collect::<Vec<_>>();
    Ok(if below_first {
        (ids(&below), ids(&above))
    } else {
        (ids(&above), ids(&below))
    })
}

fn side_max(tree: &TreeNetwork, side: &[NodeId]) -> Result<u32> {
    side.iter()
        .map(|&id| tree.graph.index_of(id).map(|i| tree.graph.max_value(i)))
        .sum()
}

/// Per-instance bounds for one edge: the two-node bounds with the two
/// sides' maximum sums as the node maxima.
pub fn edge_complexity<F: Real>(
    tree: &TreeNetwork,
    spec: &FunctionSpec,
    edge: (NodeId, NodeId),
) -> Result<BoundReport<F>> {
    let (a_e, _) = edge_components(tree, edge)?;
    let s_e = side_max(tree, &a_e)?;
    let rest = tree.total_max_sum() - s_e;
    match *spec {
        FunctionSpec::Threshold { theta } => Ok(threshold_complexity(theta, s_e, rest)),
        FunctionSpec::Interval { a, b } => interval_bounds(a, b, s_e, rest),
        FunctionSpec::General { .. } => Err(Error::domain(
            "edge bounds exist only for threshold and interval functions",
        )),
    }
}

/// Bits one edge carried in a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct LinkBits {
    pub up: u64,
    pub down: u64,
}

impl LinkBits {
    pub fn total(&self) -> u64 {
        self.up + self.down
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TreeRun {
    pub transcript: Transcript,
    /// Decoded function block per node, in ascending id order.
    pub decoded: Vec<Vec<u32>>,
    /// Traffic per edge, in the network's edge order.
    pub edge_bits: Vec<LinkBits>,
}

/// A tree protocol with all per-edge codebooks prepared.
#[derive(Clone, Debug)]
pub struct TreeProtocol {
    tree: TreeNetwork,
    spec: FunctionSpec,
    block_length: usize,
    /// Scheme on the edge from each non-root node to its parent.
    links: Vec<Option<LinkScheme>>,
}

impl TreeProtocol {
    pub fn new(tree: TreeNetwork, spec: FunctionSpec, block_length: usize) -> Result<Self> {
        if block_length == 0 {
            return Err(Error::domain("block length must be at least 1"));
        }
        let total = tree.total_max_sum();
        spec.check_domain(total)?;
        let links = (0..tree.node_count())
            .map(|v| {
                tree.parent[v]
                    .map(|_| LinkScheme::new(&spec, tree.subtree_max[v], total - tree.subtree_max[v], block_length))
                    .transpose()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TreeProtocol {
            tree,
            spec,
            block_length,
            links,
        })
    }

    pub fn tree(&self) -> &TreeNetwork {
        &self.tree
    }

    pub fn spec(&self) -> &FunctionSpec {
        &self.spec
    }

    pub fn block_length(&self) -> usize {
        self.block_length
    }

    fn link(&self, v: usize) -> &LinkScheme {
        self.links[v].as_ref().expect("non-root node has an uplink")
    }

    /// Scheme on the given edge (index into the network's edge list).
    pub fn edge_link(&self, e: usize) -> &LinkScheme {
        self.link(self.tree.child_of_edge(e))
    }

    /// Maximum sums `(child side, parent side)` of an edge.
    pub fn edge_sides(&self, e: usize) -> (u32, u32) {
        let c = self.tree.child_of_edge(e);
        let s = self.tree.subtree_max[c];
        (s, self.tree.total_max_sum() - s)
    }

    pub fn input_space(&self, guard: u64) -> Result<AssignmentSpace> {
        AssignmentSpace::new(self.tree.graph.alphabet().to_vec(), self.block_length, guard)
    }

    fn check_assignment(&self, assignment: &[Vec<u32>]) -> Result<()> {
        let g = &self.tree.graph;
        if assignment.len() != g.node_count() {
            return Err(Error::domain(format!(
                "{} blocks for {} nodes",
                assignment.len(),
                g.node_count()
            )));
        }
        for (i, block) in assignment.iter().enumerate() {
            if block.len() != self.block_length {
                return Err(Error::domain(format!("node {} block has wrong length", g.id(i))));
            }
            if let Some(&x) = block.iter().find(|&&x| x > g.max_value(i)) {
                return Err(Error::domain(format!("node {} letter {x} outside alphabet", g.id(i))));
            }
        }
        Ok(())
    }

    /// Partial sum representative of `v`'s subtree for every instance,
    /// given the classes heard from its children.
    fn partial_sums(&self, v: usize, own: &[u32], heard: &[Option<Vec<usize>>]) -> Result<Vec<u32>> {
        let mut sums = own.to_vec();
        for &c in &self.tree.children[v] {
            let classes = heard[c].as_ref().ok_or_else(|| {
                Error::Protocol(format!(
                    "node {} sent before hearing child {}",
                    self.tree.graph.id(v),
                    self.tree.graph.id(c)
                ))
            })?;
            let link = self.link(c);
            for (s, &k) in sums.iter_mut().zip(classes) {
                *s += link.representative(k);
            }
        }
        Ok(sums)
    }

    fn classes_for(&self, v: usize, sums: &[u32]) -> Result<Vec<usize>> {
        let link = self.link(v);
        sums.iter().map(|&s| link.class_of(s)).collect()
    }

    pub fn run(&self, assignment: &[Vec<u32>]) -> Result<TreeRun> {
        self.check_assignment(assignment)?;
        let t = &self.tree;
        let g = &t.graph;
        let n = g.node_count();
        let mut transcript = Transcript::default();
        let mut edge_bits = vec![LinkBits::default(); g.edge_count()];
        // classes of each child's subtree, as decoded by its parent
        let mut heard: Vec<Option<Vec<usize>>> = vec![None; n];
        // classes each node computed for itself
        let mut own_classes: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut decoded: Vec<Option<Vec<u32>>> = vec![None; n];

        for &v in &t.post_order {
            let sums = self.partial_sums(v, &assignment[v], &heard)?;
            match t.parent[v] {
                Some(p) => {
                    let link = self.link(v);
                    let classes = self.classes_for(v, &sums)?;
                    let bits = link.encode_classes(&classes);
                    heard[v] = Some(link.decode_classes(&bits)?);
                    edge_bits[t.parent_edge[v].unwrap()].up += bits.len() as u64;
                    transcript.send(g.id(v), g.id(p), Phase::Forward, bits);
                    own_classes[v] = classes;
                }
                None => {
                    decoded[v] = Some(sums.iter().map(|&s| self.spec.eval(s)).collect::<Result<_>>()?);
                }
            }
        }

        for &v in &t.bfs_order {
            let values = decoded[v]
                .clone()
                .ok_or_else(|| Error::Protocol(format!("node {} replies before knowing f", g.id(v))))?;
            for &c in &t.children[v] {
                let link = self.link(c);
                let child_classes = heard[c].as_ref().expect("child heard in convergecast");
                let reply = link.encode_reply(child_classes, &values)?;
                decoded[c] = Some(link.decode_reply(&own_classes[c], &reply)?);
                edge_bits[t.parent_edge[c].unwrap()].down += reply.len() as u64;
                transcript.send(g.id(v), g.id(c), Phase::Reply, reply);
            }
        }

        Ok(TreeRun {
            transcript,
            decoded: decoded.into_iter().map(|d| d.unwrap_or_default()).collect(),
            edge_bits,
        })
    }

    /// True function block by direct evaluation of the sums.
    pub fn truth(&self, assignment: &[Vec<u32>]) -> Result<Vec<u32>> {
        (0..self.block_length)
            .map(|i| self.spec.eval(assignment.iter().map(|b| b[i]).sum()))
            .collect()
    }

    /// Replays a transcript event by event, letting each node act only on
    /// its own block and the messages delivered to it so far. Returns false
    /// when a message goes the wrong way, arrives before the sender could
    /// know its content, differs from what the sender would compute, or
    /// when a node ends without the function block.
    pub fn replay(&self, assignment: &[Vec<u32>], transcript: &Transcript) -> Result<bool> {
        self.check_assignment(assignment)?;
        let t = &self.tree;
        let g = &t.graph;
        let n = g.node_count();
        let mut heard: Vec<Option<Vec<usize>>> = vec![None; n];
        let mut own_classes: Vec<Option<Vec<usize>>> = vec![None; n];
        let mut knows: Vec<Option<Vec<u32>>> = vec![None; n];
        let mut forwarded = vec![false; n];
        let mut replied = vec![false; n];
        let mut events = transcript.events.iter().peekable();

        // Empty messages are never recorded, so a node acts on them as soon
        // as it is able to; this loop advances every silent step first.
        loop {
            let mut progressed = false;
            for v in 0..n {
                if t.parent[v].is_none() {
                    if knows[v].is_none() && t.children[v].iter().all(|&c| heard[c].is_some()) {
                        let sums = self.partial_sums(v, &assignment[v], &heard)?;
                        knows[v] = Some(sums.iter().map(|&s| self.spec.eval(s)).collect::<Result<_>>()?);
                        progressed = true;
                    }
                    continue;
                }
                let link = self.link(v);
                if !forwarded[v] && t.children[v].iter().all(|&c| heard[c].is_some()) {
                    let sums = self.partial_sums(v, &assignment[v], &heard)?;
                    let classes = self.classes_for(v, &sums)?;
                    if link.encode_classes(&classes).is_empty() {
                        heard[v] = Some(classes.clone());
                        forwarded[v] = true;
                        progressed = true;
                    }
                    own_classes[v] = Some(classes);
                }
                let p = t.parent[v].unwrap();
                if !replied[v] && knows[p].is_some() {
                    if let Some(child_classes) = heard[v].as_ref() {
                        let reply = link.encode_reply(child_classes, knows[p].as_ref().unwrap())?;
                        if reply.is_empty() {
                            replied[v] = true;
                            if let Some(own) = own_classes[v].as_ref() {
                                knows[v] = Some(link.decode_reply(own, &reply)?);
                            }
                            progressed = true;
                        }
                    }
                }
            }
            if progressed {
                continue;
            }
            let Some(ev) = events.next() else { break };
            let (Ok(from), Ok(to)) = (g.index_of(ev.from), g.index_of(ev.to)) else {
                return Ok(false);
            };
            match ev.phase {
                Phase::Forward => {
                    if t.parent[from] != Some(to) || forwarded[from] {
                        return Ok(false);
                    }
                    let Some(classes) = own_classes[from].clone() else {
                        return Ok(false);
                    };
                    let link = self.link(from);
                    if link.encode_classes(&classes) != ev.bits {
                        return Ok(false);
                    }
                    let Ok(decoded) = link.decode_classes(&ev.bits) else {
                        return Ok(false);
                    };
                    heard[from] = Some(decoded);
                    forwarded[from] = true;
                }
                Phase::Reply => {
                    if t.parent[to] != Some(from) || replied[to] {
                        return Ok(false);
                    }
                    let (Some(values), Some(child_classes)) = (knows[from].as_ref(), heard[to].as_ref()) else {
                        return Ok(false);
                    };
                    let link = self.link(to);
                    if link.encode_reply(child_classes, values)? != ev.bits {
                        return Ok(false);
                    }
                    let own = own_classes[to].as_ref().expect("heard implies classes computed");
                    knows[to] = Some(link.decode_reply(own, &ev.bits)?);
                    replied[to] = true;
                }
            }
        }
        Ok(knows.iter().all(Option::is_some) && (0..n).all(|v| t.parent[v].is_none() || (forwarded[v] && replied[v])))
    }
}

/// Runs the tree protocol on one assignment (blocks in ascending id order).
pub fn run_tree_protocol(
    tree: &TreeNetwork,
    spec: &FunctionSpec,
    block_length: usize,
    assignment: &[Vec<u32>],
) -> Result<TreeRun> {
    TreeProtocol::new(tree.clone(), spec.clone(), block_length)?.run(assignment)
}

/// Worst-case traffic on one edge with the bounds it is checked against.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeAccount<F: Real> {
    pub edge: (NodeId, NodeId),
    pub up_bits: u64,
    pub down_bits: u64,
    pub total_bits: u64,
    /// `B log2` of the per-instance lower bound count.
    pub bound_lower: F,
    /// `ceil(B log2)` of the per-instance upper bound count.
    pub bound_upper: F,
    pub lower_count: u64,
    pub upper_count: u64,
    /// Index of the first assignment attaining `total_bits`.
    pub witness: u64,
}

impl<F: Real> EdgeAccount<F> {
    pub fn within_bounds(&self, block_length: usize) -> bool {
        let lo = crate::bounds::floor_block_bits(self.lower_count, block_length);
        let hi = ceil_block_bits(self.upper_count, block_length);
        lo <= self.total_bits && self.total_bits <= hi
    }
}

/// Integer counts `(lower, upper)` inside the per-instance logarithms for
/// a link whose sides reach maximum sums `sides`: the fooling-set size for
/// thresholds; for other functions the stated sum-interval lower bound
/// (when in its regime) and the count the separation scheme achieves.
pub fn link_bound_counts(spec: &FunctionSpec, link: &LinkScheme, sides: (u32, u32)) -> Result<(u64, u64)> {
    let achieved = link.partition().scheme_count();
    match *spec {
        FunctionSpec::Threshold { theta } => {
            let r = threshold_complexity::<f64>(theta, sides.0, sides.1);
            Ok((r.lower_count, r.upper_count))
        }
        FunctionSpec::Interval { a, b } => {
            let r = interval_bounds::<f64>(a, b, sides.0, sides.1)?;
            Ok((if r.valid { r.lower_count } else { 1 }, achieved))
        }
        FunctionSpec::General { .. } => Ok((1, achieved)),
    }
}

pub fn edge_bound_counts(proto: &TreeProtocol, e: usize) -> Result<(u64, u64)> {
    link_bound_counts(proto.spec(), proto.edge_link(e), proto.edge_sides(e))
}

/// Per-edge worst case over every input assignment.
pub fn worst_case_edge_bits<F: Real>(
    tree: &TreeNetwork,
    spec: &FunctionSpec,
    block_length: usize,
) -> Result<Vec<EdgeAccount<F>>> {
    let proto = TreeProtocol::new(tree.clone(), spec.clone(), block_length)?;
    let space = proto.input_space(EXHAUSTIVE_GUARD)?;
    let edges = tree.graph.edge_count();
    let identity = || vec![(0u64, u64::MAX); edges];
    let worst = (0..space.size())
        .into_par_iter()
        .try_fold(identity, |mut acc, idx| -> Result<_> {
            let a = space.assignment(idx);
            let run = proto.run(&a)?;
            let truth = proto.truth(&a)?;
            if run.decoded.iter().any(|d| *d != truth) {
                return Err(Error::Protocol(format!("decode error on assignment {a:?}")));
            }
            for (slot, bits) in acc.iter_mut().zip(&run.edge_bits) {
                *slot = pick_worst(*slot, (bits.total(), idx));
            }
            Ok(acc)
        })
        .try_reduce(identity, |a, b| {
            Ok(a.into_iter().zip(b).map(|(x, y)| pick_worst(x, y)).collect())
        })?;

    worst
        .into_iter()
        .enumerate()
        .map(|(e, (_, idx))| {
            let idx = if idx == u64::MAX { 0 } else { idx };
            let run = proto.run(&space.assignment(idx))?;
            let bits = run.edge_bits[e];
            let (lower_count, upper_count) = edge_bound_counts(&proto, e)?;
            Ok(EdgeAccount {
                edge: tree.graph.edge_ids(e),
                up_bits: bits.up,
                down_bits: bits.down,
                total_bits: bits.total(),
                bound_lower: F::from_count(block_length as u64) * F::log2_count(lower_count),
                bound_upper: F::from_count(ceil_block_bits(upper_count, block_length)),
                lower_count,
                upper_count,
                witness: idx,
            })
        })
        .collect()
}
