//! Verification sweeps: run a protocol on every (or on pseudorandom) input
//! assignments, check that all nodes decode the right values and that each
//! message is causally producible, and compare per-edge worst cases with
//! the bounds.
//!
//! Random assignments come from SplitMix64 seeded with the raw seed. Each
//! trial draws `next_u64() % alphabet` for node 0's instances in order,
//! then node 1's, and so on, nodes in ascending id order.

use std::io::Write;

use rand_core::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::{ceil_block_bits, floor_block_bits};
use crate::error::{Error, Result};
use crate::funckernel::FunctionSpec;
use crate::graphnet::spanning_tree;
use crate::network::Graph;
use crate::real::Real;
use crate::space::{AssignmentSpace, EXHAUSTIVE_GUARD};
use crate::treenet::{edge_bound_counts, link_bound_counts, TreeNetwork, TreeProtocol};
use crate::twonode::{pick_worst, NodeId, Starter, TwoNodeInstance, TwoNodeProtocol};

/// Trials generated and checked together in a random sweep.
const RANDOM_CHUNK: u64 = 1 << 14;

#[derive(Clone, Debug)]
pub enum Scenario {
    /// Nodes 1 and 2 with maximum letters `m1`, `m2`.
    TwoNode {
        m1: u32,
        m2: u32,
        spec: FunctionSpec,
        starter: Starter,
    },
    Tree {
        tree: TreeNetwork,
        spec: FunctionSpec,
    },
    /// A general network running the tree protocol on one spanning tree;
    /// the remaining edges stay silent.
    SubtreeScheme {
        graph: Graph,
        tree_edges: Vec<(NodeId, NodeId)>,
        spec: FunctionSpec,
    },
}

impl Scenario {
    pub fn label(&self) -> &'static str {
        match self {
            Scenario::TwoNode { .. } => "two-node",
            Scenario::Tree { .. } => "tree",
            Scenario::SubtreeScheme { .. } => "subtree-scheme",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeCheck<F: Real> {
    pub edge: (NodeId, NodeId),
    /// Per-instance lower bound in bits.
    pub lower: F,
    /// Per-instance upper bound in bits.
    pub upper: F,
    /// `floor(B * lower)`.
    pub lower_bits: u64,
    /// `ceil(B * upper)`.
    pub upper_bits: u64,
    /// Largest traffic seen on the edge.
    pub measured: u64,
    /// First assignment (one block per node, ascending id) reaching `measured`.
    pub witness: Vec<Vec<u32>>,
    pub within_bounds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport<F: Real> {
    pub scenario: String,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub block_length: usize,
    pub instances_checked: u64,
    pub decode_errors: u64,
    pub causality_violations: u64,
    pub edges: Vec<EdgeCheck<F>>,
}

impl<F: Real> VerificationReport<F> {
    pub fn passed(&self) -> bool {
        self.decode_errors == 0 && self.causality_violations == 0 && self.edges.iter().all(|e| e.within_bounds)
    }

    pub fn worst_total(&self) -> u64 {
        self.edges.iter().map(|e| e.measured).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per edge: `edge,lower,measured,upper,pass`, bounds in bits
    /// for the whole block.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["edge", "lower", "measured", "upper", "pass"])?;
        for e in &self.edges {
            w.write_record([
                format!("{}-{}", e.edge.0, e.edge.1),
                e.lower_bits.to_string(),
                e.measured.to_string(),
                e.upper_bits.to_string(),
                e.within_bounds.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is ascii"))
    }
}

/// What one run of a scenario produced.
struct Outcome {
    edge_bits: Vec<u64>,
    decoded_ok: bool,
    causal: bool,
}

enum Prepared {
    TwoNode(TwoNodeProtocol),
    Tree {
        proto: TreeProtocol,
        /// Network edge index of each tree edge.
        edge_map: Vec<usize>,
        net_edges: usize,
    },
}

struct Bench {
    prepared: Prepared,
    alphabet: Vec<u32>,
    edges: Vec<(NodeId, NodeId)>,
    /// `(lower, upper)` counts per edge.
    counts: Vec<(u64, u64)>,
}

impl Bench {
    fn new(scenario: &Scenario, block_length: usize) -> Result<Self> {
        match scenario {
            Scenario::TwoNode { m1, m2, spec, starter } => {
                let proto = TwoNodeProtocol::new(TwoNodeInstance::new(*m1, *m2, spec.clone(), block_length, *starter))?;
                let counts = vec![link_bound_counts(spec, proto.link(), (*m1, *m2))?];
                Ok(Bench {
                    prepared: Prepared::TwoNode(proto),
                    alphabet: vec![m1 + 1, m2 + 1],
                    edges: vec![(1, 2)],
                    counts,
                })
            }
            Scenario::Tree { tree, spec } => {
                let proto = TreeProtocol::new(tree.clone(), spec.clone(), block_length)?;
                let g = tree.graph();
                let counts = (0..g.edge_count())
                    .map(|e| edge_bound_counts(&proto, e))
                    .collect::<Result<_>>()?;
                Ok(Bench {
                    alphabet: g.alphabet().to_vec(),
                    edges: (0..g.edge_count()).map(|e| g.edge_ids(e)).collect(),
                    counts,
                    prepared: Prepared::Tree {
                        edge_map: (0..g.edge_count()).collect(),
                        net_edges: g.edge_count(),
                        proto,
                    },
                })
            }
            Scenario::SubtreeScheme {
                graph,
                tree_edges,
                spec,
            } => {
                let tree = spanning_tree(graph, tree_edges, None)?;
                let proto = TreeProtocol::new(tree, spec.clone(), block_length)?;
                let sub = proto.tree().graph();
                let mut counts = vec![(1, 1); graph.edge_count()];
                let mut edge_map = Vec::with_capacity(sub.edge_count());
                for e in 0..sub.edge_count() {
                    let (u, v) = sub.edge_ids(e);
                    let ne = graph.edge_index(u, v)?;
                    counts[ne] = edge_bound_counts(&proto, e)?;
                    edge_map.push(ne);
                }
                Ok(Bench {
                    alphabet: graph.alphabet().to_vec(),
                    edges: (0..graph.edge_count()).map(|e| graph.edge_ids(e)).collect(),
                    counts,
                    prepared: Prepared::Tree {
                        proto,
                        edge_map,
                        net_edges: graph.edge_count(),
                    },
                })
            }
        }
    }

    fn run(&self, a: &[Vec<u32>]) -> Outcome {
        let failed = |edges: usize| Outcome {
            edge_bits: vec![0; edges],
            decoded_ok: false,
            causal: true,
        };
        match &self.prepared {
            Prepared::TwoNode(proto) => {
                let (Ok(run), Ok(truth)) = (proto.run(&a[0], &a[1]), proto.truth(&a[0], &a[1])) else {
                    return failed(1);
                };
                Outcome {
                    edge_bits: vec![run.transcript.total_bits()],
                    decoded_ok: run.decoded_1 == truth && run.decoded_2 == truth,
                    causal: proto.replay(&a[0], &a[1], &run.transcript).unwrap_or(false),
                }
            }
            Prepared::Tree {
                proto,
                edge_map,
                net_edges,
            } => {
                let (Ok(run), Ok(truth)) = (proto.run(a), proto.truth(a)) else {
                    return failed(*net_edges);
                };
                let mut edge_bits = vec![0; *net_edges];
                for (bits, &ne) in run.edge_bits.iter().zip(edge_map) {
                    edge_bits[ne] = bits.total();
                }
                Outcome {
                    edge_bits,
                    decoded_ok: run.decoded.iter().all(|d| *d == truth),
                    causal: proto.replay(a, &run.transcript).unwrap_or(false),
                }
            }
        }
    }

    fn finish<F: Real>(
        &self,
        scenario: &Scenario,
        mode: &str,
        seed: Option<u64>,
        block_length: usize,
        tally: Tally,
        witness: impl Fn(usize, u64) -> Vec<Vec<u32>>,
    ) -> VerificationReport<F> {
        let b = block_length;
        let edges = self
            .edges
            .iter()
            .zip(&self.counts)
            .zip(&tally.worst)
            .enumerate()
            .map(|(e, ((&edge, &(lo, hi)), &(measured, key)))| {
                let lower_bits = floor_block_bits(lo, b);
                let upper_bits = ceil_block_bits(hi, b);
                EdgeCheck {
                    edge,
                    lower: F::log2_count(lo),
                    upper: F::log2_count(hi),
                    lower_bits,
                    upper_bits,
                    measured,
                    witness: witness(e, key),
                    within_bounds: lower_bits <= measured && measured <= upper_bits,
                }
            })
            .collect();
        VerificationReport {
            scenario: scenario.label().to_string(),
            mode: mode.to_string(),
            seed,
            block_length: b,
            instances_checked: tally.checked,
            decode_errors: tally.errors,
            causality_violations: tally.violations,
            edges,
        }
    }
}

/// Mergeable sweep summary; `worst` holds `(bits, key)` per edge where the
/// key orders the assignments and breaks ties toward the first.
#[derive(Clone, Debug)]
struct Tally {
    checked: u64,
    errors: u64,
    violations: u64,
    worst: Vec<(u64, u64)>,
}

impl Tally {
    fn new(edges: usize) -> Self {
        Tally {
            checked: 0,
            errors: 0,
            violations: 0,
            worst: vec![(0, u64::MAX); edges],
        }
    }

    fn add(mut self, key: u64, o: Outcome) -> Self {
        self.checked += 1;
        self.errors += u64::from(!o.decoded_ok);
        self.violations += u64::from(!o.causal);
        for (slot, bits) in self.worst.iter_mut().zip(o.edge_bits) {
            *slot = pick_worst(*slot, (bits, key));
        }
        self
    }

    fn merge(mut self, other: Tally) -> Self {
        self.checked += other.checked;
        self.errors += other.errors;
        self.violations += other.violations;
        for (slot, w) in self.worst.iter_mut().zip(other.worst) {
            *slot = pick_worst(*slot, w);
        }
        self
    }
}

/// Runs the scenario on every assignment of length-`B` blocks.
pub fn exhaustive_verify<F: Real>(scenario: &Scenario, block_length: usize) -> Result<VerificationReport<F>> {
    exhaustive_verify_guarded(scenario, block_length, EXHAUSTIVE_GUARD)
}

pub fn exhaustive_verify_guarded<F: Real>(
    scenario: &Scenario,
    block_length: usize,
    guard: u64,
) -> Result<VerificationReport<F>> {
    let bench = Bench::new(scenario, block_length)?;
    let space = AssignmentSpace::new(bench.alphabet.clone(), block_length, guard).map_err(|e| match e {
        Error::Resource(msg) => Error::Resource(format!("{msg}; use random verification instead")),
        other => other,
    })?;
    let edges = bench.edges.len();
    let tally = (0..space.size())
        .into_par_iter()
        .fold(
            || (Tally::new(edges), space.empty_assignment()),
            |(tally, mut buf), idx| {
                space.fill(idx, &mut buf);
                let o = bench.run(&buf);
                (tally.add(idx, o), buf)
            },
        )
        .map(|(t, _)| t)
        .reduce(|| Tally::new(edges), Tally::merge);
    log::debug!("exhaustive sweep checked {} assignments", tally.checked);
    let witness = |_: usize, key: u64| space.assignment(if key == u64::MAX { 0 } else { key });
    Ok(bench.finish(scenario, "exhaustive", None, block_length, tally, witness))
}

/// The pseudorandom assignment stream used by [`random_verify`].
pub struct AssignmentStream {
    rng: SplitMix64,
    alphabet: Vec<u32>,
    block_length: usize,
}

impl AssignmentStream {
    pub fn new(alphabet: Vec<u32>, block_length: usize, seed: u64) -> Self {
        AssignmentStream {
            rng: SplitMix64::seed_from_u64(seed),
            alphabet,
            block_length,
        }
    }

    pub fn next_assignment(&mut self) -> Vec<Vec<u32>> {
        self.alphabet
            .iter()
            .map(|&l| {
                (0..self.block_length)
                    .map(|_| (self.rng.next_u64() % u64::from(l)) as u32)
                    .collect()
            })
            .collect()
    }
}

/// Runs the scenario on `trials` pseudorandom assignments. The worst cases
/// it reports are lower estimates of the true ones.
pub fn random_verify<F: Real>(
    scenario: &Scenario,
    block_length: usize,
    trials: u64,
    seed: u64,
) -> Result<VerificationReport<F>> {
    if trials == 0 {
        return Err(Error::domain("random verification needs at least one trial"));
    }
    let bench = Bench::new(scenario, block_length)?;
    let edges = bench.edges.len();
    let mut stream = AssignmentStream::new(bench.alphabet.clone(), block_length, seed);
    let mut tally = Tally::new(edges);
    let mut witnesses = vec![Vec::new(); edges];
    let mut base = 0u64;
    while base < trials {
        let len = RANDOM_CHUNK.min(trials - base);
        let chunk: Vec<Vec<Vec<u32>>> = (0..len).map(|_| stream.next_assignment()).collect();
        let part = chunk
            .par_iter()
            .enumerate()
            .fold(|| Tally::new(edges), |t, (i, a)| t.add(base + i as u64, bench.run(a)))
            .reduce(|| Tally::new(edges), Tally::merge);
        tally = tally.merge(part);
        for (w, &(_, key)) in witnesses.iter_mut().zip(&tally.worst) {
            if key >= base && key < base + len {
                *w = chunk[(key - base) as usize].clone();
            }
        }
        base += len;
    }
    Ok(
        bench.finish(scenario, "random", Some(seed), block_length, tally, |e, _| {
            witnesses[e].clone()
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treenet::TreeNetwork;

    fn and_scenario(starter: Starter) -> Scenario {
        Scenario::TwoNode {
            m1: 1,
            m2: 1,
            spec: FunctionSpec::threshold(2),
            starter,
        }
    }

    #[test]
    fn boolean_and_sweep() {
        let r = exhaustive_verify::<f64>(&and_scenario(Starter::One), 8).unwrap();
        assert_eq!(r.instances_checked, 65_536);
        assert_eq!((r.decode_errors, r.causality_violations), (0, 0));
        assert_eq!(r.edges[0].measured, 13);
        assert_eq!((r.edges[0].lower_bits, r.edges[0].upper_bits), (12, 13));
        assert!(r.passed());
    }

    #[test]
    fn constant_is_silent() {
        let s = Scenario::TwoNode {
            m1: 1,
            m2: 1,
            spec: FunctionSpec::threshold(0),
            starter: Starter::Two,
        };
        let r = exhaustive_verify::<f64>(&s, 4).unwrap();
        assert_eq!(r.edges[0].measured, 0);
        assert!(r.passed());
    }

    #[test]
    fn witness_replays_to_worst_case() {
        let tree = TreeNetwork::path(&[1, 2, 3], &[3, 2, 4]).unwrap();
        let spec = FunctionSpec::threshold(3);
        let r = exhaustive_verify::<f64>(
            &Scenario::Tree {
                tree: tree.clone(),
                spec: spec.clone(),
            },
            2,
        )
        .unwrap();
        let proto = TreeProtocol::new(tree, spec, 2).unwrap();
        for (e, check) in r.edges.iter().enumerate() {
            let run = proto.run(&check.witness).unwrap();
            assert_eq!(run.edge_bits[e].total(), check.measured);
        }
    }

    #[test]
    fn guard_suggests_random() {
        let s = Scenario::Tree {
            tree: TreeNetwork::star(&[2; 8]).unwrap(),
            spec: FunctionSpec::threshold(3),
        };
        match exhaustive_verify_guarded::<f64>(&s, 4, 1 << 20) {
            Err(Error::Resource(msg)) => assert!(msg.contains("random")),
            other => panic!("expected resource error, got {other:?}"),
        }
    }

    #[test]
    fn random_is_deterministic_and_below_exhaustive() {
        let s = Scenario::Tree {
            tree: TreeNetwork::path(&[1, 2, 3, 4], &[2, 3, 2, 2]).unwrap(),
            spec: FunctionSpec::threshold(3),
        };
        let a = random_verify::<f64>(&s, 3, 500, 7).unwrap();
        let b = random_verify::<f64>(&s, 3, 500, 7).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.to_csv().unwrap(), b.to_csv().unwrap());
        let full = exhaustive_verify::<f64>(&s, 3).unwrap();
        for (x, y) in a.edges.iter().zip(&full.edges) {
            assert!(x.measured <= y.measured);
        }
        assert!(a.passed() && full.passed());
        assert!(random_verify::<f64>(&s, 3, 0, 7).is_err());
    }

    #[test]
    fn stream_matches_reference_generator() {
        // first outputs of SplitMix64 from state 0
        let mut s = AssignmentStream::new(vec![u32::MAX], 2, 0);
        let a = s.next_assignment();
        assert_eq!(a[0][0], (0xe220a8397b1dcdafu64 % u64::from(u32::MAX)) as u32);
        assert_eq!(a[0][1], (0x6e789e6aa1b965f4u64 % u64::from(u32::MAX)) as u32);
    }

    #[test]
    fn subtree_scheme_leaves_other_edges_silent() {
        let net = Graph::complete(&[2; 4]).unwrap();
        let s = Scenario::SubtreeScheme {
            tree_edges: crate::graphnet::star_edges(&net, 0).unwrap(),
            graph: net,
            spec: FunctionSpec::threshold(2),
        };
        let r = exhaustive_verify::<f64>(&s, 2).unwrap();
        assert!(r.passed());
        for e in &r.edges {
            assert_eq!(e.measured, if e.edge.0 == 0 { 4 } else { 0 });
        }
    }

    #[test]
    fn csv_layout() {
        let r = exhaustive_verify::<f64>(&and_scenario(Starter::Two), 1).unwrap();
        assert_eq!(r.to_csv().unwrap(), "edge,lower,measured,upper,pass\n1-2,1,2,2,true\n");
    }
}
