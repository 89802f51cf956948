//! General graphs: cut-set lower bounds, aggregation along spanning trees,
//! and the star-mixing scheme on complete graphs together with its
//! approximation ratio against the cut-set optimum.

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::threshold_complexity;
use crate::error::{Error, Result};
use crate::funckernel::FunctionSpec;
use crate::network::Graph;
use crate::real::Real;
use crate::treenet::{worst_case_edge_bits, TreeNetwork};
use crate::twonode::NodeId;

/// Largest node count for which every bipartition is enumerated.
pub const MAX_CUT_NODES: usize = 16;

/// How a group of nodes is turned into a single super-node measurement.
///
/// `MaxValue` uses the largest reachable sum `sum (l_i - 1)`, which is what
/// the two-node reduction needs; `AlphabetSize` uses `sum l_i` literally.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SizeConvention {
    MaxValue,
    AlphabetSize,
}

impl SizeConvention {
    pub const BOTH: [SizeConvention; 2] = [SizeConvention::MaxValue, SizeConvention::AlphabetSize];

    pub fn weight(self, alphabet: u32) -> u32 {
        match self {
            SizeConvention::MaxValue => alphabet - 1,
            SizeConvention::AlphabetSize => alphabet,
        }
    }
}

fn threshold_of(spec: &FunctionSpec) -> Result<u32> {
    match *spec {
        FunctionSpec::Threshold { theta } => Ok(theta),
        _ => Err(Error::domain(
            "graph bounds are defined for sum-threshold functions only",
        )),
    }
}

fn weights(net: &Graph, conv: SizeConvention) -> Vec<u32> {
    net.alphabet().iter().map(|&l| conv.weight(l)).collect()
}

/// Bits per instance that must cross the cut separating `side` from the
/// rest of the network.
pub fn cutset_bound<F: Real>(net: &Graph, spec: &FunctionSpec, side: &[NodeId], conv: SizeConvention) -> Result<F> {
    let theta = threshold_of(spec)?;
    let mut members = vec![false; net.node_count()];
    for &id in side {
        let i = net.index_of(id)?;
        if std::mem::replace(&mut members[i], true) {
            return Err(Error::domain(format!("node {id} listed twice in cut side")));
        }
    }
    let count = members.iter().filter(|&&m| m).count();
    if count == 0 || count == net.node_count() {
        return Err(Error::domain("cut side must be a proper nonempty subset"));
    }
    let w = weights(net, conv);
    let inside: u32 = w.iter().zip(&members).filter(|(_, &m)| m).map(|(x, _)| x).sum();
    let total: u32 = w.iter().sum();
    Ok(threshold_complexity::<F>(theta, inside, total - inside).lower)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutRate<F: Real> {
    /// Minimum symmetric rate meeting every cut constraint.
    pub rate: F,
    /// A cut side attaining it.
    pub side: Vec<NodeId>,
    pub crossing_edges: usize,
    pub cut_bits: F,
}

/// Maximum over all bipartitions of (cut-set bound / crossing edges).
pub fn min_symmetric_cut_rate<F: Real>(net: &Graph, spec: &FunctionSpec, conv: SizeConvention) -> Result<CutRate<F>> {
    let theta = threshold_of(spec)?;
    let n = net.node_count();
    if n > MAX_CUT_NODES {
        return Err(Error::resource(format!(
            "{n} nodes exceed the {MAX_CUT_NODES}-node cut enumeration guard"
        )));
    }
    if n < 2 {
        return Err(Error::domain("cuts need at least two nodes"));
    }
    let w = weights(net, conv);
    let total: u32 = w.iter().sum();
    // the last node always sits outside the side, so each bipartition is seen once
    let evaluate = |mask: u32| -> (F, u32, usize, F) {
        let inside: u32 = (0..n - 1).filter(|&i| mask >> i & 1 == 1).map(|i| w[i]).sum();
        let crossing = net
            .edges()
            .iter()
            .filter(|&&(u, v)| (mask >> u & 1) != (mask >> v & 1))
            .count();
        let bits = threshold_complexity::<F>(theta, inside, total - inside).lower;
        (bits / F::from_count(crossing as u64), mask, crossing, bits)
    };
    let best = (1..1u32 << (n - 1))
        .into_par_iter()
        .map(evaluate)
        .reduce_with(|a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
        .expect("at least one cut");
    Ok(CutRate {
        rate: best.0,
        side: (0..n - 1)
            .filter(|&i| best.1 >> i & 1 == 1)
            .map(|i| net.id(i))
            .collect(),
        crossing_edges: best.2,
        cut_bits: best.3,
    })
}

/// One rate per network edge, in the network's edge order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateVector<F: Real> {
    pub edges: Vec<(NodeId, NodeId)>,
    pub rates: Vec<F>,
}

impl<F: Real> RateVector<F> {
    pub fn zeros(net: &Graph) -> Self {
        RateVector {
            edges: (0..net.edge_count()).map(|e| net.edge_ids(e)).collect(),
            rates: vec![F::zero(); net.edge_count()],
        }
    }

    /// Largest entry: the symmetric rate this vector needs.
    pub fn max(&self) -> F {
        self.rates.iter().copied().fold(F::zero(), F::max)
    }

    pub fn is_symmetric(&self, tol: F) -> bool {
        let max = self.max();
        self.rates.iter().all(|&r| (max - r).abs() <= tol)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StarMix<F: Real> {
    pub r_ach: F,
    pub rates: RateVector<F>,
    /// Closed-form ceiling `(2/n) min(log2(2 theta + 1), max_i log2(2 l_i + 2))`
    /// with the threshold reflected into the lower half of its range.
    pub formula_bound: F,
}

/// Per-instance cost of node `i` as a star leaf: the two-node complexity of
/// the leaf against everyone else.
fn leaf_costs<F: Real>(net: &Graph, theta: u32, conv: SizeConvention) -> Vec<F> {
    let w = weights(net, conv);
    let total: u32 = w.iter().sum();
    w.iter()
        .map(|&wi| threshold_complexity::<F>(theta, wi, total - wi).lower)
        .collect()
}

/// Uses each of the `n` stars of a complete graph for `1/n` of the block.
/// Edge `(i, j)` is a spoke of star `i` and of star `j`, so its rate is
/// `(c_i + c_j) / n` where `c_k` is the cost of `k` as a leaf.
pub fn star_mix_rate<F: Real>(net: &Graph, spec: &FunctionSpec, conv: SizeConvention) -> Result<StarMix<F>> {
    let theta = threshold_of(spec)?;
    if !net.is_complete() {
        return Err(Error::network("star mixing needs a complete graph"));
    }
    let n = F::from_count(net.node_count() as u64);
    let costs = leaf_costs::<F>(net, theta, conv);
    let mut rates = RateVector::zeros(net);
    for (slot, &(u, v)) in rates.rates.iter_mut().zip(net.edges()) {
        *slot = (costs[u] + costs[v]) / n;
    }

    let w = weights(net, conv);
    let total: u32 = w.iter().sum();
    let formula_bound = if theta == 0 || theta > total {
        F::zero()
    } else {
        let reflected = theta.min(total - theta + 1) as u64;
        let widest = w
            .iter()
            .map(|&x| F::log2_count(2 * x as u64 + 2))
            .fold(F::zero(), F::max);
        F::from_count(2) / n * F::log2_count(2 * reflected + 1).min(widest)
    };
    Ok(StarMix {
        r_ach: rates.max(),
        rates,
        formula_bound,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoOptReport<F: Real> {
    pub convention: SizeConvention,
    pub nodes: usize,
    pub r_ach: F,
    pub r_cut: F,
    /// `r_ach / r_cut`, defined as 1 when both vanish.
    pub ratio: F,
    /// `2 (1 - 1/n)`.
    pub bound: F,
    pub holds: bool,
    pub tight: bool,
}

/// Absolute tolerance used when comparing rates and ratios.
pub const RATE_TOLERANCE: f64 = 1e-9;

pub fn two_opt_check<F: Real>(net: &Graph, spec: &FunctionSpec, conv: SizeConvention) -> Result<TwoOptReport<F>> {
    let mix = star_mix_rate::<F>(net, spec, conv)?;
    let cut = min_symmetric_cut_rate::<F>(net, spec, conv)?;
    let n = net.node_count();
    let bound = F::from_count(2) * (F::one() - F::one() / F::from_count(n as u64));
    let ratio = if cut.rate.is_zero() && mix.r_ach.is_zero() {
        F::one()
    } else {
        mix.r_ach / cut.rate
    };
    let tol = F::from_f64(RATE_TOLERANCE).unwrap();
    Ok(TwoOptReport {
        convention: conv,
        nodes: n,
        r_ach: mix.r_ach,
        r_cut: cut.rate,
        ratio,
        bound,
        holds: ratio <= bound + tol,
        tight: (ratio - bound).abs() <= tol,
    })
}

/// Spoke edges of the star centred at `center` in a complete graph.
pub fn star_edges(net: &Graph, center: NodeId) -> Result<Vec<(NodeId, NodeId)>> {
    net.index_of(center)?;
    Ok(net
        .ids()
        .iter()
        .filter(|&&v| v != center)
        .map(|&v| (center, v))
        .collect())
}

/// The subtree of `net` formed by `edges`, rooted at `root` (smallest id
/// when absent). Fails unless the edges span the network as a tree.
pub fn spanning_tree(net: &Graph, edges: &[(NodeId, NodeId)], root: Option<NodeId>) -> Result<TreeNetwork> {
    for &(u, v) in edges {
        net.edge_index(u, v)?;
    }
    let file = net.to_file(None);
    let sub = Graph::new(&file.nodes, &edges.iter().map(|&(u, v)| [u, v]).collect::<Vec<_>>())
        .map_err(|e| Error::network(format!("edges do not span the network: {e}")))?;
    if !sub.is_tree() {
        return Err(Error::network("spanning edges contain a cycle"));
    }
    TreeNetwork::new(sub, root.unwrap_or(net.id(0)))
}

/// Worst-case bits per network edge when aggregating along one spanning
/// tree for a block of length `B`; edges outside the tree carry nothing.
pub fn spanning_tree_scheme(
    net: &Graph,
    tree_edges: &[(NodeId, NodeId)],
    spec: &FunctionSpec,
    block_length: usize,
) -> Result<Vec<u64>> {
    let tree = spanning_tree(net, tree_edges, None)?;
    let accounts = worst_case_edge_bits::<f64>(&tree, spec, block_length)?;
    let mut bits = vec![0u64; net.edge_count()];
    for acc in accounts {
        bits[net.edge_index(acc.edge.0, acc.edge.1)?] = acc.total_bits;
    }
    Ok(bits)
}

/// Worst-case bits per instance on each network edge for one tree scheme.
pub fn tree_rate_vector<F: Real>(
    net: &Graph,
    tree_edges: &[(NodeId, NodeId)],
    spec: &FunctionSpec,
    block_length: usize,
) -> Result<RateVector<F>> {
    let bits = spanning_tree_scheme(net, tree_edges, spec, block_length)?;
    let mut out = RateVector::zeros(net);
    let b = F::from_count(block_length as u64);
    for (slot, x) in out.rates.iter_mut().zip(bits) {
        *slot = F::from_count(x) / b;
    }
    Ok(out)
}

fn check_weights(weights: impl Iterator<Item = Ratio<u64>>) -> Result<()> {
    let total = weights.fold(Ratio::zero(), |acc, w| acc + w);
    if total != Ratio::from_integer(1) {
        return Err(Error::domain(format!("mixture weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Weighted combination of rate vectors over the same network.
pub fn mixture_rates<F: Real>(components: &[(RateVector<F>, Ratio<u64>)]) -> Result<RateVector<F>> {
    check_weights(components.iter().map(|c| c.1))?;
    let (first, _) = components.first().ok_or_else(|| Error::domain("empty mixture"))?;
    let mut out = RateVector {
        edges: first.edges.clone(),
        rates: vec![F::zero(); first.rates.len()],
    };
    for (rv, w) in components {
        if rv.edges != out.edges {
            return Err(Error::domain("mixture components cover different edges"));
        }
        let w = F::from_f64(w.to_f64().unwrap()).unwrap();
        for (slot, &r) in out.rates.iter_mut().zip(&rv.rates) {
            *slot = *slot + w * r;
        }
    }
    Ok(out)
}

/// Spanning tree edges paired with the share of the block it handles.
pub type TreeShare = (Vec<(NodeId, NodeId)>, Ratio<u64>);

/// Splits a block of length `B` into sub-blocks of length `w_k B`, runs
/// tree `k` on its sub-block, and reports worst-case bits per instance per
/// edge for the whole block. Each `w_k B` must be an integer.
pub fn simulate_mixture<F: Real>(
    net: &Graph,
    components: &[TreeShare],
    spec: &FunctionSpec,
    block_length: usize,
) -> Result<RateVector<F>> {
    check_weights(components.iter().map(|c| c.1))?;
    let mut totals = vec![0u64; net.edge_count()];
    for (edges, w) in components {
        let sub = *w * Ratio::from_integer(block_length as u64);
        if !sub.is_integer() {
            return Err(Error::domain(format!(
                "weight {w} does not split a block of {block_length} into whole instances"
            )));
        }
        let sub = sub.to_integer() as usize;
        if sub == 0 {
            continue;
        }
        for (t, x) in totals.iter_mut().zip(spanning_tree_scheme(net, edges, spec, sub)?) {
            *t += x;
        }
    }
    let mut out = RateVector::zeros(net);
    let b = F::from_count(block_length as u64);
    for (slot, x) in out.rates.iter_mut().zip(totals) {
        *slot = F::from_count(x) / b;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn k4() -> Graph {
        Graph::complete(&[2; 4]).unwrap()
    }

    const MV: SizeConvention = SizeConvention::MaxValue;
    const AS: SizeConvention = SizeConvention::AlphabetSize;

    #[test]
    fn cutset_examples() {
        let t2 = FunctionSpec::threshold(2);
        assert_relative_eq!(cutset_bound::<f64>(&k4(), &t2, &[0], MV).unwrap(), 2.0);
        assert_relative_eq!(cutset_bound::<f64>(&k4(), &t2, &[0, 1], MV).unwrap(), 5f64.log2());
        assert_eq!(
            cutset_bound::<f64>(&k4(), &FunctionSpec::threshold(0), &[2], MV).unwrap(),
            0.0
        );
        assert!(cutset_bound::<f64>(&k4(), &t2, &[], MV).is_err());
        assert!(cutset_bound::<f64>(&k4(), &t2, &[0, 1, 2, 3], MV).is_err());
        assert!(cutset_bound::<f64>(&k4(), &t2, &[0, 0], MV).is_err());
    }

    #[test]
    fn cut_rate_examples() {
        let r = min_symmetric_cut_rate::<f64>(&k4(), &FunctionSpec::threshold(2), MV).unwrap();
        assert_relative_eq!(r.rate, 2.0 / 3.0, epsilon = 1e-12);
        assert_eq!(r.crossing_edges, 3);
        let k2 = Graph::complete(&[2, 2]).unwrap();
        let r = min_symmetric_cut_rate::<f64>(&k2, &FunctionSpec::threshold(1), MV).unwrap();
        assert_relative_eq!(r.rate, 3f64.log2());
        let r = min_symmetric_cut_rate::<f64>(&k4(), &FunctionSpec::threshold(9), MV).unwrap();
        assert_eq!(r.rate, 0.0);
    }

    #[test]
    fn crossing_counts_match_brute_force() {
        let g = Graph::new(
            &crate::network::entries(&[2, 3, 2, 4, 2]),
            &[[0, 1], [1, 2], [2, 3], [3, 4], [0, 3], [1, 4]],
        )
        .unwrap();
        let spec = FunctionSpec::threshold(4);
        let best = min_symmetric_cut_rate::<f64>(&g, &spec, MV).unwrap();
        let n = g.node_count();
        let mut brute: f64 = 0.0;
        for mask in 1u32..(1 << n) - 1 {
            let side: Vec<NodeId> = (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| i as NodeId).collect();
            let crossing = g
                .edges()
                .iter()
                .filter(|&&(u, v)| (mask >> u & 1) != (mask >> v & 1))
                .count();
            brute = brute.max(cutset_bound::<f64>(&g, &spec, &side, MV).unwrap() / crossing as f64);
        }
        assert_relative_eq!(best.rate, brute, epsilon = 1e-12);
        let side_mask: u32 = best.side.iter().map(|&i| 1 << i).sum();
        let crossing = g
            .edges()
            .iter()
            .filter(|&&(u, v)| (side_mask >> u & 1) != (side_mask >> v & 1))
            .count();
        assert_eq!(crossing, best.crossing_edges);
    }

    #[test]
    fn star_mix_examples() {
        let mix = star_mix_rate::<f64>(&k4(), &FunctionSpec::threshold(2), AS).unwrap();
        assert_relative_eq!(mix.r_ach, 0.5 * 5f64.log2(), epsilon = 1e-12);
        assert!(mix.rates.is_symmetric(1e-12));
        let mix = star_mix_rate::<f64>(&k4(), &FunctionSpec::threshold(2), MV).unwrap();
        assert_relative_eq!(mix.r_ach, 1.0, epsilon = 1e-12);
        let k2 = Graph::complete(&[2, 2]).unwrap();
        let mix = star_mix_rate::<f64>(&k2, &FunctionSpec::threshold(1), MV).unwrap();
        assert_relative_eq!(mix.r_ach, 3f64.log2(), epsilon = 1e-12);
        let mix = star_mix_rate::<f64>(&k4(), &FunctionSpec::threshold(0), MV).unwrap();
        assert!(mix.rates.rates.iter().all(|&r| r == 0.0));

        let path = Graph::new(&crate::network::entries(&[2; 3]), &[[0, 1], [1, 2]]).unwrap();
        assert!(star_mix_rate::<f64>(&path, &FunctionSpec::threshold(1), MV).is_err());
    }

    #[test]
    fn two_opt_examples() {
        for conv in SizeConvention::BOTH {
            let r = two_opt_check::<f64>(&k4(), &FunctionSpec::threshold(2), conv).unwrap();
            assert!(r.holds);
            assert_relative_eq!(r.bound, 1.5);
        }
        let k2 = Graph::complete(&[2, 2]).unwrap();
        let r = two_opt_check::<f64>(&k2, &FunctionSpec::threshold(1), MV).unwrap();
        assert_relative_eq!(r.ratio, 1.0, epsilon = 1e-12);
        assert!(r.tight);
        let r = two_opt_check::<f64>(&k4(), &FunctionSpec::threshold(0), MV).unwrap();
        assert_eq!((r.r_ach, r.r_cut, r.ratio), (0.0, 0.0, 1.0));
    }

    #[test]
    fn star_scheme_and_mixture() {
        let net = k4();
        let spec = FunctionSpec::threshold(2);
        let bits = spanning_tree_scheme(&net, &star_edges(&net, 0).unwrap(), &spec, 2).unwrap();
        for (e, &b) in bits.iter().enumerate() {
            let (u, v) = net.edge_ids(e);
            assert_eq!(b, if u == 0 || v == 0 { 4 } else { 0 });
        }

        let quarter = Ratio::new(1, 4);
        let parts: Vec<_> = (0..4)
            .map(|c| {
                (
                    tree_rate_vector::<f64>(&net, &star_edges(&net, c).unwrap(), &spec, 2).unwrap(),
                    quarter,
                )
            })
            .collect();
        let mixed = mixture_rates(&parts).unwrap();
        assert!(mixed.rates.iter().all(|&r| (r - 1.0).abs() < 1e-12));

        let stars: Vec<_> = (0..4).map(|c| (star_edges(&net, c).unwrap(), quarter)).collect();
        let simulated = simulate_mixture::<f64>(&net, &stars, &spec, 8).unwrap();
        assert!(simulated.rates.iter().all(|&r| (r - 1.0).abs() < 1e-12));
        assert!(simulate_mixture::<f64>(&net, &stars, &spec, 6).is_err());
    }

    #[test]
    fn spanning_tree_validation() {
        let net = k4();
        assert!(spanning_tree(&net, &[(0, 1), (1, 2)], None).is_err());
        assert!(spanning_tree(&net, &[(0, 1), (1, 2), (2, 0)], None).is_err());
        assert!(spanning_tree(&net, &[(0, 1), (1, 2), (2, 3)], None).is_ok());
        let path = Graph::new(&crate::network::entries(&[2; 3]), &[[0, 1], [1, 2]]).unwrap();
        assert!(spanning_tree(&path, &[(0, 2), (1, 2)], None).is_err());
    }

    #[test]
    fn mixture_weights_must_sum_to_one() {
        let net = k4();
        let rv = RateVector::<f64>::zeros(&net);
        assert!(mixture_rates(&[(rv.clone(), Ratio::new(1, 2))]).is_err());
        assert!(mixture_rates(&[(rv.clone(), Ratio::new(1, 2)), (rv, Ratio::new(1, 2))]).is_ok());
    }
}
