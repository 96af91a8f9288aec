//! Exact constrained shortest paths through bicriteria Pareto frontiers.
//!
//! Labels are `(length, cost)` pairs of `source -> v` paths. The search pops
//! candidates in lexicographic `(length, cost, node, hops)` order; a popped
//! label whose cost is not strictly below every installed label at its node
//! is weakly dominated and dropped. Because the pop order is monotone in
//! length, "installed" labels at a node form a staircase: increasing length,
//! strictly decreasing cost. Pending candidates are kept as a second
//! staircase per node so the heap never holds a label already known to be
//! dominated.

mod brute;

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, PathResult, SOURCE, TARGET};

pub use brute::{brute_force_csp, brute_force_min_product, brute_force_target_frontier, enumerate_paths, BRUTE_FORCE_MAX_N};

pub const DEFAULT_MAX_LABELS: usize = 100_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParetoError {
    #[error("frontier cap of {cap} labels exceeded while installing a label at node {node}")]
    FrontierCap { node: usize, cap: usize },
    #[error("source {vertex} out of range for n = {n}")]
    SourceOutOfRange { vertex: usize, n: usize },
    #[error("brute force limited to n <= {max}, got n = {n}")]
    TooLarge { n: usize, max: usize },
    #[error("budget must be a non-negative number, got {0}")]
    InvalidBudget(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Ceiling on installed labels across all nodes.
    pub max_labels: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_labels: DEFAULT_MAX_LABELS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Label {
    pub node: usize,
    pub length: f64,
    pub cost: f64,
    pub hops: usize,
    /// Index of the predecessor label in the owning frontier's arena.
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontierStats {
    pub total_labels: usize,
    pub max_labels_per_node: usize,
    pub labels_at_target: usize,
}

/// Per-node nondominated labels, each set sorted by increasing length and
/// strictly decreasing cost.
#[derive(Debug, Clone)]
pub struct ParetoFrontier {
    source: usize,
    arena: Vec<Label>,
    per_node: Vec<Vec<usize>>,
    /// `Some(t)` when the search only guarantees an exact frontier at `t`.
    pruned_to: Option<usize>,
}

impl ParetoFrontier {
    pub fn source(&self) -> usize {
        self.source
    }

    pub fn n(&self) -> usize {
        self.per_node.len()
    }

    /// The node whose frontier is exact when target pruning was used.
    pub fn pruned_to(&self) -> Option<usize> {
        self.pruned_to
    }

    pub fn labels(&self, node: usize) -> impl Iterator<Item = &Label> + '_ {
        self.per_node[node].iter().map(move |&i| &self.arena[i])
    }

    pub fn label_ids(&self, node: usize) -> &[usize] {
        &self.per_node[node]
    }

    pub fn label(&self, id: usize) -> &Label {
        &self.arena[id]
    }

    /// `(length, cost)` points at `node`.
    pub fn points(&self, node: usize) -> Vec<(f64, f64)> {
        self.labels(node).map(|l| (l.length, l.cost)).collect()
    }

    /// Vertex sequence of a label, from the source.
    pub fn path_vertices(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.arena[id].hops + 1);
        let mut cur = Some(id);
        while let Some(i) = cur {
            out.push(self.arena[i].node);
            cur = self.arena[i].parent;
        }
        out.reverse();
        out
    }

    pub fn path(&self, id: usize) -> PathResult {
        let l = &self.arena[id];
        PathResult {
            vertices: self.path_vertices(id),
            length: l.length,
            cost: l.cost,
            hops: l.hops,
        }
    }

    pub fn stats(&self) -> FrontierStats {
        FrontierStats {
            total_labels: self.arena.len(),
            max_labels_per_node: self.per_node.iter().map(Vec::len).max().unwrap_or(0),
            labels_at_target: self.per_node.get(TARGET).map_or(0, Vec::len),
        }
    }

    /// True when no node's set holds a (weakly) dominating pair.
    pub fn is_dominance_free(&self) -> bool {
        self.per_node.iter().all(|ids| {
            ids.windows(2).all(|w| {
                let (a, b) = (&self.arena[w[0]], &self.arena[w[1]]);
                a.length < b.length && a.cost > b.cost
            })
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CspStatus {
    Optimal(PathResult),
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CspSolution {
    pub status: CspStatus,
    /// `None` for the brute-force oracle, which builds no frontier.
    pub frontier_stats: Option<FrontierStats>,
}

impl CspSolution {
    pub fn path(&self) -> Option<&PathResult> {
        match &self.status {
            CspStatus::Optimal(p) => Some(p),
            CspStatus::Infeasible => None,
        }
    }

    /// Optimal length, `+inf` when infeasible.
    pub fn length_or_inf(&self) -> f64 {
        self.path().map_or(f64::INFINITY, |p| p.length)
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    length: f64,
    cost: f64,
    node: u32,
    hops: u32,
    parent: u32,
    id: u64,
}

impl Candidate {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.length
            .total_cmp(&other.length)
            .then(self.cost.total_cmp(&other.cost))
            .then(self.node.cmp(&other.node))
            .then(self.hops.cmp(&other.hops))
            .then(self.id.cmp(&other.id))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    // Reversed so `BinaryHeap` pops the lexicographic minimum.
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    length: f64,
    cost: f64,
    hops: u32,
    id: u64,
}

struct Search<'a> {
    instance: &'a Instance,
    prune_to: Option<usize>,
    cap: usize,
    arena: Vec<Label>,
    per_node: Vec<Vec<usize>>,
    // Cost of the last installed label per node (the node's minimum).
    min_cost: Vec<f64>,
    pending: Vec<VecDeque<Pending>>,
    heap: BinaryHeap<Candidate>,
    next_id: u64,
}

impl<'a> Search<'a> {
    fn new(instance: &'a Instance, prune_to: Option<usize>, opts: SolverOptions) -> Self {
        let n = instance.n();
        Self {
            instance,
            prune_to,
            cap: opts.max_labels,
            arena: Vec::new(),
            per_node: vec![Vec::new(); n],
            min_cost: vec![f64::INFINITY; n],
            pending: vec![VecDeque::new(); n],
            heap: BinaryHeap::new(),
            next_id: 0,
        }
    }

    #[inline]
    fn target_bound(&self) -> f64 {
        self.prune_to.map_or(f64::INFINITY, |t| self.min_cost[t])
    }

    /// Offer a candidate at `node`; returns whether it entered the heap.
    #[inline]
    fn offer(&mut self, node: usize, length: f64, cost: f64, hops: u32, parent: u32) -> bool {
        if cost >= self.min_cost[node] || cost >= self.target_bound() {
            return false;
        }
        let pend = &mut self.pending[node];
        let mut pos = pend.partition_point(|p| p.length <= length);
        if pos > 0 {
            let q = pend[pos - 1];
            if q.cost < cost || (q.cost == cost && (q.length < length || q.hops <= hops)) {
                return false;
            }
            if q.length == length {
                // Same length, and either cheaper or the same point in fewer hops.
                pend.remove(pos - 1);
                pos -= 1;
            }
        }
        let mut end = pos;
        while end < pend.len() && pend[end].cost >= cost {
            end += 1;
        }
        pend.drain(pos..end);
        let id = self.next_id;
        self.next_id += 1;
        pend.insert(pos, Pending { length, cost, hops, id });
        self.heap.push(Candidate {
            length,
            cost,
            node: node as u32,
            hops,
            parent,
            id,
        });
        true
    }

    fn run(mut self, source: usize) -> Result<ParetoFrontier, ParetoError> {
        self.arena.push(Label {
            node: source,
            length: 0.0,
            cost: 0.0,
            hops: 0,
            parent: None,
        });
        self.per_node[source].push(0);
        self.min_cost[source] = 0.0;
        self.expand(0);

        while let Some(c) = self.heap.pop() {
            let node = c.node as usize;
            match self.pending[node].front() {
                Some(p) if p.id == c.id => {
                    self.pending[node].pop_front();
                }
                _ => continue,
            }
            if c.cost >= self.min_cost[node] || c.cost >= self.target_bound() {
                continue;
            }
            if self.arena.len() >= self.cap {
                return Err(ParetoError::FrontierCap { node, cap: self.cap });
            }
            let id = self.arena.len();
            self.arena.push(Label {
                node,
                length: c.length,
                cost: c.cost,
                hops: c.hops as usize,
                parent: Some(c.parent as usize),
            });
            self.per_node[node].push(id);
            self.min_cost[node] = c.cost;
            if Some(node) != self.prune_to {
                self.expand(id);
            }
        }

        Ok(ParetoFrontier {
            source,
            arena: self.arena,
            per_node: self.per_node,
            pruned_to: self.prune_to,
        })
    }

    fn expand(&mut self, id: usize) {
        let label = self.arena[id];
        let back = label.parent.map(|p| self.arena[p].node);
        let hops = label.hops as u32 + 1;
        let instance = self.instance;
        instance.for_each_neighbor(label.node, |v, w| {
            if Some(v) == back || !w.is_finite() {
                return;
            }
            self.offer(v, label.length + w.length, label.cost + w.cost, hops, id as u32);
        });
    }
}

/// Exact Pareto frontier of simple `source -> v` paths for every node `v`.
pub fn pareto_frontier(instance: &Instance, source: usize) -> Result<ParetoFrontier, ParetoError> {
    pareto_frontier_with(instance, source, SolverOptions::default())
}

pub fn pareto_frontier_with(
    instance: &Instance,
    source: usize,
    opts: SolverOptions,
) -> Result<ParetoFrontier, ParetoError> {
    if source >= instance.n() {
        return Err(ParetoError::SourceOutOfRange { vertex: source, n: instance.n() });
    }
    Search::new(instance, None, opts).run(source)
}

/// Frontier search from vertex 0 that is exact at vertex 1 only.
///
/// Any label whose cost is no better than a label already installed at the
/// target is discarded: extending it can only produce a target label
/// weakly dominated by that one. Sets at other nodes are subsets of their
/// true frontiers.
pub fn target_frontier(instance: &Instance, opts: SolverOptions) -> Result<ParetoFrontier, ParetoError> {
    Search::new(instance, Some(TARGET), opts).run(SOURCE)
}

/// Pick the shortest target label with `cost <= c0`.
pub fn select_within_budget(frontier: &ParetoFrontier, c0: f64) -> CspSolution {
    let best = frontier
        .label_ids(TARGET)
        .iter()
        .copied()
        .find(|&id| frontier.label(id).cost <= c0);
    CspSolution {
        status: match best {
            Some(id) => CspStatus::Optimal(frontier.path(id)),
            None => CspStatus::Infeasible,
        },
        frontier_stats: Some(frontier.stats()),
    }
}

/// Minimum of `length * cost` over the frontier at vertex 1.
///
/// A coordinatewise dominated path never has a smaller product, so the
/// frontier minimum is the minimum over all paths.
pub fn min_product_of(frontier: &ParetoFrontier) -> f64 {
    frontier
        .labels(TARGET)
        .map(|l| l.length * l.cost)
        .fold(f64::INFINITY, f64::min)
}

/// Shortest `0 -> 1` path of cost at most `c0`.
pub fn solve_csp(instance: &Instance, c0: f64) -> Result<CspSolution, ParetoError> {
    solve_csp_with(instance, c0, SolverOptions::default())
}

pub fn solve_csp_with(instance: &Instance, c0: f64, opts: SolverOptions) -> Result<CspSolution, ParetoError> {
    if !(c0 >= 0.0) {
        return Err(ParetoError::InvalidBudget(c0));
    }
    let frontier = target_frontier(instance, opts)?;
    Ok(select_within_budget(&frontier, c0))
}

pub fn min_product(instance: &Instance) -> Result<f64, ParetoError> {
    Ok(min_product_of(&target_frontier(instance, SolverOptions::default())?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{DistributionSpec, StorageMode};

    // (0,1), (0,2), (1,2) in lexicographic order.
    fn k3_dominated() -> Instance {
        Instance::from_uniform_edges(3, &[(0.5, 0.5), (0.1, 0.2), (0.1, 0.2)]).unwrap()
    }

    fn k3_tradeoff() -> Instance {
        Instance::from_uniform_edges(3, &[(0.1, 0.9), (0.15, 0.1), (0.15, 0.1)]).unwrap()
    }

    #[test]
    fn dominated_direct_edge() {
        let f = pareto_frontier(&k3_dominated(), 0).unwrap();
        let pts = f.points(1);
        assert_eq!(pts.len(), 1);
        assert!((pts[0].0 - 0.2).abs() < 1e-15 && (pts[0].1 - 0.4).abs() < 1e-15);
        assert!(f.is_dominance_free());
    }

    #[test]
    fn two_point_tradeoff() {
        let f = pareto_frontier(&k3_tradeoff(), 0).unwrap();
        let pts = f.points(1);
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0], (0.1, 0.9));
        assert!((pts[1].0 - 0.3).abs() < 1e-15 && (pts[1].1 - 0.2).abs() < 1e-15);
    }

    #[test]
    fn k2_single_path() {
        let inst = Instance::generate(2, 5, DistributionSpec::Uniform, DistributionSpec::Uniform, StorageMode::Materialized).unwrap();
        let w = inst.weight(0, 1);
        let f = pareto_frontier(&inst, 0).unwrap();
        assert_eq!(f.points(1), vec![(w.length, w.cost)]);
        assert_eq!(f.stats().labels_at_target, 1);
    }

    #[test]
    fn csp_examples() {
        let sol = solve_csp(&k3_tradeoff(), 0.5).unwrap();
        let p = sol.path().unwrap();
        assert!((p.length - 0.3).abs() < 1e-15);
        assert!((p.cost - 0.2).abs() < 1e-15);
        assert_eq!(p.hops, 2);
        assert_eq!(p.vertices, vec![0, 2, 1]);

        assert_eq!(solve_csp(&k3_dominated(), 0.3).unwrap().status, CspStatus::Infeasible);
        assert!(matches!(solve_csp(&k3_dominated(), -1.0), Err(ParetoError::InvalidBudget(_))));
    }

    #[test]
    fn min_product_examples() {
        assert!((min_product(&k3_dominated()).unwrap() - 0.08).abs() < 1e-15);
        assert!((min_product(&k3_tradeoff()).unwrap() - 0.06).abs() < 1e-15);
    }

    #[test]
    fn frontier_cap_names_node() {
        let inst = Instance::generate(30, 2, DistributionSpec::Uniform, DistributionSpec::Uniform, StorageMode::Materialized).unwrap();
        let err = pareto_frontier_with(&inst, 0, SolverOptions { max_labels: 10 }).unwrap_err();
        assert!(matches!(err, ParetoError::FrontierCap { cap: 10, .. }));
        assert!(matches!(
            pareto_frontier(&inst, 30),
            Err(ParetoError::SourceOutOfRange { vertex: 30, n: 30 })
        ));
    }

    #[test]
    fn equal_points_keep_fewer_hops() {
        // Direct edge (0.4, 0.4) ties exactly with 0 -> 2 -> 1 at (0.2+0.2, 0.2+0.2).
        let inst = Instance::from_uniform_edges(3, &[(0.4, 0.4), (0.2, 0.2), (0.2, 0.2)]).unwrap();
        let f = pareto_frontier(&inst, 0).unwrap();
        let ids = f.label_ids(1);
        assert_eq!(ids.len(), 1);
        assert_eq!(f.path_vertices(ids[0]), vec![0, 1]);
    }

    #[test]
    fn infinite_edges_are_skipped() {
        let d = DistributionSpec::TruncatedExpPower { s: 0.5, threshold: 1.0 };
        let edges = [
            crate::instance::EdgeWeight { length: f64::INFINITY, cost: 0.5 },
            crate::instance::EdgeWeight { length: 0.3, cost: 0.5 },
            crate::instance::EdgeWeight { length: 0.3, cost: 0.5 },
        ];
        let inst = Instance::from_edge_list(3, 0, d, DistributionSpec::Uniform, &edges).unwrap();
        let f = pareto_frontier(&inst, 0).unwrap();
        assert_eq!(f.points(1), vec![(0.6, 1.0)]);
    }

    #[test]
    fn target_pruned_matches_full_at_target() {
        for seed in 0..30 {
            let inst = Instance::generate(40, seed, DistributionSpec::Uniform, DistributionSpec::Uniform, StorageMode::Materialized).unwrap();
            let full = pareto_frontier(&inst, 0).unwrap();
            let pruned = target_frontier(&inst, SolverOptions::default()).unwrap();
            assert_eq!(full.points(1), pruned.points(1));
            assert!(pruned.stats().total_labels <= full.stats().total_labels);
            assert!(full.is_dominance_free() && pruned.is_dominance_free());
        }
    }
}
