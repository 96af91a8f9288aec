//! Lagrangian relaxation of the budget constraint.
//!
//! `psi(lambda)` is the shortest `0 -> 1` path under edge weights
//! `length + lambda * cost`. The dual function
//! `g(lambda) = psi(lambda) - lambda * c0` is a minimum of affine functions,
//! hence concave and piecewise linear, and lower-bounds the constrained
//! optimum for every `lambda >= 0`.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{Instance, PathResult, SOURCE, TARGET};
pub use crate::theory::{lambda_star, lambda_star_gamma};

pub const DEFAULT_TOL: f64 = 1e-6;
pub const MAX_TERNARY_ITERATIONS: usize = 200;

/// Budget shrink factors tried in order: `c0_hat = c0 * (1 - delta)`.
pub const SHRINK_SCHEDULE: [f64; 7] = [0.0, 0.02, 0.05, 0.1, 0.2, 0.35, 0.5];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DualError {
    #[error("no finite-weight path joins vertex 0 to vertex 1")]
    Disconnected,
    #[error("lambda must be a non-negative number, got {0}")]
    InvalidLambda(f64),
    #[error("budget must be positive, got {0}")]
    InvalidBudget(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct HeapKey {
    dist: f64,
    hops: usize,
    node: usize,
}

impl Eq for HeapKey {}
impl PartialOrd for HeapKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for HeapKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.hops.cmp(&other.hops))
            .then(self.node.cmp(&other.node))
    }
}

fn trace(pred: &[usize], mut v: usize) -> Vec<usize> {
    let mut out = vec![v];
    while v != SOURCE {
        v = pred[v];
        out.push(v);
    }
    out.reverse();
    out
}

/// `psi(lambda)` with its minimizing path.
///
/// Exact ties in combined weight go to the path with fewer hops, then to the
/// lexicographically smaller vertex sequence.
pub fn psi(instance: &Instance, lambda: f64) -> Result<(f64, PathResult), DualError> {
    if !(lambda >= 0.0) || lambda.is_infinite() {
        return Err(DualError::InvalidLambda(lambda));
    }
    let n = instance.n();
    let mut dist = vec![f64::INFINITY; n];
    let mut hops = vec![usize::MAX; n];
    let mut pred = vec![usize::MAX; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[SOURCE] = 0.0;
    hops[SOURCE] = 0;
    heap.push(Reverse(HeapKey { dist: 0.0, hops: 0, node: SOURCE }));

    while let Some(Reverse(HeapKey { dist: d, hops: h, node: u })) = heap.pop() {
        if settled[u] || d != dist[u] || h != hops[u] {
            continue;
        }
        settled[u] = true;
        if u == TARGET {
            let path = PathResult::from_vertices(instance, trace(&pred, TARGET));
            return Ok((d, path));
        }
        instance.for_each_neighbor(u, |v, w| {
            if settled[v] || !w.is_finite() {
                return;
            }
            let nd = d + (w.length + lambda * w.cost);
            let nh = h + 1;
            let take = match nd.total_cmp(&dist[v]) {
                Ordering::Less => true,
                Ordering::Greater => false,
                Ordering::Equal => {
                    nh < hops[v]
                        || (nh == hops[v] && {
                            let mut via = trace(&pred, u);
                            via.push(v);
                            via < trace(&pred, v)
                        })
                }
            };
            if take {
                let push = nd != dist[v] || nh != hops[v];
                dist[v] = nd;
                hops[v] = nh;
                pred[v] = u;
                if push {
                    heap.push(Reverse(HeapKey { dist: nd, hops: nh, node: v }));
                }
            }
        });
    }
    Err(DualError::Disconnected)
}

/// The closed-form multiplier for this instance's length law: the
/// uniform-power form when lengths are `U^g` with `g < 1`, else the uniform one.
pub fn closed_form_lambda(instance: &Instance, c0: f64) -> f64 {
    let n = instance.n() as u64;
    match instance.length_dist().uniform_gamma() {
        Some(g) if g < 1.0 => lambda_star_gamma(n, c0, g),
        _ => lambda_star(n, c0),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualResult {
    pub lambda: f64,
    pub psi_value: f64,
    /// `psi_value - lambda * c0`.
    pub dual_value: f64,
    pub path: PathResult,
    /// Ternary-search iterations performed.
    pub iterations: usize,
}

/// Maximize `g(lambda) = psi(lambda) - lambda c0` over `[0, max(1, 8 lambda*)]`.
///
/// `lambda = 0` and the closed-form `lambda*` are probed before the ternary
/// search, so the result is never worse than either. The best probe wins,
/// earlier probes on ties.
pub fn dual_maximize(instance: &Instance, c0: f64, tol: f64) -> Result<DualResult, DualError> {
    if !(c0 > 0.0) || c0.is_infinite() {
        return Err(DualError::InvalidBudget(c0));
    }
    let warm = closed_form_lambda(instance, c0);
    let hi_end = (8.0 * warm).max(1.0);

    let mut best: Option<DualResult> = None;
    let probe = |lambda: f64, best: &mut Option<DualResult>| -> Result<f64, DualError> {
        let (value, path) = psi(instance, lambda)?;
        let g = value - lambda * c0;
        if best.as_ref().map_or(true, |b| g > b.dual_value) {
            *best = Some(DualResult {
                lambda,
                psi_value: value,
                dual_value: g,
                path,
                iterations: 0,
            });
        }
        Ok(g)
    };

    probe(0.0, &mut best)?;
    probe(warm, &mut best)?;

    let (mut lo, mut hi) = (0.0, hi_end);
    let mut iterations = 0;
    while hi - lo > tol * hi_end && iterations < MAX_TERNARY_ITERATIONS {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        let g1 = probe(m1, &mut best)?;
        let g2 = probe(m2, &mut best)?;
        if g1 < g2 {
            lo = m1;
        } else {
            hi = m2;
        }
        iterations += 1;
    }
    probe(0.5 * (lo + hi), &mut best)?;

    let mut out = best.expect("at least one probe ran");
    out.iterations = iterations;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ShrinkStatus {
    Optimal(PathResult),
    InfeasibleHeuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShrinkResult {
    pub status: ShrinkStatus,
    /// Schedule entry that produced the path; `None` for the dual fallback
    /// or when nothing feasible was found.
    pub delta: Option<f64>,
    /// Multiplier of the last `psi` evaluation that produced `status`.
    pub lambda: f64,
    pub psi_calls: usize,
}

impl ShrinkResult {
    pub fn path(&self) -> Option<&PathResult> {
        match &self.status {
            ShrinkStatus::Optimal(p) => Some(p),
            ShrinkStatus::InfeasibleHeuristic => None,
        }
    }
}

/// Primal repair: solve `psi` at the closed-form multiplier for successively
/// smaller budgets `c0 (1 - delta)` until the path fits within `c0`, then
/// fall back to the maximizing multiplier of the dual.
pub fn budget_shrink_solve(instance: &Instance, c0: f64) -> Result<ShrinkResult, DualError> {
    if !(c0 > 0.0) || c0.is_infinite() {
        return Err(DualError::InvalidBudget(c0));
    }
    let mut calls = 0;
    for delta in SHRINK_SCHEDULE {
        let lambda = closed_form_lambda(instance, c0 * (1.0 - delta));
        let (_, path) = psi(instance, lambda)?;
        calls += 1;
        if path.cost <= c0 {
            return Ok(ShrinkResult {
                status: ShrinkStatus::Optimal(path),
                delta: Some(delta),
                lambda,
                psi_calls: calls,
            });
        }
    }
    let dual = dual_maximize(instance, c0, DEFAULT_TOL)?;
    // Two boundary probes plus two per iteration plus the final midpoint.
    calls += 3 + 2 * dual.iterations;
    if dual.path.cost <= c0 {
        return Ok(ShrinkResult {
            status: ShrinkStatus::Optimal(dual.path),
            delta: None,
            lambda: dual.lambda,
            psi_calls: calls,
        });
    }
    Ok(ShrinkResult {
        status: ShrinkStatus::InfeasibleHeuristic,
        delta: None,
        lambda: dual.lambda,
        psi_calls: calls,
    })
}
