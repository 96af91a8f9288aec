//! Exhaustive path enumeration, used as an independent oracle.

use std::cmp::Ordering;

use super::{CspSolution, CspStatus, ParetoError};
use crate::instance::{Instance, PathResult, SOURCE, TARGET};

/// `(n - 2)!`-ish enumeration stays tractable up to here.
pub const BRUTE_FORCE_MAX_N: usize = 12;

fn check_n(instance: &Instance) -> Result<(), ParetoError> {
    if instance.n() > BRUTE_FORCE_MAX_N {
        Err(ParetoError::TooLarge {
            n: instance.n(),
            max: BRUTE_FORCE_MAX_N,
        })
    } else {
        Ok(())
    }
}

/// Call `visit(vertices, length, cost)` for every simple `0 -> 1` path.
///
/// Paths are produced as ordered selections of internal vertices, in
/// lexicographic order; sums accumulate edge by edge from vertex 0.
pub fn enumerate_paths(instance: &Instance, mut visit: impl FnMut(&[usize], f64, f64)) -> Result<(), ParetoError> {
    check_n(instance)?;
    let n = instance.n();
    let mut used = vec![false; n];
    used[SOURCE] = true;
    used[TARGET] = true;
    let mut stack = vec![SOURCE];
    extend(instance, &mut stack, &mut used, 0.0, 0.0, &mut visit);
    Ok(())
}

fn extend(
    instance: &Instance,
    stack: &mut Vec<usize>,
    used: &mut [bool],
    length: f64,
    cost: f64,
    visit: &mut impl FnMut(&[usize], f64, f64),
) {
    let last = *stack.last().expect("non-empty");
    let w = instance.weight(last, TARGET);
    if w.is_finite() {
        stack.push(TARGET);
        visit(stack, length + w.length, cost + w.cost);
        stack.pop();
    }
    for v in 0..instance.n() {
        if used[v] {
            continue;
        }
        let w = instance.weight(last, v);
        if !w.is_finite() {
            continue;
        }
        used[v] = true;
        stack.push(v);
        extend(instance, stack, used, length + w.length, cost + w.cost, visit);
        stack.pop();
        used[v] = false;
    }
}

fn better(a: &PathResult, b: &PathResult) -> bool {
    a.length
        .total_cmp(&b.length)
        .then(a.cost.total_cmp(&b.cost))
        .then(a.hops.cmp(&b.hops))
        .then_with(|| a.vertices.cmp(&b.vertices))
        == Ordering::Less
}

/// Shortest path with cost at most `c0`, by exhaustive search.
///
/// Ties: smaller cost, then fewer hops, then the lexicographically smaller
/// vertex sequence.
pub fn brute_force_csp(instance: &Instance, c0: f64) -> Result<CspSolution, ParetoError> {
    if !(c0 >= 0.0) {
        return Err(ParetoError::InvalidBudget(c0));
    }
    let mut best: Option<PathResult> = None;
    enumerate_paths(instance, |vs, length, cost| {
        if cost > c0 {
            return;
        }
        let cand = PathResult {
            vertices: vs.to_vec(),
            length,
            cost,
            hops: vs.len() - 1,
        };
        if best.as_ref().map_or(true, |b| better(&cand, b)) {
            best = Some(cand);
        }
    })?;
    Ok(CspSolution {
        status: best.map_or(CspStatus::Infeasible, CspStatus::Optimal),
        frontier_stats: None,
    })
}

/// Minimum of `length * cost` over every simple path.
pub fn brute_force_min_product(instance: &Instance) -> Result<f64, ParetoError> {
    let mut best = f64::INFINITY;
    enumerate_paths(instance, |_, l, c| best = best.min(l * c))?;
    Ok(best)
}

/// Nondominated `(length, cost)` points among all paths, sorted by length.
pub fn brute_force_target_frontier(instance: &Instance) -> Result<Vec<(f64, f64)>, ParetoError> {
    let mut pts = Vec::new();
    enumerate_paths(instance, |_, l, c| pts.push((l, c)))?;
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        if out.last().map_or(true, |q| p.1 < q.1) {
            out.push(p);
        }
    }
    Ok(out)
}
