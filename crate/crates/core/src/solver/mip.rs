//! Best-bound branch-and-bound over binary variables.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use log::{debug, info};

use super::simplex::{LpOptions, Workspace};
use crate::error::Result;
use crate::model::{MipModel, Solution, SolveStatus, VarId, VarKind};

/// Termination criteria and tolerances for [`solve_mip`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveLimits {
    /// Maximum number of LP relaxations solved, the root included.
    pub max_nodes: usize,
    pub max_seconds: f64,
    pub rel_gap: f64,
    pub feas_tol: f64,
    pub lp_pivot_tol: f64,
    /// Distance from 0 or 1 below which a binary counts as integral.
    pub int_tol: f64,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            max_nodes: 1_000_000,
            max_seconds: f64::INFINITY,
            rel_gap: 1e-4,
            feas_tol: 1e-7,
            lp_pivot_tol: 1e-9,
            int_tol: 1e-6,
        }
    }
}

/// One branching decision, in the order it was made.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchRecord {
    pub node: u64,
    pub var: VarId,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MipResult {
    pub incumbent: Option<Solution>,
    /// A valid lower bound on the optimum, whatever the termination cause.
    pub dual_bound: f64,
    pub node_count: usize,
    pub status: SolveStatus,
    pub gap: f64,
    pub branch_log: Vec<BranchRecord>,
}

impl MipResult {
    pub fn primal_bound(&self) -> f64 {
        self.incumbent
            .as_ref()
            .map_or(f64::INFINITY, |s| s.objective_value)
    }
}

/// `|primal − dual| / max(|primal|, 1e−10)`.
pub fn compute_gap(primal: f64, dual: f64) -> f64 {
    if !primal.is_finite() || !dual.is_finite() {
        return f64::INFINITY;
    }
    (primal - dual).abs() / primal.abs().max(1e-10)
}

#[derive(Debug, Clone)]
struct Node {
    bound: f64,
    id: u64,
    fixings: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap is a max-heap: smallest bound first, then oldest node.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Minimizes `model` over its binaries by best-bound branch-and-bound,
/// branching on the most fractional binary (lowest index on ties).
pub fn solve_mip(model: &MipModel, limits: &SolveLimits) -> Result<MipResult> {
    model.validate()?;
    let start = Instant::now();
    let opts = LpOptions {
        feas_tol: limits.feas_tol,
        pivot_tol: limits.lp_pivot_tol,
        ..LpOptions::default()
    };
    let binaries: Vec<usize> = model
        .variables
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(j, _)| j)
        .collect();
    let base: Vec<(f64, f64)> = model
        .variables
        .iter()
        .map(|v| (v.bounds.lo, v.bounds.hi))
        .collect();

    let mut ws = Workspace::new(model, opts);
    let mut current: Vec<Option<f64>> = vec![None; model.num_vars()];
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        id: 0,
        fixings: Vec::new(),
    });
    let mut next_id = 1u64;
    let mut incumbent: Option<Solution> = None;
    let mut nodes = 0usize;
    let mut log = Vec::new();
    let mut first = true;

    let finish = |incumbent: Option<Solution>, dual: f64, status, nodes, log| {
        let primal = incumbent
            .as_ref()
            .map_or(f64::INFINITY, |s: &Solution| s.objective_value);
        let dual = if primal.is_finite() {
            dual.min(primal)
        } else {
            dual
        };
        let res = MipResult {
            gap: compute_gap(primal, dual),
            incumbent,
            dual_bound: dual,
            node_count: nodes,
            status,
            branch_log: log,
        };
        info!(
            "branch-and-bound: status {} nodes {} dual {:.9} primal {:.9}",
            res.status,
            res.node_count,
            res.dual_bound,
            res.primal_bound()
        );
        Ok(res)
    };

    loop {
        let Some(best) = heap.peek() else {
            return match incumbent {
                Some(s) => {
                    let v = s.objective_value;
                    finish(Some(s), v, SolveStatus::Optimal, nodes, log)
                }
                None => finish(None, f64::INFINITY, SolveStatus::Infeasible, nodes, log),
            };
        };
        let best_bound = best.bound;
        if let Some(inc) = &incumbent {
            let p = inc.objective_value;
            if best_bound >= p || compute_gap(p, best_bound) <= limits.rel_gap {
                return finish(incumbent, best_bound, SolveStatus::Optimal, nodes, log);
            }
        }
        if nodes >= limits.max_nodes || start.elapsed().as_secs_f64() > limits.max_seconds {
            let status = SolveStatus::LimitReached;
            return finish(incumbent, best_bound, status, nodes, log);
        }
        let node = heap.pop().expect("peeked");
        let cutoff = incumbent
            .as_ref()
            .map_or(f64::INFINITY, |s| s.objective_value);
        if node.bound >= cutoff {
            continue;
        }

        // Move the workspace to this node's bounds.
        let mut wanted: Vec<Option<f64>> = vec![None; model.num_vars()];
        for &(j, v) in &node.fixings {
            wanted[j] = Some(v);
        }
        for &j in &binaries {
            if wanted[j] != current[j] {
                let (lo, hi) = match wanted[j] {
                    Some(v) => (v, v),
                    None => base[j],
                };
                ws.set_bounds(j, lo, hi);
                current[j] = wanted[j];
            }
        }
        let status = if first {
            first = false;
            ws.solve()
        } else {
            ws.resolve()
        };
        let status = match status {
            Ok(s) => s,
            Err(e) => {
                debug!("node {} failed ({e}); solving from scratch", node.id);
                let mut fresh = model.clone();
                for &(j, v) in &node.fixings {
                    fresh.variables[j].bounds = crate::model::Interval::new(v, v);
                }
                ws = Workspace::new(&fresh, opts);
                for &j in &binaries {
                    current[j] = wanted[j];
                }
                ws.solve()?
            }
        };
        nodes += 1;
        match status {
            SolveStatus::Infeasible => continue,
            SolveStatus::Unbounded => {
                return finish(None, f64::NEG_INFINITY, SolveStatus::Unbounded, nodes, log);
            }
            _ => {}
        }
        let obj = ws.objective_value();
        if obj >= cutoff {
            continue;
        }
        let values = ws.clean_values();
        let mut branch: Option<(usize, f64)> = None;
        for &j in &binaries {
            let frac = (values[j] - values[j].round()).abs();
            if frac > limits.int_tol && branch.is_none_or(|(_, f)| frac > f + 1e-12) {
                branch = Some((j, frac));
            }
        }
        match branch {
            None => {
                let mut vals = values;
                for &j in &binaries {
                    vals[j] = vals[j].round();
                }
                debug!("node {}: new incumbent {obj:.9}", node.id);
                incumbent = Some(Solution {
                    objective_value: model.evaluate_objective(&vals),
                    values: vals,
                    status: SolveStatus::Feasible,
                });
            }
            Some((j, _)) => {
                for v in [0.0, 1.0] {
                    let mut fixings = node.fixings.clone();
                    fixings.push((j, v));
                    log.push(BranchRecord {
                        node: next_id,
                        var: VarId(j),
                        value: v,
                        bound: obj,
                    });
                    heap.push(Node {
                        bound: obj,
                        id: next_id,
                        fixings,
                    });
                    next_id += 1;
                }
            }
        }
    }
}
