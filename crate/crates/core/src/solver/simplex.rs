//! Dense bounded-variable simplex.
//!
//! Each row `a x {<=, =, >=} b` becomes `a x + s = b` with a slack whose
//! bounds encode the sense. Rows whose slack cannot absorb the initial
//! residual get an artificial column, and phase 1 minimizes the sum of
//! artificials. The tableau `B⁻¹ [A | b]` is stored densely and updated in
//! place; it is rebuilt from the original data when the row residual of the
//! current point drifts.
//!
//! Besides the primal method the workspace offers a dual simplex used to
//! re-optimize after bound changes, which is how branch-and-bound reuses a
//! basis between nodes.

use log::{debug, trace};

use crate::error::{Error, Result};
use crate::model::{MipModel, Sense, Solution, SolveStatus, VarKind};

/// Tolerances and limits for a single LP solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpOptions {
    /// Primal feasibility tolerance on bounds of basic variables.
    pub feas_tol: f64,
    /// Reduced-cost tolerance for optimality.
    pub opt_tol: f64,
    /// Smallest pivot magnitude accepted in ratio tests.
    pub pivot_tol: f64,
    /// Hard cap on pivots; `None` derives one from the model size.
    pub max_iterations: Option<usize>,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub bland_after: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions {
            feas_tol: 1e-7,
            opt_tol: 1e-9,
            pivot_tol: 1e-9,
            max_iterations: None,
            bland_after: 1000,
        }
    }
}

/// Solves the LP relaxation of `model` (binaries relaxed to `[0, 1]`).
pub fn solve_lp(model: &MipModel) -> Result<Solution> {
    solve_lp_with(model, &LpOptions::default())
}

pub fn solve_lp_with(model: &MipModel, opts: &LpOptions) -> Result<Solution> {
    model.validate()?;
    let mut ws = Workspace::new(model, *opts);
    let status = ws.solve()?;
    Ok(ws.solution(status))
}

const DROP_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColKind {
    Structural,
    Slack,
    Artificial,
}

/// Reusable simplex state for one model.
#[derive(Debug, Clone)]
pub struct Workspace {
    opts: LpOptions,
    m: usize,
    n_struct: usize,
    ncols: usize,
    kinds: Vec<ColKind>,
    /// Original constraint columns, sparse by column.
    cols: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    /// Row-major `B⁻¹ A`, `m × ncols`.
    t: Vec<f64>,
    /// `B⁻¹ b`.
    beta: Vec<f64>,
    basis: Vec<usize>,
    /// Row of each basic column, `usize::MAX` when nonbasic.
    pos: Vec<usize>,
    x: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    objective: Vec<f64>,
    obj_constant: f64,
    cost: Vec<f64>,
    d: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
    since_check: usize,
    phase_one_done: bool,
}

/// Outcome of a pivoting loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
    Infeasible,
}

impl Workspace {
    pub fn new(model: &MipModel, opts: LpOptions) -> Self {
        let m = model.num_rows();
        let n_struct = model.num_vars();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_struct];
        for (i, r) in model.rows.iter().enumerate() {
            for &(v, c) in &r.coeffs {
                cols[v.0].push((i, c));
            }
        }
        let mut kinds = vec![ColKind::Structural; n_struct];
        let mut lo: Vec<f64> = model.variables.iter().map(|v| v.bounds.lo).collect();
        let mut hi: Vec<f64> = model.variables.iter().map(|v| v.bounds.hi).collect();
        let mut x: Vec<f64> = model
            .variables
            .iter()
            .map(|v| {
                if v.bounds.lo <= 0.0 && 0.0 <= v.bounds.hi {
                    0.0
                } else if v.bounds.lo > 0.0 {
                    v.bounds.lo
                } else {
                    v.bounds.hi
                }
            })
            .collect();
        let mut objective = vec![0.0; n_struct];
        for (v, c) in &model.objective.terms {
            objective[v.0] = *c;
        }

        // Slack columns.
        for (i, r) in model.rows.iter().enumerate() {
            cols.push(vec![(i, 1.0)]);
            kinds.push(ColKind::Slack);
            let (l, h) = match r.sense {
                Sense::Le => (0.0, f64::INFINITY),
                Sense::Ge => (f64::NEG_INFINITY, 0.0),
                Sense::Eq => (0.0, 0.0),
            };
            lo.push(l);
            hi.push(h);
            x.push(0.0);
            objective.push(0.0);
        }
        let rhs: Vec<f64> = model.rows.iter().map(|r| r.rhs).collect();

        // Residual with structurals at their start values decides which rows
        // need an artificial.
        let mut resid = rhs.clone();
        for (j, col) in cols.iter().enumerate().take(n_struct) {
            if x[j] != 0.0 {
                for &(i, a) in col {
                    resid[i] -= a * x[j];
                }
            }
        }
        let mut basis = Vec::with_capacity(m);
        for (i, &r) in resid.iter().enumerate() {
            let s = n_struct + i;
            if r >= lo[s] && r <= hi[s] {
                x[s] = r;
                basis.push(s);
            } else {
                let sb = r.clamp(lo[s], hi[s]);
                x[s] = sb;
                let sign = if r - sb >= 0.0 { 1.0 } else { -1.0 };
                let a = cols.len();
                cols.push(vec![(i, sign)]);
                kinds.push(ColKind::Artificial);
                lo.push(0.0);
                hi.push(f64::INFINITY);
                x.push((r - sb).abs());
                objective.push(0.0);
                basis.push(a);
            }
        }
        let ncols = cols.len();
        let mut ws = Workspace {
            opts,
            m,
            n_struct,
            ncols,
            kinds,
            cols,
            rhs,
            t: Vec::new(),
            beta: Vec::new(),
            basis,
            pos: vec![usize::MAX; ncols],
            x,
            lo,
            hi,
            objective,
            obj_constant: model.objective.constant,
            cost: Vec::new(),
            d: vec![0.0; ncols],
            iterations: 0,
            max_iterations: opts.max_iterations.unwrap_or(20_000 + 50 * (m + ncols)),
            since_check: 0,
            phase_one_done: false,
        };
        ws.reinvert().expect("initial basis is a signed identity");
        ws
    }

    pub fn num_structural(&self) -> usize {
        self.n_struct
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn values(&self) -> &[f64] {
        &self.x[..self.n_struct]
    }

    pub fn objective_value(&self) -> f64 {
        self.x[..self.n_struct]
            .iter()
            .zip(&self.objective)
            .map(|(x, c)| x * c)
            .sum::<f64>()
            + self.obj_constant
    }

    pub fn solution(&self, status: SolveStatus) -> Solution {
        let values = if matches!(status, SolveStatus::Optimal) {
            self.clean_values()
        } else {
            self.values().to_vec()
        };
        let objective_value = match status {
            SolveStatus::Optimal => {
                values
                    .iter()
                    .zip(&self.objective)
                    .map(|(x, c)| x * c)
                    .sum::<f64>()
                    + self.obj_constant
            }
            SolveStatus::Infeasible => f64::INFINITY,
            SolveStatus::Unbounded => f64::NEG_INFINITY,
            _ => f64::NAN,
        };
        Solution {
            values,
            objective_value,
            status,
        }
    }

    /// Structural values clipped onto their bounds.
    pub fn clean_values(&self) -> Vec<f64> {
        (0..self.n_struct)
            .map(|j| self.x[j].clamp(self.lo[j], self.hi[j]))
            .collect()
    }

    /// Solves from the current basis with the primal method, running phase 1
    /// first if artificials are still active.
    pub fn solve(&mut self) -> Result<SolveStatus> {
        if !self.phase_one_done {
            if self.kinds.contains(&ColKind::Artificial) {
                self.set_cost(|_, k| if k == ColKind::Artificial { 1.0 } else { 0.0 });
                let out = self.primal_loop()?;
                debug_assert_ne!(out, Outcome::Unbounded);
                let infeas: f64 = (0..self.ncols)
                    .filter(|&j| self.kinds[j] == ColKind::Artificial)
                    .map(|j| self.x[j])
                    .sum();
                if infeas > self.opts.feas_tol * (1.0 + self.m as f64).sqrt() {
                    debug!("phase 1 ended with infeasibility {infeas:.3e}");
                    return Ok(SolveStatus::Infeasible);
                }
                for j in 0..self.ncols {
                    if self.kinds[j] == ColKind::Artificial {
                        self.hi[j] = 0.0;
                        if self.pos[j] == usize::MAX {
                            self.x[j] = 0.0;
                        }
                    }
                }
            }
            self.phase_one_done = true;
            let obj = self.objective.clone();
            self.set_cost(|j, _| obj[j]);
        }
        self.finish_primal()
    }

    fn finish_primal(&mut self) -> Result<SolveStatus> {
        for attempt in 0..3 {
            match self.primal_loop()? {
                Outcome::Unbounded => return Ok(SolveStatus::Unbounded),
                Outcome::Infeasible => return Ok(SolveStatus::Infeasible),
                Outcome::Optimal => {}
            }
            if self.residual() <= 1e-9 * (1.0 + self.max_abs_rhs()) {
                return Ok(SolveStatus::Optimal);
            }
            debug!("residual drift after optimal phase (attempt {attempt}), reinverting");
            self.reinvert()?;
            if self.max_primal_infeasibility() > self.opts.feas_tol
                && self.dual_loop()? == Outcome::Infeasible
            {
                return Ok(SolveStatus::Infeasible);
            }
        }
        Ok(SolveStatus::Optimal)
    }

    /// Replaces the bounds of structural column `j`. A nonbasic column is
    /// moved to the bound that keeps its reduced cost dual feasible.
    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        assert!(j < self.n_struct);
        self.lo[j] = lo;
        self.hi[j] = hi;
        if self.pos[j] == usize::MAX {
            let target = if self.d[j] >= 0.0 { lo } else { hi };
            let delta = target - self.x[j];
            if delta != 0.0 {
                self.x[j] = target;
                for r in 0..self.m {
                    let a = self.t[r * self.ncols + j];
                    if a != 0.0 {
                        let b = self.basis[r];
                        self.x[b] -= a * delta;
                    }
                }
            }
        }
    }

    /// Re-optimizes after bound changes with the dual simplex, then polishes
    /// with the primal method.
    pub fn resolve(&mut self) -> Result<SolveStatus> {
        if !self.phase_one_done {
            return self.solve();
        }
        match self.dual_loop()? {
            Outcome::Infeasible => Ok(SolveStatus::Infeasible),
            _ => self.finish_primal(),
        }
    }

    fn set_cost(&mut self, f: impl Fn(usize, ColKind) -> f64) {
        self.cost = (0..self.ncols).map(|j| f(j, self.kinds[j])).collect();
        self.recompute_reduced_costs();
    }

    fn recompute_reduced_costs(&mut self) {
        let nc = self.ncols;
        self.d.copy_from_slice(&self.cost);
        for r in 0..self.m {
            let cb = self.cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.t[r * nc..(r + 1) * nc];
                for (dj, a) in self.d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.hi[j] - self.lo[j] <= 0.0
    }

    /// Chooses an entering column and its direction (+1 increase, −1
    /// decrease), or `None` at optimality.
    fn price(&self, bland: bool) -> Option<(usize, f64)> {
        let tol = self.opts.opt_tol;
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.ncols {
            if self.pos[j] != usize::MAX || self.is_fixed(j) {
                continue;
            }
            let dj = self.d[j];
            let at_lo = self.x[j] <= self.lo[j];
            let at_hi = self.x[j] >= self.hi[j];
            let dir = if dj < -tol && !at_hi {
                1.0
            } else if dj > tol && !at_lo {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            let score = dj.abs();
            if score > best_score {
                best_score = score;
                best = Some((j, dir));
            }
        }
        best
    }

    fn primal_loop(&mut self) -> Result<Outcome> {
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let nc = self.ncols;
        loop {
            self.bump_iterations()?;
            let Some((q, dir)) = self.price(bland) else {
                return Ok(Outcome::Optimal);
            };
            // Ratio test.
            // Nonbasic columns may sit strictly inside their bounds.
            let mut theta = if dir > 0.0 {
                self.hi[q] - self.x[q]
            } else {
                self.x[q] - self.lo[q]
            };
            let mut leave: Option<(usize, f64)> = None;
            let mut best_pivot = 0.0;
            for r in 0..self.m {
                let a = self.t[r * nc + q];
                if a.abs() <= self.opts.pivot_tol {
                    continue;
                }
                let b = self.basis[r];
                let rate = -dir * a;
                let limit = if rate < 0.0 {
                    if self.lo[b] == f64::NEG_INFINITY {
                        continue;
                    }
                    ((self.x[b] - self.lo[b]) / -rate).max(0.0)
                } else {
                    if self.hi[b] == f64::INFINITY {
                        continue;
                    }
                    ((self.hi[b] - self.x[b]) / rate).max(0.0)
                };
                let take = match leave {
                    None => limit < theta,
                    Some((lr, _)) => {
                        if limit < theta - 1e-12 {
                            true
                        } else if limit <= theta + 1e-12 {
                            if bland {
                                b < self.basis[lr]
                            } else {
                                a.abs() > best_pivot
                            }
                        } else {
                            false
                        }
                    }
                };
                if take {
                    theta = theta.min(limit);
                    leave = Some((r, rate));
                    best_pivot = a.abs();
                }
            }
            if theta == f64::INFINITY {
                return Ok(Outcome::Unbounded);
            }
            if theta <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run >= self.opts.bland_after && !bland {
                    trace!("switching to Bland's rule");
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }
            // Move along the edge.
            self.x[q] += dir * theta;
            for r in 0..self.m {
                let a = self.t[r * nc + q];
                if a != 0.0 {
                    let b = self.basis[r];
                    self.x[b] -= dir * a * theta;
                }
            }
            match leave {
                None => {
                    // Bound flip.
                    self.x[q] = if dir > 0.0 { self.hi[q] } else { self.lo[q] };
                }
                Some((r, rate)) => {
                    let b = self.basis[r];
                    self.x[b] = if rate < 0.0 { self.lo[b] } else { self.hi[b] };
                    self.pivot(r, q);
                }
            }
            self.maybe_check()?;
        }
    }

    /// Dual simplex from a dual-feasible basis until primal feasibility.
    fn dual_loop(&mut self) -> Result<Outcome> {
        let nc = self.ncols;
        let tol = self.opts.feas_tol;
        loop {
            self.bump_iterations()?;
            // Leaving row: largest bound violation.
            let mut leave: Option<(usize, bool)> = None;
            let mut worst = tol;
            for r in 0..self.m {
                let b = self.basis[r];
                let below = self.lo[b] - self.x[b];
                let above = self.x[b] - self.hi[b];
                if below > worst {
                    worst = below;
                    leave = Some((r, true));
                } else if above > worst {
                    worst = above;
                    leave = Some((r, false));
                }
            }
            let Some((r, increase)) = leave else {
                return Ok(Outcome::Optimal);
            };
            let b = self.basis[r];
            let row = r * nc;
            let mut enter: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            let mut best_pivot = 0.0;
            for j in 0..nc {
                if self.pos[j] != usize::MAX || self.is_fixed(j) {
                    continue;
                }
                let a = self.t[row + j];
                if a.abs() <= self.opts.pivot_tol {
                    continue;
                }
                let at_lo = self.x[j] <= self.lo[j];
                let at_hi = self.x[j] >= self.hi[j];
                // x_b moves by −a Δx_j.
                let can_inc = !at_hi && if increase { a < 0.0 } else { a > 0.0 };
                let can_dec = !at_lo && if increase { a > 0.0 } else { a < 0.0 };
                if !(can_inc || can_dec) {
                    continue;
                }
                // Entering with increase needs d_j >= 0, decrease d_j <= 0.
                let dj = if can_inc {
                    self.d[j].max(0.0)
                } else {
                    (-self.d[j]).max(0.0)
                };
                let ratio = dj / a.abs();
                if ratio < best_ratio - 1e-12
                    || (ratio <= best_ratio + 1e-12 && a.abs() > best_pivot)
                {
                    best_ratio = ratio;
                    best_pivot = a.abs();
                    enter = Some(j);
                }
            }
            let Some(q) = enter else {
                return Ok(Outcome::Infeasible);
            };
            let target = if increase { self.lo[b] } else { self.hi[b] };
            let a = self.t[row + q];
            let delta = (self.x[b] - target) / a;
            self.x[q] += delta;
            for i in 0..self.m {
                let ai = self.t[i * nc + q];
                if ai != 0.0 {
                    let bi = self.basis[i];
                    self.x[bi] -= ai * delta;
                }
            }
            self.x[b] = target;
            self.pivot(r, q);
            self.maybe_check()?;
        }
    }

    fn bump_iterations(&mut self) -> Result<()> {
        self.iterations += 1;
        if self.iterations > self.max_iterations {
            return Err(Error::Numerical(format!(
                "simplex exceeded {} iterations",
                self.max_iterations
            )));
        }
        Ok(())
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let nc = self.ncols;
        let p = self.t[r * nc + q];
        let inv = 1.0 / p;
        let mut nz: Vec<usize> = Vec::new();
        {
            let row = &mut self.t[r * nc..(r + 1) * nc];
            for (k, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v *= inv;
                    if v.abs() < DROP_TOL {
                        *v = 0.0;
                    } else {
                        nz.push(k);
                    }
                }
            }
            row[q] = 1.0;
        }
        self.beta[r] *= inv;
        let (before, rest) = self.t.split_at_mut(r * nc);
        let (prow, after) = rest.split_at_mut(nc);
        let beta_r = self.beta[r];
        let update = |row: &mut [f64], beta: &mut f64| {
            let f = row[q];
            if f != 0.0 {
                for &k in &nz {
                    let v = row[k] - f * prow[k];
                    row[k] = if v.abs() < DROP_TOL { 0.0 } else { v };
                }
                row[q] = 0.0;
                *beta -= f * beta_r;
            }
        };
        for (i, row) in before.chunks_mut(nc).enumerate() {
            update(row, &mut self.beta[i]);
        }
        for (k, row) in after.chunks_mut(nc).enumerate() {
            update(row, &mut self.beta[r + 1 + k]);
        }
        let dq = self.d[q];
        if dq != 0.0 {
            for &k in &nz {
                self.d[k] -= dq * prow[k];
            }
        }
        self.d[q] = 0.0;
        let old = self.basis[r];
        self.pos[old] = usize::MAX;
        self.basis[r] = q;
        self.pos[q] = r;
    }

    fn maybe_check(&mut self) -> Result<()> {
        self.since_check += 1;
        if self.since_check >= 100 {
            self.since_check = 0;
            if self.residual() > 1e-9 * (1.0 + self.max_abs_rhs()) {
                debug!("reinverting after residual drift");
                self.reinvert()?;
                self.recompute_reduced_costs();
            }
        }
        Ok(())
    }

    fn max_abs_rhs(&self) -> f64 {
        self.rhs.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Max-norm of `A x − b` over all columns.
    fn residual(&self) -> f64 {
        let mut r: Vec<f64> = self.rhs.iter().map(|b| -b).collect();
        for (j, col) in self.cols.iter().enumerate() {
            let xj = self.x[j];
            if xj != 0.0 {
                for &(i, a) in col {
                    r[i] += a * xj;
                }
            }
        }
        r.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn max_primal_infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .map(|&b| (self.lo[b] - self.x[b]).max(self.x[b] - self.hi[b]))
            .fold(0.0, f64::max)
    }

    /// Rebuilds `B⁻¹ [A | b]` from the original columns by Gauss-Jordan
    /// elimination with partial pivoting, then recomputes basic values.
    fn reinvert(&mut self) -> Result<()> {
        let (m, nc) = (self.m, self.ncols);
        let mut t = vec![0.0; m * nc];
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, a) in col {
                t[i * nc + j] = a;
            }
        }
        let mut beta = self.rhs.clone();
        let mut assigned = vec![false; m];
        let mut new_basis = vec![usize::MAX; m];
        let old_basis = self.basis.clone();
        let mut dropped = Vec::new();
        for &c in &old_basis {
            let mut best = None;
            let mut best_abs = 1e-11;
            for i in 0..m {
                if !assigned[i] && t[i * nc + c].abs() > best_abs {
                    best_abs = t[i * nc + c].abs();
                    best = Some(i);
                }
            }
            let Some(r) = best else {
                dropped.push(c);
                continue;
            };
            assigned[r] = true;
            new_basis[r] = c;
            eliminate(&mut t, &mut beta, m, nc, r, c);
        }
        // Repair a singular basis with the slack (or artificial) of each
        // uncovered row.
        for r in 0..m {
            if assigned[r] {
                continue;
            }
            let c = (0..nc)
                .filter(|&c| self.kinds[c] != ColKind::Structural && !new_basis.contains(&c))
                .max_by(|&a, &b| t[r * nc + a].abs().total_cmp(&t[r * nc + b].abs()))
                .filter(|&c| t[r * nc + c].abs() > 1e-11)
                .ok_or_else(|| Error::Numerical("singular basis could not be repaired".into()))?;
            assigned[r] = true;
            new_basis[r] = c;
            eliminate(&mut t, &mut beta, m, nc, r, c);
        }
        for c in dropped {
            // Leaves the basis at the nearest finite bound.
            self.x[c] = self.x[c].clamp(self.lo[c], self.hi[c]);
            if !self.x[c].is_finite() {
                self.x[c] = if self.lo[c].is_finite() {
                    self.lo[c]
                } else {
                    self.hi[c]
                };
            }
        }
        self.t = t;
        self.beta = beta;
        self.basis = new_basis;
        self.pos = vec![usize::MAX; nc];
        for (r, &b) in self.basis.iter().enumerate() {
            self.pos[b] = r;
        }
        self.recompute_basic_values();
        if !self.cost.is_empty() {
            self.recompute_reduced_costs();
        }
        Ok(())
    }

    fn recompute_basic_values(&mut self) {
        let nc = self.ncols;
        for r in 0..self.m {
            let row = &self.t[r * nc..(r + 1) * nc];
            let mut v = self.beta[r];
            for (j, a) in row.iter().enumerate() {
                if *a != 0.0 && self.pos[j] == usize::MAX {
                    v -= a * self.x[j];
                }
            }
            let b = self.basis[r];
            self.x[b] = v;
        }
    }

    /// Whether every binary structural column is within `tol` of 0 or 1.
    pub fn binaries_integral(&self, model: &MipModel, tol: f64) -> bool {
        model
            .variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .all(|(j, _)| (self.x[j] - self.x[j].round()).abs() <= tol)
    }
}

fn eliminate(t: &mut [f64], beta: &mut [f64], m: usize, nc: usize, r: usize, c: usize) {
    let inv = 1.0 / t[r * nc + c];
    for v in &mut t[r * nc..(r + 1) * nc] {
        *v *= inv;
    }
    beta[r] *= inv;
    let prow: Vec<f64> = t[r * nc..(r + 1) * nc].to_vec();
    let nz: Vec<usize> = (0..nc).filter(|&k| prow[k] != 0.0).collect();
    for i in 0..m {
        if i == r {
            continue;
        }
        let f = t[i * nc + c];
        if f != 0.0 {
            for &k in &nz {
                t[i * nc + k] -= f * prow[k];
            }
            t[i * nc + c] = 0.0;
            beta[i] -= f * beta[r];
        }
    }
}
