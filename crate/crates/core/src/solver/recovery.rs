//! Local polish that turns a relaxation solution into a candidate point for
//! the original MIQCQP.
//!
//! Binaries are rounded and fixed. The continuous part then runs projected
//! coordinate descent on the penalty merit
//! `f(x) + μ Σ_j max(0, g_j(x))²`, doubling `μ` after every sweep. Each
//! coordinate step scans a uniform grid over the variable's box and refines
//! the best grid point with a golden-section search.

use crate::model::MiqcqpInstance;

/// Violation at or below which a recovered point is declared feasible.
pub const RECOVERY_FEAS_TOL: f64 = 1e-6;

const SWEEPS: usize = 20;
const INITIAL_PENALTY: f64 = 10.0;
const GRID_POINTS: usize = 32;
const GOLDEN_STEPS: usize = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub objective: f64,
    pub max_violation: f64,
    pub feasible: bool,
}

/// Best-effort search for a good feasible point near `(x_start, y_start)`.
pub fn primal_recovery(inst: &MiqcqpInstance, x_start: &[f64], y_start: &[f64]) -> Recovery {
    let y: Vec<f64> = y_start
        .iter()
        .map(|v| if *v >= 0.5 { 1.0 } else { 0.0 })
        .collect();
    let mut x: Vec<f64> = x_start
        .iter()
        .zip(&inst.bounds)
        .map(|(v, b)| v.clamp(b.lo, b.hi))
        .collect();

    let mut best = candidate(inst, &x, &y);
    let mut mu = INITIAL_PENALTY;
    for _ in 0..SWEEPS {
        let mut moved = false;
        for i in 0..x.len() {
            let b = inst.bounds[i];
            if b.width() <= 0.0 {
                continue;
            }
            let h = b.width() / GRID_POINTS as f64;
            let (current, arg, val) = {
                let mut trial = x.clone();
                let mut merit = |t: f64| {
                    trial[i] = t;
                    penalty_merit(inst, &trial, &y, mu)
                };
                let current = merit(x[i]);
                let (mut arg, mut val) = (x[i], current);
                for k in 0..=GRID_POINTS {
                    let t = b.lo + h * k as f64;
                    let v = merit(t);
                    if v < val {
                        arg = t;
                        val = v;
                    }
                }
                let (t, v) = golden_section(&mut merit, (arg - h).max(b.lo), (arg + h).min(b.hi));
                if v < val {
                    arg = t;
                    val = v;
                }
                (current, arg, val)
            };
            if val < current {
                x[i] = arg;
                moved = true;
                let c = candidate(inst, &x, &y);
                if better(&c, &best) {
                    best = c;
                }
            }
        }
        if !moved && best.feasible {
            break;
        }
        mu *= 2.0;
    }
    best
}

fn candidate(inst: &MiqcqpInstance, x: &[f64], y: &[f64]) -> Recovery {
    let max_violation = inst.max_violation(x, y);
    Recovery {
        x: x.to_vec(),
        y: y.to_vec(),
        objective: inst.objective_value(x, y),
        max_violation,
        feasible: max_violation <= RECOVERY_FEAS_TOL,
    }
}

/// Feasible beats infeasible; among feasible points the lower objective
/// wins, among infeasible ones the smaller violation.
fn better(a: &Recovery, b: &Recovery) -> bool {
    match (a.feasible, b.feasible) {
        (true, false) => true,
        (false, true) => false,
        (true, true) => a.objective < b.objective,
        (false, false) => a.max_violation < b.max_violation,
    }
}

fn penalty_merit(inst: &MiqcqpInstance, x: &[f64], y: &[f64], mu: f64) -> f64 {
    let pen: f64 = inst
        .constraints
        .iter()
        .map(|c| c.eval(x, y).max(0.0).powi(2))
        .sum();
    inst.objective_value(x, y) + mu * pen
}

fn golden_section(f: &mut impl FnMut(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_STEPS {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}
