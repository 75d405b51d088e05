//! Every relaxation contains the lifted feasible set and bounds the optimum
//! from below.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qrelax::model::{
    Interval, Method, MiqcqpInstance, QuadForm, QuadFunction, RelaxConfig, SolveStatus,
};
use qrelax::relaxer::{build_relaxation, relax_and_solve, validate_relaxation};
use qrelax::solver::SolveLimits;

fn random_instance(rng: &mut ChaCha8Rng, n: usize, k: usize, constrained: bool) -> MiqcqpInstance {
    let bounds = (0..n)
        .map(|_| {
            let lo = rng.gen_range(-2..=1) as f64 * 0.5;
            Interval::new(lo, lo + rng.gen_range(1..=4) as f64 * 0.5)
        })
        .collect();
    let mut inst = MiqcqpInstance::new(bounds, k);
    let quad = |rng: &mut ChaCha8Rng| {
        let mut q = QuadForm::new();
        for i in 0..n {
            for j in i..n {
                if rng.gen_bool(0.7) {
                    q.add(i, j, rng.gen_range(-3.0..3.0));
                }
            }
        }
        q
    };
    inst.objective.quad = quad(rng);
    inst.objective.lin = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
    inst.objective.bin = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
    if constrained {
        let mut c = QuadFunction::zero(n, k);
        c.quad = quad(rng);
        c.lin = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        c.bin = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        // Slack at the box midpoint keeps the instance feasible.
        let mid: Vec<f64> = inst.bounds.iter().map(|b| b.mid()).collect();
        c.constant = -c.eval(&mid, &vec![0.0; k]) - 0.5;
        inst.constraints.push(c);
    }
    inst.validate().unwrap();
    inst
}

/// Smallest objective over a uniform grid of feasible points. The true
/// optimum is at most this value.
fn grid_upper_bound(inst: &MiqcqpInstance, per_axis: usize) -> f64 {
    let n = inst.n();
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; n];
    loop {
        let x: Vec<f64> = idx
            .iter()
            .zip(&inst.bounds)
            .map(|(&i, b)| b.lo + b.width() * i as f64 / (per_axis - 1) as f64)
            .collect();
        for mask in 0..(1usize << inst.k()) {
            let y: Vec<f64> = (0..inst.k()).map(|j| ((mask >> j) & 1) as f64).collect();
            if inst.max_violation(&x, &y) <= 0.0 {
                best = best.min(inst.objective_value(&x, &y));
            }
        }
        let mut d = 0;
        while d < n {
            idx[d] += 1;
            if idx[d] < per_axis {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
        if d == n {
            return best;
        }
    }
}

#[test]
fn lifted_points_are_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..12 {
        let inst = random_instance(&mut rng, 1 + case % 4, case % 3, case % 2 == 0);
        for method in Method::ALL {
            for depth in 1..=3 {
                let r = build_relaxation(&inst, &RelaxConfig::new(method, depth)).unwrap();
                let rep = validate_relaxation(&inst, &r, 200, case as u64)
                    .unwrap_or_else(|e| panic!("case {case} {method} L={depth}: {e}"));
                assert!(rep.samples > 0);
                assert!(
                    rep.worst_objective_gap < 1e-8,
                    "case {case} {method} L={depth}"
                );
            }
        }
    }
}

#[test]
fn dual_bound_below_grid_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let limits = SolveLimits {
        rel_gap: 1e-9,
        ..SolveLimits::default()
    };
    for case in 0..8 {
        let inst = random_instance(&mut rng, 1 + case % 3, case % 2, case % 3 == 1);
        let grid = grid_upper_bound(&inst, 41);
        assert!(grid.is_finite());
        for method in Method::ALL {
            for depth in [1, 3] {
                let s = relax_and_solve(&inst, &RelaxConfig::new(method, depth), &limits).unwrap();
                assert_eq!(
                    s.mip.status,
                    SolveStatus::Optimal,
                    "case {case} {method} L={depth}"
                );
                assert!(
                    s.mip.dual_bound <= grid + 1e-7,
                    "case {case} {method} L={depth}: bound {} above grid optimum {grid}",
                    s.mip.dual_bound
                );
                if let Some(p) = s.primal_bound() {
                    assert!(p >= s.mip.dual_bound - 1e-7);
                }
            }
        }
    }
}
