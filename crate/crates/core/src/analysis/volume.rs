//! LP-relaxation volumes and sharpness checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::errors::{max_error_theoretical, monte_carlo, Estimate};
use super::product::{Product, ProductModel, RangeProbe};
use crate::envelopes::bilinear_envelope_range;
use crate::error::{Error, Result};
use crate::model::{Interval, LinExpr, SolveStatus};
use crate::nmdt::step;
use crate::solver::{solve_lp, solve_mip, SolveLimits};

/// Reference volume for univariate relaxations of `x²`: `¼ 2^{−2L}`, or
/// `¼` for the plain envelope.
pub fn lp_volume_reference(product: Product, depth: u32) -> Option<f64> {
    match product {
        Product::McCormickSquare => Some(0.25),
        Product::NmdtSquare | Product::DnmdtSquare => Some(0.25 * 2f64.powi(-2 * depth as i32)),
        _ => None,
    }
}

/// Monte-Carlo area of the projected LP relaxation of `y = x²`: for each
/// sampled `x`, the gap between LP-max and LP-min of `y` with all binaries
/// relaxed.
pub fn lp_volume_univariate(
    product: Product,
    depth: u32,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    if !matches!(
        product,
        Product::McCormickSquare | Product::NmdtSquare | Product::DnmdtSquare
    ) {
        return Err(Error::Domain(format!(
            "{product} is not a bounded univariate relaxation"
        )));
    }
    let pm = ProductModel::build(product, depth, 0.5)?;
    monte_carlo(
        samples,
        seed,
        || RangeProbe::new(&pm),
        |probe, rng| {
            let x: f64 = rng.gen();
            let (lo, hi) = probe
                .range(&pm.point_fixings(x, 0.0, false))?
                .ok_or_else(|| Error::Numerical(format!("LP relaxation infeasible at x = {x}")))?;
            Ok(hi - lo)
        },
    )
}

/// Fragments whose LP relaxation should equal the McCormick envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SharpnessTarget {
    Nmdt { depth: u32 },
    Dnmdt { depth: u32, lambda: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum SharpnessOutcome {
    Pass {
        inside: usize,
        outside: usize,
    },
    Counterexample {
        x: f64,
        y: f64,
        z: f64,
        inside: bool,
    },
}

/// Gap between sampled outside points and the envelope.
const OUTSIDE_MARGIN: f64 = 1e-3;
const FEAS_TOL: f64 = 1e-7;

/// Samples `n_points` points inside the unit-box McCormick envelope and as
/// many outside it, and checks that exactly the inside ones extend to a
/// feasible point of the fragment's LP relaxation.
pub fn sharpness_probe(
    target: SharpnessTarget,
    n_points: usize,
    seed: u64,
) -> Result<SharpnessOutcome> {
    let pm = match target {
        SharpnessTarget::Nmdt { depth } => ProductModel::build(Product::Nmdt, depth, 0.5)?,
        SharpnessTarget::Dnmdt { depth, lambda } => {
            ProductModel::build(Product::Dnmdt, depth, lambda)?
        }
    };
    let mut probe = RangeProbe::new(&pm);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for inside in [true, false] {
        for _ in 0..n_points {
            let (x, y): (f64, f64) = (rng.gen(), rng.gen());
            let (lo, hi) = bilinear_envelope_range(Interval::UNIT, Interval::UNIT, x, y);
            let z = if inside {
                lo + rng.gen::<f64>() * (hi - lo)
            } else {
                let off = OUTSIDE_MARGIN + rng.gen::<f64>() * 0.25;
                if rng.gen::<bool>() {
                    hi + off
                } else {
                    lo - off
                }
            };
            let feasible = match probe.range(&pm.point_fixings(x, y, false))? {
                Some((zlo, zhi)) => z >= zlo - FEAS_TOL && z <= zhi + FEAS_TOL,
                None => false,
            };
            if feasible != inside {
                return Ok(SharpnessOutcome::Counterexample { x, y, z, inside });
            }
        }
    }
    Ok(SharpnessOutcome::Pass {
        inside: n_points,
        outside: n_points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessReport {
    pub depth: u32,
    /// The fractional point satisfies every LP row.
    pub lp_feasible: bool,
    /// `min y` over the MIP relaxation at `x = ½`.
    pub mip_min_y: f64,
    /// `¼ − E_max`: every point of the convex hull of the projected MIP
    /// relaxation at `x = ½` has `y` at least this large.
    pub hull_lower_bound: f64,
    pub outside_hull: bool,
}

/// Checks the point `x = ½`, `β_j = ½`, `Δx = 2^{−L−1}`, `y = 0` against a
/// univariate relaxation.
pub fn nonsharp_witness(product: Product, depth: u32) -> Result<WitnessReport> {
    if !matches!(product, Product::NmdtSquare | Product::DnmdtSquare) {
        return Err(Error::Domain(format!(
            "no univariate witness for {product}"
        )));
    }
    let pm = ProductModel::build(product, depth, 0.5)?;
    let d = pm
        .x_digits
        .as_ref()
        .expect("univariate products discretize x");

    let mut lp = pm.model.clone();
    let mut fix = vec![(pm.x, 0.5), (pm.z, 0.0), (d.delta, 0.5 * step(depth))];
    fix.extend(d.beta.iter().map(|&b| (b, 0.5)));
    for (v, val) in fix {
        lp.variables[v.0].bounds = Interval::new(val, val);
    }
    let lp_feasible = solve_lp(&lp)?.status != SolveStatus::Infeasible;

    let mut mip = pm.model.clone();
    mip.variables[pm.x.0].bounds = Interval::new(0.5, 0.5);
    mip.set_objective(LinExpr::from(pm.z));
    let res = solve_mip(
        &mip,
        &SolveLimits {
            rel_gap: 0.0,
            ..SolveLimits::default()
        },
    )?;
    let mip_min_y = res.primal_bound();

    let hull_lower_bound = 0.25 - max_error_theoretical(product, depth);
    Ok(WitnessReport {
        depth,
        lp_feasible,
        mip_min_y,
        hull_lower_bound,
        outside_hull: 0.0 < hull_lower_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_envelope_area() {
        let e = lp_volume_univariate(Product::McCormickSquare, 0, 20_000, 42).unwrap();
        assert!(e.z_score(0.25) < 4.0, "{e:?}");
    }

    #[test]
    fn nmdt_bilinear_is_sharp() {
        let out = sharpness_probe(SharpnessTarget::Nmdt { depth: 2 }, 100, 1).unwrap();
        assert_eq!(
            out,
            SharpnessOutcome::Pass {
                inside: 100,
                outside: 100
            }
        );
    }

    #[test]
    fn witness_at_depth_one() {
        let w = nonsharp_witness(Product::NmdtSquare, 1).unwrap();
        assert!(w.lp_feasible && w.outside_hull);
        assert!(w.mip_min_y > w.hull_lower_bound - 1e-9);
    }

    #[test]
    fn rejects_bilinear_volume() {
        assert!(lp_volume_univariate(Product::Nmdt, 1, 10, 1).is_err());
    }
}
