//! Breakpoint objective, shifted geometric mean and performance profiles.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Average error width `⅙ (Σ lx_i²)(Σ ly_j²)` of a piecewise McCormick
/// relaxation on the unit square with the given piece lengths.
pub fn breakpoint_objective(lx: &[f64], ly: &[f64]) -> Result<f64> {
    for (name, l) in [("x", lx), ("y", ly)] {
        if l.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::Domain(format!(
                "{name} lengths must be non-negative"
            )));
        }
        let s: f64 = l.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "{name} lengths sum to {s}, expected 1"
            )));
        }
    }
    let sq = |l: &[f64]| l.iter().map(|v| v * v).sum::<f64>();
    Ok(sq(lx) * sq(ly) / 6.0)
}

/// `(Π (t_i + s))^{1/n} − s`. Falls back to log space when the product
/// over- or underflows.
pub fn shifted_geomean(values: &[f64], shift: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Domain("shifted geometric mean of no values".into()));
    }
    if values
        .iter()
        .any(|&t| (t + shift).is_nan() || t + shift <= 0.0)
    {
        return Err(Error::Domain(format!(
            "values must satisfy t + {shift} > 0"
        )));
    }
    let n = values.len() as f64;
    let prod: f64 = values.iter().map(|&t| t + shift).product();
    if prod.is_normal() {
        return Ok(prod.powf(1.0 / n) - shift);
    }
    let mean_log = values.iter().map(|&t| (t + shift).ln()).sum::<f64>() / n;
    Ok(mean_log.exp() - shift)
}

/// Which bound values are preferred when forming ratios.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// Smaller is better; ratios are `d / min d` directly.
    LowerIsBetter,
    /// Larger is better, e.g. lower bounds of a minimization problem.
    /// Bounds are negated before forming ratios.
    HigherIsBetter,
}

/// Ratios of every method to the best method, per instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileTable {
    pub methods: Vec<String>,
    /// Instances with at least one reported bound.
    pub instances: Vec<String>,
    /// Oriented and shifted bounds, `methods × instances`, all positive.
    pub scores: Vec<Vec<f64>>,
    pub ratios: Vec<Vec<f64>>,
    /// Constant added to each instance's oriented bounds (0 if none).
    pub shifts: Vec<f64>,
}

impl ProfileTable {
    /// Fraction of instances on which `method` is within `tau` of the best.
    pub fn profile(&self, method: usize, tau: f64) -> f64 {
        if self.instances.is_empty() {
            return 0.0;
        }
        let hits = self.ratios[method].iter().filter(|&&r| r <= tau).count();
        hits as f64 / self.instances.len() as f64
    }

    /// Step points `(τ, P(τ))` where `P` of `method` jumps.
    pub fn steps(&self, method: usize) -> Vec<(f64, f64)> {
        let mut r = self.ratios[method].clone();
        r.sort_by(f64::total_cmp);
        let n = r.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &tau) in r.iter().enumerate() {
            let p = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == tau => last.1 = p,
                _ => out.push((tau, p)),
            }
        }
        out
    }

    pub fn tau_max(&self) -> f64 {
        self.ratios.iter().flatten().copied().fold(1.0, f64::max)
    }
}

/// Dolan–Moré ratios `r = d / min_s d` over a `methods × instances` table
/// of bounds.
///
/// Missing cells take the worst reported bound of their instance; instances
/// without any bound are dropped. After orientation, an instance whose best
/// value is not positive is shifted by a common constant so that its best
/// value becomes `max(1, worst − best)`.
pub fn performance_profile(
    methods: &[String],
    instances: &[String],
    bounds: &[Vec<Option<f64>>],
    orientation: Orientation,
) -> Result<ProfileTable> {
    if bounds.len() != methods.len() || bounds.iter().any(|row| row.len() != instances.len()) {
        return Err(Error::Domain(
            "bound table shape does not match labels".into(),
        ));
    }
    let sign = match orientation {
        Orientation::LowerIsBetter => 1.0,
        Orientation::HigherIsBetter => -1.0,
    };
    let mut kept = Vec::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut shifts = Vec::new();
    for (p, name) in instances.iter().enumerate() {
        let present: Vec<f64> = bounds
            .iter()
            .filter_map(|row| row[p])
            .filter(|v| v.is_finite())
            .map(|v| sign * v)
            .collect();
        if present.is_empty() {
            continue;
        }
        let best = present.iter().copied().fold(f64::INFINITY, f64::min);
        let worst = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let shift = if best > 0.0 {
            0.0
        } else {
            (worst - best).max(1.0) - best
        };
        let col = bounds
            .iter()
            .map(|row| match row[p] {
                Some(v) if v.is_finite() => sign * v + shift,
                _ => worst + shift,
            })
            .collect();
        kept.push(name.clone());
        columns.push(col);
        shifts.push(shift);
    }
    let scores: Vec<Vec<f64>> = (0..methods.len())
        .map(|s| columns.iter().map(|c| c[s]).collect())
        .collect();
    let ratios = (0..methods.len())
        .map(|s| {
            columns
                .iter()
                .map(|c| c[s] / c.iter().copied().fold(f64::INFINITY, f64::min))
                .collect()
        })
        .collect();
    Ok(ProfileTable {
        methods: methods.to_vec(),
        instances: kept,
        scores,
        ratios,
        shifts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn sgm_examples() {
        assert_eq!(shifted_geomean(&[0.0], 10.0).unwrap(), 0.0);
        assert!((shifted_geomean(&[10.0, 10.0], 10.0).unwrap() - 10.0).abs() < 1e-12);
        let v = shifted_geomean(&[90.0, 190.0], 10.0).unwrap();
        assert!((v - (20000f64.sqrt() - 10.0)).abs() < 1e-9);
        assert!((v - 131.421).abs() < 1e-3);
        assert!(shifted_geomean(&[], 10.0).is_err());
    }

    #[test]
    fn breakpoint_examples() {
        assert!((breakpoint_objective(&[0.5, 0.5], &[1.0]).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        let v = breakpoint_objective(&[0.3, 0.7], &[1.0]).unwrap();
        assert!((v - 0.58 / 6.0).abs() < 1e-15);
        assert!(
            (breakpoint_objective(&[0.5, 0.5], &[0.5, 0.5]).unwrap() - 0.25 / 6.0).abs() < 1e-15
        );
        assert!(breakpoint_objective(&[0.5, 0.6], &[1.0]).is_err());
        assert!(breakpoint_objective(&[1.5, -0.5], &[1.0]).is_err());
    }

    #[test]
    fn two_method_ratio() {
        let t = performance_profile(
            &names(&["A", "B"]),
            &names(&["p"]),
            &[vec![Some(10.0)], vec![Some(11.0)]],
            Orientation::LowerIsBetter,
        )
        .unwrap();
        assert_eq!(t.ratios[0][0], 1.0);
        assert!((t.ratios[1][0] - 1.1).abs() < 1e-15);
    }

    #[test]
    fn missing_cells_take_worst() {
        let t = performance_profile(
            &names(&["A", "B"]),
            &names(&["p", "q"]),
            &[vec![Some(2.0), None], vec![Some(4.0), None]],
            Orientation::LowerIsBetter,
        )
        .unwrap();
        assert_eq!(t.instances, names(&["p"]));
        let t = performance_profile(
            &names(&["A", "B"]),
            &names(&["p"]),
            &[vec![Some(2.0)], vec![None]],
            Orientation::LowerIsBetter,
        )
        .unwrap();
        assert_eq!(t.ratios[1][0], 1.0);
    }

    #[test]
    fn negative_lower_bounds_are_shifted() {
        // Minimization lower bounds −100 and −95: −95 is better.
        let t = performance_profile(
            &names(&["A", "B"]),
            &names(&["p"]),
            &[vec![Some(-100.0)], vec![Some(-95.0)]],
            Orientation::HigherIsBetter,
        )
        .unwrap();
        assert_eq!(t.shifts[0], 0.0);
        assert_eq!(t.ratios[1][0], 1.0);
        assert!((t.ratios[0][0] - 100.0 / 95.0).abs() < 1e-15);
        // Mixed signs: oriented values 0 and 3 become 3 and 6.
        let t = performance_profile(
            &names(&["A", "B"]),
            &names(&["p"]),
            &[vec![Some(0.0)], vec![Some(-3.0)]],
            Orientation::HigherIsBetter,
        )
        .unwrap();
        assert_eq!(t.shifts[0], 3.0);
        assert_eq!(t.ratios[0][0], 1.0);
        assert_eq!(t.ratios[1][0], 2.0);
    }

    proptest! {
        #[test]
        fn sgm_permutation_invariant(mut v in proptest::collection::vec(0.0f64..1e3, 1..10), s in 0.0f64..20.0) {
            let a = shifted_geomean(&v, s).unwrap();
            v.reverse();
            let b = shifted_geomean(&v, s).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
        }

        #[test]
        fn sgm_zero_shift_is_geomean(v in proptest::collection::vec(0.1f64..1e3, 1..10)) {
            let g = v.iter().map(|t| t.ln()).sum::<f64>() / v.len() as f64;
            let a = shifted_geomean(&v, 0.0).unwrap();
            prop_assert!((a - g.exp()).abs() <= 1e-9 * a);
        }

        #[test]
        fn profile_sanity(
            table in proptest::collection::vec(proptest::collection::vec(-50.0f64..50.0, 4), 3),
            higher in any::<bool>(),
        ) {
            let ms = names(&["a", "b", "c"]);
            let ps = names(&["p1", "p2", "p3", "p4"]);
            let bounds: Vec<Vec<Option<f64>>> =
                table.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect();
            let o = if higher { Orientation::HigherIsBetter } else { Orientation::LowerIsBetter };
            let t = performance_profile(&ms, &ps, &bounds, o).unwrap();
            for s in 0..3 {
                prop_assert!(t.ratios[s].iter().all(|&r| r >= 1.0));
                let st = t.steps(s);
                prop_assert!(st.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
                prop_assert_eq!(t.profile(s, t.tau_max()), 1.0);
            }
            // The best method of each instance has ratio exactly 1.
            for p in 0..4 {
                prop_assert!((0..3).any(|s| t.ratios[s][p] == 1.0));
            }
        }

        #[test]
        fn uniform_breakpoints_are_optimal(
            n in 1usize..=8, m in 1usize..=8,
            noise in proptest::collection::vec(-1.0f64..1.0, 16),
            eps in 0.0f64..0.5,
        ) {
            let uniform = |k: usize| vec![1.0 / k as f64; k];
            let perturb = |k: usize, off: usize| {
                let raw: Vec<f64> = (0..k).map(|i| (1.0 + eps * noise[off + i]).max(0.0)).collect();
                let s: f64 = raw.iter().sum();
                let mut v: Vec<f64> = raw.iter().map(|r| r / s).collect();
                let drift = 1.0 - v.iter().sum::<f64>();
                v[0] += drift;
                v
            };
            let base = breakpoint_objective(&uniform(n), &uniform(m)).unwrap();
            let pert = breakpoint_objective(&perturb(n, 0), &perturb(m, 8)).unwrap();
            prop_assert!(pert >= base - 1e-15);
        }
    }
}
