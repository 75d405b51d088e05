//! McCormick envelopes for `z = x y`, `z = x β` with binary `β`, and
//! `y = x²`.
//!
//! Factors are passed as [`Bounded`] affine expressions so that builders can
//! relax products of blended quantities such as `λ Δy + (1 − λ) y` without
//! introducing a helper variable.

use crate::model::{Interval, LinExpr, MipModel, Sense, VarId};

/// An affine expression together with an interval that contains its range.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounded {
    pub expr: LinExpr,
    pub bounds: Interval,
}

impl Bounded {
    pub fn new(expr: impl Into<LinExpr>, bounds: Interval) -> Self {
        Bounded {
            expr: expr.into(),
            bounds,
        }
    }

    /// A single model variable with its declared bounds.
    pub fn var(model: &MipModel, v: VarId) -> Self {
        Bounded::new(v, model.var(v).bounds)
    }
}

/// Variables and rows appended to a model by a builder.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearFragment {
    pub new_vars: Vec<VarId>,
    pub rows: Vec<usize>,
}

impl LinearFragment {
    pub fn extend(&mut self, other: LinearFragment) {
        self.new_vars.extend(other.new_vars);
        self.rows.extend(other.rows);
    }
}

/// Adds the four McCormick inequalities for `z = x y`:
///
/// ```text
/// z >= xl y + x yl - xl yl      z <= xu y + x yl - xu yl
/// z >= xu y + x yu - xu yu      z <= xl y + x yu - xl yu
/// ```
pub fn bilinear_envelope(
    model: &mut MipModel,
    x: &Bounded,
    y: &Bounded,
    z: impl Into<LinExpr>,
    tag: &str,
) -> LinearFragment {
    let z = z.into();
    let (xl, xu) = (x.bounds.lo, x.bounds.hi);
    let (yl, yu) = (y.bounds.lo, y.bounds.hi);
    let plane = |a: f64, b: f64| y.expr.clone() * a + x.expr.clone() * b - a * b;
    let rows = vec![
        model.add_row(
            format!("{tag}_lo1"),
            z.clone() - plane(xl, yl),
            Sense::Ge,
            0.0,
        ),
        model.add_row(
            format!("{tag}_lo2"),
            z.clone() - plane(xu, yu),
            Sense::Ge,
            0.0,
        ),
        model.add_row(
            format!("{tag}_up1"),
            z.clone() - plane(xu, yl),
            Sense::Le,
            0.0,
        ),
        model.add_row(format!("{tag}_up2"), z - plane(xl, yu), Sense::Le, 0.0),
    ];
    LinearFragment {
        new_vars: Vec::new(),
        rows,
    }
}

/// Adds the envelope of `z = x β` for binary `β`:
///
/// ```text
/// xl β <= z <= xu β
/// x - xu (1 - β) <= z <= x - xl (1 - β)
/// ```
///
/// With `β` fixed to 0 or 1 the rows force `z = β x`.
pub fn binary_envelope(
    model: &mut MipModel,
    x: &Bounded,
    beta: VarId,
    z: impl Into<LinExpr>,
    tag: &str,
) -> LinearFragment {
    let z = z.into();
    let (xl, xu) = (x.bounds.lo, x.bounds.hi);
    let one_minus_beta = || LinExpr::constant(1.0) - beta;
    let rows = vec![
        model.add_row(format!("{tag}_lo1"), z.clone() - beta * xl, Sense::Ge, 0.0),
        model.add_row(format!("{tag}_up1"), z.clone() - beta * xu, Sense::Le, 0.0),
        model.add_row(
            format!("{tag}_lo2"),
            z.clone() - x.expr.clone() + one_minus_beta() * xu,
            Sense::Ge,
            0.0,
        ),
        model.add_row(
            format!("{tag}_up2"),
            z - x.expr.clone() + one_minus_beta() * xl,
            Sense::Le,
            0.0,
        ),
    ];
    LinearFragment {
        new_vars: Vec::new(),
        rows,
    }
}

/// Adds the two tangents at the interval ends and the secant for `y = x²`:
///
/// ```text
/// y >= 2 xl x - xl²,   y >= 2 xu x - xu²,   y <= (xl + xu) x - xl xu
/// ```
pub fn square_envelope(
    model: &mut MipModel,
    x: &Bounded,
    y: impl Into<LinExpr>,
    tag: &str,
) -> LinearFragment {
    let y = y.into();
    let (xl, xu) = (x.bounds.lo, x.bounds.hi);
    let rows = vec![
        model.add_row(
            format!("{tag}_tan_lo"),
            y.clone() - x.expr.clone() * (2.0 * xl),
            Sense::Ge,
            -xl * xl,
        ),
        model.add_row(
            format!("{tag}_tan_up"),
            y.clone() - x.expr.clone() * (2.0 * xu),
            Sense::Ge,
            -xu * xu,
        ),
        model.add_row(
            format!("{tag}_sec"),
            y - x.expr.clone() * (xl + xu),
            Sense::Le,
            -xl * xu,
        ),
    ];
    LinearFragment {
        new_vars: Vec::new(),
        rows,
    }
}

/// Range of `z` allowed by the bilinear envelope at the point `(x, y)`.
pub fn bilinear_envelope_range(xb: Interval, yb: Interval, x: f64, y: f64) -> (f64, f64) {
    let (xl, xu, yl, yu) = (xb.lo, xb.hi, yb.lo, yb.hi);
    let lo = (xl * y + x * yl - xl * yl).max(xu * y + x * yu - xu * yu);
    let hi = (xu * y + x * yl - xu * yl).min(xl * y + x * yu - xl * yu);
    (lo, hi)
}

/// Range of `y` allowed by the square envelope at `x`.
pub fn square_envelope_range(xb: Interval, x: f64) -> (f64, f64) {
    let (xl, xu) = (xb.lo, xb.hi);
    let lo = (2.0 * xl * x - xl * xl).max(2.0 * xu * x - xu * xu);
    let hi = (xl + xu) * x - xl * xu;
    (lo, hi)
}

/// Maximum gap between the bilinear envelope and `x y` over the box, with
/// the point where it is attained. Both sides reach `¼ wx wy` at the centre.
pub fn mccormick_max_error(xb: Interval, yb: Interval) -> (f64, (f64, f64)) {
    (0.25 * xb.width() * yb.width(), (xb.mid(), yb.mid()))
}

/// Maximum overestimation of `x²` by the secant, `¼ w²`, at the midpoint.
pub fn square_envelope_max_error(xb: Interval) -> (f64, f64) {
    (0.25 * xb.width() * xb.width(), xb.mid())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::MEMBERSHIP_TOL;
    use proptest::prelude::*;

    fn unit_model() -> (MipModel, VarId, VarId, VarId) {
        let mut m = MipModel::new();
        let x = m.add_continuous("x", 0.0, 1.0);
        let y = m.add_continuous("y", 0.0, 1.0);
        let z = m.add_continuous("z", -10.0, 10.0);
        (m, x, y, z)
    }

    fn feasible(m: &MipModel, vals: &[f64]) -> bool {
        m.rows.iter().all(|r| r.violation(vals) <= MEMBERSHIP_TOL)
    }

    #[test]
    fn unit_box_rows() {
        let (mut m, x, y, z) = unit_model();
        let (bx, by) = (Bounded::var(&m, x), Bounded::var(&m, y));
        let frag = bilinear_envelope(&mut m, &bx, &by, z, "mc");
        assert_eq!(frag.rows.len(), 4);
        let rows: Vec<_> = frag.rows.iter().map(|&i| m.rows[i].clone()).collect();
        // z >= 0
        assert_eq!(rows[0].coeffs, vec![(z, 1.0)]);
        assert_eq!((rows[0].sense, rows[0].rhs), (Sense::Ge, 0.0));
        // z - x - y >= -1
        assert_eq!(rows[1].coeffs, vec![(x, -1.0), (y, -1.0), (z, 1.0)]);
        assert_eq!((rows[1].sense, rows[1].rhs), (Sense::Ge, -1.0));
        // z - y <= 0 and z - x <= 0
        assert_eq!(rows[2].coeffs, vec![(y, -1.0), (z, 1.0)]);
        assert_eq!(rows[3].coeffs, vec![(x, -1.0), (z, 1.0)]);
        assert!(feasible(&m, &[0.5, 0.5, 0.25]));
        assert!(!feasible(&m, &[0.5, 0.5, 0.51]));
        assert!(m.rows[frag.rows[3]].violation(&[0.5, 0.5, 0.51]) > 0.0);
    }

    #[test]
    fn degenerate_factor_pins_product() {
        let (lo, hi) = bilinear_envelope_range(Interval::new(0.3, 0.3), Interval::UNIT, 0.3, 0.8);
        assert!((lo - 0.24).abs() < 1e-15 && (hi - 0.24).abs() < 1e-15);
    }

    #[test]
    fn binary_envelope_fixes_product() {
        for (beta, expect) in [(0.0, 0.0), (1.0, 0.7)] {
            let mut m = MipModel::new();
            let x = m.add_continuous("x", 0.0, 1.0);
            let b = m.add_binary("b");
            let z = m.add_continuous("z", -5.0, 5.0);
            let bx = Bounded::var(&m, x);
            binary_envelope(&mut m, &bx, b, z, "bin");
            assert!(feasible(&m, &[0.7, beta, expect]));
            assert!(!feasible(&m, &[0.7, beta, expect + 1e-6]));
            assert!(!feasible(&m, &[0.7, beta, expect - 1e-6]));
        }
    }

    #[test]
    fn binary_envelope_relaxed_range() {
        let mut m = MipModel::new();
        let x = m.add_continuous("x", -1.0, 2.0);
        let b = m.add_binary("b");
        let z = m.add_continuous("z", -5.0, 5.0);
        let bx = Bounded::var(&m, x);
        binary_envelope(&mut m, &bx, b, z, "bin");
        assert!(feasible(&m, &[0.5, 0.5, -0.5]));
        assert!(feasible(&m, &[0.5, 0.5, 1.0]));
        assert!(!feasible(&m, &[0.5, 0.5, -0.5 - 1e-6]));
        assert!(!feasible(&m, &[0.5, 0.5, 1.0 + 1e-6]));
    }

    #[test]
    fn square_rows_unit_and_symmetric() {
        let (lo, hi) = square_envelope_range(Interval::UNIT, 0.3);
        assert_eq!((lo, hi), (0.0, 0.3));
        let (lo, hi) = square_envelope_range(Interval::UNIT, 0.8);
        assert!((lo - 0.6).abs() < 1e-15 && hi == 0.8);

        let mut m = MipModel::new();
        let x = m.add_continuous("x", -1.0, 1.0);
        let y = m.add_continuous("y", -5.0, 5.0);
        let bx = Bounded::var(&m, x);
        let frag = square_envelope(&mut m, &bx, y, "sq");
        let r: Vec<_> = frag.rows.iter().map(|&i| &m.rows[i]).collect();
        assert_eq!(r[0].coeffs, vec![(x, 2.0), (y, 1.0)]);
        assert_eq!(r[0].rhs, -1.0);
        assert_eq!(r[1].coeffs, vec![(x, -2.0), (y, 1.0)]);
        assert_eq!(r[1].rhs, -1.0);
        assert_eq!(r[2].coeffs, vec![(y, 1.0)]);
        assert_eq!((r[2].sense, r[2].rhs), (Sense::Le, 1.0));
        assert_eq!(square_envelope_max_error(Interval::UNIT), (0.25, 0.5));
    }

    #[test]
    fn max_error_values() {
        assert_eq!(
            mccormick_max_error(Interval::UNIT, Interval::UNIT),
            (0.25, (0.5, 0.5))
        );
        for l in 1..6 {
            let h = (0.5f64).powi(l);
            let (e, _) = mccormick_max_error(Interval::new(0.0, h), Interval::UNIT);
            assert_eq!(e, (0.5f64).powi(l + 2));
        }
        assert_eq!(
            mccormick_max_error(Interval::new(0.4, 0.4), Interval::UNIT).0,
            0.0
        );
    }

    #[test]
    fn grid_oracle_matches_analytic_error() {
        let boxes = [
            (Interval::UNIT, Interval::UNIT),
            (Interval::new(-1.0, 2.0), Interval::new(0.5, 1.5)),
            (Interval::new(0.0, 0.25), Interval::UNIT),
        ];
        for (xb, yb) in boxes {
            let mut under: f64 = 0.0;
            let mut over: f64 = 0.0;
            for i in 0..=400 {
                for j in 0..=400 {
                    let x = xb.lo + xb.width() * i as f64 / 400.0;
                    let y = yb.lo + yb.width() * j as f64 / 400.0;
                    let (lo, hi) = bilinear_envelope_range(xb, yb, x, y);
                    under = under.max(x * y - lo);
                    over = over.max(hi - x * y);
                }
            }
            let (e, _) = mccormick_max_error(xb, yb);
            assert!((under - e).abs() < 1e-4, "{under} vs {e}");
            assert!((over - e).abs() < 1e-4, "{over} vs {e}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn graph_points_lie_in_the_hull(x in 0.0f64..=1.0, y in 0.0f64..=1.0,
                                        a in -3.0f64..3.0, w in 0.0f64..4.0,
                                        b in -3.0f64..3.0, v in 0.0f64..4.0) {
            let xb = Interval::new(a, a + w);
            let yb = Interval::new(b, b + v);
            let (px, py) = (xb.lo + x * w, yb.lo + y * v);
            let (lo, hi) = bilinear_envelope_range(xb, yb, px, py);
            let tol = MEMBERSHIP_TOL * (1.0 + px.abs() * py.abs());
            prop_assert!(lo <= px * py + tol && px * py <= hi + tol);
        }
    }

    proptest! {
        #[test]
        fn binary_fixing_is_exact(x in -2.0f64..2.0, beta in 0u8..=1) {
            let mut m = MipModel::new();
            let xv = m.add_continuous("x", -2.0, 2.0);
            let b = m.add_binary("b");
            let z = m.add_continuous("z", -5.0, 5.0);
            let bx = Bounded::var(&m, xv);
            binary_envelope(&mut m, &bx, b, z, "bin");
            let beta = f64::from(beta);
            // The feasible z range is the intersection of the four rows.
            let lo = (beta * -2.0).max(x - 2.0 * (1.0 - beta));
            let hi = (beta * 2.0).min(x + 2.0 * (1.0 - beta));
            prop_assert!((lo - beta * x).abs() < 1e-12 && (hi - beta * x).abs() < 1e-12);
            prop_assert!(feasible(&m, &[x, beta, beta * x]));
        }

        #[test]
        fn square_envelope_contains_graph(t in 0.0f64..=1.0, a in -3.0f64..3.0, w in 0.0f64..4.0) {
            let xb = Interval::new(a, a + w);
            let x = a + t * w;
            let (lo, hi) = square_envelope_range(xb, x);
            prop_assert!(lo <= x * x + 1e-9 && x * x <= hi + 1e-9);
        }
    }
}
