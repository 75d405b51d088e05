//! Normalized multiparametric disaggregation (NMDT).
//!
//! A variable `x ∈ [0, 1]` is written as `x = Σ_{j=1..L} 2^{−j} β_j + Δx`
//! with binary digits `β_j` and a residual `Δx ∈ [0, 2^{−L}]`. A product
//! `z = x y` then becomes `Σ 2^{−j} β_j y + Δx y`, where each `β_j y` is
//! exact under the binary envelope and only `Δx y` carries McCormick error.

use crate::envelopes::{bilinear_envelope, binary_envelope, Bounded};
use crate::error::{Error, Result};
use crate::model::{Interval, LinExpr, MipModel, Sense, VarId};
use crate::sawtooth::{build_epigraph_relaxation, SawtoothFragment};

/// Binary digits and residual of a discretized unit-box variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Digits {
    pub x: VarId,
    pub beta: Vec<VarId>,
    pub delta: VarId,
    pub depth: u32,
    /// The equality row `x = Σ 2^{−j} β_j + Δx`.
    pub row: usize,
}

impl Digits {
    /// `2^{−L}`, the width of one grid piece.
    pub fn step(&self) -> f64 {
        step(self.depth)
    }

    pub fn delta_bounded(&self) -> Bounded {
        Bounded::new(self.delta, Interval::new(0.0, self.step()))
    }

    /// `Σ 2^{−j} β_j`.
    pub fn grid_expr(&self) -> LinExpr {
        let mut e = LinExpr::new();
        for (j, &b) in self.beta.iter().enumerate() {
            e.add_term(b, weight(j));
        }
        e
    }
}

/// `2^{−L}`.
pub fn step(depth: u32) -> f64 {
    (0.5f64).powi(depth as i32)
}

/// `2^{−(j+1)}` for a zero-based digit index.
pub(crate) fn weight(j: usize) -> f64 {
    (0.5f64).powi(j as i32 + 1)
}

/// Adds digits `β_1..β_L`, the residual `Δx ∈ [0, 2^{−L}]` and the row
/// tying them to `x`.
pub fn discretize(model: &mut MipModel, x: VarId, depth: u32, tag: &str) -> Digits {
    let beta: Vec<VarId> = (1..=depth)
        .map(|j| model.add_binary(format!("{tag}_b{j}")))
        .collect();
    let delta = model.add_continuous(format!("{tag}_d"), 0.0, step(depth));
    let mut lhs = LinExpr::from(x) - delta;
    for (j, &b) in beta.iter().enumerate() {
        lhs.add_term(b, -weight(j));
    }
    let row = model.add_row(format!("{tag}_digits"), lhs, Sense::Eq, 0.0);
    Digits {
        x,
        beta,
        delta,
        depth,
        row,
    }
}

/// Base-2 digits of `x ∈ [0, 1]` truncated at depth `L`, and the residual.
/// The grid index is capped at `2^L − 1` so that `x = 1` maps to the last
/// piece with residual `2^{−L}`.
pub fn digit_expansion(x: f64, depth: u32) -> (Vec<f64>, f64) {
    let pieces = 1u64 << depth;
    let k = ((x * pieces as f64).floor().max(0.0) as u64).min(pieces - 1);
    let bits = (0..depth)
        .map(|j| ((k >> (depth - 1 - j)) & 1) as f64)
        .collect();
    let delta = (x - k as f64 * step(depth)).max(0.0);
    (bits, delta)
}

/// Product variables added for one term.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NmdtFragment {
    pub u: Vec<VarId>,
    pub delta_z: Option<VarId>,
    pub rows: Vec<usize>,
    /// Epigraph cuts of the tightened variant.
    pub sawtooth: Option<SawtoothFragment>,
}

/// Relaxes `z = x y` by discretizing `x`:
///
/// ```text
/// z = Σ 2^{−j} u_j + Δz,   u_j ∈ M(y, β_j),   Δz ∈ M(Δx, y)
/// ```
pub fn relax_bilinear_nmdt(
    model: &mut MipModel,
    z: VarId,
    digits: &Digits,
    y: VarId,
    tag: &str,
) -> NmdtFragment {
    let yb = Bounded::var(model, y);
    let h = digits.step();
    let mut frag = NmdtFragment::default();
    let mut total = LinExpr::new();
    for (j, &b) in digits.beta.iter().enumerate() {
        let u = model.add_continuous(
            format!("{tag}_u{}", j + 1),
            yb.bounds.lo.min(0.0),
            yb.bounds.hi.max(0.0),
        );
        frag.u.push(u);
        total.add_term(u, weight(j));
        frag.rows
            .extend(binary_envelope(model, &yb, b, u, &format!("{tag}_u{}", j + 1)).rows);
    }
    let dz_bounds = Interval::new(0.0, h).product(&yb.bounds);
    let dz = model.add_continuous(format!("{tag}_dz"), dz_bounds.lo, dz_bounds.hi);
    frag.delta_z = Some(dz);
    total.add_term(dz, 1.0);
    frag.rows.extend(
        bilinear_envelope(
            model,
            &digits.delta_bounded(),
            &yb,
            dz,
            &format!("{tag}_dz"),
        )
        .rows,
    );
    frag.rows.push(model.add_row(
        format!("{tag}_sum"),
        LinExpr::from(z) - total,
        Sense::Eq,
        0.0,
    ));
    frag
}

/// Relaxes `y = x²` by pairing the digits of `x` with `x` itself:
///
/// ```text
/// y = Σ 2^{−j} u_j + Δy,   u_j ∈ M(x, β_j),   Δy ∈ M(Δx, x)
/// ```
pub fn relax_square_nmdt(
    model: &mut MipModel,
    y: VarId,
    digits: &Digits,
    tag: &str,
) -> NmdtFragment {
    relax_bilinear_nmdt(model, y, digits, digits.x, tag)
}

/// [`relax_square_nmdt`] plus the depth-`L1` sawtooth epigraph cuts on
/// `(x, y)`. Only lower bounds on `y` are added.
pub fn relax_square_tnmdt(
    model: &mut MipModel,
    y: VarId,
    digits: &Digits,
    tight_depth: u32,
    tag: &str,
) -> Result<NmdtFragment> {
    if tight_depth < digits.depth {
        return Err(Error::Config(format!(
            "tightening depth L1 = {tight_depth} is below L = {}",
            digits.depth
        )));
    }
    let mut frag = relax_square_nmdt(model, y, digits, tag);
    let saw = build_epigraph_relaxation(model, digits.x, y, tight_depth, &format!("{tag}_q"));
    frag.rows.extend(saw.rows.iter().copied());
    frag.sawtooth = Some(saw);
    Ok(frag)
}
