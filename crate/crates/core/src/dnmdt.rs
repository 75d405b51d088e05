//! Doubly discretized NMDT (D-NMDT).
//!
//! Both factors of `z = x y` are expanded in base-2 digits. Writing
//! `X = Σ 2^{−j} β^x_j` and `Y = Σ 2^{−j} β^y_j`, the identity
//!
//! ```text
//! x y = X (λ Δy + (1 − λ) y) + Y ((1 − λ) Δx + λ x) + Δx Δy
//! ```
//!
//! holds for every `λ`. Digit products are exact under binary envelopes and
//! the only McCormick error comes from `Δx Δy` over `[0, 2^{−L}]²`.

use crate::envelopes::{bilinear_envelope, binary_envelope, square_envelope, Bounded};
use crate::error::{Error, Result};
use crate::model::{Interval, LinExpr, MipModel, Sense, VarId};
use crate::nmdt::{weight, Digits};
use crate::sawtooth::{build_epigraph_relaxation, SawtoothFragment};

/// Product variables added for one term.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DnmdtFragment {
    /// Products of `β^x_j` with `λ Δy + (1 − λ) y` (or `Δx + x` for squares).
    pub u: Vec<VarId>,
    /// Products of `β^y_j` with `(1 − λ) Δx + λ x`; empty for squares.
    pub v: Vec<VarId>,
    pub delta_z: Option<VarId>,
    pub lambda: f64,
    pub rows: Vec<usize>,
    pub sawtooth: Option<SawtoothFragment>,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if (0.0..=1.0).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "lambda = {lambda} is outside [0, 1]"
        )))
    }
}

/// `λ Δ + (1 − λ) w` for unit-box `w` and `Δ ∈ [0, h]`, with its range
/// `[0, λ h + 1 − λ]`.
fn blend(delta: VarId, whole: VarId, lambda: f64, h: f64) -> Bounded {
    Bounded::new(
        delta * lambda + whole * (1.0 - lambda),
        Interval::new(0.0, lambda * h + 1.0 - lambda),
    )
}

fn add_digit_products(
    model: &mut MipModel,
    digits: &Digits,
    factor: &Bounded,
    name: &str,
    frag_rows: &mut Vec<usize>,
    total: &mut LinExpr,
) -> Vec<VarId> {
    let mut out = Vec::with_capacity(digits.beta.len());
    for (j, &b) in digits.beta.iter().enumerate() {
        let tag = format!("{name}{}", j + 1);
        let p = model.add_continuous(&tag, factor.bounds.lo.min(0.0), factor.bounds.hi.max(0.0));
        frag_rows.extend(binary_envelope(model, factor, b, p, &tag).rows);
        total.add_term(p, weight(j));
        out.push(p);
    }
    out
}

/// Relaxes `z = x y` with both factors discretized:
///
/// ```text
/// z = Σ 2^{−j} (u_j + v_j) + Δz
/// u_j ∈ M(λ Δy + (1 − λ) y, β^x_j)
/// v_j ∈ M((1 − λ) Δx + λ x, β^y_j)
/// Δz  ∈ M(Δx, Δy)
/// ```
pub fn relax_bilinear_dnmdt(
    model: &mut MipModel,
    z: VarId,
    dx: &Digits,
    dy: &Digits,
    lambda: f64,
    tag: &str,
) -> Result<DnmdtFragment> {
    check_lambda(lambda)?;
    if dx.depth != dy.depth {
        return Err(Error::Config(format!(
            "factor depths differ ({} and {})",
            dx.depth, dy.depth
        )));
    }
    let h = dx.step();
    let mut frag = DnmdtFragment {
        lambda,
        ..Default::default()
    };
    let mut total = LinExpr::new();
    let fu = blend(dy.delta, dy.x, lambda, h);
    frag.u = add_digit_products(
        model,
        dx,
        &fu,
        &format!("{tag}_u"),
        &mut frag.rows,
        &mut total,
    );
    let fv = blend(dx.delta, dx.x, 1.0 - lambda, h);
    frag.v = add_digit_products(
        model,
        dy,
        &fv,
        &format!("{tag}_v"),
        &mut frag.rows,
        &mut total,
    );
    let dz = model.add_continuous(format!("{tag}_dz"), 0.0, h * h);
    frag.delta_z = Some(dz);
    total.add_term(dz, 1.0);
    frag.rows.extend(
        bilinear_envelope(
            model,
            &dx.delta_bounded(),
            &dy.delta_bounded(),
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
    Ok(frag)
}

/// Relaxes `y = x²` by setting both factors to `x`:
///
/// ```text
/// y = Σ 2^{−j} u_j + Δy,   u_j ∈ M(Δx + x, β_j),   Δy ∈ M(Δx, Δx)
/// ```
///
/// The blended factor `Δx + x` ranges over `[0, 1 + 2^{−L}]`.
pub fn relax_square_dnmdt(
    model: &mut MipModel,
    y: VarId,
    digits: &Digits,
    tag: &str,
) -> DnmdtFragment {
    let h = digits.step();
    let mut frag = DnmdtFragment {
        lambda: 0.5,
        ..Default::default()
    };
    let mut total = LinExpr::new();
    let factor = Bounded::new(digits.delta + digits.x, Interval::new(0.0, 1.0 + h));
    frag.u = add_digit_products(
        model,
        digits,
        &factor,
        &format!("{tag}_u"),
        &mut frag.rows,
        &mut total,
    );
    let dy = model.add_continuous(format!("{tag}_dy"), 0.0, h * h);
    frag.delta_z = Some(dy);
    total.add_term(dy, 1.0);
    frag.rows
        .extend(square_envelope(model, &digits.delta_bounded(), dy, &format!("{tag}_dy")).rows);
    frag.rows.push(model.add_row(
        format!("{tag}_sum"),
        LinExpr::from(y) - total,
        Sense::Eq,
        0.0,
    ));
    frag
}

/// [`relax_square_dnmdt`] plus the depth-`L1` epigraph cuts on `(x, y)`.
/// All McCormick rows of the plain variant are kept.
pub fn relax_square_tdnmdt(
    model: &mut MipModel,
    y: VarId,
    digits: &Digits,
    tight_depth: u32,
    tag: &str,
) -> Result<DnmdtFragment> {
    if tight_depth < digits.depth {
        return Err(Error::Config(format!(
            "tightening depth L1 = {tight_depth} is below L = {}",
            digits.depth
        )));
    }
    let mut frag = relax_square_dnmdt(model, y, digits, tag);
    let saw = build_epigraph_relaxation(model, digits.x, y, tight_depth, &format!("{tag}_q"));
    frag.rows.extend(saw.rows.iter().copied());
    frag.sawtooth = Some(saw);
    Ok(frag)
}
