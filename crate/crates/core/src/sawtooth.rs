//! Sawtooth approximation of `x²` on `[0, 1]`.
//!
//! `G(x) = min(2x, 2(1 − x))` is the tooth function and `G^j` its j-fold
//! composition. `F^L(x) = x − Σ_{j=1..L} 4^{−j} G^j(x)` interpolates `x²` at
//! every multiple of `2^{−L}`. The builders emit the mixed-binary set that
//! pins `g_j = G^j(x)`, its LP projection, and the epigraph relaxation that
//! underestimates `x²` by at most `2^{−2L−4}`.

use crate::error::{Error, Result};
use crate::model::{LinExpr, MipModel, Sense, VarId};

const DOMAIN_TOL: f64 = 1e-12;

/// `G^j(x)`, with `G^0(x) = x`.
pub fn tooth_iterate(x: f64, j: u32) -> Result<f64> {
    if !(-DOMAIN_TOL..=1.0 + DOMAIN_TOL).contains(&x) {
        return Err(Error::Domain(format!(
            "tooth argument {x} is outside [0, 1]"
        )));
    }
    let mut g = x.clamp(0.0, 1.0);
    for _ in 0..j {
        g = (2.0 * g).min(2.0 * (1.0 - g));
    }
    Ok(g)
}

/// `F^L(x) = x − Σ_{j=1..L} 2^{−2j} G^j(x)`.
pub fn sawtooth_value(x: f64, depth: u32) -> Result<f64> {
    let mut value = tooth_iterate(x, 0)?;
    let mut g = value;
    let mut scale = 1.0;
    for _ in 0..depth {
        g = (2.0 * g).min(2.0 * (1.0 - g));
        scale *= 0.25;
        value -= scale * g;
    }
    Ok(value)
}

/// Variables and rows of a sawtooth construction. `alpha` is empty for the
/// LP variant.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SawtoothFragment {
    pub g: Vec<VarId>,
    pub alpha: Vec<VarId>,
    pub rows: Vec<usize>,
}

impl SawtoothFragment {
    pub fn depth(&self) -> u32 {
        self.g.len().saturating_sub(1) as u32
    }
}

fn add_g_chain(model: &mut MipModel, x: VarId, depth: u32, tag: &str) -> SawtoothFragment {
    let mut frag = SawtoothFragment::default();
    for j in 0..=depth {
        frag.g
            .push(model.add_continuous(format!("{tag}_g{j}"), 0.0, 1.0));
    }
    frag.rows
        .push(model.add_row(format!("{tag}_g0"), frag.g[0] - x, Sense::Eq, 0.0));
    frag
}

/// Rows `g_j <= 2 g_{j−1}` and `g_j <= 2 (1 − g_{j−1})`.
fn add_upper_rows(model: &mut MipModel, frag: &mut SawtoothFragment, tag: &str) {
    for j in 1..frag.g.len() {
        let (g, prev) = (frag.g[j], frag.g[j - 1]);
        frag.rows
            .push(model.add_row(format!("{tag}_up{j}a"), g - prev * 2.0, Sense::Le, 0.0));
        frag.rows
            .push(model.add_row(format!("{tag}_up{j}b"), g + prev * 2.0, Sense::Le, 2.0));
    }
}

/// The mixed-binary set
///
/// ```text
/// g_0 = x
/// 2 (g_{j−1} − α_j) <= g_j <= 2 g_{j−1}
/// 2 (α_j − g_{j−1}) <= g_j <= 2 (1 − g_{j−1})
/// ```
///
/// which forces `g_j = G^j(x)` whenever every `α_j` is binary.
pub fn build_sawtooth_mip(
    model: &mut MipModel,
    x: VarId,
    depth: u32,
    tag: &str,
) -> SawtoothFragment {
    let mut frag = add_g_chain(model, x, depth, tag);
    add_upper_rows(model, &mut frag, tag);
    for j in 1..=depth as usize {
        let alpha = model.add_binary(format!("{tag}_a{j}"));
        frag.alpha.push(alpha);
        let (g, prev) = (frag.g[j], frag.g[j - 1]);
        frag.rows.push(model.add_row(
            format!("{tag}_lo{j}a"),
            g - prev * 2.0 + alpha * 2.0,
            Sense::Ge,
            0.0,
        ));
        frag.rows.push(model.add_row(
            format!("{tag}_lo{j}b"),
            g + prev * 2.0 - alpha * 2.0,
            Sense::Ge,
            0.0,
        ));
    }
    frag
}

/// The LP set obtained by projecting the binaries out of
/// [`build_sawtooth_mip`]: only the two upper rows per level remain.
pub fn build_sawtooth_lp(
    model: &mut MipModel,
    x: VarId,
    depth: u32,
    tag: &str,
) -> SawtoothFragment {
    let mut frag = add_g_chain(model, x, depth, tag);
    add_upper_rows(model, &mut frag, tag);
    frag
}

/// Epigraph relaxation of `y = x²` at depth `L`:
///
/// ```text
/// y >= x − Σ_{i<=j} 4^{−i} g_i − 2^{−2j−2}    j = 0..L
/// y >= 0,   y >= 2x − 1
/// ```
///
/// together with the LP sawtooth rows on `g`.
pub fn build_epigraph_relaxation(
    model: &mut MipModel,
    x: VarId,
    y: impl Into<LinExpr>,
    depth: u32,
    tag: &str,
) -> SawtoothFragment {
    let y = y.into();
    let mut frag = build_sawtooth_lp(model, x, depth, tag);
    let mut approx = LinExpr::from(x);
    let mut scale = 1.0;
    for j in 0..=depth as usize {
        if j > 0 {
            scale *= 0.25;
            approx.add_term(frag.g[j], -scale);
        }
        let offset = scale * 0.25;
        frag.rows.push(model.add_row(
            format!("{tag}_cut{j}"),
            y.clone() - approx.clone(),
            Sense::Ge,
            -offset,
        ));
    }
    frag.rows
        .push(model.add_row(format!("{tag}_nonneg"), y.clone(), Sense::Ge, 0.0));
    frag.rows
        .push(model.add_row(format!("{tag}_tan1"), y - x * 2.0, Sense::Ge, -1.0));
    frag
}

/// Values `g_j = G^j(x)` for `j = 0..=depth`.
pub fn canonical_g(x: f64, depth: u32) -> Result<Vec<f64>> {
    (0..=depth).map(|j| tooth_iterate(x, j)).collect()
}

/// Values `α_j` consistent with `g = G^j(x)`: 1 exactly when `g_{j−1} > ½`.
pub fn canonical_alpha(x: f64, depth: u32) -> Result<Vec<f64>> {
    (0..depth)
        .map(|j| tooth_iterate(x, j).map(|g| if g > 0.5 { 1.0 } else { 0.0 }))
        .collect()
}
