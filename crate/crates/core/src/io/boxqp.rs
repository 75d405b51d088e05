//! Box-constrained QP text files.
//!
//! Layout: a line holding `n`, a line with the `n` entries of `c`, then `n`
//! lines holding the rows of `Q`. The instance is
//! `min ½ xᵀQx + cᵀx` over `[0, 1]^n`, or its negation with `maximize`.
//! An asymmetric `Q` is replaced by `(Q + Qᵀ)/2` with a warning.

use std::path::Path;

use log::warn;

use crate::error::{Error, Result};
use crate::model::{Interval, MiqcqpInstance, QuadForm};

/// Entries differing from their transpose by more than this trigger a
/// symmetrization warning.
pub const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BoxQp {
    pub instance: MiqcqpInstance,
    pub warnings: Vec<String>,
}

fn numbers(line: &str, lineno: usize) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    let mut col = 1;
    for tok in line.split_whitespace() {
        let start = line[col - 1..].find(tok).map_or(col, |p| col + p);
        let v: f64 = tok.parse().map_err(|_| Error::Parse {
            line: lineno,
            column: start,
            message: format!("'{tok}' is not a number"),
        })?;
        out.push(v);
        col = start + tok.len();
    }
    Ok(out)
}

#[allow(clippy::needless_range_loop)]
pub fn parse_boxqp_str(text: &str, maximize: bool) -> Result<BoxQp> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l))
        .filter(|(_, l)| !l.trim().is_empty());
    let parse_err = |line, message: String| Error::Parse {
        line,
        column: 1,
        message,
    };
    let (hl, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "empty file, expected the dimension n".into()))?;
    let n: usize = header
        .trim()
        .parse()
        .map_err(|_| parse_err(hl, format!("'{}' is not a dimension", header.trim())))?;
    let mut row = |what: &str, last: usize| -> Result<(usize, Vec<f64>)> {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(last + 1, format!("missing {what}")))?;
        let v = numbers(l, ln)?;
        if v.len() != n {
            return Err(parse_err(
                ln,
                format!("{what} has {} entries, expected {n}", v.len()),
            ));
        }
        Ok((ln, v))
    };
    let (mut last, c) = row("c", hl)?;
    let mut q = Vec::with_capacity(n);
    for i in 0..n {
        let (ln, r) = row(&format!("row {} of Q", i + 1), last)?;
        last = ln;
        q.push(r);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "unexpected data after Q".into()));
    }

    let mut warnings = Vec::new();
    let mut worst = 0.0f64;
    for i in 0..n {
        for k in i + 1..n {
            worst = worst.max((q[i][k] - q[k][i]).abs());
        }
    }
    if worst > SYMMETRY_TOL {
        let msg = format!("Q is not symmetric (max |Q_ik − Q_ki| = {worst:.3e}); using (Q + Qᵀ)/2");
        warn!("{msg}");
        warnings.push(msg);
    }
    let sign = if maximize { -1.0 } else { 1.0 };
    let mut quad = QuadForm::default();
    for i in 0..n {
        quad.add(i, i, sign * 0.5 * q[i][i]);
        for k in i + 1..n {
            // ½ (Q_ik + Q_ki) x_i x_k, i.e. the symmetrized off-diagonal pair.
            quad.add(i, k, sign * 0.5 * (q[i][k] + q[k][i]));
        }
    }
    let mut instance = MiqcqpInstance::new(vec![Interval::UNIT; n], 0);
    instance.objective.quad = quad;
    instance.objective.lin = c.iter().map(|v| sign * v).collect();
    instance.validate()?;
    Ok(BoxQp { instance, warnings })
}

pub fn parse_boxqp(path: impl AsRef<Path>, maximize: bool) -> Result<BoxQp> {
    parse_boxqp_str(&std::fs::read_to_string(path)?, maximize)
}

/// Writes `Q` and `c` back out in the same layout, for a symmetric
/// minimization instance without constraints or binaries.
pub fn write_boxqp_string(inst: &MiqcqpInstance) -> Result<String> {
    if inst.k() != 0
        || !inst.constraints.is_empty()
        || inst.bounds.iter().any(|b| *b != Interval::UNIT)
    {
        return Err(Error::Domain("not a box QP on the unit box".into()));
    }
    let n = inst.n();
    let mut q = vec![vec![0.0; n]; n];
    for ((i, k), c) in inst.objective.quad.iter() {
        if i == k {
            q[i][i] = 2.0 * c;
        } else {
            q[i][k] = c;
            q[k][i] = c;
        }
    }
    let join = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x}"))
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut s = format!("{n}\n{}\n", join(&inst.objective.lin));
    for r in &q {
        s.push_str(&join(r));
        s.push('\n');
    }
    Ok(s)
}
