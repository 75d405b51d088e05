//! LP-format export and import of [`MipModel`]s.
//!
//! The dialect is the common one read by most MIP solvers: `Minimize`,
//! `Subject To`, `Bounds`, `Binaries` and `End` sections, one row per line.
//! Non-integral coefficients are printed with 17 significant digits, so a
//! write/read cycle reproduces every value exactly. A non-zero objective
//! constant is written as a bare numeric term.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Interval, LinExpr, MipModel, Sense, VarId, VarKind};

fn num(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:.16e}")
    }
}

fn valid_name(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() && !matches!(c, 'e' | 'E') || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || "_.[]".contains(c))
}

/// Names safe for the LP grammar; clashes and illegal names fall back to
/// `{prefix}{index}`.
fn lp_names<'a>(names: impl Iterator<Item = &'a str>, prefix: &str) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    names
        .enumerate()
        .map(|(i, n)| {
            let mut n = if valid_name(n) {
                n.to_string()
            } else {
                format!("{prefix}{i}")
            };
            while !seen.insert(n.clone()) {
                n = format!("{prefix}{i}_");
            }
            n
        })
        .collect()
}

fn write_terms(
    out: &mut String,
    terms: impl Iterator<Item = (VarId, f64)>,
    names: &[String],
) -> usize {
    let mut count = 0;
    for (v, c) in terms {
        if c == 0.0 {
            continue;
        }
        let sign = if c < 0.0 { '-' } else { '+' };
        let a = c.abs();
        if count % 8 == 0 && count > 0 {
            out.push_str("\n  ");
        }
        if a == 1.0 {
            let _ = write!(out, " {sign} {}", names[v.0]);
        } else {
            let _ = write!(out, " {sign} {} {}", num(a), names[v.0]);
        }
        count += 1;
    }
    count
}

pub fn write_lp_string(model: &MipModel) -> String {
    let vnames = lp_names(model.variables.iter().map(|v| v.name.as_str()), "v");
    let rnames = lp_names(model.rows.iter().map(|r| r.name.as_str()), "r");
    let mut s = String::from("\\ written by qrelax\nMinimize\n obj:");
    let wrote = write_terms(
        &mut s,
        model.objective.terms.iter().map(|(v, c)| (*v, *c)),
        &vnames,
    );
    let k = model.objective.constant;
    if k != 0.0 || wrote == 0 {
        let _ = write!(s, " {} {}", if k < 0.0 { '-' } else { '+' }, num(k.abs()));
    }
    s.push_str("\nSubject To\n");
    for (r, name) in model.rows.iter().zip(&rnames) {
        let _ = write!(s, " {name}:");
        if write_terms(&mut s, r.coeffs.iter().copied(), &vnames) == 0 {
            // An empty row still needs a left-hand side.
            let _ = write!(s, " 0 {}", vnames.first().map_or("v0", |n| n.as_str()));
        }
        let op = match r.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(s, " {op} {}", num(r.rhs));
    }
    s.push_str("Bounds\n");
    for (v, name) in model.variables.iter().zip(&vnames) {
        let (lo, hi) = (v.bounds.lo, v.bounds.hi);
        if lo == hi {
            let _ = writeln!(s, " {name} = {}", num(lo));
        } else {
            let lo = if lo == f64::NEG_INFINITY {
                "-inf".into()
            } else {
                num(lo)
            };
            let hi = if hi == f64::INFINITY {
                "+inf".into()
            } else {
                num(hi)
            };
            let _ = writeln!(s, " {lo} <= {name} <= {hi}");
        }
    }
    let bins: Vec<&str> = model
        .variables
        .iter()
        .zip(&vnames)
        .filter(|(v, _)| v.kind == VarKind::Binary)
        .map(|(_, n)| n.as_str())
        .collect();
    if !bins.is_empty() {
        s.push_str("Binaries\n");
        for chunk in bins.chunks(10) {
            let _ = writeln!(s, " {}", chunk.join(" "));
        }
    }
    s.push_str("End\n");
    s
}

pub fn export_lp_file(model: &MipModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_lp_string(model))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    Objective,
    Rows,
    Bounds,
    Binaries,
    Done,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Sign(f64),
    Op(Sense),
    Colon,
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<Tok>> {
    let b = line.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c == '+' || c == '-' {
            out.push(Tok::Sign(if c == '-' { -1.0 } else { 1.0 }));
            i += 1;
        } else if c == ':' {
            out.push(Tok::Colon);
            i += 1;
        } else if "<>=".contains(c) {
            let mut j = i;
            while j < b.len() && "<>=".contains(b[j] as char) {
                j += 1;
            }
            let op = match &line[i..j] {
                "<=" | "<" | "=<" => Sense::Le,
                ">=" | ">" | "=>" => Sense::Ge,
                "=" => Sense::Eq,
                other => {
                    return Err(Error::Parse {
                        line: lineno,
                        column: i + 1,
                        message: format!("unknown operator '{other}'"),
                    })
                }
            };
            out.push(Tok::Op(op));
            i = j;
        } else if c.is_ascii_digit() || c == '.' {
            let mut j = i;
            while j < b.len() {
                let d = b[j] as char;
                let exp_sign = (d == '+' || d == '-') && j > i && matches!(b[j - 1], b'e' | b'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    j += 1;
                } else {
                    break;
                }
            }
            let v = line[i..j].parse().map_err(|_| Error::Parse {
                line: lineno,
                column: i + 1,
                message: format!("bad number '{}'", &line[i..j]),
            })?;
            out.push(Tok::Num(v));
            i = j;
        } else {
            let mut j = i;
            while j < b.len() {
                let d = b[j] as char;
                if d.is_whitespace() || "+-:<>=".contains(d) {
                    break;
                }
                j += 1;
            }
            let word = &line[i..j];
            if word.eq_ignore_ascii_case("inf") || word.eq_ignore_ascii_case("infinity") {
                out.push(Tok::Num(f64::INFINITY));
            } else {
                out.push(Tok::Name(word.to_string()));
            }
            i = j;
        }
    }
    Ok(out)
}

struct Reader {
    model: MipModel,
    index: HashMap<String, VarId>,
    explicit_bounds: Vec<bool>,
}

impl Reader {
    fn var(&mut self, name: &str) -> VarId {
        if let Some(&v) = self.index.get(name) {
            return v;
        }
        let v = self.model.add_continuous(name, 0.0, f64::INFINITY);
        self.index.insert(name.to_string(), v);
        self.explicit_bounds.push(false);
        v
    }

    /// Parses `[+|-] [coef] [name]` terms into an expression.
    fn expr(&mut self, toks: &[Tok], lineno: usize) -> Result<LinExpr> {
        let mut e = LinExpr::new();
        let mut i = 0;
        while i < toks.len() {
            let mut sign = 1.0;
            while let Some(Tok::Sign(s)) = toks.get(i) {
                sign *= s;
                i += 1;
            }
            let mut coef = None;
            if let Some(Tok::Num(v)) = toks.get(i) {
                coef = Some(*v);
                i += 1;
            }
            match toks.get(i) {
                Some(Tok::Name(n)) => {
                    let n = n.clone();
                    let v = self.var(&n);
                    e.add_term(v, sign * coef.unwrap_or(1.0));
                    i += 1;
                }
                _ => match coef {
                    Some(c) => e.constant += sign * c,
                    None => {
                        return Err(Error::Parse {
                            line: lineno,
                            column: 1,
                            message: "expected a term".into(),
                        })
                    }
                },
            }
        }
        Ok(e)
    }
}

fn section_of(line: &str) -> Option<Section> {
    let l = line.trim().to_ascii_lowercase();
    match l.as_str() {
        "minimize" | "minimise" | "min" => Some(Section::Objective),
        "subject to" | "such that" | "st" | "s.t." => Some(Section::Rows),
        "bounds" | "bound" => Some(Section::Bounds),
        "binaries" | "binary" | "bin" => Some(Section::Binaries),
        "end" => Some(Section::Done),
        _ => None,
    }
}

/// Reads the dialect written by [`write_lp_string`]. Rows may span lines;
/// a row ends at its right-hand side. Variables listed under `Bounds` keep
/// that order, the rest follow in order of appearance. Every variable must
/// end up with finite bounds.
pub fn read_lp_str(text: &str) -> Result<MipModel> {
    let mut r = Reader {
        model: MipModel::new(),
        index: HashMap::new(),
        explicit_bounds: Vec::new(),
    };
    // Variables are numbered in Bounds-section order, which the writer
    // emits for every variable.
    let mut section: Option<Section> = None;
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('\\').next().unwrap_or("");
        if let Some(s) = section_of(line) {
            section = Some(s);
        } else if section == Some(Section::Bounds) {
            for t in tokenize(line, ln + 1)? {
                match t {
                    Tok::Name(n) if !n.eq_ignore_ascii_case("free") => {
                        r.var(&n);
                    }
                    _ => {}
                }
            }
        }
    }
    let mut section: Option<Section> = None;
    let mut pending: Vec<Tok> = Vec::new();
    let mut pending_line = 0;
    let mut objective = LinExpr::new();
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = raw.split('\\').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        if let Some(s) = section_of(line) {
            if !pending.is_empty() {
                return Err(Error::Parse {
                    line: pending_line,
                    column: 1,
                    message: "unterminated row".into(),
                });
            }
            section = Some(s);
            continue;
        }
        if matches!(
            line.trim().to_ascii_lowercase().as_str(),
            "maximize" | "maximise" | "max"
        ) {
            return Err(Error::Parse {
                line: ln,
                column: 1,
                message: "only minimization models are supported".into(),
            });
        }
        let toks = tokenize(line, ln)?;
        match section {
            None => {
                return Err(Error::Parse {
                    line: ln,
                    column: 1,
                    message: "data before the objective section".into(),
                })
            }
            Some(Section::Objective) => {
                let body = match toks.iter().position(|t| *t == Tok::Colon) {
                    Some(p) => &toks[p + 1..],
                    None => &toks[..],
                };
                let e = r.expr(body, ln)?;
                for (v, c) in e.terms {
                    objective.add_term(v, c);
                }
                objective.constant += e.constant;
            }
            Some(Section::Rows) => {
                if pending.is_empty() {
                    pending_line = ln;
                }
                pending.extend(toks);
                let Some(op_at) = pending.iter().position(|t| matches!(t, Tok::Op(_))) else {
                    continue;
                };
                let Tok::Op(sense) = pending[op_at] else {
                    unreachable!()
                };
                let (name, lhs) = match pending.iter().position(|t| *t == Tok::Colon) {
                    Some(1) if matches!(pending[0], Tok::Name(_)) => {
                        let Tok::Name(n) = &pending[0] else {
                            unreachable!()
                        };
                        (n.clone(), &pending[2..op_at])
                    }
                    None => (format!("r{}", r.model.num_rows()), &pending[..op_at]),
                    Some(_) => {
                        return Err(Error::Parse {
                            line: pending_line,
                            column: 1,
                            message: "malformed row name".into(),
                        })
                    }
                };
                let lhs = lhs.to_vec();
                let rhs_toks = pending[op_at + 1..].to_vec();
                let e = r.expr(&lhs, pending_line)?;
                let rhs = r.expr(&rhs_toks, ln)?;
                if !rhs.terms.is_empty() {
                    return Err(Error::Parse {
                        line: ln,
                        column: 1,
                        message: "variables on the right-hand side".into(),
                    });
                }
                r.model.add_row(name, e, sense, rhs.constant);
                pending.clear();
            }
            Some(Section::Bounds) => bound_line(&mut r, &toks, line, ln)?,
            Some(Section::Binaries) => {
                for t in toks {
                    let Tok::Name(n) = t else {
                        return Err(Error::Parse {
                            line: ln,
                            column: 1,
                            message: "expected variable names".into(),
                        });
                    };
                    let v = r.var(&n);
                    r.model.variables[v.0].kind = VarKind::Binary;
                    if !r.explicit_bounds[v.0] {
                        r.model.variables[v.0].bounds = Interval::UNIT;
                    }
                }
            }
            Some(Section::Done) => {
                return Err(Error::Parse {
                    line: ln,
                    column: 1,
                    message: "data after End".into(),
                })
            }
        }
    }
    if !pending.is_empty() {
        return Err(Error::Parse {
            line: pending_line,
            column: 1,
            message: "unterminated row".into(),
        });
    }
    r.model.set_objective(objective);
    r.model.validate()?;
    Ok(r.model)
}

fn bound_line(r: &mut Reader, toks: &[Tok], line: &str, ln: usize) -> Result<()> {
    let err = |m: &str| Error::Parse {
        line: ln,
        column: 1,
        message: m.to_string(),
    };
    // Fold signs into numbers.
    let mut t: Vec<Tok> = Vec::new();
    let mut sign = 1.0;
    for tok in toks {
        match tok {
            Tok::Sign(s) => sign *= s,
            Tok::Num(v) => {
                t.push(Tok::Num(sign * v));
                sign = 1.0;
            }
            other => t.push(other.clone()),
        }
    }
    let mut set = |name: &str, lo: Option<f64>, hi: Option<f64>| {
        let v = r.var(name);
        r.explicit_bounds[v.0] = true;
        let b = &mut r.model.variables[v.0].bounds;
        if let Some(lo) = lo {
            b.lo = lo;
        }
        if let Some(hi) = hi {
            b.hi = hi;
        }
    };
    match t.as_slice() {
        [Tok::Name(n), Tok::Name(f)] if f.eq_ignore_ascii_case("free") => {
            set(n, Some(f64::NEG_INFINITY), Some(f64::INFINITY));
        }
        [Tok::Num(a), Tok::Op(Sense::Le), Tok::Name(n), Tok::Op(Sense::Le), Tok::Num(b)] => {
            set(n, Some(*a), Some(*b));
        }
        [Tok::Name(n), Tok::Op(op), Tok::Num(v)] => match op {
            Sense::Le => set(n, None, Some(*v)),
            Sense::Ge => set(n, Some(*v), None),
            Sense::Eq => set(n, Some(*v), Some(*v)),
        },
        [Tok::Num(v), Tok::Op(op), Tok::Name(n)] => match op {
            Sense::Le => set(n, Some(*v), None),
            Sense::Ge => set(n, None, Some(*v)),
            Sense::Eq => set(n, Some(*v), Some(*v)),
        },
        _ => return Err(err(&format!("unrecognized bound '{}'", line.trim()))),
    }
    Ok(())
}

pub fn read_lp_file(path: impl AsRef<Path>) -> Result<MipModel> {
    read_lp_str(&std::fs::read_to_string(path)?)
}
