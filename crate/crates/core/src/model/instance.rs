use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A closed, finite interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0 };

    /// Builds an interval without validation. Callers that take bounds from
    /// untrusted input should use [`Interval::try_new`].
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn try_new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Domain(format!(
                "interval [{lo}, {hi}] is not finite"
            )));
        }
        if lo > hi {
            return Err(Error::Domain(format!("interval [{lo}, {hi}] has lo > hi")));
        }
        Ok(Interval { lo, hi })
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lo - tol && v <= self.hi + tol
    }

    pub fn is_finite(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    /// Range of the product `a * b` for `a` in `self`, `b` in `other`.
    pub fn product(&self, other: &Interval) -> Interval {
        let c = [
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        ];
        let lo = c.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval { lo, hi }
    }
}

/// A quadratic form `sum_{i <= k} q_ik x_i x_k` stored once per unordered
/// pair. Adding `(k, i)` and `(i, k)` accumulates into the same entry.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadForm {
    terms: BTreeMap<(usize, usize), f64>,
}

impl QuadForm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, i: usize, k: usize, coeff: f64) {
        let key = if i <= k { (i, k) } else { (k, i) };
        let entry = self.terms.entry(key).or_insert(0.0);
        *entry += coeff;
        if *entry == 0.0 {
            self.terms.remove(&key);
        }
    }

    /// Builds the canonical form of `x' Q x` for a dense (not necessarily
    /// symmetric) matrix: the pair `(i, k)` receives `q_ik + q_ki`.
    pub fn from_dense(q: &[Vec<f64>]) -> Self {
        let mut form = QuadForm::new();
        for (i, row) in q.iter().enumerate() {
            for (k, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    form.add(i, k, v);
                }
            }
        }
        form
    }

    pub fn iter(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.terms.iter().map(|(&key, &v)| (key, v))
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        let key = if i <= k { (i, k) } else { (k, i) };
        self.terms.get(&key).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.iter().map(|((i, k), q)| q * x[i] * x[k]).sum()
    }

    /// Largest variable index referenced, if any.
    pub fn max_index(&self) -> Option<usize> {
        self.terms.keys().map(|&(_, k)| k).max()
    }
}

/// `quad(x) + lin' x + bin' y + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadFunction {
    pub quad: QuadForm,
    pub lin: Vec<f64>,
    pub bin: Vec<f64>,
    pub constant: f64,
}

impl QuadFunction {
    pub fn zero(n: usize, k: usize) -> Self {
        QuadFunction {
            quad: QuadForm::new(),
            lin: vec![0.0; n],
            bin: vec![0.0; k],
            constant: 0.0,
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let lin: f64 = self.lin.iter().zip(x).map(|(c, v)| c * v).sum();
        let bin: f64 = self.bin.iter().zip(y).map(|(d, v)| d * v).sum();
        self.quad.eval(x) + lin + bin + self.constant
    }
}

/// A box-bounded MIQCQP:
///
/// ```text
/// min  f_0(x, y)
/// s.t. f_j(x, y) <= 0        j = 1..m
///      x_i in [lo_i, hi_i],  y in {0,1}^k
/// ```
///
/// where every `f` is a [`QuadFunction`]. Binaries enter linearly only.
#[derive(Debug, Clone, PartialEq)]
pub struct MiqcqpInstance {
    pub bounds: Vec<Interval>,
    pub num_binaries: usize,
    pub objective: QuadFunction,
    pub constraints: Vec<QuadFunction>,
}

impl MiqcqpInstance {
    /// An instance with the given bounds, `k` binaries, a zero objective and
    /// no constraints.
    pub fn new(bounds: Vec<Interval>, num_binaries: usize) -> Self {
        let n = bounds.len();
        MiqcqpInstance {
            bounds,
            num_binaries,
            objective: QuadFunction::zero(n, num_binaries),
            constraints: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.bounds.len()
    }

    pub fn k(&self) -> usize {
        self.num_binaries
    }

    fn functions(&self) -> impl Iterator<Item = &QuadFunction> {
        std::iter::once(&self.objective).chain(self.constraints.iter())
    }

    pub fn validate(&self) -> Result<()> {
        let (n, k) = (self.n(), self.k());
        for (i, b) in self.bounds.iter().enumerate() {
            if !b.is_finite() {
                return Err(Error::NonFiniteBounds {
                    index: i,
                    lo: b.lo,
                    hi: b.hi,
                });
            }
            if b.lo > b.hi {
                return Err(Error::Validation(format!(
                    "variable {} has lo {} > hi {}",
                    i + 1,
                    b.lo,
                    b.hi
                )));
            }
        }
        for (j, f) in self.functions().enumerate() {
            let what = if j == 0 {
                "objective".to_string()
            } else {
                format!("constraint {j}")
            };
            if f.lin.len() != n {
                return Err(Error::Validation(format!(
                    "{what}: linear part has {} entries, expected {n}",
                    f.lin.len()
                )));
            }
            if f.bin.len() != k {
                return Err(Error::Validation(format!(
                    "{what}: binary part has {} entries, expected {k}",
                    f.bin.len()
                )));
            }
            if f.quad.max_index().is_some_and(|m| m >= n) {
                return Err(Error::Validation(format!(
                    "{what}: quadratic term references a variable beyond n = {n}"
                )));
            }
            let finite = f.lin.iter().chain(&f.bin).all(|v| v.is_finite())
                && f.quad.iter().all(|(_, q)| q.is_finite())
                && f.constant.is_finite();
            if !finite {
                return Err(Error::Validation(format!("{what}: non-finite coefficient")));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.objective.eval(x, y)
    }

    /// Largest violation over constraints, box bounds and binary
    /// integrality. Zero for a feasible point.
    pub fn max_violation(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.constraints {
            worst = worst.max(c.eval(x, y));
        }
        for (v, b) in x.iter().zip(&self.bounds) {
            worst = worst.max(b.lo - v).max(v - b.hi);
        }
        for v in y {
            worst = worst.max(v.abs().min((v - 1.0).abs()));
        }
        worst
    }

    pub fn is_feasible(&self, x: &[f64], y: &[f64], tol: f64) -> bool {
        self.max_violation(x, y) <= tol
    }
}

/// Where a quadratic term occurs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TermSource {
    Objective,
    Constraint(usize),
}

/// A distinct product `x_i x_k` (`i <= k`) with its coefficient in every
/// function that uses it.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadTerm {
    pub i: usize,
    pub k: usize,
    pub uses: Vec<(TermSource, f64)>,
}

impl QuadTerm {
    pub fn is_square(&self) -> bool {
        self.i == self.k
    }
}

/// Lists every distinct quadratic term of the instance in lexicographic
/// `(i, k)` order, merging the occurrences across objective and constraints.
pub fn collect_quadratic_terms(inst: &MiqcqpInstance) -> Vec<QuadTerm> {
    let mut map: BTreeMap<(usize, usize), Vec<(TermSource, f64)>> = BTreeMap::new();
    let sources = std::iter::once((TermSource::Objective, &inst.objective)).chain(
        inst.constraints
            .iter()
            .enumerate()
            .map(|(j, c)| (TermSource::Constraint(j), c)),
    );
    for (src, f) in sources {
        for ((i, k), q) in f.quad.iter() {
            map.entry((i, k)).or_default().push((src, q));
        }
    }
    map.into_iter()
        .map(|((i, k), mut uses)| {
            uses.sort_by_key(|u| u.0);
            QuadTerm { i, k, uses }
        })
        .collect()
}

/// How an original continuous variable is recovered from the normalized
/// instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coordinate {
    /// `x = scale * xhat[index] + offset`.
    Scaled {
        index: usize,
        scale: f64,
        offset: f64,
    },
    /// Fixed by equal bounds and substituted out.
    Fixed(f64),
}

/// Affine map between the original variables and the unit-box variables of
/// a normalized instance.
#[derive(Debug, Clone, PartialEq)]
pub struct BackMap {
    pub coords: Vec<Coordinate>,
    pub normalized_len: usize,
}

impl BackMap {
    pub fn identity(n: usize) -> Self {
        BackMap {
            coords: (0..n)
                .map(|index| Coordinate::Scaled {
                    index,
                    scale: 1.0,
                    offset: 0.0,
                })
                .collect(),
            normalized_len: n,
        }
    }

    pub fn to_original(&self, xhat: &[f64]) -> Vec<f64> {
        self.coords
            .iter()
            .map(|c| match *c {
                Coordinate::Scaled {
                    index,
                    scale,
                    offset,
                } => scale * xhat[index] + offset,
                Coordinate::Fixed(v) => v,
            })
            .collect()
    }

    pub fn to_normalized(&self, x: &[f64]) -> Vec<f64> {
        let mut xhat = vec![0.0; self.normalized_len];
        for (c, &v) in self.coords.iter().zip(x) {
            if let Coordinate::Scaled {
                index,
                scale,
                offset,
            } = *c
            {
                xhat[index] = (v - offset) / scale;
            }
        }
        xhat
    }

    /// Normalized index of original variable `i`, unless it was fixed.
    pub fn normalized_index(&self, i: usize) -> Option<usize> {
        match self.coords[i] {
            Coordinate::Scaled { index, .. } => Some(index),
            Coordinate::Fixed(_) => None,
        }
    }
}

/// Maps the instance onto the unit box via `x = (hi - lo) * xhat + lo`.
/// Variables with `lo == hi` are substituted by constants and dropped.
pub fn normalize_instance(inst: &MiqcqpInstance) -> Result<(MiqcqpInstance, BackMap)> {
    inst.validate()?;
    let mut coords = Vec::with_capacity(inst.n());
    let mut next = 0;
    for b in &inst.bounds {
        if b.is_degenerate() {
            coords.push(Coordinate::Fixed(b.lo));
        } else {
            coords.push(Coordinate::Scaled {
                index: next,
                scale: b.width(),
                offset: b.lo,
            });
            next += 1;
        }
    }
    let back = BackMap {
        coords,
        normalized_len: next,
    };

    // x_i = s_i * xhat_{m(i)} + o_i, with s_i = 0 for fixed variables.
    let affine: Vec<(Option<usize>, f64, f64)> = back
        .coords
        .iter()
        .map(|c| match *c {
            Coordinate::Scaled {
                index,
                scale,
                offset,
            } => (Some(index), scale, offset),
            Coordinate::Fixed(v) => (None, 0.0, v),
        })
        .collect();

    let map_fn = |f: &QuadFunction| -> QuadFunction {
        let mut out = QuadFunction::zero(next, inst.k());
        out.bin = f.bin.clone();
        out.constant = f.constant;
        for (i, &c) in f.lin.iter().enumerate() {
            let (idx, s, o) = affine[i];
            if let Some(m) = idx {
                out.lin[m] += c * s;
            }
            out.constant += c * o;
        }
        for ((i, k), q) in f.quad.iter() {
            let (mi, si, oi) = affine[i];
            let (mk, sk, ok) = affine[k];
            if let (Some(a), Some(b)) = (mi, mk) {
                out.quad.add(a, b, q * si * sk);
            }
            if let Some(a) = mi {
                out.lin[a] += q * si * ok;
            }
            if let Some(b) = mk {
                out.lin[b] += q * oi * sk;
            }
            out.constant += q * oi * ok;
        }
        out
    };

    let normalized = MiqcqpInstance {
        bounds: vec![Interval::UNIT; next],
        num_binaries: inst.k(),
        objective: map_fn(&inst.objective),
        constraints: inst.constraints.iter().map(map_fn).collect(),
    };
    Ok((normalized, back))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_instance(lo: f64, hi: f64) -> MiqcqpInstance {
        let mut inst = MiqcqpInstance::new(vec![Interval::new(lo, hi)], 0);
        inst.objective.quad.add(0, 0, 1.0);
        inst
    }

    #[test]
    fn unit_box_normalizes_to_itself() {
        let inst = square_instance(0.0, 1.0);
        let (norm, back) = normalize_instance(&inst).unwrap();
        assert_eq!(norm, inst);
        assert_eq!(back, BackMap::identity(1));
    }

    #[test]
    fn shifted_square_expands() {
        // (2 xhat + 2)^2 = 4 xhat^2 + 8 xhat + 4
        let (norm, _) = normalize_instance(&square_instance(2.0, 4.0)).unwrap();
        assert_eq!(norm.objective.quad.get(0, 0), 4.0);
        assert_eq!(norm.objective.lin, vec![8.0]);
        assert_eq!(norm.objective.constant, 4.0);
    }

    #[test]
    fn round_trip_preserves_objective() {
        let mut inst = MiqcqpInstance::new(vec![Interval::new(-3.0, 5.0); 2], 1);
        inst.objective.quad.add(0, 0, 1.5);
        inst.objective.quad.add(0, 1, -2.0);
        inst.objective.lin = vec![0.3, -0.7];
        inst.objective.bin = vec![2.0];
        let (norm, back) = normalize_instance(&inst).unwrap();
        let x = vec![1.0, -2.5];
        let xhat = back.to_normalized(&x);
        assert!((xhat[0] - 0.5).abs() < 1e-15);
        let again = back.to_original(&xhat);
        assert!((again[0] - 1.0).abs() < 1e-12);
        let y = vec![1.0];
        let f0 = inst.objective_value(&x, &y);
        let f1 = norm.objective_value(&xhat, &y);
        assert!((f0 - f1).abs() < 1e-12);
    }

    #[test]
    fn fixed_variables_are_substituted() {
        let mut inst =
            MiqcqpInstance::new(vec![Interval::new(2.0, 2.0), Interval::new(0.0, 1.0)], 0);
        inst.objective.quad.add(0, 1, 3.0);
        inst.objective.quad.add(0, 0, 1.0);
        let (norm, back) = normalize_instance(&inst).unwrap();
        assert_eq!(norm.n(), 1);
        assert!(norm.objective.quad.is_empty());
        assert_eq!(norm.objective.lin, vec![6.0]);
        assert_eq!(norm.objective.constant, 4.0);
        assert_eq!(back.to_original(&[0.25]), vec![2.0, 0.25]);
    }

    #[test]
    fn infinite_bounds_are_rejected() {
        let inst = square_instance(0.0, f64::INFINITY);
        assert!(matches!(
            normalize_instance(&inst),
            Err(Error::NonFiniteBounds { index: 0, .. })
        ));
    }

    #[test]
    fn term_collection_merges_symmetric_entries() {
        let mut inst = MiqcqpInstance::new(vec![Interval::UNIT; 2], 0);
        inst.objective.quad = QuadForm::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let terms = collect_quadratic_terms(&inst);
        assert_eq!(terms.len(), 1);
        assert_eq!((terms[0].i, terms[0].k), (0, 1));
        assert_eq!(terms[0].uses, vec![(TermSource::Objective, 2.0)]);

        inst.objective.quad = QuadForm::from_dense(&[vec![1.0, 0.0], vec![0.0, 0.0]]);
        let terms = collect_quadratic_terms(&inst);
        assert_eq!(terms.len(), 1);
        assert!(terms[0].is_square());
    }

    #[test]
    fn dense_ones_matrix_terms() {
        let mut inst = MiqcqpInstance::new(vec![Interval::UNIT; 3], 0);
        inst.objective.quad = QuadForm::from_dense(&vec![vec![1.0; 3]; 3]);
        let got: Vec<_> = collect_quadratic_terms(&inst)
            .into_iter()
            .map(|t| (t.i + 1, t.k + 1, t.uses[0].1))
            .collect();
        assert_eq!(
            got,
            vec![
                (1, 1, 1.0),
                (1, 2, 2.0),
                (1, 3, 2.0),
                (2, 2, 1.0),
                (2, 3, 2.0),
                (3, 3, 1.0)
            ]
        );
    }

    #[test]
    fn cancelling_entries_are_dropped() {
        let form = QuadForm::from_dense(&[vec![0.0, 1.0], vec![-1.0, 0.0]]);
        assert!(form.is_empty());
    }
}
