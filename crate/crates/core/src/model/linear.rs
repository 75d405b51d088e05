use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::Interval;
use crate::error::{Error, Result};

/// Index of a variable inside a [`MipModel`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub bounds: Interval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

/// An affine expression `sum c_v v + constant`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinExpr {
    pub terms: BTreeMap<VarId, f64>,
    pub constant: f64,
}

impl LinExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        LinExpr {
            terms: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn term(v: VarId, c: f64) -> Self {
        let mut e = LinExpr::new();
        e.add_term(v, c);
        e
    }

    pub fn add_term(&mut self, v: VarId, c: f64) {
        *self.terms.entry(v).or_insert(0.0) += c;
    }

    pub fn coeff(&self, v: VarId) -> f64 {
        self.terms.get(&v).copied().unwrap_or(0.0)
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|(v, c)| c * values[v.0]).sum::<f64>() + self.constant
    }

    /// Terms with non-zero coefficients in variable order.
    pub fn nonzeros(&self) -> Vec<(VarId, f64)> {
        self.terms
            .iter()
            .filter(|(_, c)| **c != 0.0)
            .map(|(v, c)| (*v, *c))
            .collect()
    }
}

impl From<VarId> for LinExpr {
    fn from(v: VarId) -> Self {
        LinExpr::term(v, 1.0)
    }
}

impl From<f64> for LinExpr {
    fn from(c: f64) -> Self {
        LinExpr::constant(c)
    }
}

impl AddAssign<LinExpr> for LinExpr {
    fn add_assign(&mut self, rhs: LinExpr) {
        for (v, c) in rhs.terms {
            self.add_term(v, c);
        }
        self.constant += rhs.constant;
    }
}

impl<T: Into<LinExpr>> Add<T> for LinExpr {
    type Output = LinExpr;
    fn add(mut self, rhs: T) -> LinExpr {
        self += rhs.into();
        self
    }
}

impl<T: Into<LinExpr>> Sub<T> for LinExpr {
    type Output = LinExpr;
    fn sub(mut self, rhs: T) -> LinExpr {
        self += -rhs.into();
        self
    }
}

impl Mul<f64> for LinExpr {
    type Output = LinExpr;
    fn mul(mut self, k: f64) -> LinExpr {
        for c in self.terms.values_mut() {
            *c *= k;
        }
        self.constant *= k;
        self
    }
}

impl Neg for LinExpr {
    type Output = LinExpr;
    fn neg(self) -> LinExpr {
        self * -1.0
    }
}

impl Mul<f64> for VarId {
    type Output = LinExpr;
    fn mul(self, k: f64) -> LinExpr {
        LinExpr::term(self, k)
    }
}

impl<T: Into<LinExpr>> Add<T> for VarId {
    type Output = LinExpr;
    fn add(self, rhs: T) -> LinExpr {
        LinExpr::from(self) + rhs
    }
}

impl<T: Into<LinExpr>> Sub<T> for VarId {
    type Output = LinExpr;
    fn sub(self, rhs: T) -> LinExpr {
        LinExpr::from(self) - rhs
    }
}

/// A linear row `sum coeffs <sense> rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|(v, c)| c * values[v.0]).sum()
    }

    /// Amount by which `values` violate the row; zero when satisfied.
    pub fn violation(&self, values: &[f64]) -> f64 {
        let a = self.activity(values);
        match self.sense {
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

/// A minimization MILP over continuous and binary variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MipModel {
    pub variables: Vec<Variable>,
    pub rows: Vec<Row>,
    pub objective: LinExpr,
}

impl MipModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .count()
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, bounds: Interval) -> VarId {
        let bounds = match kind {
            VarKind::Binary => Interval::UNIT,
            VarKind::Continuous => bounds,
        };
        self.variables.push(Variable {
            name: name.into(),
            kind,
            bounds,
        });
        VarId(self.variables.len() - 1)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lo: f64, hi: f64) -> VarId {
        self.add_var(name, VarKind::Continuous, Interval::new(lo, hi))
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.add_var(name, VarKind::Binary, Interval::UNIT)
    }

    pub fn var(&self, v: VarId) -> &Variable {
        &self.variables[v.0]
    }

    pub fn set_bounds(&mut self, v: VarId, bounds: Interval) {
        self.variables[v.0].bounds = bounds;
    }

    /// Adds `lhs <sense> rhs`, moving the constant of `lhs` to the right-hand
    /// side and dropping zero coefficients. Returns the row index.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        lhs: LinExpr,
        sense: Sense,
        rhs: f64,
    ) -> usize {
        let rhs = rhs - lhs.constant;
        self.rows.push(Row {
            name: name.into(),
            coeffs: lhs.nonzeros(),
            sense,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn set_objective(&mut self, objective: LinExpr) {
        self.objective = objective;
    }

    pub fn evaluate_objective(&self, values: &[f64]) -> f64 {
        self.objective.eval(values)
    }

    /// Structural checks: declared variables, finite data, binaries on
    /// `[0, 1]`, and `lo <= hi`.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        for (j, v) in self.variables.iter().enumerate() {
            if !v.bounds.is_finite() || v.bounds.lo > v.bounds.hi {
                return Err(Error::InvalidModel(format!(
                    "variable {} ({}) has bounds [{}, {}]",
                    j, v.name, v.bounds.lo, v.bounds.hi
                )));
            }
            if v.kind == VarKind::Binary && (v.bounds.lo < 0.0 || v.bounds.hi > 1.0) {
                return Err(Error::InvalidModel(format!(
                    "binary {} has bounds outside [0, 1]",
                    v.name
                )));
            }
        }
        for r in &self.rows {
            if !r.rhs.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "row {} has non-finite rhs",
                    r.name
                )));
            }
            for (v, c) in &r.coeffs {
                if v.0 >= n {
                    return Err(Error::InvalidModel(format!(
                        "row {} references undeclared variable {}",
                        r.name, v
                    )));
                }
                if !c.is_finite() {
                    return Err(Error::InvalidModel(format!(
                        "row {} has a non-finite coefficient",
                        r.name
                    )));
                }
            }
        }
        for (v, c) in &self.objective.terms {
            if v.0 >= n || !c.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "objective term on {v} is invalid"
                )));
            }
        }
        if !self.objective.constant.is_finite() {
            return Err(Error::InvalidModel(
                "objective constant is not finite".into(),
            ));
        }
        Ok(())
    }

    /// Worst violation over rows and variable bounds. Integrality is not
    /// checked; see [`MipModel::max_integrality_violation`].
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self
            .rows
            .iter()
            .map(|r| r.violation(values))
            .fold(0.0, f64::max);
        self.variables
            .iter()
            .zip(values)
            .map(|(v, x)| (v.bounds.lo - x).max(x - v.bounds.hi).max(0.0))
            .fold(rows, f64::max)
    }

    pub fn max_integrality_violation(&self, values: &[f64]) -> f64 {
        self.variables
            .iter()
            .zip(values)
            .filter(|(v, _)| v.kind == VarKind::Binary)
            .map(|(_, x)| (x - x.round()).abs())
            .fold(0.0, f64::max)
    }

    /// Index of the worst-violated row, with its violation.
    pub fn worst_row(&self, values: &[f64]) -> Option<(usize, f64)> {
        self.rows
            .iter()
            .enumerate()
            .map(|(i, r)| (i, r.violation(values)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Feasible,
    Infeasible,
    Unbounded,
    LimitReached,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::Unbounded => "unbounded",
            SolveStatus::LimitReached => "limit",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub values: Vec<f64>,
    pub objective_value: f64,
    pub status: SolveStatus,
}

impl Solution {
    pub fn value(&self, v: VarId) -> f64 {
        self.values[v.0]
    }

    pub fn has_point(&self) -> bool {
        matches!(self.status, SolveStatus::Optimal | SolveStatus::Feasible)
    }
}
