//! JSON instance format.
//!
//! ```json
//! {
//!   "n": 2,
//!   "k": 1,
//!   "bounds": [[-1.0, 1.0], [0.0, 2.0]],
//!   "objective": { "quad": [[1, 1, 1.0]], "lin": [0.0, -1.0], "bin": [0.5], "constant": 0.0 },
//!   "constraints": [
//!     { "quad": [[1, 2, 1.0]], "lin": [0.0, 0.0], "bin": [1.0], "rhs": 0.5 }
//!   ]
//! }
//! ```
//!
//! Quadratic entries are 1-based `[i, k, q]` triplets with `i <= k`, each
//! standing for `q x_i x_k`; repeated pairs are summed. `lin` and `bin` may
//! be omitted when zero. Constraints read `quad + lin·x + bin·y <= rhs`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Interval, MiqcqpInstance, QuadForm, QuadFunction};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NativeFile {
    n: usize,
    #[serde(default)]
    k: usize,
    bounds: Vec<[f64; 2]>,
    objective: NativeObjective,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    constraints: Vec<NativeConstraint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NativeObjective {
    #[serde(default)]
    quad: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lin: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bin: Option<Vec<f64>>,
    #[serde(default)]
    constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NativeConstraint {
    #[serde(default)]
    quad: Vec<(usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lin: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bin: Option<Vec<f64>>,
    rhs: f64,
}

fn quad_form(n: usize, triplets: &[(usize, usize, f64)], what: &str) -> Result<QuadForm> {
    let mut q = QuadForm::default();
    for &(i, k, c) in triplets {
        if i == 0 || k == 0 || i > n || k > n {
            return Err(Error::Validation(format!(
                "{what}: triplet ({i}, {k}) outside 1..={n}"
            )));
        }
        if i > k {
            return Err(Error::Validation(format!(
                "{what}: triplet ({i}, {k}) must have i <= k"
            )));
        }
        q.add(i - 1, k - 1, c);
    }
    Ok(q)
}

fn dense(v: &Option<Vec<f64>>, len: usize, what: &str) -> Result<Vec<f64>> {
    match v {
        None => Ok(vec![0.0; len]),
        Some(v) if v.len() == len => Ok(v.clone()),
        Some(v) => Err(Error::Validation(format!(
            "{what} has {} entries, expected {len}",
            v.len()
        ))),
    }
}

fn sparse_out(v: &[f64]) -> Option<Vec<f64>> {
    v.iter().any(|&c| c != 0.0).then(|| v.to_vec())
}

fn triplets_out(q: &QuadForm) -> Vec<(usize, usize, f64)> {
    q.iter().map(|((i, k), c)| (i + 1, k + 1, c)).collect()
}

/// Parses and validates a JSON instance.
pub fn parse_native_str(text: &str) -> Result<MiqcqpInstance> {
    let file: NativeFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if file.bounds.len() != file.n {
        return Err(Error::Validation(format!(
            "{} bounds given for n = {}",
            file.bounds.len(),
            file.n
        )));
    }
    let bounds = file
        .bounds
        .iter()
        .map(|&[lo, hi]| Interval { lo, hi })
        .collect();
    let mut inst = MiqcqpInstance::new(bounds, file.k);
    let (n, k) = (file.n, file.k);
    let o = &file.objective;
    inst.objective = QuadFunction {
        quad: quad_form(n, &o.quad, "objective")?,
        lin: dense(&o.lin, n, "objective lin")?,
        bin: dense(&o.bin, k, "objective bin")?,
        constant: o.constant,
    };
    for (j, c) in file.constraints.iter().enumerate() {
        let what = format!("constraint {}", j + 1);
        inst.constraints.push(QuadFunction {
            quad: quad_form(n, &c.quad, &what)?,
            lin: dense(&c.lin, n, &format!("{what} lin"))?,
            bin: dense(&c.bin, k, &format!("{what} bin"))?,
            constant: -c.rhs,
        });
    }
    inst.validate()?;
    Ok(inst)
}

pub fn parse_native(path: impl AsRef<Path>) -> Result<MiqcqpInstance> {
    parse_native_str(&std::fs::read_to_string(path)?)
}

/// Pretty-printed JSON; [`parse_native_str`] restores the same instance.
pub fn write_native_string(inst: &MiqcqpInstance) -> Result<String> {
    let file = NativeFile {
        n: inst.n(),
        k: inst.k(),
        bounds: inst.bounds.iter().map(|b| [b.lo, b.hi]).collect(),
        objective: NativeObjective {
            quad: triplets_out(&inst.objective.quad),
            lin: sparse_out(&inst.objective.lin),
            bin: sparse_out(&inst.objective.bin),
            constant: inst.objective.constant,
        },
        constraints: inst
            .constraints
            .iter()
            .map(|c| NativeConstraint {
                quad: triplets_out(&c.quad),
                lin: sparse_out(&c.lin),
                bin: sparse_out(&c.bin),
                rhs: -c.constant,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).map_err(|e| Error::Config(e.to_string()))
}

pub fn write_native(inst: &MiqcqpInstance, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_native_string(inst)? + "\n")?;
    Ok(())
}
