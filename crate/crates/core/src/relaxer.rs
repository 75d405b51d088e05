//! Whole-instance relaxation: normalize to the unit box, lift every
//! quadratic term to an auxiliary variable, discretize the variables the
//! chosen method needs, and emit one fragment per term.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dnmdt::{relax_bilinear_dnmdt, relax_square_dnmdt, relax_square_tdnmdt, DnmdtFragment};
use crate::envelopes::{bilinear_envelope, square_envelope, Bounded};
use crate::error::{Error, Result};
use crate::model::{
    collect_quadratic_terms, normalize_instance, BackMap, LinExpr, Method, MipModel,
    MiqcqpInstance, QuadFunction, RelaxConfig, Sense, Solution, VarId,
};
use crate::nmdt::{
    digit_expansion, discretize, relax_bilinear_nmdt, relax_square_nmdt, relax_square_tnmdt,
    Digits, NmdtFragment,
};
use crate::sawtooth::{canonical_g, SawtoothFragment};
use crate::solver::{primal_recovery, solve_mip, MipResult, Recovery, SolveLimits};

/// How one term was relaxed.
#[derive(Debug, Clone, PartialEq)]
pub enum ProductFragment {
    McCormick {
        rows: Vec<usize>,
    },
    /// `discretized` is the normalized index of the variable whose digits
    /// were used; the other factor stays continuous.
    Nmdt {
        discretized: usize,
        fragment: NmdtFragment,
    },
    Dnmdt(DnmdtFragment),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TermRecord {
    /// Normalized variable indices, `i <= k`.
    pub i: usize,
    pub k: usize,
    pub aux: VarId,
    pub product: ProductFragment,
}

/// Bookkeeping from quadratic terms to the model variables relaxing them.
/// Digit and sawtooth records are keyed by normalized variable index and
/// shared by every term that uses them.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TermMap {
    pub terms: Vec<TermRecord>,
    pub digits: BTreeMap<usize, Digits>,
    pub sawtooth: BTreeMap<usize, SawtoothFragment>,
}

impl TermMap {
    pub fn aux(&self, i: usize, k: usize) -> Option<VarId> {
        let (i, k) = if i <= k { (i, k) } else { (k, i) };
        self.terms
            .iter()
            .find(|t| t.i == i && t.k == k)
            .map(|t| t.aux)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Counts {
    pub binaries: usize,
    pub rows: usize,
}

#[derive(Debug, Clone)]
pub struct RelaxationResult {
    pub model: MipModel,
    pub term_map: TermMap,
    pub back_map: BackMap,
    pub config: RelaxConfig,
    /// The unit-box instance the model was built from.
    pub normalized: MiqcqpInstance,
    pub x_vars: Vec<VarId>,
    pub y_vars: Vec<VarId>,
    /// Closed-form counts for a completely dense instance of the same size.
    pub predicted_counts: Counts,
    /// Digit binaries and term rows actually emitted. Original binaries and
    /// the rows of the instance's own constraints are excluded.
    pub actual_counts: Counts,
}

/// Closed-form binary and row counts for a completely dense instance with
/// `n` continuous variables.
///
/// For the tightened methods each variable additionally carries one
/// epigraph fragment of depth `L1`, which adds `3 L1 + 4` rows: the `g_0`
/// link, two rows per level, `L1 + 1` cuts and the two outer tangents.
pub fn predict_counts(n: usize, cfg: &RelaxConfig) -> Counts {
    let l = cfg.depth as usize;
    let epigraph = 3 * cfg.l1() as usize + 4;
    match cfg.method {
        Method::McCormick => Counts {
            binaries: 0,
            rows: 2 * n * n + n,
        },
        Method::Nmdt | Method::TNmdt => {
            // n (½(5n + 7) + 2 (n + 1) L)
            let mut rows = n * (5 * n + 7) / 2 + 2 * n * (n + 1) * l;
            if cfg.method.is_tightened() {
                rows += n * epigraph;
            }
            Counts {
                binaries: n * l,
                rows,
            }
        }
        Method::DNmdt | Method::TdNmdt => {
            // n (½(5n + 5) + 4 n L)
            let mut rows = n * (5 * n + 5) / 2 + 4 * n * n * l;
            if cfg.method.is_tightened() {
                rows += n * epigraph;
            }
            Counts {
                binaries: n * l,
                rows,
            }
        }
    }
}

/// Chooses the variables NMDT discretizes: every variable with a square
/// term, then greedily the vertex covering most uncovered bilinear terms
/// (lowest index on ties) until every term has a discretized factor.
pub fn nmdt_cover(n: usize, pairs: &[(usize, usize)]) -> BTreeSet<usize> {
    let mut cover: BTreeSet<usize> = pairs
        .iter()
        .filter(|(i, k)| i == k)
        .map(|&(i, _)| i)
        .collect();
    let mut open: Vec<(usize, usize)> = pairs
        .iter()
        .copied()
        .filter(|&(i, k)| i != k && !cover.contains(&i) && !cover.contains(&k))
        .collect();
    while !open.is_empty() {
        let mut degree = vec![0usize; n];
        for &(i, k) in &open {
            degree[i] += 1;
            degree[k] += 1;
        }
        let v = (0..n)
            .max_by(|&a, &b| degree[a].cmp(&degree[b]).then(b.cmp(&a)))
            .expect("open edges imply n > 0");
        cover.insert(v);
        open.retain(|&(i, k)| i != v && k != v);
    }
    cover
}

/// Builds the MIP relaxation of `inst` for the given configuration.
pub fn build_relaxation(inst: &MiqcqpInstance, cfg: &RelaxConfig) -> Result<RelaxationResult> {
    cfg.validate()?;
    let (norm, back_map) = normalize_instance(inst)?;
    let n = norm.n();
    let terms = collect_quadratic_terms(&norm);
    let mut model = MipModel::new();

    let x_vars: Vec<VarId> = (0..n)
        .map(|i| model.add_continuous(format!("x{}", i + 1), 0.0, 1.0))
        .collect();
    let y_vars: Vec<VarId> = (0..norm.k())
        .map(|j| model.add_binary(format!("y{}", j + 1)))
        .collect();
    let aux: Vec<VarId> = terms
        .iter()
        .map(|t| model.add_continuous(format!("z{}_{}", t.i + 1, t.k + 1), 0.0, 1.0))
        .collect();
    let base_rows = model.num_rows();
    let base_binaries = model.num_binaries();

    let pairs: Vec<(usize, usize)> = terms.iter().map(|t| (t.i, t.k)).collect();
    let discretized: BTreeSet<usize> = match cfg.method {
        Method::McCormick => BTreeSet::new(),
        Method::Nmdt | Method::TNmdt => nmdt_cover(n, &pairs),
        Method::DNmdt | Method::TdNmdt => pairs.iter().flat_map(|&(i, k)| [i, k]).collect(),
    };
    let mut term_map = TermMap::default();
    for &v in &discretized {
        let d = discretize(&mut model, x_vars[v], cfg.depth, &format!("x{}", v + 1));
        term_map.digits.insert(v, d);
    }

    for (t, &z) in terms.iter().zip(&aux) {
        let tag = format!("z{}_{}", t.i + 1, t.k + 1);
        let (xi, xk) = (x_vars[t.i], x_vars[t.k]);
        let product = match cfg.method {
            Method::McCormick => {
                let bx = Bounded::var(&model, xi);
                let rows = if t.is_square() {
                    square_envelope(&mut model, &bx, z, &tag).rows
                } else {
                    let by = Bounded::var(&model, xk);
                    bilinear_envelope(&mut model, &bx, &by, z, &tag).rows
                };
                ProductFragment::McCormick { rows }
            }
            Method::Nmdt | Method::TNmdt => {
                if t.is_square() {
                    let d = &term_map.digits[&t.i];
                    let fragment = if cfg.method.is_tightened() {
                        relax_square_tnmdt(&mut model, z, d, cfg.l1(), &tag)?
                    } else {
                        relax_square_nmdt(&mut model, z, d, &tag)
                    };
                    if let Some(s) = &fragment.sawtooth {
                        term_map.sawtooth.insert(t.i, s.clone());
                    }
                    ProductFragment::Nmdt {
                        discretized: t.i,
                        fragment,
                    }
                } else {
                    let (dv, other) = if term_map.digits.contains_key(&t.i) {
                        (t.i, xk)
                    } else {
                        (t.k, xi)
                    };
                    let d = &term_map.digits[&dv];
                    let fragment = relax_bilinear_nmdt(&mut model, z, d, other, &tag);
                    ProductFragment::Nmdt {
                        discretized: dv,
                        fragment,
                    }
                }
            }
            Method::DNmdt | Method::TdNmdt => {
                let fragment = if t.is_square() {
                    let d = &term_map.digits[&t.i];
                    if cfg.method.is_tightened() {
                        relax_square_tdnmdt(&mut model, z, d, cfg.l1(), &tag)?
                    } else {
                        relax_square_dnmdt(&mut model, z, d, &tag)
                    }
                } else {
                    let (dx, dy) = (&term_map.digits[&t.i], &term_map.digits[&t.k]);
                    relax_bilinear_dnmdt(&mut model, z, dx, dy, cfg.lambda, &tag)?
                };
                if let Some(s) = &fragment.sawtooth {
                    term_map.sawtooth.insert(t.i, s.clone());
                }
                ProductFragment::Dnmdt(fragment)
            }
        };
        term_map.terms.push(TermRecord {
            i: t.i,
            k: t.k,
            aux: z,
            product,
        });
    }
    let actual_counts = Counts {
        binaries: model.num_binaries() - base_binaries,
        rows: model.num_rows() - base_rows,
    };

    let lift = |f: &QuadFunction| -> LinExpr {
        let mut e = LinExpr::constant(f.constant);
        for (i, &c) in f.lin.iter().enumerate() {
            if c != 0.0 {
                e.add_term(x_vars[i], c);
            }
        }
        for (j, &d) in f.bin.iter().enumerate() {
            if d != 0.0 {
                e.add_term(y_vars[j], d);
            }
        }
        for ((i, k), q) in f.quad.iter() {
            e.add_term(term_map.aux(i, k).expect("every term has an auxiliary"), q);
        }
        e
    };
    for (j, c) in norm.constraints.iter().enumerate() {
        let e = lift(c);
        model.add_row(format!("c{}", j + 1), e, Sense::Le, 0.0);
    }
    let objective = lift(&norm.objective);
    model.set_objective(objective);
    model.validate()?;

    Ok(RelaxationResult {
        predicted_counts: predict_counts(n, cfg),
        actual_counts,
        model,
        term_map,
        back_map,
        config: *cfg,
        normalized: norm,
        x_vars,
        y_vars,
    })
}

impl RelaxationResult {
    /// Canonical model point for an original point `(x, y)`: exact digits,
    /// exact products and `g_j = G^j(x)`.
    pub fn extend(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let xh: Vec<f64> = self
            .back_map
            .to_normalized(x)
            .into_iter()
            .map(|v| v.clamp(0.0, 1.0))
            .collect();
        let mut v = vec![0.0; self.model.num_vars()];
        for (i, &var) in self.x_vars.iter().enumerate() {
            v[var.0] = xh[i];
        }
        for (j, &var) in self.y_vars.iter().enumerate() {
            v[var.0] = y[j];
        }
        let mut delta = BTreeMap::new();
        for (&i, d) in &self.term_map.digits {
            let (bits, dx) = digit_expansion(xh[i], d.depth);
            for (b, bit) in d.beta.iter().zip(bits) {
                v[b.0] = bit;
            }
            v[d.delta.0] = dx;
            delta.insert(i, dx);
        }
        for (&i, s) in &self.term_map.sawtooth {
            for (g, gv) in s.g.iter().zip(canonical_g(xh[i], s.depth())?) {
                v[g.0] = gv;
            }
        }
        let lambda = self.config.lambda;
        for t in &self.term_map.terms {
            v[t.aux.0] = xh[t.i] * xh[t.k];
            match &t.product {
                ProductFragment::McCormick { .. } => {}
                ProductFragment::Nmdt {
                    discretized,
                    fragment,
                } => {
                    let d = &self.term_map.digits[discretized];
                    let other = if *discretized == t.i { t.k } else { t.i };
                    for (j, u) in fragment.u.iter().enumerate() {
                        v[u.0] = v[d.beta[j].0] * xh[other];
                    }
                    if let Some(dz) = fragment.delta_z {
                        v[dz.0] = delta[discretized] * xh[other];
                    }
                }
                ProductFragment::Dnmdt(f) => {
                    let dx = &self.term_map.digits[&t.i];
                    let (ddx, xi) = (delta[&t.i], xh[t.i]);
                    if t.i == t.k {
                        for (j, u) in f.u.iter().enumerate() {
                            v[u.0] = v[dx.beta[j].0] * (ddx + xi);
                        }
                        if let Some(dz) = f.delta_z {
                            v[dz.0] = ddx * ddx;
                        }
                    } else {
                        let dy = &self.term_map.digits[&t.k];
                        let (ddy, yk) = (delta[&t.k], xh[t.k]);
                        for (j, u) in f.u.iter().enumerate() {
                            v[u.0] = v[dx.beta[j].0] * (lambda * ddy + (1.0 - lambda) * yk);
                        }
                        for (j, w) in f.v.iter().enumerate() {
                            v[w.0] = v[dy.beta[j].0] * ((1.0 - lambda) * ddx + lambda * xi);
                        }
                        if let Some(dz) = f.delta_z {
                            v[dz.0] = ddx * ddy;
                        }
                    }
                }
            }
        }
        Ok(v)
    }

    /// Original-space `(x, y)` read from a model solution.
    pub fn original_point(&self, sol: &Solution) -> (Vec<f64>, Vec<f64>) {
        let xh: Vec<f64> = self.x_vars.iter().map(|v| sol.values[v.0]).collect();
        let y = self.y_vars.iter().map(|v| sol.values[v.0]).collect();
        (self.back_map.to_original(&xh), y)
    }
}

/// A relaxation, its branch-and-bound result, and the recovered point.
#[derive(Debug, Clone)]
pub struct InstanceSolve {
    pub relaxation: RelaxationResult,
    pub mip: MipResult,
    /// Polished from the relaxation incumbent, if there was one.
    pub recovery: Option<Recovery>,
}

impl InstanceSolve {
    /// Objective of the recovered point when it is feasible.
    pub fn primal_bound(&self) -> Option<f64> {
        self.recovery
            .as_ref()
            .filter(|r| r.feasible)
            .map(|r| r.objective)
    }
}

/// Builds the relaxation of `inst`, solves it and polishes the incumbent
/// into a point of the original problem. The MIP dual bound is a valid
/// lower bound on the optimum of `inst`.
pub fn relax_and_solve(
    inst: &MiqcqpInstance,
    cfg: &RelaxConfig,
    limits: &SolveLimits,
) -> Result<InstanceSolve> {
    let relaxation = build_relaxation(inst, cfg)?;
    let mip = solve_mip(&relaxation.model, limits)?;
    let recovery = mip.incumbent.as_ref().map(|sol| {
        let (x, y) = relaxation.original_point(sol);
        primal_recovery(inst, &x, &y)
    });
    Ok(InstanceSolve {
        relaxation,
        mip,
        recovery,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValidationReport {
    pub samples: usize,
    pub worst_violation: f64,
    pub worst_objective_gap: f64,
}

/// Tolerance on row violations of extended points.
pub const EXTENSION_TOL: f64 = 1e-8;

/// Samples feasible points of `inst` by rejection, extends each to the
/// model, and checks feasibility and objective agreement.
pub fn validate_relaxation(
    inst: &MiqcqpInstance,
    result: &RelaxationResult,
    samples: usize,
    seed: u64,
) -> Result<ValidationReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = ValidationReport {
        samples: 0,
        worst_violation: 0.0,
        worst_objective_gap: 0.0,
    };
    let max_attempts = samples.saturating_mul(1000).max(1000);
    let mut attempts = 0;
    while report.samples < samples && attempts < max_attempts {
        attempts += 1;
        let x: Vec<f64> = inst
            .bounds
            .iter()
            .map(|b| {
                if b.width() > 0.0 {
                    rng.gen_range(b.lo..=b.hi)
                } else {
                    b.lo
                }
            })
            .collect();
        let y: Vec<f64> = (0..inst.k())
            .map(|_| f64::from(rng.gen_range(0u8..=1)))
            .collect();
        if inst.max_violation(&x, &y) > 0.0 {
            continue;
        }
        report.samples += 1;
        let ext = result.extend(&x, &y)?;
        let viol = result.model.max_violation(&ext);
        let gap = (result.model.evaluate_objective(&ext) - inst.objective_value(&x, &y)).abs();
        report.worst_violation = report.worst_violation.max(viol);
        report.worst_objective_gap = report.worst_objective_gap.max(gap);
        if viol > EXTENSION_TOL {
            let row = result
                .model
                .worst_row(&ext)
                .map(|(i, _)| result.model.rows[i].name.clone())
                .unwrap_or_default();
            return Err(Error::ValidationFailure(format!(
                "point x = {x:?}, y = {y:?} extends with violation {viol:.3e} (row {row})"
            )));
        }
    }
    Ok(report)
}
