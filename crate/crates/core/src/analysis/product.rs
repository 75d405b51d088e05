//! Single-term relaxations on the unit box, built as standalone models so
//! their projections can be probed point by point.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dnmdt::{relax_bilinear_dnmdt, relax_square_dnmdt};
use crate::envelopes::{
    bilinear_envelope, bilinear_envelope_range, square_envelope, square_envelope_range, Bounded,
};
use crate::error::{Error, Result};
use crate::model::{Interval, LinExpr, MipModel, SolveStatus, VarId};
use crate::nmdt::{
    digit_expansion, discretize, relax_bilinear_nmdt, relax_square_nmdt, step, Digits,
};
use crate::sawtooth::build_epigraph_relaxation;
use crate::solver::{LpOptions, Workspace};

/// The term and relaxation being analysed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Product {
    /// McCormick envelope of `xy` on the unit square.
    McCormick,
    /// Secant and end tangents of `x²` on `[0, 1]`.
    McCormickSquare,
    Nmdt,
    Dnmdt,
    NmdtSquare,
    DnmdtSquare,
    /// Sawtooth epigraph relaxation of `x²`.
    Sawtooth,
}

impl Product {
    pub const ALL: [Product; 7] = [
        Product::McCormick,
        Product::McCormickSquare,
        Product::Nmdt,
        Product::Dnmdt,
        Product::NmdtSquare,
        Product::DnmdtSquare,
        Product::Sawtooth,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            Product::McCormick => "mc",
            Product::McCormickSquare => "mc-sq",
            Product::Nmdt => "nmdt",
            Product::Dnmdt => "dnmdt",
            Product::NmdtSquare => "nmdt-sq",
            Product::DnmdtSquare => "dnmdt-sq",
            Product::Sawtooth => "sawtooth",
        }
    }

    pub fn is_square(self) -> bool {
        !matches!(self, Product::McCormick | Product::Nmdt | Product::Dnmdt)
    }

    pub fn discretizes(self) -> bool {
        matches!(
            self,
            Product::Nmdt | Product::Dnmdt | Product::NmdtSquare | Product::DnmdtSquare
        )
    }

    /// Whether the depth parameter changes the relaxation at all.
    pub fn uses_depth(self) -> bool {
        self.discretizes() || self == Product::Sawtooth
    }
}

impl fmt::Display for Product {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for Product {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Product::ALL
            .into_iter()
            .find(|p| p.short_name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<_> = Product::ALL.iter().map(|p| p.short_name()).collect();
                Error::Config(format!(
                    "unknown product '{s}', expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// A one-term model `z ≈ x y` (or `z ≈ x²`) with its discretization.
#[derive(Debug, Clone)]
pub struct ProductModel {
    pub product: Product,
    pub depth: u32,
    pub lambda: f64,
    pub model: MipModel,
    pub x: VarId,
    /// Second factor for bilinear products.
    pub y: Option<VarId>,
    pub z: VarId,
    pub x_digits: Option<Digits>,
    pub y_digits: Option<Digits>,
}

/// Box for the product variable. Wider than `[0, 1]` so that the fragment
/// rows alone decide its range.
const Z_BOX: (f64, f64) = (-1.0, 2.0);

impl ProductModel {
    pub fn build(product: Product, depth: u32, lambda: f64) -> Result<Self> {
        if product.uses_depth() && depth < 1 {
            return Err(Error::Config(format!("{product} needs depth >= 1")));
        }
        let mut model = MipModel::new();
        let x = model.add_continuous("x", 0.0, 1.0);
        let y = (!product.is_square()).then(|| model.add_continuous("y", 0.0, 1.0));
        let z = model.add_continuous("z", Z_BOX.0, Z_BOX.1);
        let mut x_digits = None;
        let mut y_digits = None;
        match product {
            Product::McCormick => {
                let (bx, by) = (Bounded::var(&model, x), Bounded::var(&model, y.unwrap()));
                bilinear_envelope(&mut model, &bx, &by, z, "z");
            }
            Product::McCormickSquare => {
                let bx = Bounded::var(&model, x);
                square_envelope(&mut model, &bx, z, "z");
            }
            Product::Nmdt => {
                let d = discretize(&mut model, x, depth, "x");
                relax_bilinear_nmdt(&mut model, z, &d, y.unwrap(), "z");
                x_digits = Some(d);
            }
            Product::Dnmdt => {
                let dx = discretize(&mut model, x, depth, "x");
                let dy = discretize(&mut model, y.unwrap(), depth, "y");
                relax_bilinear_dnmdt(&mut model, z, &dx, &dy, lambda, "z")?;
                x_digits = Some(dx);
                y_digits = Some(dy);
            }
            Product::NmdtSquare => {
                let d = discretize(&mut model, x, depth, "x");
                relax_square_nmdt(&mut model, z, &d, "z");
                x_digits = Some(d);
            }
            Product::DnmdtSquare => {
                let d = discretize(&mut model, x, depth, "x");
                relax_square_dnmdt(&mut model, z, &d, "z");
                x_digits = Some(d);
            }
            Product::Sawtooth => {
                build_epigraph_relaxation(&mut model, x, z, depth, "z");
            }
        }
        Ok(ProductModel {
            product,
            depth,
            lambda,
            model,
            x,
            y,
            z,
            x_digits,
            y_digits,
        })
    }

    /// The exact product at `(x, y)`; `y` is ignored for squares.
    pub fn target(&self, x: f64, y: f64) -> f64 {
        if self.product.is_square() {
            x * x
        } else {
            x * y
        }
    }

    /// Fixings of the factors at `(x, y)`, plus the digit binaries of the
    /// canonical expansion when `fix_binaries` is set.
    pub fn point_fixings(&self, x: f64, y: f64, fix_binaries: bool) -> Vec<(VarId, f64)> {
        let mut f = vec![(self.x, x)];
        if let Some(yv) = self.y {
            f.push((yv, y));
        }
        if fix_binaries {
            for (d, v) in [(&self.x_digits, x), (&self.y_digits, y)] {
                if let Some(d) = d {
                    let (bits, _) = digit_expansion(v, d.depth);
                    f.extend(d.beta.iter().copied().zip(bits));
                }
            }
        }
        f
    }
}

/// Closed-form range of `z` over the MIP projection at `(x, y)`, using the
/// grid piece containing the point (the lower piece at shared breakpoints).
/// `None` for the sawtooth epigraph, which has no upper side.
pub fn projected_range(product: Product, depth: u32, x: f64, y: f64) -> Option<(f64, f64)> {
    let h = step(depth);
    let residual = |v: f64| digit_expansion(v, depth).1;
    let (lo, hi) = match product {
        Product::McCormick => bilinear_envelope_range(Interval::UNIT, Interval::UNIT, x, y),
        Product::McCormickSquare => square_envelope_range(Interval::UNIT, x),
        Product::Nmdt => {
            let dx = residual(x);
            let (lo, hi) = bilinear_envelope_range(Interval::new(0.0, h), Interval::UNIT, dx, y);
            let exact = (x - dx) * y;
            (exact + lo, exact + hi)
        }
        Product::Dnmdt => {
            let (dx, dy) = (residual(x), residual(y));
            let cell = Interval::new(0.0, h);
            let (lo, hi) = bilinear_envelope_range(cell, cell, dx, dy);
            let exact = x * y - dx * dy;
            (exact + lo, exact + hi)
        }
        Product::NmdtSquare => {
            let dx = residual(x);
            let (lo, hi) = bilinear_envelope_range(Interval::new(0.0, h), Interval::UNIT, dx, x);
            let exact = (x - dx) * x;
            (exact + lo, exact + hi)
        }
        Product::DnmdtSquare => {
            let dx = residual(x);
            let (lo, hi) = square_envelope_range(Interval::new(0.0, h), dx);
            let exact = x * x - dx * dx;
            (exact + lo, exact + hi)
        }
        Product::Sawtooth => return None,
    };
    Some((lo, hi))
}

/// Repeated LP probes of the range of `z` with some variables fixed.
///
/// Two warm workspaces (minimizing and maximizing `z`) are kept and
/// re-optimized with the dual simplex after each change of fixed values.
/// Unfixed binaries are relaxed to `[0, 1]`.
pub struct RangeProbe {
    min_model: MipModel,
    max_model: MipModel,
    opts: LpOptions,
    warm: Option<(Vec<VarId>, Workspace, Workspace)>,
}

impl RangeProbe {
    pub fn new(pm: &ProductModel) -> Self {
        let mut min_model = pm.model.clone();
        min_model.set_objective(LinExpr::from(pm.z));
        let mut max_model = pm.model.clone();
        max_model.set_objective(LinExpr::term(pm.z, -1.0));
        RangeProbe {
            min_model,
            max_model,
            opts: LpOptions::default(),
            warm: None,
        }
    }

    /// `(min z, max z)` over the LP with `fixings` applied, or `None` when
    /// the fixings are infeasible.
    pub fn range(&mut self, fixings: &[(VarId, f64)]) -> Result<Option<(f64, f64)>> {
        let vars: Vec<VarId> = fixings.iter().map(|f| f.0).collect();
        if let Some((fixed, lo_ws, hi_ws)) = &mut self.warm {
            if *fixed == vars {
                for &(v, val) in fixings {
                    lo_ws.set_bounds(v.0, val, val);
                    hi_ws.set_bounds(v.0, val, val);
                }
                if let (Ok(a), Ok(b)) = (lo_ws.resolve(), hi_ws.resolve()) {
                    return Ok(Self::read(a, b, lo_ws, hi_ws));
                }
            }
        }
        let fix = |base: &MipModel| {
            let mut m = base.clone();
            for &(v, val) in fixings {
                m.variables[v.0].bounds = Interval::new(val, val);
            }
            Workspace::new(&m, self.opts)
        };
        let mut lo_ws = fix(&self.min_model);
        let mut hi_ws = fix(&self.max_model);
        let a = lo_ws.solve()?;
        let b = hi_ws.solve()?;
        let out = Self::read(a, b, &lo_ws, &hi_ws);
        self.warm = Some((vars, lo_ws, hi_ws));
        Ok(out)
    }

    fn read(a: SolveStatus, b: SolveStatus, lo: &Workspace, hi: &Workspace) -> Option<(f64, f64)> {
        if a == SolveStatus::Infeasible || b == SolveStatus::Infeasible {
            None
        } else {
            Some((lo.objective_value(), -hi.objective_value()))
        }
    }
}
