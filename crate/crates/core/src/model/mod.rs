//! Core data types shared by every other module: box-bounded MIQCQP
//! instances, mixed-binary linear models, and relaxation settings.
//!
//! All types are plain owned data and immutable once built, so they can be
//! shared freely across threads.

mod config;
mod instance;
mod linear;

pub use config::{default_tight_depth, Method, RelaxConfig};
pub use instance::{
    collect_quadratic_terms, normalize_instance, BackMap, Coordinate, Interval, MiqcqpInstance,
    QuadForm, QuadFunction, QuadTerm, TermSource,
};
pub use linear::{LinExpr, MipModel, Row, Sense, Solution, SolveStatus, VarId, VarKind, Variable};

/// Absolute tolerance for membership checks against envelope rows.
pub const MEMBERSHIP_TOL: f64 = 1e-9;
