//! MIP relaxations of box-bounded mixed-integer quadratically constrained
//! quadratic programs.
//!
//! Every quadratic term of an instance is lifted to an auxiliary variable and
//! relaxed with McCormick envelopes, binary digit expansions (NMDT, D-NMDT),
//! and optionally sawtooth epigraph cuts. A small simplex and branch-and-bound
//! engine solves the resulting models, and the [`analysis`] module measures
//! the error and volume of each relaxation.

pub mod analysis;
pub mod dnmdt;
pub mod envelopes;
pub mod error;
pub mod io;
pub mod model;
pub mod nmdt;
pub mod relaxer;
pub mod sawtooth;
pub mod solver;

pub use error::{Error, Result};
