//! LP and MIP engine sized for small models, plus a local polish heuristic
//! for the original quadratic problem.

mod mip;
mod recovery;
mod simplex;

pub use mip::{compute_gap, solve_mip, BranchRecord, MipResult, SolveLimits};
pub use recovery::{primal_recovery, Recovery, RECOVERY_FEAS_TOL};
pub use simplex::{solve_lp, solve_lp_with, LpOptions, Workspace};
