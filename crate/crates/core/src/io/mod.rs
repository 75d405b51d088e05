//! File formats: JSON and boxQP instances, LP-format models, CSV records.

mod boxqp;
mod lp;
mod native;
mod records;

pub use boxqp::{parse_boxqp, parse_boxqp_str, write_boxqp_string, BoxQp, SYMMETRY_TOL};
pub use lp::{export_lp_file, read_lp_file, read_lp_str, write_lp_string};
pub use native::{parse_native, parse_native_str, write_native, write_native_string};
pub use records::{
    read_csv, summarize_runs, write_csv, ErrorReportRow, ProfileRow, RunRecord, RunSummary, SgmRow,
    OPTIMAL,
};
