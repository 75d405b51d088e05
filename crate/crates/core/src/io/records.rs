//! CSV schemas for benchmark runs, error reports and run summaries.
//!
//! | file            | columns |
//! |-----------------|---------|
//! | runs            | `instance,method,depth,tight_depth,status,dual_bound,primal_bound,gap,nodes,wall_seconds` |
//! | error reports   | `product,depth,tight_depth,max_error_theory,max_error_empirical,avg_width_theory,avg_width_empirical,avg_width_stderr,samples` |
//! | profile steps   | `depth,method,tau,fraction` |
//! | shifted geomean | `depth,method,sgm_wall_seconds,instances` |
//!
//! Empty cells stand for missing values.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::analysis::{performance_profile, shifted_geomean, ErrorReport, Orientation};
use crate::error::Result;

/// One relaxation solve in a benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub method: String,
    pub depth: u32,
    pub tight_depth: Option<u32>,
    pub status: String,
    /// Lower bound on the instance optimum.
    pub dual_bound: Option<f64>,
    /// Objective of the best recovered feasible point.
    pub primal_bound: Option<f64>,
    pub gap: Option<f64>,
    pub nodes: usize,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReportRow {
    pub product: String,
    pub depth: u32,
    pub tight_depth: u32,
    pub max_error_theory: f64,
    pub max_error_empirical: f64,
    pub avg_width_theory: Option<f64>,
    pub avg_width_empirical: Option<f64>,
    pub avg_width_stderr: Option<f64>,
    pub samples: Option<usize>,
}

impl From<&ErrorReport> for ErrorReportRow {
    fn from(r: &ErrorReport) -> Self {
        ErrorReportRow {
            product: r.product.to_string(),
            depth: r.depth,
            tight_depth: r.tight_depth,
            max_error_theory: r.max_error_theory,
            max_error_empirical: r.max_error_empirical,
            avg_width_theory: r.avg_width_theory,
            avg_width_empirical: r.avg_width_empirical.map(|e| e.value),
            avg_width_stderr: r.avg_width_empirical.map(|e| e.stderr),
            samples: r.avg_width_empirical.map(|e| e.samples),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub depth: u32,
    pub method: String,
    pub tau: f64,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgmRow {
    pub depth: u32,
    pub method: String,
    pub sgm_wall_seconds: f64,
    pub instances: usize,
}

pub fn write_csv<T: Serialize>(out: impl Write, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(input: impl Read) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize().map(|row| Ok(row?)).collect()
}

/// Status string of runs that proved optimality of their relaxation.
pub const OPTIMAL: &str = "optimal";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunSummary {
    pub profile: Vec<ProfileRow>,
    pub sgm: Vec<SgmRow>,
}

/// Performance-profile steps of the dual bounds and shifted geometric mean
/// run times (shift `shift`), grouped by depth.
///
/// Profiles treat larger dual bounds as better. The run-time means only
/// use instances on which at least one method of that depth finished
/// optimal.
pub fn summarize_runs(runs: &[RunRecord], shift: f64) -> Result<RunSummary> {
    let mut out = RunSummary::default();
    let depths: BTreeSet<u32> = runs.iter().map(|r| r.depth).collect();
    for depth in depths {
        let at: Vec<&RunRecord> = runs.iter().filter(|r| r.depth == depth).collect();
        let methods: Vec<String> = ordered(at.iter().map(|r| r.method.clone()));
        let instances: Vec<String> = ordered(at.iter().map(|r| r.instance.clone()));
        let mut cell: BTreeMap<(&str, &str), &RunRecord> = BTreeMap::new();
        for r in &at {
            cell.insert((r.method.as_str(), r.instance.as_str()), r);
        }
        let bounds: Vec<Vec<Option<f64>>> = methods
            .iter()
            .map(|m| {
                instances
                    .iter()
                    .map(|p| {
                        cell.get(&(m.as_str(), p.as_str()))
                            .and_then(|r| r.dual_bound)
                    })
                    .collect()
            })
            .collect();
        let table =
            performance_profile(&methods, &instances, &bounds, Orientation::HigherIsBetter)?;
        for (s, m) in methods.iter().enumerate() {
            for (tau, fraction) in table.steps(s) {
                out.profile.push(ProfileRow {
                    depth,
                    method: m.clone(),
                    tau,
                    fraction,
                });
            }
        }

        let solved: BTreeSet<&str> = at
            .iter()
            .filter(|r| r.status == OPTIMAL)
            .map(|r| r.instance.as_str())
            .collect();
        for m in &methods {
            let times: Vec<f64> = at
                .iter()
                .filter(|r| &r.method == m && solved.contains(r.instance.as_str()))
                .map(|r| r.wall_seconds)
                .collect();
            if times.is_empty() {
                continue;
            }
            out.sgm.push(SgmRow {
                depth,
                method: m.clone(),
                sgm_wall_seconds: shifted_geomean(&times, shift)?,
                instances: times.len(),
            });
        }
    }
    Ok(out)
}

/// Distinct values in order of first appearance.
fn ordered(items: impl Iterator<Item = String>) -> Vec<String> {
    let mut seen = BTreeSet::new();
    items.filter(|s| seen.insert(s.clone())).collect()
}
