//! Error, volume and sharpness measurements of single-term relaxations,
//! and the statistics used to compare methods across instances.

mod errors;
mod product;
mod stats;
mod volume;

pub use errors::{
    avg_width_empirical, avg_width_theoretical, max_error_empirical, max_error_theoretical,
    nmdt_square_error_sides, nmdt_square_overestimation, nmdt_square_underestimation, Estimate,
};
pub use product::{projected_range, Product, ProductModel, RangeProbe};
pub use stats::{
    breakpoint_objective, performance_profile, shifted_geomean, Orientation, ProfileTable,
};
pub use volume::{
    lp_volume_reference, lp_volume_univariate, nonsharp_witness, sharpness_probe, SharpnessOutcome,
    SharpnessTarget, WitnessReport,
};

use serde::Serialize;

use crate::error::Result;
use crate::model::default_tight_depth;

/// Monte-Carlo sample count used when none is given.
pub const DEFAULT_SAMPLES: usize = 1_000_000;
pub const DEFAULT_SEED: u64 = 42;
/// Grid resolution for grid-maximized errors.
pub const DEFAULT_RESOLUTION: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalysisOptions {
    pub samples: usize,
    pub seed: u64,
    pub resolution: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            resolution: DEFAULT_RESOLUTION,
        }
    }
}

/// Theory next to measurement for one product at one depth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorReport {
    pub product: Product,
    pub depth: u32,
    /// Tightening depth a T-variant would pair with this depth.
    pub tight_depth: u32,
    pub max_error_theory: f64,
    pub max_error_empirical: f64,
    pub avg_width_theory: Option<f64>,
    pub avg_width_empirical: Option<Estimate>,
}

impl ErrorReport {
    pub fn compute(product: Product, depth: u32, opts: &AnalysisOptions) -> Result<Self> {
        let avg_width_empirical = if product == Product::Sawtooth {
            None
        } else {
            Some(avg_width_empirical(
                product,
                depth,
                opts.samples,
                opts.seed,
            )?)
        };
        Ok(ErrorReport {
            product,
            depth,
            tight_depth: default_tight_depth(depth),
            max_error_theory: max_error_theoretical(product, depth),
            max_error_empirical: max_error_empirical(product, depth, opts.resolution)?,
            avg_width_theory: avg_width_theoretical(product, depth),
            avg_width_empirical,
        })
    }
}
