//! Maximum errors and average error widths of single-term relaxations.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::product::{projected_range, Product, ProductModel, RangeProbe};
use crate::envelopes::bilinear_envelope_range;
use crate::error::{Error, Result};
use crate::model::Interval;
use crate::nmdt::step;

/// A Monte-Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    /// Distance to `target` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        if self.stderr == 0.0 {
            if self.value == target {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.value - target).abs() / self.stderr
        }
    }
}

const CHUNK: usize = 4096;

/// Parallel Monte-Carlo mean of `f`. Chunk `c` draws from stream `c` of a
/// ChaCha8 generator seeded with `seed`, and partial sums are merged in
/// chunk order, so the result does not depend on the thread count.
pub(crate) fn monte_carlo<S, I, F>(samples: usize, seed: u64, init: I, f: F) -> Result<Estimate>
where
    I: Fn() -> S + Sync,
    F: Fn(&mut S, &mut ChaCha8Rng) -> Result<f64> + Sync,
{
    if samples == 0 {
        return Err(Error::Config(
            "Monte-Carlo needs at least one sample".into(),
        ));
    }
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<(f64, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut state = init();
            let n = CHUNK.min(samples - c * CHUNK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..n {
                let v = f(&mut state, &mut rng)?;
                s += v;
                s2 += v * v;
            }
            Ok((s, s2))
        })
        .collect::<Result<_>>()?;
    let (s, s2) = partial
        .iter()
        .fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d));
    let n = samples as f64;
    let mean = s / n;
    let var = if samples > 1 {
        ((s2 - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(Estimate {
        value: mean,
        stderr: (var / n).sqrt(),
        samples,
    })
}

/// Closed-form maximum error of the MIP relaxation.
pub fn max_error_theoretical(product: Product, depth: u32) -> f64 {
    let l = depth as i32;
    match product {
        Product::McCormick | Product::McCormickSquare => 0.25,
        Product::Nmdt => 2f64.powi(-l - 2),
        Product::Dnmdt | Product::DnmdtSquare => 2f64.powi(-2 * l - 2),
        Product::NmdtSquare => nmdt_square_underestimation(depth),
        Product::Sawtooth => 2f64.powi(-2 * l - 4),
    }
}

/// Largest `x² − y` over the univariate NMDT relaxation:
/// `2^{−L−2} − 2^{−3L−2} (1 + 2^{−L})^{−2}`.
pub fn nmdt_square_underestimation(depth: u32) -> f64 {
    let l = depth as i32;
    let h = 2f64.powi(-l);
    2f64.powi(-l - 2) - 2f64.powi(-3 * l - 2) / ((1.0 + h) * (1.0 + h))
}

/// Largest `y − x²` over the univariate NMDT relaxation: `2^{−4}` for
/// `L = 1`, otherwise `2^{−L−2} − 2^{−3L−2} (1 − 2^{−L})^{−2}`.
pub fn nmdt_square_overestimation(depth: u32) -> f64 {
    if depth == 1 {
        return 0.0625;
    }
    let l = depth as i32;
    let h = 2f64.powi(-l);
    2f64.powi(-l - 2) - 2f64.powi(-3 * l - 2) / ((1.0 - h) * (1.0 - h))
}

/// Grid maximization of both error sides of univariate NMDT over
/// `x = i / resolution`. At interior breakpoints both adjacent digit
/// patterns are feasible and both are checked. Returns `(under, over)`.
pub fn nmdt_square_error_sides(depth: u32, resolution: usize) -> (f64, f64) {
    let h = step(depth);
    let pieces = 1usize << depth;
    (0..=resolution)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 / resolution as f64;
            let k = ((x / h).floor() as usize).min(pieces - 1);
            let mut cands = vec![k];
            let at_break = x / h == (x / h).round();
            if at_break && k > 0 && k < pieces {
                cands.push(k - 1);
            }
            let mut out = (0.0f64, 0.0f64);
            for k in cands {
                let g = k as f64 * h;
                let (lo, hi) =
                    bilinear_envelope_range(Interval::new(0.0, h), Interval::UNIT, x - g, x);
                out.0 = out.0.max(x * x - (g * x + lo));
                out.1 = out.1.max(g * x + hi - x * x);
            }
            out
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0.max(b.0), a.1.max(b.1)))
}

/// Measured maximum error.
///
/// Piecewise products are enumerated over all digit patterns. Each piece
/// is probed by LP at its analytic maximizer (the centre of the residual
/// box) with the binaries fixed, so the value reflects the emitted rows.
/// Univariate NMDT is maximized on a grid of `resolution` points, and the
/// sawtooth epigraph by fixed-`x` LPs on the same grid followed by a local
/// search around the best grid point.
pub fn max_error_empirical(product: Product, depth: u32, resolution: usize) -> Result<f64> {
    match product {
        Product::NmdtSquare => {
            let (u, o) = nmdt_square_error_sides(depth, resolution);
            Ok(u.max(o))
        }
        Product::Sawtooth => {
            let pm = ProductModel::build(product, depth, 0.5)?;
            let gap = |probe: &mut RangeProbe, x: f64| -> Result<f64> {
                let (lo, _) = probe
                    .range(&pm.point_fixings(x, 0.0, false))?
                    .ok_or_else(|| Error::Numerical(format!("epigraph infeasible at {x}")))?;
                Ok(x * x - lo)
            };
            let per_chunk: Vec<(f64, f64)> = (0..=resolution)
                .collect::<Vec<_>>()
                .par_chunks(1024)
                .map(|idx| -> Result<(f64, f64)> {
                    let mut probe = RangeProbe::new(&pm);
                    let mut worst = (f64::NEG_INFINITY, 0.0);
                    for &i in idx {
                        let x = i as f64 / resolution as f64;
                        let g = gap(&mut probe, x)?;
                        if g > worst.0 {
                            worst = (g, x);
                        }
                    }
                    Ok(worst)
                })
                .collect::<Result<_>>()?;
            let (best, at) =
                per_chunk.into_iter().fold(
                    (f64::NEG_INFINITY, 0.0),
                    |a, b| if b.0 > a.0 { b } else { a },
                );
            // The maximizers sit on dyadic points the grid may step over;
            // golden-section search between the neighbours of the best node.
            let h = 1.0 / resolution as f64;
            let (mut a, mut b) = ((at - h).max(0.0), (at + h).min(1.0));
            let mut probe = RangeProbe::new(&pm);
            let r = 0.5 * (5f64.sqrt() - 1.0);
            let (mut c, mut d) = (b - r * (b - a), a + r * (b - a));
            let (mut fc, mut fd) = (gap(&mut probe, c)?, gap(&mut probe, d)?);
            for _ in 0..60 {
                if fc > fd {
                    b = d;
                    (d, fd) = (c, fc);
                    c = b - r * (b - a);
                    fc = gap(&mut probe, c)?;
                } else {
                    a = c;
                    (c, fc) = (d, fd);
                    d = a + r * (b - a);
                    fd = gap(&mut probe, d)?;
                }
            }
            Ok(best.max(fc).max(fd).max(0.0))
        }
        _ => {
            let pm = ProductModel::build(product, depth, 0.5)?;
            let mut probe = RangeProbe::new(&pm);
            let h = if product.discretizes() {
                step(depth)
            } else {
                1.0
            };
            let nx = if product.discretizes() {
                1usize << depth
            } else {
                1
            };
            let ny = if product == Product::Dnmdt { nx } else { 1 };
            let mut worst = 0.0f64;
            for kx in 0..nx {
                for ky in 0..ny {
                    let x = (kx as f64 + 0.5) * h;
                    let y = if product == Product::Dnmdt {
                        (ky as f64 + 0.5) * h
                    } else {
                        0.5
                    };
                    let (lo, hi) =
                        probe.range(&pm.point_fixings(x, y, true))?.ok_or_else(|| {
                            Error::Numerical(format!("piece ({kx}, {ky}) infeasible"))
                        })?;
                    let t = pm.target(x, y);
                    worst = worst.max(t - lo).max(hi - t);
                }
            }
            Ok(worst)
        }
    }
}

/// Closed-form volume between the upper and lower sides of the projected
/// MIP relaxation, over the unit square (bilinear) or unit interval
/// (univariate). `None` where no closed form is used.
pub fn avg_width_theoretical(product: Product, depth: u32) -> Option<f64> {
    let l = depth as i32;
    match product {
        Product::McCormick => Some(1.0 / 6.0),
        Product::McCormickSquare => Some(0.25),
        Product::Nmdt => Some(2f64.powi(-l) / 6.0),
        Product::Dnmdt => Some(2f64.powi(-2 * l) / 6.0),
        // 2^L pieces of square-envelope area ¼ h³.
        Product::DnmdtSquare => Some(0.25 * 2f64.powi(-2 * l)),
        Product::NmdtSquare | Product::Sawtooth => None,
    }
}

/// Monte-Carlo average error width: the mean of `hi − lo` of the projected
/// MIP relaxation at uniform sample points.
pub fn avg_width_empirical(
    product: Product,
    depth: u32,
    samples: usize,
    seed: u64,
) -> Result<Estimate> {
    if product == Product::Sawtooth {
        return Err(Error::Domain(
            "the sawtooth epigraph has no upper side".into(),
        ));
    }
    monte_carlo(
        samples,
        seed,
        || (),
        |_, rng| {
            let x: f64 = rng.gen();
            let y: f64 = if product.is_square() { 0.0 } else { rng.gen() };
            let (lo, hi) = projected_range(product, depth, x, y).expect("not the epigraph");
            Ok(hi - lo)
        },
    )
}
