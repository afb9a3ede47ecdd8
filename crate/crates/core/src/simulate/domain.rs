//! Independent estimates of the Gaussian mass of a planar region.

use rayon::prelude::*;

use super::rng::{chunks, NormalStream};
use crate::error::{domain, Result};
use crate::geometry::Region;
use crate::quadrature::{integrate_with, Options};
use crate::special_fn::{normal_cdf_raw, normal_pdf};

/// Monte Carlo estimate and its standard error from `draws` standard
/// bivariate normal points.
pub fn mc_domain_prob(region: &dyn Region, draws: u64, seed: u64) -> Result<(f64, f64)> {
    if draws == 0 {
        return domain("at least one draw is required");
    }
    let parts: Vec<(u64, u64, u64)> = chunks(draws).collect();
    let hits: u64 = parts
        .par_iter()
        .map(|&(idx, _, len)| {
            let mut s = NormalStream::new(seed, idx);
            let mut n = 0u64;
            for _ in 0..len {
                let u = s.normal();
                let v = s.normal();
                if region.contains(u, v) {
                    n += 1;
                }
            }
            n
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    let p = hits as f64 / draws as f64;
    Ok((p, (p * (1.0 - p) / draws as f64).sqrt()))
}

fn column_mass(region: &dyn Region, u: f64) -> f64 {
    match region.v_interval(u) {
        Some((lo, hi)) if hi > lo => (normal_cdf_raw(hi) - normal_cdf_raw(lo)).max(0.0),
        _ => 0.0,
    }
}

/// Midpoint rule in `u` over `[−half_width, half_width]` with `resolution`
/// columns; each column's `v` extent is integrated exactly. Columns holding
/// one of the region's breakpoints are split there, so vertical edges do not
/// cost a first-order error.
pub fn grid_domain_prob(region: &dyn Region, half_width: f64, resolution: usize) -> Result<f64> {
    if half_width < 8.0 {
        return domain(format!("grid half width {half_width} below 8"));
    }
    if resolution < 512 {
        return domain(format!("grid resolution {resolution} below 512"));
    }
    let h = 2.0 * half_width / resolution as f64;
    let mut breaks: Vec<f64> = region
        .u_breakpoints()
        .into_iter()
        .filter(|u| u.is_finite())
        .collect();
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let cell = |a: f64, b: f64| {
        let m = 0.5 * (a + b);
        (b - a) * normal_pdf(m) * column_mass(region, m)
    };
    let total: f64 = (0..resolution)
        .into_par_iter()
        .map(|i| {
            let a = -half_width + i as f64 * h;
            let b = a + h;
            let mut acc = 0.0;
            let mut left = a;
            for &x in breaks.iter().filter(|&&x| x > a && x < b) {
                acc += cell(left, x);
                left = x;
            }
            acc + cell(left, b)
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();
    Ok(total)
}

/// Adaptive quadrature in `u` of the exact column masses, split at the
/// region's breakpoints. Much more accurate than the grid for smooth
/// boundaries; used to pin reference values.
pub fn quad_domain_prob(region: &dyn Region) -> f64 {
    const SPAN: f64 = 12.0;
    let mut knots = vec![-SPAN, SPAN];
    knots.extend(
        region
            .u_breakpoints()
            .into_iter()
            .filter(|u| u.is_finite() && u.abs() < SPAN),
    );
    knots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    knots.dedup();
    let opts = Options {
        abs_tol: 1e-13,
        max_intervals: 4000,
    };
    knots
        .windows(2)
        .map(|w| integrate_with(|u| normal_pdf(u) * column_mass(region, u), w[0], w[1], opts).value)
        .sum()
}
