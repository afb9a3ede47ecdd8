use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quadrature::integrate;
use crate::special_fn::Probability;

const ANGLE_SLACK: f64 = 1e-12;
const MEASURE_SLACK: f64 = 1e-9;

/// One arc of a domain boundary in polar form: `r = radius(φ)` for
/// `φ ∈ (start, end)`.
#[derive(Clone)]
pub struct BoundaryPiece {
    pub start: f64,
    pub end: f64,
    pub radius: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    /// Whether the segment from the origin to these boundary points avoids
    /// the domain interior.
    pub visible: bool,
}

impl fmt::Debug for BoundaryPiece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryPiece")
            .field("start", &self.start)
            .field("end", &self.end)
            .field("visible", &self.visible)
            .finish()
    }
}

impl BoundaryPiece {
    pub fn new<F>(start: f64, end: f64, visible: bool, radius: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        BoundaryPiece {
            start,
            end,
            radius: Arc::new(radius),
            visible,
        }
    }

    fn integral(&self) -> f64 {
        let r = &self.radius;
        integrate(
            |phi| {
                let b = r(phi);
                (-0.5 * b * b).exp()
            },
            self.start,
            self.end,
        )
        .value
    }
}

/// A boundary described as angular pieces.
#[derive(Debug, Clone, Default)]
pub struct PolarBoundary {
    pub pieces: Vec<BoundaryPiece>,
}

impl PolarBoundary {
    pub fn new(mut pieces: Vec<BoundaryPiece>) -> Self {
        pieces.sort_by(|a, b| a.start.partial_cmp(&b.start).unwrap_or(std::cmp::Ordering::Equal));
        PolarBoundary { pieces }
    }

    pub fn push(&mut self, piece: BoundaryPiece) {
        self.pieces.push(piece);
        self.pieces
            .sort_by(|a, b| a.start.partial_cmp(&b.start).unwrap_or(std::cmp::Ordering::Equal));
    }

    fn check_pieces(&self) -> Result<()> {
        for p in &self.pieces {
            if !(p.start.is_finite() && p.end.is_finite()) || p.end < p.start {
                return Err(Error::ContractViolation(format!(
                    "angle interval ({}, {}) is not a finite ascending interval",
                    p.start, p.end
                )));
            }
        }
        Ok(())
    }
}

/// Sorted, merged union of angle intervals, each assumed within one turn.
fn check_disjoint(intervals: &mut [(f64, f64)], what: &str) -> Result<f64> {
    intervals.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut total = 0.0;
    for w in intervals.windows(2) {
        if w[1].0 < w[0].1 - ANGLE_SLACK {
            return Err(Error::ContractViolation(format!(
                "{what} angle intervals ({}, {}) and ({}, {}) overlap",
                w[0].0, w[0].1, w[1].0, w[1].1
            )));
        }
    }
    for iv in intervals.iter() {
        total += iv.1 - iv.0;
    }
    if total > TAU + ANGLE_SLACK {
        return Err(Error::ContractViolation(format!(
            "{what} angle intervals span {total}, more than a full turn"
        )));
    }
    if let (Some(first), Some(last)) = (intervals.first(), intervals.last()) {
        if last.1 - first.0 > TAU + ANGLE_SLACK {
            return Err(Error::ContractViolation(format!(
                "{what} angle intervals wind more than once"
            )));
        }
    }
    Ok(total)
}

/// Mass of a convex domain containing the origin, given its full boundary.
///
/// Angles not covered by any piece are directions in which the domain is
/// unbounded.
pub fn origin_domain_prob(boundary: &PolarBoundary) -> Result<Probability> {
    boundary.check_pieces()?;
    if boundary.pieces.iter().any(|p| !p.visible) {
        return Err(Error::ContractViolation(
            "a domain containing the origin has no invisible boundary".into(),
        ));
    }
    let mut ivs: Vec<_> = boundary.pieces.iter().map(|p| (p.start, p.end)).collect();
    check_disjoint(&mut ivs, "boundary")?;
    let s: f64 = boundary.pieces.iter().map(BoundaryPiece::integral).sum();
    finish(1.0 - s / TAU)
}

/// Mass of a convex domain not containing the origin, from its visible and
/// invisible boundary pieces.
pub fn offset_domain_prob(boundary: &PolarBoundary) -> Result<Probability> {
    boundary.check_pieces()?;
    let (vis, inv): (Vec<_>, Vec<_>) = boundary.pieces.iter().partition(|p| p.visible);
    let mut vis_iv: Vec<_> = vis.iter().map(|p| (p.start, p.end)).collect();
    let mut inv_iv: Vec<_> = inv.iter().map(|p| (p.start, p.end)).collect();
    check_disjoint(&mut vis_iv, "visible")?;
    check_disjoint(&mut inv_iv, "invisible")?;
    for &(a, b) in &inv_iv {
        // every invisible direction must also see a visible boundary point
        let covered: f64 = vis_iv
            .iter()
            .map(|&(c, d)| (b.min(d) - a.max(c)).max(0.0))
            .sum();
        if covered < (b - a) - 1e-9 {
            return Err(Error::ContractViolation(format!(
                "invisible interval ({a}, {b}) is not covered by the visible boundary"
            )));
        }
    }
    let sv: f64 = vis.iter().map(|p| p.integral()).sum();
    let si: f64 = inv.iter().map(|p| p.integral()).sum();
    finish((sv - si) / TAU)
}

fn finish(value: f64) -> Result<Probability> {
    if !(-MEASURE_SLACK..=1.0 + MEASURE_SLACK).contains(&value) || value.is_nan() {
        return Err(Error::InconsistentBoundary { value });
    }
    Ok(Probability::saturating(value))
}
