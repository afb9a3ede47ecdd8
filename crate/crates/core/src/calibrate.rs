//! Choice of the risk tuning parameter `ζ`.
//!
//! Feasibility of `ζ` means the plan built with it has both error bounds at
//! the edges of the indifference zone within target. The feasible set is
//! not known to be an interval, so the search only locates a boundary next
//! to a feasible anchor, and the returned `ζ` is always one that was
//! evaluated directly.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::plan::{
    build_known_plan, build_unknown_plan, oc_upper_p, oc_upper_phi, Design, KnownVarPlan,
    PartitionOptions, UnknownVarPlan,
};

const ZETA_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub zeta: f64,
    /// Rejection bound at `θ = −ε`.
    pub phi_at_theta0: f64,
    /// Acceptance bound at `θ = ε`, from the mirrored plan.
    pub phi_mirror_at_theta1: f64,
    pub iterations: u32,
    pub certified: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationOptions {
    pub zeta_tol: f64,
    /// Upper end of the search; `min(1, 10/τ)` when absent.
    pub zeta_hi: Option<f64>,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            zeta_tol: 1e-4,
            zeta_hi: None,
        }
    }
}

struct Probe {
    zeta: f64,
    p0: f64,
    p1: f64,
}

/// Bisection between a feasible probe and an infeasible one, starting from
/// the `1/τ` anchor.
fn search<F>(design: &Design, opts: &CalibrationOptions, mut eval: F) -> Result<CalibrationResult>
where
    F: FnMut(f64) -> Result<(f64, f64)>,
{
    if !(opts.zeta_tol > 0.0 && opts.zeta_tol.is_finite()) {
        return domain(format!("zeta_tol = {} must be positive", opts.zeta_tol));
    }
    let (alpha, beta) = (design.alpha, design.beta);
    let anchor = 1.0 / design.tau.max(1) as f64;
    let zeta_hi = opts.zeta_hi.unwrap_or((10.0 * anchor).min(1.0)).max(anchor);
    let mut iterations = 0u32;
    let mut probe = |z: f64| -> Result<(Probe, bool)> {
        iterations += 1;
        let (p0, p1) = eval(z)?;
        log::debug!("zeta {z}: bounds {p0}, {p1}");
        Ok((Probe { zeta: z, p0, p1 }, p0 <= alpha && p1 <= beta))
    };

    let (first, ok) = probe(anchor)?;
    let (mut lo, mut hi) = if ok {
        if zeta_hi == anchor {
            (first, anchor)
        } else {
            let (top, top_ok) = probe(zeta_hi)?;
            if top_ok {
                (top, zeta_hi)
            } else {
                (first, zeta_hi)
            }
        }
    } else {
        log::warn!("anchor zeta = {anchor} is infeasible; shrinking");
        let mut last = first;
        let mut z = anchor;
        loop {
            let upper = z;
            z *= 0.5;
            if z < ZETA_FLOOR {
                return Err(Error::CalibrationFailed {
                    zeta: last.zeta,
                    phi_theta0: last.p0,
                    phi_mirror: last.p1,
                });
            }
            let (p, ok) = probe(z)?;
            if ok {
                break (p, upper);
            }
            last = p;
        }
    };
    while hi - lo.zeta > opts.zeta_tol {
        let mid = 0.5 * (lo.zeta + hi);
        let (p, ok) = probe(mid)?;
        if ok {
            lo = p;
        } else {
            hi = mid;
        }
    }
    Ok(CalibrationResult {
        zeta: lo.zeta,
        phi_at_theta0: lo.p0,
        phi_mirror_at_theta1: lo.p1,
        iterations,
        certified: true,
    })
}

/// Largest feasible `ζ` (to within `zeta_tol`) for a known-variance plan,
/// with the plan built from it. `design.zeta` is ignored.
pub fn calibrate_known(
    design: &Design,
    sigma: f64,
    opts: &CalibrationOptions,
) -> Result<(KnownVarPlan, CalibrationResult)> {
    let eval = |z: f64| -> Result<(f64, f64)> {
        let d = design.with_zeta(z);
        let e = d.epsilon;
        let plan = build_known_plan(&d, sigma)?;
        let mirror = build_known_plan(&d.mirrored(), sigma)?;
        Ok((oc_upper_phi(-e, &plan)?.get(), oc_upper_phi(-e, &mirror)?.get()))
    };
    let res = search(design, opts, eval)?;
    let mut plan = build_known_plan(&design.with_zeta(res.zeta), sigma)?;
    plan.certified = res.certified;
    Ok((plan, res))
}

/// As [`calibrate_known`], testing the conservative ends of the
/// unknown-variance bound intervals.
pub fn calibrate_unknown(
    design: &Design,
    opts: &CalibrationOptions,
    partition: &PartitionOptions,
) -> Result<(UnknownVarPlan, CalibrationResult)> {
    partition.validate()?;
    let eval = |z: f64| -> Result<(f64, f64)> {
        let d = design.with_zeta(z);
        let e = d.epsilon;
        let plan = build_unknown_plan(&d)?;
        let mirror = build_unknown_plan(&d.mirrored())?;
        Ok((
            oc_upper_p(-e, &plan, partition)?.upper,
            oc_upper_p(-e, &mirror, partition)?.upper,
        ))
    };
    let res = search(design, opts, eval)?;
    let mut plan = build_unknown_plan(&design.with_zeta(res.zeta))?;
    plan.certified = res.certified;
    Ok((plan, res))
}
