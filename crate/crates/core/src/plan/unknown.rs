use serde::{Deserialize, Serialize};

use super::partition::{Partition, PartitionOptions, StripProblem};
use super::{close_final, stage_sizes, Design, Stage};
use crate::error::{domain, Error, Result};
use crate::special_fn::{noncentral_t_cdf_raw, student_t_critical, Probability};

/// Largest sample size searched for the first stage-size inequality.
const MAX_STAGE_SIZE: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnknownVarPlan {
    pub design: Design,
    pub theta_star: f64,
    pub stages: Vec<Stage>,
    pub n_star: u64,
    pub certified: bool,
}

impl UnknownVarPlan {
    pub fn mirror(&self) -> Result<UnknownVarPlan> {
        build_unknown_plan(&self.design.mirrored())
    }

    /// `c_ℓ = a_ℓ/√(n_ℓ−1)` and `d_ℓ = b_ℓ/√(n_ℓ−1)`.
    pub fn scaled_thresholds(&self, i: usize) -> (f64, f64) {
        let s = &self.stages[i];
        let r = ((s.n - 1) as f64).sqrt();
        (s.a / r, s.b / r)
    }

    /// Evaluates the upper ends of both error-bound intervals at the edges of
    /// the indifference zone and sets `certified` when they meet the
    /// targets.
    pub fn certify(&mut self, opts: &PartitionOptions) -> Result<(f64, f64)> {
        let e = self.design.epsilon;
        let p0 = oc_upper_p(-e, self, opts)?.upper;
        let p1 = oc_upper_p(-e, &self.mirror()?, opts)?.upper;
        self.certified = p0 <= self.design.alpha && p1 <= self.design.beta;
        Ok((p0, p1))
    }
}

fn size_gap(n: u64, design: &Design) -> Result<f64> {
    let dof = (n - 1) as u32;
    let ta = student_t_critical(dof, design.zeta * design.alpha)?;
    let tb = student_t_critical(dof, design.zeta * design.beta)?;
    Ok(ta + tb - 2.0 * design.epsilon * ((n - 1) as f64).sqrt())
}

/// Smallest `n ≥ 2` with `t_{n−1,ζα} + t_{n−1,ζβ} ≤ 2ε√(n−1)`.
pub fn min_stage_size(alpha: f64, beta: f64, epsilon: f64, zeta: f64) -> Result<u64> {
    let design = Design {
        alpha,
        beta,
        epsilon,
        gamma: 0.0,
        zeta,
        rho: 1.0,
        tau: 1,
    };
    design.validate()?;
    let holds = |n: u64| size_gap(n, &design).map(|g| g <= 0.0);
    let mut lo = 1;
    let mut hi = 2;
    while !holds(hi)? {
        lo = hi;
        if hi >= MAX_STAGE_SIZE {
            return Err(Error::EpsilonTooSmall {
                limit: MAX_STAGE_SIZE,
            });
        }
        hi = (hi * 2).min(MAX_STAGE_SIZE);
    }
    // holds at hi, fails at lo (or lo is below the search start)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if holds(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    if hi > 2 && holds(hi - 1)? {
        return Err(Error::Invariant(format!(
            "stage-size inequality holds at {} below the located minimum {hi}",
            hi - 1
        )));
    }
    Ok(hi)
}

/// Builds the plan; the result is not certified.
pub fn build_unknown_plan(design: &Design) -> Result<UnknownVarPlan> {
    design.validate()?;
    let n_star = min_stage_size(design.alpha, design.beta, design.epsilon, design.zeta)?;
    let (sizes, clipped) = stage_sizes(n_star as f64, design.rho, design.tau, 2)?;
    if clipped {
        log::warn!("stage sizes below 2 raised to 2 (n* = {n_star})");
    }
    let za = design.zeta * design.alpha;
    let zb = design.zeta * design.beta;
    let ns = *sizes.last().unwrap();
    let rs = ((ns - 1) as f64).sqrt();
    let theta_star = (student_t_critical((ns - 1) as u32, za)?
        - student_t_critical((ns - 1) as u32, zb)?)
        / (2.0 * rs);
    let eps = design.epsilon;
    let last = sizes.len() - 1;
    let stages = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let dof = (n - 1) as u32;
            let r = ((n - 1) as f64).sqrt();
            let pivot = theta_star * r;
            let a = pivot.min(eps * r - student_t_critical(dof, zb)?);
            let b = pivot.max(student_t_critical(dof, za)? - eps * r);
            let (a, b) = if i == last {
                close_final(a, b, pivot)?
            } else {
                (a, b)
            };
            Ok(Stage { n, a, b })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(UnknownVarPlan {
        design: *design,
        theta_star,
        stages,
        n_star,
        certified: false,
    })
}

/// `√n (x̄ₙ − γ)/σ̂ₙ` over the first `n` samples, with the `n − 1`
/// denominator sample standard deviation.
pub fn statistic_unknown(samples: &[f64], n: u64, gamma: f64) -> Result<f64> {
    let n = n as usize;
    if n < 2 {
        return domain("the t statistic needs at least two samples");
    }
    if samples.len() < n {
        return Err(Error::InsufficientData {
            needed: n,
            got: samples.len(),
        });
    }
    let x = &samples[..n];
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    // corrected two-pass
    let (ss, c) = x.iter().fold((0.0, 0.0), |(ss, c), &v| {
        let d = v - mean;
        (ss + d * d, c + d)
    });
    let ss = ss - c * c / nf;
    if !(ss > 0.0) {
        return Err(Error::DegenerateSample);
    }
    let sd = (ss / (nf - 1.0)).sqrt();
    Ok(nf.sqrt() * (mean - gamma) / sd)
}

fn t_cdf(x: f64, n: u64, theta: f64) -> f64 {
    noncentral_t_cdf_raw(x, (n - 1) as f64, (n as f64).sqrt() * theta)
}

/// Interval bound on the probability of rejecting, with its per-stage
/// contributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcInterval {
    pub lower: f64,
    pub upper: f64,
    pub stages: Vec<(f64, f64)>,
}

/// Per-stage event geometry for stage index `i ≥ 1` (0-based).
fn stage_problem(plan: &UnknownVarPlan, i: usize, theta: f64) -> (StripProblem, f64, bool) {
    let prev = plan.stages[i - 1];
    let cur = plan.stages[i];
    let (c_prev, d_prev) = plan.scaled_thresholds(i - 1);
    let (_, d) = plan.scaled_thresholds(i);
    let ratio = cur.n as f64 / prev.n as f64;
    let kappa = ratio.sqrt();
    let shift = (cur.n as f64).sqrt() * theta;
    let y_dof = prev.n - 1;
    let z_dof = cur.n - prev.n - 1;
    let k = (ratio - 1.0).sqrt();
    if d >= 0.0 {
        let p = StripProblem {
            theta: -shift,
            d,
            k,
            w_lo: kappa * c_prev,
            w_hi: kappa * d_prev,
            y_dof,
            z_dof,
        };
        (p, 0.0, false)
    } else {
        // complement within the continuation event of the previous stage,
        // reflected through the origin
        let cont = (t_cdf(prev.b, prev.n, theta) - t_cdf(prev.a, prev.n, theta)).max(0.0);
        let p = StripProblem {
            theta: shift,
            d: -d,
            k,
            w_lo: -kappa * d_prev,
            w_hi: -kappa * c_prev,
            y_dof,
            z_dof,
        };
        (p, cont, true)
    }
}

/// Partition for stage index `i ≥ 1` refined to the cell budget, with the
/// stage's constant term and whether the event enters with a minus sign.
pub fn stage_partition(
    plan: &UnknownVarPlan,
    i: usize,
    theta: f64,
    opts: &PartitionOptions,
) -> Result<(Partition, f64, bool)> {
    opts.validate()?;
    if i == 0 || i >= plan.stages.len() {
        return domain(format!("stage index {i} has no partition"));
    }
    let (p, c, neg) = stage_problem(plan, i, theta);
    let tail = opts.tail_mass / (plan.stages.len() - 1) as f64;
    let mut part = Partition::new(p, tail)?;
    part.refine(opts.cell_budget)?;
    Ok((part, c, neg))
}

/// Interval for the stagewise rejection-bound sum `𝒫(θ)`.
pub fn oc_upper_p(theta: f64, plan: &UnknownVarPlan, opts: &PartitionOptions) -> Result<OcInterval> {
    opts.validate()?;
    if !theta.is_finite() {
        return domain("theta must be finite");
    }
    let s = plan.stages.len();
    let first = plan.stages[0];
    let p1 = (1.0 - t_cdf(first.b, first.n, theta)).max(0.0);
    let mut stages = vec![(p1, p1)];
    let tail = if s > 1 {
        opts.tail_mass / (s - 1) as f64
    } else {
        0.0
    };
    for i in 1..s {
        let (part, c, neg) = stage_partition(plan, i, theta, opts)?;
        let (lo, hi) = (part.lower(), part.upper());
        let iv = if neg {
            (c - hi - tail, c - lo)
        } else {
            (lo, hi + tail)
        };
        stages.push(iv);
    }
    let lower = stages.iter().map(|x| x.0).sum::<f64>();
    let upper = stages.iter().map(|x| x.1).sum::<f64>();
    if lower > upper + 1e-12 {
        return Err(Error::Invariant(format!(
            "bound interval inverted: {lower} > {upper}"
        )));
    }
    Ok(OcInterval {
        lower,
        upper,
        stages,
    })
}

/// Bounds on the acceptance probability at `θ` outside the indifference
/// zone, from the conservative ends of the rejection-bound intervals.
pub fn oc_bounds_unknown(
    theta: f64,
    plan: &UnknownVarPlan,
    opts: &PartitionOptions,
) -> Result<(Probability, Probability)> {
    let e = plan.design.epsilon;
    if theta <= -e {
        let iv = oc_upper_p(theta, plan, opts)?;
        Ok((
            Probability::saturating(1.0 - iv.upper),
            Probability::saturating(1.0),
        ))
    } else if theta >= e {
        let iv = oc_upper_p(-theta, &plan.mirror()?, opts)?;
        Ok((Probability::saturating(0.0), Probability::saturating(iv.upper)))
    } else {
        Err(Error::UnsupportedRegion { theta, epsilon: e })
    }
}

/// Bound on `Pr{n > n_ℓ}` for a non-final stage `ell` (1-based).
pub fn sample_tail_unknown(ell: usize, theta: f64, plan: &UnknownVarPlan) -> Result<Probability> {
    let s = plan.stages.len();
    if ell == 0 || ell >= s {
        return domain(format!("stage {ell} is not a non-final stage of {s}"));
    }
    let st = plan.stages[ell - 1];
    let v = t_cdf(st.b, st.n, theta) - t_cdf(st.a, st.n, theta);
    Ok(Probability::saturating(v))
}
