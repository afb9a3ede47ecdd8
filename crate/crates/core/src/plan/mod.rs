//! Multistage test plans for the mean of a normal distribution.
//!
//! Plans are immutable once built. Parameters `θ` are in units of `σ`
//! throughout this module: `μ = θσ + γ`.

mod known;
pub mod partition;
mod unknown;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::special_fn::Probability;

pub use known::{
    build_known_plan, oc_bounds_known, oc_upper_phi, sample_tail_known, statistic_known,
    KnownVarPlan,
};
pub use partition::{PartitionCell, PartitionOptions};
pub use unknown::{
    build_unknown_plan, min_stage_size, oc_bounds_unknown, oc_upper_p, sample_tail_unknown,
    stage_partition, statistic_unknown, OcInterval, UnknownVarPlan,
};

/// One checkpoint: cumulative sample size and the two thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub n: u64,
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Accept,
    Reject,
    Continue,
}

/// Accept when `t ≤ a`, reject when `t > b`, otherwise continue.
pub fn decide_stage(t: f64, stage: &Stage) -> Decision {
    if t <= stage.a {
        Decision::Accept
    } else if t > stage.b {
        Decision::Reject
    } else {
        Decision::Continue
    }
}

/// [`decide_stage`], failing if the final stage would continue.
pub fn decide(t: f64, stage: &Stage, last: bool) -> Result<Decision> {
    let d = decide_stage(t, stage);
    if last && d == Decision::Continue {
        return Err(Error::Invariant(format!(
            "final stage n = {} continued on statistic {t}",
            stage.n
        )));
    }
    Ok(d)
}

/// Design inputs shared by both plan kinds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Design {
    pub alpha: f64,
    pub beta: f64,
    /// Half-width of the indifference zone in units of `σ`.
    pub epsilon: f64,
    pub gamma: f64,
    pub zeta: f64,
    pub rho: f64,
    pub tau: u32,
}

impl Design {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(v > 0.0 && v < 1.0) {
                return domain(format!("{name} = {v} not in (0, 1)"));
            }
        }
        for (name, v) in [
            ("epsilon", self.epsilon),
            ("zeta", self.zeta),
            ("rho", self.rho),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return domain(format!("{name} = {v} must be positive"));
            }
        }
        if !self.gamma.is_finite() {
            return domain("gamma must be finite");
        }
        if self.tau == 0 {
            return domain("tau must be at least 1");
        }
        for (name, v) in [("zeta*alpha", self.zeta * self.alpha), ("zeta*beta", self.zeta * self.beta)] {
            if v >= 1.0 {
                return domain(format!("{name} = {v} is not a tail mass"));
            }
        }
        Ok(())
    }

    /// The same design with the roles of `α` and `β` exchanged.
    pub fn mirrored(&self) -> Design {
        Design {
            alpha: self.beta,
            beta: self.alpha,
            ..*self
        }
    }

    pub fn with_zeta(&self, zeta: f64) -> Design {
        Design { zeta, ..*self }
    }
}

/// Sorted distinct values of `⌈base·(1+ρ)^(i−τ)⌉`, `i = 1..=τ`, each at
/// least `floor`. Returns the sizes and whether any was raised to `floor`.
pub(crate) fn stage_sizes(base: f64, rho: f64, tau: u32, floor: u64) -> Result<(Vec<u64>, bool)> {
    let mut clipped = false;
    let mut out = Vec::with_capacity(tau as usize);
    for i in 1..=tau {
        let x = (base * (1.0 + rho).powi(i as i32 - tau as i32)).ceil();
        if !x.is_finite() || x > 1e15 {
            return domain(format!("stage size {x} is not representable"));
        }
        let mut n = x as u64;
        if n < floor {
            n = floor;
            clipped = true;
        }
        out.push(n);
    }
    out.sort_unstable();
    out.dedup();
    Ok((out, clipped))
}

/// Final-stage thresholds must coincide; rounding can leave them an ulp
/// apart, in which case both snap to the common value.
pub(crate) fn close_final(a: f64, b: f64, pivot: f64) -> Result<(f64, f64)> {
    if a >= b {
        return Ok((a, b));
    }
    if b - a <= 1e-12 * pivot.abs().max(1.0) {
        return Ok((pivot, pivot));
    }
    Err(Error::Invariant(format!(
        "final stage thresholds a = {a} < b = {b} leave a continuation region"
    )))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanKind {
    Known,
    Unknown,
}

/// Either kind of plan, serialized under one schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlanRecord", into = "PlanRecord")]
pub enum Plan {
    Known(KnownVarPlan),
    Unknown(UnknownVarPlan),
}

impl Plan {
    pub fn kind(&self) -> PlanKind {
        match self {
            Plan::Known(_) => PlanKind::Known,
            Plan::Unknown(_) => PlanKind::Unknown,
        }
    }

    pub fn design(&self) -> &Design {
        match self {
            Plan::Known(p) => &p.design,
            Plan::Unknown(p) => &p.design,
        }
    }

    pub fn stages(&self) -> &[Stage] {
        match self {
            Plan::Known(p) => &p.stages,
            Plan::Unknown(p) => &p.stages,
        }
    }

    pub fn theta_star(&self) -> f64 {
        match self {
            Plan::Known(p) => p.theta_star,
            Plan::Unknown(p) => p.theta_star,
        }
    }

    pub fn certified(&self) -> bool {
        match self {
            Plan::Known(p) => p.certified,
            Plan::Unknown(p) => p.certified,
        }
    }

    pub fn set_certified(&mut self, certified: bool) {
        match self {
            Plan::Known(p) => p.certified = certified,
            Plan::Unknown(p) => p.certified = certified,
        }
    }

    pub fn sigma(&self) -> Option<f64> {
        match self {
            Plan::Known(p) => Some(p.sigma),
            Plan::Unknown(_) => None,
        }
    }

    pub fn max_samples(&self) -> u64 {
        self.stages().last().map_or(0, |s| s.n)
    }

    /// Stage statistic from the first `n` samples.
    pub fn statistic(&self, samples: &[f64], n: u64) -> Result<f64> {
        match self {
            Plan::Known(p) => statistic_known(samples, n, p.design.gamma, p.sigma),
            Plan::Unknown(p) => statistic_unknown(samples, n, p.design.gamma),
        }
    }

    /// Acceptance-probability bounds at `θ`; `opts` only matters for
    /// unknown-variance plans.
    pub fn oc_bounds(&self, theta: f64, opts: &PartitionOptions) -> Result<(Probability, Probability)> {
        match self {
            Plan::Known(p) => oc_bounds_known(theta, p),
            Plan::Unknown(p) => oc_bounds_unknown(theta, p, opts),
        }
    }

    /// `Pr{n > n_ℓ}` bound for a non-final 1-based stage.
    pub fn sample_tail(&self, ell: usize, theta: f64) -> Result<Probability> {
        match self {
            Plan::Known(p) => sample_tail_known(ell, theta, p),
            Plan::Unknown(p) => sample_tail_unknown(ell, theta, p),
        }
    }

    /// Verifies both error bounds directly and updates `certified`.
    pub fn certify(&mut self, opts: &PartitionOptions) -> Result<(f64, f64)> {
        match self {
            Plan::Known(p) => p.certify(),
            Plan::Unknown(p) => p.certify(opts),
        }
    }
}

/// The on-disk form of a plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanRecord {
    pub kind: PlanKind,
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub zeta: f64,
    pub rho: f64,
    pub tau: u32,
    pub theta_star: f64,
    pub stages: Vec<Stage>,
    pub certified: bool,
}

impl From<Plan> for PlanRecord {
    fn from(p: Plan) -> Self {
        let d = *p.design();
        PlanRecord {
            kind: p.kind(),
            alpha: d.alpha,
            beta: d.beta,
            epsilon: d.epsilon,
            gamma: d.gamma,
            sigma: p.sigma(),
            zeta: d.zeta,
            rho: d.rho,
            tau: d.tau,
            theta_star: p.theta_star(),
            stages: p.stages().to_vec(),
            certified: p.certified(),
        }
    }
}

impl TryFrom<PlanRecord> for Plan {
    type Error = Error;

    /// Rebuilds the plan from its design inputs and requires the stored
    /// stages and `θ*` to match exactly.
    fn try_from(r: PlanRecord) -> Result<Plan> {
        let design = Design {
            alpha: r.alpha,
            beta: r.beta,
            epsilon: r.epsilon,
            gamma: r.gamma,
            zeta: r.zeta,
            rho: r.rho,
            tau: r.tau,
        };
        let mut plan = match (r.kind, r.sigma) {
            (PlanKind::Known, Some(sigma)) => Plan::Known(build_known_plan(&design, sigma)?),
            (PlanKind::Known, None) => {
                return Err(Error::Plan("known-variance plan without sigma".into()))
            }
            (PlanKind::Unknown, None) => Plan::Unknown(build_unknown_plan(&design)?),
            (PlanKind::Unknown, Some(_)) => {
                return Err(Error::Plan("unknown-variance plan carries sigma".into()))
            }
        };
        if plan.stages() != r.stages.as_slice() {
            return Err(Error::Plan(
                "stored stages differ from those implied by the design".into(),
            ));
        }
        if plan.theta_star().to_bits() != r.theta_star.to_bits() {
            return Err(Error::Plan(format!(
                "stored theta_star {} differs from recomputed {}",
                r.theta_star,
                plan.theta_star()
            )));
        }
        plan.set_certified(r.certified);
        Ok(plan)
    }
}
