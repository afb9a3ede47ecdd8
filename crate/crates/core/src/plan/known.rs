use serde::{Deserialize, Serialize};

use super::{close_final, stage_sizes, Design, Stage};
use crate::error::{domain, Error, Result};
use crate::geometry::{cone_prob, ConeRegion};
use crate::special_fn::{normal_cdf_raw, std_normal_critical, Probability};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnownVarPlan {
    pub design: Design,
    pub sigma: f64,
    pub theta_star: f64,
    pub stages: Vec<Stage>,
    pub certified: bool,
}

impl KnownVarPlan {
    pub fn mu0(&self) -> f64 {
        self.design.gamma - self.design.epsilon * self.sigma
    }

    pub fn mu1(&self) -> f64 {
        self.design.gamma + self.design.epsilon * self.sigma
    }

    /// The plan with `α` and `β` exchanged, used for bounds above the
    /// indifference zone.
    pub fn mirror(&self) -> Result<KnownVarPlan> {
        build_known_plan(&self.design.mirrored(), self.sigma)
    }

    /// Evaluates both error bounds at the edges of the indifference zone and
    /// sets `certified` when they meet the targets. Returns the two bounds.
    pub fn certify(&mut self) -> Result<(f64, f64)> {
        let e = self.design.epsilon;
        let p0 = oc_upper_phi(-e, self)?.get();
        let p1 = oc_upper_phi(-e, &self.mirror()?)?.get();
        self.certified = p0 <= self.design.alpha && p1 <= self.design.beta;
        Ok((p0, p1))
    }
}

/// Builds the plan; the result is not certified.
pub fn build_known_plan(design: &Design, sigma: f64) -> Result<KnownVarPlan> {
    design.validate()?;
    if !(sigma > 0.0 && sigma.is_finite()) {
        return domain(format!("sigma = {sigma} must be positive"));
    }
    let za = std_normal_critical(design.zeta * design.alpha)?;
    let zb = std_normal_critical(design.zeta * design.beta)?;
    let eps = design.epsilon;
    let base = (za + zb).powi(2) / (4.0 * eps * eps);
    if !(za + zb > 0.0) {
        return domain(format!(
            "critical values {za} and {zb} do not give a positive sample size"
        ));
    }
    let (sizes, _) = stage_sizes(base, design.rho, design.tau, 1)?;
    let theta_star = 0.5 * (za - zb);
    let last = sizes.len() - 1;
    let stages = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let r = (n as f64).sqrt();
            let a = theta_star.min(eps * r - zb);
            let b = theta_star.max(za - eps * r);
            let (a, b) = if i == last {
                close_final(a, b, theta_star)?
            } else {
                (a, b)
            };
            Ok(Stage { n, a, b })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(KnownVarPlan {
        design: *design,
        sigma,
        theta_star,
        stages,
        certified: false,
    })
}

/// `√n (x̄ₙ − γ)/σ` over the first `n` samples.
pub fn statistic_known(samples: &[f64], n: u64, gamma: f64, sigma: f64) -> Result<f64> {
    let n = n as usize;
    if samples.len() < n || n == 0 {
        return Err(Error::InsufficientData {
            needed: n.max(1),
            got: samples.len(),
        });
    }
    if !(sigma > 0.0) {
        return domain("sigma must be positive");
    }
    let mean = samples[..n].iter().sum::<f64>() / n as f64;
    Ok((n as f64).sqrt() * (mean - gamma) / sigma)
}

fn cone(h: f64, g: f64, k: f64) -> Result<f64> {
    Ok(cone_prob(&ConeRegion::new(h, g, k)?)?.get())
}

/// Upper bound `φ(θ)` on the probability of rejecting, summed over stages.
pub fn oc_upper_phi(theta: f64, plan: &KnownVarPlan) -> Result<Probability> {
    if !theta.is_finite() {
        return domain("theta must be finite");
    }
    let st = &plan.stages;
    let first = &st[0];
    let mut total = normal_cdf_raw((first.n as f64).sqrt() * theta - first.b);
    for w in st.windows(2) {
        let (prev, cur) = (&w[0], &w[1]);
        let ratio = cur.n as f64 / prev.n as f64;
        let k = (ratio - 1.0).sqrt();
        let shift = (cur.n as f64).sqrt() * theta;
        let h = cur.b - shift;
        let upper = cone(h, ratio.sqrt() * prev.b - shift, k)?;
        let lower = cone(h, ratio.sqrt() * prev.a - shift, k)?;
        total += upper - lower;
    }
    Ok(Probability::saturating(total))
}

/// Bounds on the acceptance probability at `θ` outside the indifference
/// zone.
pub fn oc_bounds_known(theta: f64, plan: &KnownVarPlan) -> Result<(Probability, Probability)> {
    let e = plan.design.epsilon;
    if theta <= -e {
        let phi = oc_upper_phi(theta, plan)?.get();
        Ok((Probability::saturating(1.0 - phi), Probability::saturating(1.0)))
    } else if theta >= e {
        let phi = oc_upper_phi(-theta, &plan.mirror()?)?;
        Ok((Probability::saturating(0.0), phi))
    } else {
        Err(Error::UnsupportedRegion { theta, epsilon: e })
    }
}

/// Bound on `Pr{n > n_ℓ}` for a non-final stage `ell` (1-based).
pub fn sample_tail_known(ell: usize, theta: f64, plan: &KnownVarPlan) -> Result<Probability> {
    let s = plan.stages.len();
    if ell == 0 || ell >= s {
        return domain(format!("stage {ell} is not a non-final stage of {s}"));
    }
    let st = &plan.stages[ell - 1];
    let shift = (st.n as f64).sqrt() * theta;
    let v = normal_cdf_raw(st.b - shift) - normal_cdf_raw(st.a - shift);
    Ok(Probability::saturating(v))
}
