//! Monte Carlo execution of multistage plans.
//!
//! Replicate `r` draws its samples from stream `r / CHUNK` starting at draw
//! `(r % CHUNK) · n_s`, so any replicate can be regenerated on its own and
//! chunks can run in any order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{chunks, NormalStream, CHUNK};
use crate::error::{domain, Result};
use crate::plan::{decide, decide_stage, Decision, Plan};
use crate::special_fn::Probability;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub replications: u64,
    pub accept_rate: Probability,
    pub reject_rate: Probability,
    pub mc_se: f64,
    /// Average number of samples consumed.
    pub asn: f64,
    /// Replicates stopping at each stage.
    pub stage_histogram: Vec<u64>,
    pub seed: u64,
}

impl SimReport {
    /// Frequency of `{n > n_ℓ}` for 1-based `ell`, with its standard error.
    pub fn continue_frequency(&self, ell: usize) -> (f64, f64) {
        let past: u64 = self.stage_histogram.iter().skip(ell).sum();
        let p = past as f64 / self.replications as f64;
        (p, (p * (1.0 - p) / self.replications as f64).sqrt())
    }
}

/// Frequencies of the consecutive-stage events `{D_{ℓ−1} = 0, D_ℓ = 2}`
/// (and `= 1`), evaluated at every stage regardless of stopping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub replications: u64,
    pub reject_by_stage: Vec<f64>,
    pub accept_by_stage: Vec<f64>,
    /// Mean over replicates of the number of reject events, and its
    /// standard error.
    pub reject_sum: f64,
    pub reject_sum_se: f64,
    pub accept_sum: f64,
    pub accept_sum_se: f64,
}

fn check(plan: &Plan, sigma: f64, reps: u64) -> Result<()> {
    if reps == 0 {
        return domain("at least one replication is required");
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return domain(format!("sigma = {sigma} must be positive"));
    }
    if plan.stages().is_empty() {
        return domain("plan has no stages");
    }
    Ok(())
}

/// The `n_s` samples of replicate `rep`.
pub fn replicate_samples(plan: &Plan, mu: f64, sigma: f64, seed: u64, rep: u64) -> Vec<f64> {
    let ns = plan.max_samples();
    let mut out = vec![0.0; ns as usize];
    fill(&mut NormalStream::at(seed, rep / CHUNK, (rep % CHUNK) * ns), mu, sigma, &mut out);
    out
}

fn fill(s: &mut NormalStream, mu: f64, sigma: f64, buf: &mut [f64]) {
    for x in buf.iter_mut() {
        *x = mu + sigma * s.normal();
    }
}

/// Runs the stopping rule on one sample path; returns the terminal decision
/// and the 0-based stage at which it was reached.
pub fn run_path(plan: &Plan, samples: &[f64]) -> Result<(Decision, usize)> {
    let st = plan.stages();
    let last = st.len() - 1;
    for (i, s) in st.iter().enumerate() {
        let t = plan.statistic(samples, s.n)?;
        match decide(t, s, i == last)? {
            Decision::Continue => {}
            d => return Ok((d, i)),
        }
    }
    unreachable!("final stage always decides")
}

#[derive(Default)]
struct Tally {
    accept: u64,
    hist: Vec<u64>,
    consumed: u128,
}

/// Simulates `reps` independent executions of `plan` on `N(μ, σ²)` data.
pub fn simulate_plan(plan: &Plan, mu: f64, sigma: f64, reps: u64, seed: u64) -> Result<SimReport> {
    check(plan, sigma, reps)?;
    let s = plan.stages().len();
    let ns = plan.max_samples();
    let parts: Vec<_> = chunks(reps).collect();
    let tallies = parts
        .par_iter()
        .map(|&(idx, _, len)| {
            let mut rng = NormalStream::new(seed, idx);
            let mut buf = vec![0.0; ns as usize];
            let mut t = Tally {
                hist: vec![0; s],
                ..Tally::default()
            };
            for _ in 0..len {
                fill(&mut rng, mu, sigma, &mut buf);
                let (d, i) = run_path(plan, &buf)?;
                if d == Decision::Accept {
                    t.accept += 1;
                }
                t.hist[i] += 1;
                t.consumed += plan.stages()[i].n as u128;
            }
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut hist = vec![0u64; s];
    let (mut accept, mut consumed) = (0u64, 0u128);
    for t in &tallies {
        accept += t.accept;
        consumed += t.consumed;
        for (h, x) in hist.iter_mut().zip(&t.hist) {
            *h += x;
        }
    }
    let r = reps as f64;
    let pa = accept as f64 / r;
    Ok(SimReport {
        replications: reps,
        accept_rate: Probability::saturating(pa),
        reject_rate: Probability::saturating(1.0 - pa),
        mc_se: (pa * (1.0 - pa) / r).sqrt(),
        asn: consumed as f64 / r,
        stage_histogram: hist,
        seed,
    })
}

/// Estimates the consecutive-stage event frequencies whose sums the
/// rejection and acceptance bounds describe.
pub fn simulate_stage_pairs(
    plan: &Plan,
    mu: f64,
    sigma: f64,
    reps: u64,
    seed: u64,
) -> Result<PairReport> {
    check(plan, sigma, reps)?;
    let st = plan.stages();
    let s = st.len();
    let ns = plan.max_samples();
    let parts: Vec<_> = chunks(reps).collect();
    // per chunk: reject counts, accept counts, Σx², Σy² of per-replicate sums
    type Acc = (Vec<u64>, Vec<u64>, u64, u64);
    let accs = parts
        .par_iter()
        .map(|&(idx, _, len)| -> Result<Acc> {
            let mut rng = NormalStream::new(seed, idx);
            let mut buf = vec![0.0; ns as usize];
            let (mut rj, mut ac) = (vec![0u64; s], vec![0u64; s]);
            let (mut rq, mut aq) = (0u64, 0u64);
            for _ in 0..len {
                fill(&mut rng, mu, sigma, &mut buf);
                let mut prev = Decision::Continue;
                let (mut x, mut y) = (0u64, 0u64);
                for (i, stage) in st.iter().enumerate() {
                    let d = decide_stage(plan.statistic(&buf, stage.n)?, stage);
                    if prev == Decision::Continue {
                        match d {
                            Decision::Reject => {
                                rj[i] += 1;
                                x += 1;
                            }
                            Decision::Accept => {
                                ac[i] += 1;
                                y += 1;
                            }
                            Decision::Continue => {}
                        }
                    }
                    prev = d;
                }
                rq += x * x;
                aq += y * y;
            }
            Ok((rj, ac, rq, aq))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut rj, mut ac) = (vec![0u64; s], vec![0u64; s]);
    let (mut rq, mut aq) = (0u64, 0u64);
    for (a, b, c, d) in &accs {
        for i in 0..s {
            rj[i] += a[i];
            ac[i] += b[i];
        }
        rq += c;
        aq += d;
    }
    let r = reps as f64;
    let mean_se = |sum: u64, sq: u64| {
        let m = sum as f64 / r;
        let var = (sq as f64 / r - m * m).max(0.0);
        (m, (var / r).sqrt())
    };
    let (reject_sum, reject_sum_se) = mean_se(rj.iter().sum(), rq);
    let (accept_sum, accept_sum_se) = mean_se(ac.iter().sum(), aq);
    Ok(PairReport {
        replications: reps,
        reject_by_stage: rj.iter().map(|&c| c as f64 / r).collect(),
        accept_by_stage: ac.iter().map(|&c| c as f64 / r).collect(),
        reject_sum,
        reject_sum_se,
        accept_sum,
        accept_sum_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plan::{build_known_plan, build_unknown_plan, Design};

    fn design() -> Design {
        Design {
            alpha: 0.05,
            beta: 0.05,
            epsilon: 0.5,
            gamma: 1.0,
            zeta: 1.0 / 3.0,
            rho: 1.0,
            tau: 3,
        }
    }

    #[test]
    fn report_invariants_and_determinism() {
        let plan = Plan::Known(build_known_plan(&design(), 2.0).unwrap());
        let a = simulate_plan(&plan, 1.0, 2.0, 40_000, 5).unwrap();
        let b = simulate_plan(&plan, 1.0, 2.0, 40_000, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.stage_histogram.iter().sum::<u64>(), 40_000);
        assert!((a.accept_rate.get() + a.reject_rate.get() - 1.0).abs() < 1e-15);
        let asn: f64 = a
            .stage_histogram
            .iter()
            .zip(plan.stages())
            .map(|(&h, s)| h as f64 * s.n as f64)
            .sum::<f64>()
            / 40_000.0;
        assert!((a.asn - asn).abs() < 1e-9);
    }

    #[test]
    fn far_field_accepts() {
        let plan = Plan::Unknown(build_unknown_plan(&design()).unwrap());
        let r = simulate_plan(&plan, 1.0 - 50.0, 1.0, 100_000, 1).unwrap();
        assert!(r.accept_rate.get() >= 1.0 - 1e-6);
    }

    #[test]
    fn replicate_regeneration_matches_chunk_stream() {
        let plan = Plan::Known(build_known_plan(&design(), 1.0).unwrap());
        let ns = plan.max_samples() as usize;
        let mut rng = NormalStream::new(3, 1);
        let mut buf = vec![0.0; ns];
        for _ in 0..6 {
            fill(&mut rng, 0.5, 1.5, &mut buf);
        }
        let rep = CHUNK + 5;
        assert_eq!(replicate_samples(&plan, 0.5, 1.5, 3, rep), buf);
    }
}
