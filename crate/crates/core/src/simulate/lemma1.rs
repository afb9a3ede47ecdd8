//! Empirical check of the decomposition of a normal sample into `U`, `V`,
//! `Y`, `Z` at an intermediate size `m`.
//!
//! With `X̄_m` the mean of the first `m` samples and `X̄_{m,n}` the mean of
//! the rest,
//! `U = √n (X̄_n − μ)/σ`, `V = √(m(n−m)/n) (X̄_m − X̄_{m,n})/σ`,
//! `Y = Σ_{i≤m} (X_i − X̄_m)²/σ²`, `Z = Σ_{i>m} (X_i − X̄_{m,n})²/σ²`.
//! These should be independent with `U, V ~ N(0, 1)`, `Y ~ χ²(m−1)`,
//! `Z ~ χ²(n−m−1)`, and `Σ (X_i − X̄_n)² = σ²(Y + Z + V²)` exactly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::rng::{chunks, NormalStream};
use crate::error::{domain, Error, Result};

/// Mean and scale used for the simulated samples.
pub const LEMMA1_MU: f64 = 1.25;
pub const LEMMA1_SIGMA: f64 = 0.8;

const IDENTITY_TOL: f64 = 1e-9;
pub const NAMES: [&str; 4] = ["U", "V", "Y", "Z"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub name: String,
    pub mean: f64,
    pub expected_mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub expected_variance: f64,
    pub variance_se: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Report {
    pub n: usize,
    pub m: usize,
    pub replications: u64,
    pub seed: u64,
    pub max_identity_rel_err: f64,
    pub moments: Vec<MomentCheck>,
    /// `(first, second, correlation)` for each pair with nonzero variance.
    pub correlations: Vec<(String, String, f64)>,
    pub correlation_limit: f64,
    pub passed: bool,
}

struct Acc {
    sum: [f64; 4],
    sq: [f64; 4],
    cross: [[f64; 4]; 4],
    worst: f64,
}

fn decompose(x: &[f64], m: usize) -> ([f64; 4], f64) {
    let n = x.len();
    let (nf, mf) = (n as f64, m as f64);
    let s2 = LEMMA1_SIGMA * LEMMA1_SIGMA;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let ss = |v: &[f64], c: f64| v.iter().map(|&a| (a - c) * (a - c)).sum::<f64>();
    let xn = mean(x);
    let xm = mean(&x[..m]);
    let xr = mean(&x[m..]);
    let u = nf.sqrt() * (xn - LEMMA1_MU) / LEMMA1_SIGMA;
    let v = (mf * (nf - mf) / nf).sqrt() * (xm - xr) / LEMMA1_SIGMA;
    let y = ss(&x[..m], xm) / s2;
    let z = ss(&x[m..], xr) / s2;
    let total = ss(x, xn);
    let rel = (total - s2 * (y + z + v * v)).abs() / total;
    ([u, v, y, z], rel)
}

/// Runs the decomposition on `replications` samples of size `n`, split at
/// `m`. Fails immediately if the identity is violated on any replicate.
pub fn lemma1_decomposition_check(n: usize, m: usize, replications: u64, seed: u64) -> Result<Lemma1Report> {
    if !(m >= 1 && m < n) {
        return domain(format!("need 1 <= m < n, got m = {m}, n = {n}"));
    }
    if replications < 2 {
        return domain("at least two replications are required");
    }
    let parts: Vec<_> = chunks(replications).collect();
    let accs = parts
        .par_iter()
        .map(|&(idx, start, len)| -> Result<Acc> {
            let mut s = NormalStream::new(seed, idx);
            let mut x = vec![0.0; n];
            let mut a = Acc {
                sum: [0.0; 4],
                sq: [0.0; 4],
                cross: [[0.0; 4]; 4],
                worst: 0.0,
            };
            for r in 0..len {
                for xi in x.iter_mut() {
                    *xi = LEMMA1_MU + LEMMA1_SIGMA * s.normal();
                }
                let (w, rel) = decompose(&x, m);
                if !(rel <= IDENTITY_TOL) {
                    return Err(Error::Invariant(format!(
                        "sum-of-squares identity fails on replicate {} with relative error {rel}",
                        start + r
                    )));
                }
                a.worst = a.worst.max(rel);
                for i in 0..4 {
                    a.sum[i] += w[i];
                    a.sq[i] += w[i] * w[i];
                    for j in i + 1..4 {
                        a.cross[i][j] += w[i] * w[j];
                    }
                }
            }
            Ok(a)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut tot = Acc {
        sum: [0.0; 4],
        sq: [0.0; 4],
        cross: [[0.0; 4]; 4],
        worst: 0.0,
    };
    for a in &accs {
        tot.worst = tot.worst.max(a.worst);
        for i in 0..4 {
            tot.sum[i] += a.sum[i];
            tot.sq[i] += a.sq[i];
            for j in i + 1..4 {
                tot.cross[i][j] += a.cross[i][j];
            }
        }
    }
    let r = replications as f64;
    let mean: Vec<f64> = tot.sum.iter().map(|s| s / r).collect();
    let var: Vec<f64> = (0..4)
        .map(|i| (tot.sq[i] / r - mean[i] * mean[i]) * r / (r - 1.0))
        .collect();
    let (qy, qz) = ((m - 1) as f64, (n - m - 1) as f64);
    let exp_mean = [0.0, 0.0, qy, qz];
    let exp_var = [1.0, 1.0, 2.0 * qy, 2.0 * qz];
    // variance of the sample variance: (μ₄ − σ⁴)/r
    let var_of_var = [2.0, 2.0, 8.0 * qy * qy + 48.0 * qy, 8.0 * qz * qz + 48.0 * qz];
    let moments: Vec<MomentCheck> = (0..4)
        .map(|i| {
            let mean_se = (exp_var[i] / r).sqrt();
            let variance_se = (var_of_var[i] / r).sqrt();
            let passed = (mean[i] - exp_mean[i]).abs() <= 4.0 * mean_se + 1e-12
                && (var[i] - exp_var[i]).abs() <= 4.0 * variance_se + 1e-12;
            MomentCheck {
                name: NAMES[i].to_string(),
                mean: mean[i],
                expected_mean: exp_mean[i],
                mean_se,
                variance: var[i],
                expected_variance: exp_var[i],
                variance_se,
                passed,
            }
        })
        .collect();
    let limit = 4.0 / r.sqrt();
    let mut correlations = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            if exp_var[i] == 0.0 || exp_var[j] == 0.0 {
                continue;
            }
            let cov = (tot.cross[i][j] / r - mean[i] * mean[j]) * r / (r - 1.0);
            let c = cov / (var[i] * var[j]).sqrt();
            correlations.push((NAMES[i].to_string(), NAMES[j].to_string(), c));
        }
    }
    let passed = moments.iter().all(|c| c.passed) && correlations.iter().all(|c| c.2.abs() <= limit);
    Ok(Lemma1Report {
        n,
        m,
        replications,
        seed,
        max_identity_rel_err: tot.worst,
        moments,
        correlations,
        correlation_limit: limit,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_on_a_fixed_sample() {
        let x = [1.0, 2.5, -0.3, 4.0, 0.7, 1.1];
        let (w, rel) = decompose(&x, 2);
        assert!(rel < 1e-14);
        assert!(w[2] >= 0.0 && w[3] >= 0.0);
    }

    #[test]
    fn small_run_passes() {
        let r = lemma1_decomposition_check(10, 4, 4000, 11).unwrap();
        assert!(r.max_identity_rel_err < 1e-12);
        assert_eq!(r.correlations.len(), 6);
    }

    #[test]
    fn degenerate_second_block() {
        let r = lemma1_decomposition_check(5, 4, 2000, 2).unwrap();
        assert_eq!(r.moments[3].mean, 0.0);
        assert_eq!(r.correlations.len(), 3);
    }

    #[test]
    fn rejects_bad_split() {
        assert!(lemma1_decomposition_check(5, 5, 10, 0).is_err());
        assert!(lemma1_decomposition_check(5, 0, 10, 0).is_err());
    }
}
