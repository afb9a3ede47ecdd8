//! Standard bivariate normal measure of planar convex domains.
//!
//! Probabilities are computed in polar coordinates: for a convex domain each
//! ray from the origin meets the boundary at most twice, so the mass reduces
//! to one-dimensional angle integrals of `exp(-r(φ)²/2)`.

mod boundary;
mod cone;
mod hyperbola;

pub use boundary::{offset_domain_prob, origin_domain_prob, BoundaryPiece, PolarBoundary};
pub use cone::{cone_prob, psi_gk, psi_h};
pub use hyperbola::{
    hyperbola_cone_prob, hyperbola_cone_prob_with, psi_tgk, upsilon, BranchVariant, HyperbolaEval,
    Leaf,
};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// A planar region exposing the two queries the numerical oracles need.
pub trait Region: Sync {
    fn contains(&self, u: f64, v: f64) -> bool;

    /// The (closed) set of `v` with `(u, v)` in the region, for convex regions
    /// an interval. `None` when the vertical line misses the region.
    fn v_interval(&self, u: f64) -> Option<(f64, f64)>;

    /// Abscissae where `v_interval` changes form; used to place integration
    /// breakpoints.
    fn u_breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// `{(u, v) : h ≤ u ≤ k v + g}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeRegion {
    pub h: f64,
    pub g: f64,
    pub k: f64,
}

impl ConeRegion {
    pub fn new(h: f64, g: f64, k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return domain(format!("cone slope k = {k} must be positive"));
        }
        if !h.is_finite() || !g.is_finite() {
            return domain("cone parameters must be finite");
        }
        Ok(ConeRegion { h, g, k })
    }
}

impl Region for ConeRegion {
    fn contains(&self, u: f64, v: f64) -> bool {
        self.h <= u && u <= self.k * v + self.g
    }

    fn v_interval(&self, u: f64) -> Option<(f64, f64)> {
        if u < self.h {
            None
        } else {
            Some(((u - self.g) / self.k, f64::INFINITY))
        }
    }

    fn u_breakpoints(&self) -> Vec<f64> {
        vec![self.h]
    }
}

/// `{(u, v) : √(λ v² + h) ≤ u − ϑ ≤ k v + g}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperbolaConeRegion {
    pub theta: f64,
    pub lambda: f64,
    pub h: f64,
    pub g: f64,
    pub k: f64,
}

impl HyperbolaConeRegion {
    pub fn new(theta: f64, lambda: f64, h: f64, g: f64, k: f64) -> Result<Self> {
        if ![theta, lambda, h, g, k].iter().all(|x| x.is_finite()) {
            return domain("hyperbola-cone parameters must be finite");
        }
        if !(lambda > 0.0) {
            return domain(format!("lambda = {lambda} must be positive"));
        }
        if h < 0.0 {
            return domain(format!("hyperbola level h = {h} must be nonnegative"));
        }
        if !(k > 0.0) {
            return domain(format!("slope k = {k} must be positive"));
        }
        Ok(HyperbolaConeRegion {
            theta,
            lambda,
            h,
            g,
            k,
        })
    }

    /// Ordinates where the line `x = k v + g` meets the right branch of
    /// `x² − λ v² = h` (`x = u − ϑ`), ascending.
    fn crossings(&self) -> Vec<f64> {
        let (l, h, g, k) = (self.lambda, self.h, self.g, self.k);
        let a = k * k - l;
        let b = 2.0 * g * k;
        let c = g * g - h;
        let mut roots = Vec::new();
        if a == 0.0 {
            if b != 0.0 {
                roots.push(-c / b);
            }
        } else {
            let disc = b * b - 4.0 * a * c;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                let q = -0.5 * (b + b.signum() * sq);
                if q != 0.0 {
                    roots.push(q / a);
                    roots.push(c / q);
                } else {
                    roots.push(0.0);
                }
            }
        }
        roots.retain(|&v| k * v + g >= 0.0);
        roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
        roots
    }
}

impl Region for HyperbolaConeRegion {
    fn contains(&self, u: f64, v: f64) -> bool {
        let x = u - self.theta;
        (self.lambda * v * v + self.h).sqrt() <= x && x <= self.k * v + self.g
    }

    fn v_interval(&self, u: f64) -> Option<(f64, f64)> {
        let x = u - self.theta;
        if x < 0.0 || x * x < self.h {
            return None;
        }
        let w = ((x * x - self.h) / self.lambda).sqrt();
        let lo = ((x - self.g) / self.k).max(-w);
        if lo > w {
            None
        } else {
            Some((lo, w))
        }
    }

    fn u_breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![self.theta + self.h.sqrt()];
        for v in self.crossings() {
            pts.push(self.theta + self.k * v + self.g);
        }
        pts
    }
}
