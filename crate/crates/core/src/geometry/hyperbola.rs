//! Gaussian mass of `{√(λv² + h) ≤ u − ϑ ≤ kv + g}`.
//!
//! The domain is bounded by the right branch of a hyperbola centred at
//! `(ϑ, 0)` and a line. The evaluation first classifies the relative slope
//! of line and asymptote and where the line meets the branch (points `A`,
//! `B`), then the position of the origin relative to the points on the `u`
//! axis that decide which boundary arcs it can see, and finally sums signed
//! polar integrals for the chosen leaf.

use std::cell::Cell;
use std::f64::consts::{FRAC_1_PI, FRAC_PI_2, PI, TAU};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::HyperbolaConeRegion;
use crate::error::{domain, Error, Result};
use crate::quadrature::integrate;
use crate::special_fn::Probability;

const INV_TAU: f64 = 0.5 * FRAC_1_PI;
const SLOPE_DEGENERACY: f64 = 1e-9;
const SLOPE_NUDGE: f64 = 1e-8;
/// Relative size below which a negative radicand is treated as rounding.
const RADICAND_SLACK: f64 = 1e-9;

/// The formula selected for a given parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Leaf {
    /// Line meets the branch in no usable point: empty domain.
    Zero,
    /// Bounded domain whose chord passes on both sides of the vertex.
    Np(u8),
    /// Bounded domain with both crossings on the upper half of the branch.
    Pp(u8),
    /// Unbounded domain, crossing below the axis.
    N(u8),
    /// Unbounded domain, crossing on or above the axis.
    P(u8),
}

impl Leaf {
    /// Every leaf, in a fixed order.
    pub const ALL: [Leaf; 17] = [
        Leaf::Zero,
        Leaf::Np(1),
        Leaf::Np(2),
        Leaf::Np(3),
        Leaf::Np(4),
        Leaf::Np(5),
        Leaf::Pp(1),
        Leaf::Pp(2),
        Leaf::Pp(3),
        Leaf::N(1),
        Leaf::N(2),
        Leaf::N(3),
        Leaf::N(4),
        Leaf::N(5),
        Leaf::P(1),
        Leaf::P(2),
        Leaf::P(3),
    ];
}

impl fmt::Display for Leaf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Leaf::Zero => write!(f, "zero"),
            Leaf::Np(i) => write!(f, "np{i}"),
            Leaf::Pp(i) => write!(f, "pp{i}"),
            Leaf::N(i) => write!(f, "n{i}"),
            Leaf::P(i) => write!(f, "p{i}"),
        }
    }
}

/// How the polar angle of `B` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchVariant {
    /// `arccos(u_B / |B|)`, the polar angle of `B`.
    #[default]
    Geometric,
    /// `arccos(u_B / |A|)`; retained only so tests can compare the two.
    NormOfA,
}

/// Result of one evaluation with its diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperbolaEval {
    pub value: Probability,
    pub leaf: Leaf,
    /// `λ` was moved off `k²` to avoid the parallel-asymptote degeneracy.
    pub nudged: bool,
}

/// `(1/2π) exp(−(ϑ + g)² / (2(1 + k²) cos² φ))`.
pub fn psi_tgk(phi: f64, theta: f64, g: f64, k: f64) -> f64 {
    super::psi_gk(phi, theta + g, k)
}

/// Polar distance used by the hyperbola integrand: the root
/// `η / (ϑ cos φ + √R)` of `(cos²φ − λ sin²φ) r² − 2ϑ cos φ r + η = 0`,
/// `η = ϑ² − h`, written so that neither branch of the sign of `ϑ cos φ`
/// cancels. Returns the root and the radicand `R`.
fn hyperbola_root(phi: f64, theta: f64, lambda: f64, h: f64) -> (f64, f64) {
    let (s, c) = phi.sin_cos();
    let q = c * c - lambda * s * s;
    let eta = theta * theta - h;
    let tc = theta * c;
    let rad = tc * tc - eta * q;
    let sq = rad.max(0.0).sqrt();
    let r = if tc >= 0.0 {
        let den = tc + sq;
        if den == 0.0 {
            if eta == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            eta / den
        }
    } else if q == 0.0 {
        f64::INFINITY
    } else {
        (tc - sq) / q
    };
    (r, rad)
}

fn radicand_scale(phi: f64, theta: f64, lambda: f64, h: f64) -> f64 {
    let c = phi.cos();
    (theta * c).powi(2) + (theta * theta - h).abs() * (1.0 + lambda)
}

/// The hyperbola integrand `(1/2π) exp(−r²/2)`.
///
/// Errors when the radicand is negative beyond rounding, meaning the ray at
/// `phi` misses the hyperbola.
pub fn upsilon(phi: f64, theta: f64, lambda: f64, h: f64) -> Result<f64> {
    let (r, rad) = hyperbola_root(phi, theta, lambda, h);
    if rad < -RADICAND_SLACK * radicand_scale(phi, theta, lambda, h).max(1e-300) {
        return domain(format!(
            "hyperbola radicand {rad} negative at phi = {phi}"
        ));
    }
    Ok(INV_TAU * (-0.5 * r * r).exp())
}

/// Derived geometry of a region.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Geometry {
    pub theta: f64,
    pub lambda: f64,
    pub h: f64,
    pub g: f64,
    pub k: f64,
    pub delta: f64,
    pub u_a: f64,
    pub u_b: f64,
    pub phi_a: f64,
    pub phi_b: f64,
    pub phi_m: f64,
    pub phi_lambda: f64,
    pub phi_k: f64,
}

/// `num / den` for the conjugate pair of formulas that give the same value;
/// picks the one with the larger denominator.
fn ratio(n1: f64, d1: f64, n2: f64, d2: f64) -> f64 {
    if d1.abs() >= d2.abs() {
        n1 / d1
    } else {
        n2 / d2
    }
}

fn polar_angle(u: f64, norm: f64) -> f64 {
    if norm == 0.0 {
        0.0
    } else {
        (u / norm).clamp(-1.0, 1.0).acos()
    }
}

impl Geometry {
    pub(crate) fn new(r: &HyperbolaConeRegion, variant: BranchVariant) -> Self {
        let HyperbolaConeRegion {
            theta,
            lambda,
            h,
            g,
            k,
        } = *r;
        let k2 = k * k;
        let delta = h * (k2 - lambda) + lambda * g * g;
        let sd = delta.max(0.0).sqrt();
        let den = lambda - k2;
        // x = u − ϑ at the crossings, each in two algebraically equal forms
        let top = lambda * g * g + k2 * h;
        let x_a = ratio(lambda * g - k * sd, den, top, lambda * g + k * sd);
        let x_b = ratio(lambda * g + k * sd, den, top, lambda * g - k * sd);
        let v_a = ratio(g * k - sd, den, h - g * g, g * k + sd);
        let v_b = ratio(g * k + sd, den, h - g * g, g * k - sd);
        let u_a = x_a + theta;
        let u_b = x_b + theta;
        let norm_a = u_a.hypot(v_a);
        let norm_b = match variant {
            BranchVariant::Geometric => u_b.hypot(v_b),
            BranchVariant::NormOfA => norm_a,
        };
        let eta = (theta * theta - h).abs();
        let phi_m = if h == 0.0 {
            0.0
        } else if eta == 0.0 {
            FRAC_PI_2
        } else {
            (h / (lambda * eta)).sqrt().atan()
        };
        Geometry {
            theta,
            lambda,
            h,
            g,
            k,
            delta,
            u_a,
            u_b,
            phi_a: polar_angle(u_a, norm_a),
            phi_b: polar_angle(u_b, norm_b),
            phi_m,
            phi_lambda: (1.0 / lambda.sqrt()).atan(),
            phi_k: k.atan(),
        }
    }

    /// Where the tangent at `A` crosses the `u` axis.
    pub(crate) fn u_p(&self) -> f64 {
        self.theta + self.h / (self.u_a - self.theta)
    }

    /// Where the tangent at `B` crosses the `u` axis.
    pub(crate) fn u_q(&self) -> f64 {
        self.theta + self.h / (self.u_b - self.theta)
    }

    /// Vertex of the branch.
    pub(crate) fn u_c(&self) -> f64 {
        self.theta + self.h.sqrt()
    }

    /// Where the line crosses the `u` axis.
    pub(crate) fn u_r(&self) -> f64 {
        self.theta + self.g
    }

    pub(crate) fn classify(&self) -> Leaf {
        let k2 = self.k * self.k;
        let sh = self.h.sqrt();
        let sd = self.delta.max(0.0).sqrt();
        if k2 < self.lambda && self.delta >= 0.0 && self.g > 0.0 {
            if self.g > sh {
                Leaf::Np(if self.u_q() >= 0.0 {
                    1
                } else if self.u_p() >= 0.0 {
                    2
                } else if self.u_c() >= 0.0 {
                    3
                } else if self.u_r() >= 0.0 {
                    4
                } else {
                    5
                })
            } else {
                Leaf::Pp(if self.u_q() >= 0.0 {
                    1
                } else if self.u_p() >= 0.0 {
                    2
                } else {
                    3
                })
            }
        } else if k2 > self.lambda {
            if self.g * self.k > sd {
                Leaf::N(if self.theta >= 0.0 {
                    1
                } else if self.u_p() >= 0.0 {
                    2
                } else if self.u_c() >= 0.0 {
                    3
                } else if self.u_r() >= 0.0 {
                    4
                } else {
                    5
                })
            } else {
                Leaf::P(if self.theta >= 0.0 {
                    1
                } else if self.u_p() >= 0.0 {
                    2
                } else {
                    3
                })
            }
        } else {
            Leaf::Zero
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Integrand {
    Upsilon,
    Psi,
}

/// `sign · ∫_lo^hi f(φ) dφ`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Term {
    pub sign: f64,
    pub f: Integrand,
    pub lo: f64,
    pub hi: f64,
}

fn t(sign: f64, f: Integrand, lo: f64, hi: f64) -> Term {
    Term { sign, f, lo, hi }
}

/// Constant plus signed integral terms for a leaf.
pub(crate) fn leaf_terms(leaf: Leaf, q: &Geometry) -> (f64, Vec<Term>) {
    use Integrand::{Psi, Upsilon as Ups};
    let (pa, pb, pm, pl, pk) = (q.phi_a, q.phi_b, q.phi_m, q.phi_lambda, q.phi_k);
    let line_np = t(-1.0, Psi, pk - pa, pk + pb);
    let line_n = t(-1.0, Psi, pk - pa, FRAC_PI_2);
    let line_pp = t(-1.0, Psi, pk + pa, pk + pb);
    let line_p = t(1.0, Psi, FRAC_PI_2, pk + pa);
    match leaf {
        Leaf::Zero => (0.0, vec![]),
        Leaf::Np(1) => (0.0, vec![t(1.0, Ups, PI - pa, PI + pb), line_np]),
        Leaf::Np(2) => (
            0.0,
            vec![t(1.0, Ups, PI - pa, PI + pm), t(-1.0, Ups, pb, pm), line_np],
        ),
        Leaf::Np(3) => (
            0.0,
            vec![
                t(1.0, Ups, PI - pm, PI + pm),
                t(-1.0, Ups, pb, pm),
                t(-1.0, Ups, pa, pm),
                line_np,
            ],
        ),
        Leaf::Np(4) => (1.0, vec![line_np, t(-1.0, Ups, pb, TAU - pa)]),
        Leaf::Np(5) => (
            0.0,
            vec![t(1.0, Psi, pk + pb, pk - pa + TAU), t(-1.0, Ups, pb, TAU - pa)],
        ),
        Leaf::N(1) => (0.0, vec![t(1.0, Ups, PI - pa, PI + pl), line_n]),
        Leaf::N(2) => (
            0.0,
            vec![t(1.0, Ups, PI - pa, PI + pm), t(-1.0, Ups, pl, pm), line_n],
        ),
        Leaf::N(3) => (
            0.0,
            vec![
                t(1.0, Ups, PI - pm, PI + pm),
                t(-1.0, Ups, pl, pm),
                t(-1.0, Ups, pa, pm),
                line_n,
            ],
        ),
        Leaf::N(4) => (1.0, vec![line_n, t(-1.0, Ups, pl, TAU - pa)]),
        Leaf::N(5) => (
            0.0,
            vec![t(1.0, Psi, FRAC_PI_2, pk - pa + TAU), t(-1.0, Ups, pl, TAU - pa)],
        ),
        Leaf::Pp(1) => (0.0, vec![t(1.0, Ups, PI + pa, PI + pb), line_pp]),
        Leaf::Pp(2) => (
            0.0,
            vec![t(1.0, Ups, PI + pa, PI + pm), t(-1.0, Ups, pb, pm), line_pp],
        ),
        Leaf::Pp(3) => (
            0.0,
            vec![t(1.0, Psi, pk + pb, pk + pa), t(-1.0, Ups, pb, pa)],
        ),
        Leaf::P(1) => (0.0, vec![line_p, t(1.0, Ups, PI + pa, PI + pl)]),
        Leaf::P(2) => (
            0.0,
            vec![line_p, t(1.0, Ups, PI + pa, PI + pm), t(-1.0, Ups, pl, pm)],
        ),
        Leaf::P(3) => (0.0, vec![line_p, t(-1.0, Ups, pl, pa)]),
        Leaf::Np(_) | Leaf::Pp(_) | Leaf::N(_) | Leaf::P(_) => {
            unreachable!("leaf index out of range")
        }
    }
}

/// Integrates across the axis directions separately: at `h = 0` the branch
/// degenerates to two rays and the integrand has a corner at `sin φ = 0`.
fn integrate_split<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64) -> f64 {
    let (a, b, sign) = if lo <= hi { (lo, hi, 1.0) } else { (hi, lo, -1.0) };
    let mut knots = vec![a];
    let mut j = (a / FRAC_PI_2).floor() + 1.0;
    while j * FRAC_PI_2 < b {
        knots.push(j * FRAC_PI_2);
        j += 1.0;
    }
    knots.push(b);
    sign * knots
        .windows(2)
        .map(|w| integrate(&mut f, w[0], w[1]).value)
        .sum::<f64>()
}

pub(crate) fn eval_terms(q: &Geometry, constant: f64, terms: &[Term]) -> Result<f64> {
    let worst = Cell::new(0.0f64);
    let mut total = constant;
    for term in terms {
        let v = match term.f {
            Integrand::Psi => {
                let geff = (q.theta + q.g) / (1.0 + q.k * q.k).sqrt();
                if geff == 0.0 {
                    INV_TAU * (term.hi - term.lo)
                } else {
                    integrate(|phi| super::psi_h(phi, geff), term.lo, term.hi).value
                }
            }
            Integrand::Upsilon => {
                integrate_split(
                    |phi| {
                        let (r, rad) = hyperbola_root(phi, q.theta, q.lambda, q.h);
                        if rad < 0.0 {
                            let rel = -rad / radicand_scale(phi, q.theta, q.lambda, q.h).max(1e-300);
                            worst.set(worst.get().max(rel));
                        }
                        INV_TAU * (-0.5 * r * r).exp()
                    },
                    term.lo,
                    term.hi,
                )
            }
        };
        total += term.sign * v;
    }
    if worst.get() > RADICAND_SLACK {
        return Err(Error::Invariant(format!(
            "hyperbola integrand left its domain (relative radicand {})",
            -worst.get()
        )));
    }
    Ok(total)
}

/// `Pr{√(λV² + h) ≤ U − ϑ ≤ kV + g}` for independent standard normals.
pub fn hyperbola_cone_prob(region: &HyperbolaConeRegion) -> Result<Probability> {
    Ok(hyperbola_cone_prob_with(region, BranchVariant::Geometric)?.value)
}

pub fn hyperbola_cone_prob_with(
    region: &HyperbolaConeRegion,
    variant: BranchVariant,
) -> Result<HyperbolaEval> {
    let mut r = HyperbolaConeRegion::new(region.theta, region.lambda, region.h, region.g, region.k)?;
    let k2 = r.k * r.k;
    let mut nudged = false;
    if (k2 - r.lambda).abs() <= SLOPE_DEGENERACY * k2.max(r.lambda) {
        r.lambda *= 1.0 + SLOPE_NUDGE;
        nudged = true;
        log::warn!(
            "line slope matches the asymptote (k² = {k2}, λ = {}); evaluating at λ·(1 + {SLOPE_NUDGE})",
            region.lambda
        );
    }
    let q = Geometry::new(&r, variant);
    let leaf = q.classify();
    let (c, terms) = leaf_terms(leaf, &q);
    let value = eval_terms(&q, c, &terms)?;
    if !(-1e-9..=1.0 + 1e-9).contains(&value) {
        return Err(Error::InconsistentBoundary { value });
    }
    Ok(HyperbolaEval {
        value: Probability::saturating(value),
        leaf,
        nudged,
    })
}
