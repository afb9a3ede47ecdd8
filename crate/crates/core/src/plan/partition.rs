//! Bounds on `E[H(Y, Z)]` for a planar Gaussian probability `H` that depends
//! monotonically on two independent chi-square variables, by partitioning
//! the truncated `(y, z)` rectangle.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::geometry::{cone_prob, hyperbola_cone_prob, ConeRegion, HyperbolaConeRegion};
use crate::special_fn::{chi_square_cdf_raw, chi_square_quantile, chi_square_sf_raw};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionOptions {
    /// Total truncation budget over all stages.
    pub tail_mass: f64,
    /// Cells per stage after refinement.
    pub cell_budget: usize,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        PartitionOptions {
            tail_mass: 1e-4,
            cell_budget: 256,
        }
    }
}

impl PartitionOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tail_mass > 0.0 && self.tail_mass < 1.0) {
            return domain(format!("tail_mass = {} not in (0, 1)", self.tail_mass));
        }
        if self.cell_budget < 4 {
            return domain(format!("cell_budget = {} below 4", self.cell_budget));
        }
        Ok(())
    }
}

/// A rectangle of `(y, z)` space with bounds on the event's mass inside it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionCell {
    pub y_lo: f64,
    pub y_hi: f64,
    pub z_lo: f64,
    pub z_hi: f64,
    /// Chi-square mass of the cell times the conditional upper bound.
    pub p_upper: f64,
    /// Chi-square mass of the cell times the conditional lower bound.
    pub p_lower: f64,
}

impl PartitionCell {
    pub fn gap(&self) -> f64 {
        self.p_upper - self.p_lower
    }
}

/// The event
/// `{ d√(V² + y + z) ≤ U − ϑ,  w_lo√y < U − ϑ − kV ≤ w_hi√y }`
/// for independent standard normals `U`, `V`.
///
/// The squared form `√(d²V² + d²(y+z))` is the hyperbola-cone template
/// with `λ = d²`, `h = d²(y+z)`; `d = 0` degenerates to a cone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripProblem {
    pub theta: f64,
    pub d: f64,
    pub k: f64,
    pub w_lo: f64,
    pub w_hi: f64,
    pub y_dof: u64,
    pub z_dof: u64,
}

impl StripProblem {
    /// `Pr{ d√(V² + s) ≤ U − ϑ ≤ kV + g }` where `s = y + z`.
    fn h_prob(&self, s: f64, g: f64) -> Result<f64> {
        if self.d == 0.0 {
            let r = ConeRegion::new(self.theta, g + self.theta, self.k)?;
            return Ok(cone_prob(&r)?.get());
        }
        let lambda = self.d * self.d;
        let r = HyperbolaConeRegion::new(self.theta, lambda, lambda * s, g, self.k)?;
        Ok(hyperbola_cone_prob(&r)?.get())
    }

    /// Conditional bounds on the event over `y ∈ [y_lo, y_hi]`,
    /// `z ∈ [z_lo, z_hi]`. The event shrinks as `y + z` grows and as the
    /// strip narrows, so the extreme corners bound it.
    pub fn conditional_bounds(&self, y_lo: f64, y_hi: f64, z_lo: f64, z_hi: f64) -> Result<(f64, f64)> {
        let (sl, sh) = (y_lo.sqrt(), y_hi.sqrt());
        let span = |w: f64| if w >= 0.0 { (w * sl, w * sh) } else { (w * sh, w * sl) };
        let (hi_min, hi_max) = span(self.w_hi);
        let (lo_min, lo_max) = span(self.w_lo);
        let s_min = y_lo + z_lo;
        let s_max = y_hi + z_hi;
        let upper = (self.h_prob(s_min, hi_max)? - self.h_prob(s_min, lo_min)?).max(0.0);
        let lower = if hi_min > lo_max {
            (self.h_prob(s_max, hi_min)? - self.h_prob(s_max, lo_max)?).max(0.0)
        } else {
            0.0
        };
        Ok((lower, upper))
    }

    fn mass(dof: u64, lo: f64, hi: f64) -> f64 {
        if dof == 0 {
            return 1.0;
        }
        let k = dof as f64;
        // subtract in whichever tail keeps the difference accurate
        let m = if hi <= k {
            chi_square_cdf_raw(hi, k) - chi_square_cdf_raw(lo, k)
        } else {
            chi_square_sf_raw(lo, k) - chi_square_sf_raw(hi, k)
        };
        m.max(0.0)
    }

    pub fn cell_mass(&self, y_lo: f64, y_hi: f64, z_lo: f64, z_hi: f64) -> f64 {
        Self::mass(self.y_dof, y_lo, y_hi) * Self::mass(self.z_dof, z_lo, z_hi)
    }

    fn cell(&self, y_lo: f64, y_hi: f64, z_lo: f64, z_hi: f64) -> Result<PartitionCell> {
        let (lo, hi) = self.conditional_bounds(y_lo, y_hi, z_lo, z_hi)?;
        if lo > hi + 1e-12 {
            return Err(Error::Invariant(format!(
                "cell [{y_lo}, {y_hi}]x[{z_lo}, {z_hi}] has lower bound {lo} above upper {hi}"
            )));
        }
        let m = self.cell_mass(y_lo, y_hi, z_lo, z_hi);
        Ok(PartitionCell {
            y_lo,
            y_hi,
            z_lo,
            z_hi,
            p_upper: m * hi,
            p_lower: m * lo.min(hi),
        })
    }
}

/// A partition of the truncated rectangle with per-cell bounds.
#[derive(Debug, Clone)]
pub struct Partition {
    pub problem: StripProblem,
    pub cells: Vec<PartitionCell>,
    /// Probability that `(Y, Z)` falls outside the rectangle.
    pub outside: f64,
    y_span: f64,
    z_span: f64,
}

impl Partition {
    /// Truncates each chi-square at `tail/4` in both tails and starts from
    /// a 2×2 grid (4×1 when `Z` is degenerate).
    pub fn new(problem: StripProblem, tail: f64) -> Result<Partition> {
        if !(tail > 0.0 && tail < 1.0) {
            return domain(format!("tail = {tail} not in (0, 1)"));
        }
        if problem.y_dof == 0 {
            return domain("Y needs at least one degree of freedom");
        }
        let q = tail / 4.0;
        let yd = problem.y_dof as u32;
        let (y0, y1) = (chi_square_quantile(q, yd)?, chi_square_quantile(1.0 - q, yd)?);
        let (z0, z1) = if problem.z_dof == 0 {
            (0.0, 0.0)
        } else {
            let zd = problem.z_dof as u32;
            (chi_square_quantile(q, zd)?, chi_square_quantile(1.0 - q, zd)?)
        };
        let mut rects = Vec::with_capacity(4);
        if problem.z_dof == 0 {
            let step = (y1 - y0) / 4.0;
            for i in 0..4 {
                let lo = y0 + step * i as f64;
                let hi = if i == 3 { y1 } else { lo + step };
                rects.push((lo, hi, 0.0, 0.0));
            }
        } else {
            let ym = 0.5 * (y0 + y1);
            let zm = 0.5 * (z0 + z1);
            for (zl, zh) in [(z0, zm), (zm, z1)] {
                for (yl, yh) in [(y0, ym), (ym, y1)] {
                    rects.push((yl, yh, zl, zh));
                }
            }
        }
        let cells = eval_all(&problem, &rects)?;
        let inside = problem.cell_mass(y0, y1, z0, z1);
        Ok(Partition {
            problem,
            cells,
            outside: (1.0 - inside).max(0.0),
            y_span: y1 - y0,
            z_span: z1 - z0,
        })
    }

    pub fn lower(&self) -> f64 {
        self.cells.iter().map(|c| c.p_lower).sum()
    }

    pub fn upper(&self) -> f64 {
        self.cells.iter().map(|c| c.p_upper).sum()
    }

    /// Splits the cell with the largest gap (lowest index on ties) along
    /// its longer side, relative to the initial rectangle, until `budget`
    /// cells exist.
    pub fn refine(&mut self, budget: usize) -> Result<()> {
        if budget < self.cells.len() {
            log::warn!(
                "refinement budget {budget} below current {} cells; nothing to do",
                self.cells.len()
            );
            return Ok(());
        }
        while self.cells.len() < budget {
            let mut best = 0;
            for (i, c) in self.cells.iter().enumerate() {
                if c.gap() > self.cells[best].gap() {
                    best = i;
                }
            }
            let c = self.cells[best];
            let ny = (c.y_hi - c.y_lo) / self.y_span;
            let nz = if self.z_span > 0.0 {
                (c.z_hi - c.z_lo) / self.z_span
            } else {
                0.0
            };
            let halves = if ny >= nz {
                let m = 0.5 * (c.y_lo + c.y_hi);
                [(c.y_lo, m, c.z_lo, c.z_hi), (m, c.y_hi, c.z_lo, c.z_hi)]
            } else {
                let m = 0.5 * (c.z_lo + c.z_hi);
                [(c.y_lo, c.y_hi, c.z_lo, m), (c.y_lo, c.y_hi, m, c.z_hi)]
            };
            let p = &self.problem;
            let (a, b) = rayon::join(
                || p.cell(halves[0].0, halves[0].1, halves[0].2, halves[0].3),
                || p.cell(halves[1].0, halves[1].1, halves[1].2, halves[1].3),
            );
            self.cells[best] = a?;
            self.cells.insert(best + 1, b?);
        }
        Ok(())
    }
}

fn eval_all(p: &StripProblem, rects: &[(f64, f64, f64, f64)]) -> Result<Vec<PartitionCell>> {
    use rayon::prelude::*;
    rects
        .par_iter()
        .map(|&(a, b, c, d)| p.cell(a, b, c, d))
        .collect()
}
