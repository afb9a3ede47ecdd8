use std::f64::consts::{FRAC_1_PI, FRAC_PI_2, PI};

use super::ConeRegion;
use crate::error::Result;
use crate::quadrature::integrate;
use crate::special_fn::Probability;

const INV_TAU: f64 = 0.5 * FRAC_1_PI;

/// `(1/2π) exp(−h² / (2 cos² φ))`.
pub fn psi_h(phi: f64, h: f64) -> f64 {
    if h == 0.0 {
        return INV_TAU;
    }
    let c = phi.cos();
    INV_TAU * (-0.5 * h * h / (c * c)).exp()
}

/// `(1/2π) exp(−g² / (2 (1 + k²) cos² φ))`.
pub fn psi_gk(phi: f64, g: f64, k: f64) -> f64 {
    psi_h(phi, g / (1.0 + k * k).sqrt())
}

fn int_psi(h: f64, a: f64, b: f64) -> f64 {
    if h == 0.0 {
        return INV_TAU * (b - a);
    }
    integrate(|phi| psi_h(phi, h), a, b).value
}

/// `Pr{h ≤ U ≤ k V + g}` for independent standard normals `U`, `V`.
pub fn cone_prob(region: &ConeRegion) -> Result<Probability> {
    let ConeRegion { h, g, k } = ConeRegion::new(region.h, region.g, region.k)?;
    let phi_k = k.atan();
    // R = (h, (h - g)/k); at h = 0 the corner recedes along the v axis and
    // both one-sided limits give +π/2.
    let phi_r = if h == 0.0 {
        FRAC_PI_2
    } else {
        ((h - g) / (k * h)).atan()
    };
    let g_eff = g / (1.0 + k * k).sqrt();
    let value = if g.max(h) < 0.0 {
        int_psi(g_eff, FRAC_PI_2, PI + phi_k + phi_r) - int_psi(h, FRAC_PI_2, PI + phi_r)
    } else if h <= 0.0 && 0.0 <= g {
        1.0 - int_psi(h, FRAC_PI_2, PI + phi_r) - int_psi(g_eff, phi_k + phi_r, 1.5 * PI)
    } else {
        int_psi(h, phi_r, FRAC_PI_2) - int_psi(g_eff, phi_k + phi_r, FRAC_PI_2)
    };
    Ok(Probability::saturating(value))
}
