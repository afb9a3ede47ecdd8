//! Fixtures shared by the geometry and acceptance tests.
#![allow(dead_code, clippy::excessive_precision)]

use seqnorm::geometry::*;

/// One parameter set per leaf, `(ϑ, λ, h, g, k)`, with the mass from a
/// 25-digit adaptive quadrature of the exact column masses.
pub const LEAF_CASES: [(Leaf, [f64; 5], f64); 17] = [
    (Leaf::Zero, [2.75, 2.81, 2.71, -0.03, 0.6], 0.0),
    (Leaf::Np(1), [0.55, 0.62, 0.57, 3.25, 0.29], 0.063521778062139567),
    (Leaf::Np(2), [-0.21, 0.99, 2.21, 2.63, 0.82], 0.054985569943248196),
    (Leaf::Np(3), [-0.49, 3.88, 0.35, 1.79, 1.28], 0.12614565454816486),
    (Leaf::Np(4), [-1.79, 2.92, 2.46, 3.2, 1.39], 0.27405143945107517),
    (Leaf::Np(5), [-2.96, 2.34, 2.11, 2.45, 0.51], 0.17427274081995768),
    (Leaf::Pp(1), [0.11, 1.08, 0.88, 0.83, 0.68], 0.0046466937310025213),
    (Leaf::Pp(2), [-1.04, 2.45, 2.88, 1.46, 1.49], 0.024433827873768053),
    (Leaf::Pp(3), [-2.77, 3.73, 1.56, 1.02, 1.79], 0.050571611307077494),
    (Leaf::N(1), [0.08, 0.77, 0.5, 3.2, 1.97], 0.12657874016783459),
    (Leaf::N(2), [-1.28, 3.95, 2.13, 1.49, 2.47], 0.066906365020471006),
    (Leaf::N(3), [-1.08, 1.71, 1.34, 2.68, 1.87], 0.21561787910848355),
    (Leaf::N(4), [-2.73, 2.36, 1.01, 3.28, 2.16], 0.4704808286515025),
    (Leaf::N(5), [-2.66, 1.77, 0.17, 2.18, 2.13], 0.35313388093349442),
    (Leaf::P(1), [0.05, 1.3, 0.64, 0.37, 2.39], 0.026382180126075992),
    (Leaf::P(2), [-0.75, 1.53, 2.09, 0.18, 2.94], 0.024565971100212801),
    (Leaf::P(3), [-2.78, 1.14, 1.64, 0.63, 2.42], 0.13849594977300902),
];

pub fn region(p: [f64; 5]) -> HyperbolaConeRegion {
    HyperbolaConeRegion::new(p[0], p[1], p[2], p[3], p[4]).unwrap()
}

pub fn hc(p: [f64; 5]) -> f64 {
    hyperbola_cone_prob(&region(p)).unwrap().get()
}

pub fn cone(h: f64, g: f64, k: f64) -> f64 {
    cone_prob(&ConeRegion::new(h, g, k).unwrap()).unwrap().get()
}

/// Parameter shifts that land exactly on a case boundary of `base`.
pub fn boundary_probes() -> Vec<(&'static str, [f64; 5])> {
    let mut out = Vec::new();
    // ϑ shifts move the origin relative to points that are fixed offsets
    // from the branch centre
    let offsets = |p: [f64; 5]| {
        let r = region(p);
        let (l, h, g, k) = (r.lambda, r.h, r.g, r.k);
        let d = h * (k * k - l) + l * g * g;
        let sd = d.max(0.0).sqrt();
        let x_a = (l * g - k * sd) / (l - k * k);
        let x_b = (l * g + k * sd) / (l - k * k);
        (h / x_a, h / x_b, h.sqrt(), g)
    };
    let np = [0.0, 1.5, 1.0, 2.0, 0.8];
    let (p_off, q_off, c_off, r_off) = offsets(np);
    for (name, off) in [("O=Q", q_off), ("O=P", p_off), ("O=C", c_off), ("O=R", r_off)] {
        out.push((name, [-off, np[1], np[2], np[3], np[4]]));
    }
    let pp = [0.0, 2.0, 1.0, 0.8, 1.0];
    let (p_off, q_off, _, _) = offsets(pp);
    out.push(("pp O=Q", [-q_off, pp[1], pp[2], pp[3], pp[4]]));
    out.push(("pp O=P", [-p_off, pp[1], pp[2], pp[3], pp[4]]));
    let n = [0.0, 0.6, 0.7, 1.6, 1.8];
    let (p_off, _, c_off, r_off) = offsets(n);
    out.push(("n M", n));
    for (name, off) in [("n O=P", p_off), ("n O=C", c_off), ("n O=R", r_off)] {
        out.push((name, [-off, n[1], n[2], n[3], n[4]]));
    }
    let p = [0.0, 0.6, 1.5, 0.7, 1.8];
    let (p_off, _, _, _) = offsets(p);
    out.push(("p M", p));
    out.push(("p O=P", [-p_off, p[1], p[2], p[3], p[4]]));
    out
}
