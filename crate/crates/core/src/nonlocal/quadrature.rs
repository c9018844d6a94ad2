//! Polar quadrature rules for the nonlocal operators.
//!
//! A partition of unity `χ(|z|)` (1 below `ρ/2`, 0 above `ρ`) splits every
//! integral into a near part on a grid centred at the evaluation point and a
//! far part on a grid centred at the origin. Each grid only ever sees a
//! smooth integrand.

use std::f64::consts::PI;

use crate::oracle::smooth_step;

// 8-point Gauss–Legendre on [-1, 1]
const GL_X: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL_W: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// Innermost radius of the near grid; the disc below it is closed analytically.
pub const INNER_CUTOFF: f64 = 1e-4;
pub const NEAR_ANGLES: usize = 64;
pub const FAR_ANGLES: usize = 256;
const TRANSITION_PANELS: usize = 16;

/// Nodes and weights of composite Gauss–Legendre on the given breakpoints.
pub fn gauss_panels(breaks: &[f64]) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(8 * breaks.len());
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
        for k in 0..8 {
            out.push((m + h * GL_X[k], h * GL_W[k]));
        }
    }
    out
}

/// Localization radius around `x`.
pub fn local_radius(x: [f64; 2]) -> f64 {
    (0.5 * x[0].hypot(x[1])).max(1.0)
}

/// `χ(ρ)` for localization radius `rho_loc`.
pub fn chi(rho: f64, rho_loc: f64) -> f64 {
    1.0 - smooth_step((rho - 0.5 * rho_loc) / (0.5 * rho_loc)).0
}

fn near_breaks(rho_loc: f64) -> Vec<f64> {
    let half = 0.5 * rho_loc;
    let decades = (half / INNER_CUTOFF).log10();
    let n = (4.0 * decades).ceil().max(1.0) as usize;
    let mut b: Vec<f64> = (0..=n).map(|k| INNER_CUTOFF * (half / INNER_CUTOFF).powf(k as f64 / n as f64)).collect();
    // the χ transition gets its own panels
    b.extend(transition_breaks(rho_loc).into_iter().skip(1));
    b
}

/// Breakpoints across the `χ` transition `[ρ/2, ρ]`.
fn transition_breaks(rho_loc: f64) -> Vec<f64> {
    let half = 0.5 * rho_loc;
    (0..=TRANSITION_PANELS).map(|k| half * (1.0 + k as f64 / TRANSITION_PANELS as f64)).collect()
}

/// `∫_{ℝ²} χ(|z|) g(z) |z|^e dz` for an even integrand `g(z) = g(−z)`
/// behaving like `A(ψ) ρ^m` as `ρ → 0`.
pub fn near_integral(rho_loc: f64, e: f64, m: f64, g: impl Fn([f64; 2]) -> f64) -> f64 {
    let radial = gauss_panels(&near_breaks(rho_loc));
    let dpsi = PI / NEAR_ANGLES as f64;
    let mut total = 0.0;
    let mut inner = 0.0;
    for a in 0..NEAR_ANGLES {
        let (sn, cs) = (dpsi * (a as f64 + 0.5)).sin_cos();
        let mut line = 0.0;
        for &(rho, w) in &radial {
            line += w * chi(rho, rho_loc) * g([rho * cs, rho * sn]) * rho.powf(e + 1.0);
        }
        total += line;
        let amp = g([INNER_CUTOFF * cs, INNER_CUTOFF * sn]) / INNER_CUTOFF.powf(m);
        inner += amp;
    }
    let p = m + e + 2.0;
    // the factor 2 restores ψ ∈ [π, 2π)
    2.0 * dpsi * (total + inner * INNER_CUTOFF.powf(p) / p)
}

/// Breakpoints of the origin-centred radial grid on `[0, r_max]`, refined
/// where the `χ` ring around `x` crosses.
fn far_breaks(x: [f64; 2], rho_loc: f64, r_max: f64) -> Vec<f64> {
    let mut b = vec![0.0, 0.25, 0.5, 0.75, 1.0];
    let mut r = 1.0;
    while r * 1.25 < r_max {
        r *= 1.25;
        b.push(r);
    }
    let rx = x[0].hypot(x[1]);
    for t in transition_breaks(rho_loc) {
        b.push(rx - t);
        b.push(rx + t);
    }
    b.push(r_max);
    b.retain(|v| *v >= 0.0 && *v <= r_max);
    b.sort_by(|a, c| a.partial_cmp(c).unwrap());
    b.dedup_by(|a, c| (*a - *c).abs() < 1e-12);
    b
}

/// `∫_{|y|<r_max} (1 − χ(|y−x|)) g(y) |x−y|^e dy` on an origin-centred grid,
/// for several integrands at once.
pub fn far_integrals<const N: usize>(
    x: [f64; 2],
    rho_loc: f64,
    e: f64,
    r_max: f64,
    g: impl Fn([f64; 2]) -> [f64; N],
) -> [f64; N] {
    let radial = gauss_panels(&far_breaks(x, rho_loc, r_max));
    let dphi = 2.0 * PI / FAR_ANGLES as f64;
    let dirs: Vec<(f64, f64)> = (0..FAR_ANGLES).map(|a| (dphi * a as f64).sin_cos()).collect();
    let mut total = [0.0; N];
    for &(r, w) in &radial {
        let mut ring = [0.0; N];
        for &(sn, cs) in &dirs {
            let y = [r * cs, r * sn];
            let dist = (y[0] - x[0]).hypot(y[1] - x[1]);
            let cut = 1.0 - chi(dist, rho_loc);
            if cut == 0.0 {
                continue;
            }
            let k = cut * dist.powf(e);
            for (acc, v) in ring.iter_mut().zip(g(y)) {
                *acc += k * v;
            }
        }
        for (t, v) in total.iter_mut().zip(ring) {
            *t += w * r * v;
        }
    }
    total.map(|t| t * dphi)
}

pub fn far_integral(x: [f64; 2], rho_loc: f64, e: f64, r_max: f64, g: impl Fn([f64; 2]) -> f64) -> f64 {
    far_integrals(x, rho_loc, e, r_max, |y| [g(y)])[0]
}

/// `∫_{|y|<r_max} g(y) dy`.
pub fn disc_integral(r_max: f64, g: impl Fn([f64; 2]) -> f64) -> f64 {
    let mut breaks = vec![0.0];
    let n = (8.0 * r_max).ceil() as usize;
    breaks.extend((1..=n).map(|k| r_max * k as f64 / n as f64));
    let dphi = 2.0 * PI / FAR_ANGLES as f64;
    let mut total = 0.0;
    for (r, w) in gauss_panels(&breaks) {
        let ring: f64 = (0..FAR_ANGLES)
            .map(|a| {
                let (sn, cs) = (dphi * a as f64).sin_cos();
                g([r * cs, r * sn])
            })
            .sum();
        total += w * r * ring;
    }
    total * dphi
}

/// `∫_{ℝ²} (1 − χ(|z|)) |z|^e dz` for `e < −2`.
pub fn kernel_mass(rho_loc: f64, e: f64) -> f64 {
    let transition: f64 = gauss_panels(&transition_breaks(rho_loc))
        .iter()
        .map(|&(r, w)| w * (1.0 - chi(r, rho_loc)) * r.powf(e + 1.0))
        .sum();
    2.0 * PI * (transition - rho_loc.powf(e + 2.0) / (e + 2.0))
}

/// `∫_{|y|>R} C |y|^{−p} |y|^e dy`, the tail closure of a power law.
pub fn power_tail(coef: f64, p: f64, e: f64, r: f64) -> f64 {
    let q = p - e - 2.0;
    2.0 * PI * coef * r.powf(-q) / q
}
