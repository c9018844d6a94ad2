//! Far-field slopes of the nonlocal operators.

use super::*;
use crate::asymptotics::{log_radii, regress_power};
use statrs::function::gamma::gamma;
use std::f64::consts::PI;

fn params(s: f64) -> FracParams {
    FracParams::new(s, 1e4, 1e-8).unwrap()
}

// (−Δ)^s |x|^{−a} = K |x|^{−a−2s} in the plane
fn homogeneous_constant(a: f64, s: f64) -> f64 {
    4f64.powf(s) * gamma(0.5 * a + s) * gamma(1.0 - 0.5 * a) / (gamma(0.5 * a) * gamma(1.0 - 0.5 * a - s))
}

#[test]
fn frac_laplacian_of_power_tail() {
    let (s, sigma) = (0.2, 1.5);
    let p = params(s);
    let u = PowerTail { sigma };
    // two-term far-field model: homogeneous part plus the renormalized mass
    // ∫ (u − |y|^{−σ}) dy = −4π acting as a point source
    let k = homogeneous_constant(sigma, s);
    for r in [100.0, 400.0] {
        let got = frac_laplacian(&u, [r, 0.0], &p).unwrap();
        let model = k * r.powf(-sigma - 2.0 * s) + frac_constant(s) * 4.0 * PI * r.powf(-2.0 - 2.0 * s);
        println!("r {r}: {got:e} model {model:e}");
        assert!((got / model - 1.0).abs() < 0.02, "{got} {model}");
    }
    // adding 4e^{−|y|²} cancels the renormalized mass, exposing −σ−2s
    let balanced = Combination { alpha: 1.0, u, beta: 4.0, v: Gaussian::unit() };
    let radii = log_radii(10.0, 100.0, 9);
    let sweep = RadiusSweep::run(&radii, [1.0, 0.0], |x| frac_laplacian(&balanced, x, &p)).unwrap();
    let (slope, _) = regress_power(&sweep.radii(), &sweep.magnitudes()).unwrap();
    println!("balanced slope {slope}\n{}", sweep.to_csv());
    assert!((slope + sigma + 2.0 * s).abs() < 0.1, "{slope}");
}

#[test]
fn riesz_slope_for_compact_density() {
    let p = params(0.3);
    let f = Bump::unit_mass(1.0);
    let radii = log_radii(20.0, 200.0, 9);
    let sweep = RadiusSweep::run(&radii, [1.0, 1.0], |x| riesz_potential(&f, x, &p)).unwrap();
    let (slope, _) = regress_power(&sweep.radii(), &sweep.magnitudes()).unwrap();
    println!("riesz slope {slope}");
    assert!((slope - (2.0 * 0.3 - 2.0)).abs() < 0.05, "{slope}");
}

#[test]
fn cross_term_slopes() {
    let p = params(0.2);
    let radii = log_radii(10.0, 100.0, 9);
    let u = PowerTail { sigma: 1.5 };
    let sweep = RadiusSweep::run(&radii, [1.0, 0.0], |x| cross_term(&u, &u, x, &p)).unwrap();
    let (slope, _) = regress_power(&sweep.radii(), &sweep.magnitudes()).unwrap();
    let fit = sweep.fit().unwrap();
    println!("cross 1.5: slope {slope} fit {fit:?}\n{}", sweep.to_csv());
    let v = PowerTail { sigma: 1.0 };
    let sweep = RadiusSweep::run(&radii, [1.0, 0.0], |x| cross_term(&v, &v, x, &p)).unwrap();
    let (slope1, _) = regress_power(&sweep.radii(), &sweep.magnitudes()).unwrap();
    let fit1 = sweep.fit().unwrap();
    println!("cross 1.0: slope {slope1} fit {fit1:?}\n{}", sweep.to_csv());
    assert!((fit.slope + 2.4).abs() < 0.15, "{fit:?}");
    assert!((fit1.slope + 2.4).abs() < 0.15 && fit1.mu() == 1, "{fit1:?}");
    // without the log term the σ₁+σ₂ = 2 decay looks slower than r^{−2−2s}
    assert!(slope1 > -2.4 && slope < slope1);
}
