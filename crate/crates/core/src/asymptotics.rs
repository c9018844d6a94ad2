//! Far-field expansion fitting and remainder decay estimation.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::fields::{self, circle_modes, hessian, PolarGrid, ScalarField};
use crate::phase::{eigenvalues, phase, Sym2};

/// Far-field model `½xᵀAx + bᵀx + (d/2) ln(xᵀ(I+A²)x) + c` with the claimed
/// remainder `O(|x|^{−σ} (ln|x|)^μ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expansion {
    pub a: Sym2,
    pub b: [f64; 2],
    pub c: f64,
    pub d: f64,
    pub sigma: f64,
    pub mu: u32,
}

impl Expansion {
    pub fn value(&self, x: [f64; 2]) -> f64 {
        let q = Sym2::IDENTITY + self.a.square();
        0.5 * self.a.quad_form(x) + self.b[0] * x[0] + self.b[1] * x[1] + 0.5 * self.d * q.quad_form(x).ln() + self.c
    }

    /// `|phase(A) − θ|`.
    pub fn admissibility_defect(&self, theta: f64) -> f64 {
        (phase(&self.a) - theta).abs()
    }

    /// `u − model` on the grid of `u`.
    pub fn remainder(&self, u: &ScalarField) -> ScalarField {
        u.minus_fn(|x, y| self.value([x, y]))
    }
}

impl Serialize for Expansion {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Expansion", 6)?;
        st.serialize_field("A", &self.a.as_array())?;
        st.serialize_field("b", &self.b)?;
        st.serialize_field("c", &self.c)?;
        st.serialize_field("d", &self.d)?;
        st.serialize_field("sigma", &self.sigma)?;
        st.serialize_field("mu", &self.mu)?;
        st.end()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub log_power: f64,
    pub window: (f64, f64),
    /// RMS of the log-log regression
    pub fit_residual: f64,
}

impl DecayFit {
    /// Detected logarithmic power: `log_power` rounded to `0..=2`, so
    /// `μ = 0` below 0.5 and `μ = 1` from 0.5 up to 1.5.
    pub fn mu(&self) -> u32 {
        if self.log_power.is_nan() {
            0
        } else {
            self.log_power.round().clamp(0.0, 2.0) as u32
        }
    }
}

/// JSON form combining an expansion with a measured decay.
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionReport {
    #[serde(rename = "A")]
    pub a: [f64; 3],
    pub b: [f64; 2],
    pub c: f64,
    pub d: f64,
    pub sigma_claimed: f64,
    pub sigma_measured: f64,
    pub mu_claimed: u32,
    pub log_power_measured: f64,
    pub window: (f64, f64),
    pub residual: f64,
}

impl ExpansionReport {
    pub fn new(e: &Expansion, fit: &DecayFit) -> Self {
        ExpansionReport {
            a: e.a.as_array(),
            b: e.b,
            c: e.c,
            d: e.d,
            sigma_claimed: e.sigma,
            sigma_measured: -fit.slope,
            mu_claimed: e.mu,
            log_power_measured: fit.log_power,
            window: fit.window,
            residual: fit.fit_residual,
        }
    }
}

/// Outermost decade of the grid, excluding three boundary rows.
pub fn default_window(grid: &PolarGrid) -> (f64, f64) {
    let hi = grid.radius(grid.n_r() - 4);
    ((hi / 10.0).max(grid.r_min()), hi)
}

/// Area-weighted mean of the Hessian over `lo ≤ |x| ≤ hi`.
pub fn fit_a(u: &ScalarField, window: (f64, f64)) -> Result<Sym2> {
    let rows = u.grid().rows_in(window.0, window.1);
    if rows.len() < 3 {
        return Err(Error::WindowTooSmall(format!("{} rows in [{}, {}]", rows.len(), window.0, window.1)));
    }
    let h = hessian(u)?;
    let mut acc = [0.0; 3];
    let mut wsum = 0.0;
    for &i in &rows {
        // dA = r² d(ln r) dφ on the log grid
        let w = u.grid().radius(i).powi(2);
        for j in 0..u.grid().n_phi() {
            let m = h.get(i, j).as_array();
            for k in 0..3 {
                acc[k] += w * m[k];
            }
            wsum += w;
        }
    }
    Ok(Sym2::from_array(acc.map(|v| v / wsum)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BcdFit {
    pub b: [f64; 2],
    pub c: f64,
    pub d: f64,
    /// condition number of the column-equilibrated normal matrix
    pub condition: f64,
}

/// Least squares of `y` on the columns of `x`, with columns scaled to unit
/// norm. Returns the coefficients and the normal-matrix condition number.
fn least_squares(x: DMatrix<f64>, y: DVector<f64>) -> Result<(DVector<f64>, f64)> {
    let mut x = x;
    let scales: Vec<f64> = x.column_iter().map(|c| c.norm()).collect();
    if scales.contains(&0.0) {
        return Err(Error::IllConditioned { cond: f64::INFINITY });
    }
    for (k, s) in scales.iter().enumerate() {
        x.column_mut(k).scale_mut(1.0 / s);
    }
    let svd = x.svd(true, true);
    let sv = &svd.singular_values;
    let (smax, smin) = (sv.max(), sv.min());
    let cond = (smax / smin).powi(2);
    if !cond.is_finite() || cond > 1e10 {
        return Err(Error::IllConditioned { cond });
    }
    let coef = svd.solve(&y, 0.0).map_err(|_| Error::IllConditioned { cond })?;
    Ok((DVector::from_iterator(coef.len(), coef.iter().zip(&scales).map(|(c, s)| c / s)), cond))
}

/// Fits `(b, c, d)` to `u − ½xᵀAx` over the window nodes.
pub fn fit_bcd(u: &ScalarField, a: &Sym2, window: (f64, f64)) -> Result<BcdFit> {
    let g = u.grid();
    let rows = g.rows_in(window.0, window.1);
    if rows.len() < 2 {
        return Err(Error::WindowTooSmall(format!("{} rows in [{}, {}]", rows.len(), window.0, window.1)));
    }
    let q = Sym2::IDENTITY + a.square();
    let n = rows.len() * g.n_phi();
    let mut x = DMatrix::zeros(n, 4);
    let mut y = DVector::zeros(n);
    let mut k = 0;
    for &i in &rows {
        for j in 0..g.n_phi() {
            let p = g.point(i, j);
            x[(k, 0)] = p[0];
            x[(k, 1)] = p[1];
            x[(k, 2)] = 1.0;
            x[(k, 3)] = 0.5 * q.quad_form(p).ln();
            y[k] = u.get(i, j) - 0.5 * a.quad_form(p);
            k += 1;
        }
    }
    let (coef, condition) = least_squares(x, y)?;
    Ok(BcdFit { b: [coef[0], coef[1]], c: coef[2], d: coef[3], condition })
}

/// `d` from the flux identity in the normalized coordinates `x̂ = Px`,
/// `P = √(I+A²)`.
///
/// The ellipse `x(ψ) = P⁻¹ R (cos ψ, sin ψ)` with `R = r √det P` encloses the
/// same area as the circle of radius `r`. On it
/// `2π d = ∫₀^{2π} x·∇u dψ − π R² tr Â`, `Â = P⁻¹AP⁻¹`, which reduces to
/// `(1/2π)(∮ u_ν ds − 2aπr²)` when `A = aI`.
pub fn d_from_flux(u: &ScalarField, a: &Sym2, r: f64) -> Result<f64> {
    let p = (Sym2::IDENTITY + a.square()).sqrt_spd();
    let pinv = p.inverse().expect("I + A² is positive definite");
    // P commutes with A, so Â = A(I+A²)⁻¹ and its trace is Σ λ/(1+λ²)
    let (l1, l2) = eigenvalues(a);
    let tr_a_hat = l1 / (1.0 + l1 * l1) + l2 / (1.0 + l2 * l2);
    let big_r = r * p.det().sqrt();
    let n = u.grid().n_phi();
    let h = 2.0 * std::f64::consts::PI / n as f64;
    let mut integral = 0.0;
    for m in 0..n {
        let (s, c) = (h * m as f64).sin_cos();
        let x = pinv.apply([big_r * c, big_r * s]);
        let rho = x[0].hypot(x[1]);
        let phi = x[1].atan2(x[0]).rem_euclid(2.0 * std::f64::consts::PI);
        let (_, ur) = fields::sample_with_radial_derivative(u, rho, phi)?;
        integral += rho * ur;
    }
    integral *= h;
    let area_term = std::f64::consts::PI * big_r * big_r * tr_a_hat;
    Ok((integral - area_term) / (2.0 * std::f64::consts::PI))
}

/// Amplitudes of one Fourier mode `k ≥ 2`: `G r^k + D r^{−k}` (times `e^{ikφ}`, plus conjugate).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeAmplitude {
    pub k: usize,
    /// `2|G|`, the real amplitude of the `r^k` part
    pub growing: f64,
    /// `2|D|`
    pub decaying: f64,
    pub growth_flag: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicFit {
    pub b: [f64; 2],
    pub d: f64,
    pub c: f64,
    /// real amplitude of the `r^{−1}` part of mode 1
    pub decaying_1: f64,
    pub modes: Vec<ModeAmplitude>,
}

/// Solves `c(rᵢ) = p·Fᵢ + q/Fᵢ` for `(p, q)`, with `Fᵢ = rᵢ^k`.
fn solve_mode(f1: f64, f2: f64, c1: Complex64, c2: Complex64) -> (Complex64, Complex64) {
    let det = f1 / f2 - f2 / f1;
    ((c1 / f2 - c2 / f1) / det, (f1 * c2 - f2 * c1) / det)
}

/// Decomposes a harmonic `u` by Fourier mode from its circles at `r1`, `r2`.
pub fn harmonic_fit(u: &ScalarField, r1: f64, r2: f64, k_max: usize) -> Result<HarmonicFit> {
    if (r1 - r2).abs() <= 1e-12 * r1.abs().max(r2.abs()) {
        return Err(Error::DegenerateRadii(r1));
    }
    let (lo, hi) = (r1.min(r2), r1.max(r2));
    let mut probe: Vec<f64> = u.grid().rows_in(lo, hi).iter().map(|&i| u.grid().radius(i)).collect();
    probe.extend([r1, r2]);
    let mut sup: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for &r in &probe {
        let lap = fields::circle_laplacian(u, r)?;
        let vals = fields::circle_values(u, r)?;
        let umax = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        sup = sup.max(lap.iter().fold(0.0f64, |m, v| m.max(v.abs())) * r * r);
        scale = scale.max(umax);
    }
    let tol = 1e-6 * scale.max(1.0);
    if sup > tol {
        return Err(Error::NotHarmonic { sup, tol });
    }
    let m1 = circle_modes(u, r1, k_max.max(1))?;
    let m2 = circle_modes(u, r2, k_max.max(1))?;
    // mode 0: c + d ln r
    let (l1, l2) = (r1.ln(), r2.ln());
    let d = (m1[0].re - m2[0].re) / (l1 - l2);
    let c = m1[0].re - d * l1;
    // mode 1: B r + D / r
    let (big_b, big_d) = solve_mode(r1, r2, m1[1], m2[1]);
    let b = [2.0 * big_b.re, -2.0 * big_b.im];
    let u_scale = 1.0 + scale;
    let modes = (2..=k_max)
        .map(|k| {
            let kf = k as f64;
            let (gk, dk) = solve_mode(r1.powf(kf), r2.powf(kf), m1[k], m2[k]);
            let growing = 2.0 * gk.norm();
            ModeAmplitude { k, growing, decaying: 2.0 * dk.norm(), growth_flag: growing * hi.powf(kf) > 1e-8 * u_scale }
        })
        .collect();
    Ok(HarmonicFit { b, d, c, decaying_1: 2.0 * big_d.norm(), modes })
}

/// Regresses `ln m` on `{1, ln r, ln ln r}`.
pub fn regress_decay(radii: &[f64], magnitudes: &[f64]) -> Result<DecayFit> {
    if radii.len() < 5 || radii.len() != magnitudes.len() {
        return Err(Error::WindowTooSmall(format!("{} samples, need 5", radii.len())));
    }
    let lo = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = radii.iter().cloned().fold(0.0, f64::max);
    if lo <= 1.0 || hi < 10.0 * lo {
        return Err(Error::WindowTooSmall(format!("radii [{lo}, {hi}] must exceed 1 and span a decade")));
    }
    if magnitudes.iter().any(|m| !(*m > 0.0) || !m.is_finite()) {
        return Err(Error::InvalidParams("decay magnitudes must be positive".into()));
    }
    let n = radii.len();
    let x = DMatrix::from_fn(n, 3, |i, k| match k {
        0 => 1.0,
        1 => radii[i].ln(),
        _ => radii[i].ln().ln(),
    });
    let y = DVector::from_iterator(n, magnitudes.iter().map(|m| m.ln()));
    let (coef, _) = least_squares(x.clone(), y.clone())?;
    let fitted = &x * &coef;
    let rms = ((&y - fitted).norm_squared() / n as f64).sqrt();
    Ok(DecayFit { slope: coef[1], log_power: coef[2], window: (lo, hi), fit_residual: rms })
}

/// Regresses `ln m` on `{1, ln r}` only.
pub fn regress_power(radii: &[f64], magnitudes: &[f64]) -> Result<(f64, f64)> {
    if radii.len() < 2 || radii.len() != magnitudes.len() {
        return Err(Error::WindowTooSmall(format!("{} samples", radii.len())));
    }
    let n = radii.len() as f64;
    let xs: Vec<f64> = radii.iter().map(|r| r.ln()).collect();
    let ys: Vec<f64> = magnitudes.iter().map(|m| m.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateRadii(radii[0]));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// `max_φ |w(r, φ)|` for each radius.
pub fn circle_sup(w: &ScalarField, radii: &[f64]) -> Result<Vec<f64>> {
    radii
        .iter()
        .map(|&r| match w.grid().node_at(r) {
            Some(i) => Ok(w.row_sup(i)),
            None => Ok(fields::circle_values(w, r)?.iter().fold(0.0, |m: f64, v| m.max(v.abs()))),
        })
        .collect()
}

/// Sup-over-circle decay fit of `w` over `radii`.
pub fn estimate_decay(w: &ScalarField, radii: &[f64]) -> Result<DecayFit> {
    if radii.len() < 5 {
        return Err(Error::WindowTooSmall(format!("{} radii, need 5", radii.len())));
    }
    for &r in radii {
        if !w.grid().contains_radius(r) {
            return Err(Error::RadiusOutOfRange { r, lo: w.grid().r_min(), hi: w.grid().r_max() });
        }
    }
    let m = circle_sup(w, radii)?;
    regress_decay(radii, &m)
}

/// `count` log-spaced radii covering `[lo, hi]`.
pub fn log_radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let step = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|k| if k + 1 == count { hi } else { lo * (step * k as f64).exp() }).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub r: f64,
    pub value: f64,
    pub running_slope: f64,
}

/// Values of a decaying quantity along a ray, with local log-log slopes.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusSweep {
    pub rows: Vec<SweepRow>,
}

impl RadiusSweep {
    /// Evaluates `eval` at `r·direction` for each radius.
    pub fn run(radii: &[f64], direction: [f64; 2], eval: impl Fn([f64; 2]) -> Result<f64>) -> Result<Self> {
        let n = direction[0].hypot(direction[1]);
        let dir = [direction[0] / n, direction[1] / n];
        let values = radii.iter().map(|&r| eval([r * dir[0], r * dir[1]])).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_values(radii, &values))
    }

    pub fn from_values(radii: &[f64], values: &[f64]) -> Self {
        let n = radii.len();
        let slope = |i: usize, j: usize| (values[j].abs().ln() - values[i].abs().ln()) / (radii[j] / radii[i]).ln();
        let rows = (0..n)
            .map(|i| {
                let running_slope = match n {
                    0 | 1 => f64::NAN,
                    _ if i == 0 => slope(0, 1),
                    _ if i == n - 1 => slope(n - 2, n - 1),
                    _ => slope(i - 1, i + 1),
                };
                SweepRow { r: radii[i], value: values[i], running_slope }
            })
            .collect();
        RadiusSweep { rows }
    }

    pub fn radii(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.r).collect()
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value.abs()).collect()
    }

    /// Regression on `{1, ln r, ln ln r}`.
    pub fn fit(&self) -> Result<DecayFit> {
        regress_decay(&self.radii(), &self.magnitudes())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,value,running_slope\n");
        for row in &self.rows {
            let _ = writeln!(out, "{:.12e},{:.12e},{:.6}", row.r, row.value, row.running_slope);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn grid() -> PolarGrid {
        PolarGrid::new(2.5, 1e3, 96, 64).unwrap()
    }

    #[test]
    fn fit_a_examples() {
        let g = grid();
        let a = Sym2::new(1.2, -0.3, 0.4);
        let u = ScalarField::from_fn(&g, |x, y| 0.5 * a.quad_form([x, y]));
        let win = default_window(&g);
        assert!(fit_a(&u, win).unwrap().max_abs_diff(&a) < 1e-9);
        let v = ScalarField::from_fn(&g, |x, y| 0.5 * a.quad_form([x, y]) + 4.0 * x);
        assert!(fit_a(&v, win).unwrap().max_abs_diff(&a) < 1e-9);
        assert!(matches!(fit_a(&u, (500.0, 501.0)), Err(Error::WindowTooSmall(_))));
    }

    #[test]
    fn fit_bcd_model_closure() {
        let g = grid();
        let e = Expansion { a: Sym2::scalar((PI / 4.0).tan()), b: [1.0, -2.0], c: 3.0, d: 0.7, sigma: 1.0, mu: 0 };
        let u = ScalarField::from_fn(&g, |x, y| e.value([x, y]));
        let fit = fit_bcd(&u, &e.a, (100.0, 1000.0)).unwrap();
        assert!((fit.b[0] - 1.0).abs() < 1e-8 && (fit.b[1] + 2.0).abs() < 1e-8);
        assert!((fit.c - 3.0).abs() < 1e-8 && (fit.d - 0.7).abs() < 1e-8);
    }

    #[test]
    fn fit_bcd_drifts_with_inverse_remainder() {
        let g = grid();
        let a = Sym2::scalar(1.0);
        let u = ScalarField::from_fn(&g, |x, y| {
            0.5 * (x * x + y * y) + 0.7 * (2.0 * (x * x + y * y)).ln() * 0.5 + x / (x * x + y * y) + 1.0 / x.hypot(y)
        });
        let near = fit_bcd(&u, &a, (20.0, 100.0)).unwrap();
        let far = fit_bcd(&u, &a, (200.0, 1000.0)).unwrap();
        let (en, ef) = ((near.d - 0.7).abs(), (far.d - 0.7).abs());
        assert!(ef < en && en < 10.0 / 20.0 && ef < 10.0 / 200.0, "{en} {ef}");
    }

    #[test]
    fn ill_conditioned_window() {
        // on a very thin annulus the log column is nearly constant
        let g = PolarGrid::new(100.0, 100.001, 8, 16).unwrap();
        let u = ScalarField::zeros(&g);
        assert!(matches!(fit_bcd(&u, &Sym2::scalar(1.0), (100.0, 100.001)), Err(Error::IllConditioned { .. })));
        let g = grid();
        let r = g.radius(50);
        assert!(matches!(fit_bcd(&u, &Sym2::scalar(1.0), (r, r * 1.0001)), Err(Error::WindowTooSmall(_))));
    }

    #[test]
    fn d_from_flux_isotropic() {
        let g = grid();
        let a = (PI / 4.0).tan();
        let u = ScalarField::from_polar_fn(&g, |r, _| 0.5 * a * r * r + 0.7 * r.ln());
        for r in [10.0, 30.0, 100.0, 333.3] {
            assert!((d_from_flux(&u, &Sym2::scalar(a), r).unwrap() - 0.7).abs() < 1e-6);
        }
        let h = ScalarField::from_fn(&g, |x, y| 2.0 + x - 3.0 * y + (x * x - y * y) / 100.0);
        assert!(d_from_flux(&h, &Sym2::ZERO, 50.0).unwrap().abs() < 1e-8);
    }

    #[test]
    fn d_from_flux_anisotropic_model() {
        let g = PolarGrid::new(2.5, 1e3, 128, 128).unwrap();
        let theta = 1.9;
        let l1: f64 = 0.8;
        let l2 = (theta - l1.atan()).tan();
        let a = Sym2::diag(l1, l2).rotate(0.7);
        let e = Expansion { a, b: [0.5, 0.25], c: -1.0, d: 1.3, sigma: 1.0, mu: 0 };
        let u = ScalarField::from_fn(&g, |x, y| e.value([x, y]));
        for r in [20.0, 60.0] {
            let d = d_from_flux(&u, &a, r).unwrap();
            assert!((d - 1.3).abs() < 1e-6, "r = {r}: {d}");
        }
    }

    #[test]
    fn harmonic_fit_examples() {
        let g = PolarGrid::new(1.0, 100.0, 64, 32).unwrap();
        let u = ScalarField::from_polar_fn(&g, |r, p| 3.0 + 2.0 * r.ln() + r * p.cos() + p.cos() / r);
        let h = harmonic_fit(&u, 5.0, 40.0, 4).unwrap();
        assert!((h.b[0] - 1.0).abs() < 1e-8 && h.b[1].abs() < 1e-8);
        assert!((h.d - 2.0).abs() < 1e-8 && (h.c - 3.0).abs() < 1e-8);
        assert!((h.decaying_1 - 1.0).abs() < 1e-8);
        assert!(h.modes.iter().all(|m| !m.growth_flag));
        let h2 = harmonic_fit(&u, 3.0, 70.0, 4).unwrap();
        assert!((h2.d - h.d).abs() < 1e-8 && (h2.c - h.c).abs() < 1e-8);

        let v = ScalarField::from_fn(&g, |_, y| y);
        let h = harmonic_fit(&v, 5.0, 40.0, 3).unwrap();
        assert!(h.b[0].abs() < 1e-10 && (h.b[1] - 1.0).abs() < 1e-10 && h.d.abs() < 1e-10 && h.c.abs() < 1e-10);

        let w = ScalarField::from_polar_fn(&g, |r, p| 1.0 + r * r * (2.0 * p).cos());
        let h = harmonic_fit(&w, 5.0, 40.0, 3).unwrap();
        assert!(h.modes[0].k == 2 && h.modes[0].growth_flag);

        assert!(matches!(harmonic_fit(&u, 5.0, 5.0, 2), Err(Error::DegenerateRadii(_))));
        let q = ScalarField::from_polar_fn(&g, |r, _| r * r);
        assert!(matches!(harmonic_fit(&q, 5.0, 40.0, 2), Err(Error::NotHarmonic { .. })));
    }

    #[test]
    fn decay_examples() {
        let g = PolarGrid::new(2.5, 2e4, 128, 32).unwrap();
        let w = ScalarField::from_polar_fn(&g, |r, _| 1.0 / r);
        let fit = estimate_decay(&w, &log_radii(10.0, 1e4, 9)).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-9 && fit.log_power.abs() < 1e-9 && fit.fit_residual < 1e-10);
        let w = ScalarField::from_polar_fn(&g, |r, p| r.ln() / r * p.cos());
        let fit = estimate_decay(&w, &log_radii(1e2, 1e4, 9)).unwrap();
        assert!((fit.slope + 1.0).abs() < 0.02 && (fit.log_power - 1.0).abs() < 0.1, "{fit:?}");
        assert_eq!(fit.mu(), 1);
        assert!(matches!(estimate_decay(&w, &log_radii(10.0, 50.0, 9)), Err(Error::WindowTooSmall(_))));
        assert!(estimate_decay(&w, &[10.0, 100.0]).is_err());
    }

    proptest! {
        #[test]
        fn decay_fit_scale_invariant(p in 0.3f64..2.5, l in 0.0f64..1.5) {
            let g = PolarGrid::new(2.5, 2e4, 64, 16).unwrap();
            let w = ScalarField::from_polar_fn(&g, |r, _| r.powf(-p) * r.ln().powf(l) * (1.0 + 1.0 / r));
            let radii = log_radii(20.0, 1e4, 7);
            let a = estimate_decay(&w, &radii).unwrap();
            let b = estimate_decay(&w.map(|v| 7.3 * v), &radii).unwrap();
            prop_assert!((a.slope - b.slope).abs() < 1e-10);
            prop_assert!((a.log_power - b.log_power).abs() < 1e-10);
        }

        #[test]
        fn harmonic_fit_radius_independent(c in -5.0f64..5.0, d in -3.0f64..3.0, b1 in -2.0f64..2.0, e in -2.0f64..2.0,
                                           r1 in 3.0f64..10.0, r2 in 20.0f64..80.0) {
            let g = PolarGrid::new(1.0, 100.0, 64, 32).unwrap();
            let u = ScalarField::from_polar_fn(&g, |r, p| c + d * r.ln() + b1 * r * p.sin() + e * p.cos() / r + 0.1 * r * r * (2.0 * p).sin());
            let h1 = harmonic_fit(&u, r1, r2, 3).unwrap();
            let h2 = harmonic_fit(&u, 4.0, 50.0, 3).unwrap();
            prop_assert!((h1.c - h2.c).abs() < 1e-8 && (h1.d - h2.d).abs() < 1e-8);
            prop_assert!((h1.b[1] - h2.b[1]).abs() < 1e-8);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn model_closure(theta in 0.3..2.8f64, rot in 0.0..PI, l1 in -1.0..1.0f64, b1 in -3.0..3.0f64,
                         b2 in -3.0..3.0f64, c in -5.0..5.0f64, d in -2.0..2.0f64) {
            // admissible A = R diag(λ₁, λ₂) Rᵀ with arctan λ₁ + arctan λ₂ = θ
            let l1 = (0.5 * theta + 0.3 * l1).tan();
            let l2 = (theta - l1.atan()).tan();
            prop_assume!(l2.abs() < 50.0);
            let a = Sym2::new(l1, 0.0, l2).rotate(rot);
            let e = Expansion { a, b: [b1, b2], c, d, sigma: 1.0, mu: 0 };
            let u = ScalarField::from_fn(&grid(), |x, y| e.value([x, y]));
            let fit = fit_bcd(&u, &a, (100.0, 1000.0)).unwrap();
            prop_assert!((fit.b[0] - b1).abs() < 1e-8 && (fit.b[1] - b2).abs() < 1e-8);
            prop_assert!((fit.c - c).abs() < 1e-8 && (fit.d - d).abs() < 1e-8, "{:?}", fit);
        }
    }
}
