//! Polar grids, finite-difference calculus and circle diagnostics.

mod diff;
mod grid;

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use nalgebra::{Matrix5, Vector5};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) use diff::Stencils;
pub use diff::{gradient, hessian, laplacian, SymField};
pub use grid::{PolarGrid, ScalarField};

/// Weights over five consecutive radial nodes that reproduce value and
/// radial derivative of every function in span{1, ln r, r, r², 1/r}.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RadialWeights {
    pub start: usize,
    pub value: [f64; 5],
    pub deriv: [f64; 5],
}

fn fitted_basis(t: f64) -> ([f64; 5], [f64; 5]) {
    ([1.0, t.ln(), t, t * t, 1.0 / t], [0.0, 1.0 / t, 1.0, 2.0 * t, -1.0 / (t * t)])
}

pub(crate) fn radial_weights(grid: &PolarGrid, r: f64) -> Result<RadialWeights> {
    let n = grid.n_r();
    let radii = grid.radii();
    let below = radii.iter().filter(|&&x| x < r * (1.0 - 1e-12)).count();
    let above = radii.iter().filter(|&&x| x > r * (1.0 + 1e-12)).count();
    if below < 2 || above < 2 {
        return Err(Error::RadiusOutOfRange { r, lo: radii[1], hi: radii[n - 2] });
    }
    let c = (grid.radial_coordinate(r).round() as usize).clamp(2, n - 3);
    let start = c - 2;
    // scaled variable t = r_k / r keeps the system well conditioned
    let mut m = Matrix5::zeros();
    for k in 0..5 {
        let (phi, _) = fitted_basis(radii[start + k] / r);
        for b in 0..5 {
            m[(b, k)] = phi[b];
        }
    }
    let (v, d) = fitted_basis(1.0);
    let lu = m.lu();
    let wv = lu.solve(&Vector5::from(v)).ok_or(Error::DegenerateRadii(r))?;
    // d/dr = (1/r) d/dt at t = 1
    let wd = lu.solve(&(Vector5::from(d) / r)).ok_or(Error::DegenerateRadii(r))?;
    let mut value: [f64; 5] = wv.into();
    if let Some(i) = grid.node_at(r) {
        value = [0.0; 5];
        value[i - start] = 1.0;
    }
    Ok(RadialWeights { start, value, deriv: wd.into() })
}

/// Values `u(r, φⱼ)` on the circle of radius `r` (fitted radial interpolation).
pub fn circle_values(u: &ScalarField, r: f64) -> Result<Vec<f64>> {
    let w = radial_weights(u.grid(), r)?;
    Ok(combine_rows(u, w.start, &w.value))
}

/// Radial derivative `∂_r u(r, φⱼ)` on the circle of radius `r`.
pub fn circle_radial_derivative(u: &ScalarField, r: f64) -> Result<Vec<f64>> {
    let w = radial_weights(u.grid(), r)?;
    Ok(combine_rows(u, w.start, &w.deriv))
}

fn combine_rows(u: &ScalarField, start: usize, w: &[f64; 5]) -> Vec<f64> {
    let n = u.grid().n_phi();
    let mut out = vec![0.0; n];
    for (k, wk) in w.iter().enumerate() {
        for (o, v) in out.iter_mut().zip(u.row(start + k)) {
            *o += wk * v;
        }
    }
    out
}

/// Laplacian on the circle of radius `r`, with fitted radial weights and
/// spectral angular derivatives. Exact on `1, ln r, r^{±k} e^{ikφ}` for
/// `k ≤ 2`, so harmonic fields register at roundoff level.
pub fn circle_laplacian(u: &ScalarField, r: f64) -> Result<Vec<f64>> {
    let g = u.grid();
    let w = radial_weights(g, r)?;
    let radii = &g.radii()[w.start..w.start + 5];
    // second-derivative weights from the same fitted basis
    let mut m = Matrix5::zeros();
    for k in 0..5 {
        let (phi, _) = fitted_basis(radii[k] / r);
        for b in 0..5 {
            m[(b, k)] = phi[b];
        }
    }
    let d2 = Vector5::new(0.0, -1.0, 0.0, 2.0, 2.0) / (r * r);
    let w2 = m.lu().solve(&d2).ok_or(Error::DegenerateRadii(r))?;
    let n = g.n_phi();
    let mut out = vec![0.0; n];
    for k in 0..5 {
        let row = u.row(w.start + k);
        let upp = spectral_second_derivative(row);
        for j in 0..n {
            out[j] += (w2[k] + w.deriv[k] / r) * row[j] + w.value[k] * upp[j] / (r * r);
        }
    }
    Ok(out)
}

fn spectral_second_derivative(row: &[f64]) -> Vec<f64> {
    let n = row.len();
    let h = 2.0 * PI / n as f64;
    let mut out = vec![0.0; n];
    for k in 1..=n / 2 {
        let (mut a, mut b) = (0.0, 0.0);
        for (j, v) in row.iter().enumerate() {
            let (s, c) = (k as f64 * h * j as f64).sin_cos();
            a += v * c;
            b += v * s;
        }
        let wk = if 2 * k == n { 1.0 } else { 2.0 } / n as f64;
        let k2 = (k * k) as f64;
        for (j, o) in out.iter_mut().enumerate() {
            let (s, c) = (k as f64 * h * j as f64).sin_cos();
            *o -= k2 * wk * (a * c + b * s);
        }
    }
    out
}

/// Band-limited interpolation weights at angle `phi` for `n` (even) uniform samples.
pub(crate) fn trig_weights(n: usize, phi: f64) -> Vec<f64> {
    let h = 2.0 * PI / n as f64;
    (0..n)
        .map(|j| {
            let t = phi - h * j as f64;
            let half = 0.5 * t;
            if half.sin().abs() < 1e-14 {
                // t is a multiple of 2π
                1.0
            } else {
                (0.5 * n as f64 * t).sin() * half.cos() / (half.sin() * n as f64)
            }
        })
        .collect()
}

/// Value and radial derivative of `u` at an arbitrary point of the annulus,
/// fitted in `r` and trigonometric in `φ`.
pub(crate) fn sample_with_radial_derivative(u: &ScalarField, r: f64, phi: f64) -> Result<(f64, f64)> {
    let g = u.grid();
    let w = radial_weights(g, r)?;
    let tw = trig_weights(g.n_phi(), phi);
    let (mut val, mut der) = (0.0, 0.0);
    for k in 0..5 {
        let row: f64 = u.row(w.start + k).iter().zip(&tw).map(|(a, b)| a * b).sum();
        val += w.value[k] * row;
        der += w.deriv[k] * row;
    }
    Ok((val, der))
}

/// Boundary flux `∮_{|x|=r} ∂_r u ds`, trapezoidal in angle.
pub fn flux_integral(u: &ScalarField, r: f64) -> Result<f64> {
    let ur = circle_radial_derivative(u, r)?;
    let h = u.grid().angle_step();
    Ok(ur.iter().sum::<f64>() * r * h)
}

/// Discrete Fourier coefficients `c₀..c_{k_max}` of `φ ↦ u(r, φ)` with
/// `u = c₀ + Σ_{k≥1} (c_k e^{ikφ} + conj)`.
pub fn circle_modes(u: &ScalarField, r: f64, k_max: usize) -> Result<Vec<Complex64>> {
    let n = u.grid().n_phi();
    if k_max >= n / 2 {
        return Err(Error::TooManyModes { k_max, limit: n / 2 });
    }
    let vals = circle_values(u, r)?;
    let g = u.grid();
    Ok((0..=k_max)
        .map(|k| {
            let mut c = Complex64::new(0.0, 0.0);
            for (j, v) in vals.iter().enumerate() {
                let a = -(k as f64) * g.angle(j);
                c += Complex64::from_polar(*v, a);
            }
            c / n as f64
        })
        .collect())
}

/// Bilinear interpolation in `(ln r, φ)`.
pub fn interpolate(u: &ScalarField, x: [f64; 2]) -> Result<f64> {
    let g = u.grid();
    let r = x[0].hypot(x[1]);
    if !g.contains_radius(r) {
        return Err(Error::OutOfDomain { x: x[0], y: x[1] });
    }
    let t = g.radial_coordinate(r).clamp(0.0, (g.n_r() - 1) as f64);
    let i0 = (t.floor() as usize).min(g.n_r() - 2);
    let ti = t - i0 as f64;
    let phi = x[1].atan2(x[0]).rem_euclid(2.0 * PI);
    let s = phi / g.angle_step();
    let j0 = s.floor() as isize;
    let tj = s - j0 as f64;
    let row = |i: usize| (1.0 - tj) * u.at(i, j0) + tj * u.at(i, j0 + 1);
    Ok((1.0 - ti) * row(i0) + ti * row(i0 + 1))
}

/// Grid used by [`rescale`]: the annulus `1/16 ≤ |y| ≤ 2`.
pub fn rescale_grid() -> PolarGrid {
    PolarGrid::new(1.0 / 16.0, 2.0, 32, 32).expect("static grid parameters")
}

/// `y ↦ (4/R)² u(x + (R/4) y)` sampled on [`rescale_grid`].
pub fn rescale(u: &ScalarField, x: [f64; 2], big_r: f64) -> Result<ScalarField> {
    rescale_on(u, x, big_r, &rescale_grid())
}

/// [`rescale`] on a caller-chosen `y` grid (which must lie in `|y| ≤ 2`).
pub fn rescale_on(u: &ScalarField, x: [f64; 2], big_r: f64, ygrid: &PolarGrid) -> Result<ScalarField> {
    let g = u.grid();
    let rx = x[0].hypot(x[1]);
    if !(big_r > 0.0) || rx - 0.5 * big_r < g.r_min() || rx + 0.5 * big_r > g.r_max() || ygrid.r_max() > 2.0 {
        return Err(Error::OutOfDomain { x: x[0], y: x[1] });
    }
    let scale = (4.0 / big_r).powi(2);
    let q = 0.25 * big_r;
    let mut values = Vec::with_capacity(ygrid.len());
    for i in 0..ygrid.n_r() {
        for j in 0..ygrid.n_phi() {
            let [y1, y2] = ygrid.point(i, j);
            values.push(scale * interpolate(u, [x[0] + q * y1, x[1] + q * y2])?);
        }
    }
    ScalarField::new(ygrid.clone(), values)
}

/// Writes the `polar-field v1` text format.
pub fn write_field(u: &ScalarField, mut w: impl Write) -> Result<()> {
    let g = u.grid();
    writeln!(w, "polar-field v1 {} {} {} {}", g.r_min(), g.r_max(), g.n_r(), g.n_phi())?;
    for i in 0..g.n_r() {
        let line: Vec<String> = u.row(i).iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Reads the `polar-field v1` text format.
pub fn read_field(r: impl BufRead) -> Result<ScalarField> {
    let bad = |m: &str| Error::Config(format!("polar-field: {m}"));
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| bad("empty input"))??;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 6 || parts[0] != "polar-field" || parts[1] != "v1" {
        return Err(bad("bad header"));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
    let int = |s: &str| s.parse::<usize>().map_err(|_| bad("bad count"));
    let grid = PolarGrid::new(num(parts[2])?, num(parts[3])?, int(parts[4])?, int(parts[5])?)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.n_r() {
        let line = lines.next().ok_or_else(|| bad("missing row"))??;
        let row: Vec<f64> = line.split_whitespace().map(num).collect::<Result<_>>()?;
        if row.len() != grid.n_phi() {
            return Err(bad("row length"));
        }
        values.extend(row);
    }
    ScalarField::new(grid, values)
}
