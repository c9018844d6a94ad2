//! Fractional Laplacian and Riesz potential on the plane by polar quadrature.

pub mod quadrature;

use std::f64::consts::PI;

use statrs::function::gamma::gamma;

pub use crate::asymptotics::{RadiusSweep, SweepRow};
use crate::error::{Error, Result};
use quadrature::{disc_integral, far_integral, local_radius, near_integral, power_tail};

/// Step of the central difference in [`commutator_defect`].
pub const FD_STEP: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracParams {
    pub s: f64,
    pub c_ns: f64,
    pub quad_r_max: f64,
    pub quad_tol: f64,
}

impl FracParams {
    pub fn new(s: f64, quad_r_max: f64, quad_tol: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::InvalidParams(format!("order s = {s} must lie in (0, 1)")));
        }
        if !(quad_r_max > 0.0) || !(quad_tol > 0.0) {
            return Err(Error::InvalidParams("quad_r_max and quad_tol must be positive".into()));
        }
        Ok(FracParams { s, c_ns: frac_constant(s), quad_r_max, quad_tol })
    }

    /// Constant of the inverse operator, `c_{2,−s}`.
    pub fn riesz_constant(&self) -> f64 {
        riesz_constant(self.s)
    }

    fn exponent(&self) -> f64 {
        -2.0 - 2.0 * self.s
    }
}

/// `c_{2,s} = 4^s Γ(1+s) / (π |Γ(−s)|)`.
pub fn frac_constant(s: f64) -> f64 {
    4f64.powf(s) * gamma(1.0 + s) / (PI * gamma(-s).abs())
}

/// `c_{2,−s} = Γ(1−s) / (4^s π Γ(s))`.
pub fn riesz_constant(s: f64) -> f64 {
    gamma(1.0 - s) / (4f64.powf(s) * PI * gamma(s))
}

/// Behaviour of a function beyond the quadrature radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailModel {
    /// Vanishes outside the disc of this radius.
    Zero { support: f64 },
    /// Angular mean `coef·|y|^{−sigma}`.
    PowerLaw { coef: f64, sigma: f64 },
    /// Nothing known; accepted only if the function is already below tolerance.
    Unknown,
}

impl TailModel {
    fn product(self, other: TailModel) -> TailModel {
        use TailModel::*;
        match (self, other) {
            (Zero { support: a }, Zero { support: b }) => Zero { support: a.min(b) },
            (Zero { support }, _) | (_, Zero { support }) => Zero { support },
            (PowerLaw { coef: c1, sigma: s1 }, PowerLaw { coef: c2, sigma: s2 }) => {
                PowerLaw { coef: c1 * c2, sigma: s1 + s2 }
            }
            _ => Unknown,
        }
    }
}

/// A function on the plane with a declared tail.
pub trait PlaneFunction {
    fn value(&self, x: [f64; 2]) -> f64;

    fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let h = 1e-5;
        let dx = (self.value([x[0] + h, x[1]]) - self.value([x[0] - h, x[1]])) / (2.0 * h);
        let dy = (self.value([x[0], x[1] + h]) - self.value([x[0], x[1] - h])) / (2.0 * h);
        [dx, dy]
    }

    fn tail(&self) -> TailModel;
}

impl<T: PlaneFunction + ?Sized> PlaneFunction for &T {
    fn value(&self, x: [f64; 2]) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        (**self).gradient(x)
    }
    fn tail(&self) -> TailModel {
        (**self).tail()
    }
}

fn norm(x: [f64; 2]) -> f64 {
    x[0].hypot(x[1])
}

#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl PlaneFunction for Constant {
    fn value(&self, _: [f64; 2]) -> f64 {
        self.0
    }
    fn gradient(&self, _: [f64; 2]) -> [f64; 2] {
        [0.0; 2]
    }
    fn tail(&self) -> TailModel {
        if self.0 == 0.0 {
            TailModel::Zero { support: 0.0 }
        } else {
            TailModel::PowerLaw { coef: self.0, sigma: 0.0 }
        }
    }
}

/// `amp·exp(−|y−c|²/w²)`.
#[derive(Debug, Clone, Copy)]
pub struct Gaussian {
    pub center: [f64; 2],
    pub width: f64,
    pub amp: f64,
}

impl Gaussian {
    pub fn unit() -> Self {
        Gaussian { center: [0.0; 2], width: 1.0, amp: 1.0 }
    }
}

impl PlaneFunction for Gaussian {
    fn value(&self, x: [f64; 2]) -> f64 {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        self.amp * (-(d[0] * d[0] + d[1] * d[1]) / (self.width * self.width)).exp()
    }
    fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let k = -2.0 * self.value(x) / (self.width * self.width);
        [k * (x[0] - self.center[0]), k * (x[1] - self.center[1])]
    }
    fn tail(&self) -> TailModel {
        // e^{−42} is below any tolerance in use
        TailModel::Zero { support: norm(self.center) + 6.5 * self.width }
    }
}

/// `amp·exp(1 − 1/(1 − t²))`, `t = |y−c|/radius`, supported in `t < 1`.
#[derive(Debug, Clone, Copy)]
pub struct Bump {
    pub center: [f64; 2],
    pub radius: f64,
    pub amp: f64,
}

impl Bump {
    /// Centred bump of unit mass.
    pub fn unit_mass(radius: f64) -> Self {
        let b = Bump { center: [0.0; 2], radius, amp: 1.0 };
        let mass = disc_integral(radius, |y| b.value(y));
        Bump { amp: 1.0 / mass, ..b }
    }
}

impl PlaneFunction for Bump {
    fn value(&self, x: [f64; 2]) -> f64 {
        let t2 = ((x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2)) / (self.radius * self.radius);
        if t2 >= 1.0 {
            0.0
        } else {
            self.amp * (1.0 - 1.0 / (1.0 - t2)).exp()
        }
    }
    fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        let r2 = self.radius * self.radius;
        let t2 = (d[0] * d[0] + d[1] * d[1]) / r2;
        if t2 >= 1.0 {
            return [0.0; 2];
        }
        let k = -2.0 * self.value(x) / ((1.0 - t2).powi(2) * r2);
        [k * d[0], k * d[1]]
    }
    fn tail(&self) -> TailModel {
        TailModel::Zero { support: norm(self.center) + self.radius }
    }
}

/// `(1 + |y|²)^{−σ/2}`.
#[derive(Debug, Clone, Copy)]
pub struct PowerTail {
    pub sigma: f64,
}

impl PlaneFunction for PowerTail {
    fn value(&self, x: [f64; 2]) -> f64 {
        (1.0 + x[0] * x[0] + x[1] * x[1]).powf(-0.5 * self.sigma)
    }
    fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let k = -self.sigma * (1.0 + x[0] * x[0] + x[1] * x[1]).powf(-0.5 * self.sigma - 1.0);
        [k * x[0], k * x[1]]
    }
    fn tail(&self) -> TailModel {
        TailModel::PowerLaw { coef: 1.0, sigma: self.sigma }
    }
}

/// `∂_axis u`.
pub struct Derivative<F> {
    pub inner: F,
    pub axis: usize,
}

impl<F: PlaneFunction> PlaneFunction for Derivative<F> {
    fn value(&self, x: [f64; 2]) -> f64 {
        self.inner.gradient(x)[self.axis]
    }
    fn tail(&self) -> TailModel {
        match self.inner.tail() {
            TailModel::PowerLaw { sigma, .. } => TailModel::PowerLaw { coef: 0.0, sigma: sigma + 1.0 },
            t => t,
        }
    }
}

/// `y_axis · u(y)`.
pub struct TimesCoordinate<F> {
    pub inner: F,
    pub axis: usize,
}

impl<F: PlaneFunction> PlaneFunction for TimesCoordinate<F> {
    fn value(&self, x: [f64; 2]) -> f64 {
        x[self.axis] * self.inner.value(x)
    }
    fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let g = self.inner.gradient(x);
        let mut out = [x[self.axis] * g[0], x[self.axis] * g[1]];
        out[self.axis] += self.inner.value(x);
        out
    }
    fn tail(&self) -> TailModel {
        match self.inner.tail() {
            TailModel::PowerLaw { sigma, .. } => TailModel::PowerLaw { coef: 0.0, sigma: sigma - 1.0 },
            t => t,
        }
    }
}

pub struct Product<F, G>(pub F, pub G);

impl<F: PlaneFunction, G: PlaneFunction> PlaneFunction for Product<F, G> {
    fn value(&self, x: [f64; 2]) -> f64 {
        self.0.value(x) * self.1.value(x)
    }
    fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        let (a, b) = (self.0.value(x), self.1.value(x));
        let (ga, gb) = (self.0.gradient(x), self.1.gradient(x));
        [ga[0] * b + a * gb[0], ga[1] * b + a * gb[1]]
    }
    fn tail(&self) -> TailModel {
        self.0.tail().product(self.1.tail())
    }
}

/// `α·u + β·v`.
pub struct Combination<F, G> {
    pub alpha: f64,
    pub u: F,
    pub beta: f64,
    pub v: G,
}

impl<F: PlaneFunction, G: PlaneFunction> PlaneFunction for Combination<F, G> {
    fn value(&self, x: [f64; 2]) -> f64 {
        self.alpha * self.u.value(x) + self.beta * self.v.value(x)
    }
    fn tail(&self) -> TailModel {
        use TailModel::*;
        match (self.u.tail(), self.v.tail()) {
            (Zero { support: a }, Zero { support: b }) => Zero { support: a.max(b) },
            (PowerLaw { coef, sigma }, Zero { .. }) => PowerLaw { coef: self.alpha * coef, sigma },
            (Zero { .. }, PowerLaw { coef, sigma }) => PowerLaw { coef: self.beta * coef, sigma },
            (PowerLaw { coef: c1, sigma: s1 }, PowerLaw { coef: c2, sigma: s2 }) if s1 == s2 => {
                PowerLaw { coef: self.alpha * c1 + self.beta * c2, sigma: s1 }
            }
            (PowerLaw { coef: c1, sigma: s1 }, PowerLaw { coef: c2, sigma: s2 }) => {
                if s1 < s2 {
                    PowerLaw { coef: self.alpha * c1, sigma: s1 }
                } else {
                    PowerLaw { coef: self.beta * c2, sigma: s2 }
                }
            }
            _ => Unknown,
        }
    }
}

/// Radial function given by samples, interpolated with a natural cubic
/// spline of the even extension; the tail model takes over past the last node.
#[derive(Debug, Clone)]
pub struct RadialSpline {
    r: Vec<f64>,
    v: Vec<f64>,
    m: Vec<f64>,
    tail: TailModel,
}

impl RadialSpline {
    /// `radii` strictly increasing from 0.
    pub fn new(radii: &[f64], values: &[f64], tail: TailModel) -> Result<Self> {
        if radii.len() < 3 || radii.len() != values.len() {
            return Err(Error::ShapeMismatch(format!("{} radii, {} values", radii.len(), values.len())));
        }
        if radii[0] != 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParams("spline radii must start at 0 and increase".into()));
        }
        let r: Vec<f64> = radii.iter().rev().map(|x| -x).chain(radii[1..].iter().cloned()).collect();
        let v: Vec<f64> = values.iter().rev().chain(values[1..].iter()).cloned().collect();
        let m = natural_second_derivatives(&r, &v);
        Ok(RadialSpline { r, v, m, tail })
    }

    pub fn eval(&self, rho: f64) -> f64 {
        let last = *self.r.last().unwrap();
        if rho > last {
            return match self.tail {
                TailModel::PowerLaw { coef, sigma } => coef * rho.powf(-sigma),
                _ => 0.0,
            };
        }
        let k = self.r.partition_point(|x| *x <= rho).clamp(1, self.r.len() - 1) - 1;
        let h = self.r[k + 1] - self.r[k];
        let a = (self.r[k + 1] - rho) / h;
        let b = 1.0 - a;
        a * self.v[k]
            + b * self.v[k + 1]
            + ((a * a * a - a) * self.m[k] + (b * b * b - b) * self.m[k + 1]) * h * h / 6.0
    }
}

fn natural_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    let mut c = vec![0.0; n];
    // Thomas sweep on the interior rows
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        let rhs = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
        let diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
        c[i] = h1 / diag;
        m[i] = (rhs - h0 * m[i - 1]) / diag;
    }
    for i in (1..n - 1).rev() {
        m[i] -= c[i] * m[i + 1];
    }
    m
}

impl PlaneFunction for RadialSpline {
    fn value(&self, x: [f64; 2]) -> f64 {
        self.eval(norm(x))
    }
    fn tail(&self) -> TailModel {
        self.tail
    }
}

/// `∫_{|y|>R} u(y) |x−y|^e dy` from the tail model, with `|x−y|^e ≈ |y|^e`
/// except for a constant tail.
fn tail_closure(u: &dyn PlaneFunction, tail: TailModel, x: [f64; 2], e: f64, r: f64, p: &FracParams) -> Result<f64> {
    match tail {
        TailModel::Zero { support } if support <= r => Ok(0.0),
        TailModel::PowerLaw { coef, sigma: 0.0 } => Ok(coef * ball_exterior(x, e, r)),
        TailModel::PowerLaw { coef, sigma } => {
            if sigma <= e + 2.0 {
                return Err(Error::InvalidParams(format!("tail |y|^-{sigma} is not integrable against the kernel")));
            }
            Ok(power_tail(coef, sigma, e, r))
        }
        _ => {
            let probe = circle_max(u, r);
            if probe > p.quad_tol {
                return Err(Error::TailModelMissing { value: probe });
            }
            Ok(0.0)
        }
    }
}

/// `∫_{|y|>R} |x−y|^e dy` for `|x| < R`, `e < −2`, through second order in `|x|/R`.
fn ball_exterior(x: [f64; 2], e: f64, r: f64) -> f64 {
    let x2 = x[0] * x[0] + x[1] * x[1];
    2.0 * PI * (r.powf(e + 2.0) / -(e + 2.0) + 0.25 * e * e * x2 * r.powf(e) / -e)
}

/// Grid radius: a factor `(v − u(y))` with `v = 0` and compact `u` confines the integrand.
fn grid_extent(factors: &[(f64, TailModel)], p: &FracParams) -> f64 {
    factors
        .iter()
        .filter_map(|(v, t)| match t {
            TailModel::Zero { support } if *v == 0.0 && *support <= p.quad_r_max => Some(*support),
            _ => None,
        })
        .fold(p.quad_r_max, f64::min)
}

fn circle_max(u: &dyn PlaneFunction, r: f64) -> f64 {
    (0..32)
        .map(|k| {
            let (sn, cs) = (PI * k as f64 / 16.0).sin_cos();
            u.value([r * cs, r * sn]).abs()
        })
        .fold(0.0, f64::max)
}

fn check_point(x: [f64; 2], p: &FracParams) -> Result<()> {
    if norm(x) + local_radius(x) > 0.25 * p.quad_r_max {
        return Err(Error::InvalidParams(format!(
            "evaluation point at |x| = {} is too close to quad_r_max = {}",
            norm(x),
            p.quad_r_max
        )));
    }
    Ok(())
}

fn shift(x: [f64; 2], z: [f64; 2], sign: f64) -> [f64; 2] {
    [x[0] + sign * z[0], x[1] + sign * z[1]]
}

/// `(−Δ)^s u(x)`.
pub fn frac_laplacian(u: &dyn PlaneFunction, x: [f64; 2], p: &FracParams) -> Result<f64> {
    check_point(x, p)?;
    let tail = u.tail();
    let e = p.exponent();
    let rho = local_radius(x);
    let ux = u.value(x);
    let near = near_integral(rho, e, 2.0, |z| ux - 0.5 * (u.value(shift(x, z, 1.0)) + u.value(shift(x, z, -1.0))));
    let r = grid_extent(&[(ux, tail)], p);
    let far = far_integral(x, rho, e, r, |y| ux - u.value(y));
    let closure = if ux == 0.0 { 0.0 } else { ux * ball_exterior(x, e, r) } - tail_closure(u, tail, x, e, r, p)?;
    Ok(p.c_ns * (near + far + closure))
}

/// `(−Δ)^{−s} f(x) = c_{2,−s} ∫ f(y) |x−y|^{2s−2} dy`.
pub fn riesz_potential(f: &dyn PlaneFunction, x: [f64; 2], p: &FracParams) -> Result<f64> {
    check_point(x, p)?;
    let tail = f.tail();
    let e = 2.0 * p.s - 2.0;
    let rho = local_radius(x);
    let near = near_integral(rho, e, 0.0, |z| 0.5 * (f.value(shift(x, z, 1.0)) + f.value(shift(x, z, -1.0))));
    let r = grid_extent(&[(0.0, tail)], p);
    let far = far_integral(x, rho, e, r, |y| f.value(y));
    Ok(p.riesz_constant() * (near + far + tail_closure(f, tail, x, e, r, p)?))
}

/// `∫ (u₁(x)−u₁(y))(u₂(x)−u₂(y)) |x−y|^{−2−2s} dy`.
pub fn cross_term(u1: &dyn PlaneFunction, u2: &dyn PlaneFunction, x: [f64; 2], p: &FracParams) -> Result<f64> {
    check_point(x, p)?;
    let (t1, t2) = (u1.tail(), u2.tail());
    let e = p.exponent();
    let rho = local_radius(x);
    let (a, b) = (u1.value(x), u2.value(x));
    let near = near_integral(rho, e, 2.0, |z| {
        let (z1, z2) = (shift(x, z, 1.0), shift(x, z, -1.0));
        0.5 * ((a - u1.value(z1)) * (b - u2.value(z1)) + (a - u1.value(z2)) * (b - u2.value(z2)))
    });
    let r = grid_extent(&[(a, t1), (b, t2)], p);
    let far = far_integral(x, rho, e, r, |y| (a - u1.value(y)) * (b - u2.value(y)));
    let prod = Product(u1, u2);
    let mut closure = tail_closure(&prod, t1.product(t2), x, e, r, p)?;
    if a != 0.0 {
        closure -= a * tail_closure(u2, t2, x, e, r, p)?;
    }
    if b != 0.0 {
        closure -= b * tail_closure(u1, t1, x, e, r, p)?;
    }
    if a * b != 0.0 {
        closure += a * b * ball_exterior(x, e, r);
    }
    Ok(near + far + closure)
}

/// `(−Δ)^s(u₁u₂) − u₁(−Δ)^s u₂ − u₂(−Δ)^s u₁ + c_{2,s}·I₁₂` at `x`.
pub fn product_rule_defect(u1: &dyn PlaneFunction, u2: &dyn PlaneFunction, x: [f64; 2], p: &FracParams) -> Result<f64> {
    let whole = frac_laplacian(&Product(u1, u2), x, p)?;
    let l1 = frac_laplacian(u1, x, p)?;
    let l2 = frac_laplacian(u2, x, p)?;
    let cross = cross_term(u1, u2, x, p)?;
    Ok(whole - u1.value(x) * l2 - u2.value(x) * l1 + p.c_ns * cross)
}

/// `(−Δ)^s(∂_k u)(x)` minus a central difference of `(−Δ)^s u` along axis `k`.
pub fn commutator_defect(u: &dyn PlaneFunction, k: usize, x: [f64; 2], p: &FracParams) -> Result<f64> {
    if k > 1 {
        return Err(Error::InvalidParams(format!("axis {k} out of range")));
    }
    let lhs = frac_laplacian(&Derivative { inner: u, axis: k }, x, p)?;
    let mut xp = x;
    let mut xm = x;
    xp[k] += FD_STEP;
    xm[k] -= FD_STEP;
    let fd = (frac_laplacian(u, xp, p)? - frac_laplacian(u, xm, p)?) / (2.0 * FD_STEP);
    Ok(lhs - fd)
}

/// Tabulates `(−Δ)^{−s} f` for radial `f` as a [`RadialSpline`] with the
/// point-mass tail `c_{2,−s}·mass·r^{2s−2}`.
pub fn riesz_profile(f: &dyn PlaneFunction, radii: &[f64], p: &FracParams) -> Result<RadialSpline> {
    let support = match f.tail() {
        TailModel::Zero { support } => support,
        _ => return Err(Error::InvalidParams("riesz_profile needs compact support".into())),
    };
    let mass = disc_integral(support, |y| f.value(y));
    let values = radii.iter().map(|&r| riesz_potential(f, [r, 0.0], p)).collect::<Result<Vec<_>>>()?;
    let tail = TailModel::PowerLaw { coef: p.riesz_constant() * mass, sigma: 2.0 - 2.0 * p.s };
    RadialSpline::new(radii, &values, tail)
}

#[cfg(test)]
mod decay_tests;

#[cfg(test)]
mod tests {
    use super::*;

    fn params(s: f64) -> FracParams {
        FracParams::new(s, 1e4, 1e-8).unwrap()
    }

    // ₁F₁(a; 1; −z) by the series, switching to e^{−z}₁F₁(1−a; 1; z) for large z
    fn hyp1f1_neg(a: f64, z: f64) -> f64 {
        let series = |a: f64, z: f64| {
            let (mut term, mut sum) = (1.0, 1.0);
            for n in 0..2000 {
                let k = n as f64;
                term *= (a + k) * z / ((1.0 + k) * (1.0 + k));
                sum += term;
                if term.abs() < 1e-17 * sum.abs() {
                    break;
                }
            }
            sum
        };
        if z < 4.0 {
            series(a, -z)
        } else {
            (-z).exp() * series(1.0 - a, z)
        }
    }

    // (−Δ)^s e^{−|x|²} in the plane
    fn gaussian_exact(s: f64, x: [f64; 2]) -> f64 {
        4f64.powf(s) * gamma(1.0 + s) * hyp1f1_neg(1.0 + s, x[0] * x[0] + x[1] * x[1])
    }

    #[test]
    fn constants_match_known_values() {
        // c_{2,1/2} = 1/(2π), c_{2,−1/2} = 1/(2π)
        assert!((frac_constant(0.5) - 0.5 / PI).abs() < 1e-14);
        assert!((riesz_constant(0.5) - 0.5 / PI).abs() < 1e-14);
        assert!(FracParams::new(1.0, 10.0, 1e-6).is_err());
        assert!(FracParams::new(0.5, 0.0, 1e-6).is_err());
    }

    #[test]
    fn hypergeometric_branches_agree() {
        let a = 1.3;
        let direct = |z: f64| {
            let (mut term, mut sum) = (1.0, 1.0);
            for n in 0..400 {
                let k = n as f64;
                term *= (a + k) * -z / ((1.0 + k) * (1.0 + k));
                sum += term;
            }
            sum
        };
        assert!((hyp1f1_neg(a, 4.5) - direct(4.5)).abs() < 1e-10);
    }

    #[test]
    fn constant_is_annihilated() {
        let p = params(0.3);
        let v = frac_laplacian(&Constant(2.5), [0.7, -0.2], &p).unwrap();
        assert!(v.abs() < 1e-8, "{v}");
    }

    #[test]
    fn gaussian_matches_closed_form() {
        for s in [0.1, 0.3, 0.5, 0.8] {
            let p = params(s);
            for x in [[0.0, 0.0], [0.5, 0.0], [1.2, -0.7], [4.0, 3.0]] {
                let got = frac_laplacian(&Gaussian::unit(), x, &p).unwrap();
                let want = gaussian_exact(s, x);
                assert!((got - want).abs() < 1e-6 * (1.0 + want.abs()), "s={s} x={x:?} {got} {want}");
            }
        }
    }

    #[test]
    fn scaled_gaussian_matches_closed_form() {
        // e^{−|y|²/w²} = g(y/w) so the operator picks up w^{−2s}
        let (s, w) = (0.4, 0.6);
        let p = params(s);
        let g = Gaussian { center: [0.0; 2], width: w, amp: 1.0 };
        let x = [0.3, 0.2];
        let want = w.powf(-2.0 * s) * gaussian_exact(s, [x[0] / w, x[1] / w]);
        let got = frac_laplacian(&g, x, &p).unwrap();
        assert!((got - want).abs() < 1e-6 * want.abs());
    }

    #[test]
    fn linearity() {
        let p = params(0.25);
        let (u, v) = (Gaussian::unit(), Bump { center: [0.5, 0.0], radius: 1.5, amp: 1.0 });
        let x = [0.2, 0.4];
        let combo = Combination { alpha: 2.0, u, beta: -0.5, v };
        let lhs = frac_laplacian(&combo, x, &p).unwrap();
        let rhs = 2.0 * frac_laplacian(&u, x, &p).unwrap() - 0.5 * frac_laplacian(&v, x, &p).unwrap();
        assert!((lhs - rhs).abs() < 1e-8);
    }

    #[test]
    fn unknown_tail_is_rejected_when_large() {
        struct Slow;
        impl PlaneFunction for Slow {
            fn value(&self, x: [f64; 2]) -> f64 {
                1.0 / (1.0 + norm(x))
            }
            fn tail(&self) -> TailModel {
                TailModel::Unknown
            }
        }
        let p = FracParams::new(0.3, 100.0, 1e-6).unwrap();
        assert!(matches!(frac_laplacian(&Slow, [0.0, 0.0], &p), Err(Error::TailModelMissing { .. })));
    }

    #[test]
    fn riesz_of_zero_and_point_mass() {
        let p = params(0.3);
        assert_eq!(riesz_potential(&Constant(0.0), [1.0, 0.0], &p).unwrap(), 0.0);
        let f = Bump::unit_mass(1.0);
        let x = [50.0, 0.0];
        let got = riesz_potential(&f, x, &p).unwrap();
        let want = p.riesz_constant() * 50f64.powf(2.0 * 0.3 - 2.0);
        assert!((got / want - 1.0).abs() < 0.02, "{got} {want}");
    }

    #[test]
    fn riesz_inversion() {
        let p = params(0.3);
        let f = Bump::unit_mass(1.0);
        let mut radii: Vec<f64> = (0..200).map(|k| 0.01 * k as f64).collect();
        radii.extend((0..120).map(|k| 2.0 * 100f64.powf(k as f64 / 119.0)));
        let h = riesz_profile(&f, &radii, &p).unwrap();
        for x in [[0.0, 0.0], [0.3, 0.1], [0.5, 0.0]] {
            let got = frac_laplacian(&h, x, &p).unwrap();
            let want = f.value(x);
            assert!((got / want - 1.0).abs() < 0.05, "{x:?} {got} {want}");
        }
    }

    #[test]
    fn product_rule_with_constant_factor() {
        let p = params(0.2);
        let d = product_rule_defect(&Constant(1.0), &Gaussian::unit(), [0.3, 0.0], &p).unwrap();
        assert!(d.abs() < 1e-8);
        assert!(cross_term(&Gaussian::unit(), &Constant(3.0), [0.3, 0.0], &p).unwrap().abs() < 1e-14);
    }

    #[test]
    fn product_of_gaussians() {
        let p = params(0.2);
        let g = Gaussian::unit();
        let d = product_rule_defect(&g, &g, [0.0, 0.0], &p).unwrap();
        assert!(d.abs() < 1e-6, "{d}");
        // the product e^{−2|y|²} has its own closed form
        let sq = frac_laplacian(&Product(g, g), [0.0, 0.0], &p).unwrap();
        let want = 2f64.powf(0.2) * gaussian_exact(0.2, [0.0, 0.0]);
        assert!((sq - want).abs() < 1e-6 * want);
    }

    #[test]
    fn disjoint_bumps_in_the_gap() {
        let p = params(0.3);
        let a = Bump { center: [-2.0, 0.0], radius: 1.0, amp: 1.0 };
        let b = Bump { center: [2.0, 0.0], radius: 1.0, amp: 1.0 };
        let d = product_rule_defect(&a, &b, [0.0, 0.0], &p).unwrap();
        assert!(d.abs() < p.quad_tol, "{d}");
    }

    #[test]
    fn commutator_on_gaussian() {
        let (s, x) = (0.3, [0.5, 0.0]);
        let p = params(s);
        let g = Gaussian::unit();
        // central-difference truncation h²/6·|∂₁³F| with F from the closed form
        let f = |t: f64| gaussian_exact(s, [t, 0.0]);
        let k = 0.05;
        let third = (f(x[0] + 2.0 * k) - 2.0 * f(x[0] + k) + 2.0 * f(x[0] - k) - f(x[0] - 2.0 * k)) / (2.0 * k.powi(3));
        let bound = FD_STEP * FD_STEP / 6.0 * third.abs() * 1.2 + p.quad_tol;
        let d = commutator_defect(&g, 0, x, &p).unwrap();
        assert!(d.abs() < bound, "{d} {bound}");
        // even in x₁, evaluated on the x₂ axis
        let lhs = frac_laplacian(&Derivative { inner: g, axis: 0 }, [0.0, 0.7], &p).unwrap();
        assert!(lhs.abs() < 1e-10);
        let t = TimesCoordinate { inner: g, axis: 1 };
        let d = commutator_defect(&t, 1, [0.2, 0.3], &p).unwrap();
        assert!(d.abs() < 1e-3, "{d}");
    }

    #[test]
    fn spline_reproduces_cubic_data() {
        let radii: Vec<f64> = (0..40).map(|k| 0.1 * k as f64).collect();
        let vals: Vec<f64> = radii.iter().map(|r| (-r * r).exp()).collect();
        let sp = RadialSpline::new(&radii, &vals, TailModel::Zero { support: 3.9 }).unwrap();
        for r in [0.0, 0.05, 1.234, 3.0] {
            assert!((sp.eval(r) - (-r * r).exp()).abs() < 1e-4, "{r}");
        }
        assert_eq!(sp.eval(5.0), 0.0);
    }

    #[test]
    fn sweep_slopes_and_csv() {
        let radii = [10.0, 20.0, 40.0, 80.0, 160.0];
        let sweep = RadiusSweep::from_values(&radii, &radii.map(|r: f64| 3.0 * r.powf(-1.5)));
        for row in &sweep.rows {
            assert!((row.running_slope + 1.5).abs() < 1e-12);
        }
        let fit = sweep.fit().unwrap();
        assert!((fit.slope + 1.5).abs() < 1e-8);
        let csv = sweep.to_csv();
        assert!(csv.starts_with("r,value,running_slope\n"));
        assert_eq!(csv.lines().count(), 6);
    }
}
