use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

const ATOL: f64 = 1e-10;
const RTOL: f64 = 1e-11;
const EDGE: f64 = 1e-6;

type RadialRhs = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Radial solution stored as the remainder `w = u − ½ tan(θ/2) r²` at the
/// accepted integrator steps.
#[derive(Clone)]
pub struct RadialProfile {
    theta: f64,
    f: RadialRhs,
    a: f64,
    r: Vec<f64>,
    w: Vec<f64>,
    /// `w′`
    v: Vec<f64>,
    /// `w″`
    dv: Vec<f64>,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile").field("theta", &self.theta).field("steps", &self.steps()).finish()
    }
}

impl RadialProfile {
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `tan(θ/2)`, the leading coefficient.
    pub fn leading(&self) -> f64 {
        self.a
    }

    pub fn radii(&self) -> &[f64] {
        &self.r
    }

    pub fn r_min(&self) -> f64 {
        self.r[0]
    }

    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap()
    }

    pub fn steps(&self) -> usize {
        self.r.len() - 1
    }

    /// Remainder and its first two derivatives at the accepted step `k`.
    pub fn node(&self, k: usize) -> (f64, f64, f64, f64) {
        (self.r[k], self.w[k], self.v[k], self.dv[k])
    }

    /// `(w, w′, w″)` at `r`: quintic Hermite on `(w, w′, w″)` between
    /// accepted steps for `w` and `w′`, and `w″` from the equation itself.
    pub fn remainder(&self, r: f64) -> Result<(f64, f64, f64)> {
        let (lo, hi) = (self.r_min(), self.r_max());
        if !(r >= lo * (1.0 - 1e-12) && r <= hi * (1.0 + 1e-12)) {
            return Err(Error::RadiusOutOfRange { r, lo, hi });
        }
        let k = match self.r.partition_point(|&x| x <= r) {
            0 => 0,
            p => (p - 1).min(self.r.len() - 2),
        };
        let h = self.r[k + 1] - self.r[k];
        let s = ((r - self.r[k]) / h).clamp(0.0, 1.0);
        let (s2, s3) = (s * s, s * s * s);
        let (s4, s5) = (s3 * s, s3 * s2);
        // basis for y0, h y0', h² y0'' and the mirrored right end
        let b = [
            1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5,
            s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5,
            0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5),
            10.0 * s3 - 15.0 * s4 + 6.0 * s5,
            -4.0 * s3 + 7.0 * s4 - 3.0 * s5,
            0.5 * (s3 - 2.0 * s4 + s5),
        ];
        let db = [
            -30.0 * s2 + 60.0 * s3 - 30.0 * s4,
            1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4,
            0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4),
            30.0 * s2 - 60.0 * s3 + 30.0 * s4,
            -12.0 * s2 + 28.0 * s3 - 15.0 * s4,
            0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4),
        ];
        let c =
            [self.w[k], h * self.v[k], h * h * self.dv[k], self.w[k + 1], h * self.v[k + 1], h * h * self.dv[k + 1]];
        let w: f64 = b.iter().zip(&c).map(|(b, c)| b * c).sum();
        let v = db.iter().zip(&c).map(|(b, c)| b * c).sum::<f64>() / h;
        let dv = remainder_rhs(self.a, self.theta, (self.f)(r), r, v)?;
        Ok((w, v, dv))
    }

    /// `(u, u′, u″)` at `r`.
    pub fn sample(&self, r: f64) -> Result<(f64, f64, f64)> {
        let (w, v, dv) = self.remainder(r)?;
        Ok((0.5 * self.a * r * r + w, self.a * r + v, self.a + dv))
    }
}

/// `w″` from the remainder form of `u″ = tan(θ + f − arctan(u′/r))`.
///
/// Writing the argument as `θ/2 + Δ` keeps the subtraction of the leading
/// slope exact: `w″ = tan Δ (1 + a²) / (1 − a tan Δ)`.
fn remainder_rhs(a: f64, theta: f64, fr: f64, r: f64, v: f64) -> Result<f64> {
    let q = v / r;
    let delta = fr - q.atan2(1.0 + a * a + a * q);
    let arg = 0.5 * theta + delta;
    if !(arg.abs() < FRAC_PI_2 - EDGE) || !delta.is_finite() {
        return Err(Error::PhaseOutOfRange { r, value: arg });
    }
    let t = delta.tan();
    Ok(t * (1.0 + a * a) / (1.0 - a * t))
}

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Integrates the radial reduction `u″ = tan(θ + f(r) − arctan(u′/r))` from
/// `(r0, u(r0) = value0, u′(r0) = slope0)` out to `r_max`.
///
/// Steps are adaptive Dormand–Prince in `t = ln r`, with absolute tolerance
/// 1e-10 on `u′ − tan(θ/2) r`.
pub fn radial_solve<F>(theta: f64, f: F, r0: f64, value0: f64, slope0: f64, r_max: f64) -> Result<RadialProfile>
where
    F: Fn(f64) -> f64 + Send + Sync + 'static,
{
    if !(theta > 0.0 && theta < std::f64::consts::PI) || !(r0 > 0.0 && r_max > r0) {
        return Err(Error::InvalidParams(format!("theta = {theta}, r in [{r0}, {r_max}]")));
    }
    let a = (0.5 * theta).tan();
    let f: RadialRhs = Arc::new(f);
    // state (w, v) as functions of t = ln r
    let deriv = |t: f64, y: [f64; 2]| -> Result<[f64; 2]> {
        let r = t.exp();
        Ok([r * y[1], r * remainder_rhs(a, theta, f(r), r, y[1])?])
    };
    let (t0, t1) = (r0.ln(), r_max.ln());
    let mut y = [value0 - 0.5 * a * r0 * r0, slope0 - a * r0];
    let dv0 = remainder_rhs(a, theta, f(r0), r0, y[1])?;
    let mut prof = RadialProfile { theta, f: f.clone(), a, r: vec![r0], w: vec![y[0]], v: vec![y[1]], dv: vec![dv0] };
    let mut t = t0;
    let mut h = 1e-3;
    let mut k = [[0.0; 2]; 7];
    k[0] = deriv(t, y)?;
    while t < t1 {
        if t + h > t1 {
            h = t1 - t;
        }
        for s in 1..7 {
            let mut ys = y;
            for (m, km) in k.iter().enumerate().take(s) {
                ys[0] += h * A[s][m] * km[0];
                ys[1] += h * A[s][m] * km[1];
            }
            k[s] = deriv(t + C[s] * h, ys)?;
        }
        let mut y5 = y;
        let mut err: f64 = 0.0;
        for c in 0..2 {
            let mut e = 0.0;
            for s in 0..7 {
                y5[c] += h * B5[s] * k[s][c];
                e += h * (B5[s] - B4[s]) * k[s][c];
            }
            let scale = if c == 0 { ATOL + RTOL * y5[0].abs().max(y[0].abs()) } else { ATOL + RTOL * y5[1].abs() };
            err = err.max(e.abs() / scale);
        }
        if err <= 1.0 || h < 1e-12 {
            t += h;
            y = y5;
            // first-same-as-last
            k[0] = k[6];
            let r = t.exp();
            prof.r.push(r);
            prof.w.push(y[0]);
            prof.v.push(y[1]);
            prof.dv.push(k[0][1] / r);
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
    if let Some(last) = prof.r.last_mut() {
        *last = r_max;
    }
    Ok(prof)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::phase;
    use crate::phase::Sym2;
    use std::f64::consts::PI;

    #[test]
    fn invariant_ray() {
        for theta in [0.5, PI / 2.0, 2.5] {
            let a = (0.5 * theta).tan();
            let p = radial_solve(theta, |_| 0.0, 3.0, 4.5 * a, 3.0 * a, 1e4).unwrap();
            for r in [3.0, 10.0, 777.0, 1e4] {
                let (_, up, _) = p.sample(r).unwrap();
                assert!((up - a * r).abs() <= 1e-9 * a * r);
            }
        }
    }

    #[test]
    fn phase_identity_along_steps() {
        let theta = PI / 2.0;
        let f = |r: f64| r.powf(-1.5);
        let p = radial_solve(theta, f, 2.5, 0.0, 2.5, 1e4).unwrap();
        for k in 0..=p.steps() {
            let (r, _, v, dv) = p.node(k);
            let a = p.leading();
            let m = Sym2::diag(a + dv, a + v / r);
            assert!((phase(&m) - theta - f(r)).abs() < 1e-12, "step {k}");
        }
    }

    #[test]
    fn phase_out_of_range() {
        // a huge negative slope pushes the argument past π/2
        let err = radial_solve(PI / 2.0, |_| 0.0, 3.0, 0.0, -1e9, 10.0).unwrap_err();
        assert!(matches!(err, Error::PhaseOutOfRange { .. }));
    }
}
