//! Closed-form oracle families with known expansions.
//!
//! Every family is `½ tan(θ/2)|x|²` plus a correction `g`, which is either
//! radial (`u₀`, `u₃`) or of the form `(x₁+x₂)·h(|x|)` (`u₁`, `u₂`).
//! Hessians are analytic, so `f = phase(D²u) − θ` is exact up to roundoff.

use std::sync::Arc;

use serde::Serialize;

use crate::asymptotics::Expansion;
use crate::error::{Error, Result};
use crate::fields::{hessian, PolarGrid, ScalarField};
use crate::phase::{phase, Sym2};
use crate::solver::{radial_solve, RadialProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    U0,
    U1,
    U2,
    U3,
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "u0" => Ok(Family::U0),
            "u1" => Ok(Family::U1),
            "u2" => Ok(Family::U2),
            "u3" => Ok(Family::U3),
            _ => Err(Error::Config(format!("unknown oracle family '{s}'"))),
        }
    }
}

/// Which expansion theorem a family exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `β > 2`: full expansion with `b`, `c`, `d`
    FastDecay,
    /// `β ≤ 2`: remainder grows like `|x|^{2−β}`, no `b`/`d` fit
    SlowDecay,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleSpec {
    pub family: Family,
    pub theta: f64,
    /// `f64::INFINITY` drops `g₀` from `u₀`
    pub beta: f64,
    pub d: f64,
    pub c: f64,
    /// radius `ρ`: corrections are blended in over `ρ/2 ≤ |x| ≤ ρ`
    pub smoothing: Option<f64>,
}

impl OracleSpec {
    pub fn new(family: Family, theta: f64, beta: f64) -> Self {
        OracleSpec { family, theta, beta, d: 0.0, c: 0.0, smoothing: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta < std::f64::consts::PI) {
            return Err(Error::InvalidParams(format!("theta = {} not in (0, pi)", self.theta)));
        }
        let ok = match self.family {
            Family::U0 => self.beta > 2.0,
            Family::U1 => self.beta == 3.0,
            Family::U2 => self.beta == 1.0,
            Family::U3 => self.beta > 0.0 && self.beta <= 2.0,
        };
        if !ok {
            return Err(Error::InvalidParams(format!("beta = {} not allowed for {:?}", self.beta, self.family)));
        }
        if matches!(self.family, Family::U1 | Family::U2 | Family::U3) && (self.d != 0.0 || self.c != 0.0) {
            return Err(Error::InvalidParams(format!("{:?} fixes d = c = 0", self.family)));
        }
        if let Some(rho) = self.smoothing {
            if !(rho > 0.0) {
                return Err(Error::InvalidParams("smoothing radius must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        if self.beta > 2.0 {
            Regime::FastDecay
        } else {
            Regime::SlowDecay
        }
    }

    /// Claimed `(σ, μ)`: `σ = min(1, β−2)`, `μ = [β = 3]` above `β = 2`;
    /// growth `|x|^{2−β}` with `μ = [β]` (`β ≤ 1`) or `2([β]−1)` (`1 < β ≤ 2`) below.
    pub fn claimed_rate(&self) -> (f64, u32) {
        let b = self.beta;
        if b > 2.0 {
            (1f64.min(b - 2.0), u32::from(b == 3.0))
        } else if b <= 1.0 {
            (b - 2.0, b.floor() as u32)
        } else {
            (b - 2.0, 2 * (b.floor() as u32 - 1))
        }
    }

    pub fn truth(&self) -> Expansion {
        let (sigma, mu) = self.claimed_rate();
        Expansion { a: Sym2::scalar((0.5 * self.theta).tan()), b: [0.0, 0.0], c: self.c, d: self.d, sigma, mu }
    }
}

/// C∞ step: 0 for `t ≤ 0`, 1 for `t ≥ 1`; returns value and two derivatives.
pub fn smooth_step(t: f64) -> (f64, f64, f64) {
    if t <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if t >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    // ψ(t) = e^{−1/t}
    let psi = |t: f64| {
        let p = (-1.0 / t).exp();
        (p, p / (t * t), p * (1.0 - 2.0 * t) / t.powi(4))
    };
    let (p, p1, p2) = psi(t);
    let (q, q1, q2) = psi(1.0 - t);
    let (q1, q2) = (-q1, q2);
    let s = p + q;
    let s1 = p1 + q1;
    let s2 = p2 + q2;
    let v = p / s;
    let v1 = (p1 - v * s1) / s;
    let v2 = (p2 - 2.0 * v1 * s1 - v * s2) / s;
    (v, v1, v2)
}

/// Radial function with two derivatives.
type Radial3 = (f64, f64, f64);

fn product3(a: Radial3, b: Radial3) -> Radial3 {
    (a.0 * b.0, a.1 * b.0 + a.0 * b.1, a.2 * b.0 + 2.0 * a.1 * b.1 + a.0 * b.2)
}

/// Analytic oracle function.
#[derive(Debug, Clone)]
pub struct OracleFunction {
    spec: OracleSpec,
    a: f64,
    profile: Option<Arc<RadialProfile>>,
}

impl OracleFunction {
    /// Builds the family; `u₃` integrates its radial profile over `[r_lo, r_hi]`.
    pub fn new(spec: &OracleSpec, r_lo: f64, r_hi: f64) -> Result<Self> {
        spec.validate()?;
        if spec.smoothing.is_none() && r_lo <= 2.0 {
            return Err(Error::DomainTooSmall(format!("r_min = {r_lo} must exceed 2 without smoothing")));
        }
        let a = (0.5 * spec.theta).tan();
        let profile = match spec.family {
            Family::U3 => Some(Arc::new(u3_profile(spec, r_lo, r_hi)?)),
            _ => None,
        };
        Ok(OracleFunction { spec: spec.clone(), a, profile })
    }

    pub fn spec(&self) -> &OracleSpec {
        &self.spec
    }

    pub fn profile(&self) -> Option<&RadialProfile> {
        self.profile.as_deref()
    }

    fn blend(&self, r: f64) -> Radial3 {
        match self.spec.smoothing {
            None => (1.0, 0.0, 0.0),
            Some(rho) => {
                let (v, d1, d2) = smooth_step((r - 0.5 * rho) / (0.5 * rho));
                let k = 2.0 / rho;
                (v, d1 * k, d2 * k * k)
            }
        }
    }

    /// Radial part `G(r)` (for `u₀`, `u₃`) or the factor `h(r)` of `(x₁+x₂)h(r)`.
    fn correction(&self, r: f64) -> Result<Radial3> {
        let b = self.spec.beta;
        let raw = match self.spec.family {
            Family::U0 if b.is_infinite() => (0.0, 0.0, 0.0),
            Family::U0 => {
                let p = 2.0 - b;
                (r.powf(p), p * r.powf(p - 1.0), p * (p - 1.0) * r.powf(p - 2.0))
            }
            Family::U1 => {
                let l = r.ln();
                (l / (r * r), (1.0 - 2.0 * l) / r.powi(3), (6.0 * l - 5.0) / r.powi(4))
            }
            Family::U2 => (r.ln(), 1.0 / r, -1.0 / (r * r)),
            Family::U3 => return self.profile.as_ref().expect("u3 profile").remainder(r),
        };
        Ok(product3(raw, self.blend(r)))
    }

    fn is_radial(&self) -> bool {
        matches!(self.spec.family, Family::U0 | Family::U3)
    }

    /// Remainder `g = u − model`.
    pub fn remainder(&self, x: [f64; 2]) -> Result<f64> {
        let r = x[0].hypot(x[1]);
        let (g, _, _) = self.correction(r)?;
        Ok(if self.is_radial() { g } else { (x[0] + x[1]) * g })
    }

    pub fn value(&self, x: [f64; 2]) -> Result<f64> {
        let r2 = x[0] * x[0] + x[1] * x[1];
        let d = self.spec.d;
        let base = 0.5 * self.a * r2 + 0.5 * d * ((1.0 + self.a * self.a) * r2).ln() + self.spec.c;
        Ok(base + self.remainder(x)?)
    }

    pub fn hessian(&self, x: [f64; 2]) -> Result<Sym2> {
        let r = x[0].hypot(x[1]);
        let (_, h1, h2) = self.correction(r)?;
        let (a, d) = (self.a, self.spec.d);
        let log_part = Sym2::diag(-d / (r * r), d / (r * r)).rotate(x[1].atan2(x[0]));
        let g = if self.is_radial() {
            Sym2::diag(h2, h1 / r).rotate(x[1].atan2(x[0]))
        } else {
            // D²(S h) with S = x₁ + x₂
            let s = x[0] + x[1];
            let q = h1 / r;
            let w = (h2 - q) / (r * r);
            Sym2::new(
                2.0 * q * x[0] + s * (q + w * x[0] * x[0]),
                q * (x[0] + x[1]) + s * w * x[0] * x[1],
                2.0 * q * x[1] + s * (q + w * x[1] * x[1]),
            )
        };
        Ok(Sym2::scalar(a) + log_part + g)
    }

    /// `phase(D²u) − θ`.
    pub fn rhs(&self, x: [f64; 2]) -> Result<f64> {
        Ok(phase(&self.hessian(x)?) - self.spec.theta)
    }
}

/// Slope-matched start at `r0` from the linearized radial equation
/// `w″ + w′/r = (1 + a²) r^{−β}`.
fn u3_profile(spec: &OracleSpec, r_lo: f64, r_hi: f64) -> Result<RadialProfile> {
    let a = (0.5 * spec.theta).tan();
    let k = 1.0 + a * a;
    let b = spec.beta;
    let r0 = r_lo;
    let (w0, v0) = if b == 2.0 {
        let l = r0.ln();
        (0.5 * k * l * l, k * l / r0)
    } else {
        let p = 2.0 - b;
        (k / (p * p) * r0.powf(p), k / p * r0.powf(p - 1.0))
    };
    let smoothing = spec.smoothing;
    let f = move |r: f64| {
        let chi = match smoothing {
            None => 1.0,
            Some(rho) => smooth_step((r - 0.5 * rho) / (0.5 * rho)).0,
        };
        chi * r.powf(-b)
    };
    radial_solve(spec.theta, f, r0, 0.5 * a * r0 * r0 + w0, a * r0 + v0, r_hi)
}

/// Sampled oracle.
#[derive(Debug, Clone)]
pub struct OracleField {
    pub u: ScalarField,
    pub f: ScalarField,
    pub truth: Expansion,
    pub regime: Regime,
    pub function: OracleFunction,
}

/// Samples `u`, `f = phase(D²u) − θ` and the true expansion on `grid`.
pub fn oracle_field(spec: &OracleSpec, grid: &PolarGrid) -> Result<OracleField> {
    let function = OracleFunction::new(spec, grid.r_min(), grid.r_max())?;
    let n = grid.len();
    let mut u = Vec::with_capacity(n);
    let mut f = Vec::with_capacity(n);
    for i in 0..grid.n_r() {
        for j in 0..grid.n_phi() {
            let x = grid.point(i, j);
            u.push(function.value(x)?);
            f.push(function.rhs(x)?);
        }
    }
    Ok(OracleField {
        u: ScalarField::new(grid.clone(), u)?,
        f: ScalarField::new(grid.clone(), f)?,
        truth: spec.truth(),
        regime: spec.regime(),
        function,
    })
}

impl OracleField {
    /// `max |phase(D²_h u) − θ − f|` over interior rows, with the grid
    /// Hessian; `O(h²)` for every family.
    pub fn self_consistency(&self) -> Result<f64> {
        let h = hessian(&self.u)?;
        let g = self.u.grid();
        let theta = self.function.spec.theta;
        let mut worst = 0.0f64;
        for i in 1..g.n_r() - 1 {
            for j in 0..g.n_phi() {
                worst = worst.max((phase(&h.get(i, j)) - theta - self.f.get(i, j)).abs());
            }
        }
        Ok(worst)
    }
}
