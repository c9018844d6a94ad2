//! Pointwise algebra of the phase operator `arctan λ₁ + arctan λ₂` on
//! symmetric 2×2 matrices, its derivative, and the Lewy rotation acting on
//! Hessians.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric 2×2 matrix `[[a11, a12], [a12, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Sym2 {
    pub const ZERO: Sym2 = Sym2 { a11: 0.0, a12: 0.0, a22: 0.0 };
    pub const IDENTITY: Sym2 = Sym2 { a11: 1.0, a12: 0.0, a22: 1.0 };

    pub const fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Sym2 { a11, a12, a22 }
    }

    pub const fn diag(a11: f64, a22: f64) -> Self {
        Sym2 { a11, a12: 0.0, a22 }
    }

    pub fn scalar(a: f64) -> Self {
        Sym2::diag(a, a)
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        (self.a11 * self.a11 + 2.0 * self.a12 * self.a12 + self.a22 * self.a22).sqrt()
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.a11, self.a12, self.a22]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Sym2::new(a[0], a[1], a[2])
    }

    /// `xᵀ M x`.
    pub fn quad_form(&self, x: [f64; 2]) -> f64 {
        self.a11 * x[0] * x[0] + 2.0 * self.a12 * x[0] * x[1] + self.a22 * x[1] * x[1]
    }

    pub fn apply(&self, x: [f64; 2]) -> [f64; 2] {
        [self.a11 * x[0] + self.a12 * x[1], self.a12 * x[0] + self.a22 * x[1]]
    }

    /// `tr(self · other)`, the Frobenius pairing.
    pub fn contract(&self, other: &Sym2) -> f64 {
        self.a11 * other.a11 + 2.0 * self.a12 * other.a12 + self.a22 * other.a22
    }

    pub fn inverse(&self) -> Option<Sym2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Sym2::new(self.a22 / det, -self.a12 / det, self.a11 / det))
    }

    /// `M²`, symmetric because `M` is.
    pub fn square(&self) -> Sym2 {
        Sym2::new(
            self.a11 * self.a11 + self.a12 * self.a12,
            self.a12 * (self.a11 + self.a22),
            self.a12 * self.a12 + self.a22 * self.a22,
        )
    }

    /// Principal square root of a positive definite matrix.
    pub fn sqrt_spd(&self) -> Sym2 {
        // sqrt(M) = (M + sqrt(det) I) / sqrt(tr + 2 sqrt(det)) for 2x2 SPD.
        let s = self.det().max(0.0).sqrt();
        let t = (self.trace() + 2.0 * s).sqrt();
        Sym2::new((self.a11 + s) / t, self.a12 / t, (self.a22 + s) / t)
    }

    pub fn max_abs_diff(&self, other: &Sym2) -> f64 {
        (self.a11 - other.a11).abs().max((self.a12 - other.a12).abs()).max((self.a22 - other.a22).abs())
    }

    /// Conjugate by the rotation of angle `phi`: `R M Rᵀ`.
    pub fn rotate(&self, phi: f64) -> Sym2 {
        let (s, c) = phi.sin_cos();
        let (a, b, d) = (self.a11, self.a12, self.a22);
        Sym2::new(
            c * c * a - 2.0 * c * s * b + s * s * d,
            c * s * (a - d) + (c * c - s * s) * b,
            s * s * a + 2.0 * c * s * b + c * c * d,
        )
    }
}

impl Add for Sym2 {
    type Output = Sym2;
    fn add(self, o: Sym2) -> Sym2 {
        Sym2::new(self.a11 + o.a11, self.a12 + o.a12, self.a22 + o.a22)
    }
}

impl Sub for Sym2 {
    type Output = Sym2;
    fn sub(self, o: Sym2) -> Sym2 {
        Sym2::new(self.a11 - o.a11, self.a12 - o.a12, self.a22 - o.a22)
    }
}

impl Mul<f64> for Sym2 {
    type Output = Sym2;
    fn mul(self, k: f64) -> Sym2 {
        Sym2::new(self.a11 * k, self.a12 * k, self.a22 * k)
    }
}

/// General 2×2 product `a·b` symmetrized as `(P + Pᵀ)/2`.
fn sym_product(a: &Sym2, b: &Sym2) -> Sym2 {
    let p11 = a.a11 * b.a11 + a.a12 * b.a12;
    let p12 = a.a11 * b.a12 + a.a12 * b.a22;
    let p21 = a.a12 * b.a11 + a.a22 * b.a12;
    let p22 = a.a12 * b.a12 + a.a22 * b.a22;
    Sym2::new(p11, 0.5 * (p12 + p21), p22)
}

/// Rotation parameters: phase `theta`, margin `delta` and the Lewy angle
/// `vartheta = delta / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseParams {
    pub theta: f64,
    pub delta: f64,
    pub vartheta: f64,
}

impl PhaseParams {
    pub fn new(theta: f64, delta: f64) -> Result<Self> {
        if !(theta > 0.0 && theta < PI) {
            return Err(Error::InvalidParams(format!("theta = {theta} must lie in (0, pi)")));
        }
        if !(delta > 0.0 && delta < theta) {
            return Err(Error::InvalidParams(format!("delta = {delta} must lie in (0, theta)")));
        }
        Ok(PhaseParams { theta, delta, vartheta: 0.5 * delta })
    }

    pub fn cos(&self) -> f64 {
        self.vartheta.cos()
    }

    pub fn sin(&self) -> f64 {
        self.vartheta.sin()
    }

    /// Phase of the rotated equation, `theta - delta`.
    pub fn theta_tilde(&self) -> f64 {
        self.theta - self.delta
    }

    /// Bound on rotated Hessian eigenvalues.
    pub fn cot_vartheta(&self) -> f64 {
        self.cos() / self.sin()
    }
}

/// Eigenvalues `(λ₁, λ₂)` with `λ₁ ≤ λ₂`.
pub fn eigenvalues(m: &Sym2) -> (f64, f64) {
    let mean = 0.5 * (m.a11 + m.a22);
    let rad = (0.5 * (m.a11 - m.a22)).hypot(m.a12);
    let det = m.det();
    // recover the smaller-magnitude root from the determinant to keep the product accurate
    if mean >= 0.0 {
        let hi = mean + rad;
        let lo = if hi != 0.0 { det / hi } else { mean - rad };
        (lo.min(hi), hi.max(lo))
    } else {
        let lo = mean - rad;
        let hi = if lo != 0.0 { det / lo } else { mean + rad };
        (lo.min(hi), hi.max(lo))
    }
}

/// `arctan λ₁(M) + arctan λ₂(M)`.
pub fn phase(m: &Sym2) -> f64 {
    let (l1, l2) = eigenvalues(m);
    l1.atan() + l2.atan()
}

/// Derivative of [`phase`] with respect to `M`, `(I + M²)⁻¹`, in the
/// pairing `dF = tr(G dM)`.
pub fn phase_gradient(m: &Sym2) -> Sym2 {
    let g = Sym2::IDENTITY + m.square();
    // det(I + M²) ≥ 1, never singular
    g.inverse().expect("I + M^2 is positive definite")
}

fn singular_threshold(m: &Sym2) -> f64 {
    1e-12 * (1.0 + m.norm().powi(2))
}

/// Hessian of the rotated potential, `(−𝔰I + 𝔠M)(𝔠I + 𝔰M)⁻¹`.
pub fn lewy_hessian(m: &Sym2, p: &PhaseParams) -> Result<Sym2> {
    let (c, s) = (p.cos(), p.sin());
    let denom = Sym2::scalar(c) + *m * s;
    let det = denom.det();
    if det.abs() < singular_threshold(m) {
        return Err(Error::SingularRotation { det });
    }
    let numer = Sym2::scalar(-s) + *m * c;
    let inv = denom.inverse().ok_or(Error::SingularRotation { det })?;
    Ok(sym_product(&numer, &inv))
}

/// Inverse rotation, `(𝔰I + 𝔠M̃)(𝔠I − 𝔰M̃)⁻¹`.
pub fn lewy_hessian_inverse(mt: &Sym2, p: &PhaseParams) -> Result<Sym2> {
    let (c, s) = (p.cos(), p.sin());
    let denom = Sym2::scalar(c) - *mt * s;
    let det = denom.det();
    if det.abs() < singular_threshold(mt) {
        return Err(Error::SingularRotation { det });
    }
    let numer = Sym2::scalar(s) + *mt * c;
    let inv = denom.inverse().ok_or(Error::SingularRotation { det })?;
    Ok(sym_product(&numer, &inv))
}
