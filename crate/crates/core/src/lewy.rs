//! Node-wise verification of the Lewy rotation on a sampled solution.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{gradient, hessian, ScalarField};
use crate::phase::{eigenvalues, lewy_hessian, phase, PhaseParams, Sym2};
use crate::scenario::Check;

pub const PHASE_SHIFT_TOL: f64 = 1e-10;
pub const TRANSFER_SPREAD_TOL: f64 = 3.0;

#[derive(Debug, Clone, Serialize)]
pub struct LewyReport {
    pub params: PhaseParams,
    /// `min det(𝔠I + 𝔰D²u)` over all nodes, each checked positive definite
    pub min_jacobian: f64,
    /// `max λ(M̃) − cot ϑ`; negative when the bound holds
    pub eigen_margin: f64,
    pub phase_shift_defect: f64,
    /// `(r, sup_φ |h(x̃)|·|x̃|^β)` per grid row in the window
    pub transfer: Vec<(f64, f64)>,
    /// max/min of the transfer column; `None` when `h ≡ 0`
    pub transfer_spread: Option<f64>,
    pub checks: Vec<Check>,
}

impl LewyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Rotates `u` by `ϑ = δ/2` and checks orientation, the `cot ϑ` bound, the
/// phase shift and the decay transfer of `h(x̃) := f(x)` with rate `β`
/// over the rows inside `window`.
pub fn lewy_roundtrip_check(
    u: &ScalarField,
    f: &ScalarField,
    p: &PhaseParams,
    beta: f64,
    window: (f64, f64),
) -> Result<LewyReport> {
    if !u.same_shape(f) {
        return Err(Error::ShapeMismatch("u and f must share a grid".into()));
    }
    let grid = u.grid();
    let (gx, gy) = gradient(u)?;
    let h = hessian(u)?;
    let (c, s) = (p.cos(), p.sin());
    let cot = p.cot_vartheta();
    let mut min_jac = f64::INFINITY;
    let mut margin = f64::NEG_INFINITY;
    let mut shift = 0.0f64;
    let mut transfer = Vec::new();
    for i in 0..grid.n_r() {
        let r = grid.radius(i);
        let in_window = r >= window.0 && r <= window.1;
        let mut row_sup = 0.0f64;
        for j in 0..grid.n_phi() {
            let m = h.get(i, j);
            let dj = Sym2::scalar(c) + m * s;
            let jac = dj.det();
            // 𝔠I + 𝔰D²u must be positive definite; in 2D a negative definite
            // Jacobian still has det > 0
            if !(eigenvalues(&dj).0 > 0.0) {
                return Err(Error::JacobianSignFlip { i, j, det: jac });
            }
            min_jac = min_jac.min(jac);
            let mt = lewy_hessian(&m, p)?;
            margin = margin.max(eigenvalues(&mt).1 - cot);
            shift = shift.max((phase(&mt) - (phase(&m) - 2.0 * p.vartheta)).abs());
            if in_window {
                let x = grid.point(i, j);
                let xt = [c * x[0] + s * gx.get(i, j), c * x[1] + s * gy.get(i, j)];
                row_sup = row_sup.max(f.get(i, j).abs() * xt[0].hypot(xt[1]).powf(beta));
            }
        }
        if in_window {
            transfer.push((r, row_sup));
        }
    }
    if transfer.len() < 2 {
        return Err(Error::WindowTooSmall(format!("{} rows in [{}, {}]", transfer.len(), window.0, window.1)));
    }
    let hi = transfer.iter().map(|t| t.1).fold(0.0, f64::max);
    let lo = transfer.iter().map(|t| t.1).fold(f64::INFINITY, f64::min);
    let spread = if hi == 0.0 { None } else { Some(hi / lo) };
    let checks = vec![
        Check::new("jacobian_positive", min_jac > 0.0, min_jac, 0.0),
        Check::new("eigenvalue_below_cot", margin < 0.0, margin, 0.0),
        Check::at_most("phase_shift", shift, PHASE_SHIFT_TOL),
        Check::at_most("decay_transfer_spread", spread.unwrap_or(1.0), TRANSFER_SPREAD_TOL),
    ];
    Ok(LewyReport {
        params: *p,
        min_jacobian: min_jac,
        eigen_margin: margin,
        phase_shift_defect: shift,
        transfer,
        transfer_spread: spread,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::PolarGrid;
    use crate::oracle::{oracle_field, Family, OracleSpec};
    use std::f64::consts::PI;

    #[test]
    fn admissible_quadratic_passes_with_zero_h() {
        let theta = PI / 2.0;
        let a = (0.5 * theta).tan();
        let grid = PolarGrid::new(3.0, 50.0, 48, 32).unwrap();
        let u = ScalarField::from_fn(&grid, |x, y| 0.5 * a * (x * x + y * y));
        let f = ScalarField::zeros(&grid);
        let p = PhaseParams::new(theta, 0.4).unwrap();
        let rep = lewy_roundtrip_check(&u, &f, &p, 2.5, (5.0, 40.0)).unwrap();
        assert!(rep.passed(), "{:?}", rep.checks);
        assert_eq!(rep.transfer_spread, None);
        // M̃ = tan(θ/2 − ϑ) I
        assert!((rep.eigen_margin + p.cot_vartheta() - (0.5 * theta - p.vartheta).tan()).abs() < 1e-8);
    }

    #[test]
    fn oracle_u0_transfer_is_bounded() {
        let spec = OracleSpec { d: 0.7, ..OracleSpec::new(Family::U0, PI / 2.0, 2.5) };
        let grid = PolarGrid::new(5.0, 1e3, 160, 32).unwrap();
        let o = oracle_field(&spec, &grid).unwrap();
        let p = PhaseParams::new(spec.theta, 0.5).unwrap();
        let rep = lewy_roundtrip_check(&o.u, &o.f, &p, 2.5, (10.0, 1e3)).unwrap();
        assert!(rep.passed(), "{:?}", rep.checks);
        assert!(rep.transfer_spread.unwrap() < 3.0);
    }

    #[test]
    fn concave_quadratic_flips_orientation() {
        let grid = PolarGrid::new(3.0, 20.0, 24, 16).unwrap();
        let u = ScalarField::from_fn(&grid, |x, y| -2.0 * (x * x + y * y));
        let f = ScalarField::zeros(&grid);
        // k = 4 > cot ϑ for ϑ = 0.4
        let p = PhaseParams::new(1.0, 0.8).unwrap();
        assert!(matches!(lewy_roundtrip_check(&u, &f, &p, 2.5, (5.0, 15.0)), Err(Error::JacobianSignFlip { .. })));
    }
}
