//! Damped Newton solver for `phase(D²u) = θ + f` on a polar annulus, and the
//! radial reduction for rotationally symmetric data.

mod radial;

use std::f64::consts::PI;

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, Triplet};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::{PolarGrid, ScalarField, Stencils};
use crate::phase::{phase, phase_gradient};

pub use radial::{radial_solve, RadialProfile};

const TOL: f64 = 1e-10;
const MAX_ITER: usize = 50;
const MAX_HALVINGS: usize = 20;

/// Dirichlet problem on the annulus of `grid`.
#[derive(Debug, Clone)]
pub struct ExteriorProblem {
    pub grid: PolarGrid,
    pub theta: f64,
    pub f: ScalarField,
    /// values on the circle `r = r_min`, one per angle
    pub inner_bc: Vec<f64>,
    /// values on the circle `r = r_max`
    pub outer_bc: Vec<f64>,
    /// decay exponent of `f`, for reporting only
    pub beta: f64,
}

impl ExteriorProblem {
    pub fn new(
        grid: PolarGrid,
        theta: f64,
        f: ScalarField,
        inner_bc: Vec<f64>,
        outer_bc: Vec<f64>,
        beta: f64,
    ) -> Result<Self> {
        let p = ExteriorProblem { grid, theta, f, inner_bc, outer_bc, beta };
        p.validate()?;
        Ok(p)
    }

    /// Problem whose boundary data are sampled from `u`.
    pub fn with_boundary_from(u: &ScalarField, theta: f64, f: ScalarField, beta: f64) -> Result<Self> {
        let g = u.grid().clone();
        let inner = u.row(0).to_vec();
        let outer = u.row(g.n_r() - 1).to_vec();
        Self::new(g, theta, f, inner, outer, beta)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.f.grid().eq(&self.grid) {
            return Err(Error::ShapeMismatch("right-hand side lives on a different grid".into()));
        }
        let n = self.grid.n_phi();
        if self.inner_bc.len() != n || self.outer_bc.len() != n {
            return Err(Error::ShapeMismatch(format!("boundary data must have {n} values")));
        }
        if let Some(v) = self.f.values().iter().map(|v| self.theta + v).find(|t| !(*t > 0.0 && *t < PI)) {
            return Err(Error::InvalidParams(format!("theta + f = {v} leaves (0, pi)")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NewtonReport {
    /// Newton steps taken
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

impl NewtonReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::NAN)
    }
}

/// `phase(D²u) − θ − f` at interior nodes, zero on the two boundary rows.
pub fn residual(u: &ScalarField, p: &ExteriorProblem) -> Result<ScalarField> {
    if !u.grid().eq(&p.grid) {
        return Err(Error::ShapeMismatch("field and problem grids differ".into()));
    }
    Ok(residual_with(&Stencils::new(&p.grid), u, p))
}

fn residual_with(st: &Stencils, u: &ScalarField, p: &ExteriorProblem) -> ScalarField {
    let g = &p.grid;
    let mut out = ScalarField::zeros(g);
    for i in 1..g.n_r() - 1 {
        for j in 0..g.n_phi() {
            let k = g.index(i, j);
            out.values_mut()[k] = phase(&st.hessian_at(u, i, j)) - p.theta - p.f.values()[k];
        }
    }
    out
}

fn jacobian(st: &Stencils, u: &ScalarField, g: &PolarGrid) -> Result<SparseColMat<usize, f64>> {
    let n = g.len();
    let mut trip = Vec::with_capacity(n * 16);
    let mut row = Vec::with_capacity(20);
    for i in 0..g.n_r() {
        for j in 0..g.n_phi() {
            let k = g.index(i, j);
            if i == 0 || i == g.n_r() - 1 {
                trip.push(Triplet::new(k, k, 1.0));
                continue;
            }
            let a = phase_gradient(&st.hessian_at(u, i, j));
            row.clear();
            row.extend(st.linearized_row(g, i, j, &a));
            row.sort_by_key(|e| e.0);
            let mut m = 0;
            while m < row.len() {
                let (col, mut w) = row[m];
                m += 1;
                while m < row.len() && row[m].0 == col {
                    w += row[m].1;
                    m += 1;
                }
                trip.push(Triplet::new(k, col, w));
            }
        }
    }
    SparseColMat::try_new_from_triplets(n, n, &trip).map_err(|e| Error::LinearSolveFailure(format!("{e:?}")))
}

fn apply_bc(u: &mut ScalarField, p: &ExteriorProblem) {
    let g = &p.grid;
    let (n, last) = (g.n_phi(), g.n_r() - 1);
    u.values_mut()[..n].copy_from_slice(&p.inner_bc);
    u.values_mut()[last * n..].copy_from_slice(&p.outer_bc);
}

/// Damped Newton iteration from `u0` (boundary rows are overwritten with the
/// problem's Dirichlet data).
pub fn newton_solve(p: &ExteriorProblem, u0: &ScalarField) -> Result<(ScalarField, NewtonReport)> {
    p.validate()?;
    if !u0.grid().eq(&p.grid) {
        return Err(Error::ShapeMismatch("initial guess and problem grids differ".into()));
    }
    let st = Stencils::new(&p.grid);
    let mut u = u0.clone();
    apply_bc(&mut u, p);
    let mut res = residual_with(&st, &u, p);
    let mut r = res.sup_norm();
    if !r.is_finite() {
        return Err(Error::InvalidParams("initial residual is not finite".into()));
    }
    let mut report = NewtonReport { iterations: 0, residual_history: vec![r], converged: false };
    let mut symbolic: Option<SymbolicLu<usize>> = None;

    while r >= TOL {
        if report.iterations == MAX_ITER {
            return Err(not_converged(u, report));
        }
        let jac = jacobian(&st, &u, &p.grid)?;
        let sym = match &symbolic {
            Some(s) => s.clone(),
            None => {
                let s = SymbolicLu::try_new(jac.symbolic()).map_err(|e| Error::LinearSolveFailure(format!("{e:?}")))?;
                symbolic = Some(s.clone());
                s
            }
        };
        let lu =
            Lu::try_new_with_symbolic(sym, jac.as_ref()).map_err(|e| Error::LinearSolveFailure(format!("{e:?}")))?;
        let rhs = Col::from_fn(p.grid.len(), |k| -res.values()[k]);
        let delta = lu.solve(&rhs);
        if (0..delta.nrows()).any(|k| !delta[k].is_finite()) {
            return Err(Error::LinearSolveFailure("non-finite Newton step".into()));
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let mut trial = u.clone();
            for (k, v) in trial.values_mut().iter_mut().enumerate() {
                *v += step * delta[k];
            }
            let tres = residual_with(&st, &trial, p);
            let tr = tres.sup_norm();
            if tr < r {
                accepted = Some((trial, tres, tr));
                break;
            }
            step *= 0.5;
        }
        report.iterations += 1;
        match accepted {
            Some((nu, nres, nr)) => {
                u = nu;
                res = nres;
                r = nr;
                report.residual_history.push(r);
            }
            None => return Err(not_converged(u, report)),
        }
    }
    report.converged = true;
    Ok((u, report))
}

fn not_converged(u: ScalarField, report: NewtonReport) -> Error {
    Error::DidNotConverge {
        iterations: report.iterations,
        residual: report.final_residual(),
        best: Box::new((u, report)),
    }
}

/// Real Fourier coefficients `(a_k, b_k)` of periodic samples, `k = 0..=n/2`,
/// with `g_j = Σ a_k cos(kφ_j) + b_k sin(kφ_j)`.
fn real_modes(g: &[f64]) -> Vec<(f64, f64)> {
    let n = g.len();
    let h = 2.0 * PI / n as f64;
    (0..=n / 2)
        .map(|k| {
            let (mut a, mut b) = (0.0, 0.0);
            for (j, v) in g.iter().enumerate() {
                let (s, c) = (k as f64 * h * j as f64).sin_cos();
                a += v * c;
                b += v * s;
            }
            let w = if k == 0 || 2 * k == n { 1.0 } else { 2.0 } / n as f64;
            (a * w, b * w)
        })
        .collect()
}

/// `½ tan(θ/2)|x|²` plus the harmonic function matching the remaining
/// boundary data mode by mode.
pub fn initial_guess(p: &ExteriorProblem) -> ScalarField {
    let g = &p.grid;
    let a = (0.5 * p.theta).tan();
    let (r_in, r_out) = (g.r_min(), g.r_max());
    let quad = |r: f64| 0.5 * a * r * r;
    let din: Vec<f64> = p.inner_bc.iter().map(|v| v - quad(r_in)).collect();
    let dout: Vec<f64> = p.outer_bc.iter().map(|v| v - quad(r_out)).collect();
    let (mi, mo) = (real_modes(&din), real_modes(&dout));
    let ln_ratio = (r_out / r_in).ln();
    ScalarField::from_polar_fn(g, |r, phi| {
        let mut v = quad(r);
        for (k, ((ai, bi), (ao, bo))) in mi.iter().zip(&mo).enumerate() {
            if k == 0 {
                let s = (r / r_in).ln() / ln_ratio;
                v += ai + (ao - ai) * s;
                continue;
            }
            let kf = k as f64;
            let t = (r_in / r_out).powf(kf);
            let grow = (r / r_out).powf(kf);
            let decay = (r_in / r).powf(kf);
            let prof = |cin: f64, cout: f64| {
                let al = (cout - t * cin) / (1.0 - t * t);
                let be = (cin - t * cout) / (1.0 - t * t);
                al * grow + be * decay
            };
            let (s, c) = (kf * phi).sin_cos();
            v += prof(*ai, *ao) * c + prof(*bi, *bo) * s;
        }
        v
    })
}
