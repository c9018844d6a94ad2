//! Finite-difference calculus on polar grids.
//!
//! Radial derivatives use three-point Lagrange stencils on the geometric
//! nodes (centered in the interior, one-sided on the two boundary rows), so
//! they are exact for polynomials of degree two in `r`. Angular derivatives
//! use five-point periodic stencils whose weights are exact on the Fourier
//! modes `k ≤ 2`. Together every polynomial of degree ≤ 2 in `(x₁, x₂)` is
//! differentiated exactly. Polar derivatives are chain-ruled to Cartesian
//! components.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fields::grid::{PolarGrid, ScalarField};
use crate::phase::Sym2;

/// First- and second-derivative weights at `at` of the Lagrange interpolant
/// through `nodes` (up to four).
pub(crate) fn lagrange_weights(nodes: &[f64], at: f64) -> ([f64; 4], [f64; 4]) {
    let n = nodes.len();
    let scale = nodes.iter().map(|x| (x - at).abs()).fold(0.0, f64::max);
    let z: Vec<f64> = nodes.iter().map(|x| (x - at) / scale).collect();
    // Σ w_k z_k^m = (d/dz)^p z^m at 0
    let v = DMatrix::from_fn(n, n, |m, k| z[k].powi(m as i32));
    let lu = v.lu();
    let mut e1 = DVector::zeros(n);
    e1[1] = 1.0;
    let mut e2 = DVector::zeros(n);
    e2[2] = 2.0;
    let w1 = lu.solve(&e1).expect("distinct nodes");
    let w2 = lu.solve(&e2).expect("distinct nodes");
    let mut d1 = [0.0; 4];
    let mut d2 = [0.0; 4];
    for k in 0..n {
        d1[k] = w1[k] / scale;
        d2[k] = w2[k] / (scale * scale);
    }
    (d1, d2)
}

#[derive(Debug, Clone)]
struct RadialRow {
    start: usize,
    len: usize,
    d1: [f64; 4],
    d2: [f64; 4],
}

/// Precomputed weights for one grid.
#[derive(Debug, Clone)]
pub(crate) struct Stencils {
    radial: Vec<RadialRow>,
    /// weights for offsets -2..=2
    ang_d1: [f64; 5],
    ang_d2: [f64; 5],
}

fn solve2(a: [[f64; 2]; 2], b: [f64; 2]) -> [f64; 2] {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [(b[0] * a[1][1] - a[0][1] * b[1]) / det, (a[0][0] * b[1] - b[0] * a[1][0]) / det]
}

fn angular_weights(h: f64) -> ([f64; 5], [f64; 5]) {
    // first derivative: antisymmetric, exact on e^{±iφ}, e^{±2iφ}
    let [a1, a2] =
        solve2([[2.0 * h.sin(), 2.0 * (2.0 * h).sin()], [2.0 * (2.0 * h).sin(), 2.0 * (4.0 * h).sin()]], [1.0, 2.0]);
    // second derivative: symmetric, exact on modes 0, 1, 2
    // b0 + 2 b1 cos(kh) + 2 b2 cos(2kh) = -k^2; subtract the k = 0 row
    let [b1, b2] = solve2(
        [
            [2.0 * (h.cos() - 1.0), 2.0 * ((2.0 * h).cos() - 1.0)],
            [2.0 * ((2.0 * h).cos() - 1.0), 2.0 * ((4.0 * h).cos() - 1.0)],
        ],
        [-1.0, -4.0],
    );
    let b0 = -2.0 * (b1 + b2);
    ([-a2, -a1, 0.0, a1, a2], [b2, b1, b0, b1, b2])
}

/// Polar derivatives at one node.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct PolarDerivs {
    pub ur: f64,
    pub urr: f64,
    pub up: f64,
    pub upp: f64,
    pub urp: f64,
}

/// `(H_rr, H_rφ, H_φφ)`: Hessian in the local orthonormal polar frame.
fn polar_frame_hessian(d: &PolarDerivs, r: f64) -> Sym2 {
    Sym2::new(d.urr, d.urp / r - d.up / (r * r), d.ur / r + d.upp / (r * r))
}

impl Stencils {
    pub fn new(grid: &PolarGrid) -> Self {
        let n = grid.n_r();
        let radii = grid.radii();
        let radial = (0..n)
            .map(|i| {
                // centered three-point rows; four one-sided points on the
                // boundary rows keep the second derivative second order
                let (start, len) = match i {
                    0 => (0, 4),
                    _ if i == n - 1 => (n - 4, 4),
                    _ => (i - 1, 3),
                };
                let (d1, d2) = lagrange_weights(&radii[start..start + len], radii[i]);
                RadialRow { start, len, d1, d2 }
            })
            .collect();
        let (ang_d1, ang_d2) = angular_weights(grid.angle_step());
        Stencils { radial, ang_d1, ang_d2 }
    }

    fn angular(&self, u: &ScalarField, i: usize, j: usize, w: &[f64; 5]) -> f64 {
        let j = j as isize;
        (0..5).map(|k| w[k] * u.at(i, j + k as isize - 2)).sum()
    }

    pub fn derivs(&self, u: &ScalarField, i: usize, j: usize) -> PolarDerivs {
        let row = &self.radial[i];
        let mut d = PolarDerivs::default();
        for k in 0..row.len {
            let v = u.get(row.start + k, j);
            d.ur += row.d1[k] * v;
            d.urr += row.d2[k] * v;
            d.urp += row.d1[k] * self.angular(u, row.start + k, j, &self.ang_d1);
        }
        d.up = self.angular(u, i, j, &self.ang_d1);
        d.upp = self.angular(u, i, j, &self.ang_d2);
        d
    }

    /// Cartesian Hessian at `(i, j)`.
    pub fn hessian_at(&self, u: &ScalarField, i: usize, j: usize) -> Sym2 {
        let g = u.grid();
        polar_frame_hessian(&self.derivs(u, i, j), g.radius(i)).rotate(g.angle(j))
    }

    /// Sparse linear functional `v ↦ tr(a · D²v)(i, j)` as `(node, weight)` pairs.
    pub fn linearized_row(&self, grid: &PolarGrid, i: usize, j: usize, a: &Sym2) -> Vec<(usize, f64)> {
        let r = grid.radius(i);
        // rotate the coefficient into the polar frame: T = Rᵀ a R
        let t = a.rotate(-grid.angle(j));
        let c_rr = t.a11;
        let c_r = t.a22 / r;
        let c_pp = t.a22 / (r * r);
        let c_rp = 2.0 * t.a12 / r;
        let c_p = -2.0 * t.a12 / (r * r);
        let n_phi = grid.n_phi() as isize;
        let wrap = |jj: isize| jj.rem_euclid(n_phi) as usize;
        let row = &self.radial[i];
        let mut out = Vec::with_capacity(16);
        for k in 0..row.len {
            let ik = row.start + k;
            out.push((grid.index(ik, j), c_rr * row.d2[k] + c_r * row.d1[k]));
            for m in 0..5 {
                let w = self.ang_d1[m];
                if w != 0.0 {
                    let jj = wrap(j as isize + m as isize - 2);
                    out.push((grid.index(ik, jj), c_rp * row.d1[k] * w));
                }
            }
        }
        for m in 0..5 {
            let jj = wrap(j as isize + m as isize - 2);
            out.push((grid.index(i, jj), c_p * self.ang_d1[m] + c_pp * self.ang_d2[m]));
        }
        out
    }
}

fn check_grid(u: &ScalarField) -> Result<()> {
    if u.grid().n_r() < 4 {
        return Err(Error::GridTooSmall(format!("{} radial nodes, need 4", u.grid().n_r())));
    }
    Ok(())
}

/// Cartesian gradient `(u_x, u_y)`.
pub fn gradient(u: &ScalarField) -> Result<(ScalarField, ScalarField)> {
    check_grid(u)?;
    let g = u.grid();
    let st = Stencils::new(g);
    let mut ux = ScalarField::zeros(g);
    let mut uy = ScalarField::zeros(g);
    for i in 0..g.n_r() {
        let r = g.radius(i);
        for j in 0..g.n_phi() {
            let d = st.derivs(u, i, j);
            let (c, s) = g.cos_sin(j);
            let k = g.index(i, j);
            ux.values_mut()[k] = c * d.ur - s * d.up / r;
            uy.values_mut()[k] = s * d.ur + c * d.up / r;
        }
    }
    Ok((ux, uy))
}

/// Field of symmetric matrices on a polar grid.
#[derive(Debug, Clone)]
pub struct SymField {
    grid: PolarGrid,
    values: Vec<Sym2>,
}

impl SymField {
    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Sym2] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Sym2 {
        self.values[self.grid.index(i, j)]
    }

    /// Scalar field of one derived quantity.
    pub fn map(&self, f: impl Fn(&Sym2) -> f64) -> ScalarField {
        let v = self.values.iter().map(f).collect();
        ScalarField::new(self.grid.clone(), v).expect("shape preserved")
    }
}

/// Cartesian Hessian field.
pub fn hessian(u: &ScalarField) -> Result<SymField> {
    check_grid(u)?;
    let g = u.grid();
    let st = Stencils::new(g);
    let mut values = Vec::with_capacity(g.len());
    for i in 0..g.n_r() {
        for j in 0..g.n_phi() {
            values.push(st.hessian_at(u, i, j));
        }
    }
    Ok(SymField { grid: g.clone(), values })
}

/// Discrete Laplacian `u_rr + u_r/r + u_φφ/r²`.
pub fn laplacian(u: &ScalarField) -> Result<ScalarField> {
    check_grid(u)?;
    let g = u.grid();
    let st = Stencils::new(g);
    let mut out = ScalarField::zeros(g);
    for i in 0..g.n_r() {
        let r = g.radius(i);
        for j in 0..g.n_phi() {
            let d = st.derivs(u, i, j);
            out.values_mut()[g.index(i, j)] = d.urr + d.ur / r + d.upp / (r * r);
        }
    }
    Ok(out)
}
