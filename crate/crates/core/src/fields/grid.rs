use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Annulus `r_min ≤ |x| ≤ r_max` discretized by `n_r` geometrically spaced
/// radii and `n_phi` uniform angles covering `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarGrid {
    r_min: f64,
    r_max: f64,
    n_r: usize,
    n_phi: usize,
    radii: Vec<f64>,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl PolarGrid {
    pub fn new(r_min: f64, r_max: f64, n_r: usize, n_phi: usize) -> Result<Self> {
        if !(r_min > 0.0 && r_max > r_min && r_max.is_finite()) {
            return Err(Error::InvalidParams(format!("need 0 < r_min < r_max, got [{r_min}, {r_max}]")));
        }
        if n_r < 8 {
            return Err(Error::GridTooSmall(format!("n_r = {n_r} < 8")));
        }
        if n_phi < 16 || !n_phi.is_multiple_of(2) {
            return Err(Error::GridTooSmall(format!("n_phi = {n_phi} must be even and >= 16")));
        }
        let h = (r_max / r_min).ln() / (n_r - 1) as f64;
        let mut radii: Vec<f64> = (0..n_r).map(|i| r_min * (h * i as f64).exp()).collect();
        radii[n_r - 1] = r_max;
        let dphi = 2.0 * PI / n_phi as f64;
        let (sin, cos) = (0..n_phi).map(|j| (dphi * j as f64).sin_cos()).unzip();
        Ok(PolarGrid { r_min, r_max, n_r, n_phi, radii, cos, sin })
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn len(&self) -> usize {
        self.n_r * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn radius(&self, i: usize) -> f64 {
        self.radii[i]
    }

    /// Uniform step in `ln r`.
    pub fn log_step(&self) -> f64 {
        (self.r_max / self.r_min).ln() / (self.n_r - 1) as f64
    }

    pub fn angle_step(&self) -> f64 {
        2.0 * PI / self.n_phi as f64
    }

    pub fn angle(&self, j: usize) -> f64 {
        self.angle_step() * j as f64
    }

    pub fn cos_sin(&self, j: usize) -> (f64, f64) {
        (self.cos[j], self.sin[j])
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_phi + j
    }

    pub fn point(&self, i: usize, j: usize) -> [f64; 2] {
        let r = self.radii[i];
        [r * self.cos[j], r * self.sin[j]]
    }

    /// Same annulus with `n_r` and `n_phi` multiplied by `k`.
    pub fn scaled(&self, k: usize) -> Result<Self> {
        PolarGrid::new(self.r_min, self.r_max, self.n_r * k, self.n_phi * k)
    }

    pub fn contains_radius(&self, r: f64) -> bool {
        r >= self.r_min * (1.0 - 1e-12) && r <= self.r_max * (1.0 + 1e-12)
    }

    /// Index of a node sitting at radius `r` (relative tolerance 1e-10).
    pub fn node_at(&self, r: f64) -> Option<usize> {
        let t = (r / self.r_min).ln() / self.log_step();
        let i = t.round();
        if i < 0.0 || i >= self.n_r as f64 {
            return None;
        }
        let i = i as usize;
        ((self.radii[i] - r).abs() <= 1e-10 * r).then_some(i)
    }

    /// Row indices whose radius lies in `[lo, hi]`.
    pub fn rows_in(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.n_r).filter(|&i| self.radii[i] >= lo * (1.0 - 1e-12) && self.radii[i] <= hi * (1.0 + 1e-12)).collect()
    }

    /// Fractional radial coordinate of `r` in units of the log step.
    pub fn radial_coordinate(&self, r: f64) -> f64 {
        (r / self.r_min).ln() / self.log_step()
    }
}

/// Scalar sampled on a [`PolarGrid`], stored row-major (row = fixed radius).
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: PolarGrid,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: PolarGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.n_r(),
                grid.n_phi()
            )));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: &PolarGrid) -> Self {
        ScalarField { values: vec![0.0; grid.len()], grid: grid.clone() }
    }

    /// Samples `f(x₁, x₂)` at every node.
    pub fn from_fn(grid: &PolarGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_r() {
            for j in 0..grid.n_phi() {
                let [x, y] = grid.point(i, j);
                values.push(f(x, y));
            }
        }
        ScalarField { grid: grid.clone(), values }
    }

    /// Samples `f(r, φ)` at every node.
    pub fn from_polar_fn(grid: &PolarGrid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.n_r() {
            for j in 0..grid.n_phi() {
                values.push(f(grid.radius(i), grid.angle(j)));
            }
        }
        ScalarField { grid: grid.clone(), values }
    }

    pub fn grid(&self) -> &PolarGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value at `(i, j)`; the angular index wraps periodically.
    pub fn at(&self, i: usize, j: isize) -> f64 {
        let n = self.grid.n_phi() as isize;
        self.values[i * self.grid.n_phi() + j.rem_euclid(n) as usize]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grid.n_phi() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.grid.n_phi();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn same_shape(&self, other: &ScalarField) -> bool {
        self.grid == other.grid
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<ScalarField> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch("fields live on different grids".into()));
        }
        Ok(ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    /// Subtracts `g(x₁, x₂)` evaluated at the nodes.
    pub fn minus_fn(&self, g: impl Fn(f64, f64) -> f64) -> ScalarField {
        let mut out = self.clone();
        for i in 0..self.grid.n_r() {
            for j in 0..self.grid.n_phi() {
                let [x, y] = self.grid.point(i, j);
                out.values[self.grid.index(i, j)] -= g(x, y);
            }
        }
        out
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max_j |u(rᵢ, φⱼ)|` on row `i`.
    pub fn row_sup(&self, i: usize) -> f64 {
        self.row(i).iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}
