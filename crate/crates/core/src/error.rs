use thiserror::Error;

use crate::fields::ScalarField;
use crate::solver::NewtonReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("rotation is singular: det = {det:e}")]
    SingularRotation { det: f64 },

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("radius {r} outside the admissible range ({lo}, {hi})")]
    RadiusOutOfRange { r: f64, lo: f64, hi: f64 },

    #[error("requested {k_max} modes but the grid resolves fewer than {limit}")]
    TooManyModes { k_max: usize, limit: usize },

    #[error("point ({x}, {y}) lies outside the grid annulus")]
    OutOfDomain { x: f64, y: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("newton iteration did not converge: residual {residual:e} after {iterations} iterations")]
    DidNotConverge { iterations: usize, residual: f64, best: Box<(ScalarField, NewtonReport)> },

    #[error("sparse linear solve failed: {0}")]
    LinearSolveFailure(String),

    #[error("phase argument {value} left (-pi/2, pi/2) at r = {r}")]
    PhaseOutOfRange { r: f64, value: f64 },

    #[error("window too small: {0}")]
    WindowTooSmall(String),

    #[error("least squares ill-conditioned: condition number {cond:e}")]
    IllConditioned { cond: f64 },

    #[error("field is not harmonic: discrete laplacian sup-norm {sup:e} exceeds {tol:e}")]
    NotHarmonic { sup: f64, tol: f64 },

    #[error("probe radii must differ (r1 = r2 = {0})")]
    DegenerateRadii(f64),

    #[error("no tail model and |u| = {value:e} at the truncation radius exceeds the quadrature tolerance")]
    TailModelMissing { value: f64 },

    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    #[error("lewy rotation degenerates at node ({i}, {j}): det = {det:e}")]
    JacobianSignFlip { i: usize, j: usize, det: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
