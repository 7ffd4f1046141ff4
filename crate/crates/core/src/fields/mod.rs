//! Cell-centred fields on a rectangular box and the discrete operators acting
//! on them.
//!
//! Cell `(i, j, k)` has centre `((i + ½)h₁, (j + ½)h₂, (k + ½)h₃)`. Planar
//! grids keep a single layer in the third direction and ignore it in every
//! operator and quadrature.

mod cg;
mod export;
mod ops;
mod projection;
mod stencil;

use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use thiserror::Error;

use crate::tensor::{Mat3, QTensor, Vec3};

pub use cg::{conjugate_gradient, CgOutcome, CgSettings};
pub use export::{write_csv, write_vtk, VtkArray};
pub use ops::{
    advect, div, elastic_force, grad, grad_lapl, grad_q, grad_vec, inner, lapl,
    one_sided, one_sided_adjoint, partial, partial_adjoint, restricted_inner,
};
pub use projection::{divergence, project_divfree, project_divfree_masked, Projection};
pub use stencil::Ghost;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {residual:.3e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("conjugate gradient breakdown: operator is not positive definite")]
    Indefinite,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Uniform cell-centred grid on `[0, L₁] × … × [0, L_d]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub dim: usize,
    pub n: [usize; 3],
    pub len: [f64; 3],
}

impl Grid {
    pub fn new(cells: &[usize], lengths: &[f64]) -> Result<Grid, FieldError> {
        let dim = cells.len();
        if !(dim == 2 || dim == 3) {
            return Err(FieldError::InvalidGrid(format!("dimension must be 2 or 3, got {dim}")));
        }
        if lengths.len() != dim {
            return Err(FieldError::InvalidGrid(format!(
                "{} cell counts but {} lengths",
                dim,
                lengths.len()
            )));
        }
        let mut n = [1usize; 3];
        let mut len = [1.0f64; 3];
        for a in 0..dim {
            if cells[a] < 8 {
                return Err(FieldError::InvalidGrid(format!("cells[{a}] >= 8 (got {})", cells[a])));
            }
            if !(lengths[a] > 0.0 && lengths[a].is_finite()) {
                return Err(FieldError::InvalidGrid(format!(
                    "lengths[{a}] > 0 (got {})",
                    lengths[a]
                )));
            }
            n[a] = cells[a];
            len[a] = lengths[a];
        }
        let grid = Grid { dim, n, len };
        let hs: Vec<f64> = (0..dim).map(|a| grid.h(a)).collect();
        let ratio = hs.iter().cloned().fold(0.0, f64::max) / hs.iter().cloned().fold(f64::MAX, f64::min);
        if ratio > 4.0 {
            return Err(FieldError::InvalidGrid(format!("spacing aspect ratio <= 4 (got {ratio})")));
        }
        Ok(grid)
    }

    pub fn h(&self, axis: usize) -> f64 {
        self.len[axis] / self.n[axis] as f64
    }

    pub fn h_min(&self) -> f64 {
        (0..self.dim).map(|a| self.h(a)).fold(f64::MAX, f64::min)
    }

    pub fn cells(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.h(a)).product()
    }

    pub fn volume(&self) -> f64 {
        self.len[..self.dim].iter().product()
    }

    pub fn stride(&self, axis: usize) -> usize {
        match axis {
            0 => 1,
            1 => self.n[0],
            _ => self.n[0] * self.n[1],
        }
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n[0] * (j + self.n[1] * k)
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.n[0];
        let j = (idx / self.n[0]) % self.n[1];
        let k = idx / (self.n[0] * self.n[1]);
        [i, j, k]
    }

    pub fn center(&self, idx: usize) -> Vec3 {
        let c = self.coords(idx);
        let mut x = Vec3::zeros();
        for a in 0..self.dim {
            x[a] = (c[a] as f64 + 0.5) * self.h(a);
        }
        x
    }

    pub fn box_center(&self) -> Vec3 {
        let mut x = Vec3::zeros();
        for a in 0..self.dim {
            x[a] = 0.5 * self.len[a];
        }
        x
    }
}

/// Boundary tag deciding how ghost values outside the box are formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    /// Homogeneous Dirichlet: the field vanishes on the box faces.
    Dirichlet,
    /// Homogeneous Neumann: mirror-even ghosts.
    Neumann,
    /// No condition; ghosts are extrapolated quadratically.
    Free,
}

impl Boundary {
    /// Ghost rule for centred first differences and upwind stencils.
    pub fn first_order_ghost(self) -> Ghost {
        match self {
            Boundary::Dirichlet => Ghost::WallQuadratic,
            Boundary::Neumann => Ghost::Symmetric,
            Boundary::Free => Ghost::Extrapolate,
        }
    }

    /// Ghost rule for the compact Laplacian and one-sided differences. For
    /// Dirichlet data this keeps both operators symmetric.
    pub fn compact_ghost(self) -> Ghost {
        match self {
            Boundary::Dirichlet => Ghost::Antisymmetric,
            Boundary::Neumann => Ghost::Symmetric,
            Boundary::Free => Ghost::Extrapolate,
        }
    }
}

pub trait FieldValue:
    Copy + Debug + PartialEq + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn dot(&self, other: &Self) -> f64;
}

impl FieldValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn dot(&self, other: &Self) -> f64 {
        self * other
    }
}

impl FieldValue for Vec3 {
    fn zero() -> Self {
        Vec3::zeros()
    }
    fn dot(&self, other: &Self) -> f64 {
        Vec3::dot(self, other)
    }
}

impl FieldValue for Mat3 {
    fn zero() -> Self {
        Mat3::zeros()
    }
    fn dot(&self, other: &Self) -> f64 {
        Mat3::dot(self, other)
    }
}

impl FieldValue for QTensor {
    fn zero() -> Self {
        QTensor::ZERO
    }
    fn dot(&self, other: &Self) -> f64 {
        self.ddot(other)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    pub grid: Grid,
    pub data: Vec<T>,
    pub bc: Boundary,
}

pub type ScalarField = Field<f64>;
pub type VectorField = Field<Vec3>;
pub type QField = Field<QTensor>;
pub type MatField = Field<Mat3>;

impl<T: FieldValue> Field<T> {
    pub fn zeros(grid: Grid, bc: Boundary) -> Self {
        Field { grid, data: vec![T::zero(); grid.cells()], bc }
    }

    pub fn from_fn(grid: Grid, bc: Boundary, f: impl Fn(Vec3) -> T) -> Self {
        let data = (0..grid.cells()).map(|idx| f(grid.center(idx))).collect();
        Field { grid, data, bc }
    }

    pub fn from_data(grid: Grid, bc: Boundary, data: Vec<T>) -> Self {
        assert_eq!(data.len(), grid.cells(), "field data length must equal the cell count");
        Field { grid, data, bc }
    }

    pub fn map<U: FieldValue>(&self, bc: Boundary, f: impl Fn(&T) -> U) -> Field<U> {
        Field { grid: self.grid, data: self.data.iter().map(f).collect(), bc }
    }

    pub fn check_grid<U>(&self, other: &Field<U>) -> Result<(), FieldError> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(FieldError::GridMismatch)
        }
    }

    /// Largest pointwise norm `sqrt(v·v)`.
    pub fn max_norm(&self) -> f64 {
        self.data.iter().map(|v| v.dot(v).sqrt()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.dot(v).is_finite())
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &Field<T>) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a = *a + *b * s;
        }
    }
}
