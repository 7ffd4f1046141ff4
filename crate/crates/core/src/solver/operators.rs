//! Symmetric operators of the semi-implicit scheme and the matching
//! discrete energies.
//!
//! The viscous form averages `ν D^s(u):D^s(ζ)` over all `2^d` choices of
//! forward/backward differences per axis. Each choice is a consistent strain,
//! and the average is coercive on the collocated grid where the centred
//! strain is not.

use crate::fields::{
    conjugate_gradient, lapl, one_sided, one_sided_adjoint, Boundary, CgOutcome, Field, FieldError, Grid,
    QField, VectorField,
};
use crate::tensor::{Mat3, QTensor, Vec3};

fn sign_patterns(dim: usize) -> impl Iterator<Item = [bool; 3]> {
    (0..1usize << dim).map(move |bits| [bits & 1 != 0, bits & 2 != 0, bits & 4 != 0])
}

fn one_sided_strain(u: &VectorField, forward: [bool; 3]) -> Vec<Mat3> {
    let grid = u.grid;
    let mut g = vec![Mat3::zeros(); grid.cells()];
    for axis in 0..grid.dim {
        let d = one_sided(u, axis, forward[axis]);
        for (m, v) in g.iter_mut().zip(&d.data) {
            m.set_column(axis, v);
        }
    }
    g.iter().map(|m| (m + m.transpose()) * 0.5).collect()
}

/// `A u` with `⟨A u, ζ⟩ = ∫ ν D(u):D(ζ)`.
pub fn viscous_apply(u: &VectorField, nu: &[f64]) -> VectorField {
    let grid = u.grid;
    let mut out: VectorField = Field::zeros(grid, Boundary::Free);
    let weight = 1.0 / (1usize << grid.dim) as f64;
    for s in sign_patterns(grid.dim) {
        let strain = one_sided_strain(u, s);
        for j in 0..grid.dim {
            let col: Vec<Vec3> =
                strain.iter().zip(nu).map(|(d, n)| d.column(j).into_owned() * (n * weight)).collect();
            let col = Field::from_data(grid, Boundary::Free, col);
            out.axpy(1.0, &one_sided_adjoint(&col, j, s[j], Boundary::Dirichlet));
        }
    }
    out
}

/// `∫ w |D u|²` in the averaged one-sided sense.
pub fn weighted_strain(u: &VectorField, w: &[f64]) -> f64 {
    let grid = u.grid;
    let weight = 1.0 / (1usize << grid.dim) as f64;
    let mut total = 0.0;
    for s in sign_patterns(grid.dim) {
        let strain = one_sided_strain(u, s);
        total += strain.iter().zip(w).map(|(d, wi)| wi * d.norm_squared()).sum::<f64>();
    }
    total * weight * grid.cell_volume()
}

fn dirichlet_lapl(u: &VectorField) -> VectorField {
    let mut l = lapl(u);
    l.bc = Boundary::Dirichlet;
    l
}

/// `(−L)³ u` with `L` the Dirichlet compact Laplacian.
pub fn tri_laplacian(u: &VectorField) -> VectorField {
    let mut l3 = dirichlet_lapl(&dirichlet_lapl(&dirichlet_lapl(u)));
    l3.data.iter_mut().for_each(|v| *v = -*v);
    l3
}

/// Discrete `∫ |∇Δu|² = ⟨u, (−L)³ u⟩`.
pub fn grad_lapl_energy(u: &VectorField) -> f64 {
    let lu = dirichlet_lapl(u);
    let llu = dirichlet_lapl(&lu);
    -lu.data.iter().zip(&llu.data).map(|(a, b)| a.dot(b)).sum::<f64>() * u.grid.cell_volume()
}

/// Discrete `½∫|∇Q|² = −½⟨Q, L Q⟩`.
pub fn elastic_energy(q: &QField) -> f64 {
    let mut qd = q.clone();
    qd.bc = Boundary::Dirichlet;
    let l = lapl(&qd);
    -0.5 * q.data.iter().zip(&l.data).map(|(a, b)| a.ddot(b)).sum::<f64>() * q.grid.cell_volume()
}

pub(crate) fn default_cap(grid: &Grid, override_cap: Option<usize>) -> usize {
    override_cap.unwrap_or(10 * grid.n[..grid.dim].iter().copied().max().unwrap_or(8))
}

/// Solves `(I + dt A_ν + dt δ (−L)³) u = rhs`.
pub fn solve_velocity(
    rhs: &VectorField,
    nu: &[f64],
    dt: f64,
    delta: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<(VectorField, CgOutcome), FieldError> {
    let grid = rhs.grid;
    let apply = |x: &[Vec3], out: &mut [Vec3]| {
        let xf = Field::from_data(grid, Boundary::Dirichlet, x.to_vec());
        let a = viscous_apply(&xf, nu);
        let t = if delta > 0.0 { Some(tri_laplacian(&xf)) } else { None };
        for i in 0..x.len() {
            let mut v = x[i] + a.data[i] * dt;
            if let Some(t) = &t {
                v += t.data[i] * (dt * delta);
            }
            out[i] = v;
        }
    };
    let mut x = rhs.data.clone();
    let out = conjugate_gradient(apply, &rhs.data, &mut x, rel_tol, 0.0, max_iter)?;
    Ok((Field::from_data(grid, Boundary::Dirichlet, x), out))
}

/// Solves `(I + dt Γ (−L + a + nφ)) Q = rhs` componentwise.
pub fn solve_q(
    rhs: &QField,
    diag: &[f64],
    dt_gamma: f64,
    rel_tol: f64,
    max_iter: usize,
) -> Result<(QField, CgOutcome), FieldError> {
    let grid = rhs.grid;
    let apply = |x: &[QTensor], out: &mut [QTensor]| {
        let xf = Field::from_data(grid, Boundary::Dirichlet, x.to_vec());
        let l = lapl(&xf);
        for i in 0..x.len() {
            out[i] = x[i] * (1.0 + dt_gamma * diag[i]) - l.data[i] * dt_gamma;
        }
    };
    let mut x = rhs.data.clone();
    let out = conjugate_gradient(apply, &rhs.data, &mut x, rel_tol, 0.0, max_iter)?;
    Ok((Field::from_data(grid, Boundary::Dirichlet, x), out))
}
