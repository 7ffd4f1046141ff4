//! Differential operators, quadratures and the elastic force assembly.

use super::stencil::{apply_axis, apply_axis_adjoint, resolve};
use super::{Boundary, Field, FieldError, FieldValue, Grid, MatField, QField, ScalarField, VectorField};
use crate::tensor::{antisym_stress, Mat3, QTensor, Vec3};

fn central_taps(h: f64) -> [(isize, f64); 2] {
    [(-1, -0.5 / h), (1, 0.5 / h)]
}

fn one_sided_taps(h: f64, forward: bool) -> [(isize, f64); 2] {
    if forward {
        [(0, -1.0 / h), (1, 1.0 / h)]
    } else {
        [(-1, -1.0 / h), (0, 1.0 / h)]
    }
}

/// Centred first difference along `axis`. Zero along an inactive axis.
pub fn partial<T: FieldValue>(f: &Field<T>, axis: usize) -> Field<T> {
    let mut out = Field::zeros(f.grid, Boundary::Free);
    if axis < f.grid.dim {
        let taps = central_taps(f.grid.h(axis));
        apply_axis(&f.grid, &f.data, axis, &taps, f.bc.first_order_ghost(), &mut out.data);
    }
    out
}

/// Transpose of [`partial`] for a field carrying boundary tag `bc`.
pub fn partial_adjoint<T: FieldValue>(v: &Field<T>, axis: usize, bc: Boundary) -> Field<T> {
    let mut out = Field::zeros(v.grid, Boundary::Free);
    if axis < v.grid.dim {
        let taps = central_taps(v.grid.h(axis));
        apply_axis_adjoint(&v.grid, &v.data, axis, &taps, bc.first_order_ghost(), &mut out.data);
    }
    out
}

/// Forward or backward difference along `axis` with compact ghosts.
pub fn one_sided<T: FieldValue>(f: &Field<T>, axis: usize, forward: bool) -> Field<T> {
    let mut out = Field::zeros(f.grid, Boundary::Free);
    if axis < f.grid.dim {
        let taps = one_sided_taps(f.grid.h(axis), forward);
        apply_axis(&f.grid, &f.data, axis, &taps, f.bc.compact_ghost(), &mut out.data);
    }
    out
}

pub fn one_sided_adjoint<T: FieldValue>(
    v: &Field<T>,
    axis: usize,
    forward: bool,
    bc: Boundary,
) -> Field<T> {
    let mut out = Field::zeros(v.grid, Boundary::Free);
    if axis < v.grid.dim {
        let taps = one_sided_taps(v.grid.h(axis), forward);
        apply_axis_adjoint(&v.grid, &v.data, axis, &taps, bc.compact_ghost(), &mut out.data);
    }
    out
}

/// Compact five-point (seven-point in 3D) Laplacian. Symmetric for
/// Dirichlet and Neumann tags.
pub fn lapl<T: FieldValue>(f: &Field<T>) -> Field<T> {
    let mut out = Field::zeros(f.grid, Boundary::Free);
    for axis in 0..f.grid.dim {
        let h2 = f.grid.h(axis).powi(2);
        let taps = [(-1, 1.0 / h2), (0, -2.0 / h2), (1, 1.0 / h2)];
        apply_axis(&f.grid, &f.data, axis, &taps, f.bc.compact_ghost(), &mut out.data);
    }
    out
}

pub fn grad(f: &ScalarField) -> VectorField {
    let mut out: VectorField = Field::zeros(f.grid, Boundary::Free);
    for axis in 0..f.grid.dim {
        let d = partial(f, axis);
        for (o, v) in out.data.iter_mut().zip(&d.data) {
            o[axis] = *v;
        }
    }
    out
}

/// `[∂₁Q, ∂₂Q, ∂₃Q]`.
pub fn grad_q(q: &QField) -> [QField; 3] {
    [partial(q, 0), partial(q, 1), partial(q, 2)]
}

/// Velocity gradient with `(∇u)_ij = ∂_j u_i`.
pub fn grad_vec(u: &VectorField) -> MatField {
    let mut out: MatField = Field::zeros(u.grid, Boundary::Free);
    for axis in 0..u.grid.dim {
        let d = partial(u, axis);
        for (o, v) in out.data.iter_mut().zip(&d.data) {
            o.set_column(axis, v);
        }
    }
    out
}

pub fn div(v: &VectorField) -> ScalarField {
    let mut out: ScalarField = Field::zeros(v.grid, Boundary::Free);
    for axis in 0..v.grid.dim {
        let d = partial(v, axis);
        for (o, dv) in out.data.iter_mut().zip(&d.data) {
            *o += dv[axis];
        }
    }
    out
}

/// `∇Δu`, entry `(i, j) = ∂_j (Δu)_i`. The Laplacian carries no boundary
/// condition, so the outer gradient extrapolates.
pub fn grad_lapl(v: &VectorField) -> MatField {
    let mut l = lapl(v);
    l.bc = Boundary::Free;
    grad_vec(&l)
}

/// `(u·∇)f` with a second-order upwind stencil per axis.
pub fn advect<T: FieldValue>(f: &Field<T>, u: &VectorField) -> Result<Field<T>, FieldError> {
    f.check_grid(u)?;
    let grid = f.grid;
    let rule = f.bc.first_order_ghost();
    let mut out = Field::zeros(grid, Boundary::Free);
    for axis in 0..grid.dim {
        let n = grid.n[axis];
        let stride = grid.stride(axis);
        let inv = 0.5 / grid.h(axis);
        for idx in 0..grid.cells() {
            let ua = u.data[idx][axis];
            if ua == 0.0 {
                continue;
            }
            let c = grid.coords(idx)[axis] as isize;
            let base = idx - c as usize * stride;
            let taps: [(isize, f64); 3] = if ua > 0.0 {
                [(-2, inv), (-1, -4.0 * inv), (0, 3.0 * inv)]
            } else {
                [(0, -3.0 * inv), (1, 4.0 * inv), (2, -inv)]
            };
            let mut d = T::zero();
            for (off, w) in taps {
                let (entries, len) = resolve(rule, n, c + off);
                for &(j, coef) in &entries[..len] {
                    d = d + f.data[base + j * stride] * (w * coef);
                }
            }
            out.data[idx] = out.data[idx] + d * ua;
        }
    }
    Ok(out)
}

/// Midpoint-rule `∫ f:g`.
pub fn inner<T: FieldValue>(f: &Field<T>, g: &Field<T>) -> Result<f64, FieldError> {
    f.check_grid(g)?;
    let s: f64 = f.data.iter().zip(&g.data).map(|(a, b)| a.dot(b)).sum();
    Ok(s * f.grid.cell_volume())
}

/// Midpoint-rule `∫ mask · f:g`.
pub fn restricted_inner<T: FieldValue>(
    f: &Field<T>,
    g: &Field<T>,
    mask: &ScalarField,
) -> Result<f64, FieldError> {
    f.check_grid(g)?;
    f.check_grid(mask)?;
    let s: f64 = f
        .data
        .iter()
        .zip(&g.data)
        .zip(&mask.data)
        .map(|((a, b), m)| m * a.dot(b))
        .sum();
    Ok(s * f.grid.cell_volume())
}

/// Momentum source from the nematic stresses:
/// `f_i = −(H + nφQ):∂_iQ + [div(QH − HQ)]_i`.
///
/// The divergence is the negative transpose of the velocity gradient used
/// for the corotation, so `∫ u·div σ = −∫ σ:∇u` holds exactly on the grid.
pub fn elastic_force(q: &QField, h: &QField, penalty_q: &QField) -> Result<VectorField, FieldError> {
    q.check_grid(h)?;
    q.check_grid(penalty_q)?;
    let grid: Grid = q.grid;
    let dq = grad_q(q);
    let mut force: VectorField = Field::zeros(grid, Boundary::Free);
    for idx in 0..grid.cells() {
        let drive: QTensor = h.data[idx] + penalty_q.data[idx];
        let mut f = Vec3::zeros();
        for a in 0..grid.dim {
            f[a] = -drive.ddot(&dq[a].data[idx]);
        }
        force.data[idx] = f;
    }
    let sigma: Vec<Mat3> = q.data.iter().zip(&h.data).map(|(qq, hh)| antisym_stress(qq, hh)).collect();
    for j in 0..grid.dim {
        let col: VectorField =
            Field::from_data(grid, Boundary::Free, sigma.iter().map(|s| s.column(j).into_owned()).collect());
        let adj = partial_adjoint(&col, j, Boundary::Dirichlet);
        force.axpy(-1.0, &adj);
    }
    if grid.dim == 2 {
        for f in &mut force.data {
            f[2] = 0.0;
        }
    }
    Ok(force)
}
