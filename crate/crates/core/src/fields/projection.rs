//! Discrete Leray projection.
//!
//! With `C` the centred divergence of a Dirichlet velocity, the projection
//! solves `C Cᵀ p = −C u` and returns `u + Cᵀ p`. This is the orthogonal
//! projection onto `ker C` (up to the solver tolerance), so it never
//! increases kinetic energy. The pressure gradient is `∇p := −Cᵀ p`.

use super::cg::{conjugate_gradient, CgOutcome, CgSettings};
use super::stencil::{apply_axis, apply_axis_adjoint, Ghost};
use super::{Boundary, Field, FieldError, FieldValue, ScalarField, VectorField};
use crate::tensor::Vec3;

#[derive(Clone, Debug)]
pub struct Projection {
    pub u: VectorField,
    pub p: ScalarField,
    pub cg: CgOutcome,
}

/// Discrete divergence `C u`: centred differences with the wall value of
/// `u` linearly interpolated to zero.
pub fn divergence(u: &VectorField) -> ScalarField {
    let mut out: ScalarField = Field::zeros(u.grid, Boundary::Free);
    for axis in 0..u.grid.dim {
        let d = centred(u, axis, false);
        for (o, v) in out.data.iter_mut().zip(&d.data) {
            *o += v[axis];
        }
    }
    out
}

fn centred<T: FieldValue>(f: &Field<T>, axis: usize, transpose: bool) -> Field<T> {
    let grid = f.grid;
    let mut out = Field::zeros(grid, Boundary::Free);
    let h = grid.h(axis);
    let taps = [(-1, -0.5 / h), (1, 0.5 / h)];
    if transpose {
        apply_axis_adjoint(&grid, &f.data, axis, &taps, Ghost::Antisymmetric, &mut out.data);
    } else {
        apply_axis(&grid, &f.data, axis, &taps, Ghost::Antisymmetric, &mut out.data);
    }
    out
}

fn div_transpose(p: &ScalarField) -> VectorField {
    let mut out: VectorField = Field::zeros(p.grid, Boundary::Dirichlet);
    for axis in 0..p.grid.dim {
        let d = centred(p, axis, true);
        for (o, v) in out.data.iter_mut().zip(&d.data) {
            o[axis] = *v;
        }
    }
    out
}

fn default_cap(u: &VectorField) -> usize {
    10 * u.grid.n[..u.grid.dim].iter().copied().max().unwrap_or(8)
}

pub fn project_divfree(u: &VectorField, settings: &CgSettings) -> Result<Projection, FieldError> {
    project_divfree_masked(u, None, settings)
}

/// Projection restricted to fields vanishing where `free[idx]` is false.
/// Masked cells are zeroed on input and stay zero on output.
pub fn project_divfree_masked(
    u: &VectorField,
    free: Option<&[bool]>,
    settings: &CgSettings,
) -> Result<Projection, FieldError> {
    let grid = u.grid;
    let mask = |v: &mut VectorField| {
        if let Some(m) = free {
            for (x, keep) in v.data.iter_mut().zip(m) {
                if !keep {
                    *x = Vec3::zeros();
                }
            }
        }
    };
    let mut base = u.clone();
    base.bc = Boundary::Dirichlet;
    mask(&mut base);
    let rhs: Vec<f64> = divergence(&base).data.iter().map(|v| -v).collect();
    let mut p = vec![0.0; grid.cells()];
    let apply = |x: &[f64], out: &mut [f64]| {
        let pf = Field::from_data(grid, Boundary::Dirichlet, x.to_vec());
        let mut ct = div_transpose(&pf);
        mask(&mut ct);
        for (o, v) in out.iter_mut().zip(&divergence(&ct).data) {
            *o += v;
        }
    };
    let cap = settings.max_iter.unwrap_or_else(|| default_cap(u));
    // round-off floor on the divergence scale; keeps re-projection of an
    // already solenoidal field from chasing noise
    let floor = settings.rel_tol * 1e-1 * base.max_norm() / grid.h_min();
    let cg = conjugate_gradient(apply, &rhs, &mut p, settings.rel_tol, floor, cap)?;
    let pf = Field::from_data(grid, Boundary::Neumann, p);
    let mut corr = div_transpose(&pf);
    mask(&mut corr);
    base.axpy(1.0, &corr);
    Ok(Projection { u: base, p: pf, cg })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{inner, Grid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(&[32, 32], &[1.0, 1.0]).unwrap()
    }

    fn random_u(seed: u64) -> VectorField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = grid();
        let data = (0..g.cells()).map(|_| Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), 0.0)).collect();
        Field::from_data(g, Boundary::Dirichlet, data)
    }

    #[test]
    fn random_field_becomes_divergence_free() {
        let u = random_u(7);
        let pr = project_divfree(&u, &CgSettings::default()).unwrap();
        let bound = 1e-8 * u.max_norm() / grid().h_min();
        let d = divergence(&pr.u);
        assert!(d.max_norm() <= bound, "{} > {}", d.max_norm(), bound);
        // orthogonality: projected part is orthogonal to the removed part
        let mut removed = u.clone();
        removed.axpy(-1.0, &pr.u);
        let cross = inner(&pr.u, &removed).unwrap();
        assert!(cross.abs() < 1e-8 * inner(&u, &u).unwrap());
    }

    #[test]
    fn projection_is_idempotent() {
        let u = random_u(8);
        let once = project_divfree(&u, &CgSettings::default()).unwrap().u;
        let twice = project_divfree(&once, &CgSettings::default()).unwrap().u;
        let mut diff = twice.clone();
        diff.axpy(-1.0, &once);
        assert!(diff.max_norm() < 1e-8 * once.max_norm());
    }

    #[test]
    fn gradient_fields_are_removed() {
        // ψ = cos(πx)cos(πy) has zero normal derivative on the box
        let n = 64;
        let g = Grid::new(&[n, n], &[1.0, 1.0]).unwrap();
        let u = Field::from_fn(g, Boundary::Dirichlet, |x| {
            Vec3::new(
                -PI * (PI * x[0]).sin() * (PI * x[1]).cos(),
                -PI * (PI * x[0]).cos() * (PI * x[1]).sin(),
                0.0,
            )
        });
        let out = project_divfree(&u, &CgSettings::default()).unwrap().u;
        let ratio = (inner(&out, &out).unwrap() / inner(&u, &u).unwrap()).sqrt();
        assert!(ratio < 0.05, "remaining fraction {ratio}");
    }

    #[test]
    fn masked_cells_stay_zero() {
        let u = random_u(9);
        let g = grid();
        let free: Vec<bool> = (0..g.cells()).map(|i| g.center(i)[0] < 0.7).collect();
        let pr = project_divfree_masked(&u, Some(&free), &CgSettings::default()).unwrap();
        for (v, keep) in pr.u.data.iter().zip(&free) {
            if !keep {
                assert_eq!(*v, Vec3::zeros());
            }
        }
        let d = divergence(&pr.u);
        assert!(d.max_norm() <= 1e-8 * u.max_norm() / g.h_min());
    }
}
