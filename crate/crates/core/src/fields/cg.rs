//! Matrix-free conjugate gradient for symmetric positive (semi)definite
//! operators acting on slices of field values.

use super::{FieldError, FieldValue};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgSettings {
    pub rel_tol: f64,
    /// Absolute iteration cap; `None` uses the caller's default.
    pub max_iter: Option<usize>,
}

impl Default for CgSettings {
    fn default() -> Self {
        CgSettings { rel_tol: 1e-10, max_iter: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub rel_residual: f64,
}

fn dot<T: FieldValue>(a: &[T], b: &[T]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.dot(y)).sum()
}

/// Solves `A x = b` starting from `x`. Stops once
/// `‖b − Ax‖ ≤ max(rel_tol ‖b‖, abs_tol)`. A right-hand side already below
/// `abs_tol` (in particular `b = 0`) returns exact zeros.
pub fn conjugate_gradient<T: FieldValue>(
    mut apply: impl FnMut(&[T], &mut [T]),
    b: &[T],
    x: &mut [T],
    rel_tol: f64,
    abs_tol: f64,
    max_iter: usize,
) -> Result<CgOutcome, FieldError> {
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 || bnorm <= abs_tol {
        x.iter_mut().for_each(|v| *v = T::zero());
        return Ok(CgOutcome { iterations: 0, rel_residual: 0.0 });
    }
    let n = b.len();
    let mut ap = vec![T::zero(); n];
    apply(x, &mut ap);
    let mut r: Vec<T> = b.iter().zip(&ap).map(|(bi, ai)| *bi - *ai).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let target = (rel_tol * bnorm).max(abs_tol);
    for it in 0..max_iter {
        if rr.sqrt() <= target {
            return Ok(CgOutcome { iterations: it, rel_residual: rr.sqrt() / bnorm });
        }
        ap.iter_mut().for_each(|v| *v = T::zero());
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(FieldError::Indefinite);
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] = x[i] + p[i] * alpha;
            r[i] = r[i] - ap[i] * alpha;
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + p[i] * beta;
        }
    }
    if rr.sqrt() <= target {
        return Ok(CgOutcome { iterations: max_iter, rel_residual: rr.sqrt() / bnorm });
    }
    Err(FieldError::NotConverged { iterations: max_iter, residual: rr.sqrt() / bnorm })
}
