//! One-dimensional stencils along a grid axis with ghost-value resolution,
//! and their exact adjoints.

use super::{FieldValue, Grid};

/// How a value at a ghost index outside `0..n` is written in terms of
/// interior values. Rules are given for the lower end; the upper end mirrors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ghost {
    /// `f₋₁ = −f₀`, `f₋₂ = −f₁`.
    Antisymmetric,
    /// `f₋₁ = f₀`, `f₋₂ = f₁`.
    Symmetric,
    /// Quadratic extrapolation through `f₀, f₁, f₂`.
    Extrapolate,
    /// Quadratic through the wall value 0, `f₀` and `f₁`.
    WallQuadratic,
}

pub(crate) type Taps = [(isize, f64)];

/// Expansion of line index `i` (possibly a ghost) as `Σ coef · f[j]`.
#[inline]
pub(crate) fn resolve(rule: Ghost, n: usize, i: isize) -> ([(usize, f64); 3], usize) {
    let mut out = [(0usize, 0.0f64); 3];
    if i >= 0 && (i as usize) < n {
        out[0] = (i as usize, 1.0);
        return (out, 1);
    }
    let (depth, upper) = if i < 0 { ((-i) as usize, false) } else { (i as usize - n + 1, true) };
    let weights: &[(usize, f64)] = match (rule, depth) {
        (Ghost::Antisymmetric, 1) => &[(0, -1.0)],
        (Ghost::Antisymmetric, 2) => &[(1, -1.0)],
        (Ghost::Symmetric, 1) => &[(0, 1.0)],
        (Ghost::Symmetric, 2) => &[(1, 1.0)],
        (Ghost::Extrapolate, 1) => &[(0, 3.0), (1, -3.0), (2, 1.0)],
        (Ghost::Extrapolate, 2) => &[(0, 6.0), (1, -8.0), (2, 3.0)],
        (Ghost::WallQuadratic, 1) => &[(0, -2.0), (1, 1.0 / 3.0)],
        (Ghost::WallQuadratic, 2) => &[(0, -9.0), (1, 2.0)],
        _ => panic!("stencil reaches {depth} cells beyond the boundary"),
    };
    for (slot, &(j, w)) in out.iter_mut().zip(weights) {
        *slot = (if upper { n - 1 - j } else { j }, w);
    }
    (out, weights.len())
}

/// `out[c] (+)= Σ_taps w · f[c + off]` along `axis`.
pub(crate) fn apply_axis<T: FieldValue>(
    grid: &Grid,
    data: &[T],
    axis: usize,
    taps: &Taps,
    rule: Ghost,
    out: &mut [T],
) {
    let n = grid.n[axis];
    let stride = grid.stride(axis);
    for idx in 0..data.len() {
        let c = grid.coords(idx)[axis];
        let base = idx - c * stride;
        let mut acc = out[idx];
        for &(off, w) in taps {
            let (entries, len) = resolve(rule, n, c as isize + off);
            for &(j, coef) in &entries[..len] {
                acc = acc + data[base + j * stride] * (w * coef);
            }
        }
        out[idx] = acc;
    }
}

/// Transpose of [`apply_axis`]: scatters `data` back through the same taps.
pub(crate) fn apply_axis_adjoint<T: FieldValue>(
    grid: &Grid,
    data: &[T],
    axis: usize,
    taps: &Taps,
    rule: Ghost,
    out: &mut [T],
) {
    let n = grid.n[axis];
    let stride = grid.stride(axis);
    for idx in 0..data.len() {
        let c = grid.coords(idx)[axis];
        let base = idx - c * stride;
        let v = data[idx];
        for &(off, w) in taps {
            let (entries, len) = resolve(rule, n, c as isize + off);
            for &(j, coef) in &entries[..len] {
                let t = base + j * stride;
                out[t] = out[t] + v * (w * coef);
            }
        }
    }
}
