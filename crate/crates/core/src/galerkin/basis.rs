//! Planar spectral bases: Dirichlet sine products times the five
//! symmetric traceless unit tensors for `Q`, and solenoidal Fourier modes on
//! the periodic box for `u`.

use std::f64::consts::PI;

use crate::tensor::{Mat3, QTensor, Vec3};

use super::GalerkinError;

pub const MAX_MODES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QMode {
    /// Half-wave counts along x and y.
    pub m: [usize; 2],
    /// Index into [`QTensor::basis`].
    pub component: usize,
    /// Eigenvalue of `−Δ`.
    pub lambda: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UMode {
    /// Wave numbers; the mode varies like `cos` or `sin` of `κ·x` with
    /// `κ = 2π (k₁/L₁, k₂/L₂)`.
    pub k: [i64; 2],
    pub sine: bool,
    /// `|κ|²`.
    pub omega: f64,
}

/// Basis functions tabulated on a midpoint quadrature grid.
#[derive(Clone, Debug)]
pub struct SpectralBasis {
    pub len: [f64; 2],
    pub q_modes: Vec<QMode>,
    pub u_modes: Vec<UMode>,
    /// Quadrature points per axis.
    pub nq: [usize; 2],
    pub weight: f64,
    pub points: Vec<Vec3>,
    /// Per point, per Q-mode: scalar profile and its x, y derivatives.
    pub(crate) q_tab: Vec<Vec<[f64; 3]>>,
    /// Per point, per u-mode: value and gradient `G_ij = ∂_j v_i`.
    pub(crate) u_tab: Vec<Vec<(Vec3, Mat3)>>,
    pub(crate) tensors: [QTensor; 5],
}

fn q_modes(k: usize, len: [f64; 2]) -> Vec<QMode> {
    let reach = k + 1;
    let mut modes = Vec::new();
    for m1 in 1..=reach {
        for m2 in 1..=reach {
            let lambda = PI * PI * ((m1 as f64 / len[0]).powi(2) + (m2 as f64 / len[1]).powi(2));
            for component in 0..5 {
                modes.push(QMode { m: [m1, m2], component, lambda });
            }
        }
    }
    modes.sort_by(|a, b| a.lambda.total_cmp(&b.lambda).then(a.m.cmp(&b.m)).then(a.component.cmp(&b.component)));
    modes.truncate(k);
    modes
}

fn u_modes(k: usize, len: [f64; 2]) -> Vec<UMode> {
    let reach = k as i64 + 1;
    let mut modes = Vec::new();
    for k1 in -reach..=reach {
        for k2 in -reach..=reach {
            // one representative of ±κ
            if k1 < 0 || (k1 == 0 && k2 <= 0) {
                continue;
            }
            let kx = 2.0 * PI * k1 as f64 / len[0];
            let ky = 2.0 * PI * k2 as f64 / len[1];
            let omega = kx * kx + ky * ky;
            for sine in [false, true] {
                modes.push(UMode { k: [k1, k2], sine, omega });
            }
        }
    }
    modes.sort_by(|a, b| a.omega.total_cmp(&b.omega).then(a.k.cmp(&b.k)).then(a.sine.cmp(&b.sine)));
    modes.truncate(k);
    modes
}

impl SpectralBasis {
    /// `k` modes for `Q` and `k` for `u` on the box `[0, L₁] × [0, L₂]`.
    /// The quadrature grid integrates every product the oracle forms (up to
    /// quartic in the modes) exactly.
    pub fn new(k: usize, len: [f64; 2]) -> Result<Self, GalerkinError> {
        if k == 0 || k > MAX_MODES {
            return Err(GalerkinError::Invalid(format!("k: 1 <= k <= {MAX_MODES} (got {k})")));
        }
        if !(len[0] > 0.0 && len[1] > 0.0) {
            return Err(GalerkinError::Invalid(format!("lengths: L > 0 (got {len:?})")));
        }
        let q_modes = q_modes(k, len);
        let u_modes = u_modes(k, len);
        // highest wave number per axis in units of π/L
        let mut nq = [16usize; 2];
        for axis in 0..2 {
            let mq = q_modes.iter().map(|m| m.m[axis]).max().unwrap_or(0);
            let mu = u_modes.iter().map(|m| 2 * m.k[axis].unsigned_abs() as usize).max().unwrap_or(0);
            nq[axis] = nq[axis].max(2 * mq.max(mu) + 2);
        }
        Self::with_quadrature(k, len, nq, q_modes, u_modes)
    }

    /// Same modes on a caller-chosen quadrature grid. Errors when the grid
    /// has fewer than four points per period of the highest mode.
    pub fn with_points(k: usize, len: [f64; 2], nq: [usize; 2]) -> Result<Self, GalerkinError> {
        let base = Self::new(k, len)?;
        for axis in 0..2 {
            let mq = base.q_modes.iter().map(|m| m.m[axis]).max().unwrap_or(0);
            let mu = base.u_modes.iter().map(|m| 2 * m.k[axis].unsigned_abs() as usize).max().unwrap_or(0);
            let needed = 2 * mq.max(mu);
            if nq[axis] < needed {
                return Err(GalerkinError::UnderResolved { axis, points: nq[axis], needed });
            }
        }
        Self::with_quadrature(k, len, nq, base.q_modes, base.u_modes)
    }

    fn with_quadrature(
        _k: usize,
        len: [f64; 2],
        nq: [usize; 2],
        q_modes: Vec<QMode>,
        u_modes: Vec<UMode>,
    ) -> Result<Self, GalerkinError> {
        let area = len[0] * len[1];
        let qn = 2.0 / area.sqrt();
        let un = (2.0 / area).sqrt();
        let mut points = Vec::with_capacity(nq[0] * nq[1]);
        let mut q_tab = Vec::with_capacity(points.capacity());
        let mut u_tab = Vec::with_capacity(points.capacity());
        for j in 0..nq[1] {
            for i in 0..nq[0] {
                let x = Vec3::new((i as f64 + 0.5) * len[0] / nq[0] as f64, (j as f64 + 0.5) * len[1] / nq[1] as f64, 0.0);
                q_tab.push(
                    q_modes
                        .iter()
                        .map(|m| {
                            let (ax, ay) = (m.m[0] as f64 * PI / len[0], m.m[1] as f64 * PI / len[1]);
                            let (sx, cx) = (ax * x[0]).sin_cos();
                            let (sy, cy) = (ay * x[1]).sin_cos();
                            [qn * sx * sy, qn * ax * cx * sy, qn * ay * sx * cy]
                        })
                        .collect(),
                );
                u_tab.push(
                    u_modes
                        .iter()
                        .map(|m| {
                            let kv = Vec3::new(2.0 * PI * m.k[0] as f64 / len[0], 2.0 * PI * m.k[1] as f64 / len[1], 0.0);
                            let dir = Vec3::new(-kv[1], kv[0], 0.0) / kv.norm();
                            let (s, c) = kv.dot(&x).sin_cos();
                            // value f(κ·x) and derivative f'
                            let (f, df) = if m.sine { (s, c) } else { (c, -s) };
                            (dir * (un * f), dir * kv.transpose() * (un * df))
                        })
                        .collect(),
                );
                points.push(x);
            }
        }
        Ok(SpectralBasis {
            len,
            q_modes,
            u_modes,
            nq,
            weight: area / (nq[0] * nq[1]) as f64,
            points,
            q_tab,
            u_tab,
            tensors: QTensor::basis(),
        })
    }

    pub fn k(&self) -> usize {
        self.q_modes.len()
    }

    /// `Q`, `∂ₓQ` and `∂ᵧQ` at quadrature point `p`.
    pub fn eval_q(&self, coeffs: &[f64], p: usize) -> [QTensor; 3] {
        let mut out = [QTensor::ZERO; 3];
        for ((c, m), t) in coeffs.iter().zip(&self.q_modes).zip(&self.q_tab[p]) {
            let b = self.tensors[m.component] * *c;
            out[0] += b * t[0];
            out[1] += b * t[1];
            out[2] += b * t[2];
        }
        out
    }

    /// `u` and `∇u` at quadrature point `p`.
    pub fn eval_u(&self, coeffs: &[f64], p: usize) -> (Vec3, Mat3) {
        let mut u = Vec3::zeros();
        let mut g = Mat3::zeros();
        for (c, (v, gv)) in coeffs.iter().zip(&self.u_tab[p]) {
            u += v * *c;
            g += gv * *c;
        }
        (u, g)
    }

    /// Quadrature coefficients of a pointwise `Q`-valued function.
    pub fn project_q(&self, f: impl Fn(usize) -> QTensor) -> Vec<f64> {
        let mut out = vec![0.0; self.q_modes.len()];
        for p in 0..self.points.len() {
            let v = f(p);
            for ((o, m), t) in out.iter_mut().zip(&self.q_modes).zip(&self.q_tab[p]) {
                *o += v.ddot(&self.tensors[m.component]) * t[0];
            }
        }
        out.iter_mut().for_each(|o| *o *= self.weight);
        out
    }

    /// Quadrature inner products of a vector function with every u-mode.
    pub fn project_u(&self, f: impl Fn(usize) -> Vec3) -> Vec<f64> {
        let mut out = vec![0.0; self.u_modes.len()];
        for p in 0..self.points.len() {
            let v = f(p);
            for (o, (w, _)) in out.iter_mut().zip(&self.u_tab[p]) {
                *o += v.dot(w);
            }
        }
        out.iter_mut().for_each(|o| *o *= self.weight);
        out
    }
}
