//! Pointwise Q-tensor algebra and the constitutive pieces of the co-rotational
//! Beris–Edwards model.
//!
//! A [`QTensor`] stores the five independent entries of a 3×3 symmetric,
//! traceless matrix. The `(3,3)` entry is always reconstructed as
//! `-q11 - q22`, so tracelessness is a property of the representation and
//! never has to be restored after arithmetic.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// General 3×3 real matrix (velocity gradients, strain, stresses).
pub type Mat3 = Matrix3<f64>;
/// Point or vector in physical space. Planar problems keep the third entry 0.
pub type Vec3 = Vector3<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("expected an antisymmetric matrix (max |S + S^T| = {deviation:.3e}, tolerance {tolerance:.3e})")]
    NotAntisymmetric { deviation: f64, tolerance: f64 },
    #[error("material constant violates {bound} (got {value})")]
    Material { bound: &'static str, value: f64 },
}

/// Symmetric traceless 3×3 tensor, stored as `[q11, q22, q12, q13, q23]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct QTensor(pub [f64; 5]);

impl QTensor {
    pub const ZERO: QTensor = QTensor([0.0; 5]);

    pub fn new(q11: f64, q22: f64, q12: f64, q13: f64, q23: f64) -> Self {
        QTensor([q11, q22, q12, q13, q23])
    }

    /// Uniaxial tensor `s (d ⊗ d - I/3)` for a director `d` (normalized here).
    pub fn uniaxial(s: f64, director: &Vec3) -> Self {
        let norm = director.norm();
        if norm == 0.0 {
            return Self::ZERO;
        }
        let d = director / norm;
        let m = (d * d.transpose() - Mat3::identity() / 3.0) * s;
        Self::from_mat(&m)
    }

    pub fn q33(&self) -> f64 {
        -self.0[0] - self.0[1]
    }

    pub fn to_mat(&self) -> Mat3 {
        let [q11, q22, q12, q13, q23] = self.0;
        Mat3::new(q11, q12, q13, q12, q22, q23, q13, q23, -q11 - q22)
    }

    /// Symmetric traceless part of `m`.
    pub fn from_mat(m: &Mat3) -> Self {
        let t = m.trace() / 3.0;
        QTensor([
            m[(0, 0)] - t,
            m[(1, 1)] - t,
            0.5 * (m[(0, 1)] + m[(1, 0)]),
            0.5 * (m[(0, 2)] + m[(2, 0)]),
            0.5 * (m[(1, 2)] + m[(2, 1)]),
        ])
    }

    /// Frobenius product `Q : P`.
    pub fn ddot(&self, other: &QTensor) -> f64 {
        let a = &self.0;
        let b = &other.0;
        a[0] * b[0]
            + a[1] * b[1]
            + (a[0] + a[1]) * (b[0] + b[1])
            + 2.0 * (a[2] * b[2] + a[3] * b[3] + a[4] * b[4])
    }

    pub fn norm_sq(&self) -> f64 {
        self.ddot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Frobenius product with a general matrix.
    pub fn ddot_mat(&self, m: &Mat3) -> f64 {
        self.to_mat().dot(m)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Orthonormal basis of the space of symmetric traceless matrices under `:`.
    pub fn basis() -> [QTensor; 5] {
        let r2 = std::f64::consts::SQRT_2;
        let r6 = 6f64.sqrt();
        [
            QTensor([1.0 / r2, -1.0 / r2, 0.0, 0.0, 0.0]),
            QTensor([1.0 / r6, 1.0 / r6, 0.0, 0.0, 0.0]),
            QTensor([0.0, 0.0, 1.0 / r2, 0.0, 0.0]),
            QTensor([0.0, 0.0, 0.0, 1.0 / r2, 0.0]),
            QTensor([0.0, 0.0, 0.0, 0.0, 1.0 / r2]),
        ]
    }
}

impl Add for QTensor {
    type Output = QTensor;
    fn add(self, rhs: QTensor) -> QTensor {
        let mut out = self;
        out += rhs;
        out
    }
}

impl AddAssign for QTensor {
    fn add_assign(&mut self, rhs: QTensor) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

impl Sub for QTensor {
    type Output = QTensor;
    fn sub(self, rhs: QTensor) -> QTensor {
        let mut out = self;
        out -= rhs;
        out
    }
}

impl SubAssign for QTensor {
    fn sub_assign(&mut self, rhs: QTensor) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
    }
}

impl Mul<f64> for QTensor {
    type Output = QTensor;
    fn mul(self, rhs: f64) -> QTensor {
        QTensor(self.0.map(|v| v * rhs))
    }
}

impl Neg for QTensor {
    type Output = QTensor;
    fn neg(self) -> QTensor {
        QTensor(self.0.map(|v| -v))
    }
}

/// Bulk coefficients, rotational mobility and viscosity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaterialConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub gamma: f64,
    pub mu: f64,
}

impl MaterialConstants {
    pub fn new(a: f64, b: f64, c: f64, gamma: f64, mu: f64) -> Result<Self, TensorError> {
        let mc = MaterialConstants { a, b, c, gamma, mu };
        mc.validate()?;
        Ok(mc)
    }

    pub fn validate(&self) -> Result<(), TensorError> {
        let checks = [
            ("c > 0", self.c),
            ("gamma > 0", self.gamma),
            ("mu > 0", self.mu),
        ];
        for (bound, value) in checks {
            if !(value > 0.0) {
                return Err(TensorError::Material { bound, value });
            }
        }
        if !self.a.is_finite() {
            return Err(TensorError::Material { bound: "a finite", value: self.a });
        }
        if !self.b.is_finite() {
            return Err(TensorError::Material { bound: "b finite", value: self.b });
        }
        Ok(())
    }
}

/// Returns `(D, Σ)`, the symmetric and antisymmetric parts of `g`.
pub fn sym_antisym(g: &Mat3) -> (Mat3, Mat3) {
    let gt = g.transpose();
    ((g + gt) * 0.5, (g - gt) * 0.5)
}

/// Landau–de Gennes bulk potential `a/2 tr(Q²) − b/3 tr(Q³) + c/4 tr(Q²)²`.
pub fn bulk_energy(q: &QTensor, mc: &MaterialConstants) -> f64 {
    let m = q.to_mat();
    let m2 = m * m;
    let tr2 = m2.trace();
    let tr3 = (m2 * m).trace();
    0.5 * mc.a * tr2 - mc.b / 3.0 * tr3 + 0.25 * mc.c * tr2 * tr2
}

/// `∂f_b/∂Q = aQ − b(Q² − tr(Q²)/3 I) + c Q tr(Q²)`, projected onto the
/// symmetric traceless matrices.
pub fn bulk_derivative(q: &QTensor, mc: &MaterialConstants) -> QTensor {
    let m = q.to_mat();
    let m2 = m * m;
    let tr2 = m2.trace();
    let quad = QTensor::from_mat(&m2);
    *q * (mc.a + mc.c * tr2) - quad * mc.b
}

/// Molecular field `ΔQ − ∂f_b/∂Q − penalty·Q` at one point.
pub fn molecular_field(
    lapl_q: &QTensor,
    q: &QTensor,
    penalty: f64,
    mc: &MaterialConstants,
) -> QTensor {
    *lapl_q - bulk_derivative(q, mc) - *q * penalty
}

/// Co-rotational coupling `ΣQ − QΣ`. `sig` must be antisymmetric.
pub fn corotation(sig: &Mat3, q: &QTensor) -> Result<QTensor, TensorError> {
    let scale = sig.amax();
    let deviation = (sig + sig.transpose()).amax();
    let tolerance = 1e-12 * scale;
    if deviation > tolerance {
        return Err(TensorError::NotAntisymmetric { deviation, tolerance });
    }
    Ok(corotation_unchecked(sig, q))
}

pub(crate) fn corotation_unchecked(sig: &Mat3, q: &QTensor) -> QTensor {
    let m = q.to_mat();
    QTensor::from_mat(&(sig * m - m * sig))
}

/// Ericksen stress `τ_ij = −∂_iQ : ∂_jQ` from the three partial derivatives.
pub fn ericksen_stress(grad_q: &[QTensor; 3]) -> Mat3 {
    Mat3::from_fn(|i, j| -grad_q[i].ddot(&grad_q[j]))
}

/// Antisymmetric stress `σ = QH − HQ`.
pub fn antisym_stress(q: &QTensor, h: &QTensor) -> Mat3 {
    let qm = q.to_mat();
    let hm = h.to_mat();
    qm * hm - hm * qm
}

/// `−(QΣ − ΣQ):H + (QH − HQ):G` with `Σ` the antisymmetric part of `g`.
/// Vanishes identically; used as a consistency probe.
pub fn cancellation_residual(q: &QTensor, h: &QTensor, g: &Mat3) -> f64 {
    let (_, sig) = sym_antisym(g);
    let qm = q.to_mat();
    let corot = qm * sig - sig * qm;
    -corot.dot(&h.to_mat()) + antisym_stress(q, h).dot(g)
}
