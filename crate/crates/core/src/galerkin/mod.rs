//! Low-dimensional Galerkin truncation of the penalized system, used as an
//! ODE oracle for the energy identity, plus a weak-form residual probe.
//!
//! The oracle is planar: fields depend on `(x, y)`, `u` has no z component
//! and `Q` keeps all five components. `Q` lives in Dirichlet sine modes on
//! the box and `u` in solenoidal Fourier modes on the same box taken as
//! periodic. Every inner product is a midpoint sum on one quadrature grid, so
//! the algebra behind the energy identity holds exactly at the ODE level.

mod basis;
mod ode;
mod residual;

pub use basis::{QMode, SpectralBasis, UMode, MAX_MODES};
pub use ode::{integrate, GalerkinSystem};
pub use residual::{energy_identity_residual, fitted_order, weak_residual, Differencing};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::MaterialConstants;

#[derive(Debug, thiserror::Error)]
pub enum GalerkinError {
    #[error("invalid oracle setting: {0}")]
    Invalid(String),
    #[error("quadrature under-resolved on axis {axis}: {points} points, need at least {needed}")]
    UnderResolved { axis: usize, points: usize, needed: usize },
    #[error("coefficients blew up at t = {t} (norm {norm:e})")]
    BlowUp { t: f64, norm: f64 },
}

/// Static ball excluded by the penalty terms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleBody {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GalerkinConfig {
    /// `Γ` and `μ` may be zero here (conservative limit).
    pub material: MaterialConstants,
    pub penalty: f64,
    pub delta: f64,
    pub body: Option<OracleBody>,
    /// Keeps the corotation term in the `Q` equation and the antisymmetric
    /// stress in the momentum equation. They cancel in the energy rate.
    pub coupling: bool,
}

impl GalerkinConfig {
    pub fn new(material: MaterialConstants) -> Self {
        GalerkinConfig { material, penalty: 0.0, delta: 0.0, body: None, coupling: true }
    }

    pub fn validate(&self) -> Result<(), GalerkinError> {
        let mc = &self.material;
        let checks = [
            ("gamma >= 0", mc.gamma),
            ("mu >= 0", mc.mu),
            ("c >= 0", mc.c),
            ("n >= 0", self.penalty),
            ("delta >= 0", self.delta),
        ];
        for (bound, v) in checks {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(GalerkinError::Invalid(format!("{bound} (got {v})")));
            }
        }
        if !(mc.a.is_finite() && mc.b.is_finite()) {
            return Err(GalerkinError::Invalid("a, b finite".into()));
        }
        if let Some(b) = self.body {
            if !(b.radius > 0.0) {
                return Err(GalerkinError::Invalid(format!("body radius > 0 (got {})", b.radius)));
            }
        }
        Ok(())
    }
}

/// Coefficients of `Q = Σ qⱼ eⱼ` and `u = Σ dⱼ vⱼ` at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct GalerkinState {
    pub t: f64,
    pub q: Vec<f64>,
    pub d: Vec<f64>,
}

impl GalerkinState {
    pub fn zeros(k: usize) -> Self {
        GalerkinState { t: 0.0, q: vec![0.0; k], d: vec![0.0; k] }
    }

    /// Seeded coefficients of size `amplitude`, damped like `1/(1+j)`.
    pub fn seeded(k: usize, seed: u64, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |j: usize| amplitude * rng.gen_range(-1.0..1.0) / (1.0 + j as f64);
        let q = (0..k).map(&mut draw).collect();
        let d = (0..k).map(&mut draw).collect();
        GalerkinState { t: 0.0, q, d }
    }

    pub fn norm(&self) -> f64 {
        self.q.iter().chain(&self.d).map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.d).all(|v| v.is_finite())
    }
}
