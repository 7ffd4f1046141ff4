use crate::tensor::{antisym_stress, bulk_derivative, bulk_energy, corotation_unchecked, sym_antisym, QTensor};

use super::{GalerkinConfig, GalerkinError, GalerkinState, SpectralBasis};

/// Energy terms of a Galerkin state.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OracleEnergy {
    pub kinetic: f64,
    pub elastic: f64,
    pub bulk: f64,
    pub penalty: f64,
}

impl OracleEnergy {
    pub fn total(&self) -> f64 {
        self.kinetic + self.elastic + self.bulk + self.penalty
    }
}

/// Basis, parameters and the tabulated indicator of the oracle.
#[derive(Clone, Debug)]
pub struct GalerkinSystem {
    pub basis: SpectralBasis,
    pub config: GalerkinConfig,
    pub phi: Vec<f64>,
}

impl GalerkinSystem {
    pub fn new(basis: SpectralBasis, config: GalerkinConfig) -> Result<Self, GalerkinError> {
        config.validate()?;
        let phi = basis
            .points
            .iter()
            .map(|x| match config.body {
                Some(b) if (x[0] - b.center[0]).hypot(x[1] - b.center[1]) <= b.radius => 1.0,
                _ => 0.0,
            })
            .collect();
        Ok(GalerkinSystem { basis, config, phi })
    }

    fn project_onto_q(&self, out: &mut [f64], p: usize, v: &QTensor) {
        let b = &self.basis;
        for ((o, m), t) in out.iter_mut().zip(&b.q_modes).zip(&b.q_tab[p]) {
            *o += b.weight * t[0] * v.ddot(&b.tensors[m.component]);
        }
    }

    /// Coefficients of `H = π(ΔQ − ∂f_b/∂Q − nφQ)`.
    pub fn molecular(&self, q: &[f64]) -> Vec<f64> {
        let b = &self.basis;
        let mut h: Vec<f64> = q.iter().zip(&b.q_modes).map(|(c, m)| -m.lambda * c).collect();
        let n = self.config.penalty;
        for p in 0..b.points.len() {
            let qp = b.eval_q(q, p)[0];
            let w = bulk_derivative(&qp, &self.config.material) + qp * (n * self.phi[p]);
            self.project_onto_q(&mut h, p, &(-w));
        }
        h
    }

    /// Right-hand sides `(dq/dt, dd/dt)` of the truncated system.
    pub fn rhs(&self, s: &GalerkinState) -> (Vec<f64>, Vec<f64>) {
        let b = &self.basis;
        let cfg = &self.config;
        let h = self.molecular(&s.q);
        let mut dq: Vec<f64> = h.iter().map(|v| cfg.material.gamma * v).collect();
        let mut dd: Vec<f64> = s.d.iter().zip(&b.u_modes).map(|(c, m)| -cfg.delta * m.omega.powi(3) * c).collect();
        for p in 0..b.points.len() {
            let [qp, qx, qy] = b.eval_q(&s.q, p);
            let hp = b.eval_q(&h, p)[0];
            let (u, g) = b.eval_u(&s.d, p);
            let (strain, sig) = sym_antisym(&g);
            let mut transport = -(qx * u[0] + qy * u[1]);
            if cfg.coupling {
                transport += corotation_unchecked(&sig, &qp);
            }
            self.project_onto_q(&mut dq, p, &transport);

            let nu = cfg.material.mu + cfg.penalty * self.phi[p];
            let force_partner = hp + qp * (cfg.penalty * self.phi[p]);
            let mut f = -(g * u);
            f[0] -= qx.ddot(&force_partner);
            f[1] -= qy.ddot(&force_partner);
            let mut m = -strain * nu;
            if cfg.coupling {
                m -= antisym_stress(&qp, &hp);
            }
            for (o, (v, gv)) in dd.iter_mut().zip(&b.u_tab[p]) {
                *o += b.weight * (f.dot(v) + m.dot(gv));
            }
        }
        (dq, dd)
    }

    pub fn energy(&self, s: &GalerkinState) -> OracleEnergy {
        let b = &self.basis;
        let mut e = OracleEnergy {
            kinetic: 0.5 * s.d.iter().map(|v| v * v).sum::<f64>(),
            elastic: 0.5 * s.q.iter().zip(&b.q_modes).map(|(c, m)| m.lambda * c * c).sum::<f64>(),
            ..Default::default()
        };
        for p in 0..b.points.len() {
            let qp = b.eval_q(&s.q, p)[0];
            e.bulk += bulk_energy(&qp, &self.config.material);
            e.penalty += 0.5 * self.config.penalty * self.phi[p] * qp.norm_sq();
        }
        e.bulk *= b.weight;
        e.penalty *= b.weight;
        e
    }

    /// `Γ‖H‖² + ∫(μ+nφ)|D u|² + δ‖∇Δu‖²`.
    pub fn dissipation_rate(&self, s: &GalerkinState) -> f64 {
        let b = &self.basis;
        let cfg = &self.config;
        let h = self.molecular(&s.q);
        let mut rate = cfg.material.gamma * h.iter().map(|v| v * v).sum::<f64>()
            + cfg.delta * s.d.iter().zip(&b.u_modes).map(|(c, m)| m.omega.powi(3) * c * c).sum::<f64>();
        for p in 0..b.points.len() {
            let (_, g) = b.eval_u(&s.d, p);
            let (strain, _) = sym_antisym(&g);
            rate += b.weight * (cfg.material.mu + cfg.penalty * self.phi[p]) * strain.norm_squared();
        }
        rate
    }

    /// `n ∫ φ (u·∇)Q : Q`. The indicator here is static rather than carried
    /// by `u`, so this flux enters the energy balance; it vanishes for
    /// `n = 0` or without a body.
    pub fn indicator_flux(&self, s: &GalerkinState) -> f64 {
        if self.config.penalty == 0.0 || self.config.body.is_none() {
            return 0.0;
        }
        let b = &self.basis;
        let mut total = 0.0;
        for p in 0..b.points.len() {
            if self.phi[p] == 0.0 {
                continue;
            }
            let [qp, qx, qy] = b.eval_q(&s.q, p);
            let (u, _) = b.eval_u(&s.d, p);
            total += self.phi[p] * (qx * u[0] + qy * u[1]).ddot(&qp);
        }
        self.config.penalty * total * b.weight
    }

    /// Exact `dE/dt` along the ODE, `Σ dⱼ ḋⱼ − Σ hⱼ q̇ⱼ`.
    pub fn energy_rate(&self, s: &GalerkinState) -> f64 {
        let (dq, dd) = self.rhs(s);
        let h = self.molecular(&s.q);
        s.d.iter().zip(&dd).map(|(a, b)| a * b).sum::<f64>() - h.iter().zip(&dq).map(|(a, b)| a * b).sum::<f64>()
    }
}

fn axpy(s: &GalerkinState, k: &(Vec<f64>, Vec<f64>), h: f64) -> GalerkinState {
    GalerkinState {
        t: s.t + h,
        q: s.q.iter().zip(&k.0).map(|(a, b)| a + h * b).collect(),
        d: s.d.iter().zip(&k.1).map(|(a, b)| a + h * b).collect(),
    }
}

/// Classical RK4; returns `steps + 1` states including the initial one.
pub fn integrate(
    sys: &GalerkinSystem,
    initial: &GalerkinState,
    dt: f64,
    steps: usize,
) -> Result<Vec<GalerkinState>, GalerkinError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(GalerkinError::Invalid(format!("dt > 0 (got {dt})")));
    }
    let k = sys.basis.k();
    if initial.q.len() != k || initial.d.len() != k {
        return Err(GalerkinError::Invalid(format!("state size must equal k = {k}")));
    }
    let mut traj = Vec::with_capacity(steps + 1);
    traj.push(initial.clone());
    let mut s = initial.clone();
    for i in 1..=steps {
        let k1 = sys.rhs(&s);
        let k2 = sys.rhs(&axpy(&s, &k1, 0.5 * dt));
        let k3 = sys.rhs(&axpy(&s, &k2, 0.5 * dt));
        let k4 = sys.rhs(&axpy(&s, &k3, dt));
        let comb = |a: &[f64], b: &[f64], c: &[f64], d: &[f64]| -> Vec<f64> {
            (0..a.len()).map(|j| (a[j] + 2.0 * b[j] + 2.0 * c[j] + d[j]) / 6.0).collect()
        };
        let incr = (comb(&k1.0, &k2.0, &k3.0, &k4.0), comb(&k1.1, &k2.1, &k3.1, &k4.1));
        s = axpy(&s, &incr, dt);
        s.t = initial.t + i as f64 * dt;
        let norm = s.norm();
        if !s.is_finite() || norm > 1e12 {
            return Err(GalerkinError::BlowUp { t: s.t, norm });
        }
        traj.push(s.clone());
    }
    Ok(traj)
}
