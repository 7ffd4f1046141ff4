use crate::tensor::{antisym_stress, sym_antisym};

use super::{GalerkinError, GalerkinState, GalerkinSystem};

/// Finite-difference rule for `dE/dt` in the energy identity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Differencing {
    /// Three-point centred, second order.
    Central2,
    /// Five-point centred, fourth order.
    #[default]
    Central4,
}

/// `(t, dE/dt + dissipation rate + indicator flux)` at every trajectory
/// point where the difference stencil fits. Zero up to time-integration and
/// differencing error.
pub fn energy_identity_residual(
    sys: &GalerkinSystem,
    traj: &[GalerkinState],
    differencing: Differencing,
) -> Result<Vec<(f64, f64)>, GalerkinError> {
    let reach = match differencing {
        Differencing::Central2 => 1,
        Differencing::Central4 => 2,
    };
    if traj.len() < 2 * reach + 1 {
        return Err(GalerkinError::Invalid(format!("trajectory needs at least {} states", 2 * reach + 1)));
    }
    let dt = traj[1].t - traj[0].t;
    let energy: Vec<f64> = traj.iter().map(|s| sys.energy(s).total()).collect();
    let mut out = Vec::with_capacity(traj.len() - 2 * reach);
    for i in reach..traj.len() - reach {
        let de = match differencing {
            Differencing::Central2 => (energy[i + 1] - energy[i - 1]) / (2.0 * dt),
            Differencing::Central4 => {
                (energy[i - 2] - 8.0 * energy[i - 1] + 8.0 * energy[i + 1] - energy[i + 2]) / (12.0 * dt)
            }
        };
        let s = &traj[i];
        out.push((s.t, de + sys.dissipation_rate(s) + sys.indicator_flux(s)));
    }
    Ok(out)
}

/// Least-squares slope of `log r` against `log dt`.
pub fn fitted_order(dts: &[f64], residuals: &[f64]) -> f64 {
    let xs: Vec<f64> = dts.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = residuals.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Momentum weak-form residual over the slab `[t₀, t₂]` with every velocity
/// mode as a time-independent test function:
///
/// `R_l = ⟨u(t₂) − u(t₀), v_l⟩ + ∫ [−(u⊗u):∇v_l + ν D(u):D(v_l) + δ ∇Δu·∇Δv_l
///        + (v_l·∇)Q:(H + nφQ) + (QH − HQ):∇v_l] dt`,
///
/// with the time integral by Simpson's rule on three equally spaced states.
/// Returns `max_l |R_l|`.
pub fn weak_residual(sys: &GalerkinSystem, slab: &[GalerkinState; 3]) -> f64 {
    let b = &sys.basis;
    let cfg = &sys.config;
    let k = b.u_modes.len();
    let span = slab[2].t - slab[0].t;
    let mut r: Vec<f64> = (0..k).map(|l| slab[2].d[l] - slab[0].d[l]).collect();
    for (s, w) in slab.iter().zip([1.0, 4.0, 1.0]) {
        let h = sys.molecular(&s.q);
        let scale = w * span / 6.0;
        for l in 0..k {
            r[l] += scale * cfg.delta * b.u_modes[l].omega.powi(3) * s.d[l];
        }
        for p in 0..b.points.len() {
            let [qp, qx, qy] = b.eval_q(&s.q, p);
            let hp = b.eval_q(&h, p)[0];
            let (u, g) = b.eval_u(&s.d, p);
            let (strain, _) = sym_antisym(&g);
            let nu = cfg.material.mu + cfg.penalty * sys.phi[p];
            let partner = hp + qp * (cfg.penalty * sys.phi[p]);
            let mut m = strain * nu - u * u.transpose();
            if cfg.coupling {
                m += antisym_stress(&qp, &hp);
            }
            let fx = qx.ddot(&partner);
            let fy = qy.ddot(&partner);
            for (rl, (v, gv)) in r.iter_mut().zip(&b.u_tab[p]) {
                *rl += scale * b.weight * (m.dot(gv) + v[0] * fx + v[1] * fy);
            }
        }
    }
    r.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::super::{integrate, GalerkinConfig, SpectralBasis};
    use super::*;
    use crate::tensor::MaterialConstants;

    // a 4×4 box keeps Γλ dt small across the step sizes below
    fn system() -> GalerkinSystem {
        let cfg = GalerkinConfig::new(MaterialConstants::new(-0.3, 0.8, 1.2, 1.0, 0.5).unwrap());
        GalerkinSystem::new(SpectralBasis::new(8, [4.0, 4.0]).unwrap(), cfg).unwrap()
    }

    fn max_abs(r: &[(f64, f64)]) -> f64 {
        r.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_trajectory_has_zero_residuals() {
        let sys = system();
        let traj = integrate(&sys, &GalerkinState::zeros(8), 1e-2, 6).unwrap();
        assert_eq!(max_abs(&energy_identity_residual(&sys, &traj, Differencing::Central4).unwrap()), 0.0);
        assert_eq!(weak_residual(&sys, &[traj[0].clone(), traj[1].clone(), traj[2].clone()]), 0.0);
    }

    #[test]
    fn central_difference_residual_is_second_order() {
        let sys = system();
        let s0 = GalerkinState::seeded(8, 3, 0.6);
        let mut res = Vec::new();
        let dts = [1e-2, 5e-3, 2.5e-3];
        for dt in dts {
            let traj = integrate(&sys, &s0, dt, (0.5 / dt).round() as usize).unwrap();
            res.push(max_abs(&energy_identity_residual(&sys, &traj, Differencing::Central2).unwrap()));
        }
        let order = fitted_order(&dts, &res);
        assert!((order - 2.0).abs() < 0.3, "{order} {res:?}");
    }

    #[test]
    fn five_point_residual_is_fourth_order() {
        let sys = system();
        let s0 = GalerkinState::seeded(8, 3, 0.6);
        let mut res = Vec::new();
        let dts = [1e-2, 5e-3, 2.5e-3];
        for dt in dts {
            let traj = integrate(&sys, &s0, dt, (0.5 / dt).round() as usize).unwrap();
            res.push(max_abs(&energy_identity_residual(&sys, &traj, Differencing::Central4).unwrap()));
        }
        let order = fitted_order(&dts, &res);
        assert!(order > 3.5, "{order} {res:?}");
    }

    #[test]
    fn weak_residual_shrinks_with_dt_and_sees_perturbations() {
        let sys = system();
        let s0 = GalerkinState::seeded(8, 6, 0.6);
        let mut res = Vec::new();
        for dt in [4e-3, 2e-3] {
            let traj = integrate(&sys, &s0, dt, 2).unwrap();
            res.push(weak_residual(&sys, &[traj[0].clone(), traj[1].clone(), traj[2].clone()]));
        }
        assert!(res[1] < res[0] / 16.0, "{res:?}");

        let traj = integrate(&sys, &s0, 2e-3, 2).unwrap();
        let base = weak_residual(&sys, &[traj[0].clone(), traj[1].clone(), traj[2].clone()]);
        for eps in [1e-6, 1e-4] {
            let mut end = traj[2].clone();
            end.d[3] += eps;
            let r = weak_residual(&sys, &[traj[0].clone(), traj[1].clone(), end]);
            assert!(r > 0.5 * eps && r < 2.0 * eps + base, "{eps}: {r}");
        }
    }

    #[test]
    fn fitted_order_recovers_power_laws() {
        let dts = [0.1, 0.05, 0.025];
        let r: Vec<f64> = dts.iter().map(|d: &f64| 3.0 * d.powi(4)).collect();
        assert!((fitted_order(&dts, &r) - 4.0).abs() < 1e-12);
    }
}
