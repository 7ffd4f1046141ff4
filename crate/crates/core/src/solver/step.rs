//! One time step of the penalized scheme.
//!
//! Order: rasterize `φ`; molecular field; `Q` update (transport, corotation
//! and the cubic/quartic bulk terms explicit, the rest implicit); molecular
//! field again with the new `Q`; velocity update with the elastic force
//! (advection explicit, viscosity and the `δ` term implicit) followed by the
//! projection; rigid read-off and pose advance; contact rules.

use crate::fields::{
    advect, elastic_force, grad_vec, lapl, project_divfree_masked, Boundary, Field, QField, ScalarField,
    VectorField,
};
use crate::rigid::{
    advance_pose, body_distance, boundary_distance, collision_stick, inertia, mass_and_center, merge_bodies,
    pd_feedback, project_rigid, rasterize, rigid_velocity, BodyState, IndicatorField,
};
use crate::tensor::{bulk_derivative, corotation_unchecked, molecular_field, sym_antisym, QTensor, Vec3};

use super::config::{Penalty, SimConfig};
use super::operators::{default_cap, grad_lapl_energy, solve_q, solve_velocity, weighted_strain};
use super::state::{body_error, free_cells, BodyEvent, SimState};
use super::SolverError;

/// Dissipation increments and solver statistics of one step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    pub diss_visc: f64,
    pub diss_h: f64,
    pub diss_delta: f64,
    pub diss_damper: f64,
    pub strain_body: f64,
    pub cg_iterations: usize,
}

fn penalty_field(phi: &ScalarField, cfg: &SimConfig) -> Vec<f64> {
    let n = cfg.penalty.coefficient();
    phi.data.iter().map(|p| n * p).collect()
}

/// `H = ΔQ − ∂f_b/∂Q − nφQ` cell by cell.
pub fn compute_h(q: &QField, phi: &ScalarField, cfg: &SimConfig) -> QField {
    let mut qd = q.clone();
    qd.bc = Boundary::Dirichlet;
    let l = lapl(&qd);
    let pen = penalty_field(phi, cfg);
    let data = (0..q.data.len()).map(|i| molecular_field(&l.data[i], &q.data[i], pen[i], &cfg.material)).collect();
    Field::from_data(q.grid, Boundary::Free, data)
}

/// Returns the new `Q` and the molecular field the update actually used
/// (implicit linear part, explicit nonlinear part).
pub fn step_q(
    q: &QField,
    u: &VectorField,
    phi: &ScalarField,
    cfg: &SimConfig,
    dt: f64,
) -> Result<(QField, QField, usize), SolverError> {
    let grid = q.grid;
    let mc = &cfg.material;
    let dt_gamma = dt * mc.gamma;
    if !(1.0 + dt_gamma * mc.a > 0.0) {
        return Err(SolverError::Config(format!(
            "time.dt: 1 + dt*gamma*a > 0 (got {})",
            1.0 + dt_gamma * mc.a
        )));
    }
    let adv = advect(q, u)?;
    let grad_u = grad_vec(u);
    let pen = penalty_field(phi, cfg);
    let diag: Vec<f64> = pen.iter().map(|p| mc.a + p).collect();
    let mut nonlinear = Vec::with_capacity(grid.cells());
    let mut rhs: QField = Field::zeros(grid, Boundary::Dirichlet);
    for i in 0..grid.cells() {
        let (_, sig) = sym_antisym(&grad_u.data[i]);
        let transport = corotation_unchecked(&sig, &q.data[i]) - adv.data[i];
        let nl = bulk_derivative(&q.data[i], mc) - q.data[i] * mc.a;
        rhs.data[i] = q.data[i] + (transport - nl * mc.gamma) * dt;
        nonlinear.push(nl);
    }
    let cap = default_cap(&grid, cfg.cg.max_iter);
    let (mut q_new, out) = solve_q(&rhs, &diag, dt_gamma, cfg.cg.rel_tol, cap)?;
    let l = lapl(&q_new);
    let data = (0..grid.cells()).map(|i| l.data[i] - q_new.data[i] * diag[i] - nonlinear[i]).collect();
    let h_used = Field::from_data(grid, Boundary::Free, data);
    if cfg.penalty == Penalty::Infinite {
        for (v, p) in q_new.data.iter_mut().zip(&phi.data) {
            if *p > 0.0 {
                *v = QTensor::ZERO;
            }
        }
    }
    Ok((q_new, h_used, out.iterations))
}

pub struct VelocityUpdate {
    pub u: VectorField,
    pub p: ScalarField,
    /// Field right after the implicit solve, before any projection.
    pub u_star: VectorField,
    pub cg_iterations: usize,
}

/// Semi-implicit momentum update followed by the projection (and, with an
/// infinite penalty, by imposing rigid motion on every free body).
pub fn step_u(
    state: &SimState,
    ind: &IndicatorField,
    q_new: &QField,
    h_new: &QField,
    cfg: &SimConfig,
    dt: f64,
) -> Result<VelocityUpdate, SolverError> {
    let grid = cfg.grid;
    let pen = penalty_field(&ind.phi, cfg);
    let pen_q: QField =
        Field::from_data(grid, Boundary::Free, q_new.data.iter().zip(&pen).map(|(q, p)| *q * *p).collect());
    let mut force = elastic_force(q_new, h_new, &pen_q)?;
    if let Some(fb) = &cfg.feedback {
        if let Some(i) = state.bodies.iter().position(|b| b.id == fb.body && !b.frozen) {
            let b = &state.bodies[i];
            let w = pd_feedback(&b.h, &b.l, &fb.target, fb.kp, fb.kd);
            let mask = ind.mask_of(i);
            let (m, _) = mass_and_center(&mask)?;
            for (f, s) in force.data.iter_mut().zip(&mask.data) {
                if *s > 0.0 {
                    *f += w * (s / m);
                }
            }
        }
    }
    let adv = advect(&state.u, &state.u)?;
    let mut rhs = state.u.clone();
    rhs.axpy(-dt, &adv);
    rhs.axpy(dt, &force);
    if grid.dim == 2 {
        rhs.data.iter_mut().for_each(|v| v[2] = 0.0);
    }
    let nu: Vec<f64> = pen.iter().map(|p| cfg.material.mu + p).collect();
    let cap = default_cap(&grid, cfg.cg.max_iter);
    let (u_star, out) = solve_velocity(&rhs, &nu, dt, cfg.delta, cfg.cg.rel_tol, cap)?;
    let free = free_cells(ind, &state.bodies);
    let mut proj = project_divfree_masked(&u_star, Some(&free), &cfg.cg)?;
    let mut iterations = out.iterations + proj.cg.iterations;
    if cfg.penalty == Penalty::Infinite && !state.bodies.is_empty() {
        let mut u = proj.u.clone();
        for (i, b) in state.bodies.iter().enumerate() {
            if b.frozen {
                continue;
            }
            let mask = ind.mask_of(i);
            let (l, w) = project_rigid(&u, &mask, b)?;
            let rigid = BodyState { l, omega: w, ..b.clone() };
            for (idx, s) in mask.data.iter().enumerate() {
                if *s > 0.0 {
                    u.data[idx] = rigid_velocity(&rigid, &grid.center(idx));
                }
            }
        }
        proj = project_divfree_masked(&u, Some(&free), &cfg.cg)?;
        iterations += proj.cg.iterations;
    }
    Ok(VelocityUpdate { u: proj.u, p: proj.p, u_star, cg_iterations: iterations })
}

fn contact_rules(bodies: &mut Vec<BodyState>, cfg: &SimConfig, step: usize, t: f64, events: &mut Vec<BodyEvent>) -> Result<(), SolverError> {
    let grid = cfg.grid;
    let stick_tol = cfg.stick_tol();
    for b in bodies.iter_mut() {
        if b.frozen {
            continue;
        }
        let distance = boundary_distance(b, &grid);
        if distance <= stick_tol {
            *b = collision_stick(b, &grid, stick_tol)?;
            events.push(BodyEvent::Stick { step, t, id: b.id, distance });
        }
    }
    let merge_tol = cfg.merge_tol();
    loop {
        let mut pair = None;
        'search: for i in 0..bodies.len() {
            for j in i + 1..bodies.len() {
                if (bodies[i].frozen && bodies[j].frozen) || body_distance(&bodies[i], &bodies[j]) > merge_tol {
                    continue;
                }
                pair = Some((i, j));
                break 'search;
            }
        }
        let Some((i, j)) = pair else { break };
        if bodies[i].frozen || bodies[j].frozen {
            let (hot, cold) = if bodies[i].frozen { (j, i) } else { (i, j) };
            let mut b = bodies[hot].clone();
            b.frozen = true;
            b.l = Vec3::zeros();
            b.omega = Vec3::zeros();
            events.push(BodyEvent::JointFreeze { step, t, id: b.id, partner: bodies[cold].id });
            bodies[hot] = b;
            continue;
        }
        let merged = merge_bodies(&bodies[i], &bodies[j], merge_tol, &grid).map_err(body_error)?;
        events.push(BodyEvent::Merge {
            step,
            t,
            first: bodies[i].clone(),
            second: bodies[j].clone(),
            merged: merged.clone(),
        });
        bodies.remove(j);
        bodies[i] = merged;
    }
    Ok(())
}

/// Advances `state` by `dt`.
pub fn step(state: &SimState, cfg: &SimConfig, dt: f64) -> Result<(SimState, StepReport), SolverError> {
    let grid = cfg.grid;
    let ind = rasterize(&state.bodies, &grid).map_err(body_error)?;
    let pen_max = ind.phi.data.iter().cloned().fold(0.0, f64::max) * cfg.penalty.coefficient();
    let bound = cfg.cfl_bound(state.u.max_norm(), cfg.material.mu + pen_max);
    if dt > bound * (1.0 + 1e-9) {
        return Err(SolverError::Cfl { dt, bound });
    }

    let (q_new, h_used, q_iters) = step_q(&state.q, &state.u, &ind.phi, cfg, dt)?;
    let h_new = compute_h(&q_new, &ind.phi, cfg);
    let vel = step_u(state, &ind, &q_new, &h_new, cfg, dt)?;

    let pen = penalty_field(&ind.phi, cfg);
    let nu: Vec<f64> = pen.iter().map(|p| cfg.material.mu + p).collect();
    let mut report = StepReport {
        dt,
        diss_visc: dt * weighted_strain(&vel.u_star, &nu),
        diss_h: dt * cfg.material.gamma * h_used.data.iter().map(|h| h.norm_sq()).sum::<f64>() * grid.cell_volume(),
        diss_delta: if cfg.delta > 0.0 { dt * cfg.delta * grad_lapl_energy(&vel.u_star) } else { 0.0 },
        diss_damper: 0.0,
        strain_body: dt * weighted_strain(&vel.u_star, &ind.phi.data),
        cg_iterations: q_iters + vel.cg_iterations,
    };

    let mut bodies = state.bodies.clone();
    for (i, b) in bodies.iter_mut().enumerate() {
        if b.frozen {
            continue;
        }
        let mask = ind.mask_of(i);
        let (m, hc) = mass_and_center(&mask)?;
        b.m = m;
        b.j = inertia(&mask, &hc)?;
        let (l, w) = project_rigid(&vel.u, &mask, b)?;
        b.l = l;
        b.omega = w;
        if let Some(fb) = &cfg.feedback {
            if fb.body == b.id {
                report.diss_damper = dt * fb.kd * l.norm_squared();
            }
        }
        *b = advance_pose(b, dt);
    }
    let t = state.t + dt;
    let mut events = state.events.clone();
    contact_rules(&mut bodies, cfg, state.step + 1, t, &mut events)?;
    let phi = rasterize(&bodies, &grid).map_err(body_error)?;

    let next = SimState {
        t,
        step: state.step + 1,
        u: vel.u,
        p: vel.p,
        q: q_new,
        h: h_new,
        bodies,
        phi,
        events,
    };
    Ok((next, report))
}
