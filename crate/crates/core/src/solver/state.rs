use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fields::{
    inner, partial, project_divfree_masked, Boundary, Field, Grid, QField, ScalarField, VectorField,
};
use crate::rigid::{
    boundary_distance, collision_stick, project_rigid, rasterize, BodyState, ColloidShape, IndicatorField,
    RigidError,
};
use crate::tensor::{bulk_energy, QTensor, Vec3};

use super::config::{Penalty, SimConfig};
use super::operators::elastic_energy;
use super::step::compute_h;
use super::SolverError;

#[derive(Clone, Debug, PartialEq)]
pub enum BodyEvent {
    Stick { step: usize, t: f64, id: usize, distance: f64 },
    Merge { step: usize, t: f64, first: BodyState, second: BodyState, merged: BodyState },
    /// A body touched an already frozen one and froze with it.
    JointFreeze { step: usize, t: f64, id: usize, partner: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub step: usize,
    pub u: VectorField,
    pub p: ScalarField,
    pub q: QField,
    pub h: QField,
    pub bodies: Vec<BodyState>,
    pub phi: IndicatorField,
    pub events: Vec<BodyEvent>,
}

fn smoothstep(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        s * s * (3.0 - 2.0 * s)
    }
}

/// Ramp from 0 at distance 0 to 1 at distance `width`; a step when `width = 0`.
fn ramp(distance: f64, width: f64) -> f64 {
    if width > 0.0 {
        smoothstep(distance / width)
    } else if distance > 0.0 {
        1.0
    } else {
        0.0
    }
}

fn wall_distance(x: &Vec3, grid: &Grid) -> f64 {
    (0..grid.dim).map(|a| x[a].min(grid.len[a] - x[a])).fold(f64::MAX, f64::min)
}

fn surface_distance(x: &Vec3, body: &BodyState) -> f64 {
    body.world_balls().map(|b| (x - b.offset).norm() - b.radius).fold(f64::MAX, f64::min)
}

pub(crate) fn body_error(e: RigidError) -> SolverError {
    match e {
        RigidError::OutsideDomain { id } => {
            SolverError::Config(format!("bodies.{id}: body must lie inside the container"))
        }
        other => SolverError::Rigid(other),
    }
}

pub fn initial_bodies(cfg: &SimConfig) -> Result<Vec<BodyState>, SolverError> {
    cfg.bodies
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let shape = ColloidShape::ball(b.radius).map_err(body_error)?;
            BodyState::new(i, shape, b.center, b.velocity, b.omega, &cfg.grid).map_err(body_error)
        })
        .collect()
}

fn initial_q(cfg: &SimConfig, bodies: &[BodyState]) -> QField {
    let grid = cfg.grid;
    let iq = cfg.init_q;
    let base = QTensor::uniaxial(iq.order, &iq.director);
    Field::from_fn(grid, Boundary::Dirichlet, |x| {
        let mut g = ramp(wall_distance(&x, &grid), iq.width);
        for b in bodies {
            g *= ramp(surface_distance(&x, b), iq.width);
        }
        base * g
    })
}

/// Unprojected initial velocity: curl of the potential described on
/// [`InitialU`](super::config::InitialU).
fn initial_potential(cfg: &SimConfig, bodies: &[BodyState]) -> VectorField {
    let grid = cfg.grid;
    let iu = cfg.init_u;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let planar = grid.dim == 2;
    let mut a: VectorField = Field::zeros(grid, Boundary::Free);
    for idx in 0..grid.cells() {
        let x = grid.center(idx);
        let mut pot = Vec3::zeros();
        let mut cover: f64 = 0.0;
        for b in bodies {
            let r = x - b.h;
            let reach = b.shape.components.iter().map(|c| c.offset.norm() + c.radius).fold(0.0, f64::max);
            let chi = 1.0 - ramp(r.norm() - reach, iu.width);
            cover = cover.max(chi);
            // curl(c ℓ×r) = ℓ needs c = 1 in the plane and ½ in space
            let lin = if planar { b.l.cross(&r) } else { b.l.cross(&r) * 0.5 };
            pot += (lin - b.omega * (0.5 * r.norm_squared())) * chi;
        }
        if iu.ambient != 0.0 {
            let s: f64 = (0..grid.dim).map(|k| (std::f64::consts::PI * x[k] / grid.len[k]).sin().powi(2)).product();
            pot[2] += iu.ambient * s;
        }
        if iu.noise != 0.0 {
            let draw = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            pot += draw * (iu.noise * (1.0 - cover));
        }
        if planar {
            pot[0] = 0.0;
            pot[1] = 0.0;
        }
        a.data[idx] = pot;
    }
    let d: Vec<VectorField> = (0..3).map(|k| partial(&a, k)).collect();
    let mut u: VectorField = Field::zeros(grid, Boundary::Dirichlet);
    for idx in 0..grid.cells() {
        let (dx, dy, dz) = (d[0].data[idx], d[1].data[idx], d[2].data[idx]);
        let mut v = Vec3::new(dy[2] - dz[1], dz[0] - dx[2], dx[1] - dy[0]);
        if planar {
            v[2] = 0.0;
        }
        u.data[idx] = v;
    }
    u
}

pub(crate) fn free_cells(ind: &IndicatorField, bodies: &[BodyState]) -> Vec<bool> {
    ind.owner.iter().map(|o| o.map_or(true, |i| !bodies[i].frozen)).collect()
}

pub fn initial_state(cfg: &SimConfig) -> Result<SimState, SolverError> {
    let grid = cfg.grid;
    let mut bodies = initial_bodies(cfg)?;
    let mut events = Vec::new();
    let tol = cfg.stick_tol();
    for b in bodies.iter_mut() {
        let distance = boundary_distance(b, &grid);
        if distance <= tol {
            *b = collision_stick(b, &grid, tol)?;
            events.push(BodyEvent::Stick { step: 0, t: 0.0, id: b.id, distance });
        }
    }
    let phi = rasterize(&bodies, &grid).map_err(body_error)?;
    let q = initial_q(cfg, &bodies);
    let raw = initial_potential(cfg, &bodies);
    let free = free_cells(&phi, &bodies);
    let proj = project_divfree_masked(&raw, Some(&free), &cfg.cg)?;
    let u = proj.u;
    for (i, b) in bodies.iter_mut().enumerate() {
        if !b.frozen {
            let (l, w) = project_rigid(&u, &phi.mask_of(i), b)?;
            b.l = l;
            b.omega = w;
        }
    }
    let h = compute_h(&q, &phi.phi, cfg);
    Ok(SimState { t: 0.0, step: 0, u, p: proj.p, q, h, bodies, phi, events })
}

/// Instantaneous energy terms `(kinetic, elastic, bulk, penalty)`.
pub fn energies(state: &SimState, cfg: &SimConfig) -> Result<(f64, f64, f64, f64), SolverError> {
    let kinetic = 0.5 * inner(&state.u, &state.u)?;
    let elastic = elastic_energy(&state.q);
    let vol = cfg.grid.cell_volume();
    let bulk = state.q.data.iter().map(|q| bulk_energy(q, &cfg.material)).sum::<f64>() * vol;
    let penalty = match cfg.penalty {
        Penalty::Finite(n) => {
            0.5 * n
                * state.q.data.iter().zip(&state.phi.phi.data).map(|(q, p)| p * q.norm_sq()).sum::<f64>()
                * vol
        }
        Penalty::Infinite => 0.0,
    };
    Ok((kinetic, elastic, bulk, penalty))
}
