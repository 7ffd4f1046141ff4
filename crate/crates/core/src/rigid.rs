//! Colloid geometry, indicator rasterization and rigid kinematics.
//!
//! Shapes are unions of balls given in the body frame. A material point `y`
//! sits at `h + O y` in the lab frame. In planar runs only the `z` component
//! of `ω` is used and the inertia reduces to `J_zz = ∫|x − h|²`.

use nalgebra::{Rotation3, UnitQuaternion};
use thiserror::Error;

use crate::fields::{Boundary, Field, Grid, ScalarField, VectorField};
use crate::tensor::{Mat3, Vec3};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RigidError {
    #[error("body {id} is not inside the container")]
    OutsideDomain { id: usize },
    #[error("body occupies no grid cell")]
    EmptyBody,
    #[error("inertia tensor is singular")]
    SingularInertia,
    #[error("bodies are {distance:.3e} apart, more than the tolerance {tolerance:.3e}")]
    NotInContact { distance: f64, tolerance: f64 },
    #[error("cannot merge a frozen body; the pair freezes instead")]
    FrozenMerge,
    #[error("{0}")]
    InvalidArgument(String),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ball {
    pub offset: Vec3,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ColloidShape {
    pub components: Vec<Ball>,
}

impl ColloidShape {
    pub fn ball(radius: f64) -> Result<Self, RigidError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(RigidError::InvalidArgument(format!("radius > 0 (got {radius})")));
        }
        Ok(ColloidShape { components: vec![Ball { offset: Vec3::zeros(), radius }] })
    }

    /// Analytic volume (area in 2D) ignoring overlaps between components.
    pub fn volume(&self, dim: usize) -> f64 {
        self.components
            .iter()
            .map(|b| {
                if dim == 2 {
                    std::f64::consts::PI * b.radius.powi(2)
                } else {
                    4.0 / 3.0 * std::f64::consts::PI * b.radius.powi(3)
                }
            })
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BodyState {
    pub id: usize,
    pub shape: ColloidShape,
    pub h: Vec3,
    pub o: Mat3,
    pub l: Vec3,
    pub omega: Vec3,
    pub m: f64,
    pub j: Mat3,
    pub frozen: bool,
}

impl BodyState {
    /// New body at rest orientation; `m` and `J` come from rasterizing it on `grid`.
    pub fn new(
        id: usize,
        shape: ColloidShape,
        h: Vec3,
        l: Vec3,
        omega: Vec3,
        grid: &Grid,
    ) -> Result<Self, RigidError> {
        let mut b = BodyState {
            id,
            shape,
            h,
            o: Mat3::identity(),
            l,
            omega,
            m: 0.0,
            j: Mat3::zeros(),
            frozen: false,
        };
        if grid.dim == 2 {
            b.h[2] = 0.0;
            b.l[2] = 0.0;
            b.omega[0] = 0.0;
            b.omega[1] = 0.0;
        }
        b.refresh_mass_properties(grid)?;
        Ok(b)
    }

    /// World-frame ball components.
    pub fn world_balls(&self) -> impl Iterator<Item = Ball> + '_ {
        self.shape
            .components
            .iter()
            .map(|c| Ball { offset: self.h + self.o * c.offset, radius: c.radius })
    }

    pub fn contains(&self, x: &Vec3) -> bool {
        self.world_balls().any(|b| (x - b.offset).norm() <= b.radius)
    }

    /// Recomputes `m` and `J` (about the rasterized centre) from this body alone.
    pub fn refresh_mass_properties(&mut self, grid: &Grid) -> Result<(), RigidError> {
        let ind = rasterize(std::slice::from_ref(self), grid)?;
        let (m, hc) = mass_and_center(&ind.phi)?;
        self.m = m;
        self.j = inertia(&ind.phi, &hc)?;
        Ok(())
    }

    pub fn quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.o))
    }
}

/// Sharp indicator `φ` plus the index of the body owning each solid cell.
#[derive(Clone, Debug, PartialEq)]
pub struct IndicatorField {
    pub phi: ScalarField,
    pub owner: Vec<Option<usize>>,
}

impl IndicatorField {
    /// Indicator of the body at position `index` of the rasterized list.
    pub fn mask_of(&self, index: usize) -> ScalarField {
        let data = self.owner.iter().map(|o| if *o == Some(index) { 1.0 } else { 0.0 }).collect();
        Field::from_data(self.phi.grid, Boundary::Free, data)
    }

    pub fn mass(&self) -> f64 {
        self.phi.data.iter().sum::<f64>() * self.phi.grid.cell_volume()
    }
}

fn inside_box(ball: &Ball, grid: &Grid) -> bool {
    (0..grid.dim).all(|a| {
        let slack = 1e-12 * grid.len[a];
        ball.offset[a] - ball.radius >= -slack && ball.offset[a] + ball.radius <= grid.len[a] + slack
    })
}

/// `φ = 1` on cells whose centre lies in some body. The first listed body
/// owns a cell claimed twice.
pub fn rasterize(bodies: &[BodyState], grid: &Grid) -> Result<IndicatorField, RigidError> {
    for b in bodies {
        if !b.world_balls().all(|ball| inside_box(&ball, grid)) {
            return Err(RigidError::OutsideDomain { id: b.id });
        }
    }
    let mut phi: ScalarField = Field::zeros(*grid, Boundary::Free);
    let mut owner = vec![None; grid.cells()];
    for idx in 0..grid.cells() {
        let x = grid.center(idx);
        if let Some(i) = bodies.iter().position(|b| b.contains(&x)) {
            phi.data[idx] = 1.0;
            owner[idx] = Some(i);
        }
    }
    Ok(IndicatorField { phi, owner })
}

/// Midpoint-rule mass `∫φ` and centre `∫φx / ∫φ`.
pub fn mass_and_center(phi: &ScalarField) -> Result<(f64, Vec3), RigidError> {
    let grid = phi.grid;
    let vol = grid.cell_volume();
    let mut m = 0.0;
    let mut first = Vec3::zeros();
    for (idx, w) in phi.data.iter().enumerate() {
        if *w != 0.0 {
            m += w * vol;
            first += grid.center(idx) * (w * vol);
        }
    }
    if m <= 0.0 {
        return Err(RigidError::EmptyBody);
    }
    Ok((m, first / m))
}

/// `J = ∫ φ (|x−h|² I − (x−h)⊗(x−h))`.
pub fn inertia(phi: &ScalarField, h: &Vec3) -> Result<Mat3, RigidError> {
    let grid = phi.grid;
    let vol = grid.cell_volume();
    let mut j = Mat3::zeros();
    let mut any = false;
    for (idx, w) in phi.data.iter().enumerate() {
        if *w != 0.0 {
            any = true;
            let r = grid.center(idx) - h;
            j += (Mat3::identity() * r.norm_squared() - r * r.transpose()) * (w * vol);
        }
    }
    if !any {
        return Err(RigidError::EmptyBody);
    }
    Ok(j)
}

/// `ℓ + ω × (x − h)`.
pub fn rigid_velocity(body: &BodyState, x: &Vec3) -> Vec3 {
    body.l + body.omega.cross(&(x - body.h))
}

fn solve_angular(j: &Mat3, moment: &Vec3, dim: usize) -> Result<Vec3, RigidError> {
    if dim == 2 {
        if j[(2, 2)] <= 0.0 {
            return Err(RigidError::SingularInertia);
        }
        Ok(Vec3::new(0.0, 0.0, moment[2] / j[(2, 2)]))
    } else {
        let inv = j.try_inverse().ok_or(RigidError::SingularInertia)?;
        let scale = j.amax();
        if !(inv.amax() * scale).is_finite() || j.determinant().abs() <= 1e-14 * scale.powi(3) {
            return Err(RigidError::SingularInertia);
        }
        Ok(inv * moment)
    }
}

/// L²(S)-orthogonal projection of `u` onto rigid fields over the solid
/// marked by `mask`. Returns `(ℓ, ω)` with `ℓ` the velocity of the body's
/// pose centre `body.h`.
pub fn project_rigid(
    u: &VectorField,
    mask: &ScalarField,
    body: &BodyState,
) -> Result<(Vec3, Vec3), RigidError> {
    let grid = u.grid;
    let (m, hc) = mass_and_center(mask)?;
    let j = inertia(mask, &hc)?;
    let vol = grid.cell_volume();
    let mut mom = Vec3::zeros();
    let mut ang = Vec3::zeros();
    for (idx, w) in mask.data.iter().enumerate() {
        if *w != 0.0 {
            let v = u.data[idx] * (w * vol);
            mom += v;
            ang += (grid.center(idx) - hc).cross(&v);
        }
    }
    let l_c = mom / m;
    let omega = solve_angular(&j, &ang, grid.dim)?;
    let mut l = l_c + omega.cross(&(body.h - hc));
    if grid.dim == 2 {
        l[2] = 0.0;
    }
    Ok((l, omega))
}

/// Rigid motion over `dt`: translate by `ℓ dt`, rotate by angle `|ω| dt`
/// about `ω/|ω|`, then re-orthonormalize `O`.
pub fn advance_pose(body: &BodyState, dt: f64) -> BodyState {
    let mut b = body.clone();
    if b.frozen {
        return b;
    }
    b.h += b.l * dt;
    let r = Rotation3::from_scaled_axis(b.omega * dt);
    b.o = orthonormalize(&(r.matrix() * b.o));
    b
}

fn orthonormalize(o: &Mat3) -> Mat3 {
    let c0 = o.column(0).normalize();
    let c1 = (o.column(1) - c0 * c0.dot(&o.column(1))).normalize();
    let c2 = c0.cross(&c1);
    Mat3::from_columns(&[c0, c1, c2])
}

/// Distance from the shape to the nearest active box face, clamped at 0.
pub fn boundary_distance(body: &BodyState, grid: &Grid) -> f64 {
    body.world_balls()
        .flat_map(|b| {
            (0..grid.dim).map(move |a| (b.offset[a] - b.radius).min(grid.len[a] - b.offset[a] - b.radius))
        })
        .fold(f64::MAX, f64::min)
        .max(0.0)
}

/// Gap between two ball unions, clamped at 0.
pub fn body_distance(b1: &BodyState, b2: &BodyState) -> f64 {
    let mut d = f64::MAX;
    for x in b1.world_balls() {
        for y in b2.world_balls() {
            d = d.min((x.offset - y.offset).norm() - x.radius - y.radius);
        }
    }
    d.max(0.0)
}

/// Horizon `T = (αδ/E₀)²` over which the displacement bound `(√T/δ) E₀`
/// stays below `α`.
pub fn safe_time_estimate(alpha: f64, delta: f64, e0: f64) -> Result<f64, RigidError> {
    for (name, v) in [("alpha", alpha), ("delta", delta), ("E0", e0)] {
        if !(v > 0.0) {
            return Err(RigidError::InvalidArgument(format!("{name} > 0 (got {v})")));
        }
    }
    Ok((alpha * delta / e0).powi(2))
}

/// Freezes a body touching the container.
pub fn collision_stick(body: &BodyState, grid: &Grid, tol: f64) -> Result<BodyState, RigidError> {
    if body.frozen {
        return Ok(body.clone());
    }
    let distance = boundary_distance(body, grid);
    if distance > tol {
        return Err(RigidError::NotInContact { distance, tolerance: tol });
    }
    let mut b = body.clone();
    b.frozen = true;
    b.l = Vec3::zeros();
    b.omega = Vec3::zeros();
    Ok(b)
}

/// Fuses two touching bodies into one, conserving mass, linear momentum and
/// angular momentum about the merged centre. The result keeps `b1.id`.
pub fn merge_bodies(
    b1: &BodyState,
    b2: &BodyState,
    tol: f64,
    grid: &Grid,
) -> Result<BodyState, RigidError> {
    if b1.frozen || b2.frozen {
        return Err(RigidError::FrozenMerge);
    }
    let distance = body_distance(b1, b2);
    if distance > tol {
        return Err(RigidError::NotInContact { distance, tolerance: tol });
    }
    let m = b1.m + b2.m;
    let h = (b1.h * b1.m + b2.h * b2.m) / m;
    let components = b1
        .world_balls()
        .chain(b2.world_balls())
        .map(|b| Ball { offset: b.offset - h, radius: b.radius })
        .collect();
    let momentum = b1.l * b1.m + b2.l * b2.m;
    let angular = b1.j * b1.omega
        + b2.j * b2.omega
        + (b1.h - h).cross(&(b1.l * b1.m))
        + (b2.h - h).cross(&(b2.l * b2.m));
    let mut merged = BodyState {
        id: b1.id.min(b2.id),
        shape: ColloidShape { components },
        h,
        o: Mat3::identity(),
        l: momentum / m,
        omega: Vec3::zeros(),
        m,
        j: Mat3::zeros(),
        frozen: false,
    };
    let ind = rasterize(std::slice::from_ref(&merged), grid)?;
    merged.j = inertia(&ind.phi, &h)?;
    merged.omega = solve_angular(&merged.j, &angular, grid.dim)?;
    Ok(merged)
}

/// Spring–damper force `k_p (h₁ − h) − k_d ℓ`.
pub fn pd_feedback(h: &Vec3, l: &Vec3, target: &Vec3, kp: f64, kd: f64) -> Vec3 {
    (target - h) * kp - l * kd
}
