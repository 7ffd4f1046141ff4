use crate::fields::{CgSettings, Grid};
use crate::tensor::{MaterialConstants, Vec3};

use super::SolverError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Penalty {
    Finite(f64),
    /// Rigid motion imposed on the solid by projection after every step.
    Infinite,
}

impl Penalty {
    /// Coefficient multiplying `φ` in the viscosity and the molecular field.
    pub fn coefficient(&self) -> f64 {
        match self {
            Penalty::Finite(n) => *n,
            Penalty::Infinite => 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeStep {
    Fixed(f64),
    /// A quarter of the explicit stability bound at `t = 0`.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Horizon {
    EndTime(f64),
    Steps(usize),
}

/// `Q₀ = s g(x) (d⊗d − I/3)` where `g` ramps from 0 to 1 over `width`
/// away from the walls and from every body.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialQ {
    pub order: f64,
    pub director: Vec3,
    pub width: f64,
}

/// Stream function (vector potential in 3D) of the initial velocity: a rigid
/// part per body cut off over `width` outside it, an ambient cell of size
/// `ambient`, and seeded noise of amplitude `noise` in the fluid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialU {
    pub ambient: f64,
    pub noise: f64,
    pub width: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BodySpec {
    pub radius: f64,
    pub center: Vec3,
    pub velocity: Vec3,
    pub omega: Vec3,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeedbackConfig {
    pub target: Vec3,
    pub kp: f64,
    pub kd: f64,
    /// Index into the body list.
    pub body: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutputConfig {
    /// Ledger and body rows every this many steps.
    pub every: usize,
    /// VTK snapshots every this many steps; 0 writes the first and last only.
    pub vtk: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { every: 1, vtk: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub material: MaterialConstants,
    pub penalty: Penalty,
    pub delta: f64,
    pub grid: Grid,
    pub dt: TimeStep,
    pub horizon: Horizon,
    pub init_q: InitialQ,
    pub init_u: InitialU,
    pub bodies: Vec<BodySpec>,
    pub feedback: Option<FeedbackConfig>,
    pub ledger_tolerance: f64,
    pub output: OutputConfig,
    /// Contact distances; `None` means one grid spacing.
    pub stick_tolerance: Option<f64>,
    pub merge_tolerance: Option<f64>,
    pub cg: CgSettings,
    pub seed: u64,
}

pub const DEFAULT_PENALTY: f64 = 1e3;
pub const DEFAULT_LEDGER_TOLERANCE: f64 = 5e-2;

impl SimConfig {
    /// Configuration with documented defaults, no bodies and zero initial data.
    pub fn new(material: MaterialConstants, grid: Grid, dt: TimeStep, horizon: Horizon) -> Self {
        SimConfig {
            material,
            penalty: Penalty::Finite(DEFAULT_PENALTY),
            delta: 0.0,
            grid,
            dt,
            horizon,
            init_q: InitialQ { order: 0.0, director: Vec3::z(), width: 0.0 },
            init_u: InitialU { ambient: 0.0, noise: 0.0, width: 0.0 },
            bodies: Vec::new(),
            feedback: None,
            ledger_tolerance: DEFAULT_LEDGER_TOLERANCE,
            output: OutputConfig::default(),
            stick_tolerance: None,
            merge_tolerance: None,
            cg: CgSettings::default(),
            seed: 0,
        }
    }

    pub fn stick_tol(&self) -> f64 {
        self.stick_tolerance.unwrap_or_else(|| self.grid.h_min())
    }

    pub fn merge_tol(&self) -> f64 {
        self.merge_tolerance.unwrap_or_else(|| self.grid.h_min())
    }

    /// Largest effective viscosity `μ + nφ` the run can see.
    pub fn max_viscosity(&self) -> f64 {
        if self.bodies.is_empty() {
            self.material.mu
        } else {
            self.material.mu + self.penalty.coefficient()
        }
    }

    /// Explicit stability bound `0.25 min(h²/Γ, h²/ν_max, h/‖u‖∞)`.
    pub fn cfl_bound(&self, u_max: f64, nu_max: f64) -> f64 {
        let h = self.grid.h_min();
        let mut bound = (h * h / self.material.gamma).min(h * h / nu_max);
        if u_max > 0.0 {
            bound = bound.min(h / u_max);
        }
        0.25 * bound
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |key: &str, bound: &str, value: f64| {
            Err(SolverError::Config(format!("{key}: {bound} (got {value})")))
        };
        self.material
            .validate()
            .map_err(|e| SolverError::Config(format!("material: {e}")))?;
        if let Penalty::Finite(n) = self.penalty {
            if !(n >= 0.0 && n.is_finite()) {
                return bad("penalty.n", "n >= 0", n);
            }
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return bad("penalty.delta", "delta >= 0", self.delta);
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad("time.dt", "dt > 0", dt);
            }
        }
        if let Horizon::EndTime(t) = self.horizon {
            if !(t >= 0.0 && t.is_finite()) {
                return bad("time.t_end", "t_end >= 0", t);
            }
        }
        if !(self.ledger_tolerance > 0.0) {
            return bad("ledger.tolerance", "tolerance > 0", self.ledger_tolerance);
        }
        if !(self.init_q.width >= 0.0) {
            return bad("init.q.width", "width >= 0", self.init_q.width);
        }
        if !(self.init_u.width >= 0.0) {
            return bad("init.u.width", "width >= 0", self.init_u.width);
        }
        if self.output.every == 0 {
            return bad("output.every", "every >= 1", 0.0);
        }
        for (key, tol) in [("contact.stick_tolerance", self.stick_tolerance), ("contact.merge_tolerance", self.merge_tolerance)] {
            if let Some(t) = tol {
                if !(t >= 0.0) {
                    return bad(key, "tolerance >= 0", t);
                }
            }
        }
        if !(self.cg.rel_tol > 0.0 && self.cg.rel_tol < 1.0) {
            return bad("solver.rel_tol", "0 < rel_tol < 1", self.cg.rel_tol);
        }
        for (i, b) in self.bodies.iter().enumerate() {
            if !(b.radius > 0.0) {
                return bad(&format!("bodies.{i}.radius"), "radius > 0", b.radius);
            }
        }
        if let Some(fb) = &self.feedback {
            if !(fb.kp > 0.0) {
                return bad("feedback.kp", "kp > 0", fb.kp);
            }
            if !(fb.kd >= 0.0) {
                return bad("feedback.kd", "kd >= 0", fb.kd);
            }
            if fb.body >= self.bodies.len() {
                return bad("feedback.body", "index of an existing body", fb.body as f64);
            }
        }
        Ok(())
    }
}
