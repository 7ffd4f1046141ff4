use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use crate::fields::{write_csv, write_vtk, VtkArray};
use crate::rigid::{project_rigid, rigid_velocity};

use super::config::{Horizon, Penalty, SimConfig, TimeStep};
use super::ledger::{EnergyLedger, LedgerRecord};
use super::operators::weighted_strain;
use super::state::{energies, initial_state, SimState};
use super::step::step;
use super::SolverError;

#[derive(Clone, Debug, PartialEq)]
pub enum RunStatus {
    Completed,
    LedgerViolation { step: usize, residual: f64 },
    Failed(String),
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Completed => "ok",
            RunStatus::LedgerViolation { .. } => "ledger_violation",
            RunStatus::Failed(_) => "failed",
        }
    }
}

/// A stepping session: state, resolved time step and ledger.
pub struct Simulation {
    pub config: SimConfig,
    pub dt: f64,
    pub state: SimState,
    pub ledger: EnergyLedger,
    fixed_dt: bool,
}

/// Time step used when the configuration asks for `auto`: the stability
/// bound with twice the initial speed, so moderate acceleration stays legal.
pub fn auto_dt(cfg: &SimConfig, state: &SimState) -> f64 {
    let pen_max = state.phi.phi.data.iter().cloned().fold(0.0, f64::max) * cfg.penalty.coefficient();
    cfg.cfl_bound(2.0 * state.u.max_norm(), cfg.material.mu + pen_max)
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self, SolverError> {
        config.validate()?;
        let state = initial_state(&config)?;
        let (dt, fixed_dt) = match config.dt {
            TimeStep::Fixed(dt) => (dt, true),
            TimeStep::Auto => (auto_dt(&config, &state), false),
        };
        let mut sim = Simulation {
            ledger: EnergyLedger::new(config.ledger_tolerance, config.feedback.is_some()),
            config,
            dt,
            state,
            fixed_dt,
        };
        let rec = sim.record(&Default::default())?;
        sim.ledger.push(rec);
        Ok(sim)
    }

    pub fn total_steps(&self) -> usize {
        match self.config.horizon {
            Horizon::Steps(n) => n,
            Horizon::EndTime(t) => ((t / self.dt) * (1.0 - 1e-12)).ceil().max(0.0) as usize,
        }
    }

    fn record(&self, acc: &LedgerRecord) -> Result<LedgerRecord, SolverError> {
        let (kinetic, elastic, bulk, penalty_q) = energies(&self.state, &self.config)?;
        let spring = match &self.config.feedback {
            Some(fb) => self
                .state
                .bodies
                .iter()
                .find(|b| b.id == fb.body)
                .map(|b| 0.5 * fb.kp * (b.h - fb.target).norm_squared())
                .unwrap_or(0.0),
            None => 0.0,
        };
        Ok(LedgerRecord { t: self.state.t, kinetic, elastic, bulk, penalty_q, spring, ..*acc })
    }

    /// Takes one step and appends to the ledger. Returns whether the energy
    /// inequality still holds.
    pub fn advance(&mut self) -> Result<bool, SolverError> {
        let mut dt = self.dt;
        if let Horizon::EndTime(t_end) = self.config.horizon {
            dt = dt.min(t_end - self.state.t);
        }
        if !self.fixed_dt {
            let pen_max = self.state.phi.phi.data.iter().cloned().fold(0.0, f64::max) * self.config.penalty.coefficient();
            dt = dt.min(self.config.cfl_bound(self.state.u.max_norm(), self.config.material.mu + pen_max));
        }
        let (next, rep) = step(&self.state, &self.config, dt)?;
        self.state = next;
        let prev = *self.ledger.last().expect("ledger starts with the initial record");
        let acc = LedgerRecord {
            diss_visc: prev.diss_visc + rep.diss_visc,
            diss_h: prev.diss_h + rep.diss_h,
            diss_delta: prev.diss_delta + rep.diss_delta,
            diss_damper: prev.diss_damper + rep.diss_damper,
            strain_body: prev.strain_body + rep.strain_body,
            ..Default::default()
        };
        let rec = self.record(&acc)?;
        Ok(self.ledger.push(rec))
    }

    pub fn finished(&self) -> bool {
        match self.config.horizon {
            Horizon::Steps(n) => self.state.step >= n,
            Horizon::EndTime(t) => self.state.t >= t * (1.0 - 1e-12),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub status: RunStatus,
    pub dt: f64,
    pub ledger: EnergyLedger,
    pub initial: SimState,
    pub state: SimState,
    /// Body trajectories by id: `(t, state)` after every step.
    pub trajectories: BTreeMap<usize, Vec<(f64, crate::rigid::BodyState)>>,
    pub files: Vec<String>,
    pub runtime_s: f64,
}

impl RunReport {
    pub fn max_residual(&self) -> f64 {
        self.ledger.max_residual()
    }
}

fn snapshot(dir: &Path, state: &SimState, files: &mut Vec<String>) -> Result<(), SolverError> {
    let name = format!("fields_{}.vtk", state.step);
    write_vtk(
        &dir.join(&name),
        &state.u.grid,
        &[
            ("phi", VtkArray::Scalar(&state.phi.phi)),
            ("p", VtkArray::Scalar(&state.p)),
            ("u", VtkArray::Vector(&state.u)),
            ("Q", VtkArray::Tensor(&state.q)),
        ],
    )?;
    files.push(name);
    Ok(())
}

/// Runs to the horizon (or the first failure), writing outputs into
/// `out_dir` when given.
pub fn run(cfg: &SimConfig, out_dir: Option<&Path>) -> Result<RunReport, SolverError> {
    let start = Instant::now();
    let mut sim = Simulation::new(cfg.clone())?;
    let initial = sim.state.clone();
    let mut files = Vec::new();
    let mut trajectories: BTreeMap<usize, Vec<_>> = BTreeMap::new();
    let track = |state: &SimState, tr: &mut BTreeMap<usize, Vec<_>>| {
        for b in &state.bodies {
            tr.entry(b.id).or_default().push((state.t, b.clone()));
        }
    };
    track(&sim.state, &mut trajectories);
    if let Some(dir) = out_dir {
        snapshot(dir, &sim.state, &mut files)?;
    }
    let mut status = RunStatus::Completed;
    let mut ledger_rows = vec![0usize];
    while !sim.finished() {
        match sim.advance() {
            Ok(ok) => {
                track(&sim.state, &mut trajectories);
                let k = sim.state.step;
                if k % cfg.output.every == 0 {
                    ledger_rows.push(sim.ledger.records.len() - 1);
                }
                if let Some(dir) = out_dir {
                    if cfg.output.vtk > 0 && k % cfg.output.vtk == 0 && !sim.finished() && ok {
                        snapshot(dir, &sim.state, &mut files)?;
                    }
                }
                if !ok {
                    let residual = sim.ledger.last().map(|r| r.residual).unwrap_or(f64::NAN);
                    status = RunStatus::LedgerViolation { step: k, residual };
                    break;
                }
            }
            Err(e) => {
                status = RunStatus::Failed(e.to_string());
                break;
            }
        }
    }
    let last = sim.ledger.records.len() - 1;
    if ledger_rows.last() != Some(&last) {
        ledger_rows.push(last);
    }
    if let Some(dir) = out_dir {
        if sim.state.step > 0 {
            snapshot(dir, &sim.state, &mut files)?;
        }
        let rows: Vec<Vec<f64>> = ledger_rows.iter().map(|&i| sim.ledger.row(&sim.ledger.records[i])).collect();
        write_csv(&dir.join("ledger.csv"), &sim.ledger.header(), &rows)?;
        files.push("ledger.csv".into());
        for (id, traj) in &trajectories {
            let rows: Vec<Vec<f64>> = traj
                .iter()
                .enumerate()
                .filter(|(k, _)| k % cfg.output.every == 0 || *k + 1 == traj.len())
                .map(|(_, (t, b))| {
                    let q = b.quaternion();
                    vec![
                        *t, b.h[0], b.h[1], b.h[2], q.w, q.i, q.j, q.k, b.l[0], b.l[1], b.l[2], b.omega[0],
                        b.omega[1], b.omega[2], if b.frozen { 1.0 } else { 0.0 },
                    ]
                })
                .collect();
            let name = format!("body_{id}.csv");
            write_csv(
                &dir.join(&name),
                &["t", "hx", "hy", "hz", "qw", "qx", "qy", "qz", "lx", "ly", "lz", "wx", "wy", "wz", "frozen"],
                &rows,
            )?;
            files.push(name);
        }
    }
    Ok(RunReport {
        status,
        dt: sim.dt,
        ledger: sim.ledger,
        initial,
        state: sim.state,
        trajectories,
        files,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

/// One row of a parameter sweep, measured at the end of the run.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub status: String,
    /// `Σ ‖D u‖²_{L²(S)} dt`.
    pub strain_body_integrated: f64,
    /// `‖D u‖_{L²(S)}`.
    pub strain_body: f64,
    /// `‖Q‖_{L²(S)}`.
    pub q_body: f64,
    /// `n/2 ∫ φ |Q|²`.
    pub penalty_energy: f64,
    /// `‖u − P_rigid u‖_{L²(S)}`.
    pub nonrigid_body: f64,
    pub e0: f64,
    pub e_final: f64,
    pub kinetic_final: f64,
    pub max_residual: f64,
    pub runtime_s: f64,
}

pub const SWEEP_HEADER: [&str; 12] = [
    "param",
    "status",
    "strain_body_integrated",
    "strain_body",
    "q_body",
    "penalty_energy",
    "nonrigid_body",
    "e0",
    "e_final",
    "kinetic_final",
    "max_residual",
    "runtime_s",
];

fn sweep_row(param: f64, cfg: &SimConfig) -> SweepRow {
    let failed = |msg: String| SweepRow {
        param,
        status: format!("failed: {msg}"),
        strain_body_integrated: f64::NAN,
        strain_body: f64::NAN,
        q_body: f64::NAN,
        penalty_energy: f64::NAN,
        nonrigid_body: f64::NAN,
        e0: f64::NAN,
        e_final: f64::NAN,
        kinetic_final: f64::NAN,
        max_residual: f64::NAN,
        runtime_s: 0.0,
    };
    let report = match run(cfg, None) {
        Ok(r) => r,
        Err(e) => return failed(e.to_string()),
    };
    let st = &report.state;
    let grid = cfg.grid;
    let phi = &st.phi.phi;
    let vol = grid.cell_volume();
    let q_sq: f64 = st.q.data.iter().zip(&phi.data).map(|(q, p)| p * q.norm_sq()).sum::<f64>() * vol;
    let n = match cfg.penalty {
        Penalty::Finite(n) => n,
        Penalty::Infinite => f64::INFINITY,
    };
    let mut nonrigid = 0.0;
    for (i, b) in st.bodies.iter().enumerate() {
        let mask = st.phi.mask_of(i);
        if let Ok((l, w)) = project_rigid(&st.u, &mask, b) {
            let rb = crate::rigid::BodyState { l, omega: w, ..b.clone() };
            for (idx, s) in mask.data.iter().enumerate() {
                if *s > 0.0 {
                    nonrigid += (st.u.data[idx] - rigid_velocity(&rb, &grid.center(idx))).norm_squared() * vol;
                }
            }
        }
    }
    let last = report.ledger.last().copied().unwrap_or_default();
    SweepRow {
        param,
        status: report.status.label().to_string(),
        strain_body_integrated: last.strain_body,
        strain_body: weighted_strain(&st.u, &phi.data).sqrt(),
        q_body: q_sq.sqrt(),
        penalty_energy: if n.is_finite() { 0.5 * n * q_sq } else { 0.0 },
        nonrigid_body: nonrigid.sqrt(),
        e0: report.ledger.e0(),
        e_final: last.energy(),
        kinetic_final: last.kinetic,
        max_residual: report.max_residual(),
        runtime_s: report.runtime_s,
    }
}

/// With `dt = auto`, every member uses the smallest automatic step of the
/// sweep so all rows cover the same time interval.
fn shared_dt(configs: &[SimConfig]) -> Result<Option<f64>, SolverError> {
    if !configs.iter().any(|c| c.dt == TimeStep::Auto) {
        return Ok(None);
    }
    let mut dt = f64::MAX;
    for c in configs {
        c.validate()?;
        let st = initial_state(c)?;
        dt = dt.min(auto_dt(c, &st));
    }
    Ok(Some(dt))
}

fn run_sweep(params: &[f64], mut configs: Vec<SimConfig>) -> Result<Vec<SweepRow>, SolverError> {
    if let Some(dt) = shared_dt(&configs)? {
        for c in &mut configs {
            c.dt = TimeStep::Fixed(dt);
        }
    }
    let rows = std::thread::scope(|s| {
        let handles: Vec<_> = params
            .iter()
            .zip(&configs)
            .map(|(p, c)| s.spawn(move || sweep_row(*p, c)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("sweep member panicked")).collect()
    });
    Ok(rows)
}

pub fn sweep_penalty(cfg: &SimConfig, values: &[f64]) -> Result<Vec<SweepRow>, SolverError> {
    let configs = values
        .iter()
        .map(|n| SimConfig { penalty: Penalty::Finite(*n), ..cfg.clone() })
        .collect();
    run_sweep(values, configs)
}

pub fn sweep_delta(cfg: &SimConfig, values: &[f64]) -> Result<Vec<SweepRow>, SolverError> {
    let configs = values.iter().map(|d| SimConfig { delta: *d, ..cfg.clone() }).collect();
    run_sweep(values, configs)
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<(), SolverError> {
    use std::io::Write;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{}", SWEEP_HEADER.join(","))?;
    for r in rows {
        let nums = [
            r.strain_body_integrated,
            r.strain_body,
            r.q_body,
            r.penalty_energy,
            r.nonrigid_body,
            r.e0,
            r.e_final,
            r.kinetic_final,
            r.max_residual,
            r.runtime_s,
        ];
        let tail: Vec<String> = nums.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{:.16e},{},{}", r.param, r.status.replace(',', ";"), tail.join(","))?;
    }
    w.flush()?;
    Ok(())
}
