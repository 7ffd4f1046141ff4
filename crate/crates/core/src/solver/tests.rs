use super::*;
use crate::fields::{Boundary, Field, Grid, QField, ScalarField, VectorField};
use crate::tensor::{MaterialConstants, QTensor, Vec3};

fn material(a: f64) -> MaterialConstants {
    MaterialConstants::new(a, 1.0, 1.0, 1.0, 1.0).unwrap()
}

fn square(n: usize) -> Grid {
    Grid::new(&[n, n], &[1.0, 1.0]).unwrap()
}

fn disk_config(n: usize, penalty: f64, velocity: Vec3) -> SimConfig {
    let mut cfg = SimConfig::new(material(-0.2), square(n), TimeStep::Auto, Horizon::Steps(10));
    cfg.penalty = Penalty::Finite(penalty);
    cfg.bodies.push(BodySpec { radius: 0.15, center: Vec3::new(0.5, 0.5, 0.0), velocity, omega: Vec3::zeros() });
    cfg.init_u.width = 0.1;
    cfg
}

#[test]
fn zero_data_only_advances_time() {
    let cfg = SimConfig::new(material(0.3), square(16), TimeStep::Fixed(1e-4), Horizon::Steps(3));
    let s0 = initial_state(&cfg).unwrap();
    let (s1, rep) = step(&s0, &cfg, 1e-4).unwrap();
    assert_eq!(s1.t, 1e-4);
    assert_eq!(s1.u, s0.u);
    assert_eq!(s1.q, s0.q);
    assert_eq!(s1.h, s0.h);
    assert_eq!(rep.diss_visc + rep.diss_h, 0.0);
}

#[test]
fn newtonian_data_keeps_q_and_h_identically_zero() {
    let mut cfg = disk_config(24, 1e2, Vec3::new(1.0, 0.5, 0.0));
    cfg.init_u.ambient = 0.2;
    let mut sim = Simulation::new(cfg).unwrap();
    for _ in 0..10 {
        sim.advance().unwrap();
        assert!(sim.state.q.data.iter().all(|q| *q == QTensor::ZERO));
        assert!(sim.state.h.data.iter().all(|h| *h == QTensor::ZERO));
    }
    assert!(sim.state.u.max_norm() > 0.1);
}

#[test]
fn implicit_q_decay_matches_scalar_ode() {
    // sin(πx)sin(πy) sampled at cell centres is an exact eigenvector of the
    // compact Dirichlet Laplacian.
    let n = 16;
    let grid = square(n);
    let h = grid.h(0);
    let lambda = 2.0 * 4.0 / (h * h) * (std::f64::consts::PI * h / 2.0).sin().powi(2);
    let (a, dt) = (2.0, 1e-3);
    let mut cfg = SimConfig::new(MaterialConstants::new(a, 0.0, 1.0, 1.5, 1.0).unwrap(), grid, TimeStep::Fixed(dt), Horizon::Steps(1));
    cfg.material.c = 0.0;
    cfg.cg.rel_tol = 1e-13;
    let base = QTensor::new(0.3, -0.1, 0.2, 0.05, -0.04) * 1e-3;
    let q: QField = Field::from_fn(grid, Boundary::Dirichlet, |x| {
        base * ((std::f64::consts::PI * x[0]).sin() * (std::f64::consts::PI * x[1]).sin())
    });
    let u: VectorField = Field::zeros(grid, Boundary::Dirichlet);
    let phi: ScalarField = Field::zeros(grid, Boundary::Free);
    let (q1, _, _) = step_q(&q, &u, &phi, &cfg, dt).unwrap();
    let factor = 1.0 / (1.0 + cfg.material.gamma * dt * (a + lambda));
    for (new, old) in q1.data.iter().zip(&q.data) {
        assert!((*new - *old * factor).norm() < 1e-12 * base.norm());
    }
}

#[test]
fn taylor_green_cell_loses_kinetic_energy_monotonically() {
    let mut cfg = SimConfig::new(material(0.3), square(32), TimeStep::Auto, Horizon::Steps(20));
    cfg.init_u.ambient = 0.05;
    let mut sim = Simulation::new(cfg).unwrap();
    let mut last = sim.ledger.last().unwrap().kinetic;
    assert!(last > 0.0);
    while !sim.finished() {
        assert!(sim.advance().unwrap());
        let k = sim.ledger.last().unwrap().kinetic;
        assert!(k < last);
        last = k;
    }
    assert!(sim.ledger.max_residual() <= 1e-2);
}

#[test]
fn rigid_rotation_transports_q_without_norm_change() {
    let grid = square(48);
    let mut cfg = SimConfig::new(MaterialConstants::new(0.0, 0.0, 1.0, 1e-12, 1.0).unwrap(), grid, TimeStep::Fixed(1e-3), Horizon::Steps(1));
    cfg.material.c = 0.0;
    let c = grid.box_center();
    let u: VectorField =
        Field::from_fn(grid, Boundary::Dirichlet, |x| Vec3::new(-(x[1] - c[1]), x[0] - c[0], 0.0));
    let bump = |x: Vec3| {
        let r2 = (x[0] - 0.6).powi(2) + (x[1] - 0.5).powi(2);
        (-r2 / 0.01).exp()
    };
    let dir = Vec3::new(1.0, 1.0, 0.0).normalize();
    let mut q: QField = Field::from_fn(grid, Boundary::Dirichlet, |x| QTensor::uniaxial(0.5, &dir) * bump(x));
    let phi: ScalarField = Field::zeros(grid, Boundary::Free);
    let norm = |q: &QField| q.data.iter().map(|v| v.norm_sq()).sum::<f64>().sqrt();
    let n0 = norm(&q);
    for _ in 0..200 {
        q = step_q(&q, &u, &phi, &cfg, 1e-3).unwrap().0;
    }
    assert!((norm(&q) - n0).abs() < 2e-2 * n0, "{} vs {}", norm(&q), n0);
}

#[test]
fn integrated_strain_in_solid_obeys_penalty_bound() {
    for width in [0.0, 0.1] {
        let n = 1e3;
        let mut cfg = disk_config(32, n, Vec3::new(0.5, 0.0, 0.0));
        cfg.init_u.width = width;
        let mut sim = Simulation::new(cfg).unwrap();
        let e0 = sim.ledger.e0();
        for _ in 0..20 {
            sim.advance().unwrap();
            let acc = sim.ledger.last().unwrap().strain_body;
            assert!(acc <= e0 / n * 1.05, "{acc} vs {}", e0 / n);
        }
    }
}

#[test]
fn translating_disk_moves_along_its_velocity() {
    let cfg = disk_config(32, 1e2, Vec3::new(1.0, 0.0, 0.0));
    let mut sim = Simulation::new(cfg).unwrap();
    let mut x = sim.state.bodies[0].h[0];
    for _ in 0..10 {
        sim.advance().unwrap();
        let b = &sim.state.bodies[0];
        assert!(b.h[0] > x);
        assert!(b.l[0] > 0.0 && b.l[0] <= 1.0 + 1e-9);
        x = b.h[0];
    }
}

#[test]
fn body_at_wall_freezes_and_stays_bit_identical() {
    let mut cfg = SimConfig::new(material(-0.2), square(24), TimeStep::Auto, Horizon::Steps(5));
    cfg.penalty = Penalty::Finite(1e2);
    cfg.init_u.ambient = 0.2;
    cfg.bodies.push(BodySpec { radius: 0.2, center: Vec3::new(0.2, 0.5, 0.0), velocity: Vec3::x(), omega: Vec3::zeros() });
    let mut sim = Simulation::new(cfg).unwrap();
    assert!(sim.state.bodies[0].frozen);
    assert!(matches!(sim.state.events[0], BodyEvent::Stick { step: 0, .. }));
    let phi0 = sim.state.phi.phi.clone();
    let pose = sim.state.bodies[0].clone();
    for _ in 0..5 {
        sim.advance().unwrap();
        assert_eq!(sim.state.phi.phi, phi0);
        assert_eq!(sim.state.bodies[0], pose);
    }
    for (u, p) in sim.state.u.data.iter().zip(&phi0.data) {
        if *p > 0.0 {
            assert_eq!(*u, Vec3::zeros());
        }
    }
}

#[test]
fn infinite_penalty_imposes_rigid_motion() {
    let mut cfg = disk_config(24, 0.0, Vec3::new(0.5, 0.0, 0.0));
    cfg.penalty = Penalty::Infinite;
    cfg.init_u.ambient = 0.1;
    let mut sim = Simulation::new(cfg).unwrap();
    sim.advance().unwrap();
    assert_eq!(sim.state.q.data.iter().zip(&sim.state.phi.phi.data).filter(|(q, p)| **p > 0.0 && **q != QTensor::ZERO).count(), 0);
    assert!(sim.state.bodies[0].l[0] > 0.0);
}

#[test]
fn zero_end_time_writes_initial_snapshot_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = disk_config(16, 1e2, Vec3::new(0.5, 0.0, 0.0));
    cfg.horizon = Horizon::EndTime(0.0);
    let rep = run(&cfg, Some(dir.path())).unwrap();
    assert_eq!(rep.status, RunStatus::Completed);
    assert_eq!(rep.state.step, 0);
    assert_eq!(rep.files, vec!["fields_0.vtk", "ledger.csv", "body_0.csv"]);
    let ledger = std::fs::read_to_string(dir.path().join("ledger.csv")).unwrap();
    assert_eq!(ledger.lines().count(), 2);
}

#[test]
fn run_writes_ledger_body_and_field_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = disk_config(16, 1e2, Vec3::new(0.5, 0.0, 0.0));
    cfg.horizon = Horizon::Steps(4);
    cfg.output = OutputConfig { every: 2, vtk: 2 };
    let rep = run(&cfg, Some(dir.path())).unwrap();
    assert_eq!(rep.status, RunStatus::Completed);
    for f in ["fields_0.vtk", "fields_2.vtk", "fields_4.vtk", "ledger.csv", "body_0.csv"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let ledger = std::fs::read_to_string(dir.path().join("ledger.csv")).unwrap();
    assert_eq!(ledger.lines().next().unwrap(), "t,kinetic,elastic,bulk,penaltyQ,diss_visc,diss_H,diss_delta,residual");
    assert_eq!(ledger.lines().count(), 4);
}

#[test]
fn fixed_step_above_stability_bound_is_reported() {
    let mut cfg = disk_config(16, 1e3, Vec3::zeros());
    cfg.dt = TimeStep::Fixed(1.0);
    let rep = run(&cfg, None).unwrap();
    assert!(matches!(rep.status, RunStatus::Failed(ref m) if m.contains("stability bound")));
}

#[test]
fn end_time_horizon_lands_exactly() {
    let mut cfg = disk_config(16, 1e2, Vec3::new(0.3, 0.0, 0.0));
    cfg.dt = TimeStep::Fixed(6e-6);
    cfg.horizon = Horizon::EndTime(2e-5);
    let rep = run(&cfg, None).unwrap();
    assert_eq!(rep.status, RunStatus::Completed);
    assert_eq!(rep.state.step, 4);
    assert!((rep.state.t - 2e-5).abs() < 1e-18);
}

#[test]
fn penalty_sweep_orders_body_q_norm() {
    let mut cfg = disk_config(24, 1e2, Vec3::new(0.3, 0.0, 0.0));
    cfg.init_q = InitialQ { order: 0.5, director: Vec3::x(), width: 0.1 };
    cfg.horizon = Horizon::Steps(5);
    let rows = sweep_penalty(&cfg, &[1e2, 1e3, 1e4]).unwrap();
    assert!(rows.iter().all(|r| r.status == "ok"));
    assert!(rows[0].q_body > rows[1].q_body && rows[1].q_body > rows[2].q_body);
    for r in &rows {
        assert!(r.strain_body_integrated <= r.e0 / r.param);
    }
}
