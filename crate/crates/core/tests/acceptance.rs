//! End-to-end acceptance checks. Each test writes one `PASS`/`FAIL` line to
//! stderr (bypassing libtest capture, so the lines appear in plain
//! `cargo test` output) and then asserts.

use std::io::Write;
use std::time::Instant;

use nalgebra::Matrix3;
use nematic_colloid::cli::oracle_system;
use nematic_colloid::fields::{Boundary, Field, Grid, VectorField};
use nematic_colloid::galerkin::{energy_identity_residual, fitted_order, integrate, Differencing, GalerkinState};
use nematic_colloid::rigid::{
    advance_pose, boundary_distance, inertia, mass_and_center, project_rigid, rasterize, rigid_velocity, BodyState,
    ColloidShape,
};
use nematic_colloid::solver::{
    sweep_penalty, BodyEvent, BodySpec, FeedbackConfig, Horizon, Penalty, SimConfig, Simulation, TimeStep,
    DEFAULT_LEDGER_TOLERANCE,
};
use nematic_colloid::tensor::{bulk_derivative, cancellation_residual, MaterialConstants, QTensor, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(id: u32, name: &str, pass: bool, detail: &str, secs: f64) {
    let line = format!(
        "\nacceptance {id:>2} {} {name}: {detail} [{secs:.2} s]\n",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
}

type M3 = Matrix3<f64>;

fn random_sym_traceless(rng: &mut ChaCha8Rng) -> M3 {
    let a = M3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    let s = (a + a.transpose()) * 0.5;
    s - M3::identity() * (s.trace() / 3.0)
}

fn frob(a: &M3, b: &M3) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += a[(i, j)] * b[(i, j)];
        }
    }
    s
}

/// `(ΣQ − QΣ):H` by explicit index sums.
fn corotation_power(q: &M3, h: &M3, g: &M3) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let mut c = 0.0;
            for k in 0..3 {
                let sik = 0.5 * (g[(i, k)] - g[(k, i)]);
                let skj = 0.5 * (g[(k, j)] - g[(j, k)]);
                c += sik * q[(k, j)] - q[(i, k)] * skj;
            }
            s += c * h[(i, j)];
        }
    }
    s
}

#[test]
fn c01_corotation_and_stress_cancel() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut worst, mut oracle_err, mut coupling) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..10_000 {
        let (q, h) = (random_sym_traceless(&mut rng), random_sym_traceless(&mut rng));
        let g = M3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let scale = q.norm() * h.norm() * g.norm();
        let r = cancellation_residual(&QTensor::from_mat(&q), &QTensor::from_mat(&h), &g);
        worst = worst.max(r.abs() / scale);
        // the two terms cancel only because the stress term matches the
        // corotation term computed independently here
        let stress_power = frob(&(q * h - h * q), &g);
        let corot = corotation_power(&q, &h, &g);
        oracle_err = oracle_err.max((stress_power + corot).abs() / scale);
        coupling = coupling.max(corot.abs() / scale);
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-12 && oracle_err <= 1e-12 && coupling > 1e-2 && secs < 1.0;
    report(
        1,
        "cancellation",
        pass,
        &format!("max rel residual {worst:.2e} (tol 1e-12), oracle {oracle_err:.2e}, runtime < 1 s"),
        secs,
    );
    assert!(pass);
}

/// `a/2 tr Q² − b tr Q³/3 + c/4 (tr Q²)²` with `tr Q³ = 3 det Q` for traceless `Q`.
fn bulk_oracle(q: &M3, mc: &MaterialConstants) -> f64 {
    let t2 = frob(q, q);
    mc.a / 2.0 * t2 - mc.b * q.determinant() + mc.c / 4.0 * t2 * t2
}

#[test]
fn c02_bulk_gradient_matches_finite_differences() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let mut worst = 0.0f64;
    let eps = 1e-5;
    for _ in 0..1000 {
        let mc = MaterialConstants {
            a: rng.gen_range(-1.0..1.0),
            b: rng.gen_range(0.0..2.0),
            c: rng.gen_range(0.1..2.0),
            gamma: 1.0,
            mu: 1.0,
        };
        let q = random_sym_traceless(&mut rng);
        let q = q / q.norm();
        let grad = bulk_derivative(&QTensor::from_mat(&q), &mc).to_mat();
        let scale = grad.norm().max(1e-12);
        for _ in 0..3 {
            let e = random_sym_traceless(&mut rng);
            let e = e / e.norm();
            let fd = (bulk_oracle(&(q + e * eps), &mc) - bulk_oracle(&(q - e * eps), &mc)) / (2.0 * eps);
            worst = worst.max((fd - frob(&grad, &e)).abs() / scale);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-6 && secs < 1.0;
    report(2, "bulk gradient", pass, &format!("max rel error {worst:.2e} (tol 1e-6), runtime < 1 s"), secs);
    assert!(pass);
}

#[test]
fn c03_galerkin_energy_identity_converges() {
    let start = Instant::now();
    let sys = oracle_system(8).unwrap();
    let s0 = GalerkinState::seeded(8, 11, 0.6);
    let horizon = 0.5;
    let dts = [1e-2, 5e-3, 2.5e-3];
    let mut res = Vec::new();
    let mut drift = 0.0f64;
    for dt in dts {
        let traj = integrate(&sys, &s0, dt, (horizon / dt).round() as usize).unwrap();
        let r = energy_identity_residual(&sys, &traj, Differencing::Central4).unwrap();
        res.push(r.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max));
        let e = |s: &GalerkinState| sys.energy(s).total();
        drift = drift.max((e(&traj[0]) - e(traj.last().unwrap())).abs());
    }
    let order = fitted_order(&dts, &res);
    let secs = start.elapsed().as_secs_f64();
    let pass = order >= 3.0 - 0.5 && drift > 1e-3 && secs < 30.0;
    report(
        3,
        "galerkin energy identity",
        pass,
        &format!("fitted order {order:.2} (need >= 3 +/- 0.5), residuals {res:?}, energy change {drift:.2e}"),
        secs,
    );
    assert!(pass);
}

fn disk_run(cells: usize, n: f64, steps: usize) -> SimConfig {
    let mc = MaterialConstants::new(-0.2, 1.0, 1.0, 1.0, 1.0).unwrap();
    let grid = Grid::new(&[cells, cells], &[1.0, 1.0]).unwrap();
    let mut cfg = SimConfig::new(mc, grid, TimeStep::Auto, Horizon::Steps(steps));
    cfg.penalty = Penalty::Finite(n);
    cfg.init_q.order = 0.5;
    cfg.init_q.director = Vec3::new(1.0, 1.0, 0.0).normalize();
    cfg.init_q.width = 0.1;
    cfg.init_u.width = 0.1;
    cfg.bodies.push(BodySpec {
        radius: 0.15,
        center: Vec3::new(0.5, 0.5, 0.0),
        velocity: Vec3::new(1.0, 0.0, 0.0),
        omega: Vec3::zeros(),
    });
    cfg
}

#[test]
fn c04_discrete_energy_inequality() {
    let start = Instant::now();
    let mut sim = Simulation::new(disk_run(64, 1e3, 500)).unwrap();
    let mut worst = sim.ledger.max_residual();
    let mut ok = true;
    while !sim.finished() {
        ok &= sim.advance().unwrap();
        worst = worst.max(sim.ledger.last().unwrap().residual);
    }
    let secs = start.elapsed().as_secs_f64();
    let steps = sim.state.step;
    let pass = ok && steps == 500 && worst <= 0.05 && secs < 300.0;
    report(
        4,
        "discrete energy inequality",
        pass,
        &format!(
            "{steps} steps, max (E+D-E0)/E0 = {worst:.3e} (tol 0.05), final {:.3e}, runtime < 5 min",
            sim.ledger.last().unwrap().residual
        ),
        secs,
    );
    assert!(pass);
}

#[test]
fn c05_penalty_limits() {
    let start = Instant::now();
    let ns = [1e2, 1e3, 1e4];
    let rows = sweep_penalty(&disk_run(64, 1e3, 500), &ns).unwrap();
    let mut pass = rows.iter().all(|r| r.status == "ok");
    let mut detail = String::new();
    for (r, n) in rows.iter().zip(ns) {
        let strain_ok = r.strain_body_integrated <= r.e0 / n;
        let pen_ok = r.penalty_energy <= 1.05 * r.e0;
        pass &= strain_ok && pen_ok;
        detail += &format!(
            "n={n:.0e}: int strain {:.3e} <= E0/n {:.3e}, n/2|Q|^2_S {:.3e} <= 1.05 E0 {:.3e}; ",
            r.strain_body_integrated,
            r.e0 / n,
            r.penalty_energy,
            1.05 * r.e0
        );
    }
    // the direction is not prescribed: over short horizons the penalty
    // energy grows with n before Q in the solid has relaxed
    let direction = |col: &dyn Fn(&nematic_colloid::solver::SweepRow) -> f64| {
        if rows.windows(2).all(|w| col(&w[1]) <= col(&w[0])) {
            "decreasing"
        } else if rows.windows(2).all(|w| col(&w[1]) >= col(&w[0])) {
            "increasing"
        } else {
            "not monotone"
        }
    };
    let strain_dir = direction(&|r| r.strain_body_integrated);
    let pen_dir = direction(&|r| r.penalty_energy);
    let monotone = strain_dir != "not monotone" && pen_dir != "not monotone";
    pass &= monotone;
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 900.0;
    report(5, "penalty limits", pass, &format!("{detail}integrated strain {strain_dir} in n, penalty energy {pen_dir} in n"), secs);
    assert!(pass);
}

#[test]
fn c06_newtonian_reduction() {
    let start = Instant::now();
    let mut cfg = disk_run(64, 1e3, 500);
    cfg.init_q.order = 0.0;
    let mut sim = Simulation::new(cfg).unwrap();
    let (mut q_max, mut h_max) = (0.0f64, 0.0f64);
    while !sim.finished() {
        sim.advance().unwrap();
        q_max = sim.state.q.data.iter().map(|q| q.norm()).fold(q_max, f64::max);
        h_max = sim.state.h.data.iter().map(|h| h.norm()).fold(h_max, f64::max);
    }
    let moving = sim.state.u.max_norm();
    let secs = start.elapsed().as_secs_f64();
    let pass = q_max == 0.0 && h_max == 0.0 && moving > 0.1 && secs < 120.0;
    report(
        6,
        "newtonian reduction",
        pass,
        &format!("max |Q| = {q_max:e}, max |H| = {h_max:e} over 500 steps (exact 0), |u| = {moving:.3}"),
        secs,
    );
    assert!(pass);
}

#[test]
fn c07_rigid_kinematics() {
    let start = Instant::now();
    let grid = Grid::new(&[64, 64, 64], &[1.0, 1.0, 1.0]).unwrap();
    let r = 0.3;
    let centre = Vec3::new(0.5, 0.5, 0.5);
    let ball = BodyState::new(0, ColloidShape::ball(r).unwrap(), centre, Vec3::zeros(), Vec3::zeros(), &grid).unwrap();
    let ind = rasterize(std::slice::from_ref(&ball), &grid).unwrap();
    let (m, hc) = mass_and_center(&ind.phi).unwrap();
    let j = inertia(&ind.phi, &hc).unwrap();
    let ideal = 0.4 * m * r * r;
    let inertia_err = (0..3).map(|i| (j[(i, i)] - ideal).abs() / ideal).fold(0.0, f64::max);

    let moving = BodyState {
        l: Vec3::new(0.3, -0.2, 0.5),
        omega: Vec3::new(1.0, -2.0, 0.5),
        h: centre + Vec3::new(0.01, 0.0, -0.02),
        ..ball.clone()
    };
    let u: VectorField = Field::from_fn(grid, Boundary::Dirichlet, |x| rigid_velocity(&moving, &x));
    let (l, w) = project_rigid(&u, &ind.mask_of(0), &moving).unwrap();
    let proj_err = (l - moving.l).norm().max((w - moving.omega).norm() * r);
    let h = grid.h_min();

    let mut pose = BodyState { l: Vec3::new(0.1, 0.0, 0.0), omega: Vec3::z(), ..ball };
    let dt = 1e-3;
    for _ in 0..1000 {
        pose = advance_pose(&pose, dt);
    }
    let ortho = (pose.o.transpose() * pose.o - M3::identity()).amax();
    let det = (pose.o.determinant() - 1.0).abs();
    let exact = nalgebra::Rotation3::from_axis_angle(&Vec3::z_axis(), 1.0).into_inner();
    let angle_err = (pose.o - exact).amax();
    let iso = ortho.max(det).max(angle_err);

    let secs = start.elapsed().as_secs_f64();
    let pass = inertia_err <= 0.03 && proj_err <= h && iso <= 1e-10 && secs < 60.0;
    report(
        7,
        "rigid kinematics",
        pass,
        &format!(
            "inertia rel err {inertia_err:.2e} (tol 3e-2), projection err {proj_err:.2e} (h = {h:.3e}), \
             isometry err {iso:.2e} (tol 1e-10)"
        ),
        secs,
    );
    assert!(pass);
}

fn contact_config(bodies: Vec<BodySpec>) -> SimConfig {
    let mc = MaterialConstants::new(-0.2, 1.0, 1.0, 1.0, 1.0).unwrap();
    let grid = Grid::new(&[32, 32], &[1.0, 1.0]).unwrap();
    let mut cfg = SimConfig::new(mc, grid, TimeStep::Auto, Horizon::Steps(100_000));
    cfg.penalty = Penalty::Finite(1e2);
    cfg.init_q.order = 0.5;
    cfg.init_q.director = Vec3::x();
    cfg.init_q.width = 0.1;
    cfg.init_u.width = 0.05;
    cfg.bodies = bodies;
    cfg
}

#[test]
fn c08_body_sticks_to_wall() {
    let start = Instant::now();
    let h = 1.0 / 32.0;
    let r = 0.15;
    // a bare initial velocity dies in the wall film; a spring anchored
    // beyond the contact position keeps pushing
    let mut cfg = contact_config(vec![BodySpec {
        radius: r,
        center: Vec3::new(r + 1.3 * h, 0.5, 0.0),
        velocity: Vec3::new(-1.0, 0.0, 0.0),
        omega: Vec3::zeros(),
    }]);
    cfg.feedback = Some(FeedbackConfig { target: Vec3::new(0.05, 0.5, 0.0), kp: 2e3, kd: 1.0, body: 0 });
    let grid = cfg.grid;
    let mut sim = Simulation::new(cfg).unwrap();
    let mut prev_distance = boundary_distance(&sim.state.bodies[0], &grid);
    let mut frozen_at = None;
    let mut within_one_step = false;
    let mut steps_after = 0;
    let mut phi_frozen: Option<Vec<f64>> = None;
    let mut bit_identical = true;
    let mut ledger_ok = true;
    for _ in 0..10_000 {
        ledger_ok &= sim.advance().unwrap();
        let b = &sim.state.bodies[0];
        let d = boundary_distance(b, &grid);
        match (&phi_frozen, b.frozen) {
            (None, true) => {
                frozen_at = Some(sim.state.step);
                within_one_step = d <= grid.h_min() && prev_distance > grid.h_min();
                phi_frozen = Some(sim.state.phi.phi.data.clone());
            }
            (Some(p), _) => {
                bit_identical &= b.frozen && *p == sim.state.phi.phi.data;
                steps_after += 1;
                if steps_after == 300 {
                    break;
                }
            }
            (None, false) => {}
        }
        prev_distance = d;
    }
    let stick_logged = sim.state.events.iter().any(|e| matches!(e, BodyEvent::Stick { id: 0, .. }));
    let worst = sim.ledger.max_residual();
    let secs = start.elapsed().as_secs_f64();
    let pass = frozen_at.is_some()
        && stick_logged
        && within_one_step
        && steps_after == 300
        && bit_identical
        && ledger_ok
        && worst <= DEFAULT_LEDGER_TOLERANCE
        && secs < 300.0;
    report(
        8,
        "collision stick",
        pass,
        &format!(
            "froze at step {frozen_at:?} (within one step of distance <= h: {within_one_step}), \
             phi bit-identical for {steps_after} later steps: {bit_identical}, max ledger residual {worst:.3e} (tol 0.05)"
        ),
        secs,
    );
    assert!(pass);
}

#[test]
fn c09_bodies_merge_conservatively() {
    let start = Instant::now();
    let h = 1.0 / 32.0;
    let r = 0.12;
    let offset = r + 0.6 * h;
    let mut cfg = contact_config(vec![
        BodySpec {
            radius: r,
            center: Vec3::new(0.5 - offset, 0.48, 0.0),
            velocity: Vec3::new(1.5, 0.2, 0.0),
            omega: Vec3::new(0.0, 0.0, 1.0),
        },
        BodySpec {
            radius: r,
            center: Vec3::new(0.5 + offset, 0.52, 0.0),
            velocity: Vec3::new(-1.0, 0.0, 0.0),
            omega: Vec3::zeros(),
        },
    ]);
    cfg.feedback = Some(FeedbackConfig { target: Vec3::new(0.6, 0.5, 0.0), kp: 2e3, kd: 1.0, body: 0 });
    let grid = cfg.grid;
    let mut sim = Simulation::new(cfg).unwrap();
    let mut event = None;
    for _ in 0..10_000 {
        sim.advance().unwrap();
        event = sim.state.events.iter().find_map(|e| match e {
            BodyEvent::Merge { first, second, merged, .. } => Some((first.clone(), second.clone(), merged.clone())),
            _ => None,
        });
        if event.is_some() {
            break;
        }
    }
    let secs_merge = start.elapsed().as_secs_f64();
    let Some((b1, b2, mb)) = event else {
        report(9, "merge", false, "no merge within 10000 steps", secs_merge);
        panic!("no merge");
    };
    let mass_err = (mb.m - (b1.m + b2.m)).abs() / mb.m;
    let p_before = b1.l * b1.m + b2.l * b2.m;
    let mom_err = (mb.l * mb.m - p_before).norm() / p_before.norm();
    let about = |b: &BodyState| b.j * b.omega + (b.h - mb.h).cross(&(b.l * b.m));
    let l_before = about(&b1) + about(&b2);
    let l_after = mb.j * mb.omega;
    let ang_err = (l_after - l_before).norm() / l_before.norm();
    let pose_err = mass_err.max(mom_err).max(ang_err);

    // rasterized integrals of the merged body against the parts
    let ind = rasterize(std::slice::from_ref(&mb), &grid).unwrap();
    let (m_r, c_r) = mass_and_center(&ind.phi).unwrap();
    let shift = |b: &BodyState| {
        let d = b.h - mb.h;
        b.j + (M3::identity() * d.norm_squared() - d * d.transpose()) * b.m
    };
    let j_parts = shift(&b1) + shift(&b2);
    let quad_err = ((m_r - mb.m).abs() / mb.m)
        .max((c_r - mb.h).norm() / r)
        .max((mb.j - j_parts).amax() / j_parts.amax());

    let survives = sim.state.bodies.len() == 1;
    let pass = pose_err <= 1e-10 && quad_err <= 2e-2 && survives;
    let secs = start.elapsed().as_secs_f64();
    report(
        9,
        "merge",
        pass,
        &format!(
            "merged at step {}: m/momentum/angular momentum err {pose_err:.2e} (tol 1e-10), \
             rasterized mass/centre/inertia err {quad_err:.2e} (tol 2e-2)",
            sim.state.step
        ),
        secs,
    );
    assert!(pass);
}

#[test]
fn c10_pd_feedback_keeps_body_in_energy_ball() {
    let start = Instant::now();
    let target = Vec3::new(0.5, 0.5, 0.0);
    let mut cfg = contact_config(vec![BodySpec {
        radius: 0.12,
        center: Vec3::new(0.4, 0.45, 0.0),
        velocity: Vec3::zeros(),
        omega: Vec3::zeros(),
    }]);
    cfg.init_q.order = 0.0;
    cfg.horizon = Horizon::EndTime(0.02);
    let (kp, kd) = (2e3, 5.0);
    cfg.feedback = Some(FeedbackConfig { target, kp, kd, body: 0 });
    let mut sim = Simulation::new(cfg).unwrap();
    let r0 = sim.ledger.records[0];
    let h0 = sim.state.bodies[0].h;
    let e_total = r0.kinetic + r0.elastic + r0.bulk + r0.penalty_q + kp * (h0 - target).norm_squared();
    let bound = (e_total / kp).sqrt();
    let mut worst = (h0 - target).norm();
    let mut closest = worst;
    while !sim.finished() {
        sim.advance().unwrap();
        let d = (sim.state.bodies[0].h - target).norm();
        worst = worst.max(d);
        closest = closest.min(d);
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= bound * (1.0 + 1e-12) && closest < 0.5 * bound;
    report(
        10,
        "pd feedback",
        pass,
        &format!(
            "max |h - h1| = {worst:.4e} <= (E_total(0)/kp)^(1/2) = {bound:.4e}; closest approach {closest:.3e} over {} steps",
            sim.state.step
        ),
        secs,
    );
    assert!(pass);
}
