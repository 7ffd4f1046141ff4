//! Flat `key = value` configuration files.
//!
//! Keys are dotted (`material.a`, `bodies.0.radius`). A `[section]` line
//! prefixes the keys that follow it. `#` starts a comment. Lists are comma
//! separated.

use std::collections::BTreeMap;
use std::path::Path;

use crate::fields::{CgSettings, Grid};
use crate::rigid::rasterize;
use crate::solver::{
    initial_bodies, BodySpec, FeedbackConfig, Horizon, InitialQ, InitialU, OutputConfig, Penalty, SimConfig,
    SolverError, TimeStep, DEFAULT_LEDGER_TOLERANCE, DEFAULT_PENALTY,
};
use crate::tensor::{MaterialConstants, Vec3};

use super::CliError;

const SCALAR_KEYS: &[&str] = &[
    "material.a",
    "material.b",
    "material.c",
    "material.gamma",
    "material.mu",
    "penalty.n",
    "penalty.delta",
    "grid.cells",
    "grid.lengths",
    "time.dt",
    "time.t_end",
    "time.steps",
    "init.q.order",
    "init.q.director",
    "init.q.width",
    "init.u.ambient",
    "init.u.noise",
    "init.u.width",
    "feedback.enabled",
    "feedback.target",
    "feedback.kp",
    "feedback.kd",
    "feedback.body",
    "ledger.tolerance",
    "output.every",
    "output.vtk",
    "contact.stick_tolerance",
    "contact.merge_tolerance",
    "solver.rel_tol",
    "solver.max_iter",
    "seed",
];

const BODY_FIELDS: &[&str] = &["radius", "center", "velocity", "omega"];

fn bad(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key}: {msg}"))
}

/// Splits text into a key map, rejecting duplicates and unknown keys.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    let mut section = String::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = name.trim().to_string();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", no + 1)))?;
        let key = if section.is_empty() { k.trim().to_string() } else { format!("{section}.{}", k.trim()) };
        if !known_key(&key) {
            return Err(bad(&key, "unknown key"));
        }
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(bad(&key, "duplicate key"));
        }
    }
    Ok(out)
}

fn known_key(key: &str) -> bool {
    if SCALAR_KEYS.contains(&key) {
        return true;
    }
    let parts: Vec<&str> = key.split('.').collect();
    parts.len() == 3 && parts[0] == "bodies" && parts[1].parse::<usize>().is_ok() && BODY_FIELDS.contains(&parts[2])
}

struct Pairs(BTreeMap<String, String>);

impl Pairs {
    fn raw(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    fn f64_opt(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.raw(key)
            .map(|v| v.parse::<f64>().map_err(|_| bad(key, format!("expected a number (got {v:?})"))))
            .transpose()
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.f64_opt(key)?.unwrap_or(default))
    }

    fn f64_req(&self, key: &str) -> Result<f64, CliError> {
        self.f64_opt(key)?.ok_or_else(|| bad(key, "missing required key"))
    }

    fn usize_opt(&self, key: &str) -> Result<Option<usize>, CliError> {
        self.raw(key)
            .map(|v| v.parse::<usize>().map_err(|_| bad(key, format!("expected a non-negative integer (got {v:?})"))))
            .transpose()
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, CliError> {
        self.raw(key)
            .map(|v| {
                v.split(',')
                    .map(|s| s.trim().parse::<f64>().map_err(|_| bad(key, format!("expected numbers (got {v:?})"))))
                    .collect()
            })
            .transpose()
    }

    /// Two or three numbers; a missing z is zero. A single number is taken
    /// as the z component (planar angular velocity).
    fn vec3(&self, key: &str, default: Vec3) -> Result<Vec3, CliError> {
        match self.list(key)? {
            None => Ok(default),
            Some(v) if v.len() == 1 => Ok(Vec3::new(0.0, 0.0, v[0])),
            Some(v) if v.len() == 2 => Ok(Vec3::new(v[0], v[1], 0.0)),
            Some(v) if v.len() == 3 => Ok(Vec3::new(v[0], v[1], v[2])),
            Some(v) => Err(bad(key, format!("expected 2 or 3 components (got {})", v.len()))),
        }
    }

    fn bool_or(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(bad(key, format!("expected true or false (got {v:?})"))),
        }
    }
}

fn material(p: &Pairs) -> Result<MaterialConstants, CliError> {
    let mc = MaterialConstants {
        a: p.f64_req("material.a")?,
        b: p.f64_req("material.b")?,
        c: p.f64_req("material.c")?,
        gamma: p.f64_req("material.gamma")?,
        mu: p.f64_req("material.mu")?,
    };
    for (key, bound, v) in [("material.c", "c > 0", mc.c), ("material.gamma", "gamma > 0", mc.gamma), ("material.mu", "mu > 0", mc.mu)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(bad(key, format!("{bound} (got {v})")));
        }
    }
    Ok(mc)
}

fn grid(p: &Pairs) -> Result<Grid, CliError> {
    let cells = p.list("grid.cells")?.ok_or_else(|| bad("grid.cells", "missing required key"))?;
    let lengths = p.list("grid.lengths")?.ok_or_else(|| bad("grid.lengths", "missing required key"))?;
    if cells.iter().any(|c| c.fract() != 0.0 || *c < 0.0) {
        return Err(bad("grid.cells", "expected non-negative integers"));
    }
    let cells: Vec<usize> = cells.iter().map(|c| *c as usize).collect();
    if cells.len() != lengths.len() {
        return Err(bad("grid.lengths", format!("expected {} lengths (got {})", cells.len(), lengths.len())));
    }
    Grid::new(&cells, &lengths).map_err(|e| bad("grid", e))
}

fn bodies(p: &Pairs) -> Result<Vec<BodySpec>, CliError> {
    let ids: std::collections::BTreeSet<usize> = p
        .0
        .keys()
        .filter_map(|k| k.strip_prefix("bodies.")?.split('.').next()?.parse().ok())
        .collect();
    for (expected, id) in ids.iter().enumerate() {
        if *id != expected {
            return Err(bad(&format!("bodies.{expected}"), "body indices must be consecutive from 0"));
        }
    }
    ids.iter()
        .map(|i| {
            let key = |f: &str| format!("bodies.{i}.{f}");
            Ok(BodySpec {
                radius: p.f64_req(&key("radius"))?,
                center: p.vec3(&key("center"), Vec3::zeros()).and_then(|c| {
                    p.raw(&key("center")).map(|_| c).ok_or_else(|| bad(&key("center"), "missing required key"))
                })?,
                velocity: p.vec3(&key("velocity"), Vec3::zeros())?,
                omega: p.vec3(&key("omega"), Vec3::zeros())?,
            })
        })
        .collect()
}

/// Builds and validates a configuration from parsed pairs.
pub fn config_from_pairs(map: BTreeMap<String, String>) -> Result<SimConfig, CliError> {
    let p = Pairs(map);
    let material = material(&p)?;
    let grid = grid(&p)?;
    let dt = match p.raw("time.dt") {
        Some("auto") => TimeStep::Auto,
        Some(_) => TimeStep::Fixed(p.f64_req("time.dt")?),
        None => return Err(bad("time.dt", "missing required key")),
    };
    let horizon = match (p.f64_opt("time.t_end")?, p.usize_opt("time.steps")?) {
        (Some(t), None) => Horizon::EndTime(t),
        (None, Some(n)) => Horizon::Steps(n),
        (Some(_), Some(_)) => return Err(bad("time.steps", "give either time.t_end or time.steps, not both")),
        (None, None) => return Err(bad("time.t_end", "missing required key (or time.steps)")),
    };
    let mut cfg = SimConfig::new(material, grid, dt, horizon);
    cfg.penalty = match p.raw("penalty.n") {
        Some("inf" | "infinite") => Penalty::Infinite,
        _ => Penalty::Finite(p.f64_or("penalty.n", DEFAULT_PENALTY)?),
    };
    cfg.delta = p.f64_or("penalty.delta", 0.0)?;
    cfg.init_q = InitialQ {
        order: p.f64_or("init.q.order", 0.0)?,
        director: p.vec3("init.q.director", Vec3::z())?,
        width: p.f64_or("init.q.width", 0.0)?,
    };
    if cfg.init_q.director.norm() == 0.0 {
        return Err(bad("init.q.director", "director must be nonzero"));
    }
    cfg.init_u = InitialU {
        ambient: p.f64_or("init.u.ambient", 0.0)?,
        noise: p.f64_or("init.u.noise", 0.0)?,
        width: p.f64_or("init.u.width", 0.0)?,
    };
    cfg.bodies = bodies(&p)?;
    if p.bool_or("feedback.enabled", false)? {
        cfg.feedback = Some(FeedbackConfig {
            target: p.vec3("feedback.target", Vec3::zeros()).and_then(|t| {
                p.raw("feedback.target").map(|_| t).ok_or_else(|| bad("feedback.target", "missing required key"))
            })?,
            kp: p.f64_req("feedback.kp")?,
            kd: p.f64_req("feedback.kd")?,
            body: p.usize_opt("feedback.body")?.unwrap_or(0),
        });
    }
    cfg.ledger_tolerance = p.f64_or("ledger.tolerance", DEFAULT_LEDGER_TOLERANCE)?;
    let defaults = OutputConfig::default();
    cfg.output = OutputConfig {
        every: p.usize_opt("output.every")?.unwrap_or(defaults.every),
        vtk: p.usize_opt("output.vtk")?.unwrap_or(defaults.vtk),
    };
    cfg.stick_tolerance = p.f64_opt("contact.stick_tolerance")?;
    cfg.merge_tolerance = p.f64_opt("contact.merge_tolerance")?;
    cfg.cg = CgSettings {
        rel_tol: p.f64_or("solver.rel_tol", CgSettings::default().rel_tol)?,
        max_iter: p.usize_opt("solver.max_iter")?,
    };
    cfg.seed = p.usize_opt("seed")?.unwrap_or(0) as u64;
    cfg.validate().map_err(|e| match e {
        SolverError::Config(m) => CliError::Config(m),
        other => CliError::Config(other.to_string()),
    })?;
    let bodies = initial_bodies(&cfg).map_err(|e| CliError::Config(e.to_string().replace("invalid configuration: ", "")))?;
    rasterize(&bodies, &cfg.grid)
        .map_err(|e| CliError::Config(format!("bodies: body must lie inside the container ({e})")))?;
    Ok(cfg)
}

pub fn parse_config_str(text: &str) -> Result<SimConfig, CliError> {
    config_from_pairs(parse_pairs(text)?)
}

pub fn parse_config(path: &Path) -> Result<SimConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text)
}

fn fmt_vec(v: &Vec3, dim: usize) -> String {
    let n = if dim == 2 { 2 } else { 3 };
    v.iter().take(n).map(|c| format!("{c:?}")).collect::<Vec<_>>().join(",")
}

/// Canonical text form; parses back to the same configuration.
pub fn config_to_text(cfg: &SimConfig) -> String {
    let g = &cfg.grid;
    let mc = &cfg.material;
    let mut lines = vec![
        format!("material.a = {:?}", mc.a),
        format!("material.b = {:?}", mc.b),
        format!("material.c = {:?}", mc.c),
        format!("material.gamma = {:?}", mc.gamma),
        format!("material.mu = {:?}", mc.mu),
        match cfg.penalty {
            Penalty::Finite(n) => format!("penalty.n = {n:?}"),
            Penalty::Infinite => "penalty.n = inf".into(),
        },
        format!("penalty.delta = {:?}", cfg.delta),
        format!("grid.cells = {}", g.n[..g.dim].iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")),
        format!("grid.lengths = {}", g.len[..g.dim].iter().map(|l| format!("{l:?}")).collect::<Vec<_>>().join(",")),
        match cfg.dt {
            TimeStep::Fixed(dt) => format!("time.dt = {dt:?}"),
            TimeStep::Auto => "time.dt = auto".into(),
        },
        match cfg.horizon {
            Horizon::EndTime(t) => format!("time.t_end = {t:?}"),
            Horizon::Steps(n) => format!("time.steps = {n}"),
        },
        format!("init.q.order = {:?}", cfg.init_q.order),
        format!("init.q.director = {}", fmt_vec(&cfg.init_q.director, 3)),
        format!("init.q.width = {:?}", cfg.init_q.width),
        format!("init.u.ambient = {:?}", cfg.init_u.ambient),
        format!("init.u.noise = {:?}", cfg.init_u.noise),
        format!("init.u.width = {:?}", cfg.init_u.width),
    ];
    for (i, b) in cfg.bodies.iter().enumerate() {
        lines.push(format!("bodies.{i}.radius = {:?}", b.radius));
        lines.push(format!("bodies.{i}.center = {}", fmt_vec(&b.center, g.dim)));
        lines.push(format!("bodies.{i}.velocity = {}", fmt_vec(&b.velocity, g.dim)));
        lines.push(format!("bodies.{i}.omega = {}", fmt_vec(&b.omega, 3)));
    }
    match &cfg.feedback {
        Some(fb) => {
            lines.push("feedback.enabled = true".into());
            lines.push(format!("feedback.target = {}", fmt_vec(&fb.target, g.dim)));
            lines.push(format!("feedback.kp = {:?}", fb.kp));
            lines.push(format!("feedback.kd = {:?}", fb.kd));
            lines.push(format!("feedback.body = {}", fb.body));
        }
        None => lines.push("feedback.enabled = false".into()),
    }
    lines.push(format!("ledger.tolerance = {:?}", cfg.ledger_tolerance));
    lines.push(format!("output.every = {}", cfg.output.every));
    lines.push(format!("output.vtk = {}", cfg.output.vtk));
    if let Some(t) = cfg.stick_tolerance {
        lines.push(format!("contact.stick_tolerance = {t:?}"));
    }
    if let Some(t) = cfg.merge_tolerance {
        lines.push(format!("contact.merge_tolerance = {t:?}"));
    }
    lines.push(format!("solver.rel_tol = {:?}", cfg.cg.rel_tol));
    if let Some(m) = cfg.cg.max_iter {
        lines.push(format!("solver.max_iter = {m}"));
    }
    lines.push(format!("seed = {}", cfg.seed));
    lines.join("\n") + "\n"
}
