//! Command implementations. Each returns its results as JSON plus the
//! artifacts to write; the binary owns the file system.

use genusflow_core::fieldspec::check_matching;
use genusflow_core::poincare::{multipliers, MonodromyReport};
use genusflow_core::topology::{
    attractor_count_check, circle_test, dissipativity_check, equilibria_with, euler_check, iterate_region,
    AttractorEstimate, EquilibriumOptions,
};
use genusflow_core::{integrate, HPoint, IntegratorConfig, Monodromy, PoincareMap, State, VectorField};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::export::{attractor_csv, poincare_csv, trajectory_csv, word_text, Portrait, SectionPoint};
use crate::report::num;
use crate::scenario::{Scenario, SchemeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Synth,
    Integrate,
    Poincare,
    Orbit,
    Attractor,
    Index,
    Check,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Integrate => "integrate",
            Command::Poincare => "poincare",
            Command::Orbit => "orbit",
            Command::Attractor => "attractor",
            Command::Index => "index",
            Command::Check => "check",
        }
    }
}

/// Command-line overrides of scenario values.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub grid: Option<(usize, usize)>,
    pub iters: Option<usize>,
    pub seed: Option<(f64, f64)>,
    pub ab: Option<(i64, u32)>,
}

impl Overrides {
    pub fn echo(&self) -> Value {
        json!({
            "grid": self.grid.map(|(a, b)| json!([a, b])),
            "iters": self.iters,
            "seed": self.seed.map(|(x, y)| json!([num(x), num(y)])),
            "ab": self.ab.map(|(a, b)| json!([a, b])),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArtifactKind {
    Csv,
    Svg,
}

#[derive(Debug, Clone)]
pub struct Artifact {
    pub name: &'static str,
    pub kind: ArtifactKind,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub results: Value,
    pub artifacts: Vec<Artifact>,
    /// Set when an analysis check failed; the report is still written.
    pub failure: Option<String>,
}

impl Outcome {
    fn ok(results: Value) -> Self {
        Self { results, artifacts: Vec::new(), failure: None }
    }

    fn with(mut self, name: &'static str, kind: ArtifactKind, bytes: Vec<u8>) -> Self {
        self.artifacts.push(Artifact { name, kind, bytes });
        self
    }
}

pub fn run(cmd: Command, sc: &Scenario, ov: &Overrides) -> Result<Outcome, CliError> {
    match cmd {
        Command::Synth => synth(sc),
        Command::Integrate => run_integrate(sc, ov),
        Command::Poincare => poincare(sc, ov),
        Command::Orbit => orbit(sc, ov),
        Command::Attractor => attractor(sc, ov),
        Command::Index => index(sc, ov),
        Command::Check => check(sc),
    }
}

fn point(p: HPoint) -> Value {
    json!([num(p.x), num(p.y)])
}

fn matrix(m: &Monodromy) -> Value {
    json!([[num(m.a), num(m.b)], [num(m.c), num(m.d)]])
}

fn analysis<E: std::fmt::Display>(e: E) -> CliError {
    CliError::analysis(e.to_string())
}

/// Matching residual across every side pairing plus the field size at the
/// cusps.
fn synth(sc: &Scenario) -> Result<Outcome, CliError> {
    let f = &sc.field;
    let mut results = json!({
        "fx": f.fx().to_string(),
        "fy": f.fy().to_string(),
        "autonomous": f.is_autonomous(),
        "curves": sc.curves.iter().map(|c| json!({
            "label": c.label,
            "psi": c.psi.to_string(),
            "f": c.f.to_string(),
            "g": c.g.to_string(),
        })).collect::<Vec<_>>(),
    });
    let mut failure = None;
    if let Some(d) = &sc.domain {
        let residual = check_matching(f, d, 200);
        let cusp = d.cusps().iter().map(|m| {
            let v = f.eval(m.x, m.y, 0.0);
            v[0].hypot(v[1])
        });
        let cusp_max = cusp.fold(0.0f64, f64::max);
        results["matching_residual"] = num(residual);
        if d.has_cone_point() {
            results["cusp_max_speed"] = num(cusp_max);
        }
        if !(residual < 1e-8) {
            failure = Some(format!("field does not match across the side pairings (residual {residual:.3e})"));
        } else if d.has_cone_point() && !(cusp_max < 1e-9) {
            failure = Some(format!("field does not vanish at the cusps (max speed {cusp_max:.3e})"));
        }
    }
    results["pass"] = json!(failure.is_none());
    Ok(Outcome { results, artifacts: Vec::new(), failure })
}

fn integrator(sc: &Scenario) -> IntegratorConfig {
    let i = &sc.file.integrate;
    match i.scheme {
        SchemeSpec::Rk4 => IntegratorConfig::rk4(i.max_step.unwrap_or(1e-3)),
        SchemeSpec::Rk45 => {
            let mut c = IntegratorConfig::rk45(i.rtol, i.atol);
            if let Some(h) = i.max_step {
                c.max_step = h;
            }
            c
        }
    }
}

fn run_integrate(sc: &Scenario, ov: &Overrides) -> Result<Outcome, CliError> {
    let i = &sc.file.integrate;
    let (x, y) = ov.seed.unwrap_or((i.x0, i.y0));
    let cfg = integrator(sc);
    cfg.validate().map_err(|e| CliError::input(e.to_string()))?;
    let tr = integrate(&sc.field, State::new(x, y, i.t0), i.t_end, sc.domain.as_ref(), &cfg).map_err(analysis)?;
    let end = tr.last();
    let curve_residuals: Vec<Value> = sc
        .curves
        .iter()
        .map(|c| {
            let worst = tr.samples.iter().map(|s| c.psi.eval_raw(s.x, s.y, s.t).abs()).fold(0.0, f64::max);
            json!({ "label": c.label, "max_abs_psi": num(worst) })
        })
        .collect();
    let termination = match tr.termination {
        genusflow_core::dynamics::Termination::Completed => json!("completed"),
        genusflow_core::dynamics::Termination::CuspHit { point: p } => json!({ "cusp_hit": point(p) }),
    };
    let results = json!({
        "start": [num(x), num(y), num(i.t0)],
        "end": [num(end.x), num(end.y), num(end.t)],
        "samples": tr.samples.len(),
        "crossings": tr.events.len(),
        "word": word_text(&tr.word),
        "winding": sc.domain.as_ref().map(|d| d.winding(&tr.word)),
        "termination": termination,
        "curve_residuals": curve_residuals,
    });
    let mut portrait = Portrait::new(sc.area().bounds(), sc.domain.as_ref());
    portrait.trajectory = Some(&tr);
    let svg = portrait.render();
    Ok(Outcome::ok(results).with("trajectory.csv", ArtifactKind::Csv, trajectory_csv(&tr)?).with(
        "portrait.svg",
        ArtifactKind::Svg,
        svg,
    ))
}

fn seeds(list: &[[f64; 2]], ov: &Overrides) -> Vec<HPoint> {
    match ov.seed {
        Some((x, y)) => vec![HPoint::new(x, y)],
        None => list.iter().map(|p| HPoint::new(p[0], p[1])).collect(),
    }
}

fn map<'a>(sc: &'a Scenario) -> Result<PoincareMap<'a, genusflow_core::ExprField>, CliError> {
    let period = sc.poincare()?.period;
    PoincareMap::new(&sc.field, period, sc.domain.as_ref()).map_err(|e| CliError::input(e.to_string()))
}

fn poincare(sc: &Scenario, ov: &Overrides) -> Result<Outcome, CliError> {
    let spec = sc.poincare()?;
    let pm = map(sc)?;
    let seeds = seeds(&spec.seeds, ov);
    if seeds.is_empty() {
        return Err(CliError::input("[poincare] needs at least one seed"));
    }
    let n = ov.iters.unwrap_or(spec.iterations);
    let mut points = Vec::new();
    let mut failures = Vec::new();
    for (k, s) in seeds.iter().enumerate() {
        let mut q = *s;
        points.push(SectionPoint { seed: k, iterate: 0, point: q, word: Vec::new() });
        for it in 1..=n {
            match pm.apply(q) {
                Ok((next, word)) => {
                    q = next;
                    points.push(SectionPoint { seed: k, iterate: it, point: q, word });
                }
                Err(e) => {
                    failures.push(json!({ "seed": k, "iterate": it, "error": e.to_string() }));
                    break;
                }
            }
        }
    }
    let equivariance = match sc.domain {
        Some(_) => num(pm.check_equivariance(spec.equivariance_samples).map_err(analysis)?),
        None => Value::Null,
    };
    let results = json!({
        "period": num(spec.period),
        "seeds": seeds.iter().map(|p| point(*p)).collect::<Vec<_>>(),
        "iterations": n,
        "samples": points.len(),
        "equivariance_residual": equivariance,
        "failures": failures,
    });
    let mut portrait = Portrait::new(sc.area().bounds(), sc.domain.as_ref());
    portrait.points = points.iter().map(|p| p.point).collect();
    let svg = portrait.render();
    Ok(Outcome::ok(results).with("poincare.csv", ArtifactKind::Csv, poincare_csv(&points)?).with(
        "portrait.svg",
        ArtifactKind::Svg,
        svg,
    ))
}

fn multipliers_json(m: &Monodromy) -> Value {
    let (l1, l2) = multipliers(m.matrix());
    json!([{ "re": num(l1.re), "im": num(l1.im) }, { "re": num(l2.re), "im": num(l2.im) }])
}

fn monodromy_json(rep: &MonodromyReport, tol: f64) -> Value {
    json!({
        "matrix": matrix(&rep.variational),
        "finite_difference": matrix(&rep.finite_difference),
        "max_entry_diff": num(rep.max_diff),
        "oracle_disagrees": rep.disagree,
        "trace": num(rep.variational.trace()),
        "det": num(rep.variational.det()),
        "multipliers": multipliers_json(&rep.variational),
        "class": rep.variational.classify(tol).as_str(),
        "class_squared": rep.variational.squared().classify(tol).as_str(),
    })
}

fn orbit(sc: &Scenario, ov: &Overrides) -> Result<Outcome, CliError> {
    let spec = sc.file.orbit.as_ref().ok_or_else(|| CliError::input("scenario has no [orbit] section"))?;
    let (a, b) = ov.ab.unwrap_or((spec.a, spec.b));
    let pm = map(sc)?;
    let seeds = seeds(&spec.seeds, ov);
    if seeds.is_empty() {
        return Err(CliError::input("[orbit] needs at least one seed"));
    }
    let found = pm.find_periodic_seeds(a, b, spec.generator, &seeds);
    let mut orbits = Vec::new();
    let mut converged = 0;
    for (seed, res) in seeds.iter().zip(found) {
        let entry = match res {
            Ok(o) => {
                converged += 1;
                let mono = pm.monodromy(&o).map_err(analysis)?;
                json!({
                    "seed": point(*seed),
                    "point": point(o.point.point()),
                    "residual": num(o.residual),
                    "newton_iterations": o.iterations,
                    "jacobian_singular": o.jacobian_singular,
                    "word": word_text(&o.word),
                    "monodromy": monodromy_json(&mono, spec.tol),
                })
            }
            Err(e) => json!({ "seed": point(*seed), "error": e.to_string() }),
        };
        orbits.push(entry);
    }
    let results = json!({
        "a": a,
        "b": b,
        "generator": spec.generator,
        "period": num(pm.period()),
        "orbits": orbits,
    });
    let failure =
        (converged == 0).then(|| format!("no periodic orbit of type ({a},{b}) found from {} seed(s)", seeds.len()));
    Ok(Outcome { results, artifacts: Vec::new(), failure })
}

fn attractor_json(est: &AttractorEstimate, tol_cells: usize) -> Result<Value, CliError> {
    let mut comps = Vec::new();
    for c in &est.components {
        let circle = if c.has_winding() {
            let r = circle_test(est, c.id, tol_cells).map_err(analysis)?;
            json!({ "class": r.class.as_str(), "max_extent_cells": r.max_extent, "profile": r.profile })
        } else {
            Value::Null
        };
        comps.push(json!({
            "id": c.id,
            "cells": c.cells,
            "winding": c.winding,
            "generators": c.generators,
            "circle_test": circle,
        }));
    }
    Ok(json!({
        "grid": [est.region.nx(), est.region.ny()],
        "occupied": est.region.count(),
        "history": est.history,
        "component_count": est.component_count(),
        "components": comps,
    }))
}

fn attractor(sc: &Scenario, ov: &Overrides) -> Result<Outcome, CliError> {
    let spec = sc.file.attractor.as_ref().ok_or_else(|| CliError::input("scenario has no [attractor] section"))?;
    let (nx, ny) = ov.grid.unwrap_or((spec.grid[0], spec.grid[1]));
    let n = ov.iters.unwrap_or(spec.iterations);
    if spec.steps_per_period == 0 {
        return Err(CliError::input("[attractor] steps_per_period must be positive"));
    }
    let pm = map(sc)?;
    let pm = pm.with_config(IntegratorConfig::rk4(pm.period() / spec.steps_per_period as f64));
    let b0 = sc.region(nx, ny)?;
    let est = iterate_region(&pm, &b0, n).map_err(analysis)?;
    let mut results = attractor_json(&est, spec.tol_cells)?;
    let mut failure = None;
    if let Some(p) = sc.genus() {
        let pass = attractor_count_check(est.component_count(), p);
        results["count_bound"] = json!({ "bound": 2 * p - 1, "pass": pass });
        if !pass {
            failure =
                Some(format!("{} components exceed the bound {} for genus {p}", est.component_count(), 2 * p - 1));
        }
    }
    let mut portrait = Portrait::new(sc.area().bounds(), sc.domain.as_ref());
    portrait.attractor = Some(&est);
    let svg = portrait.render();
    Ok(Outcome { results, artifacts: Vec::new(), failure }
        .with("attractor.csv", ArtifactKind::Csv, attractor_csv(&est)?)
        .with("portrait.svg", ArtifactKind::Svg, svg))
}

fn index(sc: &Scenario, ov: &Overrides) -> Result<Outcome, CliError> {
    let spec = &sc.file.index;
    let (nx, ny) = ov.grid.unwrap_or((spec.grid[0], spec.grid[1]));
    let opts = EquilibriumOptions { nx, ny, t: spec.t, radius: spec.radius, ..Default::default() };
    let scan = equilibria_with(&sc.field, sc.area(), &opts).map_err(analysis)?;
    let table: Vec<Value> = scan
        .equilibria
        .iter()
        .map(|e| {
            json!({
                "location": point(e.location),
                "index": e.index,
                "type": e.kind.map(|k| k.as_str()),
                "cone_point": e.cone_point,
            })
        })
        .collect();
    let mut results = json!({
        "t": num(spec.t),
        "grid": [nx, ny],
        "equilibria": table,
        "index_sum": scan.index_sum(),
        "unresolved_candidates": scan.failures.len(),
    });
    let mut failure = None;
    if let Some(p) = sc.genus() {
        let e = euler_check(&scan.equilibria, p);
        results["euler"] = json!({ "sum": e.sum, "expected": e.expected, "pass": e.pass });
        if !e.pass {
            failure = Some(format!("index sum {} differs from the Euler characteristic {}", e.sum, e.expected));
        }
    }
    Ok(Outcome { results, artifacts: Vec::new(), failure })
}

fn check(sc: &Scenario) -> Result<Outcome, CliError> {
    let (spec, curves) = sc.check_curves()?;
    let period = sc.file.poincare.as_ref().map_or(0.0, |p| p.period);
    let times: Vec<f64> = (0..spec.times.max(1)).map(|k| period * k as f64 / spec.times.max(1) as f64).collect();
    let rep = dissipativity_check(&sc.field, &curves, spec.samples, &times);
    let results = json!({
        "pass": rep.pass,
        "margin": num(rep.margin),
        "worst_point": point(rep.worst_point),
        "worst_time": num(rep.worst_time),
        "samples": rep.samples,
        "times": times.iter().map(|t| num(*t)).collect::<Vec<_>>(),
    });
    let failure = (!rep.pass).then(|| format!("field is not inward on the check curves (margin {:.3e})", rep.margin));
    Ok(Outcome { results, artifacts: Vec::new(), failure })
}
