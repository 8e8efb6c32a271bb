use std::f64::consts::{PI, TAU};

use super::{check_bounds, Area, TopologyError};
use crate::fieldspec::{SurfaceField, VectorField};
use crate::geometry::{HPoint, RectDomain};

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 60;
const DEDUPE_TOL: f64 = 1e-6;
const INDEX_SAMPLES: usize = 360;

fn wrap_angle(d: f64) -> f64 {
    let r = d.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

fn round_winding(value: f64) -> Result<i32, TopologyError> {
    let r = value.round();
    if (value - r).abs() > 0.05 {
        return Err(TopologyError::NonIntegerWinding { value });
    }
    Ok(r as i32)
}

/// Poincaré index at `q` from the field direction around a circle, at t = 0.
pub fn index_of<F: VectorField + ?Sized>(
    field: &F,
    q: HPoint,
    radius: f64,
    n_samples: usize,
) -> Result<i32, TopologyError> {
    index_of_at(field, q, radius, n_samples, 0.0)
}

pub fn index_of_at<F: VectorField + ?Sized>(
    field: &F,
    q: HPoint,
    radius: f64,
    n_samples: usize,
    t: f64,
) -> Result<i32, TopologyError> {
    let n = n_samples.max(8);
    let mut min = f64::INFINITY;
    let angles: Vec<f64> = (0..n)
        .map(|k| {
            let th = TAU * k as f64 / n as f64;
            let v = field.eval(q.x + radius * th.cos(), q.y + radius * th.sin(), t);
            min = min.min(v[0].hypot(v[1]));
            v[1].atan2(v[0])
        })
        .collect();
    if !(min > 1e-9) {
        return Err(TopologyError::EquilibriumOnCircle { min });
    }
    let total: f64 = (0..n).map(|k| wrap_angle(angles[(k + 1) % n] - angles[k])).sum();
    round_winding(total / TAU)
}

/// Index of the cone point of a p ≥ 2 domain.
///
/// The neighbourhood of the cone point is the union of the corner sectors
/// at all vertices of the rectangle. Along the arcs the field turns by W in
/// total while the position angle sweeps the full cone angle Θ, so the
/// index is (W − Θ)/2π + 1 (a source gives W = Θ and index 1).
pub fn cone_index<F: VectorField + ?Sized>(
    field: &F,
    dom: &RectDomain,
    radius: f64,
    n_samples: usize,
    t: f64,
) -> Result<i32, TopologyError> {
    let sectors = dom.vertex_sectors();
    let theta: f64 = sectors.iter().map(|s| s.2 - s.1).sum();
    let mut min = f64::INFINITY;
    let mut w = 0.0;
    for &(v, a, b) in &sectors {
        let m = ((n_samples as f64 * (b - a) / theta).ceil() as usize).max(8);
        let mut prev: Option<f64> = None;
        for k in 0..=m {
            // Stay a hair inside the rectangle at the arc ends.
            let th = a + (b - a) * (k as f64 / m as f64).clamp(1e-9, 1.0 - 1e-9);
            let p = dom.clamp(HPoint::new(v.x + radius * th.cos(), v.y + radius * th.sin()));
            let f = field.eval(p.x, p.y, t);
            min = min.min(f[0].hypot(f[1]));
            let ang = f[1].atan2(f[0]);
            if let Some(pa) = prev {
                w += wrap_angle(ang - pa);
            }
            prev = Some(ang);
        }
    }
    if !(min > 1e-9) {
        return Err(TopologyError::EquilibriumOnCircle { min });
    }
    round_winding((w - theta) / TAU + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalType {
    Saddle,
    Source,
    Sink,
    Center,
    Degenerate,
}

impl LocalType {
    fn from_jacobian(j: [[f64; 2]; 2]) -> Self {
        let tr = j[0][0] + j[1][1];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let scale = j.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let eps = 1e-8 * scale * scale;
        if det < -eps {
            LocalType::Saddle
        } else if det <= eps {
            LocalType::Degenerate
        } else if tr > 1e-8 * scale {
            LocalType::Source
        } else if tr < -1e-8 * scale {
            LocalType::Sink
        } else {
            LocalType::Center
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LocalType::Saddle => "saddle",
            LocalType::Source => "source",
            LocalType::Sink => "sink",
            LocalType::Center => "center",
            LocalType::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumInfo {
    pub location: HPoint,
    pub index: i32,
    /// Linear type from the Jacobian; `None` at the cone point, where the
    /// chart is singular.
    pub kind: Option<LocalType>,
    pub cone_point: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateFailure {
    pub cell: (usize, usize),
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumScan {
    pub equilibria: Vec<EquilibriumInfo>,
    pub failures: Vec<CandidateFailure>,
}

impl EquilibriumScan {
    pub fn index_sum(&self) -> i32 {
        self.equilibria.iter().map(|e| e.index).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumOptions {
    pub nx: usize,
    pub ny: usize,
    pub t: f64,
    /// Index circle radius; by default 2% of the shorter side, shrunk to
    /// 40% of the distance to the nearest other equilibrium.
    pub radius: Option<f64>,
    pub n_samples: usize,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        Self { nx: 128, ny: 128, t: 0.0, radius: None, n_samples: INDEX_SAMPLES }
    }
}

/// All equilibria found on a grid scan, with indices, using default options
/// at frozen time `t`.
pub fn equilibria<F: VectorField + ?Sized>(
    field: &F,
    area: Area<'_>,
    grid: (usize, usize),
    t: f64,
) -> Result<EquilibriumScan, TopologyError> {
    let opts = EquilibriumOptions { nx: grid.0, ny: grid.1, t, ..Default::default() };
    equilibria_with(field, area, &opts)
}

enum Eval<'a, F: VectorField + ?Sized> {
    Surface(SurfaceField<'a, F>),
    Plane(&'a F),
}

impl<F: VectorField + ?Sized> VectorField for Eval<'_, F> {
    fn eval(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        match self {
            Eval::Surface(s) => s.eval(x, y, t),
            Eval::Plane(f) => f.eval(x, y, t),
        }
    }

    fn jacobian(&self, x: f64, y: f64, t: f64) -> [[f64; 2]; 2] {
        match self {
            Eval::Surface(s) => s.jacobian(x, y, t),
            Eval::Plane(f) => f.jacobian(x, y, t),
        }
    }
}

fn newton<F: VectorField + ?Sized>(
    field: &F,
    area: &Area<'_>,
    start: HPoint,
    t: f64,
    max_step: f64,
) -> Result<HPoint, String> {
    let mut q = start;
    for _ in 0..NEWTON_MAX_ITER {
        let f = field.eval(q.x, q.y, t);
        if !(f[0].is_finite() && f[1].is_finite()) {
            return Err(format!("non-finite field at ({}, {})", q.x, q.y));
        }
        if f[0].hypot(f[1]) < NEWTON_TOL {
            return Ok(q);
        }
        let j = field.jacobian(q.x, q.y, t);
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return Err("singular Jacobian".into());
        }
        let mut dx = -(j[1][1] * f[0] - j[0][1] * f[1]) / det;
        let mut dy = -(-j[1][0] * f[0] + j[0][0] * f[1]) / det;
        let len = dx.hypot(dy);
        if len > max_step {
            dx *= max_step / len;
            dy *= max_step / len;
        }
        q = HPoint::new(q.x + dx, q.y + dy);
        match area {
            Area::Surface(d) => {
                q = d.reduce(q).map_err(|e| e.to_string())?.0;
            }
            Area::Plane(b) => {
                let (mx, my) = (0.1 * (b[1] - b[0]), 0.1 * (b[3] - b[2]));
                if q.x < b[0] - mx || q.x > b[1] + mx || q.y < b[2] - my || q.y > b[3] + my {
                    return Err("left the search box".into());
                }
            }
        }
    }
    Err(format!("no convergence after {NEWTON_MAX_ITER} iterations"))
}

/// Sign-change scan, Newton refinement, deduplication through the
/// identifications, and index computation. On p ≥ 2 domains the cone
/// point is always reported, with roots found near a vertex merged into it.
pub fn equilibria_with<F: VectorField + ?Sized>(
    field: &F,
    area: Area<'_>,
    opts: &EquilibriumOptions,
) -> Result<EquilibriumScan, TopologyError> {
    let (nx, ny) = (opts.nx, opts.ny);
    if nx < 8 || ny < 8 {
        return Err(TopologyError::GridTooSmall { nx, ny });
    }
    let b = area.bounds();
    check_bounds(b)?;
    let domain = area.domain();
    let eval = match domain {
        Some(d) => Eval::Surface(SurfaceField::new(field, d)),
        None => Eval::Plane(field),
    };
    let (dx, dy) = ((b[1] - b[0]) / nx as f64, (b[3] - b[2]) / ny as f64);
    let lattice: Vec<[f64; 2]> = (0..=ny)
        .flat_map(|j| (0..=nx).map(move |i| (i, j)))
        .map(|(i, j)| field.eval(b[0] + i as f64 * dx, b[2] + j as f64 * dy, opts.t))
        .collect();
    let at = |i: usize, j: usize| lattice[j * (nx + 1) + i];
    let straddles = |vals: [f64; 4]| {
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        lo <= 0.0 && hi >= 0.0
    };

    let dist = |a: HPoint, c: HPoint| match domain {
        Some(d) => d.identified_dist(a, c, 1e-9),
        None => a.dist(c),
    };
    let vertices: Vec<HPoint> = match domain {
        Some(d) if d.has_cone_point() => d.vertex_sectors().into_iter().map(|s| s.0).collect(),
        _ => Vec::new(),
    };
    let merge_r = (2.0 * dx.hypot(dy)).max(1e-3);
    let near_vertex = |p: HPoint| vertices.iter().any(|v| v.dist(p) < merge_r);

    let mut roots: Vec<HPoint> = Vec::new();
    let mut failures = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let c = [at(i, j), at(i + 1, j), at(i, j + 1), at(i + 1, j + 1)];
            if !straddles(c.map(|v| v[0])) || !straddles(c.map(|v| v[1])) {
                continue;
            }
            let start = HPoint::new(b[0] + (i as f64 + 0.5) * dx, b[2] + (j as f64 + 0.5) * dy);
            if near_vertex(start) {
                continue;
            }
            match newton(&eval, &area, start, opts.t, 2.0 * dx.max(dy)) {
                Ok(r) => {
                    let inside = domain.is_some() || (r.x >= b[0] && r.x <= b[1] && r.y >= b[2] && r.y <= b[3]);
                    if inside && !near_vertex(r) && roots.iter().all(|&o| dist(o, r) > DEDUPE_TOL) {
                        roots.push(r);
                    }
                }
                Err(message) => failures.push(CandidateFailure { cell: (i, j), message }),
            }
        }
    }

    let scale = (b[1] - b[0]).min(b[3] - b[2]);
    let default_r = opts.radius.unwrap_or(0.02 * scale);
    let mut out = Vec::new();
    for (k, &r) in roots.iter().enumerate() {
        let nearest = roots
            .iter()
            .enumerate()
            .filter(|(m, _)| *m != k)
            .map(|(_, &o)| dist(o, r))
            .chain(vertices.iter().map(|&v| v.dist(r)))
            .fold(f64::INFINITY, f64::min);
        let radius = default_r.min(0.4 * nearest);
        let index = index_of_at(&eval, r, radius, opts.n_samples, opts.t)?;
        let kind = Some(LocalType::from_jacobian(eval.jacobian(r.x, r.y, opts.t)));
        out.push(EquilibriumInfo { location: r, index, kind, cone_point: false });
    }
    if let Some(d) = domain.filter(|d| d.has_cone_point()) {
        let nearest =
            roots.iter().flat_map(|&r| vertices.iter().map(move |&v| v.dist(r))).fold(f64::INFINITY, f64::min);
        let radius = default_r.min(0.4 * nearest).min(0.25 * d.min_segment_length());
        let index = cone_index(field, d, radius, opts.n_samples, opts.t)?;
        out.push(EquilibriumInfo { location: vertices[0], index, kind: None, cone_point: true });
    }
    Ok(EquilibriumScan { equilibria: out, failures })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EulerCheck {
    pub sum: i32,
    pub expected: i32,
    pub pass: bool,
}

/// Poincaré–Hopf budget: indices must sum to 2 − 2p.
pub fn euler_check(eqs: &[EquilibriumInfo], genus: usize) -> EulerCheck {
    let sum = eqs.iter().map(|e| e.index).sum();
    let expected = 2 - 2 * genus as i32;
    EulerCheck { sum, expected, pass: sum == expected }
}

/// At most 2p − 1 attracting components.
pub fn attractor_count_check(count: usize, genus: usize) -> bool {
    count < 2 * genus
}
