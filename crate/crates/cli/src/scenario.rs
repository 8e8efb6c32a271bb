//! Scenario files: TOML with optional preset expansion.

use std::path::Path;

use genusflow_core::fieldspec::{cusp_factor, parse_expr, synthesize, ParseError};
use genusflow_core::geometry::standard_domain;
use genusflow_core::topology::{Area, BoundaryCurve, Region};
use genusflow_core::{CurveSpec, Expr, ExprField, HPoint, RectDomain};
use serde::Deserialize;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::CliError;
use crate::presets;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub preset: Option<PresetRef>,
    pub domain: DomainSpec,
    pub field: Option<FieldSpec>,
    #[serde(default)]
    pub curve: Vec<CurveEntry>,
    #[serde(default)]
    pub integrate: IntegrateSpec,
    pub poincare: Option<PoincareSpec>,
    pub orbit: Option<OrbitSpec>,
    pub attractor: Option<AttractorSpec>,
    #[serde(default)]
    pub index: IndexSpec,
    pub check: Option<CheckSpec>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetRef {
    pub name: String,
    #[serde(default)]
    pub params: Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Torus,
    Genus,
    Plane,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub kind: DomainKind,
    pub genus: Option<usize>,
    pub bounds: Option<[f64; 4]>,
    /// Cusp radius as a fraction of the segment length, applied to fields
    /// synthesized from curves on genus ≥ 2.
    pub cusp_epsilon: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSpec {
    pub fx: String,
    pub fy: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveEntry {
    pub psi: String,
    #[serde(default = "zero")]
    pub f: String,
    #[serde(default = "zero")]
    pub g: String,
    pub label: Option<String>,
}

fn zero() -> String {
    "0".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeSpec {
    Rk4,
    #[default]
    Rk45,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegrateSpec {
    pub x0: f64,
    pub y0: f64,
    pub t0: f64,
    pub t_end: f64,
    pub scheme: SchemeSpec,
    pub rtol: f64,
    pub atol: f64,
    /// Step size for RK4, step cap for RK45.
    pub max_step: Option<f64>,
}

impl Default for IntegrateSpec {
    fn default() -> Self {
        Self {
            x0: 0.0,
            y0: 0.0,
            t0: 0.0,
            t_end: 1.0,
            scheme: SchemeSpec::Rk45,
            rtol: 1e-9,
            atol: 1e-12,
            max_step: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoincareSpec {
    pub period: f64,
    #[serde(default)]
    pub seeds: Vec<[f64; 2]>,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_equivariance")]
    pub equivariance_samples: usize,
}

fn default_iterations() -> usize {
    100
}

fn default_equivariance() -> usize {
    25
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitSpec {
    #[serde(default)]
    pub a: i64,
    #[serde(default = "one")]
    pub b: u32,
    #[serde(default)]
    pub generator: usize,
    pub seeds: Vec<[f64; 2]>,
    #[serde(default = "default_class_tol")]
    pub tol: f64,
}

fn one() -> u32 {
    1
}

fn default_class_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum RegionSpec {
    One(String),
    All(Vec<String>),
}

impl RegionSpec {
    fn texts(&self) -> Vec<&str> {
        match self {
            RegionSpec::One(s) => vec![s.as_str()],
            RegionSpec::All(v) => v.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttractorSpec {
    #[serde(default = "default_grid")]
    pub grid: [usize; 2],
    #[serde(default = "default_attractor_iters")]
    pub iterations: usize,
    /// Initial region: cells whose centre makes every expression positive.
    pub region: Option<RegionSpec>,
    #[serde(default = "default_steps")]
    pub steps_per_period: usize,
    #[serde(default = "default_tol_cells")]
    pub tol_cells: usize,
}

fn default_grid() -> [usize; 2] {
    [256, 256]
}

fn default_attractor_iters() -> usize {
    20
}

fn default_steps() -> usize {
    32
}

fn default_tol_cells() -> usize {
    3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IndexSpec {
    pub grid: [usize; 2],
    pub t: f64,
    pub radius: Option<f64>,
}

impl Default for IndexSpec {
    fn default() -> Self {
        Self { grid: [128, 128], t: 0.0, radius: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckSpec {
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Number of equally spaced times over one period (or just t = 0).
    #[serde(default = "one_usize")]
    pub times: usize,
    pub curve: Vec<CheckCurve>,
}

fn default_samples() -> usize {
    720
}

fn one_usize() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckCurve {
    pub points: Vec<[f64; 2]>,
    #[serde(default = "yes")]
    pub closed: bool,
}

fn yes() -> bool {
    true
}

/// A loaded scenario with its field compiled.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub file: ScenarioFile,
    /// Hex SHA-256 of the scenario file bytes.
    pub hash: String,
    pub domain: Option<RectDomain>,
    pub plane_bounds: Option<[f64; 4]>,
    pub field: ExprField,
    pub curves: Vec<CurveSpec>,
}

fn expr(text: &str, what: &str) -> Result<Expr, CliError> {
    parse_expr(text).map_err(|e| parse_diag(&e, text, what))
}

fn parse_diag(e: &ParseError, text: &str, what: &str) -> CliError {
    let offset = e.offset();
    CliError::input(format!("{what}: {e}\n  {text}\n  {}^", " ".repeat(text[..offset.min(text.len())].chars().count())))
}

/// Overlays `over` onto `base`, merging tables recursively.
pub fn deep_merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => deep_merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let hash = hex::encode(Sha256::digest(text.as_bytes()));
        let user: Table = text.parse().map_err(|e: toml::de::Error| CliError::input(format!("scenario: {e}")))?;
        let table = match user.get("preset") {
            Some(p) => {
                let p: PresetRef = p
                    .clone()
                    .try_into()
                    .map_err(|e: toml::de::Error| CliError::input(format!("scenario [preset]: {e}")))?;
                let mut base = presets::expand(&p.name, &p.params)?;
                deep_merge(&mut base, user);
                base
            }
            None => user,
        };
        let file: ScenarioFile =
            Value::Table(table).try_into().map_err(|e: toml::de::Error| CliError::input(format!("scenario: {e}")))?;
        Self::build(file, hash)
    }

    fn build(file: ScenarioFile, hash: String) -> Result<Self, CliError> {
        let (domain, plane_bounds) = match file.domain.kind {
            DomainKind::Torus => (Some(surface(1)?), None),
            DomainKind::Genus => {
                let p = file.domain.genus.ok_or_else(|| CliError::input("[domain] kind = \"genus\" needs genus"))?;
                if p == 0 {
                    return Err(CliError::input("[domain] genus must be at least 1"));
                }
                (Some(surface(p)?), None)
            }
            DomainKind::Plane => {
                let b = file.domain.bounds.ok_or_else(|| CliError::input("[domain] kind = \"plane\" needs bounds"))?;
                if !(b.iter().all(|v| v.is_finite()) && b[0] < b[1] && b[2] < b[3]) {
                    return Err(CliError::input(format!("[domain] bounds {b:?} must be [xmin, xmax, ymin, ymax]")));
                }
                (None, Some(b))
            }
        };
        if file.domain.kind != DomainKind::Plane && file.domain.bounds.is_some() {
            return Err(CliError::input("[domain] bounds only apply to kind = \"plane\""));
        }
        let mut curves = Vec::new();
        for (i, c) in file.curve.iter().enumerate() {
            let what = |part: &str| format!("curve {} {part}", i + 1);
            let label = c.label.clone().unwrap_or_else(|| format!("C{}", i + 1));
            let spec =
                CurveSpec::new(expr(&c.psi, &what("psi"))?, expr(&c.f, &what("f"))?, expr(&c.g, &what("g"))?, label)
                    .map_err(|e| CliError::input(e.to_string()))?;
            curves.push(spec);
        }
        let field = match (&file.field, curves.is_empty()) {
            (Some(_), false) => return Err(CliError::input("give either [field] or [[curve]], not both")),
            (None, true) => return Err(CliError::input("scenario needs a [field] or at least one [[curve]]")),
            (Some(f), true) => ExprField::new(expr(&f.fx, "field fx")?, expr(&f.fy, "field fy")?),
            (None, false) => {
                let synth = synthesize(&curves).map_err(|e| CliError::input(e.to_string()))?.into_field();
                match domain.as_ref().filter(|d| d.has_cone_point()) {
                    Some(d) => {
                        let eps = file.domain.cusp_epsilon.unwrap_or(0.1) * d.min_segment_length();
                        let factor = cusp_factor(d.cusps(), eps).map_err(|e| CliError::input(e.to_string()))?;
                        synth.scaled(&factor)
                    }
                    None => synth,
                }
            }
        };
        let sc = Self { file, hash, domain, plane_bounds, field, curves };
        sc.validate()?;
        Ok(sc)
    }

    fn validate(&self) -> Result<(), CliError> {
        let i = &self.file.integrate;
        if !(i.t_end.is_finite() && i.t0.is_finite() && i.x0.is_finite() && i.y0.is_finite()) {
            return Err(CliError::input("[integrate] values must be finite"));
        }
        if let Some(p) = &self.file.poincare {
            if !(p.period > 0.0 && p.period.is_finite()) {
                return Err(CliError::input(format!("[poincare] period must be positive, got {}", p.period)));
            }
        }
        if let Some(a) = &self.file.attractor {
            if let Some(r) = &a.region {
                for t in r.texts() {
                    expr(t, "attractor region")?;
                }
            }
        }
        Ok(())
    }

    pub fn area(&self) -> Area<'_> {
        match (&self.domain, self.plane_bounds) {
            (Some(d), _) => Area::Surface(d),
            (None, Some(b)) => Area::Plane(b),
            (None, None) => unreachable!("scenario has a domain or plane bounds"),
        }
    }

    pub fn genus(&self) -> Option<usize> {
        self.domain.as_ref().map(RectDomain::genus)
    }

    pub fn poincare(&self) -> Result<&PoincareSpec, CliError> {
        self.file.poincare.as_ref().ok_or_else(|| CliError::input("scenario has no [poincare] section"))
    }

    /// The initial attractor region on an `nx`×`ny` grid.
    pub fn region(&self, nx: usize, ny: usize) -> Result<Region, CliError> {
        let spec =
            self.file.attractor.as_ref().ok_or_else(|| CliError::input("scenario has no [attractor] section"))?;
        let exprs = match &spec.region {
            Some(r) => r.texts().into_iter().map(|t| expr(t, "attractor region")).collect::<Result<Vec<_>, _>>()?,
            None => Vec::new(),
        };
        Region::from_fn(nx, ny, self.area().bounds(), |p| exprs.iter().all(|e| e.eval_raw(p.x, p.y, 0.0) > 0.0))
            .map_err(|e| CliError::input(e.to_string()))
    }

    pub fn check_curves(&self) -> Result<(&CheckSpec, Vec<BoundaryCurve>), CliError> {
        let spec = self.file.check.as_ref().ok_or_else(|| CliError::input("scenario has no [check] section"))?;
        if spec.curve.is_empty() {
            return Err(CliError::input("[check] needs at least one curve"));
        }
        let curves = spec
            .curve
            .iter()
            .map(|c| BoundaryCurve::new(c.points.iter().map(|p| HPoint::new(p[0], p[1])).collect(), c.closed))
            .collect();
        Ok((spec, curves))
    }
}

fn surface(p: usize) -> Result<RectDomain, CliError> {
    standard_domain(p).map_err(|e| CliError::input(e.to_string()))
}
