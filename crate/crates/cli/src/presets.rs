//! Built-in scenarios. Each preset expands to a scenario table that user
//! files can override section by section.

use std::f64::consts::{FRAC_PI_3, PI};

use genusflow_core::fieldspec::{cusp_factor, parse_expr, synthesize, CurveSpec};
use genusflow_core::geometry::standard_domain;
use genusflow_core::{Expr, ExprField};
use toml::{Table, Value};

use crate::error::CliError;

pub struct PresetInfo {
    pub name: &'static str,
    pub summary: &'static str,
}

pub const PRESETS: &[PresetInfo] = &[
    PresetInfo {
        name: "martins-oscillator",
        summary: "periodically forced damped oscillator on the torus; regime = stable | inversely-unstable",
    },
    PresetInfo {
        name: "circle-limit-cycle",
        summary: "unit circle built in as an attracting limit cycle in the plane",
    },
    PresetInfo { name: "genus2-two-knots", summary: "genus-2 surface with two repelling knots around one handle pair" },
    PresetInfo { name: "genus2-one-knot", summary: "genus-2 surface with a single repelling knot" },
];

/// Reads numeric parameters with defaults and rejects unknown keys.
struct Params<'a> {
    table: &'a Table,
    used: Vec<&'static str>,
    preset: &'static str,
}

impl<'a> Params<'a> {
    fn new(table: &'a Table, preset: &'static str) -> Self {
        Self { table, used: Vec::new(), preset }
    }

    fn num(&mut self, key: &'static str, default: f64) -> Result<f64, CliError> {
        self.used.push(key);
        match self.table.get(key) {
            None => Ok(default),
            Some(Value::Float(v)) if v.is_finite() => Ok(*v),
            Some(Value::Integer(v)) => Ok(*v as f64),
            Some(other) => {
                Err(CliError::input(format!("preset {}: parameter {key} must be a number, got {other}", self.preset)))
            }
        }
    }

    fn text(&mut self, key: &'static str, default: &str) -> Result<String, CliError> {
        self.used.push(key);
        match self.table.get(key) {
            None => Ok(default.to_string()),
            Some(Value::String(s)) => Ok(s.clone()),
            Some(other) => {
                Err(CliError::input(format!("preset {}: parameter {key} must be a string, got {other}", self.preset)))
            }
        }
    }

    fn finish(self) -> Result<(), CliError> {
        match self.table.keys().find(|k| !self.used.contains(&k.as_str())) {
            Some(k) => Err(CliError::input(format!("preset {}: unknown parameter '{k}'", self.preset))),
            None => Ok(()),
        }
    }
}

fn parse_table(text: &str) -> Table {
    text.parse::<Table>().expect("preset template is valid TOML")
}

/// Expands a preset into scenario sections.
pub fn expand(name: &str, params: &Table) -> Result<Table, CliError> {
    match name {
        "martins-oscillator" => forced_oscillator(params),
        "circle-limit-cycle" => circle(params),
        "genus2-two-knots" => genus2(params, true),
        "genus2-one-knot" => genus2(params, false),
        _ => {
            let known: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
            Err(CliError::input(format!("unknown preset '{name}' (known: {})", known.join(", "))))
        }
    }
}

fn forced_oscillator(params: &Table) -> Result<Table, CliError> {
    let mut p = Params::new(params, "martins-oscillator");
    let regime = p.text("regime", "inversely-unstable")?;
    let (k_default, seed) = match regime.as_str() {
        "stable" => (0.05, [0.498, 0.508]),
        "inversely-unstable" => (0.8, [0.4449, 0.6662]),
        other => {
            return Err(CliError::input(format!(
                "preset martins-oscillator: regime must be 'stable' or 'inversely-unstable', got '{other}'"
            )))
        }
    };
    let omega = p.num("omega", 1.0)?;
    let b = p.num("b", 6.0)?;
    let c = p.num("c", 3.0)?;
    let e = p.num("e", 0.05)?;
    let k = p.num("k", k_default)?;
    p.finish()?;
    // Torus-periodic form: the y-dependence enters through 2π-periodic
    // functions so that y = 0 and y = 1 glue smoothly.
    let fx = format!("{omega:?}*(1 - cos(2*pi*y))/2 - {b:?}*sin(2*pi*y)/(2*pi) + {e:?}*cos(2*pi*x)");
    let fy = format!("{c:?}*sin(2*pi*y)/(2*pi) + {k:?}*sin(2*pi*x)*(1 + cos(2*pi*t))*(1 - cos(2*pi*y))/2");
    Ok(parse_table(&format!(
        r#"
[domain]
kind = "torus"

[field]
fx = "{fx}"
fy = "{fy}"

[integrate]
x0 = 0.3
y0 = 0.5
t_end = 20.0

[poincare]
period = 1.0
seeds = [[0.3, 0.5]]
iterations = 200
equivariance_samples = 25

[orbit]
a = 1
b = 1
generator = 0
seeds = [[{s0:?}, {s1:?}]]

[attractor]
grid = [256, 256]
iterations = 20
region = "(y - 0.08)*(0.92 - y)"
steps_per_period = 32
tol_cells = 3

[index]
grid = [128, 128]

[check]
samples = 720
times = 16

[[check.curve]]
points = [[0.0, 0.08], [1.0, 0.08]]
closed = false

[[check.curve]]
points = [[1.0, 0.92], [0.0, 0.92]]
closed = false
"#,
        s0 = seed[0],
        s1 = seed[1],
    )))
}

fn circle(params: &Table) -> Result<Table, CliError> {
    let mut p = Params::new(params, "circle-limit-cycle");
    let r = p.num("radius", 1.0)?;
    let rate = p.num("rate", 1.0)?;
    p.finish()?;
    if !(r > 0.0) {
        return Err(CliError::input("preset circle-limit-cycle: radius must be positive"));
    }
    let lo = -2.0 * r;
    let hi = 2.0 * r;
    Ok(parse_table(&format!(
        r#"
[domain]
kind = "plane"
bounds = [{lo:?}, {hi:?}, {lo:?}, {hi:?}]

[[curve]]
psi = "x^2 + y^2 - {r2:?}"
f = "-{rate:?}*x"
g = "-{rate:?}*y"
label = "C1"

[integrate]
x0 = {r:?}
y0 = 0.0
t_end = {tend:?}

[poincare]
period = {period:?}
seeds = [[{half:?}, 0.0]]
iterations = 50

[orbit]
a = 0
b = 1
seeds = [[{r:?}, 0.0]]

[attractor]
grid = [128, 128]
iterations = 20
region = ["x^2 + y^2 - {inner_r2:?}", "{outer:?} - x^2 - y^2"]
steps_per_period = 64

[index]
grid = [64, 64]

[check]
samples = 720
times = 1

[[check.curve]]
points = {inner}
closed = true

[[check.curve]]
points = {outer_pts}
closed = true
"#,
        r2 = r * r,
        tend = 10.0 * PI,
        period = PI,
        half = 0.5 * r,
        outer = (1.9 * r).powi(2),
        inner_r2 = (0.25 * r).powi(2),
        inner = polygon(0.5 * r, 72, false),
        outer_pts = polygon(1.5 * r, 72, true),
    )))
}

/// Regular polygon as a TOML array; counter-clockwise when `ccw`.
fn polygon(r: f64, n: usize, ccw: bool) -> String {
    let pts: Vec<String> = (0..n)
        .map(|k| {
            let a = 2.0 * PI * k as f64 / n as f64 * if ccw { 1.0 } else { -1.0 };
            format!("[{:?}, {:?}]", r * a.cos(), r * a.sin())
        })
        .collect();
    format!("[{}]", pts.join(", "))
}

/// Expression text for the genus-2 presets.
///
/// Away from the knots the field is a + b·J applied to the gradient of
/// cos 6x + cos(6y − 6), which is invariant under every side pairing. A
/// smooth mask blends in the synthesized knot field near x = π/6 (and
/// x = 5π/6), and the cusp factor makes the cone point an equilibrium.
pub fn genus2_field(
    two_knots: bool,
    a: f64,
    b: f64,
    repel: f64,
    mask_width: f64,
    cusp_eps: f64,
) -> Result<ExprField, CliError> {
    let s = FRAC_PI_3;
    let xs = [0.5 * s, 2.5 * s];
    let knots: &[f64] = if two_knots { &xs } else { &xs[..1] };
    let slope = if two_knots { format!("{repel:?}*(x - {:?})/{s:?}", 1.5 * s) } else { format!("{repel:?}") };
    let curves = knots
        .iter()
        .enumerate()
        .map(|(i, x0)| CurveSpec::parse(&format!("x - {x0:?}"), &slope, "0", &format!("K{}", i + 1)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::input(e.to_string()))?;
    let knot_field = synthesize(&curves).map_err(|e| CliError::input(e.to_string()))?.into_field();

    let ex = |t: &str| parse_expr(t).expect("preset expression");
    let sigma = mask_width * s;
    let mask = Expr::sum(knots.iter().map(|x0| ex(&format!("exp(-((x - {x0:?})/{sigma:?})^8)"))));
    let veq = [
        ex(&format!("{a:?}*(-sin(6*x)) + {b:?}*(-sin(6*y - 6))")),
        ex(&format!("{a:?}*(-sin(6*y - 6)) + {b:?}*sin(6*x)")),
    ];
    let blend = |knot: &Expr, eq: Expr| {
        Expr::add(Expr::mul(mask.clone(), knot.clone()), Expr::mul(Expr::sub(Expr::Const(1.0), mask.clone()), eq))
    };
    let [vx, vy] = veq;
    let field = ExprField::new(blend(knot_field.fx(), vx), blend(knot_field.fy(), vy));
    let dom = standard_domain(2).expect("genus 2 domain");
    let factor = cusp_factor(dom.cusps(), cusp_eps * s).map_err(|e| CliError::input(e.to_string()))?;
    Ok(field.scaled(&factor))
}

fn genus2(params: &Table, two_knots: bool) -> Result<Table, CliError> {
    let name = if two_knots { "genus2-two-knots" } else { "genus2-one-knot" };
    let mut p = Params::new(params, name);
    let a = p.num("a", -1.0)?;
    let b = p.num("b", 0.5)?;
    let repel = p.num("repel", 1.0)?;
    let mask_width = p.num("mask_width", 0.3)?;
    let cusp_eps = p.num("cusp_epsilon", 0.1)?;
    p.finish()?;
    let field = genus2_field(two_knots, a, b, repel, mask_width, cusp_eps)?;
    let s = FRAC_PI_3;
    let strip = 0.15 * s;
    let hole = 0.2 * s;
    let mut region = vec![format!("(x - {:?})^2 - {:?}", 0.5 * s, strip * strip)];
    if two_knots {
        region.push(format!("(x - {:?})^2 - {:?}", 2.5 * s, strip * strip));
    }
    let dom = standard_domain(2).expect("genus 2 domain");
    let mut seen: Vec<(f64, f64)> = Vec::new();
    for v in dom.cusps() {
        if seen.iter().all(|&(x, y)| (x - v.x).abs() + (y - v.y).abs() > 1e-9) {
            seen.push((v.x, v.y));
            region.push(format!("(x - {:?})^2 + (y - {:?})^2 - {:?}", v.x, v.y, hole * hole));
        }
    }
    let region_toml: Vec<String> = region.iter().map(|r| format!("\"{r}\"")).collect();
    let mut curves = String::new();
    for x0 in if two_knots { vec![0.5 * s, 2.5 * s] } else { vec![0.5 * s] } {
        // Normals point away from the knot: up the left line, down the right.
        curves.push_str(&format!(
            "\n[[check.curve]]\npoints = [[{l:?}, 1.0], [{l:?}, {top:?}]]\nclosed = false\n\n[[check.curve]]\npoints = [[{r:?}, {top:?}], [{r:?}, 1.0]]\nclosed = false\n",
            l = x0 - strip,
            r = x0 + strip,
            top = 1.0 + s,
        ));
    }
    Ok(parse_table(&format!(
        r#"
[domain]
kind = "genus"
genus = 2

[field]
fx = "{fx}"
fy = "{fy}"

[integrate]
x0 = {ix:?}
y0 = {iy:?}
t_end = 10.0

[poincare]
period = 0.5
seeds = [[{ix:?}, {iy:?}]]
iterations = 100
equivariance_samples = 12

[attractor]
grid = [256, 256]
iterations = 20
region = [{region}]
steps_per_period = 32

[index]
grid = [192, 192]

[check]
samples = 720
times = 1
{curves}"#,
        fx = field.fx(),
        fy = field.fy(),
        ix = 0.6 * s,
        iy = 1.0 + 0.5 * s,
        region = region_toml.join(", "),
    )))
}
