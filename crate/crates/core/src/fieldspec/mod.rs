//! Expressions, vector fields and the closed-curve synthesis construction.

mod diff;
mod expr;
mod parse;
mod tape;

pub use diff::diff;
pub use expr::{eval_expr, BinaryOp, Expr, UnaryOp, Var};
pub use parse::parse_expr;
pub use tape::Tape;

use thiserror::Error;

use crate::geometry::{HPoint, RectDomain};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier '{name}' at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("exponent at offset {offset} must be a non-negative integer literal")]
    Exponent { offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. }
            | ParseError::UnknownIdentifier { offset, .. }
            | ParseError::Exponent { offset } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("non-finite value at (x={x}, y={y}, t={t})")]
    NonFinite { x: f64, y: f64, t: f64 },
    #[error("synthesis needs at least one curve")]
    NoCurves,
    #[error("curve '{label}': psi must not depend on t")]
    TimeDependentCurve { label: String },
    #[error("cusp radius must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("{0}")]
    BadArgument(String),
}

/// A planar, possibly time-dependent vector field.
pub trait VectorField: Sync {
    fn eval(&self, x: f64, y: f64, t: f64) -> [f64; 2];

    /// Spatial Jacobian `[[∂fx/∂x, ∂fx/∂y], [∂fy/∂x, ∂fy/∂y]]`.
    fn jacobian(&self, x: f64, y: f64, t: f64) -> [[f64; 2]; 2] {
        fd_jacobian(self, x, y, t)
    }
}

impl<F> VectorField for F
where
    F: Fn(f64, f64, f64) -> [f64; 2] + Sync,
{
    fn eval(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        self(x, y, t)
    }
}

/// Central-difference Jacobian with step 1e−6·max(1, |coordinate|).
pub fn fd_jacobian<F: VectorField + ?Sized>(f: &F, x: f64, y: f64, t: f64) -> [[f64; 2]; 2] {
    let hx = 1e-6 * x.abs().max(1.0);
    let hy = 1e-6 * y.abs().max(1.0);
    let (px, mx) = (f.eval(x + hx, y, t), f.eval(x - hx, y, t));
    let (py, my) = (f.eval(x, y + hy, t), f.eval(x, y - hy, t));
    [
        [(px[0] - mx[0]) / (2.0 * hx), (py[0] - my[0]) / (2.0 * hy)],
        [(px[1] - mx[1]) / (2.0 * hx), (py[1] - my[1]) / (2.0 * hy)],
    ]
}

/// Field given by two expressions, compiled together with its symbolic Jacobian.
#[derive(Debug, Clone)]
pub struct ExprField {
    fx: Expr,
    fy: Expr,
    jac: [[Expr; 2]; 2],
    value: Tape,
    full: Tape,
}

impl ExprField {
    pub fn new(fx: Expr, fy: Expr) -> Self {
        let jac = [[diff(&fx, Var::X), diff(&fx, Var::Y)], [diff(&fy, Var::X), diff(&fy, Var::Y)]];
        let value = Tape::compile(&[&fx, &fy]);
        let full = Tape::compile(&[&jac[0][0], &jac[0][1], &jac[1][0], &jac[1][1]]);
        Self { fx, fy, jac, value, full }
    }

    pub fn parse(fx: &str, fy: &str) -> Result<Self, ParseError> {
        Ok(Self::new(parse_expr(fx)?, parse_expr(fy)?))
    }

    pub fn fx(&self) -> &Expr {
        &self.fx
    }

    pub fn fy(&self) -> &Expr {
        &self.fy
    }

    pub fn jacobian_exprs(&self) -> &[[Expr; 2]; 2] {
        &self.jac
    }

    pub fn is_autonomous(&self) -> bool {
        !self.fx.depends_on(Var::T) && !self.fy.depends_on(Var::T)
    }

    /// Both components multiplied by a scalar expression.
    pub fn scaled(&self, factor: &Expr) -> ExprField {
        ExprField::new(Expr::mul(self.fx.clone(), factor.clone()), Expr::mul(self.fy.clone(), factor.clone()))
    }

    pub fn tape_len(&self) -> usize {
        self.value.len() + self.full.len()
    }
}

impl VectorField for ExprField {
    fn eval(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let mut out = [0.0; 2];
        self.value.eval(x, y, t, &mut out);
        out
    }

    fn jacobian(&self, x: f64, y: f64, t: f64) -> [[f64; 2]; 2] {
        let mut out = [0.0; 4];
        self.full.eval(x, y, t, &mut out);
        [[out[0], out[1]], [out[2], out[3]]]
    }
}

/// A field read on the closed surface: points outside the rectangle are
/// reduced into it and the vector is pulled back through the transition.
pub struct SurfaceField<'a, F: VectorField + ?Sized> {
    field: &'a F,
    dom: &'a RectDomain,
}

impl<'a, F: VectorField + ?Sized> SurfaceField<'a, F> {
    pub fn new(field: &'a F, dom: &'a RectDomain) -> Self {
        Self { field, dom }
    }
}

impl<F: VectorField + ?Sized> VectorField for SurfaceField<'_, F> {
    fn eval(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let p = HPoint::new(x, y);
        if self.dom.contains(p) {
            return self.field.eval(x, y, t);
        }
        match self.dom.reduce(p) {
            Ok((q, _, map)) => map.pull(self.field.eval(q.x, q.y, t)),
            Err(_) => [f64::NAN, f64::NAN],
        }
    }

    fn jacobian(&self, x: f64, y: f64, t: f64) -> [[f64; 2]; 2] {
        let p = HPoint::new(x, y);
        if self.dom.contains(p) {
            return self.field.jacobian(x, y, t);
        }
        match self.dom.reduce(p) {
            Ok((q, _, map)) => {
                // J(p) = M⁻¹ J(q) M for the linear part M of the reduction.
                let j = self.field.jacobian(q.x, q.y, t);
                let m = map.linear();
                let jm = mat_mul(j, m);
                let inv = map.inverse().linear();
                mat_mul(inv, jm)
            }
            Err(_) => [[f64::NAN; 2]; 2],
        }
    }
}

pub(crate) fn mat_mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
        [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
    ]
}

/// One prescribed closed curve ψ = 0 with its damping terms.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSpec {
    pub psi: Expr,
    pub f: Expr,
    pub g: Expr,
    pub label: String,
}

impl CurveSpec {
    pub fn new(psi: Expr, f: Expr, g: Expr, label: impl Into<String>) -> Result<Self, FieldError> {
        let label = label.into();
        if psi.depends_on(Var::T) {
            return Err(FieldError::TimeDependentCurve { label });
        }
        Ok(Self { psi, f, g, label })
    }

    pub fn parse(psi: &str, f: &str, g: &str, label: &str) -> Result<Self, ParseErrorOr> {
        let curve = Self::new(parse_expr(psi)?, parse_expr(f)?, parse_expr(g)?, label)?;
        Ok(curve)
    }
}

/// Either failure from [`CurveSpec::parse`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorOr {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Field whose trajectories include every prescribed curve.
#[derive(Debug, Clone)]
pub struct SynthesizedField {
    curves: Vec<CurveSpec>,
    cusp_points: Vec<HPoint>,
    epsilon: Option<f64>,
    field: ExprField,
}

impl SynthesizedField {
    pub fn curves(&self) -> &[CurveSpec] {
        &self.curves
    }

    pub fn cusp_points(&self) -> &[HPoint] {
        &self.cusp_points
    }

    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn field(&self) -> &ExprField {
        &self.field
    }

    pub fn into_field(self) -> ExprField {
        self.field
    }
}

impl VectorField for SynthesizedField {
    fn eval(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        self.field.eval(x, y, t)
    }

    fn jacobian(&self, x: f64, y: f64, t: f64) -> [[f64; 2]; 2] {
        self.field.jacobian(x, y, t)
    }
}

/// ẋ = Σᵢ (∂ψᵢ/∂y + ψᵢfᵢ)·Π_{j≠i} ψⱼ,  ẏ = Σᵢ (−∂ψᵢ/∂x + ψᵢgᵢ)·Π_{j≠i} ψⱼ.
pub fn synthesize(curves: &[CurveSpec]) -> Result<SynthesizedField, FieldError> {
    if curves.is_empty() {
        return Err(FieldError::NoCurves);
    }
    let others =
        |i: usize| Expr::product(curves.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, c)| c.psi.clone()));
    let mut fx = Vec::with_capacity(curves.len());
    let mut fy = Vec::with_capacity(curves.len());
    for (i, c) in curves.iter().enumerate() {
        if c.psi.depends_on(Var::T) {
            return Err(FieldError::TimeDependentCurve { label: c.label.clone() });
        }
        let rest = others(i);
        let sx = Expr::add(diff(&c.psi, Var::Y), Expr::mul(c.psi.clone(), c.f.clone()));
        let sy = Expr::add(Expr::neg(diff(&c.psi, Var::X)), Expr::mul(c.psi.clone(), c.g.clone()));
        fx.push(Expr::mul(sx, rest.clone()));
        fy.push(Expr::mul(sy, rest));
    }
    Ok(SynthesizedField {
        curves: curves.to_vec(),
        cusp_points: Vec::new(),
        epsilon: None,
        field: ExprField::new(Expr::sum(fx), Expr::sum(fy)),
    })
}

/// Π_m (1 − exp(−d_m²/ε²)): exactly zero at each point, at least 1−e⁻¹
/// per factor beyond distance ε.
pub fn cusp_factor(points: &[HPoint], epsilon: f64) -> Result<Expr, FieldError> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(FieldError::InvalidEpsilon(epsilon));
    }
    let eps2 = epsilon * epsilon;
    Ok(Expr::product(points.iter().map(|m| {
        let dx = Expr::sub(Expr::Var(Var::X), Expr::Const(m.x));
        let dy = Expr::sub(Expr::Var(Var::Y), Expr::Const(m.y));
        let d2 = Expr::add(Expr::pow(dx, 2), Expr::pow(dy, 2));
        let bump = Expr::unary(UnaryOp::Exp, Expr::neg(Expr::div(d2, Expr::Const(eps2))));
        Expr::sub(Expr::Const(1.0), bump)
    })))
}

pub fn apply_cusp_vanishing(
    field: SynthesizedField,
    points: &[HPoint],
    epsilon: f64,
) -> Result<SynthesizedField, FieldError> {
    let factor = cusp_factor(points, epsilon)?;
    let mut cusp_points = field.cusp_points;
    cusp_points.extend_from_slice(points);
    Ok(SynthesizedField {
        curves: field.curves,
        cusp_points,
        epsilon: Some(epsilon),
        field: field.field.scaled(&factor),
    })
}

/// Largest mismatch ‖w(Tᵢq) − (Tᵢ)_* w(q)‖ over `n_samples` points per segment at t = 0.
pub fn check_matching<F: VectorField + ?Sized>(field: &F, dom: &RectDomain, n_samples: usize) -> f64 {
    check_matching_at(field, dom, n_samples, 0.0)
}

pub fn check_matching_at<F: VectorField + ?Sized>(field: &F, dom: &RectDomain, n_samples: usize, t: f64) -> f64 {
    let n = n_samples.max(1);
    let mut worst: f64 = 0.0;
    for seg in dom.segments() {
        let tr = dom.transition(seg.label);
        for k in 0..n {
            let s = if n == 1 { 0.5 } else { k as f64 / (n - 1) as f64 };
            let q = seg.point_at(s);
            let image = tr.apply(q);
            let there = field.eval(image.x, image.y, t);
            let pushed = tr.push(field.eval(q.x, q.y, t));
            let r = (there[0] - pushed[0]).hypot(there[1] - pushed[1]);
            worst = if r.is_nan() { f64::INFINITY } else { worst.max(r) };
        }
    }
    worst
}

/// Forced oscillator ẋ = y − H(x), ẏ = −g(t, x).
pub fn builtin_forced_oscillator(h: &Expr, g: &Expr) -> Result<ExprField, FieldError> {
    if h.depends_on(Var::Y) || h.depends_on(Var::T) {
        return Err(FieldError::BadArgument("H may depend on x only".into()));
    }
    if g.depends_on(Var::Y) {
        return Err(FieldError::BadArgument("g may depend on x and t only".into()));
    }
    Ok(ExprField::new(Expr::sub(Expr::Var(Var::Y), h.clone()), Expr::neg(g.clone())))
}
