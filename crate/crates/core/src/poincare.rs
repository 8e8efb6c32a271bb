//! Period-T return maps, periodic-orbit search and linear stability.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{flow, flow_variational, FlowEnd, IntegrateError, IntegratorConfig, State, Termination};
use crate::fieldspec::VectorField;
use crate::geometry::{GeometryError, HPoint, RectDomain, Similarity};

pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 50;
pub const SINGULAR_DET: f64 = 1e-14;
/// Entrywise gap between the two monodromy methods that is flagged.
pub const DISAGREE_TOL: f64 = 1e-4;
const FD_STEP: f64 = 1e-6;
/// Fixed RK4 steps per period for the finite-difference oracle.
const FD_ORACLE_STEPS: f64 = 4000.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PoincareError {
    #[error("period must be positive and finite, got {0}")]
    InvalidPeriod(f64),
    #[error("winding b must be at least 1")]
    InvalidWinding,
    #[error("generator {g} out of range ({count} generators)")]
    InvalidGenerator { g: usize, count: usize },
    #[error("a nonzero deck power needs a surface domain")]
    NoDomain,
    #[error("flow from ({x}, {y}) reached the cusp equilibrium")]
    CuspHit { x: f64, y: f64 },
    #[error("Newton did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("Newton Jacobian is singular (det {det:.3e}) at residual {residual:.3e}")]
    SingularJacobian { det: f64, residual: f64 },
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Period map of a time-periodic field, optionally on a surface.
pub struct PoincareMap<'a, F: VectorField + ?Sized> {
    field: &'a F,
    period: f64,
    domain: Option<&'a RectDomain>,
    config: IntegratorConfig,
}

impl<'a, F: VectorField + ?Sized> PoincareMap<'a, F> {
    /// Uses tighter tolerances than the integrator default, since Newton
    /// and finite differences need a smooth map.
    pub fn new(field: &'a F, period: f64, domain: Option<&'a RectDomain>) -> Result<Self, PoincareError> {
        if !(period > 0.0 && period.is_finite()) {
            return Err(PoincareError::InvalidPeriod(period));
        }
        Ok(Self { field, period, domain, config: IntegratorConfig::rk45(1e-12, 1e-14) })
    }

    pub fn with_config(mut self, config: IntegratorConfig) -> Self {
        self.config = config;
        self
    }

    pub fn field(&self) -> &'a F {
        self.field
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn domain(&self) -> Option<&'a RectDomain> {
        self.domain
    }

    pub fn config(&self) -> &IntegratorConfig {
        &self.config
    }

    /// `b` periods from `q` (which must be in the domain).
    pub fn flow_periods(&self, q: HPoint, b: u32) -> Result<FlowEnd, PoincareError> {
        let end = flow(self.field, q, 0.0, b as f64 * self.period, self.domain, &self.config)?;
        if let Termination::CuspHit { .. } = end.termination {
            return Err(PoincareError::CuspHit { x: q.x, y: q.y });
        }
        Ok(end)
    }

    /// One period: endpoint in the rectangle and the accumulated word.
    pub fn apply(&self, q: HPoint) -> Result<(HPoint, Vec<i32>), PoincareError> {
        let end = self.flow_periods(q, 1)?;
        Ok((end.point, end.word))
    }

    /// Reduces `q` into the domain; returns the point and the map from
    /// `q`'s frame to the reduced one.
    fn enter(&self, q: HPoint) -> Result<(HPoint, Similarity), PoincareError> {
        match self.domain {
            Some(d) if !d.contains(q) => {
                let (r, _, m) = d.reduce(q)?;
                Ok((r, m))
            }
            _ => Ok((q, Similarity::IDENTITY)),
        }
    }

    fn gamma(&self, a: i64, g: usize) -> Result<Similarity, PoincareError> {
        match self.domain {
            None if a != 0 => Err(PoincareError::NoDomain),
            None => Ok(Similarity::IDENTITY),
            Some(d) => {
                if g >= d.generator_count() {
                    return Err(PoincareError::InvalidGenerator { g, count: d.generator_count() });
                }
                Ok(d.deck_generator(g).powi(a))
            }
        }
    }

    /// Lift of P^b(q) in `q`'s own frame. Points slightly outside the
    /// rectangle are evaluated through the transitions.
    pub fn lifted(&self, q: HPoint, b: u32) -> Result<HPoint, PoincareError> {
        let (r, m) = self.enter(q)?;
        let end = self.flow_periods(r, b)?;
        Ok(m.inverse().apply(end.lifted()))
    }

    /// Deck-adjusted return map H(q) = Γ_g^{−a}(lift of P^b(q)).
    pub fn deck_adjusted(&self, q: HPoint, a: i64, b: u32, g: usize) -> Result<HPoint, PoincareError> {
        if b == 0 {
            return Err(PoincareError::InvalidWinding);
        }
        let gamma_inv = self.gamma(a, g)?.inverse();
        Ok(gamma_inv.apply(self.lifted(q, b)?))
    }

    fn residual_vec(&self, q: HPoint, a: i64, b: u32, g: usize) -> Result<[f64; 2], PoincareError> {
        let h = self.deck_adjusted(q, a, b, g)?;
        Ok([h.x - q.x, h.y - q.y])
    }

    /// Central-difference Jacobian of `map` at `q`.
    fn fd_matrix(
        q: HPoint,
        map: impl Fn(HPoint) -> Result<HPoint, PoincareError>,
    ) -> Result<[[f64; 2]; 2], PoincareError> {
        let mut m = [[0.0; 2]; 2];
        for (col, (dx, dy)) in [(1.0, 0.0), (0.0, 1.0)].into_iter().enumerate() {
            let h = FD_STEP * if col == 0 { q.x.abs().max(1.0) } else { q.y.abs().max(1.0) };
            let p = map(HPoint::new(q.x + h * dx, q.y + h * dy))?;
            let n = map(HPoint::new(q.x - h * dx, q.y - h * dy))?;
            m[0][col] = (p.x - n.x) / (2.0 * h);
            m[1][col] = (p.y - n.y) / (2.0 * h);
        }
        Ok(m)
    }

    /// Damped Newton on G(q) = H(q) − q with a finite-difference Jacobian.
    pub fn find_periodic(&self, a: i64, b: u32, g: usize, guess: HPoint) -> Result<PeriodicOrbit, PoincareError> {
        if b == 0 {
            return Err(PoincareError::InvalidWinding);
        }
        self.gamma(a, g)?;
        let norm = |v: [f64; 2]| v[0].hypot(v[1]);
        let mut q = guess;
        let mut r = self.residual_vec(q, a, b, g)?;
        let mut res = norm(r);
        for iter in 0..=NEWTON_MAX_ITER {
            let jac = Self::fd_matrix(q, |p| {
                let v = self.residual_vec(p, a, b, g)?;
                Ok(HPoint::new(v[0], v[1]))
            })?;
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            if res < NEWTON_TOL {
                return self.finish(q, a, b, g, res, iter, det.abs() < SINGULAR_DET);
            }
            if iter == NEWTON_MAX_ITER {
                break;
            }
            if det.abs() < SINGULAR_DET {
                return Err(PoincareError::SingularJacobian { det, residual: res });
            }
            let step = [-(jac[1][1] * r[0] - jac[0][1] * r[1]) / det, -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det];
            let mut lambda = 1.0;
            let accepted = loop {
                let trial = HPoint::new(q.x + lambda * step[0], q.y + lambda * step[1]);
                if let Ok(rt) = self.residual_vec(trial, a, b, g) {
                    if norm(rt) < res {
                        break Some((trial, rt));
                    }
                }
                lambda *= 0.5;
                if lambda < 1e-6 {
                    break None;
                }
            };
            match accepted {
                Some((trial, rt)) => {
                    q = trial;
                    r = rt;
                    res = norm(rt);
                }
                None => return Err(PoincareError::NoConvergence { iterations: iter + 1, residual: res }),
            }
        }
        Err(PoincareError::NoConvergence { iterations: NEWTON_MAX_ITER, residual: res })
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        q: HPoint,
        a: i64,
        b: u32,
        g: usize,
        residual: f64,
        iterations: usize,
        jacobian_singular: bool,
    ) -> Result<PeriodicOrbit, PoincareError> {
        let (p, _) = self.enter(q)?;
        let word = self.flow_periods(p, b)?.word;
        Ok(PeriodicOrbit {
            point: State::new(p.x, p.y, 0.0),
            a,
            b,
            generator: g,
            residual,
            iterations,
            jacobian_singular,
            word,
        })
    }

    /// Runs `find_periodic` from every seed in parallel; results keep seed order.
    pub fn find_periodic_seeds(
        &self,
        a: i64,
        b: u32,
        g: usize,
        seeds: &[HPoint],
    ) -> Vec<Result<PeriodicOrbit, PoincareError>> {
        seeds.par_iter().map(|&s| self.find_periodic(a, b, g, s)).collect()
    }

    /// Linearization of the deck-adjusted return map at an orbit, by the
    /// variational equations and by central differences.
    pub fn monodromy(&self, orbit: &PeriodicOrbit) -> Result<MonodromyReport, PoincareError> {
        let q = orbit.point.point();
        let gamma_inv = self.gamma(orbit.a, orbit.generator)?.inverse();
        let (end, j) = flow_variational(self.field, q, 0.0, orbit.b as f64 * self.period, self.domain, &self.config)?;
        if let Termination::CuspHit { .. } = end.termination {
            return Err(PoincareError::CuspHit { x: q.x, y: q.y });
        }
        let back = end.deck.inverse().then(&gamma_inv).linear();
        let variational = Monodromy::from_matrix(crate::fieldspec::mat_mul(back, j));

        let fine = IntegratorConfig::rk4(self.period / FD_ORACLE_STEPS);
        let oracle = PoincareMap { config: fine, ..*self };
        let fd = Self::fd_matrix(q, |p| oracle.deck_adjusted(p, orbit.a, orbit.b, orbit.generator))?;
        let finite_difference = Monodromy::from_matrix(fd);
        let max_diff = variational.max_entry_diff(&finite_difference);
        Ok(MonodromyReport { variational, finite_difference, max_diff, disagree: max_diff > DISAGREE_TOL })
    }

    /// Compares P at the two boundary representatives of on-segment points:
    /// the lift of P(T_i q) against T_i applied to the lift of P(q).
    pub fn check_equivariance(&self, n_samples: usize) -> Result<f64, PoincareError> {
        let Some(dom) = self.domain else {
            return Ok(0.0);
        };
        let mut worst = 0.0f64;
        for seg in dom.segments() {
            let t = dom.transition(seg.label);
            for k in 0..n_samples {
                let s = (k as f64 + 0.5) / n_samples as f64;
                let q = seg.point_at(s);
                let tq = dom.clamp(t.apply(q));
                let direct = t.apply(self.lifted(q, 1)?);
                let moved = self.lifted(tq, 1)?;
                worst = worst.max(direct.dist(moved));
            }
        }
        Ok(worst)
    }
}

impl<F: VectorField + ?Sized> Clone for PoincareMap<'_, F> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<F: VectorField + ?Sized> Copy for PoincareMap<'_, F> {}

/// A solution of Γ_g^{−a}(P^b(q)) = q.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicOrbit {
    pub point: State,
    pub a: i64,
    pub b: u32,
    pub generator: usize,
    pub residual: f64,
    pub iterations: usize,
    /// The Newton Jacobian was singular at the solution, so the orbit is
    /// not isolated (e.g. a whole family of periodic orbits).
    pub jacobian_singular: bool,
    pub word: Vec<i32>,
}

/// 2×2 linearization `[[a, b], [c, d]]` with its multipliers, |λ1| ≤ |λ2|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monodromy {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub lambda1: Complex64,
    pub lambda2: Complex64,
}

impl Monodromy {
    pub fn from_matrix(m: [[f64; 2]; 2]) -> Self {
        let (l1, l2) = multipliers(m);
        Self { a: m[0][0], b: m[0][1], c: m[1][0], d: m[1][1], lambda1: l1, lambda2: l2 }
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.a, self.b], [self.c, self.d]]
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// Linearization of the b-fold map applied twice.
    pub fn squared(&self) -> Monodromy {
        let m = self.matrix();
        Monodromy::from_matrix(crate::fieldspec::mat_mul(m, m))
    }

    pub fn classify(&self, tol: f64) -> OrbitClass {
        classify(self.lambda1, self.lambda2, tol)
    }

    fn max_entry_diff(&self, other: &Monodromy) -> f64 {
        [self.a - other.a, self.b - other.b, self.c - other.c, self.d - other.d]
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonodromyReport {
    pub variational: Monodromy,
    pub finite_difference: Monodromy,
    pub max_diff: f64,
    pub disagree: bool,
}

/// Roots of λ² − tr·λ + det = 0, ordered by modulus, then real part, then
/// imaginary part.
pub fn multipliers(m: [[f64; 2]; 2]) -> (Complex64, Complex64) {
    let tr = m[0][0] + m[1][1];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let disc = tr * tr - 4.0 * det;
    let (r1, r2) = if disc >= 0.0 {
        let q = 0.5 * (tr + tr.signum() * disc.sqrt());
        if q == 0.0 {
            (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
        } else {
            (Complex64::new(q, 0.0), Complex64::new(det / q, 0.0))
        }
    } else {
        let im = 0.5 * (-disc).sqrt();
        (Complex64::new(0.5 * tr, im), Complex64::new(0.5 * tr, -im))
    };
    let key = |z: &Complex64| (z.norm(), z.re, z.im);
    if key(&r2).partial_cmp(&key(&r1)) == Some(std::cmp::Ordering::Less) {
        (r2, r1)
    } else {
        (r1, r2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OrbitClass {
    Stable,
    InverselyUnstable,
    DirectlyUnstable,
    Elliptic,
    Degenerate,
}

impl OrbitClass {
    pub fn as_str(self) -> &'static str {
        match self {
            OrbitClass::Stable => "stable",
            OrbitClass::InverselyUnstable => "inversely-unstable",
            OrbitClass::DirectlyUnstable => "directly-unstable",
            OrbitClass::Elliptic => "elliptic",
            OrbitClass::Degenerate => "degenerate",
        }
    }
}

impl fmt::Display for OrbitClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Stability type from the multipliers. Anything within `tol` of a
/// boundary between types is degenerate.
pub fn classify(l1: Complex64, l2: Complex64, tol: f64) -> OrbitClass {
    let real = l1.im.abs() <= tol && l2.im.abs() <= tol;
    if real {
        let (lo, hi) = if l1.re.abs() <= l2.re.abs() { (l1.re, l2.re) } else { (l2.re, l1.re) };
        if hi < -1.0 - tol && lo > -1.0 + tol && lo < -tol {
            return OrbitClass::InverselyUnstable;
        }
        if lo > tol && lo < 1.0 - tol && hi > 1.0 + tol {
            return OrbitClass::DirectlyUnstable;
        }
        if lo.abs().max(hi.abs()) < 1.0 - tol {
            return OrbitClass::Stable;
        }
        return OrbitClass::Degenerate;
    }
    let r = l1.norm().max(l2.norm());
    if r < 1.0 - tol {
        OrbitClass::Stable
    } else if (r - 1.0).abs() < tol {
        OrbitClass::Elliptic
    } else {
        OrbitClass::Degenerate
    }
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI};

    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    use super::*;
    use crate::geometry::standard_domain;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn apply_examples() {
        let zero = |_x: f64, _y: f64, _t: f64| [0.0, 0.0];
        let p = PoincareMap::new(&zero, 1.0, None).unwrap();
        assert_eq!(p.apply(HPoint::new(0.3, 0.7)).unwrap(), (HPoint::new(0.3, 0.7), vec![]));

        let sink = |x: f64, y: f64, _t: f64| [-x, -y];
        let p = PoincareMap::new(&sink, 1.0, None).unwrap();
        let (q, _) = p.apply(HPoint::new(0.4, -0.2)).unwrap();
        let e = (-1.0f64).exp();
        assert_abs_diff_eq!(q.x, 0.4 * e, epsilon = 1e-9);
        assert_abs_diff_eq!(q.y, -0.2 * e, epsilon = 1e-9);

        let torus = standard_domain(1).unwrap();
        let right = |_x: f64, _y: f64, _t: f64| [1.0, 0.0];
        let p = PoincareMap::new(&right, 1.0, Some(&torus)).unwrap();
        let (q, word) = p.apply(HPoint::new(0.25, 0.5)).unwrap();
        assert_abs_diff_eq!(q.x, 0.25, epsilon = 1e-10);
        assert_eq!(word, vec![3]);
        assert!(PoincareMap::new(&right, 0.0, None).is_err());
    }

    #[test]
    fn equivariance_examples() {
        let torus = standard_domain(1).unwrap();
        let periodic = |x: f64, y: f64, _t: f64| [1.0 + 0.3 * (2.0 * PI * y).sin(), 0.5 + 0.2 * (2.0 * PI * x).cos()];
        let p = PoincareMap::new(&periodic, 1.0, Some(&torus)).unwrap();
        assert!(p.check_equivariance(8).unwrap() < 1e-6);

        let shear = |_x: f64, y: f64, _t: f64| [y, 0.0];
        let p = PoincareMap::new(&shear, 1.0, Some(&torus)).unwrap();
        assert!(p.check_equivariance(8).unwrap() > 0.1);

        let zero = |_x: f64, _y: f64, _t: f64| [0.0, 0.0];
        let p = PoincareMap::new(&zero, 1.0, Some(&torus)).unwrap();
        assert_eq!(p.check_equivariance(8).unwrap(), 0.0);
    }

    #[test]
    fn newton_finds_sink() {
        let sink = |x: f64, y: f64, _t: f64| [-x, -y];
        let p = PoincareMap::new(&sink, 1.0, None).unwrap();
        let orbit = p.find_periodic(0, 1, 0, HPoint::new(0.3, 0.2)).unwrap();
        assert!(orbit.residual < NEWTON_TOL);
        assert!(orbit.point.x.abs() < 1e-9 && orbit.point.y.abs() < 1e-9);
        assert!(!orbit.jacobian_singular);
        assert!(matches!(p.find_periodic(1, 1, 0, HPoint::new(0.3, 0.2)), Err(PoincareError::NoDomain)));
        assert!(matches!(p.find_periodic(0, 0, 0, HPoint::new(0.3, 0.2)), Err(PoincareError::InvalidWinding)));
    }

    #[test]
    fn newton_flags_family_of_orbits() {
        let torus = standard_domain(1).unwrap();
        let right = |_x: f64, _y: f64, _t: f64| [1.0, 0.0];
        let p = PoincareMap::new(&right, 1.0, Some(&torus)).unwrap();
        let guess = HPoint::new(0.4, 0.6);
        let orbit = p.find_periodic(1, 1, 0, guess).unwrap();
        assert!(orbit.residual < NEWTON_TOL);
        assert!(orbit.jacobian_singular);
        assert_eq!(orbit.iterations, 0);
        assert!(orbit.point.point().dist(guess) < 1e-12);
        // Wrong winding: G ≡ (−1, 0) with a singular Jacobian.
        assert!(matches!(p.find_periodic(0, 1, 0, guess), Err(PoincareError::SingularJacobian { .. })));
    }

    #[test]
    fn monodromy_examples() {
        let sink = |x: f64, y: f64, _t: f64| [-x, -y];
        let p = PoincareMap::new(&sink, 1.0, None).unwrap();
        let orbit = p.find_periodic(0, 1, 0, HPoint::new(0.1, 0.1)).unwrap();
        let m = p.monodromy(&orbit).unwrap();
        let e = (-1.0f64).exp();
        assert_abs_diff_eq!(m.variational.a, e, epsilon = 1e-9);
        assert_abs_diff_eq!(m.variational.d, e, epsilon = 1e-9);
        assert!(m.max_diff < 1e-5 && !m.disagree);

        let rot = |x: f64, y: f64, _t: f64| [y, -x];
        let p = PoincareMap::new(&rot, FRAC_PI_2, None).unwrap();
        let orbit = p.find_periodic(0, 1, 0, HPoint::new(0.1, 0.1)).unwrap();
        let m = p.monodromy(&orbit).unwrap();
        // x(t) = x0 cos t + y0 sin t, y(t) = −x0 sin t + y0 cos t at t = π/2.
        let v = m.variational.matrix();
        for (got, want) in v.iter().flatten().zip([0.0, 1.0, -1.0, 0.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-9);
        }
        assert!(m.max_diff < 1e-5);
        assert_eq!(m.variational.classify(1e-6), OrbitClass::Elliptic);

        let zero = |_x: f64, _y: f64, _t: f64| [0.0, 0.0];
        let p = PoincareMap::new(&zero, 1.0, None).unwrap();
        let orbit = p.find_periodic(0, 1, 0, HPoint::new(0.1, 0.1)).unwrap();
        assert!(orbit.jacobian_singular);
        assert_eq!(p.monodromy(&orbit).unwrap().variational.matrix(), [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn torus_shear_monodromy_uses_deck_pushforward() {
        let torus = standard_domain(1).unwrap();
        // Constant-speed drift with x-dependent vertical shear; every point
        // of a horizontal line returns after one period.
        let f = |x: f64, _y: f64, _t: f64| [1.0, 0.1 * (2.0 * PI * x).sin()];
        let p = PoincareMap::new(&f, 1.0, Some(&torus)).unwrap();
        let orbit = p.find_periodic(1, 1, 0, HPoint::new(0.3, 0.5)).unwrap();
        assert!(orbit.jacobian_singular);
        let m = p.monodromy(&orbit).unwrap();
        assert!(m.max_diff < 1e-5, "{m:?}");
        assert_abs_diff_eq!(m.variational.det(), 1.0, epsilon = 1e-8);
    }

    #[test]
    fn multiplier_examples() {
        let (l1, l2) = multipliers([[-2.0, 0.0], [0.0, -0.5]]);
        assert_eq!((l1, l2), (c(-0.5), c(-2.0)));
        let (l1, l2) = multipliers([[0.0, 1.0], [-1.0, 0.0]]);
        assert_eq!((l1, l2), (Complex64::new(0.0, -1.0), Complex64::new(0.0, 1.0)));
        let (l1, l2) = multipliers([[2.0, 1.0], [0.0, 0.5]]);
        assert_eq!((l1, l2), (c(0.5), c(2.0)));
    }

    #[test]
    fn classify_examples() {
        let tol = 1e-9;
        assert_eq!(classify(c(-0.5), c(-2.0), tol), OrbitClass::InverselyUnstable);
        assert_eq!(classify(c(0.5), c(2.0), tol), OrbitClass::DirectlyUnstable);
        assert_eq!(classify(c(0.3), c(-0.7), tol), OrbitClass::Stable);
        assert_eq!(classify(Complex64::new(0.0, 1.0), Complex64::new(0.0, -1.0), tol), OrbitClass::Elliptic);
        assert_eq!(classify(c(1.0), c(0.5), tol), OrbitClass::Degenerate);
        assert_eq!(classify(c(-1.0), c(-3.0), tol), OrbitClass::Degenerate);
        assert_eq!(classify(Complex64::new(1.0, 1.0), Complex64::new(1.0, -1.0), tol), OrbitClass::Degenerate);
        let inv = Monodromy::from_matrix([[-2.0, 0.0], [0.0, -0.5]]);
        assert_eq!(inv.classify(tol), OrbitClass::InverselyUnstable);
        assert_eq!(inv.squared().classify(tol), OrbitClass::DirectlyUnstable);
    }

    proptest! {
        #[test]
        fn multipliers_match_trace_and_det(m in proptest::array::uniform4(-5.0f64..5.0)) {
            let mono = Monodromy::from_matrix([[m[0], m[1]], [m[2], m[3]]]);
            let (l1, l2) = (mono.lambda1, mono.lambda2);
            let scale = 1.0 + mono.trace().abs() + mono.det().abs();
            prop_assert!(((l1 + l2).re - mono.trace()).abs() < 1e-9 * scale);
            prop_assert!(((l1 * l2).re - mono.det()).abs() < 1e-9 * scale);
            prop_assert!((l1 + l2).im.abs() < 1e-9 * scale);
            prop_assert!(l1.norm() <= l2.norm() + 1e-12);
        }

        #[test]
        fn squared_inverse_instability_is_direct(l1 in -0.99f64..-0.01, l2 in -10.0f64..-1.01, th in 0.0f64..3.0) {
            // Similar to diag(l1, l2) by a rotation.
            let (c_, s_) = (th.cos(), th.sin());
            let r = [[c_, -s_], [s_, c_]];
            let rt = [[c_, s_], [-s_, c_]];
            let d = [[l1, 0.0], [0.0, l2]];
            let m = crate::fieldspec::mat_mul(crate::fieldspec::mat_mul(r, d), rt);
            let mono = Monodromy::from_matrix(m);
            prop_assert_eq!(mono.classify(1e-9), OrbitClass::InverselyUnstable);
            prop_assert_eq!(mono.squared().classify(1e-9), OrbitClass::DirectlyUnstable);
        }
    }
}
