use std::f64::consts::PI;

use num_complex::Complex64;

use super::{GeometryError, HPoint, TangentVector};

const POLE_EPS: f64 = 1e-14;

/// Real Möbius transformation z ↦ (az+b)/(cz+d), stored with det = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoebiusMap {
    a: f64,
    b: f64,
    c: f64,
    d: f64,
}

impl MoebiusMap {
    pub const IDENTITY: MoebiusMap = MoebiusMap { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };

    /// Builds a normalized map. The determinant must be positive.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self, GeometryError> {
        let det = a * d - b * c;
        if !(det > 0.0) || !det.is_finite() {
            return Err(GeometryError::Degenerate { det });
        }
        let s = det.sqrt();
        let flip = a < 0.0 || (a == 0.0 && c < 0.0);
        let s = if flip { -s } else { s };
        Ok(Self { a: a / s, b: b / s, c: c / s, d: d / s })
    }

    pub fn coefficients(&self) -> [f64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    fn denominator(&self, z: HPoint) -> Result<Complex64, GeometryError> {
        let den = Complex64::new(self.c * z.x + self.d, self.c * z.y);
        let modulus = den.norm();
        if modulus < POLE_EPS {
            return Err(GeometryError::Pole { x: z.x, y: z.y, modulus });
        }
        Ok(den)
    }

    pub fn apply(&self, z: HPoint) -> Result<HPoint, GeometryError> {
        let den = self.denominator(z)?;
        let zc = Complex64::new(z.x, z.y);
        let w = (self.a * zc + self.b) / den;
        Ok(HPoint::new(w.re, w.im))
    }

    /// Image of `v` under the derivative at `v.base`: multiplication by 1/(cz+d)².
    pub fn pushforward(&self, v: TangentVector) -> Result<TangentVector, GeometryError> {
        let den = self.denominator(v.base)?;
        let base = self.apply(v.base)?;
        let w = Complex64::new(v.vx, v.vy) / (den * den);
        Ok(TangentVector::new(base, w.re, w.im))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MoebiusMap) -> MoebiusMap {
        let a = self.a * other.a + self.b * other.c;
        let b = self.a * other.b + self.b * other.d;
        let c = self.c * other.a + self.d * other.c;
        let d = self.c * other.b + self.d * other.d;
        Self::new(a, b, c, d).expect("product of det-1 maps has positive determinant")
    }

    pub fn inverse(&self) -> MoebiusMap {
        Self::new(self.d, -self.b, -self.c, self.a).expect("adjugate of a det-1 map has det 1")
    }
}

/// Flattens the angular coordinate of the polar chart onto `[0, π]`.
pub fn chart_to_rectangle(r: f64, theta: f64, alpha: f64) -> Result<(f64, f64), GeometryError> {
    if !(alpha > 0.0 && alpha < PI / 2.0) {
        return Err(GeometryError::InvalidAlpha { alpha });
    }
    if !(r > 0.0) {
        return Err(GeometryError::InvalidRadius { r });
    }
    let upper = PI - alpha;
    if !(theta >= alpha && theta <= upper) {
        return Err(GeometryError::ChartDomain { theta, alpha });
    }
    // Same operation order in numerator and denominator so θ = π − α lands on π exactly.
    let x = PI * ((theta - alpha) / (upper - alpha));
    Ok((x, r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn m(a: f64, b: f64, c: f64, d: f64) -> MoebiusMap {
        MoebiusMap::new(a, b, c, d).unwrap()
    }

    #[test]
    fn apply_examples() {
        let z = m(1.0, 0.0, 0.0, 1.0).apply(HPoint::new(0.3, 2.0)).unwrap();
        assert_eq!(z, HPoint::new(0.3, 2.0));
        let z = m(1.0, 1.0, 0.0, 1.0).apply(HPoint::new(0.0, 1.0)).unwrap();
        assert_eq!(z, HPoint::new(1.0, 1.0));
        // −1/(2i) = i/2
        let z = m(0.0, -1.0, 1.0, 0.0).apply(HPoint::new(0.0, 2.0)).unwrap();
        assert_abs_diff_eq!(z.x, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z.y, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn pole_is_reported() {
        let t = m(0.0, -1.0, 1.0, 0.0);
        assert!(matches!(t.apply(HPoint::new(0.0, 0.0)), Err(GeometryError::Pole { .. })));
    }

    #[test]
    fn normalization_sign_and_det() {
        let t = m(-2.0, -4.0, 0.0, -0.5);
        let [a, _, _, _] = t.coefficients();
        assert!(a > 0.0);
        assert_abs_diff_eq!(t.det(), 1.0, epsilon = 1e-12);
        let t = m(0.0, 2.0, -0.5, 3.0);
        let [_, _, c, _] = t.coefficients();
        assert!(c > 0.0);
        assert!(MoebiusMap::new(1.0, 1.0, 1.0, 1.0).is_err());
        assert!(MoebiusMap::new(0.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn pushforward_examples() {
        let v = TangentVector::new(HPoint::new(0.4, 1.3), 2.0, 3.0);
        let w = MoebiusMap::IDENTITY.pushforward(v).unwrap();
        assert_eq!((w.vx, w.vy), (2.0, 3.0));
        let w = m(1.0, 1.0, 0.0, 1.0).pushforward(v).unwrap();
        assert_eq!((w.vx, w.vy), (2.0, 3.0));
        assert_eq!(w.base, HPoint::new(1.4, 1.3));
    }

    #[test]
    fn pushforward_of_inversion_at_i_matches_difference_quotient() {
        // d/dz(−1/z) = 1/z², which is −1 at z = i, so (1,0) ↦ (−1,0).
        let t = m(0.0, -1.0, 1.0, 0.0);
        let z = HPoint::new(0.0, 1.0);
        let w = t.pushforward(TangentVector::new(z, 1.0, 0.0)).unwrap();
        let h = 1e-6;
        let fwd = t.apply(HPoint::new(z.x + h, z.y)).unwrap();
        let bwd = t.apply(HPoint::new(z.x - h, z.y)).unwrap();
        let fd = ((fwd.x - bwd.x) / (2.0 * h), (fwd.y - bwd.y) / (2.0 * h));
        assert_abs_diff_eq!(w.vx, fd.0, epsilon = 1e-8);
        assert_abs_diff_eq!(w.vy, fd.1, epsilon = 1e-8);
        assert_abs_diff_eq!(w.vx, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.vy, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn compose_and_inverse() {
        let t = m(2.0, 1.0, 1.0, 1.5);
        let id = t.compose(&t.inverse());
        for (u, v) in id.coefficients().iter().zip(MoebiusMap::IDENTITY.coefficients()) {
            assert_abs_diff_eq!(*u, v, epsilon = 1e-12);
        }
        assert_eq!(m(1.0, 1.0, 0.0, 1.0).inverse(), m(1.0, -1.0, 0.0, 1.0));
        assert_eq!(m(1.0, 1.0, 0.0, 1.0).compose(&m(1.0, 2.0, 0.0, 1.0)), m(1.0, 3.0, 0.0, 1.0));
    }

    #[test]
    fn chart_examples() {
        let a = PI / 4.0;
        assert_eq!(chart_to_rectangle(1.5, a, a).unwrap(), (0.0, 1.5));
        assert_eq!(chart_to_rectangle(2.0, PI - a, a).unwrap(), (PI, 2.0));
        let (x, y) = chart_to_rectangle(1.0, PI / 2.0, 1e-12).unwrap();
        assert_abs_diff_eq!(x, PI / 2.0, epsilon = 1e-9);
        assert_eq!(y, 1.0);
        assert!(matches!(chart_to_rectangle(1.0, 0.1, a), Err(GeometryError::ChartDomain { .. })));
        assert!(matches!(chart_to_rectangle(1.0, 3.0, a), Err(GeometryError::ChartDomain { .. })));
        assert!(chart_to_rectangle(1.0, 1.0, 0.0).is_err());
    }
}
