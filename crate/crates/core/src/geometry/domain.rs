use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::{GeometryError, HPoint};

const MAX_REDUCTIONS: usize = 100;

/// Orientation-preserving similarity z ↦ μz + β of the plane.
///
/// Every boundary transition of a [`RectDomain`] is one of these, so the
/// tangent pushforward is multiplication by the constant μ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Similarity {
    mu: Complex64,
    shift: Complex64,
}

impl Similarity {
    pub const IDENTITY: Similarity = Similarity { mu: Complex64::new(1.0, 0.0), shift: Complex64::new(0.0, 0.0) };

    pub fn new(mu: Complex64, shift: Complex64) -> Self {
        Self { mu, shift }
    }

    pub fn mu(&self) -> Complex64 {
        self.mu
    }

    pub fn shift(&self) -> Complex64 {
        self.shift
    }

    pub fn apply(&self, p: HPoint) -> HPoint {
        let w = self.mu * Complex64::new(p.x, p.y) + self.shift;
        HPoint::new(w.re, w.im)
    }

    /// Tangent pushforward.
    pub fn push(&self, v: [f64; 2]) -> [f64; 2] {
        let w = self.mu * Complex64::new(v[0], v[1]);
        [w.re, w.im]
    }

    /// Inverse tangent pushforward.
    pub fn pull(&self, v: [f64; 2]) -> [f64; 2] {
        let w = Complex64::new(v[0], v[1]) / self.mu;
        [w.re, w.im]
    }

    /// Real 2×2 matrix of the linear part.
    pub fn linear(&self) -> [[f64; 2]; 2] {
        [[self.mu.re, -self.mu.im], [self.mu.im, self.mu.re]]
    }

    /// `next ∘ self`.
    pub fn then(&self, next: &Similarity) -> Similarity {
        Similarity { mu: next.mu * self.mu, shift: next.mu * self.shift + next.shift }
    }

    pub fn inverse(&self) -> Similarity {
        let inv = 1.0 / self.mu;
        Similarity { mu: inv, shift: -self.shift * inv }
    }

    pub fn powi(&self, n: i64) -> Similarity {
        let base = if n < 0 { self.inverse() } else { *self };
        (0..n.unsigned_abs()).fold(Similarity::IDENTITY, |acc, _| acc.then(&base))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Edge {
    Left,
    Bottom,
    Right,
    Top,
}

/// Boundary piece D_i, oriented counter-clockwise around the rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub label: usize,
    pub start: HPoint,
    pub end: HPoint,
    pub edge: Edge,
}

impl Segment {
    pub fn length(&self) -> f64 {
        self.start.dist(self.end)
    }

    pub fn point_at(&self, s: f64) -> HPoint {
        HPoint::new(self.start.x + s * (self.end.x - self.start.x), self.start.y + s * (self.end.y - self.start.y))
    }

    fn dist(&self, p: HPoint) -> f64 {
        let (lo_x, hi_x) = minmax(self.start.x, self.end.x);
        let (lo_y, hi_y) = minmax(self.start.y, self.end.y);
        p.dist(HPoint::new(p.x.clamp(lo_x, hi_x), p.y.clamp(lo_y, hi_y)))
    }
}

fn minmax(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// The modified fundamental region: a rectangle whose 4p boundary segments
/// are glued in pairs to form a closed genus-p surface.
#[derive(Debug, Clone, PartialEq)]
pub struct RectDomain {
    genus: usize,
    x_range: (f64, f64),
    height_range: (f64, f64),
    segments: Vec<Segment>,
    pairing: Vec<usize>,
    transitions: Vec<Similarity>,
    cusps: Vec<HPoint>,
}

/// Builds the unit-square torus for `p = 1` and the width-π rectangle with
/// the word a₁b₁a₁⁻¹b₁⁻¹…a_pb_pa_p⁻¹b_p⁻¹ for `p ≥ 2`.
///
/// For `p ≥ 2` the top and bottom edges are cut into 2p−1 pieces of length
/// s = π/(2p−1) and the height is s, so every segment has the same length
/// and every transition is a rotation by a multiple of 90° plus a shift.
/// Labels start at the second bottom piece; for `p = 2` this makes the pairs
/// B1↔T3 and B3↔T1 vertical translations.
pub fn standard_domain(p: usize) -> Result<RectDomain, GeometryError> {
    if p == 0 {
        return Err(GeometryError::InvalidGenus);
    }
    let n = 4 * p;
    let (x_range, height_range, ring, offset) = if p == 1 {
        let c = |x: f64, y: f64| HPoint::new(x, y);
        let ring = vec![
            (c(0.0, 1.0), c(0.0, 0.0), Edge::Left),
            (c(0.0, 0.0), c(1.0, 0.0), Edge::Bottom),
            (c(1.0, 0.0), c(1.0, 1.0), Edge::Right),
            (c(1.0, 1.0), c(0.0, 1.0), Edge::Top),
        ];
        ((0.0, 1.0), (0.0, 1.0), ring, 0)
    } else {
        let m = 2 * p - 1;
        let s = PI / m as f64;
        let (y0, y1) = (1.0, 1.0 + s);
        let xs: Vec<f64> = (0..=m).map(|k| if k == m { PI } else { k as f64 * s }).collect();
        let mut ring = Vec::with_capacity(n);
        ring.push((HPoint::new(0.0, y1), HPoint::new(0.0, y0), Edge::Left));
        for k in 0..m {
            ring.push((HPoint::new(xs[k], y0), HPoint::new(xs[k + 1], y0), Edge::Bottom));
        }
        ring.push((HPoint::new(PI, y0), HPoint::new(PI, y1), Edge::Right));
        for k in (0..m).rev() {
            ring.push((HPoint::new(xs[k + 1], y1), HPoint::new(xs[k], y1), Edge::Top));
        }
        ((0.0, PI), (y0, y1), ring, 2)
    };

    let segments: Vec<Segment> = (1..=n)
        .map(|label| {
            let (start, end, edge) = ring[(label - 1 + offset) % n];
            Segment { label, start, end, edge }
        })
        .collect();
    let pairing: Vec<usize> = (1..=n)
        .map(|label| match (label - 1) % 4 {
            0 | 1 => label + 2,
            _ => label - 2,
        })
        .collect();
    let transitions = segments
        .iter()
        .map(|seg| {
            let partner = &segments[pairing[seg.label - 1] - 1];
            // μ = −d_σ/d_i from exact unit directions; both segments have equal length.
            let mu = -unit_direction(partner.edge) / unit_direction(seg.edge);
            let s_i = Complex64::new(seg.start.x, seg.start.y);
            let e_sigma = Complex64::new(partner.end.x, partner.end.y);
            Similarity::new(mu, e_sigma - mu * s_i)
        })
        .collect();
    let cusps = segments.iter().map(|s| s.start).collect();
    Ok(RectDomain { genus: p, x_range, height_range, segments, pairing, transitions, cusps })
}

fn unit_direction(edge: Edge) -> Complex64 {
    match edge {
        Edge::Left => Complex64::new(0.0, -1.0),
        Edge::Bottom => Complex64::new(1.0, 0.0),
        Edge::Right => Complex64::new(0.0, 1.0),
        Edge::Top => Complex64::new(-1.0, 0.0),
    }
}

impl RectDomain {
    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn width(&self) -> f64 {
        self.x_range.1 - self.x_range.0
    }

    pub fn x_range(&self) -> (f64, f64) {
        self.x_range
    }

    pub fn height_range(&self) -> (f64, f64) {
        self.height_range
    }

    /// `[x0, x1, y0, y1]`.
    pub fn bounds(&self) -> [f64; 4] {
        [self.x_range.0, self.x_range.1, self.height_range.0, self.height_range.1]
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Segment with 1-based `label`.
    pub fn segment(&self, label: usize) -> &Segment {
        &self.segments[label - 1]
    }

    pub fn partner(&self, label: usize) -> usize {
        self.pairing[label - 1]
    }

    /// Transition carrying D_label onto its partner.
    pub fn transition(&self, label: usize) -> &Similarity {
        &self.transitions[label - 1]
    }

    /// Marker points m_i (start point of each segment, in label order).
    pub fn cusps(&self) -> &[HPoint] {
        &self.cusps
    }

    /// For `p ≥ 2` all corners glue to a single cone point of angle
    /// (4p−2)π, a forced equilibrium. The torus corners are regular points.
    pub fn has_cone_point(&self) -> bool {
        self.genus >= 2
    }

    pub fn cone_angle(&self) -> f64 {
        (4 * self.genus - 2) as f64 * PI
    }

    pub fn min_segment_length(&self) -> f64 {
        self.segments.iter().map(Segment::length).fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, p: HPoint) -> bool {
        p.x >= self.x_range.0 && p.x <= self.x_range.1 && p.y >= self.height_range.0 && p.y <= self.height_range.1
    }

    pub fn clamp(&self, p: HPoint) -> HPoint {
        HPoint::new(p.x.clamp(self.x_range.0, self.x_range.1), p.y.clamp(self.height_range.0, self.height_range.1))
    }

    /// Label of the segment an outside point has crossed, chosen on the edge
    /// with the largest violation. `None` for points inside.
    pub fn exit_segment(&self, p: HPoint) -> Option<usize> {
        let violations = [
            (Edge::Left, self.x_range.0 - p.x),
            (Edge::Bottom, self.height_range.0 - p.y),
            (Edge::Right, p.x - self.x_range.1),
            (Edge::Top, p.y - self.height_range.1),
        ];
        let (edge, v) =
            violations
                .iter()
                .copied()
                .fold((Edge::Left, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
        if !(v > 0.0) {
            return None;
        }
        let along = |q: HPoint| match edge {
            Edge::Left | Edge::Right => q.y,
            Edge::Bottom | Edge::Top => q.x,
        };
        let c = along(p);
        self.segments
            .iter()
            .filter(|s| s.edge == edge)
            .map(|s| {
                let (lo, hi) = minmax(along(s.start), along(s.end));
                let gap = if c < lo {
                    lo - c
                } else if c > hi {
                    c - hi
                } else {
                    0.0
                };
                (gap, s.label)
            })
            .fold(None, |best: Option<(f64, usize)>, c| match best {
                Some(b) if b.0 <= c.0 => Some(b),
                _ => Some(c),
            })
            .map(|(_, label)| label)
    }

    /// Maps a point lying at most a few transitions outside back into the
    /// closed rectangle. Returns the point, the applied letters and the
    /// composite similarity (original frame → reduced frame).
    pub fn reduce(&self, p: HPoint) -> Result<(HPoint, Vec<i32>, Similarity), GeometryError> {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(GeometryError::NonFinite { x: p.x, y: p.y });
        }
        let mut q = p;
        let mut word = Vec::new();
        let mut map = Similarity::IDENTITY;
        for _ in 0..MAX_REDUCTIONS {
            match self.exit_segment(q) {
                None => return Ok((self.clamp(q), word, map)),
                Some(label) => {
                    let t = self.transition(label);
                    q = t.apply(q);
                    map = map.then(t);
                    word.push(label as i32);
                }
            }
        }
        Err(GeometryError::NonTermination { x: p.x, y: p.y, steps: MAX_REDUCTIONS })
    }

    /// Composite similarity of a word: `+k` applies transition k, `−k` its inverse.
    pub fn word_map(&self, word: &[i32]) -> Similarity {
        word.iter().fold(Similarity::IDENTITY, |acc, &letter| {
            let t = self.transition(letter.unsigned_abs() as usize);
            if letter > 0 {
                acc.then(t)
            } else {
                acc.then(&t.inverse())
            }
        })
    }

    /// Number of deck generators (one per segment pair).
    pub fn generator_count(&self) -> usize {
        2 * self.genus
    }

    /// Generator index of a segment and the winding contributed by exiting
    /// through it: +1 through the higher label of the pair, −1 through the lower.
    pub fn generator_of(&self, label: usize) -> (usize, i64) {
        let partner = self.partner(label);
        let lower = label.min(partner);
        let g = (1..lower).filter(|&l| l < self.partner(l)).count();
        (g, if label > partner { 1 } else { -1 })
    }

    /// Deck generator Γ_g: the transition of the lower-labelled segment of pair g.
    /// A trajectory that leaves once through the higher segment has lift Γ_g(q).
    pub fn deck_generator(&self, g: usize) -> Similarity {
        let lower =
            (1..=self.segments.len()).filter(|&l| l < self.partner(l)).nth(g).expect("generator index in range");
        *self.transition(lower)
    }

    /// Abelianized winding of a word, one entry per generator.
    pub fn winding(&self, word: &[i32]) -> Vec<i64> {
        let mut w = vec![0; self.generator_count()];
        for &letter in word {
            let (g, s) = self.generator_of(letter.unsigned_abs() as usize);
            w[g] += if letter > 0 { s } else { -s };
        }
        w
    }

    /// All rectangle points identified with `p` on the surface (including `p`),
    /// found by applying transitions of segments within `tol`.
    pub fn identified_points(&self, p: HPoint, tol: f64) -> Vec<HPoint> {
        let mut out = vec![p];
        let mut i = 0;
        while i < out.len() && out.len() < 4 * self.segments.len() {
            let q = out[i];
            for seg in &self.segments {
                if seg.dist(q) <= tol {
                    let r = self.clamp(self.transition(seg.label).apply(q));
                    if out.iter().all(|o| o.dist(r) > tol) {
                        out.push(r);
                    }
                }
            }
            i += 1;
        }
        out
    }

    /// Distance between two rectangle points measured through identifications
    /// of points on the boundary (not a geodesic distance).
    pub fn identified_dist(&self, a: HPoint, b: HPoint, tol: f64) -> f64 {
        self.identified_points(a, tol).into_iter().map(|q| q.dist(b)).fold(f64::INFINITY, f64::min)
    }

    /// Corner sectors around the vertices: `(vertex, start angle, end angle)`,
    /// measured counter-clockwise and covering the rectangle's interior.
    pub fn vertex_sectors(&self) -> Vec<(HPoint, f64, f64)> {
        let [x0, x1, y0, y1] = self.bounds();
        let mut out = Vec::new();
        let mut seen: Vec<HPoint> = Vec::new();
        for seg in &self.segments {
            let v = seg.start;
            if seen.iter().any(|s| s.dist(v) < 1e-12) {
                continue;
            }
            seen.push(v);
            let on_left = v.x == x0;
            let on_right = v.x == x1;
            let on_bottom = v.y == y0;
            let on_top = v.y == y1;
            let (a, b) = match (on_left, on_right, on_bottom, on_top) {
                (true, _, true, _) => (0.0, FRAC_PI_2),
                (_, true, true, _) => (FRAC_PI_2, PI),
                (_, true, _, true) => (PI, 1.5 * PI),
                (true, _, _, true) => (1.5 * PI, 2.0 * PI),
                (_, _, true, _) => (0.0, PI),
                (_, _, _, true) => (PI, 2.0 * PI),
                (true, _, _, _) => (1.5 * PI, 2.5 * PI),
                _ => (FRAC_PI_2, 1.5 * PI),
            };
            out.push((v, a, b));
        }
        out
    }
}

/// Free-function form of [`RectDomain::reduce`] returning the point and word.
pub fn reduce_to_domain(q: HPoint, dom: &RectDomain) -> Result<(HPoint, Vec<i32>), GeometryError> {
    dom.reduce(q).map(|(p, word, _)| (p, word))
}
