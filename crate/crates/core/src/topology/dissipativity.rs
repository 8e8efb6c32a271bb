use crate::fieldspec::VectorField;
use crate::geometry::HPoint;

/// Polyline bounding a trapping region. The inward normal is the left
/// normal of the direction of travel. A curve that closes up only through
/// the boundary identifications (e.g. a horizontal line across the torus)
/// has `closed = false`, so no edge joins its last point to its first.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    pub points: Vec<HPoint>,
    pub closed: bool,
}

impl BoundaryCurve {
    pub fn new(points: Vec<HPoint>, closed: bool) -> Self {
        Self { points, closed }
    }

    fn edges(&self) -> Vec<(HPoint, HPoint)> {
        let mut e: Vec<_> = self.points.windows(2).map(|w| (w[0], w[1])).collect();
        if self.closed && self.points.len() > 2 {
            e.push((self.points[self.points.len() - 1], self.points[0]));
        }
        e
    }

    pub fn length(&self) -> f64 {
        self.edges().iter().map(|(a, b)| a.dist(*b)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DissipativityReport {
    pub pass: bool,
    /// Minimum of field · inward unit normal over all samples.
    pub margin: f64,
    pub worst_point: HPoint,
    pub worst_time: f64,
    pub samples: usize,
}

/// Samples `n_samples` points at equal arc length over all curves, at each
/// of `times`, and checks that the field points strictly inward.
pub fn dissipativity_check<F: VectorField + ?Sized>(
    field: &F,
    curves: &[BoundaryCurve],
    n_samples: usize,
    times: &[f64],
) -> DissipativityReport {
    let total: f64 = curves.iter().map(BoundaryCurve::length).sum();
    let times = if times.is_empty() { &[0.0][..] } else { times };
    let mut report = DissipativityReport {
        pass: false,
        margin: f64::INFINITY,
        worst_point: HPoint::new(f64::NAN, f64::NAN),
        worst_time: 0.0,
        samples: 0,
    };
    if !(total > 0.0) || n_samples == 0 {
        return report;
    }
    let edges: Vec<(HPoint, HPoint)> = curves.iter().flat_map(BoundaryCurve::edges).collect();
    let mut edge = 0;
    let mut before = 0.0;
    for k in 0..n_samples {
        let s = (k as f64 + 0.5) / n_samples as f64 * total;
        while edge + 1 < edges.len() && before + edges[edge].0.dist(edges[edge].1) < s {
            before += edges[edge].0.dist(edges[edge].1);
            edge += 1;
        }
        let (a, b) = edges[edge];
        let len = a.dist(b);
        if len == 0.0 {
            continue;
        }
        let u = ((s - before) / len).clamp(0.0, 1.0);
        let p = HPoint::new(a.x + u * (b.x - a.x), a.y + u * (b.y - a.y));
        let normal = [-(b.y - a.y) / len, (b.x - a.x) / len];
        for &t in times {
            let v = field.eval(p.x, p.y, t);
            let dot = v[0] * normal[0] + v[1] * normal[1];
            report.samples += 1;
            if !(dot >= report.margin) {
                report.margin = dot;
                report.worst_point = p;
                report.worst_time = t;
            }
        }
    }
    report.pass = report.margin > 0.0;
    report
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;

    fn unit_circle_ccw(n: usize) -> BoundaryCurve {
        let pts = (0..n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                HPoint::new(a.cos(), a.sin())
            })
            .collect();
        BoundaryCurve::new(pts, true)
    }

    #[test]
    fn circle_examples() {
        let c = unit_circle_ccw(720);
        let sink = |x: f64, y: f64, _t: f64| [-x, -y];
        let r = dissipativity_check(&sink, std::slice::from_ref(&c), 720, &[0.0]);
        assert!(r.pass);
        assert!((r.margin - 1.0).abs() < 1e-4, "{}", r.margin);
        let source = |x: f64, y: f64, _t: f64| [x, y];
        assert!(!dissipativity_check(&source, &[c], 720, &[0.0]).pass);
    }

    #[test]
    fn open_curves_skip_the_closing_edge() {
        let line = BoundaryCurve::new(vec![HPoint::new(0.0, 0.1), HPoint::new(1.0, 0.1)], false);
        assert_eq!(line.length(), 1.0);
        let up = |_x: f64, _y: f64, _t: f64| [0.3, 0.5];
        let r = dissipativity_check(&up, &[line], 10, &[0.0, 0.5]);
        assert!(r.pass && r.samples == 20);
        assert!((r.margin - 0.5).abs() < 1e-15);
    }
}
