//! CSV tables and the SVG portrait.

use std::fmt::Write as _;

use genusflow_core::geometry::Edge;
use genusflow_core::topology::AttractorEstimate;
use genusflow_core::{HPoint, RectDomain, Trajectory};

use crate::error::CliError;
use crate::report::fmt_f64;

pub fn word_text(word: &[i32]) -> String {
    word.iter().map(i32::to_string).collect::<Vec<_>>().join(" ")
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>, CliError> {
    w.into_inner().map_err(|e| CliError::analysis(format!("csv: {e}")))
}

fn row<const N: usize>(w: &mut csv::Writer<Vec<u8>>, rec: [String; N]) -> Result<(), CliError> {
    w.write_record(rec).map_err(|e| CliError::analysis(format!("csv: {e}")))
}

/// Columns `t,x,y,word`.
pub fn trajectory_csv(tr: &Trajectory) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    row(&mut w, ["t", "x", "y", "word"].map(String::from))?;
    for (i, s) in tr.samples.iter().enumerate() {
        row(&mut w, [fmt_f64(s.t), fmt_f64(s.x), fmt_f64(s.y), word_text(tr.word_at(i))])?;
    }
    finish(w)
}

/// One Poincaré sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionPoint {
    pub seed: usize,
    pub iterate: usize,
    pub point: HPoint,
    pub word: Vec<i32>,
}

/// Columns `seed,n,x,y,word`.
pub fn poincare_csv(points: &[SectionPoint]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    row(&mut w, ["seed", "n", "x", "y", "word"].map(String::from))?;
    for p in points {
        row(
            &mut w,
            [p.seed.to_string(), p.iterate.to_string(), fmt_f64(p.point.x), fmt_f64(p.point.y), word_text(&p.word)],
        )?;
    }
    finish(w)
}

/// Columns `ix,iy,component` for every occupied cell.
pub fn attractor_csv(est: &AttractorEstimate) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    row(&mut w, ["ix", "iy", "component"].map(String::from))?;
    let r = &est.region;
    for iy in 0..r.ny() {
        for ix in 0..r.nx() {
            if r.get(ix, iy) {
                row(&mut w, [ix.to_string(), iy.to_string(), est.label_at(ix, iy).to_string()])?;
            }
        }
    }
    finish(w)
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];
const WIDTH: f64 = 800.0;
const PAD: f64 = 30.0;

/// Portrait of the rectangle with optional attractor cells, trajectory
/// pieces and marked points.
pub struct Portrait<'a> {
    pub bounds: [f64; 4],
    pub domain: Option<&'a RectDomain>,
    pub attractor: Option<&'a AttractorEstimate>,
    pub trajectory: Option<&'a Trajectory>,
    pub points: Vec<HPoint>,
}

impl Portrait<'_> {
    pub fn new(bounds: [f64; 4], domain: Option<&RectDomain>) -> Portrait<'_> {
        Portrait { bounds, domain, attractor: None, trajectory: None, points: Vec::new() }
    }

    pub fn render(&self) -> Vec<u8> {
        let [x0, x1, y0, y1] = self.bounds;
        let scale = WIDTH / (x1 - x0);
        let height = (y1 - y0) * scale;
        let px = |p: HPoint| (PAD + (p.x - x0) * scale, PAD + (y1 - p.y) * scale);
        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#,
            w = WIDTH + 2.0 * PAD,
            h = height + 2.0 * PAD
        );
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

        if let Some(est) = self.attractor {
            let r = &est.region;
            let (dx, dy) = r.cell_size();
            let _ = writeln!(s, "<g stroke=\"none\">");
            for iy in 0..r.ny() {
                for ix in 0..r.nx() {
                    let id = est.label_at(ix, iy);
                    if id == 0 {
                        continue;
                    }
                    let c = r.cell_center(ix, iy);
                    let (cx, cy) = px(HPoint::new(c.x - 0.5 * dx, c.y + 0.5 * dy));
                    let _ = writeln!(
                        s,
                        r#"<rect x="{cx:.2}" y="{cy:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                        dx * scale,
                        dy * scale,
                        PALETTE[(id as usize - 1) % PALETTE.len()]
                    );
                }
            }
            let _ = writeln!(s, "</g>");
        }

        let (ax, ay) = px(HPoint::new(x0, y1));
        let _ = writeln!(
            s,
            r#"<rect x="{ax:.2}" y="{ay:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black" stroke-width="1.5"/>"#,
            (x1 - x0) * scale,
            height
        );
        if let Some(d) = self.domain {
            for seg in d.segments() {
                let (sx, sy) = px(seg.start);
                let (ex, ey) = px(seg.end);
                let (mx, my) = px(seg.point_at(0.5));
                // Ticks at segment ends, labels outside the rectangle.
                let (nx, ny) = match seg.edge {
                    Edge::Left => (-1.0, 0.0),
                    Edge::Right => (1.0, 0.0),
                    Edge::Bottom => (0.0, 1.0),
                    Edge::Top => (0.0, -1.0),
                };
                for (tx, ty) in [(sx, sy), (ex, ey)] {
                    let _ = writeln!(
                        s,
                        r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="black"/>"#,
                        tx - 5.0 * nx,
                        ty - 5.0 * ny,
                        tx + 5.0 * nx,
                        ty + 5.0 * ny
                    );
                }
                let _ = writeln!(
                    s,
                    r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle" dominant-baseline="middle">{}</text>"#,
                    mx + 14.0 * nx,
                    my + 14.0 * ny,
                    seg.label
                );
            }
        }

        if let Some(tr) = self.trajectory {
            let mut piece: Vec<(f64, f64)> = Vec::new();
            let flush = |piece: &mut Vec<(f64, f64)>, s: &mut String| {
                if piece.len() > 1 {
                    let pts: Vec<String> = piece.iter().map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
                    let _ = writeln!(
                        s,
                        r##"<polyline points="{}" fill="none" stroke="#333333" stroke-width="1"/>"##,
                        pts.join(" ")
                    );
                }
                piece.clear();
            };
            for (i, st) in tr.samples.iter().enumerate() {
                if i > 0 && tr.sample_crossings[i] != tr.sample_crossings[i - 1] {
                    flush(&mut piece, &mut s);
                }
                piece.push(px(st.point()));
            }
            flush(&mut piece, &mut s);
        }

        for p in &self.points {
            let (cx, cy) = px(*p);
            let _ = writeln!(s, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="1.5" fill="black"/>"#);
        }
        s.push_str("</svg>\n");
        s.into_bytes()
    }
}
