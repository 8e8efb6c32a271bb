use rayon::prelude::*;

use super::components::{label, ComponentInfo};
use super::{check_bounds, TopologyError};
use crate::dynamics::flow;
use crate::fieldspec::VectorField;
use crate::geometry::{HPoint, RectDomain, Similarity};
use crate::poincare::PoincareMap;

/// Occupancy bitmap over a rectangle, row-major with `iy * nx + ix`.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    nx: usize,
    ny: usize,
    bounds: [f64; 4],
    occ: Vec<bool>,
}

impl Region {
    pub fn empty(nx: usize, ny: usize, bounds: [f64; 4]) -> Result<Self, TopologyError> {
        if nx < 8 || ny < 8 {
            return Err(TopologyError::GridTooSmall { nx, ny });
        }
        check_bounds(bounds)?;
        Ok(Self { nx, ny, bounds, occ: vec![false; nx * ny] })
    }

    pub fn full(nx: usize, ny: usize, bounds: [f64; 4]) -> Result<Self, TopologyError> {
        let mut r = Self::empty(nx, ny, bounds)?;
        r.occ.fill(true);
        Ok(r)
    }

    /// Cells whose centre satisfies `pred`.
    pub fn from_fn(
        nx: usize,
        ny: usize,
        bounds: [f64; 4],
        pred: impl Fn(HPoint) -> bool,
    ) -> Result<Self, TopologyError> {
        let mut r = Self::empty(nx, ny, bounds)?;
        for iy in 0..ny {
            for ix in 0..nx {
                r.occ[iy * nx + ix] = pred(r.cell_center(ix, iy));
            }
        }
        Ok(r)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn bounds(&self) -> [f64; 4] {
        self.bounds
    }

    pub fn cells(&self) -> &[bool] {
        &self.occ
    }

    pub fn get(&self, ix: usize, iy: usize) -> bool {
        self.occ[iy * self.nx + ix]
    }

    pub fn set(&mut self, ix: usize, iy: usize, v: bool) {
        self.occ[iy * self.nx + ix] = v;
    }

    pub fn count(&self) -> usize {
        self.occ.iter().filter(|&&c| c).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.occ.iter().any(|&c| c)
    }

    pub fn cell_size(&self) -> (f64, f64) {
        ((self.bounds[1] - self.bounds[0]) / self.nx as f64, (self.bounds[3] - self.bounds[2]) / self.ny as f64)
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> HPoint {
        let (dx, dy) = self.cell_size();
        HPoint::new(self.bounds[0] + (ix as f64 + 0.5) * dx, self.bounds[2] + (iy as f64 + 0.5) * dy)
    }

    /// Cell containing `p`; the upper edges belong to the last row/column.
    pub fn cell_of(&self, p: HPoint) -> Option<(usize, usize)> {
        let (dx, dy) = self.cell_size();
        let u = (p.x - self.bounds[0]) / dx;
        let v = (p.y - self.bounds[2]) / dy;
        if !(u >= 0.0 && v >= 0.0 && u <= self.nx as f64 && v <= self.ny as f64) {
            return None;
        }
        Some(((u as usize).min(self.nx - 1), (v as usize).min(self.ny - 1)))
    }

    pub fn occupied(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.occ.iter().enumerate().filter(|(_, &c)| c).map(move |(i, _)| (i % self.nx, i / self.nx))
    }

    pub fn is_subset_of(&self, other: &Region) -> bool {
        self.occ.len() == other.occ.len() && self.occ.iter().zip(&other.occ).all(|(&a, &b)| !a || b)
    }

    fn intersect(&mut self, other: &[bool]) {
        for (a, &b) in self.occ.iter_mut().zip(other) {
            *a &= b;
        }
    }
}

/// Result of set iteration: the final occupancy with labelled components.
#[derive(Debug, Clone, PartialEq)]
pub struct AttractorEstimate {
    pub region: Region,
    /// Component id per cell (0 for empty cells, ids start at 1).
    pub labels: Vec<u32>,
    pub components: Vec<ComponentInfo>,
    /// Occupied-cell count after each iterate, starting with B0.
    pub history: Vec<usize>,
    pub(crate) wrap: (bool, bool),
}

impl AttractorEstimate {
    /// Labels an arbitrary region (no iteration).
    pub fn from_region(region: Region, domain: Option<&RectDomain>) -> Self {
        let count = region.count();
        let (labels, components) = label(&region, domain);
        let wrap = match domain {
            Some(d) if d.genus() == 1 => (true, true),
            _ => (false, false),
        };
        Self { region, labels, components, history: vec![count], wrap }
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.region.is_empty()
    }

    pub fn label_at(&self, ix: usize, iy: usize) -> u32 {
        self.labels[iy * self.region.nx + ix]
    }
}

#[derive(Clone, Copy)]
struct CornerImage {
    point: HPoint,
    /// Start frame → end frame.
    deck: Similarity,
}

/// Estimates ⋂ Pᵏ(B0) by pushing forward the cell quads.
///
/// Each iterate maps the lattice corners of the occupied cells one period,
/// rasterizes every cell's image quad (drawn in the frame of its first
/// corner, so quads straddling a seam stay connected), and intersects the
/// hit set with the current occupancy: occ_k = occ_{k−1} ∩ P(occ_{k−1}).
pub fn iterate_region<F: VectorField + ?Sized>(
    p: &PoincareMap<'_, F>,
    b0: &Region,
    n: usize,
) -> Result<AttractorEstimate, TopologyError> {
    if n == 0 {
        return Err(TopologyError::NoIterations);
    }
    if b0.is_empty() {
        return Err(TopologyError::EmptyRegion);
    }
    let domain = p.domain();
    if let Some(d) = domain {
        let db = d.bounds();
        if b0.bounds.iter().zip(db).any(|(a, b)| (a - b).abs() > 1e-12) {
            return Err(TopologyError::BoundsMismatch { region: b0.bounds, domain: db });
        }
    }
    let (nx, ny) = (b0.nx, b0.ny);
    let (dx, dy) = b0.cell_size();
    let [x0, _, y0, _] = b0.bounds;
    let stride = nx + 1;
    let lattice = |i: usize, j: usize| HPoint::new(x0 + i as f64 * dx, y0 + j as f64 * dy);

    let mut occ = b0.clone();
    let mut history = vec![occ.count()];
    for _ in 0..n {
        let mut need = vec![false; stride * (ny + 1)];
        for (ix, iy) in occ.occupied() {
            for (a, b) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                need[(iy + b) * stride + ix + a] = true;
            }
        }
        let wanted: Vec<usize> = (0..need.len()).filter(|&k| need[k]).collect();
        let images: Vec<CornerImage> = wanted
            .par_iter()
            .map(|&k| {
                let q = lattice(k % stride, k / stride);
                let end = flow(p.field(), q, 0.0, p.period(), domain, p.config())?;
                Ok(CornerImage { point: end.point, deck: end.deck })
            })
            .collect::<Result<_, TopologyError>>()?;
        let mut corners: Vec<Option<CornerImage>> = vec![None; need.len()];
        for (&k, img) in wanted.iter().zip(images) {
            corners[k] = Some(img);
        }

        let cells: Vec<(usize, usize)> = occ.occupied().collect();
        let hits: Vec<Vec<usize>> = cells
            .par_chunks(256)
            .map(|chunk| {
                let mut out = Vec::new();
                for &(ix, iy) in chunk {
                    let ks =
                        [iy * stride + ix, iy * stride + ix + 1, (iy + 1) * stride + ix + 1, (iy + 1) * stride + ix];
                    let imgs = ks.map(|k| corners[k].expect("corner computed"));
                    cover(p, &occ, lattice(ix, iy), (dx, dy), imgs, 0, &mut out)?;
                }
                Ok(out)
            })
            .collect::<Result<_, TopologyError>>()?;
        let mut hit = vec![false; nx * ny];
        for k in hits.into_iter().flatten() {
            hit[k] = true;
        }
        occ.intersect(&hit);
        history.push(occ.count());
        if occ.is_empty() {
            break;
        }
    }
    let mut est = AttractorEstimate::from_region(occ, domain);
    est.history = history;
    Ok(est)
}

/// Largest developed image, in cells, drawn from its corners alone.
const MAX_IMAGE_EXTENT: f64 = 12.0;
/// Halvings of a source cell allowed while its image is too stretched.
const MAX_SUBDIVISION: u32 = 10;

/// Marks the cells hit by the image of the source box at `lo` with the
/// given corner images (counter-clockwise from `lo`). A box whose image is
/// stretched past a few cells is halved across the direction that
/// stretches most and each half is flowed separately; past the depth limit
/// only the corner cells are kept.
fn cover<F: VectorField + ?Sized>(
    p: &PoincareMap<'_, F>,
    grid: &Region,
    lo: HPoint,
    size: (f64, f64),
    imgs: [CornerImage; 4],
    depth: u32,
    out: &mut Vec<usize>,
) -> Result<(), TopologyError> {
    let quad = develop(grid, &imgs);
    let (umin, umax, vmin, vmax) = extent(&quad);
    let span = (umax - umin).max(vmax - vmin);
    if span <= MAX_IMAGE_EXTENT {
        rasterize_quad(grid, p.domain(), &quad, out);
        return Ok(());
    }
    if depth == MAX_SUBDIVISION {
        for img in &imgs {
            if let Some((i, j)) = grid.cell_of(img.point) {
                out.push(j * grid.nx + i);
            }
        }
        return Ok(());
    }
    let len = |a: usize, b: usize| (quad[a][0] - quad[b][0]).hypot(quad[a][1] - quad[b][1]);
    let along_x = len(0, 1).max(len(3, 2)) >= len(0, 3).max(len(1, 2));
    let mid = |q: HPoint| -> Result<CornerImage, TopologyError> {
        let q = p.domain().map_or(q, |d| d.clamp(q));
        let end = flow(p.field(), q, 0.0, p.period(), p.domain(), p.config())?;
        Ok(CornerImage { point: end.point, deck: end.deck })
    };
    let [c0, c1, c2, c3] = imgs;
    if along_x {
        let h = 0.5 * size.0;
        let (b, t) = (mid(HPoint::new(lo.x + h, lo.y))?, mid(HPoint::new(lo.x + h, lo.y + size.1))?);
        cover(p, grid, lo, (h, size.1), [c0, b, t, c3], depth + 1, out)?;
        cover(p, grid, HPoint::new(lo.x + h, lo.y), (h, size.1), [b, c1, c2, t], depth + 1, out)
    } else {
        let h = 0.5 * size.1;
        let (l, r) = (mid(HPoint::new(lo.x, lo.y + h))?, mid(HPoint::new(lo.x + size.0, lo.y + h))?);
        cover(p, grid, lo, (size.0, h), [c0, c1, r, l], depth + 1, out)?;
        cover(p, grid, HPoint::new(lo.x, lo.y + h), (size.0, h), [l, r, c2, c3], depth + 1, out)
    }
}

/// Corner images developed into the end frame of corner 0, in cell units.
fn develop(grid: &Region, imgs: &[CornerImage; 4]) -> [[f64; 2]; 4] {
    let (dx, dy) = grid.cell_size();
    let [x0, _, y0, _] = grid.bounds;
    let f0 = imgs[0].deck;
    std::array::from_fn(|k| {
        let p = if k == 0 { imgs[0].point } else { f0.apply(imgs[k].deck.inverse().apply(imgs[k].point)) };
        [(p.x - x0) / dx, (p.y - y0) / dy]
    })
}

fn extent(quad: &[[f64; 2]; 4]) -> (f64, f64, f64, f64) {
    quad.iter().fold((f64::MAX, f64::MIN, f64::MAX, f64::MIN), |(a, b, c, d), q| {
        (a.min(q[0]), b.max(q[0]), c.min(q[1]), d.max(q[1]))
    })
}

fn rasterize_quad(grid: &Region, domain: Option<&RectDomain>, quad: &[[f64; 2]; 4], out: &mut Vec<usize>) {
    let (nx, ny) = (grid.nx as i64, grid.ny as i64);
    let (dx, dy) = grid.cell_size();
    let [x0, _, y0, _] = grid.bounds;
    let (umin, umax, vmin, vmax) = extent(quad);
    let mut mark = |a: i64, b: i64| {
        if (0..nx).contains(&a) && (0..ny).contains(&b) {
            out.push((b * nx + a) as usize);
            return;
        }
        let Some(d) = domain else { return };
        let c = HPoint::new(x0 + (a as f64 + 0.5) * dx, y0 + (b as f64 + 0.5) * dy);
        if let Ok((q, _, _)) = d.reduce(c) {
            if let Some((i, j)) = grid.cell_of(q) {
                out.push(j * grid.nx + i);
            }
        }
    };
    for a in umin.floor() as i64..=umax.floor() as i64 {
        for b in vmin.floor() as i64..=vmax.floor() as i64 {
            if quad_hits_cell(quad, a as f64, b as f64) {
                mark(a, b);
            }
        }
    }
}

/// Separating-axis test between the quad (treated as convex) and the unit
/// cell `[a, a+1] × [b, b+1]`.
fn quad_hits_cell(quad: &[[f64; 2]; 4], a: f64, b: f64) -> bool {
    let cell = [[a, b], [a + 1.0, b], [a + 1.0, b + 1.0], [a, b + 1.0]];
    let separated = |n: [f64; 2]| {
        let proj = |p: &[f64; 2]| n[0] * p[0] + n[1] * p[1];
        let (qmin, qmax) = quad.iter().map(proj).fold((f64::MAX, f64::MIN), |m, v| (m.0.min(v), m.1.max(v)));
        let (cmin, cmax) = cell.iter().map(proj).fold((f64::MAX, f64::MIN), |m, v| (m.0.min(v), m.1.max(v)));
        qmax < cmin || cmax < qmin
    };
    if separated([1.0, 0.0]) || separated([0.0, 1.0]) {
        return false;
    }
    for k in 0..4 {
        let (p, q) = (quad[k], quad[(k + 1) % 4]);
        let n = [p[1] - q[1], q[0] - p[0]];
        if (n[0] != 0.0 || n[1] != 0.0) && separated(n) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sat_basics() {
        let q = [[0.2, 0.2], [0.8, 0.2], [0.8, 0.8], [0.2, 0.8]];
        assert!(quad_hits_cell(&q, 0.0, 0.0));
        assert!(!quad_hits_cell(&q, 1.0, 0.0));
        // Thin diagonal sliver misses the off-diagonal cell.
        let d = [[0.0, 0.0], [0.1, 0.0], [2.0, 1.9], [2.0, 2.0]];
        assert!(quad_hits_cell(&d, 1.0, 1.0));
        assert!(!quad_hits_cell(&d, 0.0, 1.5));
    }

    #[test]
    fn region_accessors() {
        let r = Region::from_fn(10, 8, [0.0, 1.0, 0.0, 1.0], |p| p.x < 0.5).unwrap();
        assert_eq!(r.count(), 40);
        assert_eq!(r.cell_of(HPoint::new(1.0, 1.0)), Some((9, 7)));
        assert_eq!(r.cell_of(HPoint::new(-0.1, 0.5)), None);
        assert!(Region::empty(4, 8, [0.0, 1.0, 0.0, 1.0]).is_err());
        assert!(Region::empty(8, 8, [0.0, 0.0, 0.0, 1.0]).is_err());
        let full = Region::full(10, 8, [0.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(r.is_subset_of(&full) && !full.is_subset_of(&r));
    }
}
