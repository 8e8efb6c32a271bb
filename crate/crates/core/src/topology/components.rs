use std::collections::VecDeque;

use super::region::{AttractorEstimate, Region};
use super::TopologyError;
use crate::geometry::{HPoint, RectDomain};

pub const THICKNESS_BINS: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct ComponentInfo {
    pub id: u32,
    pub cells: usize,
    /// A non-contractible cycle inside the component as generator
    /// exponents, or all zeros when none was found.
    pub winding: Vec<i64>,
    /// Generators traversed by any cycle of the component.
    pub generators: Vec<usize>,
}

impl ComponentInfo {
    pub fn has_winding(&self) -> bool {
        self.winding.iter().any(|&w| w != 0)
    }
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, mut i: usize) -> usize {
        while self.0[i] != i {
            self.0[i] = self.0[self.0[i]];
            i = self.0[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller index wins, which keeps roots deterministic.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi] = lo;
        }
    }
}

/// Adjacency of occupied cells: grid 4-neighbours plus neighbours across
/// glued segments, each carrying the winding picked up on the way.
fn adjacency(region: &Region, domain: Option<&RectDomain>) -> Vec<Vec<(usize, Vec<i64>)>> {
    let (nx, ny) = (region.nx(), region.ny());
    let gens = domain.map_or(0, |d| d.generator_count());
    let (dx, dy) = region.cell_size();
    let mut adj: Vec<Vec<(usize, Vec<i64>)>> = vec![Vec::new(); nx * ny];
    let link = |adj: &mut Vec<Vec<(usize, Vec<i64>)>>, a: usize, b: usize, w: Vec<i64>| {
        let back = w.iter().map(|v| -v).collect();
        adj[a].push((b, w));
        adj[b].push((a, back));
    };
    for (ix, iy) in region.occupied() {
        let k = iy * nx + ix;
        if ix + 1 < nx && region.get(ix + 1, iy) {
            link(&mut adj, k, k + 1, vec![0; gens]);
        }
        if iy + 1 < ny && region.get(ix, iy + 1) {
            link(&mut adj, k, k + nx, vec![0; gens]);
        }
        let Some(d) = domain else { continue };
        let c = region.cell_center(ix, iy);
        let outward = [
            (ix == 0, HPoint::new(c.x - dx, c.y)),
            (ix + 1 == nx, HPoint::new(c.x + dx, c.y)),
            (iy == 0, HPoint::new(c.x, c.y - dy)),
            (iy + 1 == ny, HPoint::new(c.x, c.y + dy)),
        ];
        for (on_edge, p) in outward {
            if !on_edge {
                continue;
            }
            let Ok((q, letters, _)) = d.reduce(p) else { continue };
            if let Some((jx, jy)) = region.cell_of(q) {
                if region.get(jx, jy) {
                    // Each seam edge is seen from both sides; keep one direction.
                    adj[k].push((jy * nx + jx, d.winding(&letters)));
                }
            }
        }
    }
    adj
}

pub(crate) fn label(region: &Region, domain: Option<&RectDomain>) -> (Vec<u32>, Vec<ComponentInfo>) {
    let n = region.nx() * region.ny();
    let adj = adjacency(region, domain);
    let mut uf = UnionFind((0..n).collect());
    for (a, list) in adj.iter().enumerate() {
        for (b, _) in list {
            uf.union(a, *b);
        }
    }
    let mut labels = vec![0u32; n];
    let mut root_id = vec![0u32; n];
    let mut infos: Vec<ComponentInfo> = Vec::new();
    let gens = domain.map_or(0, |d| d.generator_count());
    for (k, &on) in region.cells().iter().enumerate() {
        if !on {
            continue;
        }
        let r = uf.find(k);
        if root_id[r] == 0 {
            infos.push(ComponentInfo {
                id: infos.len() as u32 + 1,
                cells: 0,
                winding: vec![0; gens],
                generators: Vec::new(),
            });
            root_id[r] = infos.len() as u32;
        }
        labels[k] = root_id[r];
        infos[root_id[r] as usize - 1].cells += 1;
    }

    // Homology offsets by BFS; any inconsistency around a closed walk is a
    // non-contractible cycle.
    let mut offset: Vec<Option<Vec<i64>>> = vec![None; n];
    for start in 0..n {
        if labels[start] == 0 || offset[start].is_some() {
            continue;
        }
        let info = &mut infos[labels[start] as usize - 1];
        offset[start] = Some(vec![0; gens]);
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            let hu = offset[u].clone().expect("visited");
            for (v, w) in &adj[u] {
                let expect: Vec<i64> = hu.iter().zip(w).map(|(a, b)| a + b).collect();
                match &offset[*v] {
                    None => {
                        offset[*v] = Some(expect);
                        queue.push_back(*v);
                    }
                    Some(hv) if *hv != expect => {
                        let mut cycle: Vec<i64> = expect.iter().zip(hv).map(|(a, b)| a - b).collect();
                        if cycle.iter().find(|&&c| c != 0).is_some_and(|&c| c < 0) {
                            cycle.iter_mut().for_each(|c| *c = -*c);
                        }
                        for (g, &c) in cycle.iter().enumerate() {
                            if c != 0 && !info.generators.contains(&g) {
                                info.generators.push(g);
                            }
                        }
                        if !info.winding.iter().any(|&c| c != 0) {
                            info.winding = cycle;
                        }
                    }
                    Some(_) => {}
                }
            }
        }
        info.generators.sort_unstable();
    }
    (labels, infos)
}

/// Number of connected components, counting connections across glued segments.
pub fn components(est: &AttractorEstimate) -> usize {
    est.components.len()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CircleClass {
    CircleLike,
    BandLike,
}

impl CircleClass {
    pub fn as_str(self) -> &'static str {
        match self {
            CircleClass::CircleLike => "circle-like",
            CircleClass::BandLike => "band-like",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircleReport {
    pub class: CircleClass,
    pub max_extent: usize,
    /// Largest transverse extent (cells) per section bin; 0 for empty bins.
    pub profile: Vec<usize>,
}

/// Smallest number of consecutive cells (cyclically if `wrap`) covering `idx`.
fn span(idx: &mut [usize], n: usize, wrap: bool) -> usize {
    idx.sort_unstable();
    let (first, last) = (idx[0], idx[idx.len() - 1]);
    if !wrap {
        return last - first + 1;
    }
    let mut gap = first + n - last;
    for w in idx.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    n - gap + 1
}

/// Circle-versus-band proxy: bins the component along the axis it covers
/// more widely and measures each fibre's transverse extent in cells.
#[allow(clippy::needless_range_loop)]
pub fn circle_test(est: &AttractorEstimate, component: u32, tol_cells: usize) -> Result<CircleReport, TopologyError> {
    let info =
        est.components.iter().find(|c| c.id == component).ok_or(TopologyError::NoComponent(component as usize))?;
    if !info.has_winding() {
        return Err(TopologyError::NoWinding(component as usize));
    }
    let (nx, ny) = (est.region.nx(), est.region.ny());
    let mut cols: Vec<Vec<usize>> = vec![Vec::new(); nx];
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); ny];
    for iy in 0..ny {
        for ix in 0..nx {
            if est.label_at(ix, iy) == component {
                cols[ix].push(iy);
                rows[iy].push(ix);
            }
        }
    }
    let covered = |v: &[Vec<usize>]| v.iter().filter(|f| !f.is_empty()).count();
    let (mut fibres, transverse, wrap) =
        if covered(&cols) >= covered(&rows) { (cols, ny, est.wrap.1) } else { (rows, nx, est.wrap.0) };
    let len = fibres.len();
    let mut profile = vec![0usize; THICKNESS_BINS];
    for (i, f) in fibres.iter_mut().enumerate() {
        if f.is_empty() {
            continue;
        }
        let bin = i * THICKNESS_BINS / len;
        profile[bin] = profile[bin].max(span(f, transverse, wrap));
    }
    let max_extent = profile.iter().copied().max().unwrap_or(0);
    let class = if max_extent <= tol_cells { CircleClass::CircleLike } else { CircleClass::BandLike };
    Ok(CircleReport { class, max_extent, profile })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::standard_domain;

    #[test]
    fn span_wraps() {
        assert_eq!(span(&mut [3], 10, true), 1);
        assert_eq!(span(&mut [0, 9], 10, true), 2);
        assert_eq!(span(&mut [0, 9], 10, false), 10);
        assert_eq!(span(&mut [2, 3, 5], 10, true), 4);
    }

    #[test]
    fn seam_strip_is_one_annulus() {
        let torus = standard_domain(1).unwrap();
        let r = Region::from_fn(16, 16, torus.bounds(), |p| (0.45..0.55).contains(&p.y)).unwrap();
        let est = AttractorEstimate::from_region(r, Some(&torus));
        assert_eq!(est.component_count(), 1);
        assert_eq!(est.components[0].winding, vec![1, 0]);
        assert_eq!(est.components[0].generators, vec![0]);
        let rep = circle_test(&est, 1, 3).unwrap();
        assert_eq!(rep.profile.len(), THICKNESS_BINS);
        assert_eq!(rep.class, CircleClass::CircleLike);
    }

    #[test]
    fn blocks_split_in_the_plane() {
        let b = [0.0, 1.0, 0.0, 1.0];
        let r = Region::from_fn(16, 16, b, |p| p.x < 0.3 || p.x > 0.7).unwrap();
        assert_eq!(AttractorEstimate::from_region(r.clone(), None).component_count(), 2);
        // The torus glues the two blocks across the vertical seam.
        let torus = standard_domain(1).unwrap();
        let est = AttractorEstimate::from_region(r, Some(&torus));
        assert_eq!(est.component_count(), 1);
        // The blocks span the full height but leave a gap in x.
        assert_eq!(est.components[0].generators, vec![1]);
        assert_eq!(est.components[0].winding, vec![0, 1]);
    }

    #[test]
    fn contractible_blob_has_no_winding() {
        let torus = standard_domain(1).unwrap();
        let r = Region::from_fn(16, 16, torus.bounds(), |p| p.dist(HPoint::new(0.5, 0.5)) < 0.2).unwrap();
        let est = AttractorEstimate::from_region(r, Some(&torus));
        assert!(!est.components[0].has_winding());
        assert!(matches!(circle_test(&est, 1, 3), Err(TopologyError::NoWinding(1))));
        assert!(matches!(circle_test(&est, 2, 3), Err(TopologyError::NoComponent(2))));
    }
}
