//! Voronoi partition of a rectangle and Lloyd relaxation.
//!
//! Cells are built per site by clipping the region rectangle against the
//! perpendicular bisector half-plane of every other site (O(n²) clips).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{Rect, Vec2};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageTask {
    pub region: Rect,
    /// Stop when no site moves farther than this, m.
    pub tolerance: f64,
    pub max_iters: usize,
    /// Flight altitude of the covering UAVs, m.
    pub altitude: f64,
}

impl CoverageTask {
    pub fn validate(&self) -> Result<()> {
        if !(self.region.width() > 0.0 && self.region.height() > 0.0) {
            return Err(Error::InvalidParameter("coverage region has no area".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter("coverage tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polygon {
    pub vertices: Vec<Vec2>,
}

impl Polygon {
    pub fn from_rect(r: &Rect) -> Self {
        Self {
            vertices: r.corners().to_vec(),
        }
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        (0..n)
            .map(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                a.x * b.y - b.x * a.y
            })
            .sum::<f64>()
            / 2.0
    }

    /// Area centroid; `None` for a degenerate polygon.
    pub fn centroid(&self) -> Option<Vec2> {
        let n = self.vertices.len();
        let a = self.signed_area();
        if n < 3 || a.abs() < 1e-300 {
            return None;
        }
        // shift to the first vertex to keep the sums well conditioned
        let o = self.vertices[0];
        let mut c = Vec2::zeros();
        for i in 0..n {
            let p = self.vertices[i] - o;
            let q = self.vertices[(i + 1) % n] - o;
            let cross = p.x * q.y - q.x * p.y;
            c += (p + q) * cross;
        }
        Some(o + c / (6.0 * a))
    }

    /// Polar second moment ∫|q − about|² dA over the polygon.
    pub fn second_moment(&self, about: &Vec2) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        let mut sum = 0.0;
        for i in 0..n {
            let p = self.vertices[i] - about;
            let q = self.vertices[(i + 1) % n] - about;
            let cross = p.x * q.y - q.x * p.y;
            sum += cross * (p.x * p.x + p.x * q.x + q.x * q.x + p.y * p.y + p.y * q.y + q.y * q.y);
        }
        (sum / 12.0).abs()
    }

    /// Point-in-convex-polygon test with a small tolerance on the edges.
    pub fn contains(&self, p: &Vec2) -> bool {
        let n = self.vertices.len();
        if n < 3 {
            return false;
        }
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let e = b - a;
            let w = p - a;
            e.x * w.y - e.y * w.x >= -1e-9 * e.norm().max(1.0)
        })
    }

    /// Keeps the part of the polygon where `(q − point) · normal ≤ 0`.
    fn clip(&self, point: &Vec2, normal: &Vec2) -> Polygon {
        let n = self.vertices.len();
        let mut out = Vec::with_capacity(n + 1);
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let da = (a - point).dot(normal);
            let db = (b - point).dot(normal);
            if da <= 0.0 {
                out.push(a);
            }
            if (da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0) {
                let t = da / (da - db);
                out.push(a + (b - a) * t);
            }
        }
        Polygon { vertices: out }
    }
}

/// Offset applied to the k-th repeat of a site so that coincident sites
/// get distinct cells.
const DUPLICATE_OFFSET: f64 = 1e-7;

/// Returns `sites` with exact duplicates nudged apart deterministically.
///
/// The k-th later copy of a point moves by `k · 1e-7` m along a fixed
/// golden-angle direction, then is clamped into the region.
pub fn separate_duplicates(sites: &[Vec2], region: &Rect) -> Vec<Vec2> {
    let mut out: Vec<Vec2> = Vec::with_capacity(sites.len());
    for (i, s) in sites.iter().enumerate() {
        let mut p = *s;
        let mut k = 0u32;
        while out.contains(&p) {
            k += 1;
            let ang = 2.399_963_229_728_653 * (i as f64 + k as f64);
            p = region.clamp(s + Vec2::new(ang.cos(), ang.sin()) * (DUPLICATE_OFFSET * k as f64));
        }
        out.push(p);
    }
    out
}

/// Voronoi cells of `sites` restricted to `region`, one per site.
pub fn voronoi_partition(sites: &[Vec2], region: &Rect) -> Result<Vec<Polygon>> {
    if !(region.width() > 0.0 && region.height() > 0.0) {
        return Err(Error::InvalidParameter("region has no area".into()));
    }
    if let Some(s) = sites.iter().find(|s| !region.contains(s)) {
        return Err(Error::InvalidParameter(format!(
            "site ({}, {}) lies outside the region",
            s.x, s.y
        )));
    }
    let sites = separate_duplicates(sites, region);
    Ok(cells_of(&sites, region))
}

fn cells_of(sites: &[Vec2], region: &Rect) -> Vec<Polygon> {
    let base = Polygon::from_rect(region);
    sites
        .iter()
        .enumerate()
        .map(|(i, si)| {
            let mut cell = base.clone();
            for (j, sj) in sites.iter().enumerate() {
                if i == j || cell.vertices.is_empty() {
                    continue;
                }
                let mid = (si + sj) * 0.5;
                cell = cell.clip(&mid, &(sj - si));
            }
            cell
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LloydOutcome {
    pub sites: Vec<Vec2>,
    pub iterations: usize,
    pub converged: bool,
    /// Largest site displacement in the last iteration performed.
    pub last_displacement: f64,
}

/// Locational cost: the sum over sites of the second moment of each cell
/// about its site.
pub fn coverage_cost(sites: &[Vec2], region: &Rect) -> Result<f64> {
    let cells = voronoi_partition(sites, region)?;
    Ok(sites.iter().zip(&cells).map(|(s, c)| c.second_moment(s)).sum())
}

/// Moves each site to the centroid of its cell. Returns the new sites and
/// the largest displacement.
pub fn lloyd_step(sites: &[Vec2], region: &Rect) -> Result<(Vec<Vec2>, f64)> {
    let cells = voronoi_partition(sites, region)?;
    let mut max_disp = 0.0f64;
    let next: Vec<Vec2> = sites
        .iter()
        .zip(&cells)
        .map(|(s, cell)| {
            let c = cell.centroid().map(|c| region.clamp(c)).unwrap_or(*s);
            max_disp = max_disp.max((c - s).norm());
            c
        })
        .collect();
    Ok((next, max_disp))
}

/// Iterates [`lloyd_step`] until the largest displacement drops below
/// `tolerance` or `max_iters` steps have run.
pub fn lloyd_relax(sites: &[Vec2], region: &Rect, tolerance: f64, max_iters: usize) -> Result<LloydOutcome> {
    let mut current = separate_duplicates(&sites.iter().map(|s| region.clamp(*s)).collect::<Vec<_>>(), region);
    let mut last = 0.0;
    for it in 0..max_iters {
        let (next, disp) = lloyd_step(&current, region)?;
        current = next;
        last = disp;
        if disp < tolerance {
            return Ok(LloydOutcome {
                sites: current,
                iterations: it + 1,
                converged: true,
                last_displacement: disp,
            });
        }
    }
    Ok(LloydOutcome {
        sites: current,
        iterations: max_iters,
        converged: false,
        last_displacement: last,
    })
}
