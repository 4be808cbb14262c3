//! Geometric ingestion: 2-D point sets, Delaunay triangulation with
//! Euclidean edge weights, and crop/rotate transforms with provenance
//! tracking.
//!
//! The triangulation is plain Bowyer–Watson. Points exactly on a
//! circumcircle count as outside, which keeps classic grids (four
//! cocircular corners) working without fuss; inputs that still produce
//! an inconsistent triangulation are retried once under a seeded jitter
//! of at most 1e-9 per coordinate.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::GeoError;
use crate::graph::{Graph, NodeId};
use crate::util::uniform_open01;

/// Planar points in pixel coordinates, optionally tagged with external
/// ids. Coordinates are finite and pairwise distinct.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSet {
    points: Vec<(f64, f64)>,
    ids: Option<Vec<u64>>,
}

impl PointSet {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, GeoError> {
        let mut seen = std::collections::HashMap::new();
        for (i, &(x, y)) in points.iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(GeoError::NonFinitePoint(i));
            }
            if seen.insert((x.to_bits(), y.to_bits()), i).is_some() {
                return Err(GeoError::DuplicatePoint(i));
            }
        }
        Ok(PointSet { points, ids: None })
    }

    /// Attaches external ids; panics on length mismatch.
    pub fn with_ids(mut self, ids: Vec<u64>) -> Self {
        assert_eq!(ids.len(), self.points.len(), "one id per point");
        self.ids = Some(ids);
        self
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn ids(&self) -> Option<&[u64]> {
        self.ids.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Axis-aligned crop window, inclusive on all sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeoError> {
        let r = Rect { x0, y0, x1, y1 };
        if ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) {
            return Err(GeoError::InvalidRect("non-finite corner".into()));
        }
        if x0 >= x1 || y0 >= y1 {
            return Err(GeoError::InvalidRect(format!(
                "({x0}, {y0}) .. ({x1}, {y1}) has no area"
            )));
        }
        Ok(r)
    }

    pub fn contains(&self, p: (f64, f64)) -> bool {
        p.0 >= self.x0 && p.0 <= self.x1 && p.1 >= self.y0 && p.1 <= self.y1
    }

    pub fn center(&self) -> (f64, f64) {
        (0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }
}

/// Triangulation output: the weighted edge graph, the triangle list
/// (each sorted, list in canonical order), and whether the jitter
/// fallback fired.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    pub graph: Graph,
    pub triangles: Vec<[NodeId; 3]>,
    pub jittered: bool,
}

/// Delaunay triangulation as a weighted graph; node ids are point
/// indices, weights Euclidean pixel distances.
pub fn delaunay_graph(ps: &PointSet) -> Result<Graph, GeoError> {
    triangulate(ps).map(|t| t.graph)
}

/// Full triangulation with the triangle list kept.
pub fn triangulate(ps: &PointSet) -> Result<Triangulation, GeoError> {
    if ps.len() < 3 {
        return Err(GeoError::Degenerate(ps.len()));
    }
    let mut pts: Vec<(f64, f64)> = ps.points().to_vec();
    for attempt in 0..2 {
        if let Some(tris) = bowyer_watson(&pts) {
            if triangulation_consistent(&pts, &tris) {
                return Ok(build(ps, &tris, attempt > 0));
            }
        }
        // Exactly degenerate configuration: nudge every coordinate by
        // at most 1e-9 (seeded, hence reproducible) and try once more.
        let mut rng = ChaCha8Rng::seed_from_u64(0xd31a);
        pts = ps
            .points()
            .iter()
            .map(|&(x, y)| {
                (
                    x + (uniform_open01(&mut rng) - 0.5) * 2e-9,
                    y + (uniform_open01(&mut rng) - 0.5) * 2e-9,
                )
            })
            .collect();
    }
    Err(GeoError::Degenerate(ps.len()))
}

fn build(ps: &PointSet, tris: &[[usize; 3]], jittered: bool) -> Triangulation {
    let pts = ps.points();
    let mut triangles: Vec<[NodeId; 3]> = tris
        .iter()
        .map(|t| {
            let mut s = [t[0] as NodeId, t[1] as NodeId, t[2] as NodeId];
            s.sort_unstable();
            s
        })
        .collect();
    triangles.sort_unstable();
    let mut edges: Vec<(NodeId, NodeId)> = triangles
        .iter()
        .flat_map(|&[a, b, c]| [(a, b), (a, c), (b, c)])
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let weighted = edges.into_iter().map(|(u, v)| {
        let (a, b) = (pts[u as usize], pts[v as usize]);
        (u, v, ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt())
    });
    let graph =
        Graph::from_edges_with_nodes(pts.len(), weighted).expect("triangulation edges");
    Triangulation {
        graph,
        triangles,
        jittered,
    }
}

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

/// Strictly-inside test against the circumcircle of `abc`; points on
/// the circle count as outside.
fn in_circumcircle(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let (b, c) = if orient(a, b, c) < 0.0 { (c, b) } else { (b, c) };
    let (ax, ay) = (a.0 - d.0, a.1 - d.1);
    let (bx, by) = (b.0 - d.0, b.1 - d.1);
    let (cx, cy) = (c.0 - d.0, c.1 - d.1);
    let det = (ax * ax + ay * ay) * (bx * cy - cx * by)
        - (bx * bx + by * by) * (ax * cy - cx * ay)
        + (cx * cx + cy * cy) * (ax * by - bx * ay);
    det > 0.0
}

/// Incremental insertion in canonically sorted order around a generous
/// bounding triangle. Returns the real triangles, or `None` when the
/// construction collapses (every triangle degenerate).
fn bowyer_watson(pts: &[(f64, f64)]) -> Option<Vec<[usize; 3]>> {
    let n = pts.len();
    let (mut lo, mut hi) = ((f64::MAX, f64::MAX), (f64::MIN, f64::MIN));
    for &(x, y) in pts {
        lo = (lo.0.min(x), lo.1.min(y));
        hi = (hi.0.max(x), hi.1.max(y));
    }
    let d = (hi.0 - lo.0).max(hi.1 - lo.1).max(1.0) * 50.0;
    let mid = (0.5 * (lo.0 + hi.0), 0.5 * (lo.1 + hi.1));
    let mut all = pts.to_vec();
    all.push((mid.0 - d, mid.1 - d));
    all.push((mid.0 + d, mid.1 - d));
    all.push((mid.0, mid.1 + d));

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&i, &j| {
        pts[i]
            .partial_cmp(&pts[j])
            .expect("finite coordinates compare")
    });

    let mut tris: Vec<[usize; 3]> = vec![[n, n + 1, n + 2]];
    for &pi in &order {
        let p = all[pi];
        let mut edge_use = std::collections::HashMap::new();
        let mut any_bad = false;
        tris.retain(|&[a, b, c]| {
            if in_circumcircle(all[a], all[b], all[c], p) {
                any_bad = true;
                for (u, v) in [(a, b), (a, c), (b, c)] {
                    *edge_use.entry((u.min(v), u.max(v))).or_insert(0usize) += 1;
                }
                false
            } else {
                true
            }
        });
        if !any_bad {
            // Every point lies inside at least one circumcircle of a
            // correct intermediate triangulation; anything else means
            // the arithmetic broke down.
            return None;
        }
        let mut boundary: Vec<(usize, usize)> = edge_use
            .into_iter()
            .filter(|&(_, uses)| uses == 1)
            .map(|(e, _)| e)
            .collect();
        boundary.sort_unstable();
        for (u, v) in boundary {
            tris.push([u, v, pi]);
        }
    }
    let real: Vec<[usize; 3]> = tris
        .into_iter()
        .filter(|t| t.iter().all(|&v| v < n))
        .collect();
    if real.is_empty() {
        return None;
    }
    Some(real)
}

/// Post-construction audit: every point used by some triangle, no
/// degenerate triangle, and no point strictly inside a circumcircle by
/// more than rounding allows.
fn triangulation_consistent(pts: &[(f64, f64)], tris: &[[usize; 3]]) -> bool {
    let mut used = vec![false; pts.len()];
    let (mut lo, mut hi) = ((f64::MAX, f64::MAX), (f64::MIN, f64::MIN));
    for &(x, y) in pts {
        lo = (lo.0.min(x), lo.1.min(y));
        hi = (hi.0.max(x), hi.1.max(y));
    }
    let diag = ((hi.0 - lo.0).powi(2) + (hi.1 - lo.1).powi(2)).sqrt().max(1.0);
    let margin = 1e-9 * diag.powi(4);
    for &[a, b, c] in tris {
        used[a] = true;
        used[b] = true;
        used[c] = true;
        if orient(pts[a], pts[b], pts[c]) == 0.0 {
            return false;
        }
        for (i, &p) in pts.iter().enumerate() {
            if i == a || i == b || i == c {
                continue;
            }
            if circumcircle_excess(pts[a], pts[b], pts[c], p) > margin {
                return false;
            }
        }
    }
    used.into_iter().all(|u| u)
}

/// Signed in-circle determinant (positive strictly inside), exposed for
/// auditing.
fn circumcircle_excess(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> f64 {
    let (b, c) = if orient(a, b, c) < 0.0 { (c, b) } else { (b, c) };
    let (ax, ay) = (a.0 - d.0, a.1 - d.1);
    let (bx, by) = (b.0 - d.0, b.1 - d.1);
    let (cx, cy) = (c.0 - d.0, c.1 - d.1);
    (ax * ax + ay * ay) * (bx * cy - cx * by) - (bx * bx + by * by) * (ax * cy - cx * ay)
        + (cx * cx + cy * cy) * (ax * by - bx * ay)
}

/// Crops to `crop` (all points when `None`) and rotates the survivors
/// by `rotation_deg` counterclockwise about the crop center (bounding
/// box center without a crop). Returns the transformed set and, per
/// new point, the index it came from.
pub fn transform_points(
    ps: &PointSet,
    rotation_deg: f64,
    crop: Option<Rect>,
) -> Result<(PointSet, Vec<usize>), GeoError> {
    let kept: Vec<usize> = match &crop {
        Some(r) => (0..ps.len())
            .filter(|&i| r.contains(ps.points()[i]))
            .collect(),
        None => (0..ps.len()).collect(),
    };
    if kept.is_empty() {
        return Err(GeoError::EmptyCrop);
    }
    let center = match &crop {
        Some(r) => r.center(),
        None => {
            let (mut lo, mut hi) = ((f64::MAX, f64::MAX), (f64::MIN, f64::MIN));
            for &i in &kept {
                let (x, y) = ps.points()[i];
                lo = (lo.0.min(x), lo.1.min(y));
                hi = (hi.0.max(x), hi.1.max(y));
            }
            (0.5 * (lo.0 + hi.0), 0.5 * (lo.1 + hi.1))
        }
    };
    let theta = rotation_deg.to_radians();
    let (sin, cos) = theta.sin_cos();
    let moved: Vec<(f64, f64)> = kept
        .iter()
        .map(|&i| {
            let (x, y) = ps.points()[i];
            let (dx, dy) = (x - center.0, y - center.1);
            (center.0 + dx * cos - dy * sin, center.1 + dx * sin + dy * cos)
        })
        .collect();
    let mut out = PointSet::new(moved)?;
    if let Some(ids) = ps.ids() {
        out = out.with_ids(kept.iter().map(|&i| ids[i]).collect());
    }
    Ok((out, kept))
}
