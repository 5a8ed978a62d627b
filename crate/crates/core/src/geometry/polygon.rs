use std::collections::HashMap;

use super::mesh::{signed_area, Point, TriMesh};
use super::GeometryError;

fn polygon_signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

/// Proper or improper intersection of segments ab and cd, excluding shared
/// endpoints (callers only test non-adjacent edges, which must not touch).
fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = signed_area(c, d, a);
    let d2 = signed_area(c, d, b);
    let d3 = signed_area(a, b, c);
    let d4 = signed_area(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on_segment = |p: Point, q: Point, r: Point| -> bool {
        r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

fn validate_polygon(pts: &[Point]) -> Result<(), GeometryError> {
    let n = pts.len();
    if n < 3 {
        return Err(GeometryError::InvalidPolygon(format!(
            "need at least 3 vertices, got {n}"
        )));
    }
    for p in pts {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(GeometryError::InvalidPolygon("non-finite vertex coordinate".into()));
        }
    }
    let scale = pts
        .iter()
        .map(|p| p.x.abs().max(p.y.abs()))
        .fold(0.0_f64, f64::max)
        .max(1e-300);
    for i in 0..n {
        if pts[i].dist(pts[(i + 1) % n]) <= 1e-14 * scale {
            return Err(GeometryError::InvalidPolygon(format!(
                "vertices {i} and {} coincide",
                (i + 1) % n
            )));
        }
    }
    let area = polygon_signed_area(pts);
    if area < 0.0 {
        return Err(GeometryError::InvalidPolygon(
            "vertices are ordered clockwise; list them counter-clockwise".into(),
        ));
    }
    if area <= (1e-14 * scale * scale).max(f64::MIN_POSITIVE) {
        return Err(GeometryError::InvalidPolygon("polygon has zero area".into()));
    }
    // Non-adjacent edges must not meet anywhere.
    for i in 0..n {
        for j in (i + 1)..n {
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                continue;
            }
            if segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]) {
                return Err(GeometryError::InvalidPolygon(format!(
                    "edges {i} and {j} intersect"
                )));
            }
        }
    }
    Ok(())
}

fn min_angle(a: Point, b: Point, c: Point) -> f64 {
    let la = b.dist(c);
    let lb = a.dist(c);
    let lc = a.dist(b);
    let angle = |opp: f64, s1: f64, s2: f64| -> f64 {
        ((s1 * s1 + s2 * s2 - opp * opp) / (2.0 * s1 * s2)).clamp(-1.0, 1.0).acos()
    };
    angle(la, lb, lc).min(angle(lb, la, lc)).min(angle(lc, la, lb))
}

/// Triangulate a simple counter-clockwise polygon into triangles on its own
/// vertex set. Among the valid ears, the one with the largest minimal angle is
/// clipped first, which keeps the fan-out reasonably well shaped.
fn ear_clip(pts: &[Point]) -> Result<Vec<[usize; 3]>, GeometryError> {
    let n = pts.len();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut triangles = Vec::with_capacity(n - 2);
    while remaining.len() > 3 {
        let m = remaining.len();
        let mut best: Option<(f64, usize)> = None;
        for pos in 0..m {
            let ia = remaining[(pos + m - 1) % m];
            let ib = remaining[pos];
            let ic = remaining[(pos + 1) % m];
            let (a, b, c) = (pts[ia], pts[ib], pts[ic]);
            let area = signed_area(a, b, c);
            if area <= 0.0 {
                continue; // reflex or collinear corner
            }
            let eps = 1e-12 * area;
            let blocked = remaining.iter().any(|&iv| {
                if iv == ia || iv == ib || iv == ic {
                    return false;
                }
                let p = pts[iv];
                signed_area(a, b, p) >= -eps
                    && signed_area(b, c, p) >= -eps
                    && signed_area(c, a, p) >= -eps
            });
            if blocked {
                continue;
            }
            let q = min_angle(a, b, c);
            if best.map_or(true, |(bq, _)| q > bq) {
                best = Some((q, pos));
            }
        }
        let Some((_, pos)) = best else {
            return Err(GeometryError::InvalidPolygon(
                "triangulation failed: no ear found (polygon may be degenerate)".into(),
            ));
        };
        let m = remaining.len();
        triangles.push([
            remaining[(pos + m - 1) % m],
            remaining[pos],
            remaining[(pos + 1) % m],
        ]);
        remaining.remove(pos);
    }
    let t = [remaining[0], remaining[1], remaining[2]];
    if signed_area(pts[t[0]], pts[t[1]], pts[t[2]]) <= 0.0 {
        return Err(GeometryError::InvalidPolygon(
            "triangulation failed: final triangle is degenerate".into(),
        ));
    }
    triangles.push(t);
    Ok(triangles)
}

/// Identity of a fine vertex, chosen so that the same point produced from two
/// neighboring coarse triangles gets the same key (and, by construction, the
/// same floating-point coordinates).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum VertexKey {
    Corner(usize),
    /// `idx`-th of `n_split - 1` interior points on the segment between
    /// corners `lo < hi`, counted from `lo`.
    Edge(usize, usize, usize),
    /// Strictly interior lattice point `(i, j)` of coarse triangle `t`.
    Inner(usize, usize, usize),
}

/// Mesh a simple counter-clockwise polygon with target edge length `h`.
///
/// The polygon is ear-clipped into coarse triangles, each of which is split
/// into `k²` congruent sub-triangles along its principal lattice, where `k`
/// makes the longest coarse edge shorter than `h`. Shared coarse edges get
/// identical subdivision points from both sides, so the result is conforming,
/// and the mesh covers the polygon exactly.
pub fn mesh_polygon(pts: &[Point], h: f64) -> Result<TriMesh, GeometryError> {
    validate_polygon(pts)?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(GeometryError::InvalidDomain(format!("mesh size {h} must be positive")));
    }
    let coarse = ear_clip(pts)?;
    let mut longest: f64 = 0.0;
    for t in &coarse {
        for e in 0..3 {
            longest = longest.max(pts[t[e]].dist(pts[t[(e + 1) % 3]]));
        }
    }
    let k = ((longest / h) - 1e-9).ceil().max(1.0) as usize;

    let mut vertices: Vec<Point> = Vec::new();
    let mut index: HashMap<VertexKey, usize> = HashMap::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();

    // Canonical coordinates: corners verbatim; edge points interpolated from
    // the lower corner; interior points by barycentric combination.
    let mut intern = |key: VertexKey, p: Point, vertices: &mut Vec<Point>| -> usize {
        *index.entry(key).or_insert_with(|| {
            vertices.push(p);
            vertices.len() - 1
        })
    };
    let edge_point = |lo: usize, hi: usize, idx: usize| -> Point {
        let t = idx as f64 / k as f64;
        Point::new(
            pts[lo].x + t * (pts[hi].x - pts[lo].x),
            pts[lo].y + t * (pts[hi].y - pts[lo].y),
        )
    };

    for (t_idx, tri) in coarse.iter().enumerate() {
        let [g0, g1, g2] = *tri;
        let corners = [pts[g0], pts[g1], pts[g2]];
        // Map lattice coordinates (i, j) with i + j <= k to a global index.
        let mut local = HashMap::new();
        for i in 0..=k {
            for j in 0..=(k - i) {
                let (key, p) = if i == 0 && j == 0 {
                    (VertexKey::Corner(g0), corners[0])
                } else if i == k && j == 0 {
                    (VertexKey::Corner(g1), corners[1])
                } else if i == 0 && j == k {
                    (VertexKey::Corner(g2), corners[2])
                } else if j == 0 {
                    let (lo, hi, idx) = if g0 < g1 { (g0, g1, i) } else { (g1, g0, k - i) };
                    (VertexKey::Edge(lo, hi, idx), edge_point(lo, hi, idx))
                } else if i == 0 {
                    let (lo, hi, idx) = if g0 < g2 { (g0, g2, j) } else { (g2, g0, k - j) };
                    (VertexKey::Edge(lo, hi, idx), edge_point(lo, hi, idx))
                } else if i + j == k {
                    let (lo, hi, idx) = if g1 < g2 { (g1, g2, j) } else { (g2, g1, k - j) };
                    (VertexKey::Edge(lo, hi, idx), edge_point(lo, hi, idx))
                } else {
                    let (bi, bj) = (i as f64 / k as f64, j as f64 / k as f64);
                    let p = Point::new(
                        corners[0].x + bi * (corners[1].x - corners[0].x)
                            + bj * (corners[2].x - corners[0].x),
                        corners[0].y + bi * (corners[1].y - corners[0].y)
                            + bj * (corners[2].y - corners[0].y),
                    );
                    (VertexKey::Inner(t_idx, i, j), p)
                };
                local.insert((i, j), intern(key, p, &mut vertices));
            }
        }
        for i in 0..k {
            for j in 0..(k - i) {
                triangles.push([local[&(i, j)], local[&(i + 1, j)], local[&(i, j + 1)]]);
                if i + j < k - 1 {
                    triangles.push([local[&(i + 1, j)], local[&(i + 1, j + 1)], local[&(i, j + 1)]]);
                }
            }
        }
    }

    // Boundary = directed edges used exactly once.
    let mut seen: HashMap<(usize, usize), u32> = HashMap::new();
    for tri in &triangles {
        for e in 0..3 {
            let (u, v) = (tri[e], tri[(e + 1) % 3]);
            *seen.entry((u.min(v), u.max(v))).or_insert(0) += 1;
        }
    }
    let mut boundary_edges = Vec::new();
    for tri in &triangles {
        for e in 0..3 {
            let (u, v) = (tri[e], tri[(e + 1) % 3]);
            if seen[&(u.min(v), u.max(v))] == 1 {
                boundary_edges.push([u, v]);
            }
        }
    }
    let mut is_boundary = vec![false; vertices.len()];
    for &[u, v] in &boundary_edges {
        is_boundary[u] = true;
        is_boundary[v] = true;
    }

    let mesh = TriMesh { vertices, triangles, is_boundary, boundary_edges, h };
    mesh.validate()?;
    Ok(mesh)
}
