use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;

use super::{ConformalMap, GeometryError};
use crate::output::fmt_f64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Twice the signed area is avoided throughout: this is the signed area itself,
/// positive for counter-clockwise `(a, b, c)`.
pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
}

/// Conforming triangle mesh with straight edges.
///
/// Triangles are counter-clockwise index triples. `boundary_edges` walks the
/// domain boundary counter-clockwise; `is_boundary[v]` is true exactly for the
/// vertices on it. `h` records the target edge length the mesh was built for.
#[derive(Clone, Debug)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub is_boundary: Vec<bool>,
    pub boundary_edges: Vec<[usize; 2]>,
    pub h: f64,
}

impl TriMesh {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Area-weighted centroid.
    pub fn centroid(&self) -> Point {
        let mut ax = 0.0;
        let mut ay = 0.0;
        let mut total = 0.0;
        for t in 0..self.triangles.len() {
            let [i, j, k] = self.triangles[t];
            let (p, q, r) = (self.vertices[i], self.vertices[j], self.vertices[k]);
            let a = signed_area(p, q, r);
            ax += a * (p.x + q.x + r.x) / 3.0;
            ay += a * (p.y + q.y + r.y) / 3.0;
            total += a;
        }
        Point::new(ax / total, ay / total)
    }

    /// New mesh with every vertex moved by `f`; topology and boundary data are kept.
    pub fn transformed(&self, f: impl Fn(Point) -> Point) -> TriMesh {
        TriMesh {
            vertices: self.vertices.iter().map(|&p| f(p)).collect(),
            triangles: self.triangles.clone(),
            is_boundary: self.is_boundary.clone(),
            boundary_edges: self.boundary_edges.clone(),
            h: self.h,
        }
    }

    /// Uniform dilation about the origin.
    pub fn dilated(&self, s: f64) -> TriMesh {
        let mut m = self.transformed(|p| Point::new(s * p.x, s * p.y));
        m.h = self.h * s;
        m
    }

    /// Full consistency check: positive areas, conforming edges, closed
    /// boundary loops, and boundary flags matching the edge list.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let nv = self.vertices.len();
        if self.is_boundary.len() != nv {
            return Err(GeometryError::MeshInvariant("boundary flag length".into()));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(GeometryError::MeshInvariant(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            let a = self.triangle_area(t);
            if !(a > 0.0) {
                return Err(GeometryError::MeshInvariant(format!(
                    "triangle {t} has non-positive area {a:e}"
                )));
            }
        }
        // Each undirected edge is used by one triangle (boundary) or by two
        // with opposite directions (interior).
        let mut use_count: HashMap<(usize, usize), (u32, u32)> = HashMap::new();
        for tri in &self.triangles {
            for e in 0..3 {
                let (u, v) = (tri[e], tri[(e + 1) % 3]);
                let entry = use_count.entry((u.min(v), u.max(v))).or_insert((0, 0));
                if u < v {
                    entry.0 += 1;
                } else {
                    entry.1 += 1;
                }
            }
        }
        let mut boundary_set: HashMap<(usize, usize), ()> = HashMap::new();
        for &[u, v] in &self.boundary_edges {
            boundary_set.insert((u.min(v), u.max(v)), ());
        }
        let mut boundary_found = 0usize;
        for (&edge, &(fwd, rev)) in &use_count {
            match fwd + rev {
                1 => {
                    boundary_found += 1;
                    if !boundary_set.contains_key(&edge) {
                        return Err(GeometryError::MeshInvariant(format!(
                            "edge {edge:?} is on the boundary but missing from boundary_edges"
                        )));
                    }
                }
                2 => {
                    if fwd != 1 || rev != 1 {
                        return Err(GeometryError::MeshInvariant(format!(
                            "edge {edge:?} used twice with the same orientation"
                        )));
                    }
                }
                n => {
                    return Err(GeometryError::MeshInvariant(format!(
                        "edge {edge:?} used {n} times"
                    )));
                }
            }
        }
        if boundary_found != self.boundary_edges.len() {
            return Err(GeometryError::MeshInvariant(
                "boundary_edges does not match the set of once-used edges".into(),
            ));
        }
        let mut degree = vec![0u32; nv];
        for &[u, v] in &self.boundary_edges {
            degree[u] += 1;
            degree[v] += 1;
        }
        for v in 0..nv {
            let on_edge = degree[v] > 0;
            if on_edge != self.is_boundary[v] {
                return Err(GeometryError::MeshInvariant(format!(
                    "vertex {v}: boundary flag {} but boundary degree {}",
                    self.is_boundary[v], degree[v]
                )));
            }
            if on_edge && degree[v] != 2 {
                return Err(GeometryError::MeshInvariant(format!(
                    "boundary vertex {v} has degree {}",
                    degree[v]
                )));
            }
        }
        Ok(())
    }

    /// JSON export with `vertices`, `triangles`, `boundary_edges`.
    pub fn to_json(&self) -> String {
        let mut s = String::with_capacity(self.vertices.len() * 48);
        s.push_str("{\"vertices\":[");
        for (i, p) in self.vertices.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push('[');
            s.push_str(&fmt_f64(p.x));
            s.push(',');
            s.push_str(&fmt_f64(p.y));
            s.push(']');
        }
        s.push_str("],\"triangles\":[");
        for (i, t) in self.triangles.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&format!("[{},{},{}]", t[0], t[1], t[2]));
        }
        s.push_str("],\"boundary_edges\":[");
        for (i, e) in self.boundary_edges.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            s.push_str(&format!("[{},{}]", e[0], e[1]));
        }
        s.push_str("]}");
        s
    }
}

/// Ceiling that ignores float noise just above an integer, so that e.g.
/// `1.0/0.02` (which rounds to slightly above 50) still gives 50 rings.
fn ceil_robust(x: f64) -> usize {
    (x - 1e-9).ceil().max(1.0) as usize
}

/// Triangulate the annulus between two concentric vertex rings by merging the
/// two angular sequences. `inner`/`outer` are (first index, count) with vertices
/// equally spaced by angle starting at angle zero.
fn zip_rings(
    triangles: &mut Vec<[usize; 3]>,
    inner_start: usize,
    inner_count: usize,
    outer_start: usize,
    outer_count: usize,
) {
    let mut j = 0usize; // inner steps taken
    let mut k = 0usize; // outer steps taken
    while j < inner_count || k < outer_count {
        let advance_outer = if k >= outer_count {
            false
        } else if j >= inner_count {
            true
        } else {
            // Compare the next angles 2π(k+1)/outer_count vs 2π(j+1)/inner_count
            // exactly, in integers.
            (k + 1) * inner_count <= (j + 1) * outer_count
        };
        if advance_outer {
            let b0 = outer_start + (k % outer_count);
            let b1 = outer_start + ((k + 1) % outer_count);
            let a = inner_start + (j % inner_count);
            triangles.push([b0, b1, a]);
            k += 1;
        } else {
            let a0 = inner_start + (j % inner_count);
            let a1 = inner_start + ((j + 1) % inner_count);
            let b = outer_start + (k % outer_count);
            triangles.push([a1, a0, b]);
            j += 1;
        }
    }
}

/// Structured polar mesh of a disk.
///
/// Ring `i` of `n = ⌈radius/h⌉` sits at radius `radius·i/n` and carries `6i`
/// vertices, which keeps the triangles close to equilateral at every radius.
/// The mesh covers the inscribed `6n`-gon, so its area falls short of the disk
/// area by `O(h²)`.
pub fn mesh_disk(radius: f64, center: Point, h: f64) -> Result<TriMesh, GeometryError> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(GeometryError::InvalidDomain(format!("disk radius {radius} must be positive")));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(GeometryError::InvalidDomain(format!("mesh size {h} must be positive")));
    }
    let n = ceil_robust(radius / h);
    if n < 3 {
        return Err(GeometryError::ResolutionTooCoarse { radius, h, rings: n });
    }

    let mut vertices = Vec::with_capacity(1 + 3 * n * (n + 1));
    vertices.push(center);
    let mut ring_start = vec![0usize; n + 1];
    for i in 1..=n {
        ring_start[i] = vertices.len();
        let r = radius * (i as f64) / (n as f64);
        let m = 6 * i;
        for k in 0..m {
            let theta = 2.0 * PI * (k as f64) / (m as f64);
            vertices.push(Point::new(center.x + r * theta.cos(), center.y + r * theta.sin()));
        }
    }

    let mut triangles = Vec::with_capacity(6 * n * n);
    for k in 0..6 {
        triangles.push([0, ring_start[1] + k, ring_start[1] + (k + 1) % 6]);
    }
    for i in 2..=n {
        zip_rings(&mut triangles, ring_start[i - 1], 6 * (i - 1), ring_start[i], 6 * i);
    }

    let mut is_boundary = vec![false; vertices.len()];
    let m_outer = 6 * n;
    let outer = ring_start[n];
    let mut boundary_edges = Vec::with_capacity(m_outer);
    for k in 0..m_outer {
        is_boundary[outer + k] = true;
        boundary_edges.push([outer + k, outer + (k + 1) % m_outer]);
    }

    let mesh = TriMesh { vertices, triangles, is_boundary, boundary_edges, h };
    mesh.validate()?;
    Ok(mesh)
}

/// Resolution adjustment for push-forward meshing: how much finer the source
/// disk must be meshed so the image triangles stay near the target size.
///
/// `|f'|` is sampled on the circle `|z| = r` (where an analytic derivative
/// attains its maximum over the closed disk) and compared against its rms
/// value over the disk; the mesh is refined by the geometric mean of the two
/// ratios. A uniform derivative gives factor one, so linear maps reproduce the
/// plain disk mesh exactly.
fn derivative_grading(map: &ConformalMap, r: f64) -> Result<f64, GeometryError> {
    const ANGULAR: usize = 512;
    let mut sup: f64 = 0.0;
    for k in 0..ANGULAR {
        let theta = 2.0 * PI * (k as f64) / (ANGULAR as f64);
        let z = Complex64::from_polar(r, theta);
        sup = sup.max(map.derivative(z)?.norm());
    }
    if !(sup > 0.0) || !sup.is_finite() {
        return Err(GeometryError::DegenerateMap(
            "derivative vanishes or blows up on the sample circle".into(),
        ));
    }
    // Midpoint rule for ∫_{rD} |f'|² dA, the area of the image counted with
    // multiplicity.
    const RADIAL: usize = 64;
    const ANG2: usize = 128;
    let dr = r / (RADIAL as f64);
    let dth = 2.0 * PI / (ANG2 as f64);
    let mut integral = 0.0;
    for i in 0..RADIAL {
        let rho = (i as f64 + 0.5) * dr;
        let mut ring_sum = 0.0;
        for jj in 0..ANG2 {
            let theta = (jj as f64 + 0.5) * dth;
            let z = Complex64::from_polar(rho, theta);
            ring_sum += map.derivative(z)?.norm_sqr();
        }
        integral += ring_sum * rho * dr * dth;
    }
    let rms = (integral / (PI * r * r)).sqrt();
    let g = (sup / rms).sqrt();
    if !g.is_finite() {
        return Err(GeometryError::DegenerateMap("derivative grading is not finite".into()));
    }
    // Snap to one when the derivative is numerically constant so that linear
    // maps keep identical ring counts for every r.
    if (g - 1.0).abs() < 1e-9 {
        return Ok(1.0);
    }
    Ok(g.max(1.0))
}

/// Mesh the conformal image `f(r·D)` by pushing each vertex `z` of a unit-disk
/// mesh to `f(r z)`.
///
/// The source resolution is `h` divided by the derivative grading factor, so
/// strongly varying `|f'|` gets a proportionally finer source mesh. If any
/// image triangle has non-positive signed area the map is not univalent on
/// `r·D` at this resolution and `FoldedMesh` is returned.
pub fn mesh_map_image(map: &ConformalMap, r: f64, h: f64) -> Result<TriMesh, GeometryError> {
    if !(r > 0.0 && r < 1.0) {
        return Err(GeometryError::InvalidDomain(format!("map image radius {r} must lie in (0, 1)")));
    }
    map.check_analytic_on(r)?;
    let g = derivative_grading(map, r)?;
    let base = mesh_disk(1.0, Point::ORIGIN, h / g)?;

    let mut vertices = Vec::with_capacity(base.vertices.len());
    for p in &base.vertices {
        let z = Complex64::new(r * p.x, r * p.y);
        let w = map.eval(z)?;
        if !w.re.is_finite() || !w.im.is_finite() {
            return Err(GeometryError::DegenerateMap(format!("map not finite at z = {z}")));
        }
        vertices.push(Point::new(w.re, w.im));
    }
    let mesh = TriMesh {
        vertices,
        triangles: base.triangles,
        is_boundary: base.is_boundary,
        boundary_edges: base.boundary_edges,
        h,
    };
    for t in 0..mesh.triangles.len() {
        let a = mesh.triangle_area(t);
        if !(a > 0.0) {
            return Err(GeometryError::FoldedMesh { triangle: t, area: a });
        }
    }
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disk_mesh_shape_and_area() {
        let m = mesh_disk(2.0, Point::new(0.5, -1.0), 0.1).unwrap();
        // 20 rings of 6i vertices plus the center.
        assert_eq!(m.vertex_count(), 1 + 3 * 20 * 21);
        let exact = PI * 4.0;
        let deficit = (exact - m.area()) / exact;
        assert!(deficit > 0.0 && deficit < 0.003, "deficit {deficit}");
        m.validate().unwrap();
    }

    #[test]
    fn too_coarse_disk_is_rejected() {
        match mesh_disk(1.0, Point::ORIGIN, 0.9) {
            Err(GeometryError::ResolutionTooCoarse { rings, .. }) => assert_eq!(rings, 2),
            other => panic!("expected ResolutionTooCoarse, got {other:?}"),
        }
    }

    #[test]
    fn disk_area_deficit_quarters_when_h_halves() {
        let exact = PI;
        let d1 = exact - mesh_disk(1.0, Point::ORIGIN, 0.1).unwrap().area();
        let d2 = exact - mesh_disk(1.0, Point::ORIGIN, 0.05).unwrap().area();
        let ratio = d1 / d2;
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn moebius_image_boundary_lies_on_known_circle() {
        let f = ConformalMap::moebius(
            Complex64::new(-1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
        )
        .unwrap();
        let r = 0.5;
        let m = mesh_map_image(&f, r, 0.05).unwrap();
        // (1-z)/(1+z) maps |z| = r to the circle of radius 2r/(1-r²) centered
        // at (1+r²)/(1-r²).
        let rho = 2.0 * r / (1.0 - r * r);
        let cx = (1.0 + r * r) / (1.0 - r * r);
        for (v, &b) in m.vertices.iter().zip(&m.is_boundary) {
            if b {
                let d = ((v.x - cx).powi(2) + v.y.powi(2)).sqrt();
                assert!((d - rho).abs() < 1e-12, "boundary vertex off circle by {:e}", d - rho);
            }
        }
        let exact_area = PI * rho * rho;
        assert!(((exact_area - m.area()) / exact_area).abs() < 0.005);
    }

    #[test]
    fn identity_image_is_scaled_disk_mesh() {
        let f = ConformalMap::linear(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap();
        let r = 0.5;
        let img = mesh_map_image(&f, r, 0.1).unwrap();
        let reference = mesh_disk(1.0, Point::ORIGIN, 0.1).unwrap();
        assert_eq!(img.vertex_count(), reference.vertex_count());
        for (a, b) in img.vertices.iter().zip(&reference.vertices) {
            assert!((a.x - r * b.x).abs() < 1e-12 && (a.y - r * b.y).abs() < 1e-12);
        }
    }

    #[test]
    fn folding_map_is_detected() {
        // z + z² has a critical point at z = -1/2, inside the 0.9 disk, so the
        // pushed mesh must fold.
        let f = ConformalMap::power_series(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
        ])
        .unwrap();
        match mesh_map_image(&f, 0.9, 0.06) {
            Err(GeometryError::FoldedMesh { .. }) => {}
            other => panic!("expected FoldedMesh, got {other:?}"),
        }
    }

    #[test]
    fn moebius_pole_inside_requested_disk_is_rejected() {
        // Pole at z = -0.5.
        let f = ConformalMap::moebius(
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(2.0, 0.0),
            Complex64::new(1.0, 0.0),
        )
        .unwrap();
        assert!(matches!(mesh_map_image(&f, 0.9, 0.05), Err(GeometryError::PoleHit)));
    }
}
