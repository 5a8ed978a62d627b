//! Piecewise-linear finite elements on a [`TriMesh`]: Dirichlet energy,
//! power-law integrals, weak loads, boundary flux, and the interior stiffness
//! system with a deterministic conjugate-gradient solve.

pub mod quadrature;
pub mod sparse;

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{Point, TriMesh};
use quadrature::QuadratureRule;
use sparse::{pcg, CgSolution, CsrMatrix};

#[derive(Debug, Error)]
pub enum FemError {
    #[error("mesh has no interior vertices; refine the resolution")]
    NoInteriorVertices,
    #[error("exponent p = {p} is out of range: the functional requires p >= 1")]
    InvalidExponent { p: f64 },
    #[error("conjugate gradient stalled after {iterations} iterations (relative residual {residual:.3e})")]
    CgStalled { iterations: usize, residual: f64 },
    #[error("value array has length {got} but the mesh has {want} vertices")]
    SizeMismatch { got: usize, want: usize },
}

pub const DEFAULT_CG_TOL: f64 = 1e-10;

/// Nodal values of a piecewise-linear function on a mesh.
#[derive(Clone)]
pub struct ScalarField {
    pub mesh: Arc<TriMesh>,
    pub values: Vec<f64>,
    zero_boundary: bool,
}

impl ScalarField {
    pub fn new(mesh: Arc<TriMesh>, values: Vec<f64>) -> Result<Self, FemError> {
        if values.len() != mesh.vertex_count() {
            return Err(FemError::SizeMismatch {
                got: values.len(),
                want: mesh.vertex_count(),
            });
        }
        let zero_boundary = mesh
            .is_boundary
            .iter()
            .zip(&values)
            .all(|(&b, &v)| !b || v == 0.0);
        Ok(ScalarField { mesh, values, zero_boundary })
    }

    /// Nodal interpolant of a pointwise function.
    pub fn interpolate(mesh: Arc<TriMesh>, f: impl Fn(Point) -> f64) -> Self {
        let values: Vec<f64> = mesh.vertices.iter().map(|&p| f(p)).collect();
        ScalarField::new(mesh, values).expect("length matches by construction")
    }

    /// True when every boundary vertex carries the value 0 exactly.
    pub fn vanishes_on_boundary(&self) -> bool {
        self.zero_boundary
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Constant gradient of the linear interpolant on triangle `t`.
    pub fn triangle_gradient(&self, t: usize) -> (f64, f64) {
        let [a, b, c] = self.mesh.triangles[t];
        let (pa, pb, pc) = (
            self.mesh.vertices[a],
            self.mesh.vertices[b],
            self.mesh.vertices[c],
        );
        let two_area = (pb.x - pa.x) * (pc.y - pa.y) - (pc.x - pa.x) * (pb.y - pa.y);
        let (ua, ub, uc) = (self.values[a], self.values[b], self.values[c]);
        let gx = (ua * (pb.y - pc.y) + ub * (pc.y - pa.y) + uc * (pa.y - pb.y)) / two_area;
        let gy = (ua * (pc.x - pb.x) + ub * (pa.x - pc.x) + uc * (pb.x - pa.x)) / two_area;
        (gx, gy)
    }
}

/// Element stiffness matrix: `A ∇λᵢ·∇λⱼ` for the P1 hat functions of the
/// triangle `(a, b, c)`.
pub(crate) fn element_stiffness(a: Point, b: Point, c: Point) -> [[f64; 3]; 3] {
    let two_area = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    let grads = [
        (b.y - c.y, c.x - b.x),
        (c.y - a.y, a.x - c.x),
        (a.y - b.y, b.x - a.x),
    ];
    let scale = 1.0 / (2.0 * two_area); // (1/(2A)·1/(2A))·A = 1/(4A) and 2A is at hand
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = scale * (grads[i].0 * grads[j].0 + grads[i].1 * grads[j].1);
        }
    }
    k
}

/// Interior (non-boundary) vertex ids in increasing global order — the
/// canonical degree-of-freedom numbering shared by the stiffness operator and
/// the weak load vectors.
pub fn interior_vertices(mesh: &TriMesh) -> Vec<usize> {
    (0..mesh.vertex_count())
        .filter(|&v| !mesh.is_boundary[v])
        .collect()
}

/// P1 stiffness matrix restricted to interior vertices (homogeneous Dirichlet
/// boundary conditions imposed by elimination).
pub struct StiffnessOperator {
    pub mesh: Arc<TriMesh>,
    matrix: CsrMatrix,
    interior_to_global: Vec<usize>,
}

pub fn assemble_stiffness(mesh: &Arc<TriMesh>) -> Result<StiffnessOperator, FemError> {
    let interior_to_global = interior_vertices(mesh);
    if interior_to_global.is_empty() {
        return Err(FemError::NoInteriorVertices);
    }
    let mut global_to_interior = vec![None; mesh.vertex_count()];
    for (i, &g) in interior_to_global.iter().enumerate() {
        global_to_interior[g] = Some(i);
    }
    let mut triplets = Vec::with_capacity(9 * mesh.triangle_count());
    for tri in &mesh.triangles {
        let k = element_stiffness(
            mesh.vertices[tri[0]],
            mesh.vertices[tri[1]],
            mesh.vertices[tri[2]],
        );
        for i in 0..3 {
            let Some(r) = global_to_interior[tri[i]] else { continue };
            for j in 0..3 {
                let Some(c) = global_to_interior[tri[j]] else { continue };
                triplets.push((r, c, k[i][j]));
            }
        }
    }
    let matrix = CsrMatrix::from_triplets(interior_to_global.len(), triplets);
    Ok(StiffnessOperator { mesh: Arc::clone(mesh), matrix, interior_to_global })
}

impl StiffnessOperator {
    pub fn interior_count(&self) -> usize {
        self.interior_to_global.len()
    }

    pub fn interior_to_global(&self) -> &[usize] {
        &self.interior_to_global
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; x.len()];
        self.matrix.matvec(x, &mut y);
        y
    }

    /// xᵀKx over the interior subspace.
    pub fn energy_product(&self, x: &[f64]) -> f64 {
        self.apply(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Interior vector → full field with zeros on the boundary.
    pub fn lift(&self, interior: &[f64]) -> ScalarField {
        debug_assert_eq!(interior.len(), self.interior_count());
        let mut values = vec![0.0; self.mesh.vertex_count()];
        for (i, &g) in self.interior_to_global.iter().enumerate() {
            values[g] = interior[i];
        }
        ScalarField::new(Arc::clone(&self.mesh), values).expect("sized by construction")
    }

    /// Full field → interior coefficient vector.
    pub fn restrict(&self, field: &ScalarField) -> Vec<f64> {
        self.interior_to_global.iter().map(|&g| field.values[g]).collect()
    }
}

/// ∫ |∇u|² over the mesh, summed triangle by triangle.
pub fn dirichlet_energy(u: &ScalarField) -> f64 {
    let mut acc = 0.0;
    for t in 0..u.mesh.triangle_count() {
        let (gx, gy) = u.triangle_gradient(t);
        acc += (gx * gx + gy * gy) * u.mesh.triangle_area(t);
    }
    acc
}

#[inline]
fn int_exponent(q: f64) -> Option<u32> {
    if q >= 0.0 && q <= 4.0 && q == q.round() {
        Some(q as u32)
    } else {
        None
    }
}

#[inline]
fn pow_clamped(v: f64, q: f64, qi: Option<u32>) -> f64 {
    let v = v.max(0.0);
    match qi {
        Some(0) => 1.0,
        Some(1) => v,
        Some(2) => v * v,
        Some(3) => v * v * v,
        Some(4) => {
            let s = v * v;
            s * s
        }
        _ => v.powf(q),
    }
}

/// max(v, 0)^q with 0⁰ = 1; the common small integer exponents take exact
/// multiplication paths.
#[inline]
pub fn clamped_power(v: f64, q: f64) -> f64 {
    pow_clamped(v, q, int_exponent(q))
}

/// ∫ max(u, 0)^q by the degree-4 rule, for any q ≥ 0 (with 0⁰ = 1).
pub fn power_integral(u: &ScalarField, q: f64) -> f64 {
    debug_assert!(q >= 0.0);
    let rule = QuadratureRule::degree4();
    let qi = int_exponent(q);
    let mut acc = 0.0;
    for t in 0..u.mesh.triangle_count() {
        let [a, b, c] = u.mesh.triangles[t];
        let (ua, ub, uc) = (u.values[a], u.values[b], u.values[c]);
        let mut local = 0.0;
        for (pt, w) in rule.points.iter().zip(&rule.weights) {
            let val = pt[0] * ua + pt[1] * ub + pt[2] * uc;
            local += w * pow_clamped(val, q, qi);
        }
        acc += local * u.mesh.triangle_area(t);
    }
    acc
}

/// ∫ max(u, 0)^p, the denominator integrand of the Sobolev quotient.
pub fn integrate_power(u: &ScalarField, p: f64) -> Result<f64, FemError> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(FemError::InvalidExponent { p });
    }
    Ok(power_integral(u, p))
}

/// Weak form of u^{p−1} against every interior hat function:
/// entry i is ∫ max(u, 0)^{p−1} λᵢ. For p = 1 the integrand is the constant 1.
pub fn weak_power_load(u: &ScalarField, p: f64) -> Result<Vec<f64>, FemError> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(FemError::InvalidExponent { p });
    }
    let q = p - 1.0;
    let qi = int_exponent(q);
    let rule = QuadratureRule::degree4();
    let mesh = &u.mesh;
    let mut global_load = vec![0.0; mesh.vertex_count()];
    for t in 0..mesh.triangle_count() {
        let [a, b, c] = mesh.triangles[t];
        let (ua, ub, uc) = (u.values[a], u.values[b], u.values[c]);
        let area = mesh.triangle_area(t);
        let mut local = [0.0; 3];
        for (pt, w) in rule.points.iter().zip(&rule.weights) {
            let val = pt[0] * ua + pt[1] * ub + pt[2] * uc;
            let g = w * pow_clamped(val, q, qi);
            local[0] += g * pt[0];
            local[1] += g * pt[1];
            local[2] += g * pt[2];
        }
        global_load[a] += local[0] * area;
        global_load[b] += local[1] * area;
        global_load[c] += local[2] * area;
    }
    Ok(interior_vertices(mesh).iter().map(|&g| global_load[g]).collect())
}

/// ∫_{∂D} |∇u| ds for a field vanishing on the boundary: on each boundary edge
/// the gradient of the adjacent triangle is constant, so the line integral is
/// |∇u|·(edge length).
pub fn boundary_flux(u: &ScalarField) -> f64 {
    let mesh = &u.mesh;
    let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
    for &[a, b] in &mesh.boundary_edges {
        owner.insert((a.min(b), a.max(b)), usize::MAX);
    }
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for e in 0..3 {
            let (x, y) = (tri[e], tri[(e + 1) % 3]);
            if let Some(slot) = owner.get_mut(&(x.min(y), x.max(y))) {
                *slot = t;
            }
        }
    }
    let mut acc = 0.0;
    for &[a, b] in &mesh.boundary_edges {
        let t = owner[&(a.min(b), a.max(b))];
        debug_assert_ne!(t, usize::MAX, "boundary edge without an owning triangle");
        let (gx, gy) = u.triangle_gradient(t);
        acc += (gx * gx + gy * gy).sqrt() * mesh.vertices[a].dist(mesh.vertices[b]);
    }
    acc
}

/// Conjugate-gradient solve of `K x = load` with optional warm start.
pub fn solve_spd_with(
    op: &StiffnessOperator,
    load: &[f64],
    tol: f64,
    x0: Option<&[f64]>,
) -> Result<CgSolution, FemError> {
    if load.len() != op.interior_count() {
        return Err(FemError::SizeMismatch { got: load.len(), want: op.interior_count() });
    }
    pcg(&op.matrix, load, x0, tol)
}

pub fn solve_spd(op: &StiffnessOperator, load: &[f64], tol: f64) -> Result<Vec<f64>, FemError> {
    solve_spd_with(op, load, tol, None).map(|s| s.x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_mesh, mesh_disk, DomainSpec};

    fn disk(h: f64) -> Arc<TriMesh> {
        Arc::new(mesh_disk(1.0, Point::ORIGIN, h).unwrap())
    }

    fn square(h: f64) -> Arc<TriMesh> {
        Arc::new(build_mesh(&DomainSpec::unit_square(), h).unwrap())
    }

    fn torsion_profile(mesh: Arc<TriMesh>) -> ScalarField {
        ScalarField::interpolate(mesh, |p| (1.0 - p.x * p.x - p.y * p.y) / 2.0)
    }

    #[test]
    fn reference_element_matrix() {
        let k = element_stiffness(Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0));
        let want = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - want[i][j]).abs() < 1e-15, "k[{i}][{j}] = {}", k[i][j]);
            }
        }
    }

    #[test]
    fn energy_of_linear_field_is_exact() {
        let mesh = square(0.1);
        let u = ScalarField::interpolate(Arc::clone(&mesh), |p| p.x);
        assert!((dirichlet_energy(&u) - 1.0).abs() < 1e-12);
        let c = ScalarField::interpolate(mesh, |_| 3.7);
        assert!(dirichlet_energy(&c) == 0.0);
    }

    #[test]
    fn stiffness_matrix_is_symmetric() {
        let mesh = disk(0.25);
        let op = assemble_stiffness(&mesh).unwrap();
        let m = op.matrix();
        for r in 0..m.n {
            for k in m.row_ptr[r]..m.row_ptr[r + 1] {
                let c = m.col_idx[k];
                let v = m.values[k];
                assert!((v - m.get(c, r)).abs() <= 1e-14 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn energy_matches_quadratic_form_for_dirichlet_fields() {
        let mesh = disk(0.1);
        let op = assemble_stiffness(&mesh).unwrap();
        let u = torsion_profile(Arc::clone(&mesh));
        // The interpolated profile vanishes on the polygonal boundary only
        // approximately; project to an exact Dirichlet field first.
        let mut vals = u.values.clone();
        for (v, &b) in vals.iter_mut().zip(&mesh.is_boundary) {
            if b {
                *v = 0.0;
            }
        }
        let w = ScalarField::new(Arc::clone(&mesh), vals).unwrap();
        assert!(w.vanishes_on_boundary());
        let x = op.restrict(&w);
        let quad = op.energy_product(&x);
        let direct = dirichlet_energy(&w);
        assert!((quad - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn torsion_profile_energy_matches_radial_integral() {
        let u = torsion_profile(disk(0.02));
        let exact = std::f64::consts::PI / 2.0;
        assert!(((dirichlet_energy(&u) - exact) / exact).abs() < 0.005);
    }

    #[test]
    fn power_integrals_match_radial_integrals() {
        let mesh = disk(0.02);
        let one = ScalarField::interpolate(Arc::clone(&mesh), |_| 1.0);
        assert!((integrate_power(&one, 1.0).unwrap() - mesh.area()).abs() < 1e-12);
        let u = torsion_profile(mesh);
        let pi = std::f64::consts::PI;
        let i1 = integrate_power(&u, 1.0).unwrap();
        assert!(((i1 - pi / 4.0) / (pi / 4.0)).abs() < 0.005, "p=1: {i1}");
        let i2 = integrate_power(&u, 2.0).unwrap();
        assert!(((i2 - pi / 12.0) / (pi / 12.0)).abs() < 0.005, "p=2: {i2}");
        // ∫ ((1−r²)/2)^{1/2} dA = π√2/3.
        let ih = power_integral(&u, 0.5);
        let exact = pi * 2.0_f64.sqrt() / 3.0;
        assert!(((ih - exact) / exact).abs() < 0.01, "q=0.5: {ih}");
    }

    #[test]
    fn invalid_exponents_are_rejected() {
        let u = torsion_profile(disk(0.2));
        assert!(matches!(
            integrate_power(&u, 0.5),
            Err(FemError::InvalidExponent { .. })
        ));
        assert!(matches!(
            weak_power_load(&u, 0.99),
            Err(FemError::InvalidExponent { .. })
        ));
        assert!(matches!(
            integrate_power(&u, f64::NAN),
            Err(FemError::InvalidExponent { .. })
        ));
    }

    #[test]
    fn power_integral_is_homogeneous() {
        let mesh = disk(0.1);
        let u = torsion_profile(Arc::clone(&mesh));
        for &p in &[1.0, 1.5, 2.0, 3.0] {
            let base = integrate_power(&u, p).unwrap();
            let scaled = ScalarField::new(
                Arc::clone(&mesh),
                u.values.iter().map(|&v| 2.5 * v).collect(),
            )
            .unwrap();
            let got = integrate_power(&scaled, p).unwrap();
            let want = 2.5_f64.powf(p) * base;
            assert!(((got - want) / want).abs() <= 1e-12, "p = {p}");
        }
    }

    #[test]
    fn quadrature_is_exact_for_low_degree_products() {
        // For p ∈ {1, 2, 3, 4} and a field whose p-th power has degree ≤ 4,
        // the integral must not depend on the mesh: compare two resolutions
        // of the unit square (both cover it exactly).
        let coarse = square(0.34);
        let fine = square(0.11);
        for &p in &[1.0_f64, 2.0, 3.0, 4.0] {
            let f = |pt: Point| 0.3 + 0.5 * pt.x + 0.2 * pt.y;
            let a = integrate_power(&ScalarField::interpolate(Arc::clone(&coarse), f), p).unwrap();
            let b = integrate_power(&ScalarField::interpolate(Arc::clone(&fine), f), p).unwrap();
            assert!(((a - b) / b).abs() <= 1e-12, "p = {p}: {a} vs {b}");
        }
    }

    #[test]
    fn weak_load_for_p1_sums_to_interior_basis_mass() {
        let mesh = disk(0.1);
        let u = ScalarField::interpolate(Arc::clone(&mesh), |_| 0.0);
        let load = weak_power_load(&u, 1.0).unwrap();
        let total: f64 = load.iter().sum();
        // ∫ λᵢ = (area of support)/3; summing over interior vertices counts
        // each triangle once per interior corner.
        let mut want = 0.0;
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let interior_corners =
                tri.iter().filter(|&&v| !mesh.is_boundary[v]).count() as f64;
            want += mesh.triangle_area(t) / 3.0 * interior_corners;
        }
        assert!(((total - want) / want).abs() <= 1e-12);
    }

    #[test]
    fn weak_load_for_p2_is_the_mass_matrix_action() {
        let mesh = square(0.17);
        let u = ScalarField::interpolate(Arc::clone(&mesh), |p| 0.1 + p.x + 0.5 * p.y);
        let load = weak_power_load(&u, 2.0).unwrap();
        // Exact P1 mass action: local matrix (A/12)·[[2,1,1],[1,2,1],[1,1,2]].
        let mut exact = vec![0.0; mesh.vertex_count()];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let a = mesh.triangle_area(t);
            for i in 0..3 {
                for j in 0..3 {
                    let w = if i == j { 2.0 } else { 1.0 };
                    exact[tri[i]] += a / 12.0 * w * u.values[tri[j]];
                }
            }
        }
        for (i, &g) in interior_vertices(&mesh).iter().enumerate() {
            assert!((load[i] - exact[g]).abs() <= 1e-13 * exact[g].abs().max(1e-3));
        }
    }

    #[test]
    fn cg_recovers_prescribed_interior_vector() {
        let mesh = disk(0.1);
        let op = assemble_stiffness(&mesh).unwrap();
        let w: Vec<f64> = (0..op.interior_count())
            .map(|i| (0.37 * i as f64).sin())
            .collect();
        let load = op.apply(&w);
        let x = solve_spd(&op, &load, 1e-12).unwrap();
        let num: f64 = x.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        let den: f64 = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(num <= 1e-8 * den, "relative error {}", num / den);
    }

    #[test]
    fn poisson_solve_matches_torsion_function() {
        // Δv = −1 on the unit disk has v = (1 − |x|²)/4.
        let mesh = disk(0.02);
        let op = assemble_stiffness(&mesh).unwrap();
        let zero = ScalarField::interpolate(Arc::clone(&mesh), |_| 0.0);
        let load = weak_power_load(&zero, 1.0).unwrap();
        let x = solve_spd(&op, &load, DEFAULT_CG_TOL).unwrap();
        let v = op.lift(&x);
        let mut worst = 0.0_f64;
        for (i, p) in mesh.vertices.iter().enumerate() {
            let exact = (1.0 - p.x * p.x - p.y * p.y) / 4.0;
            worst = worst.max((v.values[i] - exact).abs());
        }
        assert!(worst <= 0.01 * 0.25, "max nodal error {worst}");
    }

    #[test]
    fn boundary_flux_of_torsion_profile() {
        let u = torsion_profile(disk(0.01));
        let flux = boundary_flux(&u);
        let exact = 2.0 * std::f64::consts::PI;
        assert!(((flux - exact) / exact).abs() < 0.01, "flux {flux}");
    }

    #[test]
    fn boundary_flux_edge_cases() {
        let mesh = disk(0.2);
        let zero = ScalarField::interpolate(Arc::clone(&mesh), |_| 0.0);
        assert_eq!(boundary_flux(&zero), 0.0);
        let u = torsion_profile(Arc::clone(&mesh));
        let doubled = ScalarField::new(
            Arc::clone(&mesh),
            u.values.iter().map(|&v| 2.0 * v).collect(),
        )
        .unwrap();
        // Doubling is exact in floating point, so the flux doubles exactly.
        assert_eq!(boundary_flux(&doubled), 2.0 * boundary_flux(&u));
    }

    #[test]
    fn meshes_without_interior_vertices_are_rejected() {
        // A triangle at its coarsest subdivision has boundary vertices only.
        let tri = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let mesh = Arc::new(
            build_mesh(&DomainSpec::Polygon { vertices: tri }, 2.0).unwrap(),
        );
        assert!(matches!(
            assemble_stiffness(&mesh),
            Err(FemError::NoInteriorVertices)
        ));
    }
}
