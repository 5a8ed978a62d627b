//! Closed-form reference values used to validate the solver, each computed
//! from first principles at first use rather than pasted in as a decimal.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::geometry::DomainSpec;

/// J₀ by its power series Σ (−1)^k (x²/4)^k / (k!)², accurate for the
/// moderate arguments needed here.
pub fn bessel_j0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= -q / ((k * k) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-3) {
            break;
        }
    }
    sum
}

/// First positive zero of J₀ (≈ 2.4048), found by bisection on [2, 3].
pub fn bessel_j0_first_zero() -> f64 {
    static ZERO: OnceLock<f64> = OnceLock::new();
    *ZERO.get_or_init(|| {
        let (mut lo, mut hi) = (2.0_f64, 3.0_f64);
        debug_assert!(bessel_j0(lo) > 0.0 && bessel_j0(hi) < 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if bessel_j0(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-16 {
                break;
            }
        }
        0.5 * (lo + hi)
    })
}

/// Torsional rigidity of the unit square: P = ∫|∇v|² for Δv = −2, v|∂ = 0,
/// by the classical single-series solution
/// P = 1/3 − (64/π⁵) Σ_{n odd} tanh(nπ/2)/n⁵ ≈ 0.14058.
pub fn square_torsional_rigidity() -> f64 {
    static P: OnceLock<f64> = OnceLock::new();
    *P.get_or_init(|| {
        let mut sum = 0.0;
        let mut n = 1u32;
        while n < 400 {
            let nf = n as f64;
            sum += (nf * PI / 2.0).tanh() / nf.powi(5);
            n += 2;
        }
        1.0 / 3.0 - 64.0 / PI.powi(5) * sum
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-12
}

/// Closed-form C_p for the unit disk, where one exists.
pub fn disk_cp(p: f64) -> Option<f64> {
    if close(p, 2.0) {
        // First Dirichlet eigenvalue of the unit disk.
        let j01 = bessel_j0_first_zero();
        Some(j01 * j01)
    } else if close(p, 1.0) {
        // C₁ = 2/∫v with the exact torsion profile v = (1−r²)/2, ∫v = π/4.
        Some(2.0 / (PI / 4.0))
    } else {
        None
    }
}

/// Closed-form C_p for the unit square, where one exists.
pub fn square_cp(p: f64) -> Option<f64> {
    if close(p, 2.0) {
        // Separation of variables: λ₁ = π²(1² + 1²).
        Some(2.0 * PI * PI)
    } else if close(p, 1.0) {
        Some(4.0 / square_torsional_rigidity())
    } else {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceDomain {
    UnitDisk,
    UnitSquare,
}

pub fn reference_value(domain: ReferenceDomain, p: f64) -> Option<f64> {
    match domain {
        ReferenceDomain::UnitDisk => disk_cp(p),
        ReferenceDomain::UnitSquare => square_cp(p),
    }
}

/// Catalogued closed form for a domain spec, if this exact shape has one.
/// Disks of radius 1 qualify wherever they are centered (the constant is
/// translation invariant); the unit square is recognized up to a cyclic
/// rotation of its vertex list.
pub fn catalogued_reference(spec: &DomainSpec, p: f64) -> Option<f64> {
    match spec {
        DomainSpec::Disk { radius, .. } if close(*radius, 1.0) => disk_cp(p),
        DomainSpec::Polygon { vertices } if is_unit_square(vertices) => square_cp(p),
        _ => None,
    }
}

fn is_unit_square(vertices: &[[f64; 2]]) -> bool {
    if vertices.len() != 4 {
        return false;
    }
    let want = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    (0..4).any(|shift| {
        (0..4).all(|i| {
            let v = vertices[(i + shift) % 4];
            close(v[0], want[i][0]) && close(v[1], want[i][1])
        })
    })
}
