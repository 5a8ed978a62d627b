/// Quadrature rule on the reference triangle in barycentric coordinates.
/// Weights are normalized to sum to one, so an integral over a physical
/// triangle is `area · Σ wᵢ f(xᵢ)`.
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    /// Symmetric 6-point rule, exact for polynomials of total degree ≤ 4.
    pub fn degree4() -> &'static QuadratureRule {
        use std::sync::OnceLock;
        static RULE: OnceLock<QuadratureRule> = OnceLock::new();
        RULE.get_or_init(|| {
            let a1 = 0.445948490915965;
            let w1 = 0.223381589678011;
            let a2 = 0.091576213509771;
            // The two orbit weights sum to 1/3 exactly; deriving w2 from w1
            // makes the total exactly 1 in floating point.
            let w2 = 1.0 / 3.0 - w1;
            let mut points = Vec::with_capacity(6);
            let mut weights = Vec::with_capacity(6);
            for &(a, w) in &[(a1, w1), (a2, w2)] {
                let b = 1.0 - 2.0 * a;
                points.push([b, a, a]);
                points.push([a, b, a]);
                points.push([a, a, b]);
                weights.push(w);
                weights.push(w);
                weights.push(w);
            }
            QuadratureRule { points, weights, degree: 4 }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// ∫ over the reference triangle {x ≥ 0, y ≥ 0, x + y ≤ 1} of x^m y^n.
    fn exact_monomial(m: u32, n: u32) -> f64 {
        let fact = |k: u32| (1..=k).map(|v| v as f64).product::<f64>().max(1.0);
        fact(m) * fact(n) / fact(m + n + 2)
    }

    #[test]
    fn weights_are_positive_and_sum_to_one() {
        let rule = QuadratureRule::degree4();
        assert!(rule.weights.iter().all(|&w| w > 0.0));
        let sum: f64 = rule.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-15, "weight sum {sum}");
        for pt in &rule.points {
            assert!(((pt[0] + pt[1] + pt[2]) - 1.0).abs() < 1e-15);
            assert!(pt.iter().all(|&c| c > 0.0));
        }
    }

    #[test]
    fn integrates_quartics_exactly() {
        let rule = QuadratureRule::degree4();
        let area = 0.5;
        for m in 0..=4u32 {
            for n in 0..=(4 - m) {
                // Reference triangle vertices (0,0), (1,0), (0,1):
                // x = λ₂, y = λ₃.
                let approx: f64 = area
                    * rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(pt, w)| w * pt[1].powi(m as i32) * pt[2].powi(n as i32))
                        .sum::<f64>();
                let exact = exact_monomial(m, n);
                assert!(
                    (approx - exact).abs() <= 1e-14 * exact.max(1.0),
                    "x^{m} y^{n}: got {approx}, want {exact}"
                );
            }
        }
    }
}
