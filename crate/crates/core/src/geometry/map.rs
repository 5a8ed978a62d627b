use num_complex::Complex64;

use super::GeometryError;

/// Absolute tolerance below which a Möbius denominator counts as a pole hit.
const POLE_TOL: f64 = 1e-14;

/// A holomorphic map of the unit disk, used to build image domains `f(r·D)`.
#[derive(Clone, Debug, PartialEq)]
pub enum ConformalMap {
    /// `f(z) = offset + Σ_{k≥1} coeffs[k-1] z^k`; at least one coefficient nonzero.
    PowerSeries {
        coeffs: Vec<Complex64>,
        offset: Complex64,
    },
    /// `f(z) = (a z + b) / (c z + d)` with `ad - bc ≠ 0`.
    Moebius {
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
    },
    /// `f(z) = a z + b` with `a ≠ 0`.
    Linear { a: Complex64, b: Complex64 },
}

impl ConformalMap {
    /// Polynomial map with `f(0) = 0`; `coeffs[k-1]` multiplies `z^k`.
    pub fn power_series(coeffs: Vec<Complex64>) -> Result<Self, GeometryError> {
        Self::power_series_with_offset(coeffs, Complex64::new(0.0, 0.0))
    }

    /// Polynomial map with an additive constant term.
    pub fn power_series_with_offset(
        coeffs: Vec<Complex64>,
        offset: Complex64,
    ) -> Result<Self, GeometryError> {
        if !coeffs.iter().any(|a| a.norm_sqr() > 0.0) {
            return Err(GeometryError::DegenerateMap(
                "power series needs a nonzero coefficient".into(),
            ));
        }
        if coeffs.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(GeometryError::DegenerateMap(
                "power series coefficients must be finite".into(),
            ));
        }
        Ok(ConformalMap::PowerSeries { coeffs, offset })
    }

    pub fn moebius(
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
    ) -> Result<Self, GeometryError> {
        let det = a * d - b * c;
        if det.norm_sqr() == 0.0 {
            return Err(GeometryError::DegenerateMap("ad - bc must be nonzero".into()));
        }
        Ok(ConformalMap::Moebius { a, b, c, d })
    }

    pub fn linear(a: Complex64, b: Complex64) -> Result<Self, GeometryError> {
        if a.norm_sqr() == 0.0 {
            return Err(GeometryError::DegenerateMap("linear coefficient must be nonzero".into()));
        }
        Ok(ConformalMap::Linear { a, b })
    }

    /// Evaluate `f(z)`. Errors only for Möbius maps evaluated at the pole.
    pub fn eval(&self, z: Complex64) -> Result<Complex64, GeometryError> {
        match self {
            ConformalMap::PowerSeries { coeffs, offset } => {
                // Horner on Σ a_k z^k = z·(a_1 + z·(a_2 + ...)).
                let mut acc = Complex64::new(0.0, 0.0);
                for a in coeffs.iter().rev() {
                    acc = (acc + a) * z;
                }
                Ok(acc + offset)
            }
            ConformalMap::Moebius { a, b, c, d } => {
                let den = c * z + d;
                if den.norm() <= POLE_TOL {
                    return Err(GeometryError::PoleHit);
                }
                Ok((a * z + b) / den)
            }
            ConformalMap::Linear { a, b } => Ok(a * z + b),
        }
    }

    /// Evaluate `f'(z)` by exact differentiation of the representation.
    pub fn derivative(&self, z: Complex64) -> Result<Complex64, GeometryError> {
        match self {
            ConformalMap::PowerSeries { coeffs, .. } => {
                // f'(z) = Σ k a_k z^{k-1}, again by Horner.
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, a) in coeffs.iter().enumerate().rev() {
                    let ka = a * ((k + 1) as f64);
                    acc = acc * z + ka;
                }
                Ok(acc)
            }
            ConformalMap::Moebius { a, b, c, d } => {
                let den = c * z + d;
                if den.norm() <= POLE_TOL {
                    return Err(GeometryError::PoleHit);
                }
                Ok((a * d - b * c) / (den * den))
            }
            ConformalMap::Linear { a, .. } => Ok(*a),
        }
    }

    /// The pole of a Möbius map, if it has one at finite distance.
    pub fn pole(&self) -> Option<Complex64> {
        match self {
            ConformalMap::Moebius { c, d, .. } if c.norm_sqr() > 0.0 => Some(-d / c),
            _ => None,
        }
    }

    /// Checks that the map is holomorphic on the closed disk `|z| <= r`.
    pub fn check_analytic_on(&self, r: f64) -> Result<(), GeometryError> {
        if let Some(pole) = self.pole() {
            if pole.norm() <= r * (1.0 + 1e-12) {
                return Err(GeometryError::PoleHit);
            }
        }
        Ok(())
    }
}
