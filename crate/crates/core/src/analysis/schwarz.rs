//! Radius sweep for the domain-functional monotonicity statement: for a
//! holomorphic map f of the unit disk, the normalized constant
//! Φ(r) = C_p(f(r𝔻)) / C_p(r𝔻) is non-increasing in r (constant exactly
//! when f is linear), and 1/Φ is convex in log r when p ≤ 2.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::analysis::AnalysisError;
use crate::geometry::{mesh_disk, mesh_map_image, ConformalMap, Point};
use crate::solver::{minimize_quotient, SolverConfig};

/// Measured data for a single sweep radius.
#[derive(Clone, Copy, Debug)]
pub struct SweepRow {
    pub r: f64,
    pub log_r: f64,
    /// C_p of the comparison disk r𝔻 = r^{−4/p} · C_p(𝔻).
    pub cp_scaled_disk: f64,
    /// C_p of the image domain f(r𝔻).
    pub cp_image: f64,
    /// Φ(r) = cp_image / cp_scaled_disk.
    pub phi_ratio: f64,
    pub reciprocal: f64,
}

/// A radius whose solve could not contribute a row, and why.
#[derive(Clone, Debug)]
pub struct SkippedRow {
    pub r: f64,
    pub reason: String,
}

#[derive(Clone, Copy, Debug)]
pub struct SweepVerdicts {
    /// Φ(r_{i+1}) < Φ(r_i)·(1 + ε) across the sweep.
    pub is_monotone_decreasing: bool,
    /// max |Φ − mean Φ| / mean Φ below ε (the linear-map case).
    pub is_constant: bool,
    /// Second differences of 1/Φ against log r are nonnegative up to
    /// tolerance. Populated only for p ≤ 2; the statement is conditional
    /// on that range and no verdict is rendered outside it.
    pub reciprocal_logconvex: Option<bool>,
}

impl SweepVerdicts {
    /// True when every applicable verdict holds.
    pub fn all_pass(&self) -> bool {
        (self.is_monotone_decreasing || self.is_constant)
            && self.reciprocal_logconvex.unwrap_or(true)
    }
}

#[derive(Clone, Debug)]
pub struct SchwarzSweep {
    pub p: f64,
    pub h: f64,
    pub map: ConformalMap,
    pub cp_unit_disk: f64,
    pub rows: Vec<SweepRow>,
    pub skipped: Vec<SkippedRow>,
    pub verdicts: SweepVerdicts,
    /// Richardson extrapolation of Φ to r → 0 from the two smallest valid
    /// radii (Φ is even in r, so the extrapolation is in r²).
    pub extrapolated_limit: Option<f64>,
    /// The r → 0 value the derivative bound predicts: |f′(0)|^{−4/p}.
    pub expected_limit: Option<f64>,
}

pub const EPS_MONOTONE: f64 = 1e-3;
pub const EPS_CONSTANT: f64 = 1e-3;
pub const EPS_CONVEX: f64 = 1e-2;

/// Default ceiling on sweep radii; |f′| and mesh distortion can blow up as
/// r → 1, so larger radii require an explicit override.
pub const R_CEILING: f64 = 0.95;

/// Build a sweep grid of `count` radii from `min` to `max` inclusive.
pub fn r_grid(min: f64, max: f64, count: usize, log_spacing: bool) -> Result<Vec<f64>, AnalysisError> {
    if !(min.is_finite() && max.is_finite()) || min <= 0.0 || max <= min {
        return Err(AnalysisError::InvalidGrid(format!(
            "need 0 < r_min < r_max, got [{min}, {max}]"
        )));
    }
    if max >= 1.0 {
        return Err(AnalysisError::InvalidGrid(format!(
            "r_max must stay below 1, got {max}"
        )));
    }
    if count < 4 {
        return Err(AnalysisError::InvalidGrid(format!(
            "sweep needs at least 4 radii, got {count}"
        )));
    }
    let grid = (0..count)
        .map(|i| {
            let s = i as f64 / (count - 1) as f64;
            if log_spacing {
                (min.ln() + s * (max.ln() - min.ln())).exp()
            } else {
                min + s * (max - min)
            }
        })
        .collect();
    Ok(grid)
}

/// Run the sweep: one solve on the unit disk, one solve per radius on the
/// image domain f(r𝔻), all at mesh resolution h. Radii whose mesh folds,
/// whose map hits a pole, or whose solve fails to converge are recorded in
/// `skipped` and excluded from the verdicts.
pub fn schwarz_sweep(
    map: &ConformalMap,
    p: f64,
    grid: &[f64],
    h: f64,
    allow_large_r: bool,
) -> Result<SchwarzSweep, AnalysisError> {
    let config = SolverConfig::new(p);
    config.validate().map_err(AnalysisError::Solver)?;
    if grid.is_empty() {
        return Err(AnalysisError::InvalidGrid("empty radius grid".into()));
    }
    for w in grid.windows(2) {
        if w[1] <= w[0] {
            return Err(AnalysisError::InvalidGrid(format!(
                "radius grid must be strictly increasing, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    for &r in grid {
        if !(r > 0.0 && r < 1.0) {
            return Err(AnalysisError::InvalidGrid(format!(
                "sweep radii must lie in (0, 1), got {r}"
            )));
        }
        if r > R_CEILING && !allow_large_r {
            return Err(AnalysisError::RadiusOutOfRange { r });
        }
    }

    let disk = Arc::new(mesh_disk(1.0, Point::ORIGIN, h)?);
    let unit = minimize_quotient(&disk, &config)?;
    if !unit.converged {
        return Err(AnalysisError::Solver(crate::solver::SolverError::Degenerate(
            "unit-disk solve did not converge".into(),
        )));
    }
    let cp_unit = unit.cp;

    // Rows are independent; results are collected by grid index so the
    // output is identical at any thread count.
    let outcomes: Vec<Result<SweepRow, SkippedRow>> = grid
        .par_iter()
        .map(|&r| {
            let mesh = mesh_map_image(map, r, h)
                .map_err(|e| SkippedRow { r, reason: e.to_string() })?;
            let solved = minimize_quotient(&Arc::new(mesh), &config)
                .map_err(|e| SkippedRow { r, reason: e.to_string() })?;
            if !solved.converged {
                return Err(SkippedRow {
                    r,
                    reason: format!(
                        "solve did not converge within {} iterations (residual {:.3e})",
                        solved.iterations, solved.residual
                    ),
                });
            }
            let cp_scaled_disk = cp_unit * r.powf(-4.0 / p);
            let phi_ratio = solved.cp / cp_scaled_disk;
            Ok(SweepRow {
                r,
                log_r: r.ln(),
                cp_scaled_disk,
                cp_image: solved.cp,
                phi_ratio,
                reciprocal: 1.0 / phi_ratio,
            })
        })
        .collect();

    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(row) => rows.push(row),
            Err(skip) => skipped.push(skip),
        }
    }
    if rows.len() < 4 {
        return Err(AnalysisError::SweepTooSparse { valid: rows.len() });
    }

    let verdicts = compute_verdicts(&rows, p);

    // Φ extends to an even function of r (f(−r𝔻) = f(r𝔻) up to rotation of
    // the parameter disk), so extrapolate in r² from the two smallest radii.
    let extrapolated_limit = if rows.len() >= 2 {
        let (r0, f0) = (rows[0].r, rows[0].phi_ratio);
        let (r1, f1) = (rows[1].r, rows[1].phi_ratio);
        Some((r1 * r1 * f0 - r0 * r0 * f1) / (r1 * r1 - r0 * r0))
    } else {
        None
    };
    let expected_limit = map
        .derivative(Complex64::new(0.0, 0.0))
        .ok()
        .map(|d| d.norm())
        .filter(|&m| m > 0.0)
        .map(|m| m.powf(-4.0 / p));

    Ok(SchwarzSweep {
        p,
        h,
        map: map.clone(),
        cp_unit_disk: cp_unit,
        rows,
        skipped,
        verdicts,
        extrapolated_limit,
        expected_limit,
    })
}

fn compute_verdicts(rows: &[SweepRow], p: f64) -> SweepVerdicts {
    let phis: Vec<f64> = rows.iter().map(|r| r.phi_ratio).collect();

    let is_monotone_decreasing = phis
        .windows(2)
        .all(|w| w[1] < w[0] * (1.0 + EPS_MONOTONE));

    let mean = phis.iter().sum::<f64>() / phis.len() as f64;
    let is_constant = phis
        .iter()
        .map(|f| (f - mean).abs())
        .fold(0.0_f64, f64::max)
        / mean
        < EPS_CONSTANT;

    let reciprocal_logconvex = if p <= 2.0 {
        Some(is_constant || reciprocal_convex_in_log_r(rows))
    } else {
        None
    };

    SweepVerdicts { is_monotone_decreasing, is_constant, reciprocal_logconvex }
}

/// Discrete convexity of 1/Φ against log r: every three-point second
/// difference must be nonnegative up to a tolerance scaled by the median
/// second-difference magnitude (with a tiny absolute floor so exactly
/// constant data cannot fail on roundoff).
fn reciprocal_convex_in_log_r(rows: &[SweepRow]) -> bool {
    if rows.len() < 3 {
        return true;
    }
    let x: Vec<f64> = rows.iter().map(|r| r.log_r).collect();
    let g: Vec<f64> = rows.iter().map(|r| r.reciprocal).collect();
    let mut second: Vec<f64> = Vec::with_capacity(rows.len() - 2);
    for i in 1..rows.len() - 1 {
        let left = (g[i] - g[i - 1]) / (x[i] - x[i - 1]);
        let right = (g[i + 1] - g[i]) / (x[i + 1] - x[i]);
        second.push(2.0 * (right - left) / (x[i + 1] - x[i - 1]));
    }
    let med = median(second.iter().map(|d| d.abs()));
    let med_g = median(g.iter().map(|v| v.abs()));
    let scale = med.max(1e-12 * med_g);
    second.iter().all(|&d| d >= -EPS_CONVEX * scale)
}

fn median(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn grid_builder_spacings() {
        let lin = r_grid(0.1, 0.9, 5, false).unwrap();
        assert_eq!(lin.len(), 5);
        assert!((lin[0] - 0.1).abs() < 1e-15 && (lin[4] - 0.9).abs() < 1e-15);
        assert!((lin[2] - 0.5).abs() < 1e-15);
        let log = r_grid(0.1, 0.9, 5, true).unwrap();
        assert!((log[2] - (0.09_f64).sqrt()).abs() < 1e-12);
        assert!(r_grid(0.1, 0.9, 3, false).is_err());
        assert!(r_grid(0.0, 0.9, 5, false).is_err());
        assert!(r_grid(0.5, 0.2, 5, false).is_err());
        assert!(r_grid(0.5, 1.0, 5, false).is_err());
    }

    #[test]
    fn linear_map_gives_constant_ratio() {
        let map = ConformalMap::linear(c(2.0, 0.0), c(0.0, 0.0)).unwrap();
        let grid = [0.3, 0.45, 0.6, 0.75];
        let sweep = schwarz_sweep(&map, 2.0, &grid, 0.1, false).unwrap();
        assert!(sweep.verdicts.is_constant);
        assert!(sweep.verdicts.reciprocal_logconvex.unwrap());
        assert!(sweep.verdicts.all_pass());
        // Φ ≡ |a|^{-4/p} = 2^{-2}.
        for row in &sweep.rows {
            assert!(
                (row.phi_ratio - 0.25).abs() < 1e-3,
                "Φ({}) = {}",
                row.r,
                row.phi_ratio
            );
        }
        assert!((sweep.extrapolated_limit.unwrap() - 0.25).abs() < 1e-3);
        assert!((sweep.expected_limit.unwrap() - 0.25).abs() < 1e-15);
        assert!(sweep.skipped.is_empty());
    }

    #[test]
    fn moebius_sweep_tracks_closed_form() {
        // f = (1−z)/(1+z) maps r𝔻 to a disk of radius 2r/(1−r²), so
        // Φ(r) = ((1−r²)/2)^{4/p} exactly.
        let map =
            ConformalMap::moebius(c(-1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        let grid = [0.2, 0.3, 0.4, 0.5];
        let sweep = schwarz_sweep(&map, 2.0, &grid, 0.08, false).unwrap();
        assert!(sweep.verdicts.is_monotone_decreasing);
        assert!(!sweep.verdicts.is_constant);
        for row in &sweep.rows {
            let exact = ((1.0 - row.r * row.r) / 2.0).powi(2);
            let rel = (row.phi_ratio - exact).abs() / exact;
            assert!(rel < 0.05, "r = {}: Φ = {} vs {}", row.r, row.phi_ratio, exact);
        }
        let lim = sweep.extrapolated_limit.unwrap();
        assert!((lim - 0.0625).abs() / 0.0625 < 0.05, "limit {lim}");
        assert!((sweep.expected_limit.unwrap() - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn folded_radii_are_skipped_not_fatal() {
        // z + z² folds once r exceeds 1/2 (critical point at z = −1/2).
        let map = ConformalMap::power_series(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let grid = [0.2, 0.3, 0.4, 0.45, 0.9];
        let sweep = schwarz_sweep(&map, 2.0, &grid, 0.1, false).unwrap();
        assert_eq!(sweep.rows.len(), 4);
        assert_eq!(sweep.skipped.len(), 1);
        assert!((sweep.skipped[0].r - 0.9).abs() < 1e-15);
        assert!(
            sweep.skipped[0].reason.contains("fold"),
            "reason: {}",
            sweep.skipped[0].reason
        );
    }

    #[test]
    fn sweep_too_sparse_when_most_rows_fold() {
        let map = ConformalMap::power_series(vec![c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let grid = [0.3, 0.45, 0.7, 0.8, 0.9];
        match schwarz_sweep(&map, 2.0, &grid, 0.1, false) {
            Err(AnalysisError::SweepTooSparse { valid }) => assert_eq!(valid, 2),
            other => panic!("expected SweepTooSparse, got {other:?}"),
        }
    }

    #[test]
    fn radius_ceiling_requires_override() {
        let map = ConformalMap::linear(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        let grid = [0.3, 0.5, 0.7, 0.97];
        match schwarz_sweep(&map, 2.0, &grid, 0.1, false) {
            Err(AnalysisError::RadiusOutOfRange { r }) => assert!((r - 0.97).abs() < 1e-15),
            other => panic!("expected RadiusOutOfRange, got {other:?}"),
        }
        // With the override the identity-like map is fine right up to 0.97.
        let sweep = schwarz_sweep(&map, 2.0, &grid, 0.1, true).unwrap();
        assert_eq!(sweep.rows.len(), 4);
    }

    #[test]
    fn high_p_renders_no_convexity_verdict() {
        let map = ConformalMap::linear(c(1.5, 0.0), c(0.0, 0.0)).unwrap();
        let grid = [0.3, 0.45, 0.6, 0.75];
        let sweep = schwarz_sweep(&map, 3.0, &grid, 0.12, false).unwrap();
        assert!(sweep.verdicts.reciprocal_logconvex.is_none());
        assert!(sweep.verdicts.all_pass());
    }
}
