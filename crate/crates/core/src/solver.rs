//! Minimization of the Sobolev quotient
//!
//! ```text
//!     Q(u) = ∫|∇u|² / (∫ u^p)^{2/p},   u ∈ P1, u = 0 on ∂D, u ≥ 0,
//! ```
//!
//! by a damped fixed-point iteration on the Euler–Lagrange equation
//! Δφ + Λ φ^{p−1} = 0. Each step solves K w = load(φ^{p−1}), normalizes, and
//! mixes (1−s)φ + s·w with a backtracking choice of s that never lets the
//! quotient increase. For p = 2 with s = 1 this is inverse power iteration for
//! the first Dirichlet eigenvalue; for p = 1 the first solve is already the
//! exact discrete minimizer.

use std::sync::Arc;

use thiserror::Error;

use crate::fem::{
    assemble_stiffness, dirichlet_energy, integrate_power, power_integral, solve_spd_with,
    weak_power_load, FemError, ScalarField, StiffnessOperator,
};
use crate::geometry::TriMesh;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("iteration degenerated: {0}")]
    Degenerate(String),
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub p: f64,
    /// Stop when the relative quotient change per step drops below this.
    pub quotient_tol: f64,
    /// ... and the relative Euler–Lagrange residual drops below this.
    pub residual_tol: f64,
    pub max_iterations: usize,
    /// Smallest admissible mixing step in the backtracking search.
    pub min_step: f64,
    /// Relative tolerance for the inner conjugate-gradient solves.
    pub linear_tol: f64,
}

impl SolverConfig {
    pub fn new(p: f64) -> Self {
        SolverConfig {
            p,
            quotient_tol: 1e-10,
            residual_tol: 1e-7,
            max_iterations: 500,
            min_step: 2.0_f64.powi(-20),
            linear_tol: 1e-11,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return Err(SolverError::InvalidConfig(format!(
                "p = {} is out of range: the functional requires p >= 1",
                self.p
            )));
        }
        for (name, v) in [
            ("quotient_tol", self.quotient_tol),
            ("residual_tol", self.residual_tol),
            ("min_step", self.min_step),
            ("linear_tol", self.linear_tol),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(SolverError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iterations == 0 {
            return Err(SolverError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Converged (or best-effort) minimizer of the quotient, with the constant
/// and multiplier evaluated on the final iterate.
pub struct SolveResult {
    /// Discrete C_p(D) = energy / (∫φ^p)^{2/p}.
    pub cp: f64,
    /// Euler–Lagrange multiplier Λ = energy / ∫φ^p.
    pub lambda: f64,
    /// Extremal field, nonnegative, zero on the boundary, ∫φ^p = 1.
    pub phi: ScalarField,
    pub energy: f64,
    pub p_norm_integral: f64,
    /// ∫ φ^{p−1}.
    pub pminus1_integral: f64,
    pub iterations: usize,
    /// Relative Euler–Lagrange residual of the final iterate.
    pub residual: f64,
    pub h: f64,
    pub p: f64,
    pub converged: bool,
    /// Quotient after initialization and after every accepted step
    /// (non-increasing by construction).
    pub quotient_history: Vec<f64>,
}

impl SolveResult {
    /// Sharp embedding constant S_p = cp^{−1/2}.
    pub fn sobolev_constant(&self) -> f64 {
        1.0 / self.cp.sqrt()
    }

    /// Re-checks the defining identities on the stored fields.
    pub fn validate(&self) -> Result<(), String> {
        let q = self.energy / self.p_norm_integral.powf(2.0 / self.p);
        if ((self.cp - q) / q).abs() > 1e-12 {
            return Err(format!("cp = {} but energy/(∫φ^p)^(2/p) = {}", self.cp, q));
        }
        let viaeq = self.lambda * self.p_norm_integral.powf((self.p - 2.0) / self.p);
        if ((viaeq - self.cp) / self.cp).abs() > 1e-12 {
            return Err(format!(
                "multiplier identity violated: Λ(∫φ^p)^((p-2)/p) = {viaeq}, cp = {}",
                self.cp
            ));
        }
        if let Some(&v) = self
            .phi
            .values
            .iter()
            .find(|&&v| v < -1e-12)
        {
            return Err(format!("extremal field takes the negative value {v}"));
        }
        Ok(())
    }
}

struct Evaluated {
    energy: f64,
    integral: f64,
    quotient: f64,
}

fn evaluate(op: &StiffnessOperator, interior: &[f64], p: f64) -> Result<Evaluated, FemError> {
    let field = op.lift(interior);
    let energy = dirichlet_energy(&field);
    let integral = integrate_power(&field, p)?;
    let quotient = if integral > 0.0 { energy / integral.powf(2.0 / p) } else { f64::INFINITY };
    Ok(Evaluated { energy, integral, quotient })
}

fn el_residual_inner(
    op: &StiffnessOperator,
    interior: &[f64],
    phi: &ScalarField,
    lambda: f64,
    p: f64,
) -> Result<f64, FemError> {
    let kx = op.apply(interior);
    let load = weak_power_load(phi, p)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..kx.len() {
        let d = kx[i] - lambda * load[i];
        num += d * d;
        den += kx[i] * kx[i];
    }
    if den == 0.0 {
        return Ok(if num == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok((num / den).sqrt())
}

/// Relative discrete Euler–Lagrange residual ‖Kφ − λ·load(φ)‖ / ‖Kφ‖ over the
/// interior vertices.
pub fn el_residual(phi: &ScalarField, lambda: f64, p: f64) -> Result<f64, SolverError> {
    let op = assemble_stiffness(&phi.mesh)?;
    let interior = op.restrict(phi);
    Ok(el_residual_inner(&op, &interior, phi, lambda, p)?)
}

pub fn minimize_quotient(
    mesh: &Arc<TriMesh>,
    config: &SolverConfig,
) -> Result<SolveResult, SolverError> {
    config.validate()?;
    let p = config.p;
    let op = assemble_stiffness(mesh)?;
    let n = op.interior_count();

    // Torsion start: K v = ∫λᵢ (constant unit load), clamped and normalized.
    let zero = op.lift(&vec![0.0; n]);
    let unit_load = weak_power_load(&zero, 1.0)?;
    let mut x = solve_spd_with(&op, &unit_load, config.linear_tol, None)?.x;
    for v in &mut x {
        *v = v.max(0.0);
    }
    let start = evaluate(&op, &x, p)?;
    if !(start.integral > 0.0) {
        return Err(SolverError::Degenerate(
            "initial torsion iterate has zero p-norm".into(),
        ));
    }
    let scale = start.integral.powf(-1.0 / p);
    for v in &mut x {
        *v *= scale;
    }
    let mut current = evaluate(&op, &x, p)?;
    let mut phi = op.lift(&x);

    let mut history = vec![current.quotient];
    let mut rel_change = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=config.max_iterations {
        let load = weak_power_load(&phi, p)?;
        let lambda = current.energy / current.integral;
        residual = el_residual_inner(&op, &x, &phi, lambda, p)?;
        if rel_change < config.quotient_tol && residual < config.residual_tol {
            converged = true;
            break;
        }
        iterations = iter;

        // Inverse-iteration direction; Kφ ≈ Λ·load makes φ/Λ a good warm start.
        let warm: Vec<f64> = x.iter().map(|&v| v / lambda).collect();
        let mut w = solve_spd_with(&op, &load, config.linear_tol, Some(&warm))?.x;
        for v in &mut w {
            *v = v.max(0.0);
        }
        let weval = evaluate(&op, &w, p)?;
        if !(weval.integral > 0.0) {
            return Err(SolverError::Degenerate(
                "fixed-point image has zero p-norm".into(),
            ));
        }
        let wscale = weval.integral.powf(-1.0 / p);
        for v in &mut w {
            *v *= wscale;
        }

        // Backtracking mix: largest s ≤ 1 that does not increase the quotient.
        let mut s = 1.0;
        let mut accepted: Option<(Vec<f64>, Evaluated)> = None;
        while s >= config.min_step {
            let cand: Vec<f64> = x
                .iter()
                .zip(&w)
                .map(|(&a, &b)| ((1.0 - s) * a + s * b).max(0.0))
                .collect();
            let ceval = evaluate(&op, &cand, p)?;
            if ceval.integral > 0.0 && ceval.quotient <= current.quotient {
                accepted = Some((cand, ceval));
                break;
            }
            s *= 0.5;
        }
        let Some((cand, ceval)) = accepted else {
            // No step improves the quotient: we are at the numerical floor.
            if residual < config.residual_tol {
                converged = true;
            }
            break;
        };

        rel_change = (current.quotient - ceval.quotient) / current.quotient;
        history.push(ceval.quotient);
        let cscale = ceval.integral.powf(-1.0 / p);
        x = cand;
        for v in &mut x {
            *v *= cscale;
        }
        current = evaluate(&op, &x, p)?;
        phi = op.lift(&x);
    }

    // Final metrics, all recomputed from the returned field so the identities
    // cp = E/(∫φ^p)^{2/p} and Λ(∫φ^p)^{(p−2)/p} = cp hold by construction.
    let energy = dirichlet_energy(&phi);
    let integral = integrate_power(&phi, p)?;
    let cp = energy / integral.powf(2.0 / p);
    let lambda = energy / integral;
    let pminus1_integral = power_integral(&phi, p - 1.0);
    let final_interior = op.restrict(&phi);
    let final_residual = el_residual_inner(&op, &final_interior, &phi, lambda, p)?;

    Ok(SolveResult {
        cp,
        lambda,
        phi,
        energy,
        p_norm_integral: integral,
        pminus1_integral,
        iterations,
        residual: if converged { final_residual } else { residual.min(final_residual) },
        h: mesh.h,
        p,
        converged,
        quotient_history: history,
    })
}
