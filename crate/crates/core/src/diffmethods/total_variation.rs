//! Total-variation regularised differentiation of one-dimensional data.
//!
//! The derivative `g` of a lane `u` minimises
//!
//! ```text
//! J(g) = Σ √((g_{i+1} − g_i)² + ε) + (μ/2) ‖K g − (u − u(0))‖²
//! ```
//!
//! with `K` the cumulative trapezoid. Each lagged-diffusivity step freezes
//! the weights `1/√((Dg)² + ε)` and solves the resulting quadratic problem,
//! which majorises `J`; the objective therefore never increases. The
//! quadratic subproblem shares the banded KKT form used by
//! [`inverse`](super::inverse).

use serde::{Deserialize, Serialize};

use super::check_axis;
use super::gradient::gradient_1d;
use super::inverse::{cumulative_trapezoid, IntegralKkt};
use crate::error::{Error, Result};
use crate::grid::Field;

pub const TV_EPSILON: f64 = 1e-8;
pub const TV_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TotalVarParams {
    /// Weight `μ` of the data-fit term.
    pub regularization: f64,
    /// Cap on lagged-diffusivity iterations.
    pub iterations: usize,
    /// Relaxation of each update, in `(0, 1]`.
    pub step: f64,
}

impl Default for TotalVarParams {
    fn default() -> Self {
        Self {
            regularization: 1e3,
            iterations: 100,
            step: 1.0,
        }
    }
}

impl TotalVarParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.regularization > 0.0 && self.regularization.is_finite()) {
            return Err(Error::param(
                "regularization",
                format!("must be positive, got {}", self.regularization),
            ));
        }
        if self.iterations == 0 {
            return Err(Error::param("iterations", "must be at least 1"));
        }
        if !(self.step > 0.0 && self.step <= 1.0) {
            return Err(Error::param("step", format!("must lie in (0, 1], got {}", self.step)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TvOutcome {
    pub derivative: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `J` at the starting point and after every iteration.
    pub objective: Vec<f64>,
}

pub fn tv_objective(g: &[f64], f: &[f64], h: f64, mu: f64) -> f64 {
    let tv: f64 = g
        .windows(2)
        .map(|w| ((w[1] - w[0]).powi(2) + TV_EPSILON).sqrt())
        .sum();
    let fit: f64 = cumulative_trapezoid(g, h)
        .iter()
        .zip(f)
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    tv + 0.5 * mu * fit
}

pub fn tv_derivative_1d(u: &[f64], h: f64, params: &TotalVarParams) -> Result<TvOutcome> {
    params.validate()?;
    let n = u.len();
    if n < 3 {
        return Err(Error::param("axis", "total-variation differentiation needs at least 3 nodes"));
    }
    let mu = params.regularization;
    let f: Vec<f64> = u.iter().map(|v| v - u[0]).collect();
    let kkt = IntegralKkt::new(n, h, mu);
    let rhs = kkt.rhs(&f);

    let mut g = vec![0.0; n];
    gradient_1d(u, h, &mut g);
    let mut objective = vec![tv_objective(&g, &f, h, mu)];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < params.iterations {
        iterations += 1;
        let weights: Vec<f64> = g
            .windows(2)
            .map(|w| 1.0 / ((w[1] - w[0]).powi(2) + TV_EPSILON).sqrt())
            .collect();
        // Dᵀ W D: a weighted path Laplacian
        let a = kkt.assemble(1, |j| {
            let mut row = Vec::with_capacity(3);
            let left = if j > 0 { weights[j - 1] } else { 0.0 };
            let right = if j + 1 < n { weights[j] } else { 0.0 };
            if j > 0 {
                row.push((j - 1, -left));
            }
            row.push((j, left + right));
            if j + 1 < n {
                row.push((j + 1, -right));
            }
            row
        });
        let candidate = kkt.extract_g(&a.factor()?.solve(&rhs));
        let mut diff = 0.0;
        let mut norm = 0.0;
        for (gi, ci) in g.iter_mut().zip(&candidate) {
            let next = *gi + params.step * (ci - *gi);
            diff += (next - *gi).powi(2);
            norm += next * next;
            *gi = next;
        }
        objective.push(tv_objective(&g, &f, h, mu));
        if diff.sqrt() <= TV_TOLERANCE * norm.sqrt().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    Ok(TvOutcome {
        derivative: g,
        iterations,
        converged,
        objective,
    })
}

/// First derivative along `axis`, lane by lane. Lanes that hit the iteration
/// cap keep their last iterate and are reported through `log::warn!`.
pub fn diff_total_variation(field: &Field, axis: usize, params: &TotalVarParams) -> Result<Field> {
    let (out, unconverged) = diff_total_variation_report(field, axis, params)?;
    if unconverged > 0 {
        log::warn!(
            "total variation: {unconverged} lanes along axis {axis} stopped at the {}-iteration cap",
            params.iterations
        );
    }
    Ok(out)
}

/// Like [`diff_total_variation`], also returning the number of lanes that
/// did not reach the tolerance.
pub fn diff_total_variation_report(
    field: &Field,
    axis: usize,
    params: &TotalVarParams,
) -> Result<(Field, usize)> {
    params.validate()?;
    check_axis(field, axis)?;
    let h = field.grid().step(axis);
    let mut unconverged = 0;
    let out = field.map_lanes(axis, |u, out| {
        let r = tv_derivative_1d(u, h, params)?;
        if !r.converged {
            unconverged += 1;
        }
        out.copy_from_slice(&r.derivative);
        Ok(())
    })?;
    Ok((out, unconverged))
}
