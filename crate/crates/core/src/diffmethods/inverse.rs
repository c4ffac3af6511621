//! Derivative as the regularised inverse of cumulative integration.
//!
//! With `K` the cumulative trapezoid operator and `f = u − u(0)`, the
//! derivative `g` minimises
//!
//! ```text
//! ‖K g − f‖² + λ ‖D₂ g‖²
//! ```
//!
//! where `D₂` is the unscaled second difference. This is a stand-in
//! formulation: the benchmark tables list an "Inverse" method without
//! defining it.
//!
//! `K` is dense, but the problem is solved through its banded KKT form: the
//! antiderivative `w = K g` is kept as an unknown tied to `g` by the local
//! trapezoid constraints, which gives a system with bandwidth 6 instead of a
//! dense normal matrix.

use serde::{Deserialize, Serialize};

use super::check_axis;
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::linalg::{BandedLu, BandedMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InverseParams {
    pub lambda: f64,
}

impl Default for InverseParams {
    fn default() -> Self {
        Self { lambda: 1e-3 }
    }
}

impl InverseParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::param("lambda", format!("must be positive, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// KKT system of
/// `min ½ gᵀ R g + (μ/2) Σ_{i≥1} (w_i − f_i)²`
/// subject to `w_0 = 0` and `w_i − w_{i−1} = h/2 (g_{i−1} + g_i)`.
///
/// Unknowns are interleaved as `g_0, (w_1, λ_1, g_1), (w_2, λ_2, g_2), …`.
pub(crate) struct IntegralKkt {
    n: usize,
    h: f64,
    mu: f64,
}

impl IntegralKkt {
    pub(crate) fn new(n: usize, h: f64, mu: f64) -> Self {
        Self { n, h, mu }
    }

    fn pos_g(j: usize) -> usize {
        3 * j
    }

    fn pos_w(i: usize) -> usize {
        3 * i - 2
    }

    fn pos_l(i: usize) -> usize {
        3 * i - 1
    }

    /// Assembles the matrix; `r(j)` lists the non-zeros `(k, R_jk)` of row
    /// `j` of the regulariser, which may reach at most `reach` columns away.
    pub(crate) fn assemble(&self, reach: usize, r: impl Fn(usize) -> Vec<(usize, f64)>) -> BandedMatrix {
        let (n, h, mu) = (self.n, self.h, self.mu);
        let band = (3 * reach).max(4);
        let mut a = BandedMatrix::zeros(3 * n - 2, band, band);
        for j in 0..n {
            for (k, v) in r(j) {
                a.add(Self::pos_g(j), Self::pos_g(k), v);
            }
            if j >= 1 {
                a.add(Self::pos_g(j), Self::pos_l(j), -0.5 * h);
            }
            if j + 1 < n {
                a.add(Self::pos_g(j), Self::pos_l(j + 1), -0.5 * h);
            }
        }
        for i in 1..n {
            let (w, l) = (Self::pos_w(i), Self::pos_l(i));
            a.add(w, w, mu);
            a.add(w, l, 1.0);
            if i + 1 < n {
                a.add(w, Self::pos_l(i + 1), -1.0);
            }
            a.add(l, w, 1.0);
            if i >= 2 {
                a.add(l, Self::pos_w(i - 1), -1.0);
            }
            a.add(l, Self::pos_g(i - 1), -0.5 * h);
            a.add(l, Self::pos_g(i), -0.5 * h);
        }
        a
    }

    pub(crate) fn rhs(&self, f: &[f64]) -> Vec<f64> {
        let mut b = vec![0.0; 3 * self.n - 2];
        for i in 1..self.n {
            b[Self::pos_w(i)] = self.mu * f[i];
        }
        b
    }

    pub(crate) fn extract_g(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|j| x[Self::pos_g(j)]).collect()
    }
}

/// Cumulative trapezoid `(K g)_i` with `(K g)_0 = 0`.
pub fn cumulative_trapezoid(g: &[f64], h: f64) -> Vec<f64> {
    let mut w = Vec::with_capacity(g.len());
    let mut acc = 0.0;
    w.push(0.0);
    for pair in g.windows(2) {
        acc += 0.5 * h * (pair[0] + pair[1]);
        w.push(acc);
    }
    w
}

fn second_difference_gram(n: usize, j: usize) -> Vec<(usize, f64)> {
    // row i of D₂ has (1, −2, 1) at columns i−1, i, i+1 for i = 1..n−2
    let coef = |i: usize, m: usize| -> f64 {
        if m + 1 == i || m == i + 1 {
            1.0
        } else if m == i {
            -2.0
        } else {
            0.0
        }
    };
    let rows: Vec<usize> = (j.saturating_sub(1)..=j + 1).filter(|&i| i >= 1 && i + 1 < n).collect();
    (j.saturating_sub(2)..=(j + 2).min(n - 1))
        .filter_map(|k| {
            let v: f64 = rows.iter().map(|&i| coef(i, j) * coef(i, k)).sum();
            (v != 0.0).then_some((k, v))
        })
        .collect()
}

struct InverseSolver {
    kkt: IntegralKkt,
    lu: BandedLu,
}

impl InverseSolver {
    fn new(n: usize, h: f64, lambda: f64) -> Result<Self> {
        // ‖Kg − f‖² + λ‖D₂g‖² halved: R = λ D₂ᵀD₂ with unit data weight
        let kkt = IntegralKkt::new(n, h, 1.0);
        let a = kkt.assemble(2, |j| {
            second_difference_gram(n, j)
                .into_iter()
                .map(|(k, v)| (k, lambda * v))
                .collect()
        });
        let lu = a.factor().map_err(|e| match e {
            Error::Singular(m) => Error::Singular(format!("Tikhonov system with λ = {lambda:e}: {m}")),
            other => other,
        })?;
        Ok(Self { kkt, lu })
    }

    fn solve(&self, u: &[f64]) -> Vec<f64> {
        let f: Vec<f64> = u.iter().map(|v| v - u[0]).collect();
        let x = self.lu.solve(&self.kkt.rhs(&f));
        self.kkt.extract_g(&x)
    }
}

/// First derivative of one lane.
pub fn inverse_1d(u: &[f64], h: f64, params: &InverseParams) -> Result<Vec<f64>> {
    params.validate()?;
    if u.len() < 3 {
        return Err(Error::param("axis", "inverse differentiation needs at least 3 nodes"));
    }
    Ok(InverseSolver::new(u.len(), h, params.lambda)?.solve(u))
}

pub fn diff_inverse(field: &Field, axis: usize, params: &InverseParams) -> Result<Field> {
    params.validate()?;
    let n = check_axis(field, axis)?;
    let solver = InverseSolver::new(n, field.grid().step(axis), params.lambda)?;
    field.map_lanes(axis, |u, out| {
        out.copy_from_slice(&solver.solve(u));
        Ok(())
    })
}
