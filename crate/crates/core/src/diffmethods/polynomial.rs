//! Savitzky–Golay style derivatives with a Chebyshev basis.
//!
//! Each window of `N = 2M + 1` nodes is mapped onto `[-1, 1]` and the data
//! are fitted by least squares with `T_0 … T_n`. The fitted series is
//! differentiated analytically (`T'_m = m U_{m-1}`), so every output node is
//! a fixed linear combination of its window. Near the ends of an axis the
//! window is shifted inward and evaluated off-centre.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_axis, check_order};
use crate::error::{Error, Result};
use crate::grid::Field;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolynomialParams {
    /// Odd number of nodes per fitting window.
    pub window: usize,
    /// Degree of the fitted Chebyshev series; even and below `window`.
    pub poly_order: usize,
}

impl Default for PolynomialParams {
    fn default() -> Self {
        Self {
            window: 15,
            poly_order: 4,
        }
    }
}

impl PolynomialParams {
    pub fn validate(&self) -> Result<()> {
        validate_window(self.window, self.poly_order)
    }
}

pub(crate) fn validate_window(window: usize, poly_order: usize) -> Result<()> {
    if window < 3 || window.is_multiple_of(2) {
        return Err(Error::param("window", format!("must be odd and at least 3, got {window}")));
    }
    if !poly_order.is_multiple_of(2) {
        return Err(Error::param("poly_order", format!("must be even, got {poly_order}")));
    }
    if poly_order >= window {
        return Err(Error::param(
            "poly_order",
            format!("order {poly_order} needs a window wider than {window}"),
        ));
    }
    Ok(())
}

/// Chebyshev coefficients of the derivative of `Σ c_k T_k`.
pub fn chebyshev_derivative(c: &[f64]) -> Vec<f64> {
    let n = c.len();
    if n <= 1 {
        return vec![0.0];
    }
    let mut d = vec![0.0; n + 1];
    for k in (1..n).rev() {
        d[k - 1] = d[k + 1] + 2.0 * k as f64 * c[k];
    }
    d[0] *= 0.5;
    d.truncate(n - 1);
    d
}

/// `[U_0(s), …, U_{m}(s)]`.
pub fn chebyshev_u(s: f64, m: usize) -> Vec<f64> {
    let mut u = Vec::with_capacity(m + 1);
    u.push(1.0);
    if m >= 1 {
        u.push(2.0 * s);
    }
    for k in 2..=m {
        let next = 2.0 * s * u[k - 1] - u[k - 2];
        u.push(next);
    }
    u
}

/// `[T_0(s), …, T_{m}(s)]`.
pub fn chebyshev_t(s: f64, m: usize) -> Vec<f64> {
    let mut t = Vec::with_capacity(m + 1);
    t.push(1.0);
    if m >= 1 {
        t.push(s);
    }
    for k in 2..=m {
        let next = 2.0 * s * t[k - 1] - t[k - 2];
        t.push(next);
    }
    t
}

/// `r`-th derivative of every basis function `T_0 … T_n` at `s`.
fn basis_derivatives(s: f64, n: usize, r: usize) -> Vec<f64> {
    if r == 0 {
        return chebyshev_t(s, n);
    }
    let u = chebyshev_u(s, n.max(1));
    (0..=n)
        .map(|m| {
            let mut c = vec![0.0; m + 1];
            c[m] = 1.0;
            for _ in 1..r {
                c = chebyshev_derivative(&c);
            }
            // the remaining derivative via T'_k = k U_{k-1}
            c.iter()
                .enumerate()
                .skip(1)
                .map(|(k, ck)| ck * k as f64 * u[k - 1])
                .sum()
        })
        .collect()
}

/// Derivative weights for every evaluation position inside one window.
#[derive(Debug, Clone)]
pub struct SgStencil {
    window: usize,
    weights: Vec<f64>,
}

impl SgStencil {
    pub fn new(window: usize, poly_order: usize, deriv: usize, h: f64) -> Result<Self> {
        validate_window(window, poly_order)?;
        let nodes: Vec<f64> = (0..window)
            .map(|j| -1.0 + 2.0 * j as f64 / (window - 1) as f64)
            .collect();
        let v = DMatrix::from_fn(window, poly_order + 1, |j, m| chebyshev_t(nodes[j], poly_order)[m]);
        let svd = v.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 1e-12 * smax) {
            return Err(Error::RankDeficient(format!(
                "window {window}, order {poly_order}: condition {:.3e}",
                smax / smin
            )));
        }
        let pinv = svd
            .pseudo_inverse(0.0)
            .map_err(|e| Error::RankDeficient(e.to_string()))?;
        let scale = (2.0 / ((window - 1) as f64 * h)).powi(deriv as i32);
        let mut weights = Vec::with_capacity(window * window);
        for &s in &nodes {
            let e = basis_derivatives(s, poly_order, deriv);
            for j in 0..window {
                let w: f64 = (0..=poly_order).map(|m| e[m] * pinv[(m, j)]).sum();
                weights.push(w * scale);
            }
        }
        Ok(Self { window, weights })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Weights applied to the window when evaluating at window position `p`.
    pub fn weights_at(&self, p: usize) -> &[f64] {
        &self.weights[p * self.window..(p + 1) * self.window]
    }

    /// Window start and in-window position used for node `i` of a lane of
    /// length `len`.
    pub fn placement(&self, i: usize, len: usize) -> (usize, usize) {
        let m = (self.window - 1) / 2;
        let start = i.saturating_sub(m).min(len - self.window);
        (start, i - start)
    }

    pub fn eval(&self, u: &[f64], i: usize) -> f64 {
        let (start, p) = self.placement(i, u.len());
        let w = self.weights_at(p);
        let ui = u[i];
        // differences against the node value keep constants exactly at zero
        w.iter()
            .zip(&u[start..start + self.window])
            .map(|(wj, uj)| wj * (uj - ui))
            .sum()
    }

    pub fn apply(&self, u: &[f64], out: &mut [f64]) -> Result<()> {
        if u.len() < self.window {
            return Err(Error::param(
                "window",
                format!("window {} does not fit an axis of {} nodes", self.window, u.len()),
            ));
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.eval(u, i);
        }
        Ok(())
    }
}

pub fn diff_polynomial(field: &Field, axis: usize, order: usize, params: &PolynomialParams) -> Result<Field> {
    check_order(order)?;
    params.validate()?;
    let n = check_axis(field, axis)?;
    if params.window > n {
        return Err(Error::param(
            "window",
            format!("window {} does not fit an axis of {n} nodes", params.window),
        ));
    }
    let stencil = SgStencil::new(params.window, params.poly_order, order, field.grid().step(axis))?;
    field.map_lanes(axis, |u, out| stencil.apply(u, out))
}
