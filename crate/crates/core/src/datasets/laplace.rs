use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::finite;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// Dirichlet data on the boundary of the `(x, y)` rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum LaplaceBoundary {
    /// `amplitude · sin(π (x − x₀)/Lₓ)` on the top edge `y = y_max`, zero
    /// elsewhere.
    TopSine { amplitude: f64 },
    /// Traces of the harmonic polynomial `x² − y²`.
    Harmonic,
    Constant { value: f64 },
}

impl Default for LaplaceBoundary {
    fn default() -> Self {
        LaplaceBoundary::TopSine { amplitude: 1.0 }
    }
}

impl LaplaceBoundary {
    fn value(&self, x: f64, y: f64, bounds: [f64; 4]) -> f64 {
        let [x0, x1, _y0, y1] = bounds;
        match *self {
            LaplaceBoundary::TopSine { amplitude } => {
                if y == y1 {
                    amplitude * (std::f64::consts::PI * (x - x0) / (x1 - x0)).sin()
                } else {
                    0.0
                }
            }
            LaplaceBoundary::Harmonic => x * x - y * y,
            LaplaceBoundary::Constant { value } => value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LaplaceParams {
    pub boundary: LaplaceBoundary,
    /// Stopping threshold on the largest Jacobi correction.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for LaplaceParams {
    fn default() -> Self {
        Self {
            boundary: LaplaceBoundary::default(),
            tolerance: 1e-10,
            max_sweeps: 200_000,
        }
    }
}

impl LaplaceParams {
    pub fn with_boundary(boundary: LaplaceBoundary) -> Self {
        Self { boundary, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        match self.boundary {
            LaplaceBoundary::TopSine { amplitude } => finite("amplitude", amplitude)?,
            LaplaceBoundary::Constant { value } => finite("value", value)?,
            LaplaceBoundary::Harmonic => {}
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::param("tolerance", "must be positive"));
        }
        if self.max_sweeps == 0 {
            return Err(Error::param("max_sweeps", "must be at least 1"));
        }
        Ok(())
    }
}

/// Five-point SOR. Iterates until the largest Jacobi correction
/// `|(Σ neighbours)/(2 + 2β²) − u|` on the interior drops below the
/// tolerance, with `β = Δx/Δy`.
pub fn gen_laplace(p: &LaplaceParams, grid: Arc<Grid>) -> Result<Field> {
    p.validate()?;
    if grid.dim() != 2 {
        return Err(Error::InvalidGrid("the Laplace problem needs a 2-D (x, y) grid".into()));
    }
    let (nx, ny) = (grid.shape()[0], grid.shape()[1]);
    let (xs, ys) = (grid.axis(0), grid.axis(1));
    let bounds = [xs[0], xs[nx - 1], ys[0], ys[ny - 1]];
    let at = |i: usize, j: usize| i * ny + j;

    let mut u = vec![0.0; nx * ny];
    let mut bsum = 0.0;
    let mut bcount = 0.0;
    for i in 0..nx {
        for j in 0..ny {
            if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                let v = p.boundary.value(xs[i], ys[j], bounds);
                u[at(i, j)] = v;
                bsum += v;
                bcount += 1.0;
            }
        }
    }
    let mean = bsum / bcount;
    for i in 1..nx - 1 {
        for j in 1..ny - 1 {
            u[at(i, j)] = mean;
        }
    }

    let beta2 = (grid.step(0) / grid.step(1)).powi(2);
    let denom = 2.0 + 2.0 * beta2;
    let nmax = nx.max(ny) as f64;
    let omega = 2.0 / (1.0 + (std::f64::consts::PI / nmax).sin());

    let mut residual = f64::INFINITY;
    for _ in 0..p.max_sweeps {
        residual = 0.0;
        for i in 1..nx - 1 {
            for j in 1..ny - 1 {
                let s = u[at(i + 1, j)] + u[at(i - 1, j)] + beta2 * (u[at(i, j + 1)] + u[at(i, j - 1)]);
                let delta = s / denom - u[at(i, j)];
                residual = residual.max(delta.abs());
                u[at(i, j)] += omega * delta;
            }
        }
        if residual <= p.tolerance {
            return Field::from_vec(grid, u);
        }
    }
    Err(Error::NonConvergence {
        solver: "SOR",
        iterations: p.max_sweeps,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{field_mse, make_uniform_grid, BoundaryMode};

    fn grid(n: usize) -> Arc<Grid> {
        Arc::new(
            make_uniform_grid(&[(-1.0, 1.0, n), (-0.5, 1.5, n + 7)])
                .unwrap()
                .with_names(["x", "y"])
                .unwrap(),
        )
    }

    #[test]
    fn reproduces_harmonic_quadratic() {
        let g = grid(33);
        let u = gen_laplace(&LaplaceParams::with_boundary(LaplaceBoundary::Harmonic), g.clone()).unwrap();
        let exact = Field::from_fn(g, |c| c[0] * c[0] - c[1] * c[1]).unwrap();
        // the five-point stencil is exact on quadratics
        assert!(field_mse(&u, &exact, BoundaryMode::FullDomain).unwrap() < 1e-12);
    }

    #[test]
    fn constant_boundary_gives_constant() {
        let u = gen_laplace(&LaplaceParams::with_boundary(LaplaceBoundary::Constant { value: 2.5 }), grid(17)).unwrap();
        assert!(u.as_slice().iter().all(|v| (v - 2.5).abs() < 1e-12));
    }

    #[test]
    fn maximum_principle() {
        let g = grid(25);
        let u = gen_laplace(&LaplaceParams::default(), g.clone()).unwrap();
        let (nx, ny) = (25, 32);
        let mut bmin = f64::INFINITY;
        let mut bmax = f64::NEG_INFINITY;
        let mut imin = f64::INFINITY;
        let mut imax = f64::NEG_INFINITY;
        for i in 0..nx {
            for j in 0..ny {
                let v = u.values()[[i, j]];
                if i == 0 || j == 0 || i == nx - 1 || j == ny - 1 {
                    bmin = bmin.min(v);
                    bmax = bmax.max(v);
                } else {
                    imin = imin.min(v);
                    imax = imax.max(v);
                }
            }
        }
        assert!(imin >= bmin - 1e-12 && imax <= bmax + 1e-12);
        assert!(imax > 0.0);
    }

    #[test]
    fn sweep_cap_reports_non_convergence() {
        let p = LaplaceParams { max_sweeps: 3, ..Default::default() };
        assert!(matches!(gen_laplace(&p, grid(33)), Err(Error::NonConvergence { .. })));
    }
}
