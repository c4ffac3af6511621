use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{positive, InitialProfile};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::linalg::solve_tridiagonal;

/// Viscous Burgers `u_t + u u_x = v u_xx` on `(t, x)` with `u = 0` at both
/// ends of the `x` axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BurgersParams {
    pub v: f64,
    pub profile: InitialProfile,
    /// Time steps per output row; chosen from stability limits if unset.
    pub substeps: Option<usize>,
}

impl Default for BurgersParams {
    fn default() -> Self {
        Self {
            v: 0.05,
            profile: InitialProfile::default(),
            substeps: None,
        }
    }
}

impl BurgersParams {
    pub fn validate(&self) -> Result<()> {
        positive("v", self.v)?;
        self.profile.validate()?;
        if self.substeps == Some(0) {
            return Err(Error::param("substeps", "must be at least 1"));
        }
        Ok(())
    }
}

/// IMEX march: backward Euler for diffusion (one tridiagonal solve per
/// step), forward Euler with central differences for convection.
pub fn gen_burgers(p: &BurgersParams, grid: Arc<Grid>) -> Result<Field> {
    p.validate()?;
    if grid.dim() != 2 {
        return Err(Error::InvalidGrid("Burgers needs a 2-D (t, x) grid".into()));
    }
    let (nt, nx) = (grid.shape()[0], grid.shape()[1]);
    let (dt_row, dx) = (grid.step(0), grid.step(1));
    let xs = grid.axis(1);
    let (lo, hi) = (xs[0], xs[nx - 1]);

    let mut u: Vec<f64> = xs.iter().map(|&x| p.profile.eval(x, lo, hi)).collect();
    u[0] = 0.0;
    u[nx - 1] = 0.0;
    let umax = u.iter().fold(0.0_f64, |m, v| m.max(v.abs()));

    let substeps = match p.substeps {
        Some(s) => s,
        None => {
            // convective Courant ≤ 0.5 and the central-convection limit Δt ≤ v/|u|²
            let mut limit = f64::INFINITY;
            if umax > 0.0 {
                limit = limit.min(0.5 * dx / umax).min(p.v / (umax * umax));
            }
            if limit.is_finite() {
                (dt_row / limit).ceil().max(1.0) as usize
            } else {
                1
            }
        }
    };
    let dt = dt_row / substeps as f64;
    let courant = umax * dt / dx;
    if courant > 1.0 {
        return Err(Error::Cfl { courant, limit: 1.0 });
    }

    let m = nx - 2;
    let r = p.v * dt / (dx * dx);
    let lower = vec![-r; m];
    let upper = vec![-r; m];
    let diag = vec![1.0 + 2.0 * r; m];
    let mut rhs = vec![0.0; m];

    let mut out = Vec::with_capacity(nt * nx);
    out.extend_from_slice(&u);
    for _ in 1..nt {
        for _ in 0..substeps {
            for j in 1..nx - 1 {
                let conv = u[j] * (u[j + 1] - u[j - 1]) / (2.0 * dx);
                rhs[j - 1] = u[j] - dt * conv;
            }
            let inner = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
            u[1..nx - 1].copy_from_slice(&inner);
        }
        if let Some(i) = u.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(out.len() + i));
        }
        out.extend_from_slice(&u);
    }
    Field::from_vec(grid, out)
}
