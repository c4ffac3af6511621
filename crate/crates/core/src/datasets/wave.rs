use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{positive, InitialProfile};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid};

/// `u_xx = c² u_tt` on `(t, x)`, at rest initially, `u = 0` at both ends.
///
/// Written this way the propagation speed is `1/c`, so a standing mode `m`
/// on a string of length `L` has period `2 L c / m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WaveParams {
    pub c: f64,
    pub profile: InitialProfile,
    /// Time steps per output row; chosen from the Courant limit if unset.
    pub substeps: Option<usize>,
}

impl Default for WaveParams {
    fn default() -> Self {
        Self {
            c: 0.25,
            profile: InitialProfile::default(),
            substeps: None,
        }
    }
}

impl WaveParams {
    pub fn validate(&self) -> Result<()> {
        positive("c", self.c)?;
        self.profile.validate()?;
        if self.substeps == Some(0) {
            return Err(Error::param("substeps", "must be at least 1"));
        }
        Ok(())
    }

    pub fn speed(&self) -> f64 {
        1.0 / self.c
    }
}

/// Explicit leapfrog; the first step uses the Taylor start
/// `u¹ = u⁰ + ½ ρ² δ²u⁰` for zero initial velocity.
pub fn gen_wave(p: &WaveParams, grid: Arc<Grid>) -> Result<Field> {
    p.validate()?;
    if grid.dim() != 2 {
        return Err(Error::InvalidGrid("the wave equation needs a 2-D (t, x) grid".into()));
    }
    let (nt, nx) = (grid.shape()[0], grid.shape()[1]);
    let (dt_row, dx) = (grid.step(0), grid.step(1));
    let xs = grid.axis(1);
    let (lo, hi) = (xs[0], xs[nx - 1]);

    let substeps = p
        .substeps
        .unwrap_or_else(|| (p.speed() * dt_row / dx / 0.5).ceil().max(1.0) as usize);
    let dt = dt_row / substeps as f64;
    let courant = p.speed() * dt / dx;
    if courant > 1.0 {
        return Err(Error::Cfl { courant, limit: 1.0 });
    }
    let rho2 = courant * courant;

    let mut cur: Vec<f64> = xs.iter().map(|&x| p.profile.eval(x, lo, hi)).collect();
    cur[0] = 0.0;
    cur[nx - 1] = 0.0;
    let mut prev = cur.clone();
    let mut next = vec![0.0; nx];
    let mut first = true;

    let mut out = Vec::with_capacity(nt * nx);
    out.extend_from_slice(&cur);
    for _ in 1..nt {
        for _ in 0..substeps {
            for j in 1..nx - 1 {
                let lap = cur[j + 1] - 2.0 * cur[j] + cur[j - 1];
                next[j] = if first {
                    cur[j] + 0.5 * rho2 * lap
                } else {
                    2.0 * cur[j] - prev[j] + rho2 * lap
                };
            }
            first = false;
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }
        out.extend_from_slice(&cur);
    }
    Field::from_vec(grid, out)
}
