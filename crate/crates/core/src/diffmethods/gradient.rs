//! Second-order finite differences: central in the interior, three-point
//! one-sided at the two ends. Higher orders apply the stencil repeatedly.

use super::{check_axis, check_order};
use crate::error::{Error, Result};
use crate::grid::Field;

/// First derivative of one lane with spacing `h`.
pub fn gradient_1d(u: &[f64], h: f64, out: &mut [f64]) {
    let n = u.len();
    debug_assert!(n >= 3 && out.len() == n);
    let inv2h = 0.5 / h;
    out[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) * inv2h;
    for i in 1..n - 1 {
        out[i] = (u[i + 1] - u[i - 1]) * inv2h;
    }
    out[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) * inv2h;
}

pub fn diff_gradient(field: &Field, axis: usize, order: usize) -> Result<Field> {
    check_order(order)?;
    let n = check_axis(field, axis)?;
    if n < 3 {
        return Err(Error::param("axis", format!("gradient needs at least 3 nodes, axis has {n}")));
    }
    let h = field.grid().step(axis);
    let mut tmp = vec![0.0; n];
    field.map_lanes(axis, |u, out| {
        gradient_1d(u, h, out);
        for _ in 1..order {
            tmp.copy_from_slice(out);
            gradient_1d(&tmp, h, out);
        }
        Ok(())
    })
}
