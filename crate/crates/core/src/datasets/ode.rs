use std::sync::Arc;

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{finite, positive};
use crate::diffmethods::Jet;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, MultiIndex};

/// `m u'' + q u' + k u = 0` with `u(0) = u0`, `u'(0) = v0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdeParams {
    pub m: f64,
    pub q: f64,
    pub k: f64,
    pub u0: f64,
    pub v0: f64,
}

impl Default for OdeParams {
    fn default() -> Self {
        Self {
            m: 1.0,
            q: 0.25,
            k: 3.0,
            u0: 1.0,
            v0: 0.0,
        }
    }
}

impl OdeParams {
    pub fn validate(&self) -> Result<()> {
        positive("m", self.m)?;
        for (name, v) in [("q", self.q), ("k", self.k), ("u0", self.u0), ("v0", self.v0)] {
            finite(name, v)?;
        }
        Ok(())
    }
}

enum Closed {
    /// `C₁ e^{λ₁t} + C₂ e^{λ₂t}`, possibly complex-conjugate.
    Distinct { l1: Complex64, l2: Complex64, c1: Complex64, c2: Complex64 },
    /// `(A + B t) e^{rt}`.
    Repeated { r: f64, a: f64, b: f64 },
}

impl Closed {
    fn new(p: &OdeParams) -> Self {
        let disc = p.q * p.q - 4.0 * p.m * p.k;
        let scale = (p.q * p.q).max((4.0 * p.m * p.k).abs()).max(f64::MIN_POSITIVE);
        if disc.abs() <= 1e-14 * scale {
            let r = -p.q / (2.0 * p.m);
            return Closed::Repeated { r, a: p.u0, b: p.v0 - r * p.u0 };
        }
        let sq = Complex64::new(disc, 0.0).sqrt();
        let l1 = (-p.q + sq) / (2.0 * p.m);
        let l2 = (-p.q - sq) / (2.0 * p.m);
        let c1 = (p.v0 - l2 * p.u0) / (l1 - l2);
        let c2 = Complex64::new(p.u0, 0.0) - c1;
        Closed::Distinct { l1, l2, c1, c2 }
    }

    fn derivative(&self, t: f64, order: usize) -> f64 {
        match *self {
            Closed::Distinct { l1, l2, c1, c2 } => {
                let n = order as i32;
                (c1 * l1.powi(n) * (l1 * t).exp() + c2 * l2.powi(n) * (l2 * t).exp()).re
            }
            Closed::Repeated { r, a, b } => {
                // dⁿ/dtⁿ (A + Bt) e^{rt} = e^{rt} (rⁿ A + B (n r^{n−1} + rⁿ t))
                let n = order as i32;
                let rn = r.powi(n);
                let rn1 = if order == 0 { 0.0 } else { order as f64 * r.powi(n - 1) };
                (r * t).exp() * (rn * a + b * (rn1 + rn * t))
            }
        }
    }
}

/// `dⁿu/dtⁿ` of the closed-form solution at time `t`.
pub fn ode_derivative(p: &OdeParams, t: f64, order: usize) -> f64 {
    Closed::new(p).derivative(t, order)
}

pub(super) fn solve(p: &OdeParams, grid: Arc<Grid>) -> Result<Field> {
    p.validate()?;
    if grid.dim() != 1 {
        return Err(Error::InvalidGrid("the ODE needs a 1-D grid".into()));
    }
    let sol = Closed::new(p);
    Field::from_fn(grid, |c| sol.derivative(c[0], 0))
}

/// Solution on a 1-D grid with analytic derivatives for `indices`.
pub fn gen_damped_ode(p: &OdeParams, grid: Arc<Grid>, indices: &[MultiIndex]) -> Result<(Field, Jet)> {
    let field = solve(p, grid.clone())?;
    let sol = Closed::new(p);
    let mut jet = Jet::new(field.clone(), None);
    for idx in indices.iter().filter(|i| !i.is_zero()) {
        if idx.dim() != 1 {
            return Err(Error::param("index", format!("{idx} is not a 1-D index")));
        }
        let r = idx.orders()[0];
        jet.insert(idx.clone(), Field::from_fn(grid.clone(), |c| sol.derivative(c[0], r))?)?;
    }
    Ok((field, jet))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_uniform_grid;

    fn grid() -> Arc<Grid> {
        Arc::new(make_uniform_grid(&[(0.0, 20.0, 401)]).unwrap())
    }

    fn idx(r: usize) -> MultiIndex {
        MultiIndex::new(vec![r])
    }

    fn max_residual(p: &OdeParams) -> f64 {
        let (u, jet) = gen_damped_ode(p, grid(), &[idx(1), idx(2)]).unwrap();
        let du = jet.get(&idx(1)).unwrap();
        let ddu = jet.get(&idx(2)).unwrap();
        (0..u.len())
            .map(|i| (p.m * ddu.as_slice()[i] + p.q * du.as_slice()[i] + p.k * u.as_slice()[i]).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn default_parameters_start_at_one() {
        let p = OdeParams::default();
        let (u, _) = gen_damped_ode(&p, grid(), &[]).unwrap();
        assert_eq!(u.as_slice()[0], 1.0);
        assert!(ode_derivative(&p, 0.0, 1).abs() < 1e-15);
        // decaying envelope
        assert!(u.as_slice()[400].abs() < 0.2);
    }

    #[test]
    fn harmonic_oscillator_is_cosine() {
        let p = OdeParams { m: 1.0, q: 0.0, k: 1.0, u0: 1.0, v0: 0.0 };
        let g = grid();
        let (u, jet) = gen_damped_ode(&p, g.clone(), &[idx(2)]).unwrap();
        for (i, t) in g.axis(0).iter().enumerate() {
            assert!((u.as_slice()[i] - t.cos()).abs() < 1e-12);
            assert!((jet.get(&idx(2)).unwrap().as_slice()[i] + u.as_slice()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn residual_vanishes_in_all_regimes() {
        let cases = [
            OdeParams::default(),
            OdeParams { m: 1.0, q: 2.0, k: 1.0, u0: 1.0, v0: 0.5 },
            OdeParams { m: 2.0, q: 5.0, k: 1.0, u0: -1.0, v0: 2.0 },
            OdeParams { m: 0.5, q: 0.0, k: 4.0, u0: 0.3, v0: -1.0 },
        ];
        for p in cases {
            let r = max_residual(&p);
            assert!(r < 1e-10, "{p:?}: {r}");
        }
    }

    #[test]
    fn initial_velocity_respected() {
        for p in [
            OdeParams { m: 1.0, q: 2.0, k: 1.0, u0: 1.0, v0: 0.5 },
            OdeParams { m: 2.0, q: 5.0, k: 1.0, u0: -1.0, v0: 2.0 },
        ] {
            assert!((ode_derivative(&p, 0.0, 0) - p.u0).abs() < 1e-14);
            assert!((ode_derivative(&p, 0.0, 1) - p.v0).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_mass_rejected() {
        let p = OdeParams { m: 0.0, ..Default::default() };
        assert!(gen_damped_ode(&p, grid(), &[]).is_err());
    }
}
