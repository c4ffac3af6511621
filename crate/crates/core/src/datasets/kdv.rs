use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::positive;
use crate::diffmethods::Jet;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, MultiIndex};

/// One-soliton solution `u = 2k² sech²(k (x − 4k² t))` of
/// `u_t + 6 u u_x + u_xxx = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KdvParams {
    pub k_sol: f64,
}

impl Default for KdvParams {
    fn default() -> Self {
        Self { k_sol: 0.7 }
    }
}

impl KdvParams {
    pub fn validate(&self) -> Result<()> {
        positive("k_sol", self.k_sol)
    }

    pub fn amplitude(&self) -> f64 {
        2.0 * self.k_sol * self.k_sol
    }

    pub fn speed(&self) -> f64 {
        4.0 * self.k_sol * self.k_sol
    }
}

/// `dⁿ/dξⁿ sech² ξ` as a polynomial `Σ c · sᵃ τᵇ` in `s = sech ξ`,
/// `τ = tanh ξ`, using `s' = −s τ` and `τ' = s²`.
fn sech2_derivative_terms(n: usize) -> BTreeMap<(u32, u32), f64> {
    let mut terms = BTreeMap::from([((2, 0), 1.0)]);
    for _ in 0..n {
        let mut next = BTreeMap::new();
        for (&(a, b), &c) in &terms {
            if a > 0 {
                *next.entry((a, b + 1)).or_insert(0.0) -= a as f64 * c;
            }
            if b > 0 {
                *next.entry((a + 2, b - 1)).or_insert(0.0) += b as f64 * c;
            }
        }
        next.retain(|_, c: &mut f64| *c != 0.0);
        terms = next;
    }
    terms
}

fn eval_terms(terms: &BTreeMap<(u32, u32), f64>, xi: f64) -> f64 {
    let s = 1.0 / xi.cosh();
    let tau = xi.tanh();
    terms
        .iter()
        .map(|(&(a, b), c)| c * s.powi(a as i32) * tau.powi(b as i32))
        .sum()
}

/// Analytic `∂ₜ^{ot} ∂ₓ^{ox} u` at `(t, x)`.
pub fn kdv_derivative(p: &KdvParams, t: f64, x: f64, ot: usize, ox: usize) -> f64 {
    let k = p.k_sol;
    let xi = k * (x - p.speed() * t);
    let terms = sech2_derivative_terms(ot + ox);
    // ∂ₓ = k ∂_ξ and ∂ₜ = −4k³ ∂_ξ
    let factor = p.amplitude() * k.powi(ox as i32) * (-4.0 * k * k * k).powi(ot as i32);
    factor * eval_terms(&terms, xi)
}

fn check_grid(grid: &Grid) -> Result<()> {
    if grid.dim() != 2 {
        return Err(Error::InvalidGrid("the KdV soliton needs a 2-D (t, x) grid".into()));
    }
    Ok(())
}

pub(super) fn solve(p: &KdvParams, grid: Arc<Grid>) -> Result<Field> {
    p.validate()?;
    check_grid(&grid)?;
    Field::from_fn(grid, |c| kdv_derivative(p, c[0], c[1], 0, 0))
}

/// Soliton on a `(t, x)` grid with analytic derivatives for `indices`.
pub fn gen_kdv_soliton(p: &KdvParams, grid: Arc<Grid>, indices: &[MultiIndex]) -> Result<(Field, Jet)> {
    let field = solve(p, grid.clone())?;
    let mut jet = Jet::new(field.clone(), None);
    for idx in indices.iter().filter(|i| !i.is_zero()) {
        if idx.dim() != 2 {
            return Err(Error::param("index", format!("{idx} is not a 2-D index")));
        }
        let (ot, ox) = (idx.orders()[0], idx.orders()[1]);
        let terms = sech2_derivative_terms(ot + ox);
        let k = p.k_sol;
        let factor = p.amplitude() * k.powi(ox as i32) * (-4.0 * k * k * k).powi(ot as i32);
        let f = Field::from_fn(grid.clone(), |c| {
            factor * eval_terms(&terms, k * (c[1] - p.speed() * c[0]))
        })?;
        jet.insert(idx.clone(), f)?;
    }
    Ok((field, jet))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_uniform_grid;

    fn grid() -> Arc<Grid> {
        Arc::new(
            make_uniform_grid(&[(0.0, 4.0, 41), (-15.0, 15.0, 301)])
                .unwrap()
                .with_names(["t", "x"])
                .unwrap(),
        )
    }

    #[test]
    fn amplitude_and_speed() {
        let p = KdvParams::default();
        assert!((p.amplitude() - 0.98).abs() < 1e-15);
        assert!((p.speed() - 1.96).abs() < 1e-15);
        assert!((kdv_derivative(&p, 0.0, 0.0, 0, 0) - 0.98).abs() < 1e-15);
    }

    #[test]
    fn low_order_terms_match_hand_derivation() {
        // u_ξ = −2A s²τ, u_ξξ = A(4s² − 6s⁴), u_ξξξ = Aτ(−8s² + 24s⁴)
        let xi: f64 = 0.37;
        let s = 1.0 / xi.cosh();
        let tau = xi.tanh();
        let d1 = eval_terms(&sech2_derivative_terms(1), xi);
        let d2 = eval_terms(&sech2_derivative_terms(2), xi);
        let d3 = eval_terms(&sech2_derivative_terms(3), xi);
        assert!((d1 + 2.0 * s * s * tau).abs() < 1e-14);
        assert!((d2 - (4.0 * s * s - 6.0 * s.powi(4))).abs() < 1e-14);
        assert!((d3 - tau * (-8.0 * s * s + 24.0 * s.powi(4))).abs() < 1e-14);
    }

    #[test]
    fn reference_jet_satisfies_kdv() {
        let p = KdvParams::default();
        let ids = [MultiIndex::new(vec![1, 0]), MultiIndex::new(vec![0, 1]), MultiIndex::new(vec![0, 3])];
        let (u, jet) = gen_kdv_soliton(&p, grid(), &ids).unwrap();
        let ut = jet.get(&ids[0]).unwrap().as_slice();
        let ux = jet.get(&ids[1]).unwrap().as_slice();
        let uxxx = jet.get(&ids[2]).unwrap().as_slice();
        let worst = (0..u.len())
            .map(|i| (ut[i] + 6.0 * u.as_slice()[i] * ux[i] + uxxx[i]).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn peak_moves_at_soliton_speed() {
        let p = KdvParams::default();
        let g = grid();
        let (u, _) = gen_kdv_soliton(&p, g.clone(), &[]).unwrap();
        let nx = g.shape()[1];
        let dx = g.step(1);
        for it in [0, 10, 20, 40] {
            let row = &u.as_slice()[it * nx..(it + 1) * nx];
            let arg = (0..nx).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            let expected = p.speed() * g.axis(0)[it];
            assert!((g.axis(1)[arg] - expected).abs() <= dx, "t index {it}");
        }
    }

    #[test]
    fn mixed_index_via_chain_rule() {
        let p = KdvParams::default();
        let (t, x, h) = (0.5, 1.3, 1e-5);
        let fd = (kdv_derivative(&p, t + h, x, 0, 1) - kdv_derivative(&p, t - h, x, 0, 1)) / (2.0 * h);
        assert!((fd - kdv_derivative(&p, t, x, 1, 1)).abs() < 1e-7);
    }
}
