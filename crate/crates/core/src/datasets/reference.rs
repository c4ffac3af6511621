use super::DatasetSpec;
use crate::diffmethods::gradient::diff_gradient;
use crate::diffmethods::Jet;
use crate::error::{Error, Result};
use crate::grid::{Field, MultiIndex};

/// Intervals per coarse interval used for reference solves.
pub const REFERENCE_REFINEMENT: usize = 4;

/// Reference derivatives of `field` (the solution of `spec` on its coarse
/// grid). The problem is re-solved on a grid refined `factor` times, every
/// requested index is formed there by repeated central differences (axes in
/// ascending order) and the result is sampled back onto the coarse nodes.
pub fn reference_jet_numerical(
    spec: &DatasetSpec,
    field: &Field,
    indices: &[MultiIndex],
    factor: usize,
) -> Result<Jet> {
    let coarse = field.grid().clone();
    let fine_grid = std::sync::Arc::new(coarse.refined(factor)?);
    let fine = spec.solve_on(fine_grid).map_err(|e| match e {
        Error::NonConvergence { .. } | Error::Cfl { .. } => e,
        other => Error::Format(format!("refined reference solve failed: {other}")),
    })?;
    reference_from_fine(field, &fine, indices, factor)
}

/// Differentiates an already refined solution and restricts it to the grid
/// of `field`.
pub fn reference_from_fine(field: &Field, fine: &Field, indices: &[MultiIndex], factor: usize) -> Result<Jet> {
    let coarse = field.grid().clone();
    let mut jet = Jet::new(field.clone(), None);
    for idx in indices.iter().filter(|i| !i.is_zero()) {
        if idx.dim() != coarse.dim() {
            return Err(Error::param("index", format!("{idx} does not match the grid")));
        }
        let mut d = fine.clone();
        for (axis, &o) in idx.orders().iter().enumerate() {
            if o > 0 {
                d = diff_gradient(&d, axis, o)?;
            }
        }
        jet.insert(idx.clone(), d.restrict(coarse.clone(), factor)?)?;
    }
    Ok(jet)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{DatasetKind, WaveParams};
    use crate::grid::{field_mse, make_uniform_grid, AxisRange, BoundaryMode};
    use std::sync::Arc;

    #[test]
    fn linear_field_gives_exact_slope() {
        let g = Arc::new(make_uniform_grid(&[(0.0, 1.0, 9), (0.0, 2.0, 11)]).unwrap());
        let fine_grid = Arc::new(g.refined(4).unwrap());
        let u = Field::from_fn(g, |c| 0.5 + 3.0 * c[1]).unwrap();
        let fine = Field::from_fn(fine_grid, |c| 0.5 + 3.0 * c[1]).unwrap();
        let idx = MultiIndex::new(vec![0, 1]);
        let jet = reference_from_fine(&u, &fine, std::slice::from_ref(&idx), 4).unwrap();
        assert!(jet.get(&idx).unwrap().as_slice().iter().all(|v| (v - 3.0).abs() < 1e-10));
    }

    fn small_wave() -> DatasetSpec {
        DatasetSpec::new(DatasetKind::Wave(WaveParams::default()))
            .with_grid(vec![AxisRange::new(0.0, 1.0, 65), AxisRange::new(0.0, 1.0, 65)])
    }

    #[test]
    fn wave_reference_satisfies_equation() {
        let spec = small_wave();
        let utt = MultiIndex::new(vec![2, 0]);
        let uxx = MultiIndex::new(vec![0, 2]);
        let data = spec.generate_with(&[utt.clone(), uxx.clone()]).unwrap();
        let c2 = 0.0625;
        let lhs = data.reference.get(&uxx).unwrap();
        let rhs = data.reference.get(&utt).unwrap().map(|v| c2 * v).unwrap();
        let resid = field_mse(lhs, &rhs, BoundaryMode::interior(2)).unwrap();
        let scale = lhs.variance();
        assert!(resid < 1e-3 * scale, "{resid} vs {scale}");
    }

    #[test]
    fn refinement_levels_agree() {
        let spec = small_wave();
        let uxx = MultiIndex::new(vec![0, 2]);
        let field = spec.solve_on(spec.grid().unwrap()).unwrap();
        let r4 = reference_jet_numerical(&spec, &field, std::slice::from_ref(&uxx), 4).unwrap();
        let r8 = reference_jet_numerical(&spec, &field, std::slice::from_ref(&uxx), 8).unwrap();
        let a = r4.get(&uxx).unwrap();
        let b = r8.get(&uxx).unwrap();
        let diff = field_mse(a, b, BoundaryMode::FullDomain).unwrap();
        assert!(diff < 0.05 * b.mean_square(), "{diff}");
    }
}
