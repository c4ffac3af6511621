use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::terms::{Factor, TermSpec};
use crate::diffmethods::Jet;
use crate::error::{Error, Result};
use crate::grid::MultiIndex;

/// Shape of the candidate term set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LibraryConfig {
    /// Highest total derivative order admitted as a factor; `None` keeps
    /// every jet entry.
    pub max_order: Option<usize>,
    /// Largest number of factors (counted with multiplicity) in one term.
    pub max_factors: usize,
    /// Adds the grid coordinates as factors.
    pub include_coordinates: bool,
    /// Lower bound on the number of nodes dropped at each end of every axis,
    /// on top of the jet's own boundary strip.
    pub min_strip: usize,
}

impl Default for LibraryConfig {
    fn default() -> Self {
        Self {
            max_order: None,
            max_factors: 2,
            include_coordinates: false,
            min_strip: 0,
        }
    }
}

/// Candidate terms evaluated on the interior nodes of a grid.
#[derive(Debug, Clone)]
pub struct TermLibrary {
    terms: Vec<TermSpec>,
    /// One column per term, one row per selected node.
    matrix: DMatrix<f64>,
    names: Vec<String>,
    strip: Vec<usize>,
}

impl TermLibrary {
    /// Library from explicit columns, mainly for synthetic problems.
    pub fn from_columns(terms: Vec<TermSpec>, columns: Vec<Vec<f64>>, names: Vec<String>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Empty("term library"));
        }
        if terms.len() != columns.len() {
            return Err(Error::param("columns", "one column per term is required"));
        }
        let rows = columns[0].len();
        if rows == 0 || columns.iter().any(|c| c.len() != rows) {
            return Err(Error::param("columns", "columns must be non-empty and of equal length"));
        }
        for (j, t) in terms.iter().enumerate() {
            if terms[..j].contains(t) {
                return Err(Error::param("terms", format!("duplicate term {t}")));
            }
        }
        let matrix = DMatrix::from_fn(rows, terms.len(), |i, j| columns[j][i]);
        if let Some(i) = matrix.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            terms,
            matrix,
            names,
            strip: Vec::new(),
        })
    }

    pub fn terms(&self) -> &[TermSpec] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Nodes dropped at each end of every axis.
    pub fn strip(&self) -> &[usize] {
        &self.strip
    }

    pub fn position(&self, term: &TermSpec) -> Option<usize> {
        self.terms.iter().position(|t| t == term)
    }

    pub fn column(&self, term: &TermSpec) -> Result<DVector<f64>> {
        let j = self
            .position(term)
            .ok_or_else(|| Error::TermNotInUniverse(term.label(&self.names)))?;
        Ok(self.matrix.column(j).into_owned())
    }

    pub fn label(&self, term: &TermSpec) -> String {
        term.label(&self.names)
    }

    pub fn parse_term(&self, s: &str) -> Result<TermSpec> {
        TermSpec::parse(s, &self.names)
    }

    /// Single derivatives (excluding `u` itself) that may serve as targets.
    pub fn derivative_terms(&self) -> Vec<TermSpec> {
        self.terms
            .iter()
            .filter(|t| t.as_single().is_some_and(|i| !i.is_zero()))
            .cloned()
            .collect()
    }

    /// Multiplies every column by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.matrix *= factor;
        out
    }
}

/// Every product of up to `max_factors` jet entries (with repetition), plus
/// the constant, evaluated on the nodes left after removing the boundary
/// strip. Terms come out in [`TermSpec`] order.
pub fn build_library(jet: &Jet, config: &LibraryConfig) -> Result<TermLibrary> {
    if config.max_factors == 0 {
        return Err(Error::param("max_factors", "must be at least 1"));
    }
    let base = jet.base();
    let grid = base.grid().clone();
    let dim = grid.dim();
    let shape = grid.shape();
    let strip: Vec<usize> = jet
        .boundary_strip()
        .iter()
        .map(|&s| s.max(config.min_strip))
        .collect();
    for (&s, &n) in strip.iter().zip(&shape) {
        if 2 * s >= n {
            return Err(Error::EmptyInterior { strip: s, len: n });
        }
    }

    let mut factors = vec![Factor::Deriv(MultiIndex::zero(dim))];
    factors.extend(
        jet.indices()
            .filter(|i| config.max_order.is_none_or(|m| i.total() <= m))
            .cloned()
            .map(Factor::Deriv),
    );
    if config.include_coordinates {
        factors.extend((0..dim).map(Factor::Coord));
    }

    // flat row-major indices of the retained nodes
    let mut nodes = Vec::new();
    let total = grid.len();
    let mut multi = vec![0usize; dim];
    for flat in 0..total {
        let mut rem = flat;
        for k in (0..dim).rev() {
            multi[k] = rem % shape[k];
            rem /= shape[k];
        }
        if multi
            .iter()
            .zip(&strip)
            .zip(&shape)
            .all(|((&i, &s), &n)| i >= s && i < n - s)
        {
            nodes.push((flat, multi.clone()));
        }
    }

    let factor_columns: Vec<Vec<f64>> = factors
        .iter()
        .map(|f| match f {
            Factor::Deriv(idx) => {
                let field = jet.get(idx)?;
                let vals = field.as_slice();
                Ok(nodes.iter().map(|(flat, _)| vals[*flat]).collect())
            }
            Factor::Coord(k) => {
                let axis = grid.axis(*k);
                Ok(nodes.iter().map(|(_, m)| axis[m[*k]]).collect())
            }
        })
        .collect::<Result<_>>()?;

    let mut terms = vec![TermSpec::constant()];
    let mut combo = Vec::new();
    enumerate_multisets(factors.len(), config.max_factors, 0, &mut combo, &mut |c| {
        terms.push(TermSpec::new(c.iter().map(|&i| (factors[i].clone(), 1))));
    });
    terms.sort();

    let rows = nodes.len();
    let mut matrix = DMatrix::from_element(rows, terms.len(), 1.0);
    for (j, term) in terms.iter().enumerate() {
        let mut col = matrix.column_mut(j);
        for (f, p) in term.factors() {
            let src = &factor_columns[factors.iter().position(|g| g == f).expect("factor")];
            for (dst, v) in col.iter_mut().zip(src) {
                *dst *= v.powi(*p as i32);
            }
        }
    }
    if let Some(i) = matrix.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(TermLibrary {
        terms,
        matrix,
        names: grid.names().to_vec(),
        strip,
    })
}

fn enumerate_multisets(n: usize, max_len: usize, start: usize, combo: &mut Vec<usize>, out: &mut impl FnMut(&[usize])) {
    if combo.len() == max_len {
        return;
    }
    for i in start..n {
        combo.push(i);
        out(combo);
        enumerate_multisets(n, max_len, i, combo, out);
        combo.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffmethods::{build_jet, DiffMethodSpec};
    use crate::grid::{make_uniform_grid, Field};
    use std::sync::Arc;

    fn line_jet() -> Jet {
        let g = Arc::new(make_uniform_grid(&[(0.0, 1.0, 41)]).unwrap().with_names(["x"]).unwrap());
        let u = Field::from_fn(g, |c| (3.0 * c[0]).sin()).unwrap();
        build_jet(&u, &[2], &DiffMethodSpec::Gradient).unwrap()
    }

    #[test]
    fn one_dimensional_enumeration() {
        let lib = build_library(&line_jet(), &LibraryConfig::default()).unwrap();
        let labels: Vec<String> = lib.terms().iter().map(|t| lib.label(t)).collect();
        assert_eq!(
            labels,
            vec!["1", "u", "u_x", "u_xx", "u^2", "u·u_x", "u·u_xx", "u_x^2", "u_x·u_xx", "u_xx^2"]
        );
        // the strip of a second-order gradient removes two nodes per end
        assert_eq!(lib.rows(), 41 - 4);
    }

    #[test]
    fn product_column_is_elementwise() {
        let lib = build_library(&line_jet(), &LibraryConfig::default()).unwrap();
        let u = lib.column(&lib.parse_term("u").unwrap()).unwrap();
        let ux = lib.column(&lib.parse_term("u_x").unwrap()).unwrap();
        let prod = lib.column(&lib.parse_term("u·u_x").unwrap()).unwrap();
        assert_eq!(prod, u.component_mul(&ux));
        let one = lib.column(&TermSpec::constant()).unwrap();
        assert!(one.iter().all(|v| *v == 1.0));
    }

    #[test]
    fn order_cap_and_coordinates() {
        let cfg = LibraryConfig {
            max_order: Some(1),
            max_factors: 1,
            include_coordinates: true,
            min_strip: 5,
        };
        let lib = build_library(&line_jet(), &cfg).unwrap();
        let labels: Vec<String> = lib.terms().iter().map(|t| lib.label(t)).collect();
        assert_eq!(labels, vec!["1", "u", "u_x", "x"]);
        assert_eq!(lib.rows(), 41 - 10);
        let x = lib.column(&lib.parse_term("x").unwrap()).unwrap();
        assert!((x[0] - 5.0 / 40.0).abs() < 1e-15);
    }

    #[test]
    fn kdv_style_library_membership() {
        let g = Arc::new(
            make_uniform_grid(&[(0.0, 1.0, 16), (-2.0, 2.0, 24)])
                .unwrap()
                .with_names(["t", "x"])
                .unwrap(),
        );
        let u = Field::from_fn(g, |c| (c[1] - c[0]).cos()).unwrap();
        let jet = build_jet(&u, &[1, 3], &DiffMethodSpec::Gradient).unwrap();
        let lib = build_library(&jet, &LibraryConfig::default()).unwrap();
        for s in ["u_t", "u_xxx", "u·u_x"] {
            assert!(lib.position(&lib.parse_term(s).unwrap()).is_some(), "{s}");
        }
        let targets: Vec<String> = lib.derivative_terms().iter().map(|t| lib.label(t)).collect();
        assert_eq!(targets.len(), 4);
        assert!(targets.contains(&"u_t".to_string()));
    }

    #[test]
    fn rejects_oversized_strip() {
        let cfg = LibraryConfig { min_strip: 30, ..Default::default() };
        assert!(matches!(build_library(&line_jet(), &cfg), Err(Error::EmptyInterior { .. })));
    }
}
