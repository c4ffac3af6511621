use std::sync::Arc;

use ndarray::{ArrayD, ArrayViewD, Axis, IxDyn, Slice};
use serde::{Deserialize, Serialize};

use super::Grid;
use crate::error::{Error, Result};

/// Scalar values, one per grid node, stored row-major.
#[derive(Debug, Clone)]
pub struct Field {
    grid: Arc<Grid>,
    values: ArrayD<f64>,
}

impl Field {
    pub fn new(grid: Arc<Grid>, values: ArrayD<f64>) -> Result<Self> {
        if values.shape() != grid.shape().as_slice() {
            return Err(Error::Format(format!(
                "value shape {:?} does not match grid shape {:?}",
                values.shape(),
                grid.shape()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        // keep everything in standard layout so flat slices are row-major
        let values = if values.is_standard_layout() {
            values
        } else {
            values.as_standard_layout().into_owned()
        };
        Ok(Self { grid, values })
    }

    pub fn from_vec(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        let shape = grid.shape();
        let arr = ArrayD::from_shape_vec(IxDyn(&shape), values)
            .map_err(|e| Error::Format(e.to_string()))?;
        Self::new(grid, arr)
    }

    /// Evaluates `f` at every node; the closure receives the node coordinates.
    pub fn from_fn(grid: Arc<Grid>, mut f: impl FnMut(&[f64]) -> f64) -> Result<Self> {
        let shape = grid.shape();
        let mut coords = vec![0.0; shape.len()];
        let values = ArrayD::from_shape_fn(IxDyn(&shape), |idx| {
            for (k, c) in coords.iter_mut().enumerate() {
                *c = grid.axis(k)[idx[k]];
            }
            f(&coords)
        });
        Self::new(grid, values)
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = ArrayD::zeros(IxDyn(&grid.shape()));
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &ArrayD<f64> {
        &self.values
    }

    pub fn view(&self) -> ArrayViewD<'_, f64> {
        self.values.view()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values
            .as_slice()
            .expect("field values are kept in standard layout")
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn shares_grid(&self, other: &Field) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || self.grid.same_as(&other.grid)
    }

    /// Applies a 1-D transform to every lane along `axis`. The closure reads
    /// the input lane and writes the output lane of the same length.
    pub fn map_lanes<F>(&self, axis: usize, mut f: F) -> Result<Field>
    where
        F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    {
        if axis >= self.grid.dim() {
            return Err(Error::param("axis", format!("axis {axis} out of range")));
        }
        let n = self.grid.shape()[axis];
        let mut out = ArrayD::zeros(self.values.raw_dim());
        let mut input = vec![0.0; n];
        let mut output = vec![0.0; n];
        for (lane_in, mut lane_out) in self
            .values
            .lanes(Axis(axis))
            .into_iter()
            .zip(out.lanes_mut(Axis(axis)))
        {
            for (dst, src) in input.iter_mut().zip(lane_in.iter()) {
                *dst = *src;
            }
            f(&input, &mut output)?;
            for (dst, src) in lane_out.iter_mut().zip(&output) {
                *dst = *src;
            }
        }
        Field::new(self.grid.clone(), out)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Field> {
        Field::new(self.grid.clone(), self.values.mapv(f))
    }

    /// `a·self + b·other` on a shared grid.
    pub fn lin_comb(&self, a: f64, other: &Field, b: f64) -> Result<Field> {
        if !self.shares_grid(other) {
            return Err(Error::GridMismatch);
        }
        let values = &self.values * a + &other.values * b;
        Field::new(self.grid.clone(), values)
    }

    /// Samples every `factor`-th node along every axis onto `coarse`.
    pub fn restrict(&self, coarse: Arc<Grid>, factor: usize) -> Result<Field> {
        let expected: Vec<usize> = coarse.shape().iter().map(|n| (n - 1) * factor + 1).collect();
        if expected != self.grid.shape() {
            return Err(Error::GridMismatch);
        }
        let view = self
            .values
            .slice_each_axis(|_| Slice::new(0, None, factor as isize));
        Field::new(coarse, view.to_owned())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn mean_square(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() / self.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let n = self.len() as f64;
        let mean = self.values.sum() / n;
        self.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
    }
}

/// Which nodes enter an error norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum BoundaryMode {
    FullDomain,
    /// Drops `strip_width` nodes from both ends of every axis.
    InteriorOnly { strip_width: usize },
}

impl BoundaryMode {
    pub fn interior(strip_width: usize) -> Self {
        BoundaryMode::InteriorOnly { strip_width }
    }

    pub(crate) fn validate(&self, shape: &[usize]) -> Result<()> {
        if let BoundaryMode::InteriorOnly { strip_width } = *self {
            if strip_width == 0 {
                return Err(Error::param("strip_width", "must be at least 1"));
            }
            for &len in shape {
                if 2 * strip_width >= len {
                    return Err(Error::EmptyInterior {
                        strip: strip_width,
                        len,
                    });
                }
            }
        }
        Ok(())
    }

    /// View of the selected node set.
    pub fn select<'a>(&self, values: &'a ArrayD<f64>) -> Result<ArrayViewD<'a, f64>> {
        self.validate(values.shape())?;
        Ok(match *self {
            BoundaryMode::FullDomain => values.view(),
            BoundaryMode::InteriorOnly { strip_width } => {
                let w = strip_width as isize;
                values.slice_each_axis(|_| Slice::new(w, Some(-w), 1))
            }
        })
    }
}

/// Mean squared difference over the nodes selected by `mode`.
pub fn field_mse(a: &Field, b: &Field, mode: BoundaryMode) -> Result<f64> {
    if !a.shares_grid(b) {
        return Err(Error::GridMismatch);
    }
    let va = mode.select(&a.values)?;
    let vb = mode.select(&b.values)?;
    let n = va.len();
    let sum: f64 = va.iter().zip(vb.iter()).map(|(x, y)| (x - y).powi(2)).sum();
    Ok(sum / n as f64)
}
