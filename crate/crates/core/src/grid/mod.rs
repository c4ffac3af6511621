//! Uniform rectangular grids and the scalar fields that live on them.
//!
//! Everything downstream (datasets, differentiation backends, discovery)
//! exchanges data as [`Field`] values, which pair a dense row-major tensor
//! with a shared [`Grid`].

mod field;
mod index;
pub mod io;
mod noise;

pub use field::{field_mse, BoundaryMode, Field};
pub use index::MultiIndex;
pub use noise::{add_noise, NoiseSpec};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible axis length; five nodes is the widest stencil used
/// by the boundary formulas.
pub const MIN_AXIS_LEN: usize = 5;

const SPACING_TOLERANCE: f64 = 1e-12;

/// One closed interval `[lo, hi]` sampled at `n` equally spaced nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl AxisRange {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        Self { lo, hi, n }
    }
}

impl From<(f64, f64, usize)> for AxisRange {
    fn from((lo, hi, n): (f64, f64, usize)) -> Self {
        Self { lo, hi, n }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    axes: Vec<Vec<f64>>,
    spacing: Vec<f64>,
    names: Vec<String>,
}

/// Builds a uniform grid from per-axis `(lo, hi, n_points)` ranges.
pub fn make_uniform_grid<R: Into<AxisRange> + Copy>(ranges: &[R]) -> Result<Grid> {
    let ranges: Vec<AxisRange> = ranges.iter().map(|&r| r.into()).collect();
    Grid::uniform(&ranges)
}

impl Grid {
    pub fn uniform(ranges: &[AxisRange]) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::InvalidGrid("grid needs at least one axis".into()));
        }
        let mut axes = Vec::with_capacity(ranges.len());
        for (k, r) in ranges.iter().enumerate() {
            if !(r.lo.is_finite() && r.hi.is_finite()) {
                return Err(Error::InvalidGrid(format!("axis {k}: non-finite bounds")));
            }
            if r.lo >= r.hi {
                return Err(Error::InvalidGrid(format!(
                    "axis {k}: range [{}, {}] is not increasing",
                    r.lo, r.hi
                )));
            }
            if r.n < MIN_AXIS_LEN {
                return Err(Error::InvalidGrid(format!(
                    "axis {k}: {} points, need at least {MIN_AXIS_LEN}",
                    r.n
                )));
            }
            let h = (r.hi - r.lo) / (r.n - 1) as f64;
            let mut axis: Vec<f64> = (0..r.n).map(|i| r.lo + i as f64 * h).collect();
            // pin the endpoint so that `hi` is reproduced exactly
            axis[r.n - 1] = r.hi;
            axes.push(axis);
        }
        Self::from_axes(axes)
    }

    /// Validates explicit coordinate vectors; each must be strictly
    /// increasing with constant spacing.
    pub fn from_axes(axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidGrid("grid needs at least one axis".into()));
        }
        let mut spacing = Vec::with_capacity(axes.len());
        for (k, axis) in axes.iter().enumerate() {
            if axis.len() < MIN_AXIS_LEN {
                return Err(Error::InvalidGrid(format!(
                    "axis {k}: {} points, need at least {MIN_AXIS_LEN}",
                    axis.len()
                )));
            }
            let n = axis.len();
            let h = (axis[n - 1] - axis[0]) / (n - 1) as f64;
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidGrid(format!("axis {k} is not increasing")));
            }
            // floor the tolerance at the rounding noise of the coordinates themselves
            let magnitude = axis[0].abs().max(axis[n - 1].abs());
            let tol = SPACING_TOLERANCE.max(8.0 * f64::EPSILON * magnitude / h);
            for w in axis.windows(2) {
                let d = w[1] - w[0];
                if d <= 0.0 {
                    return Err(Error::InvalidGrid(format!("axis {k} is not strictly increasing")));
                }
                if ((d - h) / h).abs() > tol {
                    return Err(Error::InvalidGrid(format!("axis {k} is not uniformly spaced")));
                }
            }
            spacing.push(h);
        }
        let names = default_axis_names(axes.len());
        Ok(Self {
            axes,
            spacing,
            names,
        })
    }

    /// Replaces the axis labels used when printing derivative and term names.
    pub fn with_names<S: Into<String>>(mut self, names: impl IntoIterator<Item = S>) -> Result<Self> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() != self.dim() {
            return Err(Error::InvalidGrid(format!(
                "{} axis names for a {}-D grid",
                names.len(),
                self.dim()
            )));
        }
        if names.iter().any(|n| n.is_empty() || n.contains(char::is_whitespace)) {
            return Err(Error::InvalidGrid("axis names must be non-empty words".into()));
        }
        self.names = names;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, k: usize) -> &[f64] {
        &self.axes[k]
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn step(&self, k: usize) -> f64 {
        self.spacing[k]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn ranges(&self) -> Vec<AxisRange> {
        self.axes
            .iter()
            .map(|a| AxisRange::new(a[0], a[a.len() - 1], a.len()))
            .collect()
    }

    /// Grid with `factor` times as many intervals along every axis; every
    /// node of `self` is also a node of the refined grid.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::param("factor", "refinement factor must be ≥ 1"));
        }
        let ranges: Vec<AxisRange> = self
            .ranges()
            .into_iter()
            .map(|r| AxisRange::new(r.lo, r.hi, (r.n - 1) * factor + 1))
            .collect();
        Self::uniform(&ranges)?.with_names(self.names.clone())
    }

    /// Two grids are compatible when they have the same shape and their
    /// coordinates agree to rounding.
    pub fn same_as(&self, other: &Grid) -> bool {
        if self.axes.len() != other.axes.len() {
            return false;
        }
        self.axes.iter().zip(&other.axes).all(|(a, b)| {
            a.len() == b.len()
                && a.iter().zip(b).all(|(x, y)| {
                    (x - y).abs() <= SPACING_TOLERANCE * (1.0 + x.abs().max(y.abs()))
                })
        })
    }
}

fn default_axis_names(dim: usize) -> Vec<String> {
    match dim {
        1 => vec!["t".into()],
        2 => vec!["t".into(), "x".into()],
        3 => vec!["t".into(), "x".into(), "y".into()],
        _ => (0..dim).map(|k| format!("x{k}")).collect(),
    }
}
