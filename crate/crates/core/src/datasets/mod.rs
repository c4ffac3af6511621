//! Benchmark solution fields with known governing equations.
//!
//! | kind          | equation                          | solution                |
//! |---------------|-----------------------------------|-------------------------|
//! | `damped_ode`  | `m u'' + q u' + k u = 0`          | closed form             |
//! | `kdv_soliton` | `u_t + 6 u u_x + u_xxx = 0`       | closed form             |
//! | `burgers`     | `u_t + u u_x = v u_xx`            | IMEX finite differences |
//! | `wave`        | `u_xx = c² u_tt`                  | leapfrog                |
//! | `laplace`     | `u_xx + u_yy = 0`                 | SOR                     |
//!
//! Each generator also yields a reference jet. Closed-form datasets get
//! analytic derivatives; the numerical ones get derivatives from a solve on
//! a 4× refined grid, differenced there and sampled back
//! ([`reference_jet_numerical`]).

mod burgers;
mod kdv;
mod laplace;
mod ode;
mod reference;
mod wave;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diffmethods::Jet;
use crate::error::{Error, Result};
use crate::grid::{AxisRange, Field, Grid, MultiIndex};

pub use burgers::{gen_burgers, BurgersParams};
pub use kdv::{gen_kdv_soliton, kdv_derivative, KdvParams};
pub use laplace::{gen_laplace, LaplaceBoundary, LaplaceParams};
pub use ode::{gen_damped_ode, ode_derivative, OdeParams};
pub use reference::{reference_jet_numerical, REFERENCE_REFINEMENT};
pub use wave::{gen_wave, WaveParams};

/// Reference derivatives of a dataset; `method()` is `None`.
pub type ReferenceJet = Jet;

/// Initial profile for the time-marching generators, on `x ∈ [lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialProfile {
    /// `amplitude · sin(mode · π (x − lo) / L)`, zero at both ends.
    Sine { amplitude: f64, mode: u32 },
}

impl Default for InitialProfile {
    fn default() -> Self {
        InitialProfile::Sine {
            amplitude: 1.0,
            mode: 1,
        }
    }
}

impl InitialProfile {
    pub fn eval(&self, x: f64, lo: f64, hi: f64) -> f64 {
        match *self {
            InitialProfile::Sine { amplitude, mode } => {
                amplitude * (mode as f64 * std::f64::consts::PI * (x - lo) / (hi - lo)).sin()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            InitialProfile::Sine { amplitude, mode } => {
                if !amplitude.is_finite() {
                    return Err(Error::param("amplitude", "must be finite"));
                }
                if mode == 0 {
                    return Err(Error::param("mode", "must be at least 1"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetKind {
    #[serde(alias = "ode")]
    DampedOde(OdeParams),
    #[serde(alias = "kdv")]
    KdvSoliton(KdvParams),
    Burgers(BurgersParams),
    Wave(WaveParams),
    Laplace(LaplaceParams),
}

impl DatasetKind {
    pub fn key(&self) -> &'static str {
        match self {
            DatasetKind::DampedOde(_) => "ode",
            DatasetKind::KdvSoliton(_) => "kdv",
            DatasetKind::Burgers(_) => "burgers",
            DatasetKind::Wave(_) => "wave",
            DatasetKind::Laplace(_) => "laplace",
        }
    }

    pub fn display_name(&self) -> &'static str {
        match self {
            DatasetKind::DampedOde(_) => "ODE",
            DatasetKind::KdvSoliton(_) => "KdV",
            DatasetKind::Burgers(_) => "Burgers",
            DatasetKind::Wave(_) => "Wave",
            DatasetKind::Laplace(_) => "Laplace",
        }
    }

    pub fn axis_names(&self) -> Vec<&'static str> {
        match self {
            DatasetKind::DampedOde(_) => vec!["t"],
            DatasetKind::Laplace(_) => vec!["x", "y"],
            _ => vec!["t", "x"],
        }
    }

    pub fn default_grid(&self) -> Vec<AxisRange> {
        match self {
            // spacing 0.2 over 511 steps
            DatasetKind::DampedOde(_) => vec![AxisRange::new(0.0, 102.2, 512)],
            DatasetKind::KdvSoliton(_) => vec![AxisRange::new(0.0, 4.0, 128), AxisRange::new(-10.0, 10.0, 256)],
            DatasetKind::Burgers(_) => vec![AxisRange::new(0.0, 3.0, 256), AxisRange::new(0.0, 10.0, 256)],
            DatasetKind::Wave(_) => vec![AxisRange::new(0.0, 1.0, 256), AxisRange::new(0.0, 1.0, 256)],
            DatasetKind::Laplace(_) => vec![AxisRange::new(0.0, 1.0, 128), AxisRange::new(0.0, 1.0, 128)],
        }
    }

    /// Highest pure derivative order per axis that the equation involves.
    pub fn default_max_orders(&self) -> Vec<usize> {
        match self {
            DatasetKind::DampedOde(_) => vec![2],
            DatasetKind::KdvSoliton(_) => vec![1, 3],
            DatasetKind::Burgers(_) => vec![1, 2],
            DatasetKind::Wave(_) => vec![2, 2],
            DatasetKind::Laplace(_) => vec![2, 2],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DatasetKind::DampedOde(p) => p.validate(),
            DatasetKind::KdvSoliton(p) => p.validate(),
            DatasetKind::Burgers(p) => p.validate(),
            DatasetKind::Wave(p) => p.validate(),
            DatasetKind::Laplace(p) => p.validate(),
        }
    }
}

/// A dataset kind with its physical parameters and optional grid override.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    #[serde(flatten)]
    pub kind: DatasetKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<AxisRange>>,
}

impl DatasetSpec {
    pub fn new(kind: DatasetKind) -> Self {
        Self { kind, grid: None }
    }

    pub fn with_grid(mut self, ranges: Vec<AxisRange>) -> Self {
        self.grid = Some(ranges);
        self
    }

    pub fn damped_ode() -> Self {
        Self::new(DatasetKind::DampedOde(OdeParams::default()))
    }

    pub fn kdv() -> Self {
        Self::new(DatasetKind::KdvSoliton(KdvParams::default()))
    }

    pub fn burgers() -> Self {
        Self::new(DatasetKind::Burgers(BurgersParams::default()))
    }

    pub fn wave() -> Self {
        Self::new(DatasetKind::Wave(WaveParams::default()))
    }

    pub fn laplace() -> Self {
        Self::new(DatasetKind::Laplace(LaplaceParams::default()))
    }

    pub fn all_defaults() -> Vec<Self> {
        vec![Self::burgers(), Self::kdv(), Self::laplace(), Self::damped_ode(), Self::wave()]
    }

    pub fn key(&self) -> &'static str {
        self.kind.key()
    }

    /// Default spec for a kind key such as `kdv` or `damped_ode`.
    pub fn from_key(key: &str) -> Result<Self> {
        let norm = key.trim().to_ascii_lowercase().replace('-', "_");
        let spec = match norm.as_str() {
            "ode" | "damped_ode" => Self::damped_ode(),
            "kdv" | "kdv_soliton" => Self::kdv(),
            "burgers" => Self::burgers(),
            "wave" => Self::wave(),
            "laplace" => Self::laplace(),
            _ => {
                return Err(Error::param(
                    "dataset",
                    format!("unknown dataset `{key}`; expected ode, kdv, burgers, wave or laplace"),
                ))
            }
        };
        Ok(spec)
    }

    pub fn ranges(&self) -> Vec<AxisRange> {
        self.grid.clone().unwrap_or_else(|| self.kind.default_grid())
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        let ranges = self.ranges();
        let names = self.kind.axis_names();
        if ranges.len() != names.len() {
            return Err(Error::InvalidGrid(format!(
                "{} needs a {}-D grid, got {} axes",
                self.kind.display_name(),
                names.len(),
                ranges.len()
            )));
        }
        Ok(Arc::new(Grid::uniform(&ranges)?.with_names(names)?))
    }

    pub fn validate(&self) -> Result<()> {
        self.kind.validate()?;
        self.grid().map(|_| ())
    }

    /// Solves the problem on `grid`, which must have this dataset's
    /// dimension and axis names.
    pub fn solve_on(&self, grid: Arc<Grid>) -> Result<Field> {
        match &self.kind {
            DatasetKind::DampedOde(p) => ode::solve(p, grid),
            DatasetKind::KdvSoliton(p) => kdv::solve(p, grid),
            DatasetKind::Burgers(p) => gen_burgers(p, grid),
            DatasetKind::Wave(p) => gen_wave(p, grid),
            DatasetKind::Laplace(p) => gen_laplace(p, grid),
        }
    }

    pub fn default_reference_indices(&self) -> Vec<MultiIndex> {
        let orders = self.kind.default_max_orders();
        let dim = orders.len();
        orders
            .iter()
            .enumerate()
            .flat_map(|(axis, &m)| (1..=m).map(move |r| MultiIndex::along(dim, axis, r)))
            .collect()
    }

    pub fn generate(&self) -> Result<Dataset> {
        self.generate_with(&self.default_reference_indices())
    }

    /// Field plus reference derivatives for the given multi-indices.
    pub fn generate_with(&self, indices: &[MultiIndex]) -> Result<Dataset> {
        self.validate()?;
        let grid = self.grid()?;
        let (field, reference) = match &self.kind {
            DatasetKind::DampedOde(p) => gen_damped_ode(p, grid, indices)?,
            DatasetKind::KdvSoliton(p) => gen_kdv_soliton(p, grid, indices)?,
            _ => {
                let field = self.solve_on(grid)?;
                let reference = reference_jet_numerical(self, &field, indices, REFERENCE_REFINEMENT)?;
                (field, reference)
            }
        };
        Ok(Dataset {
            spec: self.clone(),
            field,
            reference,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub spec: DatasetSpec,
    pub field: Field,
    pub reference: ReferenceJet,
}

impl Dataset {
    pub fn grid(&self) -> &Arc<Grid> {
        self.field.grid()
    }
}

pub(crate) fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be positive and finite, got {v}")))
    }
}

pub(crate) fn finite(name: &'static str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, "must be finite"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_spec_with_grid_override() {
        let text = r#"
            kind = "burgers"
            v = 0.1
            grid = [{ lo = 0.0, hi = 1.0, n = 33 }, { lo = 0.0, hi = 2.0, n = 65 }]
        "#;
        let spec: DatasetSpec = toml::from_str(text).unwrap();
        match &spec.kind {
            DatasetKind::Burgers(p) => assert_eq!(p.v, 0.1),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(spec.grid().unwrap().shape(), vec![33, 65]);
        assert_eq!(spec.grid().unwrap().names(), &["t", "x"]);
    }

    #[test]
    fn spec_round_trips() {
        for spec in DatasetSpec::all_defaults() {
            let text = serde_json::to_string(&spec).unwrap();
            let back: DatasetSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(back, spec);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let spec = DatasetSpec::kdv().with_grid(vec![AxisRange::new(0.0, 1.0, 10)]);
        assert!(spec.validate().is_err());
    }

    #[test]
    fn default_indices() {
        let labels: Vec<String> = DatasetSpec::kdv()
            .default_reference_indices()
            .iter()
            .map(|i| i.label(&["t".into(), "x".into()]))
            .collect();
        assert_eq!(labels, vec!["u_t", "u_x", "u_xx", "u_xxx"]);
    }
}
