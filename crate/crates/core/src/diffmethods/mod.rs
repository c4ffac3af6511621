//! Numerical differentiation backends behind one interface.
//!
//! | method       | idea                                                     |
//! |--------------|----------------------------------------------------------|
//! | `gradient`   | second-order central differences, applied repeatedly     |
//! | `polynomial` | windowed least-squares fit in the Chebyshev basis        |
//! | `spectral`   | FFT derivative with a Butterworth low-pass filter        |
//! | `total_var`  | total-variation regularised inversion of integration     |
//! | `inverse`    | Tikhonov regularised inversion of integration            |
//! | `adaptive`   | polynomial fit with a per-node window chosen by GCV      |
//!
//! `inverse` and `adaptive` have no canonical formulation in the literature
//! this benchmark follows; the versions here are explicit stand-ins (see the
//! module docs of [`inverse`] and [`adaptive`]).

pub mod adaptive;
mod error_balance;
pub mod gradient;
pub mod inverse;
mod jet;
pub mod polynomial;
pub mod spectral;
pub mod total_variation;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Field;

pub use adaptive::{diff_adaptive, AdaptiveParams};
pub use error_balance::{estimate_k_bound, optimal_step, total_error};
pub use gradient::diff_gradient;
pub use inverse::{diff_inverse, InverseParams};
pub use jet::{build_jet, build_jet_indices, mixed_commutator, Jet};
pub use polynomial::{diff_polynomial, PolynomialParams};
pub use spectral::{butterworth_gain, diff_spectral, SpectralParams};
pub use total_variation::{diff_total_variation, TotalVarParams};

/// Backend kind without parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffMethod {
    Gradient,
    Adaptive,
    Polynomial,
    Spectral,
    Inverse,
    TotalVar,
}

impl DiffMethod {
    pub const ALL: [DiffMethod; 6] = [
        DiffMethod::Gradient,
        DiffMethod::Adaptive,
        DiffMethod::Polynomial,
        DiffMethod::Spectral,
        DiffMethod::Inverse,
        DiffMethod::TotalVar,
    ];

    /// Identifier used in configs and file names.
    pub fn key(self) -> &'static str {
        match self {
            DiffMethod::Gradient => "gradient",
            DiffMethod::Adaptive => "adaptive",
            DiffMethod::Polynomial => "polynomial",
            DiffMethod::Spectral => "spectral",
            DiffMethod::Inverse => "inverse",
            DiffMethod::TotalVar => "total_var",
        }
    }

    /// Name used in tables and plots.
    pub fn display_name(self) -> &'static str {
        match self {
            DiffMethod::Gradient => "Gradient",
            DiffMethod::Adaptive => "Adaptive",
            DiffMethod::Polynomial => "Polynomial",
            DiffMethod::Spectral => "Spectral",
            DiffMethod::Inverse => "Inverse",
            DiffMethod::TotalVar => "Total_var",
        }
    }

    pub fn default_spec(self) -> DiffMethodSpec {
        match self {
            DiffMethod::Gradient => DiffMethodSpec::Gradient,
            DiffMethod::Adaptive => DiffMethodSpec::Adaptive(Default::default()),
            DiffMethod::Polynomial => DiffMethodSpec::Polynomial(Default::default()),
            DiffMethod::Spectral => DiffMethodSpec::Spectral(Default::default()),
            DiffMethod::Inverse => DiffMethodSpec::Inverse(Default::default()),
            DiffMethod::TotalVar => DiffMethodSpec::TotalVar(Default::default()),
        }
    }
}

impl fmt::Display for DiffMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl std::str::FromStr for DiffMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        DiffMethod::ALL
            .into_iter()
            .find(|m| m.key() == norm || m.display_name().to_ascii_lowercase() == norm)
            .ok_or_else(|| Error::param("method", format!("unknown differentiation method `{s}`")))
    }
}

/// A backend together with its parameters.
///
/// Serialised with an inline `method` tag, e.g.
/// `{ method = "polynomial", window = 15, poly_order = 4 }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum DiffMethodSpec {
    Gradient,
    Adaptive(AdaptiveParams),
    Polynomial(PolynomialParams),
    Spectral(SpectralParams),
    Inverse(InverseParams),
    TotalVar(TotalVarParams),
}

impl DiffMethodSpec {
    pub fn method(&self) -> DiffMethod {
        match self {
            DiffMethodSpec::Gradient => DiffMethod::Gradient,
            DiffMethodSpec::Adaptive(_) => DiffMethod::Adaptive,
            DiffMethodSpec::Polynomial(_) => DiffMethod::Polynomial,
            DiffMethodSpec::Spectral(_) => DiffMethod::Spectral,
            DiffMethodSpec::Inverse(_) => DiffMethod::Inverse,
            DiffMethodSpec::TotalVar(_) => DiffMethod::TotalVar,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DiffMethodSpec::Gradient => Ok(()),
            DiffMethodSpec::Adaptive(p) => p.validate(),
            DiffMethodSpec::Polynomial(p) => p.validate(),
            DiffMethodSpec::Spectral(p) => p.validate(),
            DiffMethodSpec::Inverse(p) => p.validate(),
            DiffMethodSpec::TotalVar(p) => p.validate(),
        }
    }

    /// Whether order `r` is obtained by applying the first derivative `r`
    /// times rather than by a single direct evaluation.
    pub fn is_repeated(&self) -> bool {
        matches!(
            self,
            DiffMethodSpec::Gradient | DiffMethodSpec::Inverse(_) | DiffMethodSpec::TotalVar(_)
        )
    }

    /// Derivative of `order` along `axis`.
    pub fn differentiate(&self, field: &Field, axis: usize, order: usize) -> Result<Field> {
        self.validate()?;
        if order == 0 {
            return Ok(field.clone());
        }
        match self {
            DiffMethodSpec::Gradient => diff_gradient(field, axis, order),
            DiffMethodSpec::Adaptive(p) => diff_adaptive(field, axis, order, p),
            DiffMethodSpec::Polynomial(p) => diff_polynomial(field, axis, order, p),
            DiffMethodSpec::Spectral(p) => diff_spectral(field, axis, order, p),
            DiffMethodSpec::Inverse(p) => {
                let mut f = diff_inverse(field, axis, p)?;
                for _ in 1..order {
                    f = diff_inverse(&f, axis, p)?;
                }
                Ok(f)
            }
            DiffMethodSpec::TotalVar(p) => {
                let mut f = diff_total_variation(field, axis, p)?;
                for _ in 1..order {
                    f = diff_total_variation(&f, axis, p)?;
                }
                Ok(f)
            }
        }
    }

    /// Nodes at each end of an axis whose values come from one-sided
    /// stencils after a derivative of `order`.
    pub fn boundary_width(&self, order: usize) -> usize {
        match self {
            DiffMethodSpec::Gradient => order,
            DiffMethodSpec::Polynomial(p) => (p.window - 1) / 2,
            DiffMethodSpec::Adaptive(p) => p.windows.iter().max().map_or(0, |w| (w - 1) / 2),
            _ => 0,
        }
    }
}

impl fmt::Display for DiffMethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.method().display_name())
    }
}

pub(crate) fn check_axis(field: &Field, axis: usize) -> Result<usize> {
    let dim = field.grid().dim();
    if axis >= dim {
        return Err(Error::param("axis", format!("axis {axis} out of range for a {dim}-D field")));
    }
    Ok(field.grid().shape()[axis])
}

pub(crate) fn check_order(order: usize) -> Result<()> {
    if order == 0 {
        return Err(Error::param("order", "derivative order must be at least 1"));
    }
    Ok(())
}
