use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Field;
use crate::error::{Error, Result};

/// Node-proportional Gaussian noise: each value is redrawn from
/// `Normal(u, (kappa·|u|)²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Proportionality constant as a fraction (0.01 is one percent).
    pub kappa: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(kappa: f64, seed: u64) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::param("kappa", "must be finite and non-negative"));
        }
        Ok(Self { kappa, seed })
    }

    /// Configs state noise in percent.
    pub fn from_percent(percent: f64, seed: u64) -> Result<Self> {
        Self::new(percent / 100.0, seed)
    }

    pub fn percent(&self) -> f64 {
        self.kappa * 100.0
    }
}

pub fn add_noise(field: &Field, spec: NoiseSpec) -> Result<Field> {
    if spec.kappa == 0.0 {
        return Ok(field.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // one draw per node in row-major order, zeros included, so the stream
    // position of a node never depends on its neighbours' values
    field.map_values_seq(|u| {
        let z: f64 = StandardNormal.sample(&mut rng);
        u + spec.kappa * u.abs() * z
    })
}

impl Field {
    fn map_values_seq(&self, mut f: impl FnMut(f64) -> f64) -> Result<Field> {
        let values: Vec<f64> = self.as_slice().iter().map(|&u| f(u)).collect();
        Field::from_vec(self.grid().clone(), values)
    }
}
