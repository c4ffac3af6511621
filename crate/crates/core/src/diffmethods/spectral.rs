//! Fourier differentiation with an optional Butterworth low-pass filter.
//!
//! The lane is treated as one period of length `T = N·h`. Mode `k` is
//! multiplied by `(2πik/T)^r · G(|k|/(N/2))`, where
//! `G(ω) = 1 / (1 + (ω/ω_c)^(2s))`. Non-periodic data produce Gibbs
//! artefacts near the ends of the axis.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{check_axis, check_order};
use crate::error::{Error, Result};
use crate::grid::Field;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectralParams {
    /// Cutoff as a fraction of the Nyquist frequency; `None` disables the
    /// filter.
    pub cutoff: Option<f64>,
    pub steepness: f64,
}

impl Default for SpectralParams {
    fn default() -> Self {
        Self {
            cutoff: Some(0.5),
            steepness: 4.0,
        }
    }
}

impl SpectralParams {
    pub fn unfiltered() -> Self {
        Self {
            cutoff: None,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(c) = self.cutoff {
            if !(c > 0.0 && c <= 1.0) {
                return Err(Error::param("cutoff", format!("must lie in (0, 1], got {c}")));
            }
        }
        if !(self.steepness >= 1.0 && self.steepness.is_finite()) {
            return Err(Error::param("steepness", format!("must be ≥ 1, got {}", self.steepness)));
        }
        Ok(())
    }
}

pub fn butterworth_gain(omega: f64, cutoff: f64, steepness: f64) -> f64 {
    1.0 / (1.0 + (omega / cutoff).powf(2.0 * steepness))
}

pub fn diff_spectral(field: &Field, axis: usize, order: usize, params: &SpectralParams) -> Result<Field> {
    check_order(order)?;
    params.validate()?;
    let n = check_axis(field, axis)?;
    let h = field.grid().step(axis);
    let period = n as f64 * h;

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);

    let half = n as f64 / 2.0;
    let multipliers: Vec<Complex64> = (0..n)
        .map(|j| {
            let k = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
            // the Nyquist mode of an even-length transform has no sign, so
            // odd derivatives of it are undefined
            if n % 2 == 0 && j == n / 2 && order % 2 == 1 {
                return Complex64::new(0.0, 0.0);
            }
            let ik = Complex64::new(0.0, 2.0 * PI * k / period);
            let gain = match params.cutoff {
                Some(c) => butterworth_gain(k.abs() / half, c, params.steepness),
                None => 1.0,
            };
            ik.powu(order as u32) * gain / n as f64
        })
        .collect();

    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut scratch = vec![Complex64::new(0.0, 0.0); forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len())];
    field.map_lanes(axis, |u, out| {
        for (b, &v) in buf.iter_mut().zip(u) {
            *b = Complex64::new(v, 0.0);
        }
        forward.process_with_scratch(&mut buf, &mut scratch);
        for (b, m) in buf.iter_mut().zip(&multipliers) {
            *b *= m;
        }
        inverse.process_with_scratch(&mut buf, &mut scratch);
        for (o, b) in out.iter_mut().zip(&buf) {
            *o = b.re;
        }
        Ok(())
    })
}
