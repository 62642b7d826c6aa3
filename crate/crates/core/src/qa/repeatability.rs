use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::{mean, sample_sd};

/// Spread of replicate measurements of one quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Repeatability {
    pub n: usize,
    pub mean: f64,
    /// Sample SD (n − 1 denominator).
    pub sd: f64,
    /// `100 · SD / |mean|`; `None` when the mean is zero.
    pub cv_percent: Option<f64>,
}

pub fn repeatability(values: &[f64]) -> Result<Repeatability> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("repeatability values must be finite"));
    }
    let sd = sample_sd(values).ok_or_else(|| {
        Error::Insufficient(format!("repeatability needs at least 2 values, got {}", values.len()))
    })?;
    let mean = mean(values).expect("at least two values");
    Ok(Repeatability {
        n: values.len(),
        mean,
        sd,
        cv_percent: cv_percent(sd, mean),
    })
}

/// Coefficient of variation in percent.
pub fn cv_percent(sd: f64, mean: f64) -> Option<f64> {
    if mean == 0.0 || !mean.is_finite() || !sd.is_finite() {
        return None;
    }
    Some(100.0 * sd / mean.abs())
}
