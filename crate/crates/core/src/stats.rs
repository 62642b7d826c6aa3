//! Small descriptive-statistics helpers shared by the QA and correlation code.

use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};

pub fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    Some(xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Sample standard deviation (n − 1 denominator); `None` for fewer than two
/// values.
pub fn sample_sd(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

/// Quantile by linear interpolation between order statistics
/// (Hyndman–Fan type 7). `sorted` must be ascending and non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Upper-tail probability `P(F > f)` of the F distribution with `d1`, `d2`
/// degrees of freedom.
pub fn f_upper_tail(f: f64, d1: f64, d2: f64) -> Result<f64> {
    if !(f.is_finite() && f >= 0.0) {
        return Err(Error::invalid(format!("F statistic {f} must be finite and non-negative")));
    }
    let dist = FisherSnedecor::new(d1, d2)
        .map_err(|e| Error::invalid(format!("F distribution ({d1}, {d2}): {e}")))?;
    Ok(dist.sf(f))
}

/// Critical value `f` with `P(F > f) = alpha`.
pub fn f_critical(alpha: f64, d1: f64, d2: f64) -> Result<f64> {
    let dist = FisherSnedecor::new(d1, d2)
        .map_err(|e| Error::invalid(format!("F distribution ({d1}, {d2}): {e}")))?;
    Ok(dist.inverse_cdf(1.0 - alpha))
}
