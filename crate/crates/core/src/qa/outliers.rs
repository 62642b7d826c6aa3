use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::quantile_sorted;

/// Tukey fences `[Q1 − k·IQR, Q3 + k·IQR]` with type-7 quartiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxplotFences {
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub lower: f64,
    pub upper: f64,
}

impl BoxplotFences {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }
}

pub fn boxplot_fences(values: &[f64], k: f64) -> Result<BoxplotFences> {
    if values.is_empty() {
        return Err(Error::Insufficient("boxplot of an empty list".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("boxplot values must be finite"));
    }
    if !k.is_finite() || k < 0.0 {
        return Err(Error::invalid(format!("fence multiplier {k} must be non-negative")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    Ok(BoxplotFences {
        q1,
        q3,
        iqr,
        lower: q1 - k * iqr,
        upper: q3 + k * iqr,
    })
}

/// Ascending indices of values outside the boxplot fences.
pub fn boxplot_outliers(values: &[f64], k: f64) -> Result<Vec<usize>> {
    let fences = boxplot_fences(values, k)?;
    Ok(values
        .iter()
        .enumerate()
        .filter(|(_, &v)| !fences.contains(v))
        .map(|(i, _)| i)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert!(boxplot_outliers(&[1.0, 2.0, 3.0, 4.0, 5.0], 1.5).unwrap().is_empty());
        let v = [1.0, 2.0, 3.0, 4.0, 100.0];
        let f = boxplot_fences(&v, 1.5).unwrap();
        assert_eq!((f.q1, f.q3, f.upper), (2.0, 4.0, 7.0));
        assert_eq!(boxplot_outliers(&v, 1.5).unwrap(), vec![4]);
        let moved: Vec<f64> = v.iter().map(|x| 2.0 * x + 7.0).collect();
        assert_eq!(boxplot_outliers(&moved, 1.5).unwrap(), vec![4]);
        assert!(boxplot_outliers(&[], 1.5).is_err());
    }

    proptest! {
        // Integer-valued data keeps the fences exact under the affine map, so
        // boundary points cannot flip through rounding.
        #[test]
        fn affine_invariance(
            xs in prop::collection::vec(-1000i32..1000, 1..40),
            scale in 1i32..8,
            shift in -100i32..100,
        ) {
            let v: Vec<f64> = xs.iter().map(|&x| f64::from(x)).collect();
            let w: Vec<f64> = v.iter().map(|x| f64::from(scale) * x + f64::from(shift)).collect();
            prop_assert_eq!(boxplot_outliers(&v, 1.5).unwrap(), boxplot_outliers(&w, 1.5).unwrap());
        }
    }
}
