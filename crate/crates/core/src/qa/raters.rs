//! Rater-bias diagnostics: leniency/severity (Delta R) and central tendency
//! (rating range).

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{natural_cmp, RatingRecord};
use crate::stats::{mean, sample_sd};

/// A rater whose |Delta R| exceeds this many of their own standard
/// deviations is flagged.
pub const BIAS_SD_FACTOR: f64 = 2.0;
/// A rater whose range is below this many standard deviations of all
/// ratings is flagged for central tendency.
pub const CENTRAL_TENDENCY_SD_FACTOR: f64 = 1.0;
/// |Delta R| values closer than this share a rank.
pub const RANK_TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RaterSummary {
    pub rater_id: String,
    pub n: usize,
    pub mean: f64,
    pub sd: Option<f64>,
}

/// Per-rater count, mean and SD, sorted by rater id.
pub fn rater_summaries(ratings: &[RatingRecord]) -> Vec<RaterSummary> {
    group_by_rater(ratings)
        .into_iter()
        .map(|(rater_id, vals)| RaterSummary {
            n: vals.len(),
            mean: mean(&vals).expect("group is non-empty"),
            sd: sample_sd(&vals),
            rater_id,
        })
        .collect()
}

fn group_by_rater(ratings: &[RatingRecord]) -> Vec<(String, Vec<f64>)> {
    let mut by: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in ratings {
        by.entry(r.rater_id()).or_default().push(r.rqi());
    }
    let mut out: Vec<(String, Vec<f64>)> = by.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
    out.sort_by(|a, b| natural_cmp(&a.0, &b.0));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BiasFlag {
    Leniency,
    Severity,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaRRow {
    pub rater_id: String,
    pub n: usize,
    pub mean: f64,
    pub sd: Option<f64>,
    /// Rater mean minus grand mean.
    pub delta_r: f64,
    /// Dense rank of |delta_r|, 1 = largest.
    pub rank: usize,
    pub flag: Option<BiasFlag>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaRTable {
    /// Unweighted mean of the rater means.
    pub grand_mean: f64,
    pub rows: Vec<DeltaRRow>,
    pub warnings: Vec<String>,
}

pub fn delta_r_table(ratings: &[RatingRecord]) -> Result<DeltaRTable> {
    delta_r_from_summaries(rater_summaries(ratings))
}

/// Delta R from already-aggregated rater means, e.g. a published table.
/// Raters without an SD are never flagged.
pub fn delta_r_from_summaries(summaries: Vec<RaterSummary>) -> Result<DeltaRTable> {
    let mut warnings = Vec::new();
    let summaries: Vec<RaterSummary> = summaries
        .into_iter()
        .filter(|s| {
            let keep = s.n >= 1 && s.mean.is_finite();
            if !keep {
                warnings.push(format!("rater {} has no ratings; excluded", s.rater_id));
            }
            keep
        })
        .collect();
    if summaries.len() < 2 {
        return Err(Error::Insufficient(format!(
            "Delta R needs at least 2 raters, got {}",
            summaries.len()
        )));
    }
    let means: Vec<f64> = summaries.iter().map(|s| s.mean).collect();
    let grand_mean = mean(&means).expect("non-empty");
    let deltas: Vec<f64> = means.iter().map(|m| m - grand_mean).collect();
    let ranks = dense_rank_desc(&deltas.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let rows = summaries
        .into_iter()
        .zip(deltas)
        .zip(ranks)
        .map(|((s, delta_r), rank)| {
            let flag = match s.sd {
                Some(sd) if delta_r.abs() > BIAS_SD_FACTOR * sd => Some(if delta_r > 0.0 {
                    BiasFlag::Leniency
                } else {
                    BiasFlag::Severity
                }),
                _ => None,
            };
            DeltaRRow {
                rater_id: s.rater_id,
                n: s.n,
                mean: s.mean,
                sd: s.sd,
                delta_r,
                rank,
                flag,
            }
        })
        .collect();
    Ok(DeltaRTable {
        grand_mean,
        rows,
        warnings,
    })
}

/// Dense ranking, largest value first; values within
/// [`RANK_TIE_TOLERANCE`] tie.
pub fn dense_rank_desc(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let mut ranks = vec![0; values.len()];
    let mut rank = 0;
    let mut prev: Option<f64> = None;
    for i in order {
        let v = values[i];
        if prev.is_none_or(|p| (p - v).abs() > RANK_TIE_TOLERANCE) {
            rank += 1;
            prev = Some(v);
        }
        ranks[i] = rank;
    }
    ranks
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeRow {
    pub rater_id: String,
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub range: f64,
    pub central_tendency: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RangeTable {
    /// Sample SD of every rating from the included raters.
    pub sd_all: Option<f64>,
    pub rows: Vec<RangeRow>,
    pub warnings: Vec<String>,
}

/// Per-rater rating range (max − min). A rater is flagged when the range
/// is below one SD of all ratings, or is zero.
pub fn rating_ranges(ratings: &[RatingRecord]) -> Result<RangeTable> {
    let mut warnings = Vec::new();
    let groups: Vec<(String, Vec<f64>)> = group_by_rater(ratings)
        .into_iter()
        .filter(|(id, v)| {
            if v.len() < 2 {
                warnings.push(format!("rater {id} has a single rating; excluded from ranges"));
                false
            } else {
                true
            }
        })
        .collect();
    if groups.is_empty() {
        return Err(Error::Insufficient("no rater has two or more ratings".into()));
    }
    let all: Vec<f64> = groups.iter().flat_map(|(_, v)| v.iter().copied()).collect();
    let sd_all = sample_sd(&all);
    let rows = groups
        .into_iter()
        .map(|(rater_id, v)| {
            let min = v.iter().copied().fold(f64::INFINITY, f64::min);
            let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let range = max - min;
            let threshold = CENTRAL_TENDENCY_SD_FACTOR * sd_all.unwrap_or(0.0);
            RangeRow {
                rater_id,
                n: v.len(),
                min,
                max,
                range,
                central_tendency: range == 0.0 || range < threshold,
            }
        })
        .collect();
    Ok(RangeTable {
        sd_all,
        rows,
        warnings,
    })
}
