//! One-way ANOVA and two-way ANOVA without replication.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::natural_cmp;
use crate::stats::f_upper_tail;

pub const DEFAULT_ALPHA: f64 = 0.05;

/// Outcome of the F test for one source of variation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FTest {
    Computed { f: f64, p: f64, significant: bool },
    /// Zero error variance with a non-zero effect: every observation sits on
    /// its group mean and the means differ.
    Infinite,
    /// Zero error variance and zero effect: F = 0/0.
    Degenerate,
}

impl FTest {
    pub fn f(&self) -> Option<f64> {
        match self {
            FTest::Computed { f, .. } => Some(*f),
            _ => None,
        }
    }

    pub fn p(&self) -> Option<f64> {
        match self {
            FTest::Computed { p, .. } => Some(*p),
            FTest::Infinite => Some(0.0),
            FTest::Degenerate => None,
        }
    }

    pub fn is_significant(&self) -> bool {
        match self {
            FTest::Computed { significant, .. } => *significant,
            FTest::Infinite => true,
            FTest::Degenerate => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaRow {
    pub source: String,
    pub ss: f64,
    pub df: usize,
    pub ms: f64,
    /// `None` for the error (residual) row.
    pub test: Option<FTest>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaResult {
    pub alpha: f64,
    pub rows: Vec<AnovaRow>,
    pub total_ss: f64,
    pub total_df: usize,
}

impl AnovaResult {
    pub fn row(&self, source: &str) -> Option<&AnovaRow> {
        self.rows.iter().find(|r| r.source == source)
    }

    /// Re-evaluates significance at another level.
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        for row in &mut self.rows {
            if let Some(FTest::Computed { p, significant, .. }) = &mut row.test {
                *significant = *p < alpha;
            }
        }
        self
    }

    /// Renames sources in order, e.g. `["between sections", ...]`.
    pub fn with_sources(mut self, names: &[&str]) -> Self {
        for (row, name) in self.rows.iter_mut().zip(names) {
            row.source = (*name).to_string();
        }
        self
    }
}

fn f_test(ms_effect: f64, ss_effect: f64, df_effect: usize, ms_error: f64, ss_error: f64, df_error: usize, tol: f64) -> Result<FTest> {
    if ss_error <= tol {
        return Ok(if ss_effect <= tol { FTest::Degenerate } else { FTest::Infinite });
    }
    let f = ms_effect / ms_error;
    let p = f_upper_tail(f, df_effect as f64, df_error as f64)?;
    Ok(FTest::Computed {
        f,
        p,
        significant: p < DEFAULT_ALPHA,
    })
}

/// Round-off floor for sums of squares of `values`.
fn ss_tolerance<'a>(values: impl Iterator<Item = &'a f64>) -> f64 {
    let (n, max_sq) = values.fold((0usize, 0.0f64), |(n, m), v| (n + 1, m.max(v * v)));
    8.0 * f64::EPSILON * n as f64 * max_sq
}

/// One-way ANOVA across `groups`. Sources are `"between groups"` and
/// `"within groups"`.
pub fn anova_one_way(groups: &[Vec<f64>]) -> Result<AnovaResult> {
    if groups.len() < 2 {
        return Err(Error::Insufficient(format!("one-way ANOVA needs at least 2 groups, got {}", groups.len())));
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(Error::Insufficient("one-way ANOVA group is empty".into()));
    }
    if groups.iter().all(|g| g.len() < 2) {
        return Err(Error::Insufficient("one-way ANOVA needs a group with at least 2 values".into()));
    }
    if groups.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::invalid("ANOVA values must be finite"));
    }
    let n: usize = groups.iter().map(Vec::len).sum();
    let k = groups.len();
    let grand = groups.iter().flatten().sum::<f64>() / n as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let m = g.iter().sum::<f64>() / g.len() as f64;
        ss_between += g.len() as f64 * (m - grand).powi(2);
        ss_within += g.iter().map(|x| (x - m).powi(2)).sum::<f64>();
    }
    let total_ss: f64 = groups.iter().flatten().map(|x| (x - grand).powi(2)).sum();
    let (df_b, df_w) = (k - 1, n - k);
    let (ms_b, ms_w) = (ss_between / df_b as f64, ss_within / df_w as f64);
    let tol = ss_tolerance(groups.iter().flatten());
    let test = f_test(ms_b, ss_between, df_b, ms_w, ss_within, df_w, tol)?;
    Ok(AnovaResult {
        alpha: DEFAULT_ALPHA,
        rows: vec![
            AnovaRow {
                source: "between groups".into(),
                ss: ss_between,
                df: df_b,
                ms: ms_b,
                test: Some(test),
            },
            AnovaRow {
                source: "within groups".into(),
                ss: ss_within,
                df: df_w,
                ms: ms_w,
                test: None,
            },
        ],
        total_ss,
        total_df: n - 1,
    })
}

/// Two-way ANOVA without replication on a complete rows × columns table.
/// Sources are `"rows"`, `"columns"` and `"residual"`.
pub fn anova_two_way_no_replication(table: &[Vec<f64>]) -> Result<AnovaResult> {
    let r = table.len();
    let c = table.first().map_or(0, Vec::len);
    if r < 2 || c < 2 {
        return Err(Error::Insufficient(format!(
            "two-way ANOVA needs at least 2 rows and 2 columns, got {r} x {c}"
        )));
    }
    for (i, row) in table.iter().enumerate() {
        if row.len() != c {
            return Err(Error::invalid(format!("missing cells: row {i} has {} of {c} columns", row.len())));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("missing cells: row {i}, column {j}")));
        }
    }
    let n = (r * c) as f64;
    let grand = table.iter().flatten().sum::<f64>() / n;
    let row_means: Vec<f64> = table.iter().map(|row| row.iter().sum::<f64>() / c as f64).collect();
    let col_means: Vec<f64> = (0..c)
        .map(|j| table.iter().map(|row| row[j]).sum::<f64>() / r as f64)
        .collect();
    let ss_rows = c as f64 * row_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let ss_cols = r as f64 * col_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>();
    let mut ss_res = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            ss_res += (x - row_means[i] - col_means[j] + grand).powi(2);
        }
    }
    let total_ss: f64 = table.iter().flatten().map(|x| (x - grand).powi(2)).sum();
    let (df_r, df_c, df_e) = (r - 1, c - 1, (r - 1) * (c - 1));
    let ms_r = ss_rows / df_r as f64;
    let ms_c = ss_cols / df_c as f64;
    let ms_e = ss_res / df_e as f64;
    let tol = ss_tolerance(table.iter().flatten());
    Ok(AnovaResult {
        alpha: DEFAULT_ALPHA,
        rows: vec![
            AnovaRow {
                source: "rows".into(),
                ss: ss_rows,
                df: df_r,
                ms: ms_r,
                test: Some(f_test(ms_r, ss_rows, df_r, ms_e, ss_res, df_e, tol)?),
            },
            AnovaRow {
                source: "columns".into(),
                ss: ss_cols,
                df: df_c,
                ms: ms_c,
                test: Some(f_test(ms_c, ss_cols, df_c, ms_e, ss_res, df_e, tol)?),
            },
            AnovaRow {
                source: "residual".into(),
                ss: ss_res,
                df: df_e,
                ms: ms_e,
                test: None,
            },
        ],
        total_ss,
        total_df: r * c - 1,
    })
}

/// A keyed rows × columns table. Repeated cells are averaged.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossTable {
    pub row_keys: Vec<String>,
    pub col_keys: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl CrossTable {
    pub fn from_cells<'a>(cells: impl IntoIterator<Item = (&'a str, &'a str, f64)>) -> Self {
        let mut acc: BTreeMap<(&str, &str), (f64, usize)> = BTreeMap::new();
        for (rk, ck, v) in cells {
            let e = acc.entry((rk, ck)).or_insert((0.0, 0));
            e.0 += v;
            e.1 += 1;
        }
        let mut row_keys: Vec<String> = acc.keys().map(|(r, _)| r.to_string()).collect();
        row_keys.sort_by(|a, b| natural_cmp(a, b));
        row_keys.dedup();
        let mut col_keys: Vec<String> = acc.keys().map(|(_, c)| c.to_string()).collect();
        col_keys.sort_by(|a, b| natural_cmp(a, b));
        col_keys.dedup();
        let cells = row_keys
            .iter()
            .map(|rk| {
                col_keys
                    .iter()
                    .map(|ck| acc.get(&(rk.as_str(), ck.as_str())).map(|(s, n)| s / *n as f64))
                    .collect()
            })
            .collect();
        CrossTable {
            row_keys,
            col_keys,
            cells,
        }
    }

    /// The full matrix, or an error naming the first missing cell.
    pub fn complete(&self) -> Result<Vec<Vec<f64>>> {
        self.cells
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, v)| {
                        v.ok_or_else(|| {
                            Error::invalid(format!(
                                "missing cells: ({}, {})",
                                self.row_keys[i], self.col_keys[j]
                            ))
                        })
                    })
                    .collect()
            })
            .collect()
    }
}
