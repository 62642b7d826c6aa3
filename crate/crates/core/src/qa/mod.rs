//! Data-quality battery for panel ratings and roughness replicates:
//! boxplot outliers, rater leniency/severity and central tendency,
//! ANOVA, and repeatability (SD/CV) across runs.
//!
//! A note on published repeatability tables: CV is always computed here as
//! SD / mean. In the reference repeatability table the two CV columns appear
//! swapped between the RQI and RMS blocks (0.051 / 0.60 = 8.5 %, the value
//! printed in the RQI column), and its 12.8 % cell matches neither block
//! (0.091 / 1.15 = 7.9 %, 0.254 / 1.6 = 15.9 %).

mod anova;
mod outliers;
mod raters;
mod repeatability;

use std::collections::BTreeMap;

use serde::Serialize;

pub use anova::{
    anova_one_way, anova_two_way_no_replication, AnovaResult, AnovaRow, CrossTable, FTest,
    DEFAULT_ALPHA,
};
pub use outliers::{boxplot_fences, boxplot_outliers, BoxplotFences};
pub use raters::{
    delta_r_from_summaries, delta_r_table, dense_rank_desc, rater_summaries, rating_ranges,
    BiasFlag, DeltaRRow, DeltaRTable, RangeRow, RangeTable, RaterSummary, BIAS_SD_FACTOR,
    CENTRAL_TENDENCY_SD_FACTOR, RANK_TIE_TOLERANCE,
};
pub use repeatability::{cv_percent, repeatability, Repeatability};

use crate::error::Result;
use crate::model::{natural_cmp, RatingRecord};
use crate::roughness::RmsRow;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct QaConfig {
    /// Boxplot fence multiplier.
    pub boxplot_k: f64,
    /// Significance level for every F test.
    pub alpha: f64,
}

impl Default for QaConfig {
    fn default() -> Self {
        QaConfig {
            boxplot_k: 1.5,
            alpha: DEFAULT_ALPHA,
        }
    }
}

/// An ANOVA in the report; `result` is absent when the data did not
/// support the test, with the reason in `error`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaEntry {
    pub name: String,
    pub result: Option<AnovaResult>,
    pub error: Option<String>,
}

impl AnovaEntry {
    fn new(name: &str, r: Result<AnovaResult>) -> Self {
        match r {
            Ok(a) => AnovaEntry {
                name: name.into(),
                result: Some(a),
                error: None,
            },
            Err(e) => AnovaEntry {
                name: name.into(),
                result: None,
                error: Some(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectionRepeatability {
    pub section_id: String,
    /// Spread of the per-run mean rating.
    pub rqi: Option<Repeatability>,
    /// Spread of the per-run RMS.
    pub rms: Option<Repeatability>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutlierPoint {
    pub rater_id: Option<String>,
    pub run_id: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutlierGroup {
    /// `"rqi"` or `"rms"`.
    pub index: String,
    pub section_id: String,
    pub fences: BoxplotFences,
    pub outliers: Vec<OutlierPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QaVerdicts {
    pub bias_flagged_raters: Vec<String>,
    pub central_tendency_raters: Vec<String>,
    pub outlier_count: usize,
    pub sections_differ: Option<bool>,
    pub raters_differ: Option<bool>,
    pub run_effect: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QaReport {
    pub config: QaConfig,
    pub rating_count: usize,
    pub delta_r: Option<DeltaRTable>,
    pub ranges: Option<RangeTable>,
    pub anova: Vec<AnovaEntry>,
    pub repeatability: Vec<SectionRepeatability>,
    pub outliers: Vec<OutlierGroup>,
    pub verdicts: QaVerdicts,
    pub warnings: Vec<String>,
}

fn sorted_keys<T>(m: &BTreeMap<String, T>) -> Vec<String> {
    let mut k: Vec<String> = m.keys().cloned().collect();
    k.sort_by(|a, b| natural_cmp(a, b));
    k
}

/// Runs the full battery. `rms` adds the RMS outlier, repeatability and
/// run-effect checks.
pub fn build_report(ratings: &[RatingRecord], rms: Option<&[RmsRow]>, config: &QaConfig) -> QaReport {
    let mut warnings = Vec::new();

    let delta_r = match delta_r_table(ratings) {
        Ok(t) => {
            warnings.extend(t.warnings.iter().cloned());
            Some(t)
        }
        Err(e) => {
            warnings.push(format!("delta R skipped: {e}"));
            None
        }
    };
    let ranges = match rating_ranges(ratings) {
        Ok(t) => {
            warnings.extend(t.warnings.iter().cloned());
            Some(t)
        }
        Err(e) => {
            warnings.push(format!("rating ranges skipped: {e}"));
            None
        }
    };

    let mut by_section: BTreeMap<String, Vec<&RatingRecord>> = BTreeMap::new();
    let mut by_rater: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in ratings {
        by_section.entry(r.section_id().to_string()).or_default().push(r);
        by_rater.entry(r.rater_id().to_string()).or_default().push(r.rqi());
    }
    let section_keys = sorted_keys(&by_section);
    let rater_keys = sorted_keys(&by_rater);

    let alpha = config.alpha;
    let mut anova = Vec::new();
    let sxr = CrossTable::from_cells(ratings.iter().map(|r| (r.section_id(), r.rater_id(), r.rqi())));
    anova.push(AnovaEntry::new(
        "ratings_sections_x_raters",
        sxr.complete()
            .and_then(|m| anova_two_way_no_replication(&m))
            .map(|a| a.with_alpha(alpha).with_sources(&["between sections", "between raters", "residual"])),
    ));
    let section_groups: Vec<Vec<f64>> = section_keys
        .iter()
        .map(|k| by_section[k].iter().map(|r| r.rqi()).collect())
        .collect();
    anova.push(AnovaEntry::new(
        "ratings_by_section",
        anova_one_way(&section_groups)
            .map(|a| a.with_alpha(alpha).with_sources(&["between sections", "within sections"])),
    ));
    let rater_groups: Vec<Vec<f64>> = rater_keys.iter().map(|k| by_rater[k].clone()).collect();
    anova.push(AnovaEntry::new(
        "ratings_by_rater",
        anova_one_way(&rater_groups).map(|a| a.with_alpha(alpha).with_sources(&["between raters", "within raters"])),
    ));

    let mut outliers = Vec::new();
    for k in &section_keys {
        let recs = &by_section[k];
        let vals: Vec<f64> = recs.iter().map(|r| r.rqi()).collect();
        if let Ok(fences) = boxplot_fences(&vals, config.boxplot_k) {
            let pts = recs
                .iter()
                .filter(|r| !fences.contains(r.rqi()))
                .map(|r| OutlierPoint {
                    rater_id: Some(r.rater_id().to_string()),
                    run_id: r.run_id().to_string(),
                    value: r.rqi(),
                })
                .collect();
            outliers.push(OutlierGroup {
                index: "rqi".into(),
                section_id: k.clone(),
                fences,
                outliers: pts,
            });
        }
    }

    // Per-run mean rating per section, then spread across runs.
    let rqi_runs = CrossTable::from_cells(ratings.iter().map(|r| (r.section_id(), r.run_id(), r.rqi())));
    let mut rep: BTreeMap<String, SectionRepeatability> = BTreeMap::new();
    for (i, sec) in rqi_runs.row_keys.iter().enumerate() {
        let vals: Vec<f64> = rqi_runs.cells[i].iter().flatten().copied().collect();
        rep.entry(sec.clone())
            .or_insert_with(|| SectionRepeatability {
                section_id: sec.clone(),
                rqi: None,
                rms: None,
            })
            .rqi = repeatability(&vals).ok();
    }

    let mut run_effect = None;
    if let Some(rms) = rms {
        let mut rms_by_section: BTreeMap<String, Vec<&RmsRow>> = BTreeMap::new();
        for r in rms {
            rms_by_section.entry(r.section_id.clone()).or_default().push(r);
        }
        for k in sorted_keys(&rms_by_section) {
            let rows = &rms_by_section[&k];
            let vals: Vec<f64> = rows.iter().map(|r| r.rms_mps2).collect();
            if let Ok(fences) = boxplot_fences(&vals, config.boxplot_k) {
                let pts = rows
                    .iter()
                    .filter(|r| !fences.contains(r.rms_mps2))
                    .map(|r| OutlierPoint {
                        rater_id: None,
                        run_id: r.run_id.clone(),
                        value: r.rms_mps2,
                    })
                    .collect();
                outliers.push(OutlierGroup {
                    index: "rms".into(),
                    section_id: k.clone(),
                    fences,
                    outliers: pts,
                });
            }
            rep.entry(k.clone())
                .or_insert_with(|| SectionRepeatability {
                    section_id: k.clone(),
                    rqi: None,
                    rms: None,
                })
                .rms = repeatability(&vals).ok();
        }
        let sxr = CrossTable::from_cells(rms.iter().map(|r| (r.section_id.as_str(), r.run_id.as_str(), r.rms_mps2)));
        let entry = AnovaEntry::new(
            "rms_sections_x_runs",
            sxr.complete()
                .and_then(|m| anova_two_way_no_replication(&m))
                .map(|a| a.with_alpha(alpha).with_sources(&["between sections", "between runs", "residual"])),
        );
        run_effect = entry
            .result
            .as_ref()
            .and_then(|a| a.row("between runs"))
            .and_then(|r| r.test)
            .map(|t| t.is_significant());
        anova.push(entry);
    }

    let mut repeatability: Vec<SectionRepeatability> = rep.into_values().collect();
    repeatability.sort_by(|a, b| natural_cmp(&a.section_id, &b.section_id));

    let significant = |name: &str, source: &str| {
        anova
            .iter()
            .find(|e| e.name == name)
            .and_then(|e| e.result.as_ref())
            .and_then(|a| a.row(source))
            .and_then(|r| r.test)
            .map(|t| t.is_significant())
    };
    let sections_differ = significant("ratings_sections_x_raters", "between sections")
        .or_else(|| significant("ratings_by_section", "between sections"));
    let raters_differ = significant("ratings_sections_x_raters", "between raters")
        .or_else(|| significant("ratings_by_rater", "between raters"));

    let verdicts = QaVerdicts {
        bias_flagged_raters: delta_r
            .iter()
            .flat_map(|t| t.rows.iter().filter(|r| r.flag.is_some()).map(|r| r.rater_id.clone()))
            .collect(),
        central_tendency_raters: ranges
            .iter()
            .flat_map(|t| t.rows.iter().filter(|r| r.central_tendency).map(|r| r.rater_id.clone()))
            .collect(),
        outlier_count: outliers.iter().map(|g| g.outliers.len()).sum(),
        sections_differ,
        raters_differ,
        run_effect,
    };

    QaReport {
        config: *config,
        rating_count: ratings.len(),
        delta_r,
        ranges,
        anova,
        repeatability,
        outliers,
        verdicts,
        warnings,
    }
}
