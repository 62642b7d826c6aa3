//! Simple linear regression and the RMS-vs-index correlation report.
//!
//! RMS is always the predictor. Fits are on section-level aggregates (mean
//! over runs and raters) unless per-run fitting is requested.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::Serialize;

use crate::distress::{write_section_values, PDI_HEADER};
use crate::error::{Error, Result};
use crate::ingest::{field, parse_f64, read_rows};
use crate::model::{natural_cmp, RatingRecord, RegressionFit};
use crate::roughness::{IriModel, RmsRow};

pub const IRI_HEADER: [&str; 2] = ["section_id", "iri_mm_per_m"];

/// Minimum number of common sections for a correlation.
pub const MIN_SECTIONS: usize = 3;

/// Ordinary least squares fit of `ys` on `xs`.
pub fn ols_fit(xs: &[f64], ys: &[f64]) -> Result<RegressionFit> {
    if xs.len() != ys.len() {
        return Err(Error::invalid(format!(
            "xs and ys differ in length ({} vs {})",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::Insufficient(format!("regression needs n >= 2, got {n}")));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::invalid("regression inputs must be finite"));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 || xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::DegenerateX);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    if syy == 0.0 || ys.iter().all(|&y| y == ys[0]) {
        return RegressionFit::new(0.0, ys[0], None, None, n);
    }
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let r2 = (1.0 - ss_res / syy).clamp(0.0, 1.0);
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    RegressionFit::new(slope, intercept, Some(r2), Some(r), n)
}

/// Re-fits the RMS → IRI model from paired `(rms, iri)` observations.
pub fn fit_iri_model(pairs: &[(f64, f64)]) -> Result<IriModel> {
    if pairs.len() < 3 {
        return Err(Error::Insufficient(format!(
            "IRI model needs at least 3 pairs, got {}",
            pairs.len()
        )));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
    let fit = ols_fit(&xs, &ys)?;
    if fit.slope() <= 0.0 {
        return Err(Error::NonPhysicalSlope(fit.slope()));
    }
    IriModel::new(fit.slope(), fit.intercept())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterPoint {
    pub section_id: String,
    /// Present for per-run points.
    pub run_id: Option<String>,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Pairing {
    pub predictor: String,
    pub response: String,
    pub slope: f64,
    pub intercept: f64,
    pub r2: Option<f64>,
    pub pearson_r: Option<f64>,
    pub n: usize,
    pub points: Vec<ScatterPoint>,
}

impl Pairing {
    fn new(response: &str, fit: RegressionFit, points: Vec<ScatterPoint>) -> Self {
        Pairing {
            predictor: "rms".into(),
            response: response.into(),
            slope: fit.slope(),
            intercept: fit.intercept(),
            r2: fit.r2(),
            pearson_r: fit.pearson_r(),
            n: fit.n(),
            points,
        }
    }

    pub fn fit(&self) -> RegressionFit {
        RegressionFit::new(self.slope, self.intercept, self.r2, self.pearson_r, self.n)
            .expect("pairing was built from a valid fit")
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct CorrelationReport {
    pub per_run: bool,
    pub rms_iri: Option<Pairing>,
    pub rms_rqi: Option<Pairing>,
    pub rms_pdi: Option<Pairing>,
}

/// Section-level inputs. Any of the three responses may be omitted.
#[derive(Debug, Clone, Default)]
pub struct CorrelationInputs<'a> {
    pub rms: &'a [RmsRow],
    pub iri: Option<&'a BTreeMap<String, f64>>,
    pub ratings: Option<&'a [RatingRecord]>,
    pub pdi: Option<&'a BTreeMap<String, f64>>,
}

fn mean_by<'a>(items: impl Iterator<Item = (&'a str, f64)>) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<String, (f64, usize)> = BTreeMap::new();
    for (k, v) in items {
        let e = acc.entry(k.to_string()).or_insert((0.0, 0));
        e.0 += v;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

/// Mean rating per section over raters and runs.
pub fn mean_rqi_by_section(ratings: &[RatingRecord]) -> BTreeMap<String, f64> {
    mean_by(ratings.iter().map(|r| (r.section_id(), r.rqi())))
}

/// Fits RMS against IRI, RQI and PDI.
pub fn correlate_indices(inputs: &CorrelationInputs<'_>, per_run: bool) -> Result<CorrelationReport> {
    let rms_by_section = mean_by(inputs.rms.iter().map(|r| (r.section_id.as_str(), r.rms_mps2)));
    let rqi_section = inputs.ratings.map(mean_rqi_by_section);
    let rqi_section_run: Option<BTreeMap<(String, String), f64>> = inputs.ratings.map(|rs| {
        let mut acc: BTreeMap<(String, String), (f64, usize)> = BTreeMap::new();
        for r in rs {
            let e = acc
                .entry((r.section_id().to_string(), r.run_id().to_string()))
                .or_insert((0.0, 0));
            e.0 += r.rqi();
            e.1 += 1;
        }
        acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
    });

    let pair = |name: &str, section_values: &BTreeMap<String, f64>, per_run_values: Option<&BTreeMap<(String, String), f64>>| -> Result<Pairing> {
        let mut common: Vec<&String> = rms_by_section.keys().filter(|k| section_values.contains_key(*k)).collect();
        common.sort_by(|a, b| natural_cmp(a, b));
        if common.len() < MIN_SECTIONS {
            return Err(Error::Insufficient(format!(
                "rms~{name} needs at least {MIN_SECTIONS} common sections, got {}",
                common.len()
            )));
        }
        let points: Vec<ScatterPoint> = if per_run {
            let mut rows: Vec<&RmsRow> = inputs
                .rms
                .iter()
                .filter(|r| section_values.contains_key(&r.section_id))
                .collect();
            rows.sort_by(|a, b| natural_cmp(&a.section_id, &b.section_id).then_with(|| natural_cmp(&a.run_id, &b.run_id)));
            rows.into_iter()
                .filter_map(|r| {
                    let y = match per_run_values {
                        Some(m) => *m.get(&(r.section_id.clone(), r.run_id.clone()))?,
                        None => section_values[&r.section_id],
                    };
                    Some(ScatterPoint {
                        section_id: r.section_id.clone(),
                        run_id: Some(r.run_id.clone()),
                        x: r.rms_mps2,
                        y,
                    })
                })
                .collect()
        } else {
            common
                .iter()
                .map(|k| ScatterPoint {
                    section_id: (*k).clone(),
                    run_id: None,
                    x: rms_by_section[*k],
                    y: section_values[*k],
                })
                .collect()
        };
        let xs: Vec<f64> = points.iter().map(|p| p.x).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.y).collect();
        Ok(Pairing::new(name, ols_fit(&xs, &ys)?, points))
    };

    Ok(CorrelationReport {
        per_run,
        rms_iri: inputs.iri.map(|m| pair("iri", m, None)).transpose()?,
        rms_rqi: rqi_section
            .as_ref()
            .map(|m| pair("rqi", m, rqi_section_run.as_ref()))
            .transpose()?,
        rms_pdi: inputs.pdi.map(|m| pair("pdi", m, None)).transpose()?,
    })
}

fn parse_section_values<R: Read>(reader: R, header: &[&str; 2]) -> Result<BTreeMap<String, f64>> {
    let rows = read_rows(reader, header)?;
    let mut acc: Vec<(String, f64)> = Vec::with_capacity(rows.len());
    for (i, rec) in rows.iter().enumerate() {
        let row = i + 1;
        let id = field(rec, 0, row, header[0])?;
        if id.is_empty() {
            return Err(Error::parse(row, "empty section_id"));
        }
        let v = parse_f64(field(rec, 1, row, header[1])?, row, header[1])?;
        if v < 0.0 {
            return Err(Error::parse(row, format!("negative {}", header[1])));
        }
        acc.push((id.to_string(), v));
    }
    Ok(mean_by(acc.iter().map(|(k, v)| (k.as_str(), *v))))
}

pub fn write_iri_csv<W: Write>(writer: W, iri: &BTreeMap<String, f64>) -> Result<()> {
    write_section_values(writer, &IRI_HEADER, iri)
}

/// Reference IRI per section (`section_id,iri_mm_per_m`); repeated
/// sections are averaged.
pub fn parse_iri_csv<R: Read>(reader: R) -> Result<BTreeMap<String, f64>> {
    parse_section_values(reader, &IRI_HEADER)
}

/// PDI per section (`section_id,pdi`).
pub fn parse_pdi_csv<R: Read>(reader: R) -> Result<BTreeMap<String, f64>> {
    parse_section_values(reader, &PDI_HEADER)
}
