//! Vertical-acceleration RMS per section run and the linear RMS → IRI model.
//!
//! RMS is `sqrt(mean((az - g)^2))`: the deviation from the reference is
//! squared before averaging. The formula as commonly printed for this method
//! omits the square, which would take the root of a signed sum; the squared
//! form is the only one that is a root mean square and is never negative.
//!
//! No detrending or high-pass filtering is applied. A per-run mean can be
//! used as the reference instead of `g` (see [`Trace::mean_az`]).
//!
//! [`Trace::mean_az`]: crate::model::Trace::mean_az

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{csv_err, field, parse_f64, read_rows};
use crate::model::{natural_cmp, AccelSample, SectionRun};

pub const RMS_TABLE_HEADER: [&str; 4] = ["section_id", "run_id", "rms_mps2", "iri_est_mm_per_m"];

/// Root mean square deviation of vertical acceleration from `reference`
/// (normally gravity), in m/s².
pub fn compute_rms(samples: &[AccelSample], reference: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    if !reference.is_finite() {
        return Err(Error::invalid("reference acceleration must be finite"));
    }
    let sum_sq: f64 = samples
        .iter()
        .map(|s| {
            let d = s.az() - reference;
            d * d
        })
        .sum();
    Ok((sum_sq / samples.len() as f64).sqrt())
}

/// RMS over consecutive non-overlapping windows of `window_ms`, keyed by
/// window start time. Windows without samples are omitted.
pub fn windowed_rms(samples: &[AccelSample], reference: f64, window_ms: u64) -> Result<Vec<(u64, f64)>> {
    if window_ms == 0 {
        return Err(Error::invalid("window length must be positive"));
    }
    let mut out = Vec::new();
    let mut start = 0;
    while start < samples.len() {
        let w0 = samples[start].t_ms() / window_ms * window_ms;
        let end = start + samples[start..].partition_point(|s| s.t_ms() < w0 + window_ms);
        out.push((w0, compute_rms(&samples[start..end], reference)?));
        start = end;
    }
    Ok(out)
}

/// Linear roughness model `IRI = slope * RMS + intercept` (IRI in mm/m,
/// RMS in m/s²).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IriModelRepr")]
pub struct IriModel {
    slope: f64,
    intercept: f64,
}

#[derive(Deserialize)]
struct IriModelRepr {
    slope: f64,
    intercept: f64,
}

impl TryFrom<IriModelRepr> for IriModel {
    type Error = Error;
    fn try_from(r: IriModelRepr) -> Result<Self> {
        IriModel::new(r.slope, r.intercept)
    }
}

impl Default for IriModel {
    fn default() -> Self {
        IriModel {
            slope: 4.19,
            intercept: 1.73,
        }
    }
}

impl IriModel {
    pub fn new(slope: f64, intercept: f64) -> Result<Self> {
        if !slope.is_finite() || slope <= 0.0 {
            return Err(Error::NonPhysicalSlope(slope));
        }
        if !intercept.is_finite() {
            return Err(Error::invalid("intercept must be finite"));
        }
        Ok(IriModel { slope, intercept })
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }
}

/// IRI estimate (mm/m) for a section RMS.
pub fn estimate_iri(rms: f64, model: &IriModel) -> Result<f64> {
    if !rms.is_finite() || rms < 0.0 {
        return Err(Error::invalid(format!("rms {rms} must be finite and non-negative")));
    }
    Ok(model.slope * rms + model.intercept)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RmsRow {
    pub section_id: String,
    pub run_id: String,
    pub rms_mps2: f64,
    pub iri_est_mm_per_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipEntry {
    pub section_id: String,
    pub run_id: String,
    pub reason: String,
}

/// One row per non-empty section run, sorted by (section_id, run_id).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RmsTable {
    pub rows: Vec<RmsRow>,
    pub skipped: Vec<SkipEntry>,
}

impl RmsTable {
    pub fn merge(tables: impl IntoIterator<Item = RmsTable>) -> RmsTable {
        let mut out = RmsTable::default();
        for t in tables {
            out.rows.extend(t.rows);
            out.skipped.extend(t.skipped);
        }
        out.sort();
        out
    }

    pub fn sort(&mut self) {
        self.rows.sort_by(|a, b| {
            natural_cmp(&a.section_id, &b.section_id).then_with(|| natural_cmp(&a.run_id, &b.run_id))
        });
        self.skipped.sort_by(|a, b| {
            natural_cmp(&a.section_id, &b.section_id).then_with(|| natural_cmp(&a.run_id, &b.run_id))
        });
    }
}

/// RMS (and the model's IRI estimate) of every non-empty section run; empty
/// ones go to the skip list.
pub fn section_rms_table(runs: &[SectionRun], reference: f64, model: &IriModel) -> Result<RmsTable> {
    let mut table = RmsTable::default();
    for run in runs {
        if run.is_empty() {
            table.skipped.push(SkipEntry {
                section_id: run.section_id().to_string(),
                run_id: run.run_id().to_string(),
                reason: "no samples".into(),
            });
            continue;
        }
        let rms = compute_rms(run.samples(), reference)?;
        table.rows.push(RmsRow {
            section_id: run.section_id().to_string(),
            run_id: run.run_id().to_string(),
            rms_mps2: rms,
            iri_est_mm_per_m: estimate_iri(rms, model)?,
        });
    }
    table.sort();
    Ok(table)
}

pub fn write_rms_csv<W: Write>(writer: W, rows: &[RmsRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RMS_TABLE_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.section_id.clone(),
            r.run_id.clone(),
            r.rms_mps2.to_string(),
            r.iri_est_mm_per_m.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_rms_csv<R: Read>(reader: R) -> Result<Vec<RmsRow>> {
    read_rows(reader, &RMS_TABLE_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let row = i + 1;
            let rms = parse_f64(field(rec, 2, row, "rms_mps2")?, row, "rms_mps2")?;
            if rms < 0.0 {
                return Err(Error::parse(row, "negative rms"));
            }
            Ok(RmsRow {
                section_id: field(rec, 0, row, "section_id")?.to_string(),
                run_id: field(rec, 1, row, "run_id")?.to_string(),
                rms_mps2: rms,
                iri_est_mm_per_m: parse_f64(
                    field(rec, 3, row, "iri_est_mm_per_m")?,
                    row,
                    "iri_est_mm_per_m",
                )?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::STANDARD_GRAVITY as G;
    use proptest::prelude::*;

    fn samples(azs: &[f64]) -> Vec<AccelSample> {
        azs.iter()
            .enumerate()
            .map(|(i, &az)| AccelSample::vertical(i as u64 * 500, az).unwrap())
            .collect()
    }

    #[test]
    fn rms_basic_cases() {
        assert_eq!(compute_rms(&samples(&[G; 10]), G).unwrap(), 0.0);
        let alt: Vec<f64> = (0..50).map(|i| if i % 2 == 0 { G + 1.0 } else { G - 1.0 }).collect();
        assert!((compute_rms(&samples(&alt), G).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(compute_rms(&[], G), Err(Error::NoSamples));
    }

    /// Oracle: the RMS of A·sin over whole periods is A/√2. The expected
    /// value here comes from trapezoidal integration of sin² over a dense
    /// grid, independent of the sampled sum under test.
    #[test]
    fn rms_of_dense_sine() {
        let a = 0.6 * 2f64.sqrt();
        let f = 0.7;
        let n_int = 200_000;
        let period = 1.0 / f;
        let h = period / n_int as f64;
        let mut integral = 0.0;
        for k in 0..=n_int {
            let w = if k == 0 || k == n_int { 0.5 } else { 1.0 };
            integral += w * (a * (2.0 * std::f64::consts::PI * f * k as f64 * h).sin()).powi(2);
        }
        let oracle = (integral * h / period).sqrt();
        assert!((oracle - 0.6).abs() < 1e-6);

        let azs: Vec<f64> = (0..20_000)
            .map(|k| G + a * (2.0 * std::f64::consts::PI * f * k as f64 * 0.01).sin())
            .collect();
        let rms = compute_rms(&samples(&azs), G).unwrap();
        assert!((rms / oracle - 1.0).abs() < 0.01, "{rms} vs {oracle}");
    }

    #[test]
    fn windows() {
        let s: Vec<AccelSample> = (0..10)
            .map(|i| AccelSample::vertical(i * 500, if i < 4 { G + 1.0 } else { G + 2.0 }).unwrap())
            .collect();
        let w = windowed_rms(&s, G, 2000).unwrap();
        assert_eq!(w, vec![(0, 1.0), (2000, 2.0), (4000, 2.0)]);
        assert!(windowed_rms(&s, G, 0).is_err());
    }

    #[test]
    fn iri_estimates() {
        let m = IriModel::default();
        assert!((estimate_iri(0.1, &m).unwrap() - 2.149).abs() < 1e-9);
        assert!((estimate_iri(0.0, &m).unwrap() - 1.73).abs() < 1e-12);
        assert!((estimate_iri(1.0, &m).unwrap() - 5.92).abs() < 1e-12);
        assert!(estimate_iri(-0.1, &m).is_err());
        assert!(IriModel::new(0.0, 1.0).is_err());
    }

    fn run(section: &str, run: &str, azs: &[f64]) -> SectionRun {
        SectionRun::new(section, run, samples(azs), Some(30.0), true).unwrap()
    }

    #[test]
    fn table_rows_and_skips() {
        let m = IriModel::default();
        let mut runs = Vec::new();
        for s in 1..=5 {
            for r in 1..=5 {
                let azs = if s == 3 && r == 2 { vec![] } else { vec![G + 0.1 * s as f64, G - 0.1 * s as f64] };
                runs.push(run(&format!("S{s}"), &r.to_string(), &azs));
            }
        }
        let t = section_rms_table(&runs, G, &m).unwrap();
        assert_eq!(t.rows.len(), 24);
        assert_eq!(t.skipped.len(), 1);
        assert_eq!((t.skipped[0].section_id.as_str(), t.skipped[0].run_id.as_str()), ("S3", "2"));

        let single = run("S1", "1", &[G + 0.3, G - 0.1, G]);
        let t = section_rms_table(std::slice::from_ref(&single), G, &m).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].rms_mps2, compute_rms(single.samples(), G).unwrap());
    }

    #[test]
    fn rms_csv_round_trip() {
        let rows = vec![RmsRow {
            section_id: "S1".into(),
            run_id: "1".into(),
            rms_mps2: 0.123456789,
            iri_est_mm_per_m: 2.247,
        }];
        let mut buf = Vec::new();
        write_rms_csv(&mut buf, &rows).unwrap();
        assert!(buf.starts_with(b"section_id,run_id,rms_mps2,iri_est_mm_per_m\n"));
        assert_eq!(parse_rms_csv(buf.as_slice()).unwrap(), rows);
    }

    proptest! {
        #[test]
        fn rms_properties(devs in prop::collection::vec(-5.0f64..5.0, 1..60), c in 0.01f64..10.0, rot in 0usize..60) {
            let azs: Vec<f64> = devs.iter().map(|d| G + d).collect();
            let rms = compute_rms(&samples(&azs), G).unwrap();
            prop_assert!(rms >= 0.0);

            let mut perm = azs.clone();
            let k = rot % perm.len();
            perm.rotate_left(k);
            perm.reverse();
            let rms_perm = compute_rms(&samples(&perm), G).unwrap();
            prop_assert!((rms - rms_perm).abs() <= 1e-9 * (1.0 + rms));

            let scaled: Vec<f64> = devs.iter().map(|d| G + c * d).collect();
            let rms_scaled = compute_rms(&samples(&scaled), G).unwrap();
            prop_assert!((rms_scaled - c * rms).abs() <= 1e-9 * (1.0 + c * rms));
        }

        #[test]
        fn iri_strictly_increasing(a in 0.0f64..10.0, b in 0.0f64..10.0, slope in 0.01f64..10.0) {
            prop_assume!(a < b);
            let m = IriModel::new(slope, 1.0).unwrap();
            prop_assert!(estimate_iri(a, &m).unwrap() < estimate_iri(b, &m).unwrap());
        }
    }
}
