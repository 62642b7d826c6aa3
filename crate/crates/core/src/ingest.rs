//! CSV ingestion and validation for traces, distress surveys and rating sheets.
//!
//! All files are UTF-8, comma separated, `.` decimal point, with a mandatory
//! header that must match exactly. Row numbers in errors count data rows from
//! 1; the header is row 0.

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    AccelSample, DistressRecord, DistressType, GpsSample, RatingRecord, Severity, Trace,
    STANDARD_GRAVITY,
};

pub const TRACE_HEADER: [&str; 7] = ["t_ms", "ax", "ay", "az", "lat", "lon", "speed_kph"];
pub const DISTRESS_HEADER: [&str; 4] = ["section_id", "distress_type", "severity", "density"];
pub const RATING_HEADER: [&str; 4] = ["rater_id", "section_id", "run_id", "rqi"];

/// Records parsed in lenient mode plus every row that failed.
///
/// `rows_in == records.len() + errors.len()` always holds.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseOutcome<T> {
    pub rows_in: usize,
    pub records: Vec<T>,
    pub errors: Vec<Error>,
}

impl<T> ParseOutcome<T> {
    fn into_strict(self) -> Result<Vec<T>> {
        match self.errors.into_iter().next() {
            Some(e) => Err(e),
            None => Ok(self.records),
        }
    }
}

pub(crate) fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader)
}

/// Reads all rows, checks the header and returns the data rows.
pub(crate) fn read_rows<R: Read>(reader: R, header: &[&str]) -> Result<Vec<csv::StringRecord>> {
    let mut rdr = csv_reader(reader);
    let mut rows = rdr.records();
    let head = match rows.next() {
        None => return Err(Error::parse(0, format!("missing header, expected `{}`", header.join(",")))),
        Some(r) => r.map_err(|e| Error::parse(0, e.to_string()))?,
    };
    if head.iter().ne(header.iter().copied()) {
        return Err(Error::parse(
            0,
            format!(
                "missing header: expected `{}`, found `{}`",
                header.join(","),
                head.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut out = Vec::new();
    for (i, r) in rows.enumerate() {
        out.push(r.map_err(|e| Error::parse(i + 1, e.to_string()))?);
    }
    Ok(out)
}

pub(crate) fn field<'a>(rec: &'a csv::StringRecord, idx: usize, row: usize, name: &str) -> Result<&'a str> {
    rec.get(idx)
        .map(str::trim)
        .ok_or_else(|| Error::parse(row, format!("missing field `{name}`")))
}

pub(crate) fn parse_f64(s: &str, row: usize, name: &str) -> Result<f64> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::parse(row, format!("malformed number {s:?} in `{name}`"))),
    }
}

fn check_width(rec: &csv::StringRecord, width: usize, row: usize) -> Result<()> {
    if rec.len() != width {
        return Err(Error::parse(
            row,
            format!("expected {width} fields, found {}", rec.len()),
        ));
    }
    Ok(())
}

struct TraceRow {
    accel: AccelSample,
    gps: Option<GpsSample>,
}

fn parse_trace_row(rec: &csv::StringRecord, row: usize) -> Result<TraceRow> {
    check_width(rec, TRACE_HEADER.len(), row)?;
    let t_raw = field(rec, 0, row, "t_ms")?;
    let t_ms: u64 = t_raw
        .parse()
        .map_err(|_| Error::parse(row, format!("malformed number {t_raw:?} in `t_ms`")))?;
    let ax = parse_f64(field(rec, 1, row, "ax")?, row, "ax")?;
    let ay = parse_f64(field(rec, 2, row, "ay")?, row, "ay")?;
    let az = parse_f64(field(rec, 3, row, "az")?, row, "az")?;
    let accel = AccelSample::new(t_ms, ax, ay, az).map_err(|e| Error::parse(row, e.to_string()))?;
    let lat = field(rec, 4, row, "lat")?;
    let lon = field(rec, 5, row, "lon")?;
    let speed = field(rec, 6, row, "speed_kph")?;
    let gps = match (lat.is_empty(), lon.is_empty(), speed.is_empty()) {
        (true, true, true) => None,
        (false, false, false) => {
            let lat = parse_f64(lat, row, "lat")?;
            let lon = parse_f64(lon, row, "lon")?;
            let speed = parse_f64(speed, row, "speed_kph")?;
            Some(GpsSample::new(t_ms, lat, lon, speed).map_err(|e| Error::parse(row, e.to_string()))?)
        }
        _ => {
            return Err(Error::parse(
                row,
                "lat, lon and speed_kph must be all present or all blank",
            ))
        }
    };
    Ok(TraceRow { accel, gps })
}

/// Parses a trace CSV with standard gravity.
pub fn parse_trace<R: Read>(reader: R, run_id: &str) -> Result<Trace> {
    parse_trace_with_gravity(reader, run_id, STANDARD_GRAVITY)
}

pub fn parse_trace_with_gravity<R: Read>(reader: R, run_id: &str, gravity_mps2: f64) -> Result<Trace> {
    let rows = read_rows(reader, &TRACE_HEADER)?;
    let mut accel = Vec::with_capacity(rows.len());
    let mut gps = Vec::new();
    let mut prev: Option<u64> = None;
    for (i, rec) in rows.iter().enumerate() {
        let row = i + 1;
        let parsed = parse_trace_row(rec, row)?;
        let t = parsed.accel.t_ms();
        if let Some(p) = prev {
            if t == p {
                return Err(Error::parse(row, format!("duplicate t_ms {t}")));
            }
            if t < p {
                return Err(Error::parse(row, format!("decreasing t_ms {t} after {p}")));
            }
        }
        prev = Some(t);
        accel.push(parsed.accel);
        gps.extend(parsed.gps);
    }
    Trace::with_gravity(run_id, accel, gps, gravity_mps2)
}

/// Writes a trace in the trace CSV schema. Every GPS fix must share its
/// timestamp with an accelerometer sample.
pub fn write_trace_csv<W: Write>(writer: W, trace: &Trace) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRACE_HEADER).map_err(csv_err)?;
    let mut gps = trace.gps().iter().peekable();
    for a in trace.accel() {
        let fix = match gps.peek() {
            Some(g) if g.t_ms() == a.t_ms() => gps.next(),
            Some(g) if g.t_ms() < a.t_ms() => {
                return Err(Error::invalid(format!(
                    "gps fix at t_ms={} has no matching accelerometer row",
                    g.t_ms()
                )))
            }
            _ => None,
        };
        let (lat, lon, speed) = match fix {
            Some(g) => (g.lat().to_string(), g.lon().to_string(), g.speed_kph().to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        w.write_record([
            a.t_ms().to_string(),
            a.ax().to_string(),
            a.ay().to_string(),
            a.az().to_string(),
            lat,
            lon,
            speed,
        ])
        .map_err(csv_err)?;
    }
    if let Some(g) = gps.next() {
        return Err(Error::invalid(format!(
            "gps fix at t_ms={} has no matching accelerometer row",
            g.t_ms()
        )));
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn parse_distress_row(rec: &csv::StringRecord, row: usize) -> Result<DistressRecord> {
    check_width(rec, DISTRESS_HEADER.len(), row)?;
    let section = field(rec, 0, row, "section_id")?;
    if section.is_empty() {
        return Err(Error::parse(row, "empty section_id"));
    }
    let ty_raw = field(rec, 1, row, "distress_type")?;
    let ty: DistressType = ty_raw
        .parse()
        .map_err(|_| Error::parse(row, format!("unknown distress type {ty_raw:?}")))?;
    let sev_raw = field(rec, 2, row, "severity")?;
    let sev: Severity = sev_raw
        .parse()
        .map_err(|_| Error::parse(row, format!("unknown severity {sev_raw:?}")))?;
    let density = parse_f64(field(rec, 3, row, "density")?, row, "density")?;
    if density < 0.0 {
        return Err(Error::parse(row, format!("negative density {density}")));
    }
    DistressRecord::new(section, ty, sev, density).map_err(|e| Error::parse(row, e.to_string()))
}

pub fn parse_distress_lenient<R: Read>(reader: R) -> Result<ParseOutcome<DistressRecord>> {
    lenient(reader, &DISTRESS_HEADER, parse_distress_row)
}

pub fn parse_distress_csv<R: Read>(reader: R) -> Result<Vec<DistressRecord>> {
    parse_distress_lenient(reader)?.into_strict()
}

pub fn write_distress_csv<W: Write>(writer: W, records: &[DistressRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(DISTRESS_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.section_id().to_string(),
            r.distress_type().label().to_string(),
            r.severity().label().to_string(),
            r.density().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_rating_row(rec: &csv::StringRecord, row: usize) -> Result<RatingRecord> {
    check_width(rec, RATING_HEADER.len(), row)?;
    let rater = field(rec, 0, row, "rater_id")?;
    let section = field(rec, 1, row, "section_id")?;
    let run = field(rec, 2, row, "run_id")?;
    if rater.is_empty() || section.is_empty() || run.is_empty() {
        return Err(Error::parse(row, "empty identifier"));
    }
    let rqi = parse_f64(field(rec, 3, row, "rqi")?, row, "rqi")?;
    RatingRecord::new(rater, section, run, rqi)
        .map_err(|_| Error::parse(row, format!("rqi out of range: {rqi}")))
}

pub fn parse_rating_lenient<R: Read>(reader: R) -> Result<ParseOutcome<RatingRecord>> {
    lenient(reader, &RATING_HEADER, parse_rating_row)
}

pub fn parse_rating_csv<R: Read>(reader: R) -> Result<Vec<RatingRecord>> {
    parse_rating_lenient(reader)?.into_strict()
}

pub fn write_rating_csv<W: Write>(writer: W, records: &[RatingRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RATING_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([r.rater_id(), r.section_id(), r.run_id(), &r.rqi().to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn lenient<R: Read, T>(
    reader: R,
    header: &[&str],
    parse_row: impl Fn(&csv::StringRecord, usize) -> Result<T>,
) -> Result<ParseOutcome<T>> {
    let rows = read_rows(reader, header)?;
    let mut out = ParseOutcome {
        rows_in: rows.len(),
        records: Vec::with_capacity(rows.len()),
        errors: Vec::new(),
    };
    for (i, rec) in rows.iter().enumerate() {
        match parse_row(rec, i + 1) {
            Ok(r) => out.records.push(r),
            Err(e) => out.errors.push(e),
        }
    }
    Ok(out)
}

/// One validation finding. `row` is the accelerometer row (1-based) the
/// finding refers to, when there is one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub row: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub run_id: String,
    pub errors: Vec<Finding>,
    pub warnings: Vec<Finding>,
    /// Median gap between consecutive accelerometer samples.
    pub cadence_ms_observed: Option<f64>,
    pub completeness_ok: bool,
}

/// Relative deviation of the median cadence that triggers a warning.
pub const CADENCE_WARN_FRACTION: f64 = 0.20;
/// A gap longer than this many expected cadences is an error.
pub const GAP_ERROR_FACTOR: u64 = 3;

/// Completeness and consistency checks on a parsed trace.
pub fn validate_trace(trace: &Trace, expected_cadence_ms: u64) -> ValidationReport {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    let accel = trace.accel();
    if accel.is_empty() {
        errors.push(Finding {
            row: None,
            message: "empty accelerometer stream".into(),
        });
    }
    let gaps: Vec<u64> = accel.windows(2).map(|w| w[1].t_ms() - w[0].t_ms()).collect();
    let cadence = median_u64(&gaps);
    if let Some(c) = cadence {
        if expected_cadence_ms > 0 {
            let dev = (c - expected_cadence_ms as f64).abs() / expected_cadence_ms as f64;
            if dev > CADENCE_WARN_FRACTION + 1e-12 {
                warnings.push(Finding {
                    row: None,
                    message: format!(
                        "median cadence {c} ms deviates {:.0}% from expected {expected_cadence_ms} ms",
                        dev * 100.0
                    ),
                });
            }
        }
    }
    let limit = GAP_ERROR_FACTOR * expected_cadence_ms;
    for (i, w) in accel.windows(2).enumerate() {
        let gap = w[1].t_ms() - w[0].t_ms();
        if gap > limit {
            errors.push(Finding {
                row: Some(i + 2),
                message: format!(
                    "gap of {gap} ms between t_ms={} and t_ms={}",
                    w[0].t_ms(),
                    w[1].t_ms()
                ),
            });
        }
    }
    if trace.gps().is_empty() && !accel.is_empty() {
        warnings.push(Finding {
            row: None,
            message: "no GPS fixes; the trace cannot be segmented".into(),
        });
    }
    ValidationReport {
        run_id: trace.run_id().to_string(),
        completeness_ok: errors.is_empty(),
        errors,
        warnings,
        cadence_ms_observed: cadence,
    }
}

fn median_u64(v: &[u64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_unstable();
    let n = s.len();
    Some(if n % 2 == 1 {
        s[n / 2] as f64
    } else {
        (s[n / 2 - 1] + s[n / 2]) as f64 / 2.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const G: f64 = STANDARD_GRAVITY;

    fn trace_csv(rows: &[(u64, f64)]) -> String {
        let mut s = TRACE_HEADER.join(",") + "\n";
        for (t, az) in rows {
            s.push_str(&format!("{t},0,0,{az},,,\n"));
        }
        s
    }

    #[test]
    fn two_rows_give_cadence_500() {
        let csv = "t_ms,ax,ay,az,lat,lon,speed_kph\n0,0.1,0.2,9.8,35.7,51.4,30\n500,0.1,0.2,9.9,,,\n";
        let trace = parse_trace(csv.as_bytes(), "1").unwrap();
        assert_eq!(trace.accel().len(), 2);
        assert_eq!(trace.gps().len(), 1);
        let report = validate_trace(&trace, 500);
        assert_eq!(report.cadence_ms_observed, Some(500.0));
    }

    #[test]
    fn header_only_is_empty_trace() {
        let trace = parse_trace("t_ms,ax,ay,az,lat,lon,speed_kph\n".as_bytes(), "1").unwrap();
        assert!(trace.accel().is_empty());
        let report = validate_trace(&trace, 500);
        assert!(!report.completeness_ok);
    }

    #[test]
    fn bad_number_cites_row() {
        let rows: Vec<(u64, f64)> = (0..20).map(|i| (i * 500, G)).collect();
        let mut csv = trace_csv(&rows);
        let lines: Vec<String> = csv.lines().map(|l| l.to_string()).collect();
        let mut lines = lines;
        // data row 7 is line index 7 (header at 0)
        lines[7] = "3000,0,0,abc,,,".into();
        csv = lines.join("\n");
        match parse_trace(csv.as_bytes(), "1") {
            Err(Error::Parse { row, message }) => {
                assert_eq!(row, 7);
                assert!(message.contains("az"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_header_and_ordering_errors() {
        assert!(matches!(
            parse_trace("0,0,0,9.8,,,\n".as_bytes(), "1"),
            Err(Error::Parse { row: 0, .. })
        ));
        assert!(matches!(parse_trace("".as_bytes(), "1"), Err(Error::Parse { row: 0, .. })));
        let dup = trace_csv(&[(0, G), (500, G), (500, G)]);
        assert!(matches!(parse_trace(dup.as_bytes(), "1"), Err(Error::Parse { row: 3, .. })));
        let dec = trace_csv(&[(0, G), (500, G), (400, G)]);
        assert!(matches!(parse_trace(dec.as_bytes(), "1"), Err(Error::Parse { row: 3, .. })));
        let partial = "t_ms,ax,ay,az,lat,lon,speed_kph\n0,0,0,9.8,35.7,,\n";
        assert!(matches!(parse_trace(partial.as_bytes(), "1"), Err(Error::Parse { row: 1, .. })));
    }

    #[test]
    fn perfect_cadence_is_clean() {
        let rows: Vec<(u64, f64)> = (0..40).map(|i| (i * 500, G)).collect();
        let trace = parse_trace(trace_csv(&rows).as_bytes(), "1").unwrap();
        let r = validate_trace(&trace, 500);
        assert!(r.completeness_ok);
        // no GPS → one warning about segmentation, none about cadence
        assert!(r.warnings.iter().all(|w| !w.message.contains("cadence")));
    }

    #[test]
    fn five_second_gap_is_error() {
        let mut rows: Vec<(u64, f64)> = (0..10).map(|i| (i * 500, G)).collect();
        rows.extend((0..10).map(|i| (4500 + 5000 + i * 500, G)));
        let trace = parse_trace(trace_csv(&rows).as_bytes(), "1").unwrap();
        let r = validate_trace(&trace, 500);
        assert!(!r.completeness_ok);
        assert_eq!(r.errors.len(), 1);
        assert_eq!(r.errors[0].row, Some(11));
        assert!(r.errors[0].message.contains("t_ms=4500 and t_ms=9500"), "{}", r.errors[0].message);
    }

    #[test]
    fn slow_cadence_warns() {
        let rows: Vec<(u64, f64)> = (0..20).map(|i| (i * 650, G)).collect();
        let trace = parse_trace(trace_csv(&rows).as_bytes(), "1").unwrap();
        let r = validate_trace(&trace, 500);
        assert!(r.completeness_ok);
        assert!(r.warnings.iter().any(|w| w.message.contains("30%")), "{:?}", r.warnings);
    }

    #[test]
    fn distress_rows() {
        let ok = "section_id,distress_type,severity,density\nS1,Pothole,High,2.0\n";
        let recs = parse_distress_csv(ok.as_bytes()).unwrap();
        assert_eq!(
            recs,
            vec![DistressRecord::new("S1", DistressType::Pothole, Severity::High, 2.0).unwrap()]
        );
        let bad = "section_id,distress_type,severity,density\nS1,RuttingX,Low,1\n";
        let err = parse_distress_csv(bad.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("unknown distress type"), "{err}");
        let neg = "section_id,distress_type,severity,density\nS1,pothole,Low,-1\n";
        let err = parse_distress_csv(neg.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("negative density"), "{err}");
    }

    #[test]
    fn rating_rows() {
        let ok = "rater_id,section_id,run_id,rqi\nr10,S1,1,4.5\n";
        let recs = parse_rating_csv(ok.as_bytes()).unwrap();
        assert_eq!(recs[0].rqi(), 4.5);
        let bad = "rater_id,section_id,run_id,rqi\nr1,S1,1,5.2\n";
        let err = parse_rating_csv(bad.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("rqi out of range"), "{err}");
        assert!(parse_rating_csv("rater_id,section_id,run_id,rqi\n".as_bytes())
            .unwrap()
            .is_empty());
    }

    proptest! {
        #[test]
        fn lenient_parsing_accounts_for_every_row(
            rows in prop::collection::vec((0usize..4, -1.0f64..6.0), 0..30)
        ) {
            let mut csv = RATING_HEADER.join(",") + "\n";
            for (kind, v) in &rows {
                match kind {
                    0 => csv.push_str(&format!("r1,S1,1,{v}\n")),
                    1 => csv.push_str("r1,S1,1,x\n"),
                    2 => csv.push_str("r1,S1\n"),
                    _ => csv.push_str(&format!("r2,S2,2,{}\n", v.clamp(0.0, 5.0))),
                }
            }
            let out = parse_rating_lenient(csv.as_bytes()).unwrap();
            prop_assert_eq!(out.rows_in, rows.len());
            prop_assert_eq!(out.rows_in, out.records.len() + out.errors.len());
        }

        #[test]
        fn csv_round_trip(
            ratings in prop::collection::vec(("[a-z][0-9]", "S[0-9]", "[1-5]", 0.0f64..=5.0), 0..10),
            distress in prop::collection::vec(("S[0-9]", 0usize..6, 0usize..3, 0.0f64..1e3), 0..10),
            azs in prop::collection::vec(-20.0f64..20.0, 0..20),
        ) {
            let ratings: Vec<RatingRecord> = ratings
                .into_iter()
                .map(|(a, b, c, q)| RatingRecord::new(a, b, c, q).unwrap())
                .collect();
            let mut buf = Vec::new();
            write_rating_csv(&mut buf, &ratings).unwrap();
            prop_assert_eq!(parse_rating_csv(buf.as_slice()).unwrap(), ratings);

            let distress: Vec<DistressRecord> = distress
                .into_iter()
                .map(|(s, t, v, d)| DistressRecord::new(s, DistressType::ALL[t], Severity::ALL[v], d).unwrap())
                .collect();
            let mut buf = Vec::new();
            write_distress_csv(&mut buf, &distress).unwrap();
            prop_assert_eq!(parse_distress_csv(buf.as_slice()).unwrap(), distress);

            let accel: Vec<AccelSample> = azs
                .iter()
                .enumerate()
                .map(|(i, &az)| AccelSample::new(i as u64 * 500, az * 0.1, -az, az).unwrap())
                .collect();
            let gps: Vec<GpsSample> = accel
                .iter()
                .step_by(2)
                .map(|a| GpsSample::new(a.t_ms(), 35.7 + a.az() * 1e-4, 51.4, 30.0 + a.az()).unwrap_or_else(|_| GpsSample::new(a.t_ms(), 35.7, 51.4, 0.0).unwrap()))
                .collect();
            let trace = Trace::new("run", accel, gps).unwrap();
            let mut buf = Vec::new();
            write_trace_csv(&mut buf, &trace).unwrap();
            prop_assert_eq!(parse_trace(buf.as_slice(), "run").unwrap(), trace);
        }
    }
}
