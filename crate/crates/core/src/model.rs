//! Shared domain types.
//!
//! Every type validates its invariants on construction (and on
//! deserialization), so a value that exists is a valid value. All types are
//! plain immutable data and are `Send + Sync`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Standard gravity, used when a trace does not override it.
pub const STANDARD_GRAVITY: f64 = 9.80665;

/// A WGS-84 position in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatLonRepr")]
pub struct LatLon {
    lat: f64,
    lon: f64,
}

#[derive(Deserialize)]
struct LatLonRepr {
    lat: f64,
    lon: f64,
}

impl TryFrom<LatLonRepr> for LatLon {
    type Error = Error;
    fn try_from(r: LatLonRepr) -> Result<Self> {
        LatLon::new(r.lat, r.lon)
    }
}

impl LatLon {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(Error::invalid(format!("latitude {lat} outside [-90, 90]")));
        }
        if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::invalid(format!("longitude {lon} outside [-180, 180]")));
        }
        Ok(LatLon { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

/// One accelerometer reading. `t_ms` is milliseconds since the start of the run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AccelSampleRepr")]
pub struct AccelSample {
    t_ms: u64,
    ax: f64,
    ay: f64,
    az: f64,
}

#[derive(Deserialize)]
struct AccelSampleRepr {
    t_ms: u64,
    ax: f64,
    ay: f64,
    az: f64,
}

impl TryFrom<AccelSampleRepr> for AccelSample {
    type Error = Error;
    fn try_from(r: AccelSampleRepr) -> Result<Self> {
        AccelSample::new(r.t_ms, r.ax, r.ay, r.az)
    }
}

impl AccelSample {
    pub fn new(t_ms: u64, ax: f64, ay: f64, az: f64) -> Result<Self> {
        if !(ax.is_finite() && ay.is_finite() && az.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite acceleration at t_ms={t_ms}"
            )));
        }
        Ok(AccelSample { t_ms, ax, ay, az })
    }

    /// Vertical-only sample; the horizontal axes are zero.
    pub fn vertical(t_ms: u64, az: f64) -> Result<Self> {
        Self::new(t_ms, 0.0, 0.0, az)
    }

    pub fn t_ms(&self) -> u64 {
        self.t_ms
    }

    pub fn ax(&self) -> f64 {
        self.ax
    }

    pub fn ay(&self) -> f64 {
        self.ay
    }

    /// Vertical acceleration (m/s², gravity included).
    pub fn az(&self) -> f64 {
        self.az
    }
}

/// One GPS fix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GpsSampleRepr")]
pub struct GpsSample {
    t_ms: u64,
    lat: f64,
    lon: f64,
    speed_kph: f64,
}

#[derive(Deserialize)]
struct GpsSampleRepr {
    t_ms: u64,
    lat: f64,
    lon: f64,
    speed_kph: f64,
}

impl TryFrom<GpsSampleRepr> for GpsSample {
    type Error = Error;
    fn try_from(r: GpsSampleRepr) -> Result<Self> {
        GpsSample::new(r.t_ms, r.lat, r.lon, r.speed_kph)
    }
}

impl GpsSample {
    pub fn new(t_ms: u64, lat: f64, lon: f64, speed_kph: f64) -> Result<Self> {
        LatLon::new(lat, lon)?;
        if !speed_kph.is_finite() || speed_kph < 0.0 {
            return Err(Error::invalid(format!(
                "speed {speed_kph} kph at t_ms={t_ms} must be finite and non-negative"
            )));
        }
        Ok(GpsSample {
            t_ms,
            lat,
            lon,
            speed_kph,
        })
    }

    pub fn t_ms(&self) -> u64 {
        self.t_ms
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    pub fn speed_kph(&self) -> f64 {
        self.speed_kph
    }

    pub fn position(&self) -> LatLon {
        LatLon {
            lat: self.lat,
            lon: self.lon,
        }
    }
}

/// The accelerometer and GPS streams recorded during one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TraceRepr")]
pub struct Trace {
    run_id: String,
    accel: Vec<AccelSample>,
    gps: Vec<GpsSample>,
    gravity_mps2: f64,
}

#[derive(Deserialize)]
struct TraceRepr {
    run_id: String,
    accel: Vec<AccelSample>,
    gps: Vec<GpsSample>,
    gravity_mps2: f64,
}

impl TryFrom<TraceRepr> for Trace {
    type Error = Error;
    fn try_from(r: TraceRepr) -> Result<Self> {
        Trace::with_gravity(r.run_id, r.accel, r.gps, r.gravity_mps2)
    }
}

impl Trace {
    /// Builds a trace with standard gravity.
    pub fn new(
        run_id: impl Into<String>,
        accel: Vec<AccelSample>,
        gps: Vec<GpsSample>,
    ) -> Result<Self> {
        Self::with_gravity(run_id, accel, gps, STANDARD_GRAVITY)
    }

    pub fn with_gravity(
        run_id: impl Into<String>,
        accel: Vec<AccelSample>,
        gps: Vec<GpsSample>,
        gravity_mps2: f64,
    ) -> Result<Self> {
        let run_id = run_id.into();
        if !gravity_mps2.is_finite() || gravity_mps2 <= 0.0 {
            return Err(Error::invalid(format!(
                "gravity {gravity_mps2} must be finite and positive"
            )));
        }
        check_increasing(accel.iter().map(AccelSample::t_ms), "accel")?;
        check_increasing(gps.iter().map(GpsSample::t_ms), "gps")?;
        Ok(Trace {
            run_id,
            accel,
            gps,
            gravity_mps2,
        })
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn accel(&self) -> &[AccelSample] {
        &self.accel
    }

    pub fn gps(&self) -> &[GpsSample] {
        &self.gps
    }

    pub fn gravity_mps2(&self) -> f64 {
        self.gravity_mps2
    }

    /// Mean vertical acceleration over the whole run, or `None` when the
    /// accelerometer stream is empty.
    pub fn mean_az(&self) -> Option<f64> {
        if self.accel.is_empty() {
            return None;
        }
        Some(self.accel.iter().map(AccelSample::az).sum::<f64>() / self.accel.len() as f64)
    }
}

fn check_increasing(times: impl Iterator<Item = u64>, stream: &str) -> Result<()> {
    let mut prev: Option<u64> = None;
    for (i, t) in times.enumerate() {
        if let Some(p) = prev {
            if t <= p {
                return Err(Error::invalid(format!(
                    "{stream} stream not strictly increasing at index {i}: t_ms {t} after {p}"
                )));
            }
        }
        prev = Some(t);
    }
    Ok(())
}

/// A road section: a chainage interval along a route polyline.
///
/// `polyline` holds the section's own geometry, clipped from the route it
/// was defined on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SectionDefinitionRepr")]
pub struct SectionDefinition {
    section_id: String,
    polyline: Vec<LatLon>,
    start_chainage_m: f64,
    end_chainage_m: f64,
}

#[derive(Deserialize)]
struct SectionDefinitionRepr {
    section_id: String,
    polyline: Vec<LatLon>,
    start_chainage_m: f64,
    end_chainage_m: f64,
}

impl TryFrom<SectionDefinitionRepr> for SectionDefinition {
    type Error = Error;
    fn try_from(r: SectionDefinitionRepr) -> Result<Self> {
        SectionDefinition::new(r.section_id, r.polyline, r.start_chainage_m, r.end_chainage_m)
    }
}

impl SectionDefinition {
    pub fn new(
        section_id: impl Into<String>,
        polyline: Vec<LatLon>,
        start_chainage_m: f64,
        end_chainage_m: f64,
    ) -> Result<Self> {
        let section_id = section_id.into();
        if !start_chainage_m.is_finite() || !end_chainage_m.is_finite() {
            return Err(Error::invalid(format!(
                "section {section_id}: chainage must be finite"
            )));
        }
        if end_chainage_m <= start_chainage_m {
            return Err(Error::invalid(format!(
                "section {section_id}: end chainage {end_chainage_m} must exceed start {start_chainage_m}"
            )));
        }
        Ok(SectionDefinition {
            section_id,
            polyline,
            start_chainage_m,
            end_chainage_m,
        })
    }

    pub fn section_id(&self) -> &str {
        &self.section_id
    }

    pub fn polyline(&self) -> &[LatLon] {
        &self.polyline
    }

    pub fn start_chainage_m(&self) -> f64 {
        self.start_chainage_m
    }

    pub fn end_chainage_m(&self) -> f64 {
        self.end_chainage_m
    }

    pub fn length_m(&self) -> f64 {
        self.end_chainage_m - self.start_chainage_m
    }

    /// Half-open membership test `[start, end)`.
    pub fn contains(&self, chainage_m: f64) -> bool {
        chainage_m >= self.start_chainage_m && chainage_m < self.end_chainage_m
    }
}

/// The slice of one run's accelerometer samples that fell on one section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionRun {
    section_id: String,
    run_id: String,
    samples: Vec<AccelSample>,
    mean_speed_kph: Option<f64>,
    speed_gate_pass: bool,
}

impl SectionRun {
    pub fn new(
        section_id: impl Into<String>,
        run_id: impl Into<String>,
        samples: Vec<AccelSample>,
        mean_speed_kph: Option<f64>,
        speed_gate_pass: bool,
    ) -> Result<Self> {
        check_increasing(samples.iter().map(AccelSample::t_ms), "section-run")?;
        if let Some(v) = mean_speed_kph {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("mean speed {v} must be non-negative")));
            }
        }
        Ok(SectionRun {
            section_id: section_id.into(),
            run_id: run_id.into(),
            samples,
            mean_speed_kph,
            speed_gate_pass,
        })
    }

    pub fn section_id(&self) -> &str {
        &self.section_id
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn samples(&self) -> &[AccelSample] {
        &self.samples
    }

    pub fn mean_speed_kph(&self) -> Option<f64> {
        self.mean_speed_kph
    }

    pub fn speed_gate_pass(&self) -> bool {
        self.speed_gate_pass
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Distress severity level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Severity {
    Low,
    Moderate,
    High,
}

impl Severity {
    pub const ALL: [Severity; 3] = [Severity::Low, Severity::Moderate, Severity::High];

    /// Numeric severity factor: Low = 1, Moderate = 2, High = 3.
    pub fn code(self) -> u8 {
        match self {
            Severity::Low => 1,
            Severity::Moderate => 2,
            Severity::High => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Severity::Low => "Low",
            Severity::Moderate => "Moderate",
            Severity::High => "High",
        }
    }
}

impl FromStr for Severity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "low" => Ok(Severity::Low),
            "moderate" => Ok(Severity::Moderate),
            "high" => Ok(Severity::High),
            _ => Err(Error::invalid(format!("unknown severity {s:?}"))),
        }
    }
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Maps a severity label to its numeric factor.
pub fn severity_code(label: &str) -> Result<u8> {
    label.parse::<Severity>().map(Severity::code)
}

/// The six distress types that enter the distress index.
///
/// Cracks are measured in meters, the rest in square meters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistressType {
    LongitudinalCrack,
    TransverseCrack,
    AlligatorCrack,
    Pothole,
    Patching,
    Corrugation,
}

impl DistressType {
    pub const ALL: [DistressType; 6] = [
        DistressType::LongitudinalCrack,
        DistressType::TransverseCrack,
        DistressType::AlligatorCrack,
        DistressType::Pothole,
        DistressType::Patching,
        DistressType::Corrugation,
    ];

    pub fn label(self) -> &'static str {
        match self {
            DistressType::LongitudinalCrack => "longitudinal crack",
            DistressType::TransverseCrack => "transverse crack",
            DistressType::AlligatorCrack => "alligator crack",
            DistressType::Pothole => "pothole",
            DistressType::Patching => "patching",
            DistressType::Corrugation => "corrugation",
        }
    }

    /// Snake-case key used in config files.
    pub fn key(self) -> &'static str {
        match self {
            DistressType::LongitudinalCrack => "longitudinal_crack",
            DistressType::TransverseCrack => "transverse_crack",
            DistressType::AlligatorCrack => "alligator_crack",
            DistressType::Pothole => "pothole",
            DistressType::Patching => "patching",
            DistressType::Corrugation => "corrugation",
        }
    }

    /// Whether density is a length (m) rather than an area (m²).
    pub fn is_linear(self) -> bool {
        matches!(
            self,
            DistressType::LongitudinalCrack | DistressType::TransverseCrack
        )
    }
}

impl FromStr for DistressType {
    type Err = Error;

    /// Case-insensitive; `_`, `-` and runs of whitespace are equivalent.
    /// "longitude crack" is accepted as an alias of longitudinal crack.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s
            .to_ascii_lowercase()
            .replace(['_', '-'], " ")
            .split_whitespace()
            .collect::<Vec<_>>()
            .join(" ");
        match norm.as_str() {
            "longitudinal crack" | "longitude crack" => Ok(DistressType::LongitudinalCrack),
            "transverse crack" => Ok(DistressType::TransverseCrack),
            "alligator crack" => Ok(DistressType::AlligatorCrack),
            "pothole" => Ok(DistressType::Pothole),
            "patching" => Ok(DistressType::Patching),
            "corrugation" => Ok(DistressType::Corrugation),
            _ => Err(Error::invalid(format!("unknown distress type {s:?}"))),
        }
    }
}

impl fmt::Display for DistressType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// One observed distress on a section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistressRecordRepr")]
pub struct DistressRecord {
    section_id: String,
    distress_type: DistressType,
    severity: Severity,
    density: f64,
}

#[derive(Deserialize)]
struct DistressRecordRepr {
    section_id: String,
    distress_type: DistressType,
    severity: Severity,
    density: f64,
}

impl TryFrom<DistressRecordRepr> for DistressRecord {
    type Error = Error;
    fn try_from(r: DistressRecordRepr) -> Result<Self> {
        DistressRecord::new(r.section_id, r.distress_type, r.severity, r.density)
    }
}

impl DistressRecord {
    pub fn new(
        section_id: impl Into<String>,
        distress_type: DistressType,
        severity: Severity,
        density: f64,
    ) -> Result<Self> {
        if !density.is_finite() {
            return Err(Error::invalid("density must be finite"));
        }
        if density < 0.0 {
            return Err(Error::invalid("negative density"));
        }
        Ok(DistressRecord {
            section_id: section_id.into(),
            distress_type,
            severity,
            density,
        })
    }

    pub fn section_id(&self) -> &str {
        &self.section_id
    }

    pub fn distress_type(&self) -> DistressType {
        self.distress_type
    }

    pub fn severity(&self) -> Severity {
        self.severity
    }

    pub fn density(&self) -> f64 {
        self.density
    }
}

/// Lowest and highest admissible ride quality rating.
pub const RQI_MIN: f64 = 0.0;
pub const RQI_MAX: f64 = 5.0;

/// One rater's ride quality rating of one section on one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RatingRecordRepr")]
pub struct RatingRecord {
    rater_id: String,
    section_id: String,
    run_id: String,
    rqi: f64,
}

#[derive(Deserialize)]
struct RatingRecordRepr {
    rater_id: String,
    section_id: String,
    run_id: String,
    rqi: f64,
}

impl TryFrom<RatingRecordRepr> for RatingRecord {
    type Error = Error;
    fn try_from(r: RatingRecordRepr) -> Result<Self> {
        RatingRecord::new(r.rater_id, r.section_id, r.run_id, r.rqi)
    }
}

impl RatingRecord {
    pub fn new(
        rater_id: impl Into<String>,
        section_id: impl Into<String>,
        run_id: impl Into<String>,
        rqi: f64,
    ) -> Result<Self> {
        if !rqi.is_finite() || !(RQI_MIN..=RQI_MAX).contains(&rqi) {
            return Err(Error::invalid(format!("rqi out of range: {rqi}")));
        }
        Ok(RatingRecord {
            rater_id: rater_id.into(),
            section_id: section_id.into(),
            run_id: run_id.into(),
            rqi,
        })
    }

    pub fn rater_id(&self) -> &str {
        &self.rater_id
    }

    pub fn section_id(&self) -> &str {
        &self.section_id
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn rqi(&self) -> f64 {
        self.rqi
    }
}

/// Verbal band of a ride quality rating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RideQualityBand {
    VeryPoor,
    Poor,
    Fair,
    Good,
    VeryGood,
}

impl RideQualityBand {
    /// Bands are 0.0-1.0, 1.1-2.0, 2.1-3.0, 3.1-4.0, 4.1-5.0; values between
    /// the printed bounds (e.g. 1.05) belong to the upper band.
    pub fn of(rqi: f64) -> Option<Self> {
        if !(RQI_MIN..=RQI_MAX).contains(&rqi) {
            return None;
        }
        Some(if rqi <= 1.0 {
            RideQualityBand::VeryPoor
        } else if rqi <= 2.0 {
            RideQualityBand::Poor
        } else if rqi <= 3.0 {
            RideQualityBand::Fair
        } else if rqi <= 4.0 {
            RideQualityBand::Good
        } else {
            RideQualityBand::VeryGood
        })
    }
}

/// Result of a simple linear least-squares fit `y = slope * x + intercept`.
///
/// `r2` and `pearson_r` are `None` when the response has zero variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    slope: f64,
    intercept: f64,
    r2: Option<f64>,
    pearson_r: Option<f64>,
    n: usize,
}

impl RegressionFit {
    pub fn new(
        slope: f64,
        intercept: f64,
        r2: Option<f64>,
        pearson_r: Option<f64>,
        n: usize,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("fit needs n >= 2, got {n}")));
        }
        if !slope.is_finite() || !intercept.is_finite() {
            return Err(Error::invalid("fit coefficients must be finite"));
        }
        if r2.is_some() != pearson_r.is_some() {
            return Err(Error::invalid("r2 and pearson_r must be both defined or both undefined"));
        }
        if let (Some(r2), Some(r)) = (r2, pearson_r) {
            if !(-1.0 - 1e-12..=1.0 + 1e-12).contains(&r) {
                return Err(Error::invalid(format!("pearson r {r} outside [-1, 1]")));
            }
            if (r2 - r * r).abs() > 1e-6 {
                return Err(Error::invalid(format!("r2 {r2} inconsistent with r {r}")));
            }
        }
        Ok(RegressionFit {
            slope,
            intercept,
            r2: r2.map(|v| v.clamp(0.0, 1.0)),
            pearson_r: pearson_r.map(|v| v.clamp(-1.0, 1.0)),
            n,
        })
    }

    pub fn slope(&self) -> f64 {
        self.slope
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn r2(&self) -> Option<f64> {
        self.r2
    }

    pub fn pearson_r(&self) -> Option<f64> {
        self.pearson_r
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn predict(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Orders identifiers so that embedded integers compare numerically
/// ("S2" < "S10", "r9" < "r10").
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let mut ai = a.chars().peekable();
    let mut bi = b.chars().peekable();
    loop {
        match (ai.peek().copied(), bi.peek().copied()) {
            (None, None) => return a.cmp(b),
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) if x.is_ascii_digit() && y.is_ascii_digit() => {
                let na = take_digits(&mut ai);
                let nb = take_digits(&mut bi);
                let ta = na.trim_start_matches('0');
                let tb = nb.trim_start_matches('0');
                let ord = ta.len().cmp(&tb.len()).then_with(|| ta.cmp(tb));
                if ord != Ordering::Equal {
                    return ord;
                }
            }
            (Some(x), Some(y)) => {
                if x != y {
                    return x.cmp(&y);
                }
                ai.next();
                bi.next();
            }
        }
    }
}

fn take_digits(it: &mut std::iter::Peekable<std::str::Chars<'_>>) -> String {
    let mut s = String::new();
    while let Some(&c) = it.peek() {
        if !c.is_ascii_digit() {
            break;
        }
        s.push(c);
        it.next();
    }
    s
}
