//! Seeded generators for traces, rating panels and distress surveys with
//! known ground truth. Every generator is a pure function of its spec: the
//! same spec (including the seed) produces bit-identical output.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::model::{
    AccelSample, DistressRecord, DistressType, GpsSample, LatLon, RatingRecord, Severity, Trace,
    RQI_MAX, RQI_MIN, STANDARD_GRAVITY,
};
use crate::segment::{destination, Route, SectionLayout};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(sd: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, sd).map_err(|e| Error::invalid(format!("noise sd {sd}: {e}")))
}

/// Vehicle kinematics shared by the trace generators: a straight drive at
/// constant speed from `start` along `bearing_deg`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drive {
    pub start: LatLon,
    pub bearing_deg: f64,
    pub speed_kph: f64,
    /// A GPS fix is emitted on every n-th accelerometer sample (and on the
    /// last one).
    pub gps_every: usize,
}

impl Default for Drive {
    fn default() -> Self {
        Drive {
            start: LatLon::new(35.7, 51.4).expect("valid"),
            bearing_deg: 0.0,
            speed_kph: 36.0,
            gps_every: 2,
        }
    }
}

impl Drive {
    fn gps_at(&self, t_ms: u64, offset_m: f64) -> Result<GpsSample> {
        let d = self.speed_kph / 3.6 * t_ms as f64 / 1000.0 - offset_m;
        let p = if d >= 0.0 {
            destination(self.start, self.bearing_deg, d)?
        } else {
            destination(self.start, self.bearing_deg + 180.0, -d)?
        };
        GpsSample::new(t_ms, p.lat(), p.lon(), self.speed_kph)
    }

    fn build(&self, run_id: &str, azs: &[f64], cadence_ms: u64, gravity: f64, offset_m: f64) -> Result<Trace> {
        if self.gps_every == 0 {
            return Err(Error::invalid("gps_every must be at least 1"));
        }
        let mut accel = Vec::with_capacity(azs.len());
        let mut gps = Vec::with_capacity(azs.len() / self.gps_every + 1);
        for (k, &az) in azs.iter().enumerate() {
            let t = k as u64 * cadence_ms;
            accel.push(AccelSample::vertical(t, az)?);
            if k % self.gps_every == 0 || k + 1 == azs.len() {
                gps.push(self.gps_at(t, offset_m)?);
            }
        }
        Trace::with_gravity(run_id, accel, gps, gravity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SineTraceSpec {
    pub run_id: String,
    /// Peak vertical amplitude about gravity, m/s².
    pub amplitude: f64,
    pub freq_hz: f64,
    pub duration_s: f64,
    pub cadence_ms: u64,
    pub gravity: f64,
    /// Additive Gaussian noise on az; 0 for a pure sine.
    pub noise_sd: f64,
    pub seed: u64,
    pub drive: Drive,
}

impl Default for SineTraceSpec {
    fn default() -> Self {
        SineTraceSpec {
            run_id: "1".into(),
            amplitude: 0.6 * SQRT_2,
            freq_hz: 0.7,
            duration_s: 300.0,
            cadence_ms: 500,
            gravity: STANDARD_GRAVITY,
            noise_sd: 0.0,
            seed: 0,
            drive: Drive::default(),
        }
    }
}

impl SineTraceSpec {
    /// RMS of the generated signal about gravity, `sqrt(A²/2 + σ²)`.
    pub fn analytic_rms(&self) -> f64 {
        (self.amplitude.powi(2) / 2.0 + self.noise_sd.powi(2)).sqrt()
    }
}

/// Minimum number of signal periods a sine trace must span.
pub const MIN_PERIODS: f64 = 10.0;

/// `az = g + A·sin(2πft + φ) + ε` with a seeded phase φ and noise ε.
pub fn gen_sine_trace(spec: &SineTraceSpec) -> Result<Trace> {
    if spec.cadence_ms == 0 {
        return Err(Error::invalid("cadence must be positive"));
    }
    let cadence_s = spec.cadence_ms as f64 / 1000.0;
    if !(spec.freq_hz > 0.0 && spec.freq_hz < 0.5 / cadence_s) {
        return Err(Error::invalid(format!(
            "aliasing: frequency {} Hz must be in (0, {}) Hz for {} ms cadence",
            spec.freq_hz,
            0.5 / cadence_s,
            spec.cadence_ms
        )));
    }
    if spec.duration_s * spec.freq_hz < MIN_PERIODS {
        return Err(Error::invalid(format!(
            "duration {} s spans fewer than {MIN_PERIODS} periods",
            spec.duration_s
        )));
    }
    if !(spec.amplitude.is_finite() && spec.amplitude >= 0.0) {
        return Err(Error::invalid("amplitude must be non-negative"));
    }
    let mut rng = rng(spec.seed);
    let phase = rng.random::<f64>() * 2.0 * PI;
    let noise = normal(spec.noise_sd)?;
    let n = (spec.duration_s * 1000.0 / spec.cadence_ms as f64).floor() as usize + 1;
    let azs: Vec<f64> = (0..n)
        .map(|k| {
            let t = k as f64 * cadence_s;
            let e = if spec.noise_sd > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            spec.gravity + spec.amplitude * (2.0 * PI * spec.freq_hz * t + phase).sin() + e
        })
        .collect();
    spec.drive.build(&spec.run_id, &azs, spec.cadence_ms, spec.gravity, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoZoneSpec {
    pub run_id: String,
    pub smooth_rms: f64,
    pub rough_rms: f64,
    /// Smooth zone `[start, end)` in seconds.
    pub smooth_zone_s: (f64, f64),
    pub rough_zone_s: (f64, f64),
    /// RMS outside both zones; defaults to the midpoint of the two levels.
    pub background_rms: Option<f64>,
    pub duration_s: f64,
    pub cadence_ms: u64,
    pub gravity: f64,
    pub seed: u64,
    pub drive: Drive,
}

impl Default for TwoZoneSpec {
    fn default() -> Self {
        TwoZoneSpec {
            run_id: "1".into(),
            smooth_rms: 0.2,
            rough_rms: 1.0,
            smooth_zone_s: (10.0, 70.0),
            rough_zone_s: (120.0, 200.0),
            background_rms: None,
            duration_s: 230.0,
            cadence_ms: 500,
            gravity: STANDARD_GRAVITY,
            seed: 0,
            drive: Drive::default(),
        }
    }
}

/// A trace with a smooth and a rough stretch.
///
/// Each sample deviates from gravity by exactly ± the zone's RMS, with a
/// seeded random sign, so any window inside a zone has exactly that zone's
/// RMS.
pub fn gen_two_zone_route(spec: &TwoZoneSpec) -> Result<Trace> {
    if !(spec.smooth_rms >= 0.0 && spec.smooth_rms < spec.rough_rms) {
        return Err(Error::invalid(format!(
            "smooth rms {} must be below rough rms {}",
            spec.smooth_rms, spec.rough_rms
        )));
    }
    let (s0, s1) = spec.smooth_zone_s;
    let (r0, r1) = spec.rough_zone_s;
    if !(s0 < s1 && r0 < r1 && s0 >= 0.0 && r0 >= 0.0) {
        return Err(Error::invalid("zones must be non-empty intervals"));
    }
    if s0 < r1 && r0 < s1 {
        return Err(Error::invalid("overlapping zones"));
    }
    if s1.max(r1) > spec.duration_s {
        return Err(Error::invalid("zones extend past the trace duration"));
    }
    if spec.cadence_ms == 0 {
        return Err(Error::invalid("cadence must be positive"));
    }
    let background = spec.background_rms.unwrap_or((spec.smooth_rms + spec.rough_rms) / 2.0);
    let mut rng = rng(spec.seed);
    let n = (spec.duration_s * 1000.0 / spec.cadence_ms as f64).floor() as usize + 1;
    let azs: Vec<f64> = (0..n)
        .map(|k| {
            let t = k as f64 * spec.cadence_ms as f64 / 1000.0;
            let level = if t >= s0 && t < s1 {
                spec.smooth_rms
            } else if t >= r0 && t < r1 {
                spec.rough_rms
            } else {
                background
            };
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            spec.gravity + sign * level
        })
        .collect();
    spec.drive.build(&spec.run_id, &azs, spec.cadence_ms, spec.gravity, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PanelSpec {
    /// `(section_id, true RQI)`.
    pub sections: Vec<(String, f64)>,
    pub raters: usize,
    pub runs: usize,
    pub noise_sd: f64,
    /// Additive bias per rater (`r1` first); missing entries are zero.
    pub biases: Vec<f64>,
    pub seed: u64,
}

/// Ratings `clamp(true + bias + ε, 0, 5)` for every rater × section × run.
/// Raters are `r1..rN`, runs `1..M`.
pub fn gen_panel(spec: &PanelSpec) -> Result<Vec<RatingRecord>> {
    for (id, q) in &spec.sections {
        if !(RQI_MIN..=RQI_MAX).contains(q) {
            return Err(Error::invalid(format!("true RQI {q} of {id} outside [0, 5]")));
        }
    }
    let noise = normal(spec.noise_sd)?;
    let mut rng = rng(spec.seed);
    let mut out = Vec::with_capacity(spec.raters * spec.runs * spec.sections.len());
    for run in 1..=spec.runs {
        for (sid, truth) in &spec.sections {
            for r in 0..spec.raters {
                let bias = spec.biases.get(r).copied().unwrap_or(0.0);
                let e = if spec.noise_sd > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                let q = (truth + bias + e).clamp(RQI_MIN, RQI_MAX);
                out.push(RatingRecord::new(format!("r{}", r + 1), sid.clone(), run.to_string(), q)?);
            }
        }
    }
    Ok(out)
}

/// Random distress survey: up to `max_per_section` records per section.
pub fn gen_distress(sections: &[String], max_per_section: usize, seed: u64) -> Result<Vec<DistressRecord>> {
    let mut rng = rng(seed);
    let mut out = Vec::new();
    for s in sections {
        let n = rng.random_range(0..=max_per_section);
        for _ in 0..n {
            let ty = DistressType::ALL[rng.random_range(0..DistressType::ALL.len())];
            let sev = Severity::ALL[rng.random_range(0..Severity::ALL.len())];
            let density: f64 = if ty.is_linear() {
                rng.random_range(1.0..40.0)
            } else {
                rng.random_range(0.2..10.0)
            };
            out.push(DistressRecord::new(s.clone(), ty, sev, (density * 100.0).round() / 100.0)?);
        }
    }
    Ok(out)
}

/// A multi-run survey of one route with per-section roughness.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSpec {
    /// Target RMS (about gravity) of each consecutive section.
    pub section_rms: Vec<f64>,
    pub section_length_m: f64,
    pub runs: usize,
    /// Distance driven before the first and after the last section.
    pub lead_m: f64,
    pub speed_kph: f64,
    /// Per-run speed jitter, uniform ± this many kph.
    pub speed_jitter_kph: f64,
    pub cadence_ms: u64,
    pub freq_hz: f64,
    /// Gaussian part of the signal; must be below every section RMS.
    pub noise_sd: f64,
    pub gravity: f64,
    pub raters: usize,
    pub rating_noise_sd: f64,
    pub rater_biases: Vec<f64>,
    /// True RQI = clamp(rqi_intercept + rqi_slope · RMS, 0, 5).
    pub rqi_intercept: f64,
    pub rqi_slope: f64,
    pub iri_noise_sd: f64,
    pub seed: u64,
    pub drive: Drive,
}

impl Default for CampaignSpec {
    fn default() -> Self {
        CampaignSpec {
            section_rms: vec![0.6, 0.75, 0.9, 1.05, 1.2],
            section_length_m: 200.0,
            runs: 5,
            lead_m: 50.0,
            speed_kph: 36.0,
            speed_jitter_kph: 2.0,
            cadence_ms: 500,
            freq_hz: 0.7,
            noise_sd: 0.25,
            gravity: STANDARD_GRAVITY,
            raters: 11,
            rating_noise_sd: 0.3,
            rater_biases: Vec::new(),
            rqi_intercept: 6.0,
            rqi_slope: -3.8,
            iri_noise_sd: 0.1,
            seed: 2015,
            drive: Drive::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Campaign {
    pub layout: SectionLayout,
    pub traces: Vec<Trace>,
    pub ratings: Vec<RatingRecord>,
    pub distress: Vec<DistressRecord>,
    /// Reference IRI per section.
    pub iri: BTreeMap<String, f64>,
    /// `(section_id, target RMS)`.
    pub truth: Vec<(String, f64)>,
}

pub fn gen_campaign(spec: &CampaignSpec) -> Result<Campaign> {
    if spec.section_rms.is_empty() {
        return Err(Error::invalid("campaign needs at least one section"));
    }
    if let Some(r) = spec.section_rms.iter().find(|&&r| r.is_nan() || r <= spec.noise_sd) {
        return Err(Error::invalid(format!(
            "section rms {r} must exceed the noise sd {}",
            spec.noise_sd
        )));
    }
    if spec.runs == 0 || spec.cadence_ms == 0 {
        return Err(Error::invalid("campaign needs runs and a positive cadence"));
    }
    let cadence_s = spec.cadence_ms as f64 / 1000.0;
    if !(spec.freq_hz > 0.0 && spec.freq_hz < 0.5 / cadence_s) {
        return Err(Error::invalid(format!("aliasing: frequency {} Hz", spec.freq_hz)));
    }
    let n_sec = spec.section_rms.len();
    let route_len = spec.section_length_m * n_sec as f64;
    let end = destination(spec.drive.start, spec.drive.bearing_deg, route_len)?;
    let route = Route::new(vec![spec.drive.start, end])?;
    let layout = SectionLayout::equal_sections(route, n_sec, "S")?;
    let ids = layout.section_ids();

    let mut master = rng(spec.seed);
    let noise = normal(spec.noise_sd)?;
    let mut traces = Vec::with_capacity(spec.runs);
    for run in 1..=spec.runs {
        let mut rng = rng(master.random());
        let jitter = if spec.speed_jitter_kph > 0.0 {
            rng.random_range(-spec.speed_jitter_kph..=spec.speed_jitter_kph)
        } else {
            0.0
        };
        let speed = spec.speed_kph + jitter;
        let v = speed / 3.6;
        let total_m = route_len + 2.0 * spec.lead_m;
        let n = (total_m / v / cadence_s).floor() as usize + 1;
        let phase = rng.random::<f64>() * 2.0 * PI;
        let azs: Vec<f64> = (0..n)
            .map(|k| {
                let t = k as f64 * cadence_s;
                let chainage = v * t - spec.lead_m;
                let level = if chainage < 0.0 || chainage >= route_len {
                    spec.section_rms[0].min(spec.section_rms[n_sec - 1])
                } else {
                    spec.section_rms[((chainage / spec.section_length_m) as usize).min(n_sec - 1)]
                };
                let amp = (2.0 * (level * level - spec.noise_sd * spec.noise_sd)).sqrt();
                let e = if spec.noise_sd > 0.0 { noise.sample(&mut rng) } else { 0.0 };
                spec.gravity + amp * (2.0 * PI * spec.freq_hz * t + phase).sin() + e
            })
            .collect();
        let drive = Drive {
            speed_kph: speed,
            ..spec.drive
        };
        traces.push(drive.build(&run.to_string(), &azs, spec.cadence_ms, spec.gravity, spec.lead_m)?);
    }

    let truth: Vec<(String, f64)> = ids.iter().cloned().zip(spec.section_rms.iter().copied()).collect();
    let ratings = gen_panel(&PanelSpec {
        sections: truth
            .iter()
            .map(|(s, r)| (s.clone(), (spec.rqi_intercept + spec.rqi_slope * r).clamp(RQI_MIN, RQI_MAX)))
            .collect(),
        raters: spec.raters,
        runs: spec.runs,
        noise_sd: spec.rating_noise_sd,
        biases: spec.rater_biases.clone(),
        seed: master.random(),
    })?;
    let distress = gen_distress(&ids, 4, master.random())?;
    let iri_noise = normal(spec.iri_noise_sd)?;
    let iri = truth
        .iter()
        .map(|(s, r)| {
            let e = if spec.iri_noise_sd > 0.0 { iri_noise.sample(&mut master) } else { 0.0 };
            (s.clone(), (4.19 * r + 1.73 + e).max(0.0))
        })
        .collect();
    Ok(Campaign {
        layout,
        traces,
        ratings,
        distress,
        iri,
        truth,
    })
}
