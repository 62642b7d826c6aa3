//! Section assignment: projects GPS fixes onto a route polyline, interpolates
//! chainage for every accelerometer sample and buckets samples by section.

use std::collections::HashSet;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{csv_err, field, parse_f64, read_rows};
use crate::model::{LatLon, SectionDefinition, SectionRun, Trace};

/// Mean earth radius used for all great-circle distances.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

pub const ROUTE_HEADER: [&str; 2] = ["lat", "lon"];
pub const SECTIONS_HEADER: [&str; 3] = ["section_id", "start_chainage_m", "end_chainage_m"];
pub const SEGMENTS_HEADER: [&str; 5] = ["section_id", "run_id", "samples", "mean_speed_kph", "speed_gate_pass"];

/// Great-circle distance in meters.
pub fn haversine_m(a: LatLon, b: LatLon) -> f64 {
    haversine_raw((a.lat(), a.lon()), (b.lat(), b.lon()))
}

fn haversine_raw(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (p1, p2) = (a.0.to_radians(), b.0.to_radians());
    let dp = p2 - p1;
    let dl = (b.1 - a.1).to_radians();
    let h = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.clamp(0.0, 1.0).sqrt().asin()
}

/// Point reached by travelling `distance_m` from `start` on the initial
/// bearing `bearing_deg` (clockwise from north).
pub fn destination(start: LatLon, bearing_deg: f64, distance_m: f64) -> Result<LatLon> {
    let d = distance_m / EARTH_RADIUS_M;
    let th = bearing_deg.to_radians();
    let p1 = start.lat().to_radians();
    let l1 = start.lon().to_radians();
    let p2 = (p1.sin() * d.cos() + p1.cos() * d.sin() * th.cos()).asin();
    let l2 = l1 + (th.sin() * d.sin() * p1.cos()).atan2(d.cos() - p1.sin() * p2.sin());
    let lon = (l2.to_degrees() + 540.0).rem_euclid(360.0) - 180.0;
    LatLon::new(p2.to_degrees(), lon)
}

/// Position of a point along a route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Projection {
    /// Arc length from the route start to the foot of the perpendicular.
    pub chainage_m: f64,
    /// Distance from the point to the route.
    pub offset_m: f64,
}

/// A route polyline with precomputed cumulative arc length.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    vertices: Vec<LatLon>,
    cumulative_m: Vec<f64>,
}

impl Route {
    pub fn new(vertices: Vec<LatLon>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::invalid(format!(
                "degenerate route: need at least 2 vertices, got {}",
                vertices.len()
            )));
        }
        let mut cumulative_m = Vec::with_capacity(vertices.len());
        let mut acc = 0.0;
        cumulative_m.push(0.0);
        for w in vertices.windows(2) {
            acc += haversine_m(w[0], w[1]);
            cumulative_m.push(acc);
        }
        Ok(Route {
            vertices,
            cumulative_m,
        })
    }

    pub fn vertices(&self) -> &[LatLon] {
        &self.vertices
    }

    pub fn length_m(&self) -> f64 {
        *self.cumulative_m.last().expect("route has vertices")
    }

    /// Closest-point projection. Each segment is treated as straight in a
    /// local equirectangular frame; ties go to the lower chainage. The first
    /// and last segments extend past the route ends, so points before the
    /// start get a negative chainage and points past the end exceed
    /// [`Route::length_m`].
    pub fn project(&self, p: LatLon) -> Projection {
        let mut best: Option<Projection> = None;
        let last = self.vertices.len() - 2;
        for (i, w) in self.vertices.windows(2).enumerate() {
            let (a, b) = (w[0], w[1]);
            let lo = if i == 0 { f64::NEG_INFINITY } else { 0.0 };
            let hi = if i == last { f64::INFINITY } else { 1.0 };
            let t = segment_fraction(a, b, p).clamp(lo, hi);
            let foot = (
                a.lat() + t * (b.lat() - a.lat()),
                a.lon() + t * (b.lon() - a.lon()),
            );
            let offset = haversine_raw((p.lat(), p.lon()), foot);
            let seg_len = self.cumulative_m[i + 1] - self.cumulative_m[i];
            let cand = Projection {
                chainage_m: self.cumulative_m[i] + t * seg_len,
                offset_m: offset,
            };
            if best.is_none_or(|b| cand.offset_m < b.offset_m) {
                best = Some(cand);
            }
        }
        best.expect("route has at least one segment")
    }

    /// Point at the given chainage, clamped to the route ends.
    pub fn point_at(&self, chainage_m: f64) -> LatLon {
        let c = chainage_m.clamp(0.0, self.length_m());
        let i = self
            .cumulative_m
            .partition_point(|&x| x <= c)
            .clamp(1, self.vertices.len() - 1);
        let (c0, c1) = (self.cumulative_m[i - 1], self.cumulative_m[i]);
        let t = if c1 > c0 { (c - c0) / (c1 - c0) } else { 0.0 };
        lerp(self.vertices[i - 1], self.vertices[i], t)
    }

    /// The part of the route between two chainages, endpoints included.
    pub fn clip(&self, start_m: f64, end_m: f64) -> Vec<LatLon> {
        let mut out = vec![self.point_at(start_m)];
        for (v, &c) in self.vertices.iter().zip(&self.cumulative_m) {
            if c > start_m && c < end_m {
                out.push(*v);
            }
        }
        out.push(self.point_at(end_m));
        out
    }
}

fn segment_fraction(a: LatLon, b: LatLon, p: LatLon) -> f64 {
    let k = ((a.lat() + b.lat()) / 2.0).to_radians().cos();
    let (dx, dy) = ((b.lon() - a.lon()) * k, b.lat() - a.lat());
    let (px, py) = ((p.lon() - a.lon()) * k, p.lat() - a.lat());
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return 0.0;
    }
    (px * dx + py * dy) / len2
}

fn lerp(a: LatLon, b: LatLon, t: f64) -> LatLon {
    LatLon::new(
        a.lat() + t * (b.lat() - a.lat()),
        a.lon() + t * (b.lon() - a.lon()),
    )
    .expect("interpolation between valid coordinates is valid")
}

/// Chainage of `point` along `polyline`.
pub fn chainage_of(point: LatLon, polyline: &[LatLon]) -> Result<Projection> {
    Ok(Route::new(polyline.to_vec())?.project(point))
}

/// A route together with its sections. Sections have unique ids and
/// pairwise disjoint chainage intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionLayout {
    route: Route,
    sections: Vec<SectionDefinition>,
}

impl SectionLayout {
    /// Builds sections from `(id, start, end)` chainage triples.
    pub fn new(route: Route, intervals: Vec<(String, f64, f64)>) -> Result<Self> {
        let sections = intervals
            .into_iter()
            .map(|(id, s, e)| {
                let poly = if e > s { route.clip(s, e) } else { Vec::new() };
                SectionDefinition::new(id, poly, s, e)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_definitions(route, sections)
    }

    pub fn from_definitions(route: Route, sections: Vec<SectionDefinition>) -> Result<Self> {
        if sections.is_empty() {
            return Err(Error::invalid("empty sections list"));
        }
        let mut seen = HashSet::new();
        for s in &sections {
            if !seen.insert(s.section_id()) {
                return Err(Error::invalid(format!("duplicate section id {}", s.section_id())));
            }
        }
        let mut order: Vec<&SectionDefinition> = sections.iter().collect();
        order.sort_by(|a, b| a.start_chainage_m().total_cmp(&b.start_chainage_m()));
        for w in order.windows(2) {
            if w[1].start_chainage_m() < w[0].end_chainage_m() {
                return Err(Error::invalid(format!(
                    "sections {} and {} overlap",
                    w[0].section_id(),
                    w[1].section_id()
                )));
            }
        }
        Ok(SectionLayout { route, sections })
    }

    /// `n` equal consecutive sections covering the whole route, named
    /// `{prefix}1..{prefix}n`.
    pub fn equal_sections(route: Route, n: usize, prefix: &str) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("empty sections list"));
        }
        let step = route.length_m() / n as f64;
        let intervals = (0..n)
            .map(|i| (format!("{prefix}{}", i + 1), i as f64 * step, (i + 1) as f64 * step))
            .collect();
        Self::new(route, intervals)
    }

    pub fn route(&self) -> &Route {
        &self.route
    }

    pub fn sections(&self) -> &[SectionDefinition] {
        &self.sections
    }

    pub fn section_ids(&self) -> Vec<String> {
        self.sections.iter().map(|s| s.section_id().to_string()).collect()
    }
}

/// Accepted mean-speed band, inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedGate {
    pub min_kph: f64,
    pub max_kph: f64,
}

impl Default for SpeedGate {
    fn default() -> Self {
        SpeedGate {
            min_kph: 20.0,
            max_kph: 50.0,
        }
    }
}

impl SpeedGate {
    pub fn admits(&self, speed_kph: f64) -> bool {
        speed_kph >= self.min_kph && speed_kph <= self.max_kph
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentConfig {
    pub speed_gate: SpeedGate,
    /// GPS fixes farther than this from the route are reported as off-route.
    pub off_route_m: f64,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            speed_gate: SpeedGate::default(),
            off_route_m: 30.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OffRoute {
    pub t_ms: u64,
    pub offset_m: f64,
}

/// Section runs of one trace, one per section in layout order.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub runs: Vec<SectionRun>,
    /// Samples outside every section, including those outside GPS coverage.
    pub dropped: usize,
    /// Of `dropped`, samples before the first or after the last GPS fix.
    pub uncovered: usize,
    pub off_route: Vec<OffRoute>,
}

/// Assigns each accelerometer sample to the section containing its chainage.
///
/// Chainage and speed are interpolated linearly in time between the
/// bracketing GPS fixes. The speed gate marks section runs; it never removes
/// samples.
pub fn assign_sections(trace: &Trace, layout: &SectionLayout, config: &SegmentConfig) -> Result<Assignment> {
    let gps = trace.gps();
    if gps.is_empty() {
        return Err(Error::invalid(format!(
            "trace {} has no GPS samples",
            trace.run_id()
        )));
    }
    let route = layout.route();
    let fixes: Vec<(u64, Projection, f64)> = gps
        .iter()
        .map(|g| (g.t_ms(), route.project(g.position()), g.speed_kph()))
        .collect();
    let off_route = fixes
        .iter()
        .filter(|(_, p, _)| p.offset_m > config.off_route_m)
        .map(|(t, p, _)| OffRoute {
            t_ms: *t,
            offset_m: p.offset_m,
        })
        .collect();

    let n_sec = layout.sections().len();
    let mut buckets: Vec<Vec<_>> = vec![Vec::new(); n_sec];
    let mut speeds: Vec<f64> = vec![0.0; n_sec];
    let mut dropped = 0;
    let mut uncovered = 0;
    for a in trace.accel() {
        let Some((chainage, speed)) = interpolate(&fixes, a.t_ms()) else {
            dropped += 1;
            uncovered += 1;
            continue;
        };
        match layout.sections().iter().position(|s| s.contains(chainage)) {
            Some(k) => {
                buckets[k].push(*a);
                speeds[k] += speed;
            }
            None => dropped += 1,
        }
    }

    let runs = layout
        .sections()
        .iter()
        .zip(buckets)
        .zip(speeds)
        .map(|((sec, samples), speed_sum)| {
            let mean = (!samples.is_empty()).then(|| speed_sum / samples.len() as f64);
            let pass = mean.is_some_and(|m| config.speed_gate.admits(m));
            SectionRun::new(sec.section_id(), trace.run_id(), samples, mean, pass)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Assignment {
        runs,
        dropped,
        uncovered,
        off_route,
    })
}

fn interpolate(fixes: &[(u64, Projection, f64)], t: u64) -> Option<(f64, f64)> {
    let idx = fixes.partition_point(|(ft, _, _)| *ft < t);
    if idx < fixes.len() && fixes[idx].0 == t {
        return Some((fixes[idx].1.chainage_m, fixes[idx].2));
    }
    if idx == 0 || idx == fixes.len() {
        return None;
    }
    let (t0, p0, v0) = fixes[idx - 1];
    let (t1, p1, v1) = fixes[idx];
    let w = (t - t0) as f64 / (t1 - t0) as f64;
    Some((
        p0.chainage_m + w * (p1.chainage_m - p0.chainage_m),
        v0 + w * (v1 - v0),
    ))
}

pub fn parse_route_csv<R: Read>(reader: R) -> Result<Vec<LatLon>> {
    read_rows(reader, &ROUTE_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let row = i + 1;
            let lat = parse_f64(field(rec, 0, row, "lat")?, row, "lat")?;
            let lon = parse_f64(field(rec, 1, row, "lon")?, row, "lon")?;
            LatLon::new(lat, lon).map_err(|e| Error::parse(row, e.to_string()))
        })
        .collect()
}

pub fn parse_sections_csv<R: Read>(reader: R) -> Result<Vec<(String, f64, f64)>> {
    read_rows(reader, &SECTIONS_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let row = i + 1;
            let id = field(rec, 0, row, "section_id")?;
            if id.is_empty() {
                return Err(Error::parse(row, "empty section_id"));
            }
            let s = parse_f64(field(rec, 1, row, "start_chainage_m")?, row, "start_chainage_m")?;
            let e = parse_f64(field(rec, 2, row, "end_chainage_m")?, row, "end_chainage_m")?;
            if e <= s {
                return Err(Error::parse(row, "end_chainage_m must exceed start_chainage_m"));
            }
            Ok((id.to_string(), s, e))
        })
        .collect()
}

/// Loads a layout from a route polyline CSV and a sections CSV.
pub fn load_layout<R1: Read, R2: Read>(route: R1, sections: R2) -> Result<SectionLayout> {
    let route = Route::new(parse_route_csv(route)?)?;
    SectionLayout::new(route, parse_sections_csv(sections)?)
}

pub fn write_route_csv<W: Write>(writer: W, route: &Route) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(ROUTE_HEADER).map_err(csv_err)?;
    for v in route.vertices() {
        w.write_record([v.lat().to_string(), v.lon().to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Section-run summary: sample count, mean speed (empty when the run has
/// no samples) and the speed-gate verdict.
pub fn write_segments_csv<W: Write>(writer: W, runs: &[SectionRun]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SEGMENTS_HEADER).map_err(csv_err)?;
    for r in runs {
        w.write_record([
            r.section_id().to_string(),
            r.run_id().to_string(),
            r.samples().len().to_string(),
            r.mean_speed_kph().map(|v| v.to_string()).unwrap_or_default(),
            r.speed_gate_pass().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sections_csv<W: Write>(writer: W, layout: &SectionLayout) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SECTIONS_HEADER).map_err(csv_err)?;
    for s in layout.sections() {
        w.write_record([
            s.section_id().to_string(),
            s.start_chainage_m().to_string(),
            s.end_chainage_m().to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{AccelSample, GpsSample, STANDARD_GRAVITY};
    use proptest::prelude::*;

    fn ll(lat: f64, lon: f64) -> LatLon {
        LatLon::new(lat, lon).unwrap()
    }

    #[test]
    fn haversine_values() {
        let a = ll(35.7, 51.4);
        assert_eq!(haversine_m(a, a), 0.0);
        // one degree of arc on the equator: 6371000 * pi / 180
        let d = haversine_m(ll(0.0, 0.0), ll(0.0, 1.0));
        assert!((d - 111_194.93).abs() < 1.0, "{d}");
    }

    #[test]
    fn chainage_endpoints_and_midpoint() {
        let route = vec![ll(0.0, 0.0), ll(0.0, 0.01)];
        let len = haversine_m(route[0], route[1]);
        assert_eq!(chainage_of(route[0], &route).unwrap().chainage_m, 0.0);
        let end = chainage_of(route[1], &route).unwrap();
        assert!((end.chainage_m - len).abs() < 1e-9);
        let mid = chainage_of(ll(0.0, 0.005), &route).unwrap();
        assert!((mid.chainage_m / (len / 2.0) - 1.0).abs() < 1e-3);
        assert!(mid.offset_m < 1e-6);
        assert!(chainage_of(route[0], &route[..1]).is_err());
    }

    #[test]
    fn offset_reported_for_lateral_point() {
        let route = vec![ll(35.0, 51.0), ll(35.01, 51.0)];
        let p = destination(ll(35.005, 51.0), 90.0, 40.0).unwrap();
        let proj = chainage_of(p, &route).unwrap();
        assert!((proj.offset_m - 40.0).abs() < 0.1, "{}", proj.offset_m);
        let half = haversine_m(route[0], route[1]) / 2.0;
        assert!((proj.chainage_m - half).abs() < 0.5);
    }

    #[test]
    fn multi_vertex_route() {
        let a = ll(35.0, 51.0);
        let b = destination(a, 0.0, 300.0).unwrap();
        let c = destination(b, 90.0, 200.0).unwrap();
        let route = Route::new(vec![a, b, c]).unwrap();
        assert!((route.length_m() - 500.0).abs() < 0.01);
        let p = destination(b, 90.0, 100.0).unwrap();
        let proj = route.project(p);
        assert!((proj.chainage_m - 400.0).abs() < 0.05, "{}", proj.chainage_m);
        let clip = route.clip(250.0, 450.0);
        assert_eq!(clip.len(), 3);
        assert_eq!(clip[1], b);
    }

    fn straight_trace(run: &str, speed_kph: f64, seconds: u64, offset_m: f64) -> (Trace, SectionLayout) {
        let start = ll(35.7, 51.4);
        let v = speed_kph / 3.6;
        let end = destination(start, 0.0, 1000.0).unwrap();
        let route = Route::new(vec![start, end]).unwrap();
        let layout = SectionLayout::equal_sections(route, 5, "S").unwrap();
        let mut accel = Vec::new();
        let mut gps = Vec::new();
        for k in 0..=(seconds * 2) {
            let t = k * 500;
            accel.push(AccelSample::vertical(t, STANDARD_GRAVITY).unwrap());
            if k % 2 == 0 {
                let d = v * t as f64 / 1000.0 - offset_m;
                let p = if d >= 0.0 {
                    destination(start, 0.0, d).unwrap()
                } else {
                    destination(start, 180.0, -d).unwrap()
                };
                gps.push(GpsSample::new(t, p.lat(), p.lon(), speed_kph).unwrap());
            }
        }
        (Trace::new(run, accel, gps).unwrap(), layout)
    }

    #[test]
    fn equal_sections_get_equal_counts() {
        // 36 kph = 10 m/s → 100 s for 1000 m, 200 samples in route
        let (trace, layout) = straight_trace("1", 36.0, 99, 0.0);
        let a = assign_sections(&trace, &layout, &SegmentConfig::default()).unwrap();
        let n = trace.accel().len();
        assert_eq!(a.runs.len(), 5);
        for r in &a.runs {
            assert!((r.samples().len() as f64 - n as f64 / 5.0).abs() <= 1.0, "{}", r.samples().len());
            assert!(r.speed_gate_pass());
            assert!((r.mean_speed_kph().unwrap() - 36.0).abs() < 1e-9);
        }
        let total: usize = a.runs.iter().map(|r| r.samples().len()).sum();
        assert_eq!(total + a.dropped, n);
    }

    #[test]
    fn samples_before_first_section_are_dropped() {
        // vehicle stays 500..0 m south of the route start for the whole trace
        let (trace, layout) = straight_trace("1", 10.0, 60, 500.0);
        let a = assign_sections(&trace, &layout, &SegmentConfig::default()).unwrap();
        assert_eq!(a.runs.len(), 5);
        assert!(a.runs.iter().all(SectionRun::is_empty));
        assert_eq!(a.dropped, trace.accel().len());
    }

    #[test]
    fn fast_run_fails_gate_but_keeps_samples() {
        let (trace, layout) = straight_trace("1", 60.0, 59, 0.0);
        let a = assign_sections(&trace, &layout, &SegmentConfig::default()).unwrap();
        for r in &a.runs {
            assert!(!r.speed_gate_pass());
            assert!(!r.is_empty());
        }
    }

    #[test]
    fn errors_on_missing_inputs() {
        let (trace, layout) = straight_trace("1", 36.0, 10, 0.0);
        let no_gps = Trace::new("x", trace.accel().to_vec(), vec![]).unwrap();
        assert!(assign_sections(&no_gps, &layout, &SegmentConfig::default()).is_err());
        assert!(SectionLayout::new(layout.route().clone(), vec![]).is_err());
        assert!(SectionLayout::new(
            layout.route().clone(),
            vec![("a".into(), 0.0, 10.0), ("b".into(), 5.0, 20.0)]
        )
        .is_err());
    }

    #[test]
    fn layout_csv_round_trip() {
        let (_, layout) = straight_trace("1", 36.0, 1, 0.0);
        let mut r = Vec::new();
        let mut s = Vec::new();
        write_route_csv(&mut r, layout.route()).unwrap();
        write_sections_csv(&mut s, &layout).unwrap();
        let back = load_layout(r.as_slice(), s.as_slice()).unwrap();
        assert_eq!(back, layout);
    }

    fn arb_point() -> impl Strategy<Value = LatLon> {
        (-80.0f64..80.0, -179.0f64..179.0).prop_map(|(a, b)| ll(a, b))
    }

    proptest! {
        #[test]
        fn haversine_is_a_metric(a in arb_point(), b in arb_point(), c in arb_point()) {
            let ab = haversine_m(a, b);
            prop_assert!((ab - haversine_m(b, a)).abs() <= 1e-6);
            prop_assert!(ab >= 0.0);
            prop_assert!(haversine_m(a, c) <= ab + haversine_m(b, c) + 1e-6);
        }

        #[test]
        fn chainage_monotone_for_forward_motion(
            bearing in 0.0f64..360.0,
            turn in -60.0f64..60.0,
            steps in prop::collection::vec(0.0f64..20.0, 1..40),
        ) {
            let a = ll(35.7, 51.4);
            let b = destination(a, bearing, 400.0).unwrap();
            let c = destination(b, bearing + turn, 400.0).unwrap();
            let route = Route::new(vec![a, b, c]).unwrap();
            let mut d = 0.0;
            let mut prev = -1.0;
            for s in steps {
                d += s;
                let p = route.point_at(d);
                let ch = route.project(p).chainage_m;
                prop_assert!(ch >= prev - 1e-6, "chainage went back: {} < {}", ch, prev);
                prop_assert!((ch - d.min(route.length_m())).abs() < 0.5);
                prev = ch;
            }
        }

        #[test]
        fn assignment_partitions_samples(speed in 5.0f64..90.0, secs in 1u64..150, offset in -200.0f64..200.0) {
            let (trace, layout) = straight_trace("p", speed, secs, offset);
            let a = assign_sections(&trace, &layout, &SegmentConfig::default()).unwrap();
            let total: usize = a.runs.iter().map(|r| r.samples().len()).sum();
            prop_assert_eq!(total + a.dropped, trace.accel().len());
        }
    }
}
