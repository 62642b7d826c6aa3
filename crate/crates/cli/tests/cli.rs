use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pavecheck::ingest::write_trace_csv;
use pavecheck::synth::{gen_sine_trace, SineTraceSpec};
use pavecheck::{AccelSample, GpsSample, Trace};
use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pavecheck"))
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn pavecheck")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_schema(schema: &str, path: &Path) {
    let schema_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas").join(schema);
    let schema = read_json(&schema_path);
    let validator = jsonschema::validator_for(&schema).unwrap();
    let instance = read_json(path);
    let errors: Vec<String> = validator.iter_errors(&instance).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{} fails {}: {errors:?}", path.display(), schema_path.display());
}

fn svg(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    let doc = roxmltree::Document::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(doc.root_element().tag_name().name(), "svg");
    text
}

fn series_count(svg: &str) -> usize {
    svg.matches(r#"class="series""#).count()
}

fn write_trace(path: &Path, t: &Trace) {
    let mut buf = Vec::new();
    write_trace_csv(&mut buf, t).unwrap();
    fs::write(path, buf).unwrap();
}

/// Synthetic 5-section × 5-run survey under `dir/in`.
fn survey(dir: &Path, extra: &[&str]) -> PathBuf {
    let mut args = vec!["synth", "--out-dir", "in", "--seed", "11"];
    args.extend_from_slice(extra);
    let o = run(dir, &args);
    assert!(o.status.success(), "{}", stderr(&o));
    dir.join("in")
}

fn traces(input: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(input.join("traces"))
        .unwrap()
        .map(|e| e.unwrap().path().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

fn files_under(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn validate_clean_trace() {
    let dir = TempDir::new().unwrap();
    let t = gen_sine_trace(&SineTraceSpec::default()).unwrap();
    write_trace(&dir.path().join("1.csv"), &t);
    let o = run(dir.path(), &["validate", "1.csv", "--out-dir", "out"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let path = dir.path().join("out/validation.json");
    assert_schema("validation.schema.json", &path);
    let v = read_json(&path);
    assert_eq!(v["ok"], true);
    assert_eq!(v["reports"][0]["run_id"], "1");
}

#[test]
fn validate_reports_gap() {
    let dir = TempDir::new().unwrap();
    let mut accel = Vec::new();
    let mut gps = Vec::new();
    for k in 0..40u64 {
        let t = if k < 20 { k * 500 } else { k * 500 + 5000 };
        accel.push(AccelSample::new(t, 0.0, 0.0, 9.9).unwrap());
        gps.push(GpsSample::new(t, 35.7, 51.4 + 1e-5 * k as f64, 30.0).unwrap());
    }
    write_trace(&dir.path().join("gap.csv"), &Trace::new("gap", accel, gps).unwrap());
    let o = run(dir.path(), &["validate", "gap.csv", "--out-dir", "out"]);
    assert_eq!(o.status.code(), Some(1));
    let path = dir.path().join("out/validation.json");
    assert_schema("validation.schema.json", &path);
    let v = read_json(&path);
    assert_eq!(v["ok"], false);
    let msg = v["reports"][0]["errors"][0]["message"].as_str().unwrap();
    assert!(msg.contains("gap of 5500 ms"), "{msg}");
    assert_eq!(v["reports"][0]["errors"][0]["row"], 21);
}

#[test]
fn validate_reports_malformed_row() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("bad.csv"),
        "t_ms,ax,ay,az,lat,lon,speed_kph\n0,0,0,9.8,35.7,51.4,30\n500,0,0,abc,,,\n",
    )
    .unwrap();
    let o = run(dir.path(), &["validate", "bad.csv", "--out-dir", "out"]);
    assert_eq!(o.status.code(), Some(1));
    let v = read_json(&dir.path().join("out/validation.json"));
    assert_eq!(v["reports"][0]["errors"][0]["row"], 2);
}

#[test]
fn missing_file_exits_2() {
    let dir = TempDir::new().unwrap();
    let o = run(dir.path(), &["validate", "nope.csv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("file not found"));
    let o = run(dir.path(), &["qa", "--ratings", "nope.csv"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(dir.path(), &["--config", "nope.toml", "qa", "--ratings", "nope.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn rms_table_and_plot() {
    let dir = TempDir::new().unwrap();
    let input = survey(dir.path(), &[]);
    let mut args = vec!["rms", "--out-dir", "out", "--route", "in/route.csv", "--sections", "in/sections.csv"];
    let ts = traces(&input);
    args.extend(ts.iter().map(String::as_str));
    let o = run(dir.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/rms.csv")).unwrap();
    assert_eq!(csv.lines().count(), 26);
    assert!(csv.starts_with("section_id,run_id,rms_mps2,iri_est_mm_per_m\n"));
    assert_eq!(series_count(&svg(&dir.path().join("out/rms.svg"))), 5);

    let o = run(dir.path(), &["rms", "--out-dir", "one", "--route", "in/route.csv", "--sections", "in/sections.csv", &ts[0]]);
    assert!(o.status.success());
    assert_eq!(series_count(&svg(&dir.path().join("one/rms.svg"))), 1);
}

#[test]
fn empty_section_is_reported_as_skip() {
    let dir = TempDir::new().unwrap();
    let input = survey(dir.path(), &["--runs", "1"]);
    // a sliver section no sample can land in
    fs::write(
        input.join("sliver.csv"),
        "section_id,start_chainage_m,end_chainage_m\nA,0,200\nB,200,200.001\nC,200.001,400\n",
    )
    .unwrap();
    let ts = traces(&input);
    let o = run(dir.path(), &["rms", "--out-dir", "out", "--route", "in/route.csv", "--sections", "in/sliver.csv", &ts[0]]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("skip: section B run 1: no samples"), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("out/rms.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn segment_and_pdi() {
    let dir = TempDir::new().unwrap();
    let input = survey(dir.path(), &["--runs", "2"]);
    let ts = traces(&input);
    let o = run(
        dir.path(),
        &["segment", "--out-dir", "out", "--route", "in/route.csv", "--sections", "in/sections.csv", &ts[0], &ts[1]],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let seg = fs::read_to_string(dir.path().join("out/segments.csv")).unwrap();
    assert_eq!(seg.lines().count(), 11);
    assert!(seg.lines().skip(1).all(|l| l.ends_with(",true")));

    fs::write(
        dir.path().join("d.csv"),
        "section_id,distress_type,severity,density\nS2,pothole,high,2\nS2,patching,low,4\n",
    )
    .unwrap();
    let o = run(dir.path(), &["pdi", "--out-dir", "out", "--distress", "d.csv", "--sections", "in/sections.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let pdi = fs::read_to_string(dir.path().join("out/pdi.csv")).unwrap();
    assert_eq!(pdi, "section_id,pdi\nS1,0\nS2,22\nS3,0\nS4,0\nS5,0\n");

    fs::write(dir.path().join("w.toml"), "[weights]\npothole = 5.0\n").unwrap();
    let o = run(dir.path(), &["--config", "w.toml", "pdi", "--out-dir", "cfg", "--distress", "d.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(dir.path().join("cfg/pdi.csv")).unwrap(), "section_id,pdi\nS2,34\n");
}

#[test]
fn qa_on_published_rater_means() {
    let dir = TempDir::new().unwrap();
    let means = [3.71, 3.23, 2.98, 2.43, 2.66, 2.43, 3.71, 3.23, 3.43, 4.5, 3.95];
    let mut csv = String::from("rater_id,section_id,run_id,rqi\n");
    for (i, m) in means.iter().enumerate() {
        csv += &format!("{},S1,1,{}\n{},S2,1,{}\n", i + 1, m + 0.05, i + 1, m - 0.05);
    }
    fs::write(dir.path().join("r.csv"), csv).unwrap();
    let o = run(dir.path(), &["qa", "--out-dir", "out", "--ratings", "r.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let path = dir.path().join("out/qa.json");
    assert_schema("qa.schema.json", &path);
    let q = read_json(&path);
    let gm = q["delta_r"]["grand_mean"].as_f64().unwrap();
    assert!((gm - 3.30).abs() < 0.01, "{gm}");
    let r10 = &q["delta_r"]["rows"].as_array().unwrap()[9];
    assert_eq!(r10["rater_id"], "10");
    assert_eq!(r10["rank"], 1);
}

#[test]
fn qa_flags_injected_bias_only() {
    let dir = TempDir::new().unwrap();
    survey(dir.path(), &["--rater-bias", "r3=-2"]);
    let o = run(dir.path(), &["qa", "--out-dir", "out", "--ratings", "in/ratings.csv"]);
    assert!(o.status.success());
    let q = read_json(&dir.path().join("out/qa.json"));
    assert_eq!(q["verdicts"]["bias_flagged_raters"], serde_json::json!(["r3"]));

    let clean = TempDir::new().unwrap();
    survey(clean.path(), &[]);
    let o = run(clean.path(), &["qa", "--out-dir", "out", "--ratings", "in/ratings.csv"]);
    assert!(o.status.success());
    let path = clean.path().join("out/qa.json");
    assert_schema("qa.schema.json", &path);
    let q = read_json(&path);
    assert_eq!(q["verdicts"]["bias_flagged_raters"], serde_json::json!([]));
}

fn section_csv(header: &str, values: &[(String, f64)]) -> String {
    let mut s = format!("{header}\n");
    for (k, v) in values {
        s += &format!("{k},{v}\n");
    }
    s
}

#[test]
fn fit_annotates_exact_line() {
    let dir = TempDir::new().unwrap();
    let rms: Vec<f64> = vec![0.5, 0.7, 0.9, 1.1, 1.3];
    let mut rms_csv = String::from("section_id,run_id,rms_mps2,iri_est_mm_per_m\n");
    for (i, r) in rms.iter().enumerate() {
        rms_csv += &format!("S{},1,{r},{}\n", i + 1, 4.19 * r + 1.73);
    }
    fs::write(dir.path().join("rms.csv"), rms_csv).unwrap();
    let iri: Vec<(String, f64)> = rms.iter().enumerate().map(|(i, r)| (format!("S{}", i + 1), 4.19 * r + 1.73)).collect();
    fs::write(dir.path().join("iri.csv"), section_csv("section_id,iri_mm_per_m", &iri)).unwrap();
    // symmetric about the mean RMS, so uncorrelated with it
    let pdi: Vec<(String, f64)> = [2.0, 1.0, 0.0, 1.0, 2.0].iter().enumerate().map(|(i, v)| (format!("S{}", i + 1), *v)).collect();
    fs::write(dir.path().join("pdi.csv"), section_csv("section_id,pdi", &pdi)).unwrap();

    let o = run(dir.path(), &["fit", "--out-dir", "out", "--rms", "rms.csv", "--iri", "iri.csv", "--pdi", "pdi.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let path = dir.path().join("out/fit.json");
    assert_schema("fit.schema.json", &path);
    let f = read_json(&path);
    assert!((f["rms_iri"]["slope"].as_f64().unwrap() - 4.19).abs() < 1e-9);
    assert!(f["rms_rqi"].is_null());
    let iri_svg = svg(&dir.path().join("out/fit_rms_iri.svg"));
    assert!(iri_svg.contains("IRI = 4.19·RMS + 1.73"));
    assert!(iri_svg.contains("r2 = 1.000"));
    assert!(svg(&dir.path().join("out/fit_rms_pdi.svg")).contains("r2 = 0.000"));
    assert!(!dir.path().join("out/fit_rms_rqi.svg").exists());
}

#[test]
fn fit_needs_three_sections() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("rms.csv"),
        "section_id,run_id,rms_mps2,iri_est_mm_per_m\nS1,1,0.5,3.825\nS2,1,0.7,4.663\n",
    )
    .unwrap();
    fs::write(dir.path().join("iri.csv"), "section_id,iri_mm_per_m\nS1,3.8\nS2,4.7\n").unwrap();
    let o = run(dir.path(), &["fit", "--out-dir", "out", "--rms", "rms.csv", "--iri", "iri.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("at least 3"), "{}", stderr(&o));
}

fn report_args<'a>(ts: &'a [String], out: &'a str) -> Vec<&'a str> {
    let mut args = vec![
        "report",
        "--out-dir",
        out,
        "--route",
        "in/route.csv",
        "--sections",
        "in/sections.csv",
        "--ratings",
        "in/ratings.csv",
        "--distress",
        "in/distress.csv",
        "--iri",
        "in/iri.csv",
    ];
    args.extend(ts.iter().map(String::as_str));
    args
}

#[test]
fn report_bundle_is_valid_and_deterministic() {
    let dir = TempDir::new().unwrap();
    let input = survey(dir.path(), &[]);
    let ts = traces(&input);
    let o = run(dir.path(), &report_args(&ts, "a"));
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(dir.path(), &report_args(&ts, "b"));
    assert!(o.status.success());

    let a = files_under(&dir.path().join("a"));
    let names: Vec<String> = a.keys().map(|p| p.to_string_lossy().into_owned()).collect();
    assert_eq!(
        names,
        [
            "fit.json",
            "fit_rms_iri.svg",
            "fit_rms_pdi.svg",
            "fit_rms_rqi.svg",
            "pdi.csv",
            "qa.json",
            "rms.csv",
            "rms.svg",
            "segments.csv",
            "validation.json"
        ]
    );
    assert_eq!(a, files_under(&dir.path().join("b")));

    let out = dir.path().join("a");
    assert_schema("validation.schema.json", &out.join("validation.json"));
    assert_schema("qa.schema.json", &out.join("qa.json"));
    assert_schema("fit.schema.json", &out.join("fit.json"));
    for name in ["rms.svg", "fit_rms_iri.svg", "fit_rms_rqi.svg", "fit_rms_pdi.svg"] {
        svg(&out.join(name));
    }
    let q = read_json(&out.join("qa.json"));
    assert_eq!(q["verdicts"]["run_effect"], false);

    // only the input and the two output directories exist in the work dir
    let mut top: Vec<String> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    top.sort();
    assert_eq!(top, ["a", "b", "in"]);
}

#[test]
fn synth_is_seeded() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    survey(a.path(), &[]);
    survey(b.path(), &[]);
    assert_eq!(files_under(a.path()), files_under(b.path()));
    let c = TempDir::new().unwrap();
    let o = run(c.path(), &["synth", "--out-dir", "in", "--seed", "12"]);
    assert!(o.status.success());
    assert_ne!(files_under(a.path()), files_under(c.path()));
}

#[test]
fn per_run_fit_and_mean_subtraction() {
    let dir = TempDir::new().unwrap();
    let input = survey(dir.path(), &[]);
    let ts = traces(&input);
    let mut args = report_args(&ts, "pr");
    args.push("--per-run-fit");
    let o = run(dir.path(), &args);
    assert!(o.status.success(), "{}", stderr(&o));
    let f = read_json(&dir.path().join("pr/fit.json"));
    assert_eq!(f["per_run"], true);
    assert_eq!(f["rms_rqi"]["n"], 25);

    let mut args = vec!["rms", "--out-dir", "g", "--route", "in/route.csv", "--sections", "in/sections.csv", &ts[0]];
    assert!(run(dir.path(), &args).status.success());
    args[2] = "m";
    args.push("--mean-subtraction");
    assert!(run(dir.path(), &args).status.success());
    let g = fs::read_to_string(dir.path().join("g/rms.csv")).unwrap();
    let m = fs::read_to_string(dir.path().join("m/rms.csv")).unwrap();
    assert_ne!(g, m);
    assert_eq!(g.lines().count(), m.lines().count());
}
