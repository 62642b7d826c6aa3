use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use pavecheck::correlation::{correlate_indices, parse_iri_csv, parse_pdi_csv, write_iri_csv, CorrelationInputs, CorrelationReport, Pairing};
use pavecheck::distress::{compute_pdi, write_pdi_csv};
use pavecheck::ingest::{
    parse_distress_csv, parse_rating_csv, parse_trace_with_gravity, validate_trace, write_distress_csv, write_rating_csv,
    write_trace_csv, Finding, ValidationReport,
};
use pavecheck::qa::{build_report, QaReport};
use pavecheck::roughness::{parse_rms_csv, section_rms_table, write_rms_csv, RmsRow, RmsTable};
use pavecheck::segment::{
    assign_sections, load_layout, parse_sections_csv, write_route_csv, write_sections_csv, write_segments_csv, Assignment,
    SectionLayout,
};
use pavecheck::synth::{gen_campaign, CampaignSpec};
use pavecheck::{natural_cmp, Config, RatingRecord, Trace};

use crate::plot;
use crate::{Cli, Command, LayoutArgs, SynthArgs};

#[derive(Debug)]
pub struct MissingFile(pub PathBuf);

impl fmt::Display for MissingFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "file not found: {}", self.0.display())
    }
}

impl std::error::Error for MissingFile {}

fn require(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(MissingFile(path.to_path_buf()).into())
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    require(path)?;
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(BufReader::new(f))
}

/// Reads a file with `parse`, naming the file in any error.
fn load<T>(path: &Path, parse: impl FnOnce(BufReader<File>) -> pavecheck::Result<T>) -> Result<T> {
    let r = open(path)?;
    parse(r).with_context(|| path.display().to_string())
}

struct Ctx {
    config: Config,
    out_dir: PathBuf,
    seed: Option<u64>,
    per_run_fit: bool,
}

impl Ctx {
    fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out_dir.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn write_csv(&self, name: &str, f: impl FnOnce(&mut Vec<u8>) -> pavecheck::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    let mut config = match &cli.config {
        Some(p) => {
            require(p)?;
            Config::load(p).with_context(|| p.display().to_string())?
        }
        None => Config::default(),
    };
    config.mean_subtraction |= cli.mean_subtraction;
    let ctx = Ctx {
        config,
        out_dir: cli.out_dir,
        seed: cli.seed,
        per_run_fit: cli.per_run_fit,
    };
    match cli.command {
        Command::Validate { traces } => validate(&ctx, &traces),
        Command::Segment { layout, traces } => segment(&ctx, &layout, &traces),
        Command::Rms { layout, traces } => rms(&ctx, &layout, &traces),
        Command::Pdi { distress, sections } => pdi(&ctx, &distress, sections.as_deref()),
        Command::Qa { ratings, rms } => qa(&ctx, &ratings, rms.as_deref()),
        Command::Fit { rms, iri, ratings, pdi } => fit(&ctx, &rms, iri.as_deref(), ratings.as_deref(), pdi.as_deref()),
        Command::Synth(args) => synth(&ctx, &args),
        Command::Report {
            layout,
            ratings,
            distress,
            iri,
            traces,
        } => report(&ctx, &layout, &ratings, distress.as_deref(), iri.as_deref(), &traces),
    }
}

fn code(clean: bool) -> ExitCode {
    if clean {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

struct Loaded {
    path: PathBuf,
    run_id: String,
    trace: pavecheck::Result<Trace>,
}

/// Parses traces concurrently; the run id is the file stem. Results are in
/// run-id order.
fn load_traces(ctx: &Ctx, paths: &[PathBuf]) -> Result<Vec<Loaded>> {
    let mut seen = HashSet::new();
    for p in paths {
        require(p)?;
        let id = run_id_of(p)?;
        if !seen.insert(id.clone()) {
            bail!("two traces share run id {id:?}");
        }
    }
    let gravity = ctx.config.gravity_mps2;
    let mut loaded: Vec<Loaded> = paths
        .par_iter()
        .map(|p| {
            let run_id = run_id_of(p).expect("checked above");
            let trace = File::open(p)
                .map_err(pavecheck::Error::from)
                .and_then(|f| parse_trace_with_gravity(BufReader::new(f), &run_id, gravity));
            Loaded {
                path: p.clone(),
                run_id,
                trace,
            }
        })
        .collect();
    loaded.sort_by(|a, b| natural_cmp(&a.run_id, &b.run_id));
    Ok(loaded)
}

fn run_id_of(p: &Path) -> Result<String> {
    p.file_stem()
        .and_then(|s| s.to_str())
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .ok_or_else(|| anyhow!("cannot derive a run id from {}", p.display()))
}

fn finding_of(e: &pavecheck::Error) -> Finding {
    match e {
        pavecheck::Error::Parse { row, message } => Finding {
            row: Some(*row),
            message: message.clone(),
        },
        other => Finding {
            row: None,
            message: other.to_string(),
        },
    }
}

#[derive(Serialize)]
struct ValidationOutput {
    ok: bool,
    reports: Vec<ValidationReport>,
}

fn validation(ctx: &Ctx, loaded: &[Loaded]) -> ValidationOutput {
    let reports: Vec<ValidationReport> = loaded
        .par_iter()
        .map(|l| match &l.trace {
            Ok(t) => validate_trace(t, ctx.config.cadence_ms),
            Err(e) => ValidationReport {
                run_id: l.run_id.clone(),
                errors: vec![finding_of(e)],
                warnings: Vec::new(),
                cadence_ms_observed: None,
                completeness_ok: false,
            },
        })
        .collect();
    ValidationOutput {
        ok: reports.iter().all(|r| r.errors.is_empty()),
        reports,
    }
}

fn print_findings(v: &ValidationOutput) {
    for r in &v.reports {
        for (kind, list) in [("error", &r.errors), ("warning", &r.warnings)] {
            for f in list {
                match f.row {
                    Some(row) => eprintln!("{kind}: run {} row {row}: {}", r.run_id, f.message),
                    None => eprintln!("{kind}: run {}: {}", r.run_id, f.message),
                }
            }
        }
    }
}

fn validate(ctx: &Ctx, paths: &[PathBuf]) -> Result<ExitCode> {
    let loaded = load_traces(ctx, paths)?;
    let v = validation(ctx, &loaded);
    print_findings(&v);
    ctx.write_json("validation.json", &v)?;
    Ok(code(v.ok))
}

fn layout_of(args: &LayoutArgs) -> Result<SectionLayout> {
    let route = open(&args.route)?;
    let sections = open(&args.sections)?;
    load_layout(route, sections).with_context(|| format!("{} / {}", args.route.display(), args.sections.display()))
}

struct Processed {
    run_id: String,
    assignment: Assignment,
    rms: RmsTable,
}

fn process(ctx: &Ctx, layout: &SectionLayout, loaded: &[Loaded]) -> Result<Vec<Processed>> {
    loaded
        .par_iter()
        .map(|l| {
            let t = l
                .trace
                .as_ref()
                .map_err(|e| anyhow!("{}: {e}", l.path.display()))?;
            let assignment = assign_sections(t, layout, &ctx.config.segment).with_context(|| l.path.display().to_string())?;
            let reference = if ctx.config.mean_subtraction {
                t.mean_az().ok_or_else(|| anyhow!("{}: no samples", l.path.display()))?
            } else {
                t.gravity_mps2()
            };
            let rms = section_rms_table(&assignment.runs, reference, &ctx.config.iri_model)?;
            Ok(Processed {
                run_id: l.run_id.clone(),
                assignment,
                rms,
            })
        })
        .collect()
}

fn note_segmentation(processed: &[Processed]) {
    for p in processed {
        let a = &p.assignment;
        if a.dropped > 0 {
            eprintln!(
                "run {}: {} samples outside every section ({} outside GPS coverage)",
                p.run_id, a.dropped, a.uncovered
            );
        }
        if let Some(worst) = a.off_route.iter().map(|o| o.offset_m).reduce(f64::max) {
            eprintln!(
                "run {}: {} GPS fixes off route (up to {worst:.1} m)",
                p.run_id,
                a.off_route.len()
            );
        }
        for r in a.runs.iter().filter(|r| !r.is_empty() && !r.speed_gate_pass()) {
            eprintln!(
                "run {} section {}: mean speed {:.1} kph outside the speed gate",
                p.run_id,
                r.section_id(),
                r.mean_speed_kph().unwrap_or(f64::NAN)
            );
        }
    }
}

fn write_segments(ctx: &Ctx, processed: &[Processed]) -> Result<()> {
    let mut runs: Vec<_> = processed.iter().flat_map(|p| p.assignment.runs.iter().cloned()).collect();
    runs.sort_by(|a, b| natural_cmp(a.section_id(), b.section_id()).then_with(|| natural_cmp(a.run_id(), b.run_id())));
    ctx.write_csv("segments.csv", |w| write_segments_csv(w, &runs))
}

fn segment(ctx: &Ctx, layout: &LayoutArgs, paths: &[PathBuf]) -> Result<ExitCode> {
    let layout = layout_of(layout)?;
    let loaded = load_traces(ctx, paths)?;
    let processed = process(ctx, &layout, &loaded)?;
    note_segmentation(&processed);
    write_segments(ctx, &processed)?;
    Ok(ExitCode::SUCCESS)
}

fn rms_svg(layout: &SectionLayout, run_ids: &[String], rows: &[RmsRow]) -> String {
    let sections = layout.section_ids();
    let series: Vec<(String, Vec<Option<f64>>)> = run_ids
        .iter()
        .map(|run| {
            let vals = sections
                .iter()
                .map(|s| {
                    rows.iter()
                        .find(|r| &r.section_id == s && &r.run_id == run)
                        .map(|r| r.rms_mps2)
                })
                .collect();
            (format!("run {run}"), vals)
        })
        .collect();
    plot::line_chart("RMS per section and run", &sections, &series, "RMS (m/s²)")
}

fn write_rms(ctx: &Ctx, layout: &SectionLayout, processed: &[Processed]) -> Result<RmsTable> {
    let table = RmsTable::merge(processed.iter().map(|p| p.rms.clone()));
    for s in &table.skipped {
        eprintln!("skip: section {} run {}: {}", s.section_id, s.run_id, s.reason);
    }
    ctx.write_csv("rms.csv", |w| write_rms_csv(w, &table.rows))?;
    let run_ids: Vec<String> = processed.iter().map(|p| p.run_id.clone()).collect();
    ctx.write("rms.svg", rms_svg(layout, &run_ids, &table.rows).as_bytes())?;
    Ok(table)
}

fn rms(ctx: &Ctx, layout: &LayoutArgs, paths: &[PathBuf]) -> Result<ExitCode> {
    let layout = layout_of(layout)?;
    let loaded = load_traces(ctx, paths)?;
    let processed = process(ctx, &layout, &loaded)?;
    note_segmentation(&processed);
    write_rms(ctx, &layout, &processed)?;
    Ok(ExitCode::SUCCESS)
}

fn pdi_for(ctx: &Ctx, distress: &Path, section_ids: &[String]) -> Result<BTreeMap<String, f64>> {
    let records = load(distress, parse_distress_csv)?;
    let weights = ctx.config.weight_table()?;
    let pdi = compute_pdi(&records, &weights, section_ids).with_context(|| distress.display().to_string())?;
    ctx.write_csv("pdi.csv", |w| write_pdi_csv(w, &pdi))?;
    Ok(pdi)
}

fn pdi(ctx: &Ctx, distress: &Path, sections: Option<&Path>) -> Result<ExitCode> {
    let ids: Vec<String> = match sections {
        Some(p) => load(p, parse_sections_csv)?.into_iter().map(|(id, _, _)| id).collect(),
        None => Vec::new(),
    };
    pdi_for(ctx, distress, &ids)?;
    Ok(ExitCode::SUCCESS)
}

fn qa_for(ctx: &Ctx, ratings: &[RatingRecord], rms: Option<&[RmsRow]>) -> Result<QaReport> {
    let report = build_report(ratings, rms, &ctx.config.qa);
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let v = &report.verdicts;
    if !v.bias_flagged_raters.is_empty() {
        println!("leniency/severity flagged: {}", v.bias_flagged_raters.join(", "));
    }
    if !v.central_tendency_raters.is_empty() {
        println!("central tendency flagged: {}", v.central_tendency_raters.join(", "));
    }
    ctx.write_json("qa.json", &report)?;
    Ok(report)
}

fn qa(ctx: &Ctx, ratings: &Path, rms: Option<&Path>) -> Result<ExitCode> {
    let ratings = load(ratings, parse_rating_csv)?;
    let rms = rms.map(|p| load(p, parse_rms_csv)).transpose()?;
    qa_for(ctx, &ratings, rms.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn equation(response: &str, slope: f64, intercept: f64) -> String {
    let sign = if intercept < 0.0 { '−' } else { '+' };
    format!("{response} = {slope:.2}·RMS {sign} {:.2}", intercept.abs())
}

fn fit_svg(p: &Pairing, response_label: &str, unit: &str) -> String {
    let pts: Vec<(f64, f64)> = p.points.iter().map(|s| (s.x, s.y)).collect();
    let notes = vec![
        equation(response_label, p.slope, p.intercept),
        match p.r2 {
            Some(r2) => format!("r2 = {r2:.3}"),
            None => "r2 = n/a".to_string(),
        },
        format!("n = {}", p.n),
    ];
    let y_label = if unit.is_empty() {
        response_label.to_string()
    } else {
        format!("{response_label} ({unit})")
    };
    plot::scatter(
        &format!("RMS vs {response_label}"),
        "RMS (m/s²)",
        &y_label,
        &pts,
        Some((p.slope, p.intercept)),
        &notes,
    )
}

fn fit_for(ctx: &Ctx, inputs: &CorrelationInputs<'_>) -> Result<CorrelationReport> {
    if inputs.iri.is_none() && inputs.ratings.is_none() && inputs.pdi.is_none() {
        bail!("nothing to fit: give at least one of --iri, --ratings, --pdi");
    }
    let report = correlate_indices(inputs, ctx.per_run_fit)?;
    ctx.write_json("fit.json", &report)?;
    for (pairing, name, label, unit) in [
        (&report.rms_iri, "fit_rms_iri.svg", "IRI", "mm/m"),
        (&report.rms_rqi, "fit_rms_rqi.svg", "RQI", ""),
        (&report.rms_pdi, "fit_rms_pdi.svg", "PDI", ""),
    ] {
        if let Some(p) = pairing {
            ctx.write(name, fit_svg(p, label, unit).as_bytes())?;
        }
    }
    Ok(report)
}

fn fit(ctx: &Ctx, rms: &Path, iri: Option<&Path>, ratings: Option<&Path>, pdi: Option<&Path>) -> Result<ExitCode> {
    let rms = load(rms, parse_rms_csv)?;
    let iri = iri.map(|p| load(p, parse_iri_csv)).transpose()?;
    let ratings = ratings.map(|p| load(p, parse_rating_csv)).transpose()?;
    let pdi = pdi.map(|p| load(p, parse_pdi_csv)).transpose()?;
    fit_for(
        ctx,
        &CorrelationInputs {
            rms: &rms,
            iri: iri.as_ref(),
            ratings: ratings.as_deref(),
            pdi: pdi.as_ref(),
        },
    )?;
    Ok(ExitCode::SUCCESS)
}

fn synth(ctx: &Ctx, args: &SynthArgs) -> Result<ExitCode> {
    let mut spec = CampaignSpec {
        gravity: ctx.config.gravity_mps2,
        cadence_ms: ctx.config.cadence_ms,
        ..Default::default()
    };
    if let Some(seed) = ctx.seed {
        spec.seed = seed;
    }
    if let Some(v) = &args.section_rms {
        spec.section_rms = v.clone();
    }
    if let Some(n) = args.runs {
        spec.runs = n;
    }
    if let Some(n) = args.raters {
        spec.raters = n;
    }
    if let Some(sd) = args.rating_noise {
        spec.rating_noise_sd = sd;
    }
    if let Some(sd) = args.iri_noise {
        spec.iri_noise_sd = sd;
    }
    for &(rater, bias) in &args.rater_bias {
        if rater > spec.raters {
            bail!("rater r{rater} is outside the panel of {}", spec.raters);
        }
        spec.rater_biases.resize(spec.raters, 0.0);
        spec.rater_biases[rater - 1] = bias;
    }
    let c = gen_campaign(&spec)?;
    ctx.write_csv("route.csv", |w| write_route_csv(w, c.layout.route()))?;
    ctx.write_csv("sections.csv", |w| write_sections_csv(w, &c.layout))?;
    for t in &c.traces {
        ctx.write_csv(&format!("traces/{}.csv", t.run_id()), |w| write_trace_csv(w, t))?;
    }
    ctx.write_csv("ratings.csv", |w| write_rating_csv(w, &c.ratings))?;
    ctx.write_csv("distress.csv", |w| write_distress_csv(w, &c.distress))?;
    ctx.write_csv("iri.csv", |w| write_iri_csv(w, &c.iri))?;
    Ok(ExitCode::SUCCESS)
}

fn report(
    ctx: &Ctx,
    layout: &LayoutArgs,
    ratings: &Path,
    distress: Option<&Path>,
    iri: Option<&Path>,
    paths: &[PathBuf],
) -> Result<ExitCode> {
    let layout = layout_of(layout)?;
    let ratings = load(ratings, parse_rating_csv)?;
    let iri = iri.map(|p| load(p, parse_iri_csv)).transpose()?;
    if let Some(p) = distress {
        require(p)?;
    }
    let loaded = load_traces(ctx, paths)?;
    let v = validation(ctx, &loaded);
    print_findings(&v);
    ctx.write_json("validation.json", &v)?;
    if !v.ok {
        eprintln!("error: trace validation failed; see validation.json");
        return Ok(code(false));
    }

    let processed = process(ctx, &layout, &loaded)?;
    note_segmentation(&processed);
    write_segments(ctx, &processed)?;
    let table = write_rms(ctx, &layout, &processed)?;
    let pdi = distress.map(|p| pdi_for(ctx, p, &layout.section_ids())).transpose()?;
    qa_for(ctx, &ratings, Some(&table.rows))?;
    fit_for(
        ctx,
        &CorrelationInputs {
            rms: &table.rows,
            iri: iri.as_ref(),
            ratings: Some(&ratings),
            pdi: pdi.as_ref(),
        },
    )?;
    Ok(ExitCode::SUCCESS)
}
