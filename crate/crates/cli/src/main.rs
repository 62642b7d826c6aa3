mod commands;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::commands::MissingFile;

/// Pavement roughness from smartphone traces: validation, section RMS and
/// IRI estimates, distress index, rating-panel QA and index correlations.
#[derive(Debug, Parser)]
#[command(name = "pavecheck", version)]
struct Cli {
    /// TOML settings file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory that receives every output file.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Seed for `synth`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fit one point per (section, run) instead of per section.
    #[arg(long, global = true)]
    per_run_fit: bool,
    /// Measure RMS about each run's mean vertical acceleration instead of
    /// gravity.
    #[arg(long, global = true)]
    mean_subtraction: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct LayoutArgs {
    /// Route polyline CSV (`lat,lon`).
    #[arg(long)]
    route: PathBuf,
    /// Section intervals CSV (`section_id,start_chainage_m,end_chainage_m`).
    #[arg(long)]
    sections: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check traces for gaps, cadence drift and missing GPS.
    Validate {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
    },
    /// Assign trace samples to sections.
    Segment {
        #[command(flatten)]
        layout: LayoutArgs,
        #[arg(required = true)]
        traces: Vec<PathBuf>,
    },
    /// Section RMS and IRI estimate per run.
    Rms {
        #[command(flatten)]
        layout: LayoutArgs,
        #[arg(required = true)]
        traces: Vec<PathBuf>,
    },
    /// Pavement distress index per section.
    Pdi {
        #[arg(long)]
        distress: PathBuf,
        /// Sections CSV; listed sections without distress get PDI 0.
        #[arg(long)]
        sections: Option<PathBuf>,
    },
    /// Rating-panel and replicate QA.
    Qa {
        #[arg(long)]
        ratings: PathBuf,
        /// RMS table from `rms`, for RMS outliers, repeatability and run effect.
        #[arg(long)]
        rms: Option<PathBuf>,
    },
    /// Regress IRI, RQI and PDI on RMS.
    Fit {
        #[arg(long)]
        rms: PathBuf,
        #[arg(long)]
        iri: Option<PathBuf>,
        #[arg(long)]
        ratings: Option<PathBuf>,
        #[arg(long)]
        pdi: Option<PathBuf>,
    },
    /// Write a synthetic survey (route, sections, traces, ratings, distress, IRI).
    Synth(SynthArgs),
    /// Run every step and write the full bundle.
    Report {
        #[command(flatten)]
        layout: LayoutArgs,
        #[arg(long)]
        ratings: PathBuf,
        #[arg(long)]
        distress: Option<PathBuf>,
        #[arg(long)]
        iri: Option<PathBuf>,
        #[arg(required = true)]
        traces: Vec<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Target RMS per section, in route order.
    #[arg(long, value_delimiter = ',')]
    section_rms: Option<Vec<f64>>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    raters: Option<usize>,
    /// SD of an individual rating.
    #[arg(long)]
    rating_noise: Option<f64>,
    /// Additive rater bias, e.g. `--rater-bias r3=-1.5`; repeatable.
    #[arg(long, value_parser = parse_bias)]
    rater_bias: Vec<(usize, f64)>,
    /// SD of the noise on reference IRI.
    #[arg(long)]
    iri_noise: Option<f64>,
}

fn parse_bias(s: &str) -> Result<(usize, f64), String> {
    let (id, v) = s.split_once('=').ok_or("expected rN=VALUE")?;
    let n: usize = id
        .strip_prefix('r')
        .and_then(|n| n.parse().ok())
        .filter(|n| *n >= 1)
        .ok_or_else(|| format!("bad rater id {id:?}; expected r1, r2, ..."))?;
    let v: f64 = v.parse().map_err(|_| format!("bad bias {v:?}"))?;
    Ok((n, v))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.chain().any(|c| c.is::<MissingFile>()) {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
