//! Command-line front end. Exit codes: 0 success, 1 validation or I/O
//! failure, 2 usage error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::ingest::{Dataset, ScopeFilter};
use crate::manifest::Manifest;
use crate::pipeline::{self, LoadedWeights, RaceChoice};
use crate::synth::{generate, SynthConfig};

#[derive(Debug, Parser)]
#[command(name = "rentgap", version, about = "Tract-level rent-to-value analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Clone, Copy, PartialEq, Subcommand)]
enum Command {
    /// Validate and clean the attribute table
    Ingest,
    /// Build contiguity weights from polygons or an adjacency list
    Weights,
    /// Medians, quantiles, correlations and scatter data per area
    Describe,
    /// Areas ordered by median RPV
    Rank,
    /// Spatial lag regressions of ZRPV per area
    Regress,
    /// Synthetic lattice dataset with planted parameters
    Synth(SynthArgs),
    /// Every analysis stage in sequence
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 20)]
    rows: usize,
    #[arg(long, default_value_t = 20)]
    cols: usize,
    #[arg(long, default_value_t = 0.4, allow_negative_numbers = true)]
    rho: f64,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScopeArg {
    City,
    Msa,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RaceArg {
    White,
    Black,
    Both,
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long, global = true, value_name = "CSV")]
    attributes: Option<PathBuf>,
    #[arg(long, global = true, value_name = "GEOJSON", conflicts_with = "adjacency")]
    geometry: Option<PathBuf>,
    #[arg(long, global = true, value_name = "CSV")]
    adjacency: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = ScopeArg::Both)]
    scope: ScopeArg,
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = RaceArg::Both)]
    race: RaceArg,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
}

impl Common {
    fn scope(&self) -> ScopeFilter {
        match self.scope {
            ScopeArg::City => ScopeFilter::City,
            ScopeArg::Msa => ScopeFilter::Msa,
            ScopeArg::Both => ScopeFilter::Both,
        }
    }

    fn race(&self) -> RaceChoice {
        match self.race {
            RaceArg::White => RaceChoice::White,
            RaceArg::Black => RaceChoice::Black,
            RaceArg::Both => RaceChoice::Both,
        }
    }
}

enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

/// Parses `args` (program name first), runs the stage and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn require<'a>(p: &'a Option<PathBuf>, flag: &str, stage: &str) -> std::result::Result<&'a Path, Failure> {
    p.as_deref()
        .ok_or_else(|| Failure::Usage(format!("{stage} requires --{flag}")))
}

fn execute(cli: &Cli) -> std::result::Result<(), Failure> {
    let c = &cli.common;
    let out = &c.out;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut m = Manifest::new(out);
    let result = stages(cli, &mut m);
    // the manifest is written even when a stage fails part way
    let saved = m.save();
    result?;
    saved?;
    Ok(())
}

fn weights_required(w: Option<LoadedWeights>) -> Result<LoadedWeights> {
    w.ok_or_else(|| Error::Validation("weights required: pass --geometry or --adjacency".into()))
}

fn stages(cli: &Cli, m: &mut Manifest) -> std::result::Result<(), Failure> {
    let c = &cli.common;
    let ingest = |m: &mut Manifest, stage: &str| -> std::result::Result<Dataset, Failure> {
        let path = require(&c.attributes, "attributes", stage)?;
        Ok(pipeline::stage_ingest(path, c.scope(), m)?)
    };
    match cli.command {
        Command::Ingest => {
            ingest(m, "ingest")?;
        }
        Command::Weights => {
            let ds = match &c.attributes {
                Some(p) => Some(pipeline::stage_ingest(p, c.scope(), m)?),
                None => None,
            };
            let w = pipeline::load_weights(c.geometry.as_deref(), c.adjacency.as_deref(), ds.as_ref())?
                .ok_or_else(|| Failure::Usage("weights requires --geometry or --adjacency".into()))?;
            pipeline::stage_weights(&w, m)?;
        }
        Command::Describe => {
            let ds = ingest(m, "describe")?;
            pipeline::stage_describe(&ds, m)?;
        }
        Command::Rank => {
            let ds = ingest(m, "rank")?;
            pipeline::stage_rank(&ds, m)?;
        }
        Command::Regress => {
            let ds = ingest(m, "regress")?;
            let w = weights_required(pipeline::load_weights(
                c.geometry.as_deref(),
                c.adjacency.as_deref(),
                Some(&ds),
            )?)?;
            pipeline::stage_regress(&ds, &w.weights, c.race(), m)?;
        }
        Command::Synth(s) => {
            let cfg = SynthConfig::tract_like(s.rows, s.cols, s.rho, s.noise, c.seed);
            let files = generate(&cfg)?.write(m.root())?;
            m.record("synth_attributes", &files.attributes)?;
            m.record("synth_geometry", &files.geometry)?;
            m.record("synth_truth", &files.truth)?;
        }
        Command::All => {
            let ds = ingest(m, "all")?;
            let w = weights_required(pipeline::load_weights(
                c.geometry.as_deref(),
                c.adjacency.as_deref(),
                Some(&ds),
            )?)?;
            pipeline::stage_weights(&w, m)?;
            pipeline::stage_describe(&ds, m)?;
            pipeline::stage_rank(&ds, m)?;
            pipeline::stage_regress(&ds, &w.weights, c.race(), m)?;
        }
    }
    Ok(())
}
