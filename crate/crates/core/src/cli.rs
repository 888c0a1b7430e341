//! Command-line front end. `run` is the whole program minus process exit so
//! it can be driven from tests.
//!
//! Exit codes: 0 success, 2 usage or input error, 3 internal invariant
//! violation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bounds::{compute_all, BoundsResult, ComputeOptions, PopBasis, RateScales};
use crate::chart::render_svg;
use crate::comparison::{compare_cities, compare_years, Metric, PctBase};
use crate::domain::{validate, Dataset, HierarchyAssumption};
use crate::error::Error;
use crate::ingest::{embedded_reference, load, SourceManifest};
use crate::interval::{ConfidenceSpec, Interval};
use crate::report::{verdict_text, ComparisonRow, ReportBundle};
use crate::sim::{run_coverage, SimScenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "crimebounds",
    version,
    about = "Interval estimates of residential burglary incidence and rates"
)]
pub struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Use the embedded North Carolina 2009-2011 dataset (default).
    #[arg(long, global = true, conflicts_with = "manifest")]
    embedded: bool,

    /// JSON manifest naming the four input files.
    #[arg(long, global = true, value_name = "PATH")]
    manifest: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[arg(long, global = true, default_value_t = 0.005)]
    theta_lb: f64,

    #[arg(long, global = true, default_value_t = 0.01)]
    theta_ub: f64,

    /// Normal multiplier for the reporting-rate interval.
    #[arg(long, global = true, default_value_t = 1.959964)]
    z: f64,

    /// Population estimate used for the standard point-estimate rates.
    #[arg(long, global = true, value_enum, default_value_t = BasisArg::State)]
    pop_basis: BasisArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BasisArg {
    State,
    Federal,
    Mid,
}

impl From<BasisArg> for PopBasis {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::State => PopBasis::State,
            BasisArg::Federal => PopBasis::Federal,
            BasisArg::Mid => PopBasis::Mid,
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute all bounds and write the report bundle.
    Compute {
        /// Also write population and household rate charts (needs --out).
        #[arg(long)]
        charts: bool,
        /// Percent-change base for cross-city comparisons.
        #[arg(long, default_value = "first")]
        pct_base: String,
    },
    /// Compare two cities in one year, or one city across two years.
    Compare {
        #[arg(long, num_args = 2, value_names = ["CITY_A", "CITY_B"], conflicts_with = "city", requires = "year")]
        cities: Option<Vec<String>>,
        #[arg(long)]
        year: Option<i32>,
        #[arg(long, requires = "years")]
        city: Option<String>,
        #[arg(long, num_args = 2, value_names = ["YEAR_A", "YEAR_B"])]
        years: Option<Vec<i32>>,
        /// b_a, rate_pop or rate_hh.
        #[arg(long)]
        metric: String,
        /// Percent-change base for cross-city comparisons: first or larger.
        #[arg(long, default_value = "first")]
        pct_base: String,
    },
    /// Render a dot-and-interval SVG chart.
    Chart {
        /// b_a, rate_pop or rate_hh.
        #[arg(long)]
        metric: String,
        /// Output file. Defaults to <out>/chart_<metric>.svg, or stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a Monte Carlo coverage scenario.
    Simulate {
        scenario: PathBuf,
        /// Output file. Defaults to <out>/coverage.json, or stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check a dataset and list findings.
    Validate,
}

/// A failed command: exit code plus diagnostics for the error stream.
struct Failure {
    code: i32,
    lines: Vec<String>,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            lines: vec![msg.into()],
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let mut lines = vec![format!("error: {e}")];
        if let Error::Validation(findings) = &e {
            lines.extend(findings.iter().map(|f| f.to_string()));
        }
        if matches!(e, Error::Lookup(_)) {
            lines.push("hint: run with --help for usage".into());
        }
        Failure {
            code: EXIT_USAGE,
            lines,
        }
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            for l in f.lines {
                let _ = writeln!(err, "{l}");
            }
            f.code
        }
    }
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let g = &cli.global;
    match &cli.command {
        Command::Compute { charts, pct_base } => {
            let pct_base: PctBase = pct_base.parse()?;
            let (ds, results) = dataset_and_results(g, err)?;
            let mut bundle = ReportBundle::build(&ds, &results, &options(g), pct_base)?;
            if *charts {
                let dir = g
                    .out
                    .as_ref()
                    .ok_or_else(|| Failure::usage("error: --charts requires --out"))?;
                for metric in [Metric::RatePopulation, Metric::RateHousehold] {
                    let name = format!("chart_{metric}.svg");
                    write_file(&dir.join(&name), &render_svg(&results, metric))?;
                    bundle.charts.push(name);
                }
            }
            match (g.format, &g.out) {
                (Format::Text, _) => emit(out, &bundle.to_text()),
                (Format::Json, None) => emit(out, &bundle.to_json()?),
                (Format::Csv, None) => Err(Failure::usage("error: --format csv requires --out")),
                (fmt, Some(dir)) => {
                    bundle.write(dir, fmt == Format::Csv)?;
                    Ok(())
                }
            }
        }
        Command::Compare {
            cities,
            year,
            city,
            years,
            metric,
            pct_base,
        } => {
            let metric: Metric = metric.parse()?;
            let pct_base: PctBase = pct_base.parse()?;
            let (_, results) = dataset_and_results(g, err)?;
            let verdict = match (cities, year, city, years) {
                (Some(c), Some(y), None, None) => {
                    compare_cities(&results, &c[0], &c[1], *y, metric, pct_base)?
                }
                (None, None, Some(c), Some(ys)) => {
                    compare_years(&results, c, ys[0], ys[1], metric)?
                }
                _ => {
                    return Err(Failure::usage(
                        "error: use either --cities A B --year Y or --city C --years Y1 Y2",
                    ))
                }
            };
            let row = ComparisonRow::from_verdict(&verdict);
            match g.format {
                Format::Text => emit(out, &verdict_text(&row)),
                Format::Json => emit(
                    out,
                    &(serde_json::to_string_pretty(&row).map_err(Error::from)? + "\n"),
                ),
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    w.serialize(&row)
                        .map_err(|e| Failure::usage(format!("error: {e}")))?;
                    let bytes = w
                        .into_inner()
                        .map_err(|e| Failure::usage(format!("error: {e}")))?;
                    emit(out, &String::from_utf8_lossy(&bytes))
                }
            }
        }
        Command::Chart { metric, output } => {
            let metric: Metric = metric.parse()?;
            let (_, results) = dataset_and_results(g, err)?;
            let svg = render_svg(&results, metric);
            let target = output.clone().or_else(|| {
                g.out
                    .as_ref()
                    .map(|d| d.join(format!("chart_{metric}.svg")))
            });
            match target {
                Some(path) => write_file(&path, &svg),
                None => emit(out, &svg),
            }
        }
        Command::Simulate { scenario, output } => {
            let text = fs::read_to_string(scenario).map_err(|e| Error::io(scenario, e))?;
            let sc = SimScenario::from_json(&text)?;
            let report = run_coverage(&sc);
            let json = serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n";
            let target = output
                .clone()
                .or_else(|| g.out.as_ref().map(|d| d.join("coverage.json")));
            match target {
                Some(path) => write_file(&path, &json),
                None => emit(out, &json),
            }
        }
        Command::Validate => {
            let ds = load_dataset(g)?;
            let findings = validate(&ds);
            match g.format {
                Format::Json => emit(
                    out,
                    &(serde_json::to_string_pretty(&findings).map_err(Error::from)? + "\n"),
                ),
                _ => {
                    let mut s = String::new();
                    for f in &findings {
                        s.push_str(&f.to_string());
                        s.push('\n');
                    }
                    if findings.is_empty() {
                        s.push_str("ok\n");
                    }
                    emit(out, &s)
                }
            }
        }
    }
}

fn emit(out: &mut dyn Write, s: &str) -> CmdResult {
    out.write_all(s.as_bytes())
        .map_err(|e| Failure::usage(format!("error: cannot write output: {e}")))
}

fn write_file(path: &Path, body: &str) -> CmdResult {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, body).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn options(g: &GlobalArgs) -> ComputeOptions {
    ComputeOptions {
        scales: RateScales::default(),
        basis: g.pop_basis.into(),
    }
}

fn load_dataset(g: &GlobalArgs) -> std::result::Result<Dataset, Failure> {
    let mut ds = match &g.manifest {
        Some(path) => load(&SourceManifest::read(path)?)?,
        None => embedded_reference(),
    };
    ds.hierarchy = HierarchyAssumption::new(Interval::new(g.theta_lb, g.theta_ub)?)?;
    ds.confidence = ConfidenceSpec::new(ds.confidence.level(), g.z)?;
    Ok(ds)
}

fn dataset_and_results(
    g: &GlobalArgs,
    err: &mut dyn Write,
) -> std::result::Result<(Dataset, Vec<BoundsResult>), Failure> {
    let ds = load_dataset(g)?;
    for f in validate(&ds) {
        let _ = writeln!(err, "{f}");
    }
    let results = compute_all(&ds, &options(g))?;
    for r in &results {
        if let Err(msg) = r.check_invariants(&ds.hierarchy) {
            return Err(Failure {
                code: EXIT_INVARIANT,
                lines: vec![format!("internal invariant violated: {msg}")],
            });
        }
    }
    Ok((ds, results))
}
