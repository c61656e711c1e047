//! `spindimer` command-line front end.
//!
//! Exit status: 0 success, 2 usage, 3 I/O, 4 parse, 5 fit did not converge,
//! 6 verification failure.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spindimer::curve::load_curve;
use spindimer::fit::{fit_with, goodness, initial_guess, FitOptions, FitReport, FitSpace};
use spindimer::measures::{self, DEFAULT_SLACK};
use spindimer::profile::{correlation_profile, experimental_profile, GridScale, TemperatureGrid};
use spindimer::thresholds::{
    threshold_report, PurityMeasure, ThresholdConfig, DEFAULT_DELTA, DEFAULT_EPSILON, DEFAULT_STABILITY_LIMIT,
};
use spindimer::verify::{self, ClosedForms, VerifyConfig};
use spindimer::{DimerParams, Error, UnitSystem};

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_PARSE: u8 = 4;
const EXIT_NOT_CONVERGED: u8 = 5;
const EXIT_VERIFY: u8 = 6;

#[derive(Parser)]
#[command(
    name = "spindimer",
    version,
    about = "Spin-1/2 Heisenberg dimer: susceptibility fits and correlation measures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit J and g to a χ(T) curve and write the result as JSON.
    Fit(FitArgs),
    /// Tabulate the correlation measures over a temperature grid.
    Profile(ProfileArgs),
    /// Solve the characteristic temperatures and write them as JSON.
    Thresholds(ThresholdArgs),
    /// Cross-check the closed forms against the dense two-qubit oracle.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Output {
    /// Write here instead of stdout.
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ParamArgs {
    /// Exchange coupling in K (negative is antiferromagnetic).
    #[arg(long = "J", value_name = "K", allow_hyphen_values = true)]
    j: Option<f64>,
    /// Landé factor.
    #[arg(long, value_name = "VAL")]
    g: Option<f64>,
}

#[derive(Args)]
struct FitArgs {
    /// Two-column T, χ file (comments start with #).
    #[arg(long, value_name = "PATH")]
    input: PathBuf,
    #[arg(long, default_value = "si", value_parser = parse_units)]
    units: UnitSystem,
    /// Residual space.
    #[arg(long, default_value = "chiT", value_parser = parse_fit_space)]
    fit_space: FitSpace,
    /// Also fit a temperature-independent background χ₀.
    #[arg(long)]
    background: bool,
    /// Starting point; unset values come from the curve itself.
    #[command(flatten)]
    start: ParamArgs,
    #[command(flatten)]
    out: Output,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct ProfileArgs {
    /// JSON written by `fit`; supplies J and g unless overridden.
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Measured curve; rows follow its temperatures instead of the grid. A
    /// background from the fit result is subtracted first.
    #[arg(long, value_name = "PATH")]
    curve: Option<PathBuf>,
    #[arg(long, default_value = "si", value_parser = parse_units)]
    units: UnitSystem,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, value_name = "K", default_value_t = 2.0)]
    tmin: f64,
    #[arg(long, value_name = "K", default_value_t = 1e4)]
    tmax: f64,
    #[arg(long, value_name = "N", default_value_t = 400)]
    tcount: usize,
    #[arg(long, default_value = "log", value_parser = parse_scale)]
    tscale: GridScale,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct ThresholdArgs {
    /// JSON written by `fit`; supplies J and g unless overridden.
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    #[command(flatten)]
    params: ParamArgs,
    /// Level for the discord persistence temperatures.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Distance from the ground-state value for the purity temperature.
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    /// Measure used for the purity temperature: eof, entropic_discord or min.
    #[arg(long, default_value = "eof", value_parser = parse_purity)]
    purity_measure: PurityMeasure,
    /// Structural stability limit in K for the clamped columns, or `off` [default: 513].
    #[arg(long, value_name = "K", value_parser = parse_limit)]
    clamp_stability: Option<Limit>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = VerifyConfig::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = VerifyConfig::default().samples)]
    samples: usize,
    /// Print the summary as JSON.
    #[arg(long)]
    json: bool,
    /// Shift the closed-form concurrence by 1e-6 to exercise the failure path.
    #[arg(long, hide = true)]
    inject_fault: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Clone, Copy)]
struct Limit(Option<f64>);

fn parse_units(s: &str) -> Result<UnitSystem, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_fit_space(s: &str) -> Result<FitSpace, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_scale(s: &str) -> Result<GridScale, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_purity(s: &str) -> Result<PurityMeasure, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_limit(s: &str) -> Result<Limit, String> {
    if s == "off" {
        return Ok(Limit(None));
    }
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(Limit(Some(v))),
        _ => Err(format!("expected a positive temperature or `off`, got `{s}`")),
    }
}

/// A failure together with the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }

    fn io(path: &Path, err: io::Error) -> Self {
        Failure { code: EXIT_IO, message: format!("{}: {err}", path.display()) }
    }

    fn in_file(path: &Path, err: Error) -> Self {
        let mut f = Failure::from(err);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Io(_) => EXIT_IO,
            Error::Parse { .. } | Error::Json(_) | Error::Unphysical { .. } => EXIT_PARSE,
            Error::InvalidInput(_) | Error::UnknownUnit(_) | Error::InvalidState(_) => EXIT_USAGE,
        };
        Failure { code, message: err.to_string() }
    }
}

type Outcome = Result<ExitCode, Failure>;

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path).map(BufReader::new).map_err(|e| Failure::io(path, e))
}

fn sink(out: &Output) -> Result<Box<dyn Write>, Failure> {
    Ok(match &out.output {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| Failure::io(path, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn emit_json<T: serde::Serialize>(value: &T, out: &Output) -> Result<(), Failure> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(Error::from)?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Failure::from(Error::Io(e)))
}

fn load_report(input: Option<&Path>) -> Result<Option<FitReport>, Failure> {
    let Some(path) = input else {
        return Ok(None);
    };
    let report: FitReport = serde_json::from_reader(open(path)?).map_err(|e| Failure::in_file(path, e.into()))?;
    report.params().map_err(|e| Failure::in_file(path, e))?;
    Ok(Some(report))
}

fn resolve_params(report: Option<&FitReport>, args: &ParamArgs) -> Result<DimerParams, Failure> {
    let j = args.j.or(report.map(|r| r.j_k)).ok_or_else(|| Failure::usage("pass --J or a fit result via --input"))?;
    let g = args.g.or(report.map(|r| r.g)).unwrap_or(2.0);
    Ok(DimerParams::new(j, g)?)
}

fn cmd_fit(args: &FitArgs) -> Outcome {
    let curve = load_curve(open(&args.input)?, args.units).map_err(|e| Failure::in_file(&args.input, e))?;
    let guess = initial_guess(&curve);
    let start = DimerParams::new(args.start.j.unwrap_or(guess.j), args.start.g.unwrap_or(guess.g))?;
    let opts = FitOptions { space: args.fit_space, background: args.background, ..FitOptions::default() };
    let result = fit_with(&curve, &start, &opts)?;
    let report = FitReport::new(&result, &goodness(&result, &curve)?);
    emit_json(&report, &args.out)?;
    if let Some(d) = &report.diagnostic {
        eprintln!("warning: {d}");
    }
    if !report.converged {
        eprintln!("error: fit did not converge after {} iterations", report.iterations);
        return Ok(ExitCode::from(EXIT_NOT_CONVERGED));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_profile(args: &ProfileArgs) -> Outcome {
    let report = load_report(args.input.as_deref())?;
    let params = resolve_params(report.as_ref(), &args.params)?;
    let profile = match &args.curve {
        Some(path) => {
            let mut curve = load_curve(open(path)?, args.units).map_err(|e| Failure::in_file(path, e))?;
            if let Some(chi0) = report.as_ref().and_then(|r| r.chi0_si) {
                curve = curve.without_background(chi0);
            }
            experimental_profile(&params, &curve, DEFAULT_SLACK).map_err(|e| Failure::in_file(path, e))?
        }
        None => {
            let grid = TemperatureGrid { min: args.tmin, max: args.tmax, count: args.tcount, scale: args.tscale };
            grid.validate().map_err(|e| Failure::usage(e.to_string()))?;
            correlation_profile(&params, &grid)?
        }
    };
    let mut w = sink(&args.out)?;
    match args.format {
        Format::Csv => profile.write_csv(&mut w)?,
        Format::Json => {
            profile.write_json(&mut w)?;
            writeln!(w).map_err(Error::from)?;
        }
    }
    w.flush().map_err(Error::from)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_thresholds(args: &ThresholdArgs) -> Outcome {
    let params = resolve_params(load_report(args.input.as_deref())?.as_ref(), &args.params)?;
    if [args.epsilon, args.delta].iter().any(|v| v.is_nan() || *v <= 0.0) {
        return Err(Failure::usage("--epsilon and --delta must be positive"));
    }
    let config = ThresholdConfig {
        epsilon: args.epsilon,
        delta: args.delta,
        purity_measure: args.purity_measure,
        stability_limit: args.clamp_stability.map_or(Some(DEFAULT_STABILITY_LIMIT), |l| l.0),
    };
    emit_json(&threshold_report(&params, &config), &args.out)?;
    Ok(ExitCode::SUCCESS)
}

fn shifted_concurrence(x: f64) -> f64 {
    measures::concurrence(x) + 1e-6
}

fn cmd_verify(args: &VerifyArgs) -> Outcome {
    if args.samples == 0 {
        return Err(Failure::usage("--samples must be at least 1"));
    }
    let config = VerifyConfig { seed: args.seed, samples: args.samples, ..VerifyConfig::default() };
    let mut forms = ClosedForms::default();
    if args.inject_fault {
        forms.concurrence = shifted_concurrence;
    }
    let summary = verify::run(&config, &forms)?;
    if args.json {
        emit_json(&summary, &args.out)?;
    } else {
        let mut w = sink(&args.out)?;
        let mut text = format!("{} samples, seed {}\n", summary.samples, summary.seed);
        for c in &summary.checks {
            let status = if c.passed { "ok" } else { "FAIL" };
            text += &format!("{:<22} max {:<10.3e} tol {:<8.0e} {status}\n", c.name, c.max_deviation, c.tolerance);
        }
        w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(Error::from)?;
    }
    if summary.passed {
        return Ok(ExitCode::SUCCESS);
    }
    for c in summary.checks.iter().filter(|c| !c.passed) {
        match &c.worst {
            Some(s) => eprintln!(
                "error: {} deviates by {:e} (tolerance {:e}) at J = {} K, g = {}, T = {} K",
                c.name, c.max_deviation, c.tolerance, s.j, s.g, s.t
            ),
            None => eprintln!("error: {} failed", c.name),
        }
    }
    Ok(ExitCode::from(EXIT_VERIFY))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Profile(a) => cmd_profile(a),
        Command::Thresholds(a) => cmd_thresholds(a),
        Command::Verify(a) => cmd_verify(a),
    };
    outcome.unwrap_or_else(|f| {
        eprintln!("error: {}", f.message);
        ExitCode::from(f.code)
    })
}
