use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use clifford_kdv::charges;
use clifford_kdv::config::{ConfigError, InitialCondition, RunConfig};
use clifford_kdv::dynamics::{self, EvolveError};
use clifford_kdv::io::{self as formats, ChargeWriter, FormatError};
use clifford_kdv::solitons::{self, SolitonSpec, VelocityMode};
use clifford_kdv::verify::{self, Suite};
use clifford_kdv::{Error, Grid};

const EXIT_FAILED_CHECKS: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_BLOW_UP: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(name = "ckdv", version, about = "Clifford-valued coupled KdV laboratory")]
struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for randomized suites; overrides the configuration's seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress informational output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a configured run and write the charge series and final state.
    Simulate {
        /// Configuration file; falls back to --config.
        path: Option<PathBuf>,
    },
    /// Run a property suite and print a pass/fail table.
    Verify {
        suite: Suite,
        /// Print the reports as JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// Print the charges of a saved state as one CSV row.
    Charges {
        state_path: PathBuf,
        /// Coupling used for H5 (defaults to the value in the file, else 1).
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Sample a one-soliton and report its residual.
    Soliton {
        #[arg(long = "c")]
        c: f64,
        #[arg(long = "a", default_value_t = 0.0, allow_hyphen_values = true)]
        a: f64,
        #[arg(long = "t", default_value_t = 0.0, allow_hyphen_values = true)]
        t: f64,
        /// paper, oracle or an explicit number.
        #[arg(long, default_value = "oracle", allow_hyphen_values = true)]
        velocity: VelocityMode,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        lambda: f64,
        /// Number of Clifford components (all zero).
        #[arg(long = "k", default_value_t = 0)]
        components: usize,
        #[arg(long, default_value_t = 80.0)]
        length: f64,
        #[arg(long, default_value_t = 512)]
        n: usize,
        /// Write the state here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let code = match &e {
            ConfigError::Read(_) => EXIT_IO,
            ConfigError::File(f) if f.is_io() => EXIT_IO,
            _ => EXIT_INPUT,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<FormatError> for Failure {
    fn from(e: FormatError) -> Self {
        let code = if e.is_io() { EXIT_IO } else { EXIT_INPUT };
        Failure::new(code, e.to_string())
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::BlowUp { .. }) { EXIT_BLOW_UP } else { EXIT_INPUT };
        Failure::new(code, e.to_string())
    }
}

fn file_failure(path: &Path, e: FormatError) -> Failure {
    let mut f = Failure::from(e);
    f.message = format!("{}: {}", path.display(), f.message);
    f
}

fn io_failure(what: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::new(EXIT_IO, format!("{}: {e}", what.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate { path } => simulate(&cli, path.as_deref()),
        Command::Verify { suite, json } => run_verify(&cli, *suite, *json),
        Command::Charges { state_path, lambda } => print_charges(state_path, *lambda),
        Command::Soliton { .. } => soliton(&cli),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("ckdv: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn default_output(config: &Path, suffix: &str) -> PathBuf {
    let stem = config.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
    config.with_file_name(format!("{stem}{suffix}"))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_relative() { base.join(p) } else { p.to_path_buf() }
}

fn simulate(cli: &Cli, path: Option<&Path>) -> Result<u8, Failure> {
    let path = path
        .or(cli.config.as_deref())
        .ok_or_else(|| Failure::new(EXIT_INPUT, "simulate needs a configuration (positional or --config)"))?;
    let config = RunConfig::load(path).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    let initial = config.initial_state(base)?;
    let seed = cli.seed.or(config.seed);
    let solver = config.solver();

    let charges_path = config
        .output
        .charges_path
        .as_deref()
        .map(|p| resolve(base, p))
        .unwrap_or_else(|| default_output(path, "_charges.csv"));
    let state_path = config
        .output
        .state_path
        .as_deref()
        .map(|p| resolve(base, p))
        .unwrap_or_else(|| default_output(path, "_final.csv"));

    let file = File::create(&charges_path).map_err(|e| io_failure(&charges_path, e))?;
    let comment = format!(
        "lambda={} dt={} t_end={} seed={}",
        formats::fmt_f64(config.lambda),
        formats::fmt_f64(config.dt),
        formats::fmt_f64(config.t_end),
        seed.map_or("none".to_string(), |s| s.to_string())
    );
    let mut writer = ChargeWriter::new(file, initial.components(), Some(&comment))?;
    let mut write_error = None;
    let outcome = dynamics::evolve(&initial, &solver, |_, r| {
        if write_error.is_none() {
            if let Err(e) = writer.write(r) {
                write_error = Some(e);
            }
        }
    });
    writer.finish()?;
    if let Some(e) = write_error {
        return Err(e.into());
    }
    let evolution = outcome.map_err(|EvolveError { source, last_good_time }| {
        let mut f = Failure::from(source);
        f.message = format!("{} (last good time {last_good_time})", f.message);
        f
    })?;
    formats::save_state(&state_path, &evolution.state, Some(config.lambda), seed)
        .map_err(|e| file_failure(&state_path, e))?;

    if !cli.quiet {
        println!("charges: {}", charges_path.display());
        println!("state:   {}", state_path.display());
        if let Some(last) = evolution.reports.last() {
            println!(
                "t = {}  H1 drift {:.3e}  H3 drift {:.3e}  H5 drift {:.3e}",
                last.t,
                verify::relative_drift(&evolution.reports, |r| r.h1),
                verify::relative_drift(&evolution.reports, |r| r.h3),
                verify::relative_drift(&evolution.reports, |r| r.h5),
            );
        }
    }
    if let [InitialCondition::Soliton(spec)] = config.initial_condition.parts() {
        let spec = SolitonSpec::new(spec.c, spec.a, spec.velocity)?;
        let exact = solitons::one_soliton(&spec, initial.grid(), evolution.state.t, initial.components())?;
        let err = verify::max_abs_diff(&evolution.state.u, &exact.u);
        println!("soliton L-inf error vs exact translate: {err:.6e}");
    }
    Ok(0)
}

fn run_verify(cli: &Cli, suite: Suite, json: bool) -> Result<u8, Failure> {
    let seed = cli.seed.unwrap_or(0);
    let reports = verify::run(suite, seed)?;
    let passed = reports.iter().all(|r| r.passed());
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let written = if json {
        serde_json::to_writer_pretty(&mut out, &reports)
            .map_err(io::Error::from)
            .and_then(|_| writeln!(out))
    } else {
        reports.iter().try_for_each(|r| {
            if cli.quiet && r.passed() {
                Ok(())
            } else {
                write!(out, "{}", r.table())
            }
        })
    };
    written.map_err(|e| Failure::new(EXIT_IO, e.to_string()))?;
    if !json && !cli.quiet {
        let _ = writeln!(out, "{}", if passed { "all checks passed" } else { "some checks FAILED" });
    }
    Ok(if passed { 0 } else { EXIT_FAILED_CHECKS })
}

fn print_charges(path: &Path, lambda: Option<f64>) -> Result<u8, Failure> {
    let (header, state) = formats::load_state(path).map_err(|e| file_failure(path, e))?;
    let lambda = lambda.or(header.lambda).unwrap_or(1.0);
    let report = charges::report(&state, lambda)?;
    let mut w = ChargeWriter::new(io::stdout().lock(), state.components(), None)?;
    w.write(&report)?;
    let _ = w.finish()?;
    Ok(0)
}

fn soliton(cli: &Cli) -> Result<u8, Failure> {
    let Command::Soliton { c, a, t, velocity, lambda, components, length, n, out } = &cli.command else {
        unreachable!()
    };
    let grid = Grid::new(*length, *n)?;
    let spec = SolitonSpec::new(*c, *a, *velocity)?;
    let state = solitons::one_soliton(&spec, &grid, *t, *components)?;
    let v = solitons::velocity(&spec, &grid)?;
    let residual = solitons::residual_check(&spec, &grid, *t, *lambda)?;
    let report = format!("velocity {v:.12e}  residual {residual:.6e}");
    match out {
        Some(p) => {
            formats::save_state(p, &state, Some(*lambda), None).map_err(|e| file_failure(p, e))?;
            if !cli.quiet {
                println!("{report}");
            }
        }
        None => {
            formats::write_state(io::stdout().lock(), &state, Some(*lambda), None)?;
            if !cli.quiet {
                eprintln!("{report}");
            }
        }
    }
    Ok(0)
}
