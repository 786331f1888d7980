//! `hbridge`: reproducible bridge and h-transform experiments.
//!
//! Exit status is 0 when every assertion passes, 1 when one fails (the JSON
//! report then carries a `failure` entry naming the invariant), and 2 for
//! usage or configuration errors.

// `!(a < b)` is used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod error;
mod report;

use std::collections::BTreeMap;
use std::io::Write;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use serde_json::{Map, Value};

use crate::config::{parse_config_text, Settings};
use crate::error::CliError;
use crate::report::{error_report, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    VerifyKernels,
    VerifyChain,
    SampleBridge,
    CompareBridges,
    ExtractPsi,
    BesselDemo,
    SdeCrosscheck,
}

impl Command {
    fn name(self) -> String {
        self.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
    }
}

/// Bridge laws, Doob h-transforms and their numerical checks.
///
/// Every setting can also be given in a `key = value` config file; flags
/// take precedence over the file.
#[derive(Debug, Parser)]
#[command(name = "hbridge", version, allow_negative_numbers = true)]
struct Cli {
    /// Experiment to run (or `command` in the config file).
    #[arg(value_enum)]
    command: Option<Command>,

    /// Config file of `key = value` lines; `#` starts a comment.
    #[arg(long)]
    config: Option<String>,

    /// Kernel id: gaussian, drift:k, tanh:k:c, bessel3, flipbessel:X|Y.
    #[arg(long)]
    kernel: Option<String>,
    /// First kernel of a comparison.
    #[arg(long)]
    a: Option<String>,
    /// Second kernel of a comparison.
    #[arg(long)]
    b: Option<String>,
    /// Start point (a state index for verify-chain).
    #[arg(long)]
    x: Option<String>,
    /// Horizon.
    #[arg(long)]
    t: Option<String>,
    /// End point (a state index for verify-chain).
    #[arg(long)]
    y: Option<String>,
    /// Number of samples.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// Tolerance of the deterministic checks.
    #[arg(long)]
    tol: Option<String>,
    /// Significance level of the statistical tests.
    #[arg(long)]
    alpha: Option<String>,
    /// Interval count, or comma-separated times from 0 to t.
    #[arg(long)]
    grid: Option<String>,
    /// Bridge sampler: auto or generic.
    #[arg(long)]
    route: Option<String>,
    #[arg(long)]
    permutations: Option<String>,
    /// Paths per side in the energy test.
    #[arg(long)]
    energy_n: Option<String>,
    /// Euler step.
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    bins: Option<String>,
    /// Chain file or random:n:seed.
    #[arg(long)]
    chain: Option<String>,
    /// Second chain; defaults to the h-transform of the first.
    #[arg(long)]
    chain_b: Option<String>,
    #[arg(long)]
    z_min: Option<String>,
    #[arg(long)]
    z_max: Option<String>,
    #[arg(long)]
    points: Option<String>,
    /// Write the JSON report here as well as to stdout.
    #[arg(long)]
    out: Option<String>,
    /// Write the CSV table of the experiment here.
    #[arg(long)]
    csv: Option<String>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<String>,
}

impl Cli {
    fn flags(&self) -> BTreeMap<String, String> {
        let pairs = [
            ("kernel", &self.kernel),
            ("a", &self.a),
            ("b", &self.b),
            ("x", &self.x),
            ("t", &self.t),
            ("y", &self.y),
            ("n", &self.n),
            ("seed", &self.seed),
            ("tol", &self.tol),
            ("alpha", &self.alpha),
            ("grid", &self.grid),
            ("route", &self.route),
            ("permutations", &self.permutations),
            ("energy_n", &self.energy_n),
            ("dt", &self.dt),
            ("bins", &self.bins),
            ("chain", &self.chain),
            ("chain_b", &self.chain_b),
            ("z_min", &self.z_min),
            ("z_max", &self.z_max),
            ("points", &self.points),
            ("out", &self.out),
            ("csv", &self.csv),
            ("threads", &self.threads),
        ];
        let mut out: BTreeMap<String, String> =
            pairs.into_iter().filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v))).collect();
        if let Some(c) = self.command {
            out.insert("command".into(), c.name());
        }
        out
    }
}

fn settings(cli: &Cli) -> Result<(Command, Settings), CliError> {
    let file = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{path}: {e}")))?;
            parse_config_text(&text)?
        }
        None => BTreeMap::new(),
    };
    let s = Settings::new(file, cli.flags());
    let name = s.raw("command").ok_or_else(|| CliError::Usage("no command given".into()))?;
    let command = Command::from_str(name, true).map_err(|_| CliError::Usage(format!("unknown command {name:?}")))?;
    Ok((command, s))
}

fn set_threads(s: &Settings) -> Result<(), CliError> {
    if let Some(n) = s.parsed::<usize>("threads")? {
        if n == 0 {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(command: Command, s: &Settings) -> Result<Report, CliError> {
    set_threads(s)?;
    let config: Map<String, Value> = s.all().iter().map(|(k, v)| (k.clone(), Value::String(v.clone()))).collect();
    let mut report = Report::new(&command.name(), config);
    match command {
        Command::VerifyKernels => commands::verify_kernels(s, &mut report)?,
        Command::VerifyChain => commands::verify_chain(s, &mut report)?,
        Command::SampleBridge => commands::sample_bridge(s, &mut report)?,
        Command::CompareBridges => commands::compare_bridges(s, &mut report)?,
        Command::ExtractPsi => commands::extract_psi_cmd(s, &mut report)?,
        Command::BesselDemo => commands::bessel_demo(s, &mut report)?,
        Command::SdeCrosscheck => commands::sde_crosscheck(s, &mut report)?,
    }
    Ok(report)
}

fn emit(value: &Value, out: Option<&str>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.into()))?;
    // A closed stdout (e.g. piped into `head`) is not an error of the run.
    let _ = writeln!(std::io::stdout().lock(), "{text}");
    if let Some(path) = out {
        std::fs::write(path, format!("{text}\n"))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (command, s) = match settings(&cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("hbridge: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let name = command.name();
    match run(command, &s) {
        Ok(report) => {
            let value = report.to_json(true);
            if let Err(e) = emit(&value, s.raw("out")) {
                eprintln!("hbridge: {e}");
                return ExitCode::from(e.exit_code());
            }
            ExitCode::from(if report.passed() { 0 } else { 1 })
        }
        Err(e) => {
            let code = e.exit_code();
            eprintln!("hbridge: {e}");
            let _ = emit(&error_report(&name, code, &e.to_string()), s.raw("out"));
            ExitCode::from(code)
        }
    }
}
