//! Command-line front end.
//!
//! Exit codes: 0 success, 2 invalid input, 3 invariant violation, 4 no
//! threshold found.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::checks::{self, Check, ThresholdCheckConfig};
use crate::error::Error;
use crate::experiments::{bs_table, logical_bm_analytic, logical_bm_estimate, teleport_campaign};
use crate::ghz::{CorrectionTable, LogicalBellKind, LossPlacement, PauliCorrection, Teleporter};
use crate::report::{
    bs_table_csv, curves_csv, curves_json, threshold_json, threshold_table_csv, ReportEnvelope,
};
use crate::rng::StreamFactory;
use crate::schemes::{emit_curves, CurveOptions};
use crate::steane::{find_threshold, SearchConfig, SteaneCode, TelecorrectionConfig};

pub const OUT_DIR_ENV: &str = "GHZSIM_OUT_DIR";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;
pub const EXIT_NO_THRESHOLD: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "ghzsim",
    version,
    about = "GHZ-encoded photonic Bell measurement simulator"
)]
#[command(args_override_self = true)]
pub struct Cli {
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for Monte Carlo runs (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON object whose keys override command-line flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact outcome probabilities of the two-photon Bell analyser.
    BsTable,
    /// Success rate of the N-pair logical Bell measurement.
    LogicalBm(LogicalBmArgs),
    /// Teleportation of random logical qubits through a GHZ channel.
    Teleport(TeleportArgs),
    /// Success probability versus photon usage for four schemes.
    Curves(CurvesArgs),
    /// Loss threshold for one photon number.
    Threshold(ThresholdArgs),
    /// Thresholds for a range of photon numbers, next to reference values.
    ThresholdTable(ThresholdTableArgs),
    /// Runs the invariant checks at reduced sample counts.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct LogicalBmArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    /// Expose both qubits of every pair to loss instead of the first only.
    #[arg(long)]
    pub two_sided_loss: bool,
}

#[derive(Debug, Args)]
pub struct TeleportArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[arg(long, default_value_t = 20.0)]
    pub max_nbar: f64,
    #[arg(long, default_value_t = 2.0)]
    pub step: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Use the exponent -nbar/4 for the Ewert–van Loock curve.
    #[arg(long)]
    pub ewert_short_exponent: bool,
}

#[derive(Debug, Args, Clone)]
pub struct ThresholdOptions {
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub replicas: usize,
    #[arg(long, default_value_t = 1)]
    pub memory_steps: u32,
    #[arg(long)]
    pub no_offline_loss: bool,
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub n: usize,
    #[command(flatten)]
    pub opts: ThresholdOptions,
}

#[derive(Debug, Args)]
pub struct ThresholdTableArgs {
    #[arg(long, default_value_t = 3)]
    pub n_min: usize,
    #[arg(long, default_value_t = 8)]
    pub n_max: usize,
    #[command(flatten)]
    pub opts: ThresholdOptions,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Test fixture: swap in a wrong Pauli correction for psi+.
    #[arg(long, hide = true)]
    pub corrupt_corrections: bool,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(Error),
    Io(String),
    ChecksFailed,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self::Domain(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) | Self::Io(_) => EXIT_INVALID,
            Self::ChecksFailed => EXIT_INVARIANT,
            Self::Domain(e) => match e {
                Error::NoThresholdFound(_) => EXIT_NO_THRESHOLD,
                Error::ImpossibleOutcome(_)
                | Error::NonUnitary { .. }
                | Error::NotNormalized { .. }
                | Error::PhotonCapExceeded { .. }
                | Error::MalformedClicks(_) => EXIT_INVARIANT,
                _ => EXIT_INVALID,
            },
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(s) | Self::Io(s) => f.write_str(s),
            Self::Domain(e) => write!(f, "{e}"),
            Self::ChecksFailed => f.write_str("one or more checks failed"),
        }
    }
}

/// Appends `--key value` pairs from a JSON object so they override earlier
/// flags. Booleans become bare flags when true and are dropped when false.
pub fn config_args(path: &Path) -> Result<Vec<OsString>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let obj = value
        .as_object()
        .ok_or_else(|| CliError::Usage(format!("{}: expected a JSON object", path.display())))?;
    let mut out = Vec::new();
    for (key, v) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            Value::Bool(true) => out.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::Number(n) => {
                out.push(flag.into());
                out.push(n.to_string().into());
            }
            Value::String(s) => {
                out.push(flag.into());
                out.push(s.into());
            }
            _ => {
                return Err(CliError::Usage(format!(
                    "config key {key}: unsupported value"
                )))
            }
        }
    }
    Ok(out)
}

fn parse(args: Vec<OsString>) -> Result<Cli, clap::Error> {
    Cli::try_parse_from(args)
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let mut args: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let mut cli = match parse(args.clone()) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    if let Some(path) = cli.config.clone() {
        match config_args(&path) {
            Ok(extra) => args.extend(extra),
            Err(e) => {
                eprintln!("error: {e}");
                return e.exit_code();
            }
        }
        cli = match parse(args) {
            Ok(c) => c,
            Err(e) => {
                let _ = e.print();
                return EXIT_INVALID;
            }
        };
    }
    let start = Instant::now();
    let result = match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(t) => match rayon::ThreadPoolBuilder::new().num_threads(t).build() {
            Ok(pool) => pool.install(|| execute(&cli)),
            Err(e) => Err(CliError::Io(e.to_string())),
        },
        None => execute(&cli),
    };
    eprintln!("wall time: {:.3} s", start.elapsed().as_secs_f64());
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::BsTable => "bs-table",
        Command::LogicalBm(_) => "logical-bm",
        Command::Teleport(_) => "teleport",
        Command::Curves(_) => "curves",
        Command::Threshold(_) => "threshold",
        Command::ThresholdTable(_) => "threshold-table",
        Command::Verify(_) => "verify",
    }
}

fn emit(cli: &Cli, extension: &str, body: &str) -> Result<(), CliError> {
    let target = match (&cli.out, std::env::var_os(OUT_DIR_ENV)) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(dir)) => {
            Some(Path::new(&dir).join(format!("{}.{extension}", command_name(&cli.command))))
        }
        (None, None) => None,
    };
    match target {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)
                    .map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
            }
            std::fs::write(&path, body)
                .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn validate_eta(eta: f64) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(CliError::Usage(format!("--eta {eta} outside [0, 1]")));
    }
    Ok(())
}

fn validate_n(n: usize) -> Result<(), CliError> {
    if n == 0 || n > 64 {
        return Err(CliError::Usage(format!("--n {n} outside 1..=64")));
    }
    Ok(())
}

fn validate_samples(samples: u64) -> Result<(), CliError> {
    if samples == 0 {
        return Err(CliError::Usage("--samples must be positive".into()));
    }
    Ok(())
}

fn telecorrection(n: usize, o: &ThresholdOptions) -> TelecorrectionConfig {
    TelecorrectionConfig {
        memory_steps: o.memory_steps,
        offline_loss: !o.no_offline_loss,
        ..TelecorrectionConfig::new(n, o.samples, o.levels)
    }
}

fn search(o: &ThresholdOptions) -> SearchConfig {
    SearchConfig {
        replicas: o.replicas,
        seed: o.seed,
        ..Default::default()
    }
}

fn threshold_echo(n: usize, o: &ThresholdOptions) -> Value {
    let s = search(o);
    json!({
        "n_photons": n,
        "samples": o.samples,
        "levels": o.levels,
        "memory_steps": o.memory_steps,
        "offline_loss": !o.no_offline_loss,
        "replicas": o.replicas,
        "seed": o.seed,
        "eta_low": s.eta_low,
        "eta_high": s.eta_high,
        "bracket_ratio": s.bracket_ratio,
    })
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let name = command_name(&cli.command);
    match &cli.command {
        Command::BsTable => emit(cli, "csv", &bs_table_csv(&bs_table())),
        Command::LogicalBm(a) => {
            validate_n(a.n)?;
            validate_eta(a.eta)?;
            validate_samples(a.samples)?;
            let placement = if a.two_sided_loss {
                LossPlacement::BothQubits
            } else {
                LossPlacement::FirstQubit
            };
            let est = logical_bm_estimate(
                a.n,
                a.eta,
                placement,
                a.samples,
                &StreamFactory::new(a.seed),
            )?;
            let analytic = match placement {
                LossPlacement::FirstQubit => logical_bm_analytic(a.n, a.eta),
                LossPlacement::BothQubits => {
                    1.0 - crate::loss::bm_failure_prob_two_sided(a.n, a.eta)
                }
            };
            let config = json!({"n": a.n, "samples": a.samples, "seed": a.seed, "eta": a.eta, "loss_placement": placement});
            let result = json!({
                "n": a.n,
                "samples": est.samples,
                "successes": est.successes,
                "estimate": est.estimate,
                "stderr": est.stderr,
                "analytic": analytic,
            });
            emit(
                cli,
                "json",
                &ReportEnvelope::new(name, config, result).to_pretty(),
            )
        }
        Command::Teleport(a) => {
            validate_n(a.n)?;
            validate_eta(a.eta)?;
            validate_samples(a.samples)?;
            let s = teleport_campaign(
                a.n,
                a.eta,
                a.samples,
                &StreamFactory::new(a.seed),
                &Teleporter::default(),
            )?;
            let config = json!({"n": a.n, "eta": a.eta, "samples": a.samples, "seed": a.seed});
            let result = serde_json::to_value(s).expect("serializable");
            emit(
                cli,
                "json",
                &ReportEnvelope::new(name, config, result).to_pretty(),
            )
        }
        Command::Curves(a) => {
            let opts = CurveOptions {
                ewert_short_exponent: a.ewert_short_exponent,
            };
            let points = emit_curves(a.max_nbar, a.step, opts)?;
            match a.format {
                Format::Csv => emit(cli, "csv", &curves_csv(&points)),
                Format::Json => {
                    let config = json!({"max_nbar": a.max_nbar, "step": a.step, "ewert_short_exponent": a.ewert_short_exponent});
                    emit(
                        cli,
                        "json",
                        &ReportEnvelope::new(name, config, curves_json(&points)).to_pretty(),
                    )
                }
            }
        }
        Command::Threshold(a) => {
            validate_n(a.n)?;
            let cfg = telecorrection(a.n, &a.opts);
            let r = find_threshold(&SteaneCode::new(), &cfg, &search(&a.opts))?;
            let echo = threshold_echo(a.n, &a.opts);
            let result = threshold_json(&r, a.opts.samples, echo.clone());
            emit(
                cli,
                "json",
                &ReportEnvelope::new(name, echo, result).to_pretty(),
            )
        }
        Command::ThresholdTable(a) => {
            validate_n(a.n_min)?;
            validate_n(a.n_max)?;
            if a.n_min > a.n_max {
                return Err(CliError::Usage("--n-min exceeds --n-max".into()));
            }
            let code = SteaneCode::new();
            let results = (a.n_min..=a.n_max)
                .map(|n| find_threshold(&code, &telecorrection(n, &a.opts), &search(&a.opts)))
                .collect::<Result<Vec<_>, _>>()?;
            emit(cli, "csv", &threshold_table_csv(&results))
        }
        Command::Verify(a) => verify(cli, a),
    }
}

fn verify(cli: &Cli, a: &VerifyArgs) -> Result<(), CliError> {
    let teleporter = if a.corrupt_corrections {
        let table = CorrectionTable::default().with_entry(
            LogicalBellKind::PSI_PLUS,
            PauliCorrection { x: false, z: true },
        );
        Teleporter {
            corrections: table,
            ..Default::default()
        }
    } else {
        Teleporter::default()
    };
    let mut results: Vec<Check> = vec![checks::bs_exactness()];
    results.push(checks::logical_bm_success(20_000, a.seed, 4, 8)?);
    results.push(checks::teleportation(20_000, a.seed, &teleporter)?);
    results.push(checks::loss_law(10_000, a.seed)?);
    results.push(checks::scheme_curves());
    results.push(checks::decoder_exhaustive(&SteaneCode::new()));
    let scan = checks::threshold_scan(&ThresholdCheckConfig {
        samples: 2_000,
        levels: 3,
        replicas: 5,
        seed: a.seed,
        n_min: 4,
        n_max: 4,
    })?;
    let shape = checks::threshold_shape(&scan);
    results.push(Check {
        name: "threshold-n4".into(),
        ..shape
    });

    let body: String = results.iter().map(|c| c.line() + "\n").collect();
    emit(cli, "txt", &body)?;
    if results.iter().all(|c| c.passed) {
        Ok(())
    } else {
        Err(CliError::ChecksFailed)
    }
}
