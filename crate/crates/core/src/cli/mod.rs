//! `explab` command-line front end.
//!
//! Exit codes: 0 success, 1 computation error, 2 usage error.

pub mod verify;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::channel::{bhattacharyya_matrix, mutual_information, Channel, ChannelFile, InputDistribution};
use crate::ensemble::{run_concentration_experiment, EnsembleConfig, EnsembleKind, SimulationRun, MIN_DIAGNOSTIC_SAMPLES};
use crate::error::Error;
use crate::exponents::{critical_rate, e_ex, e_rce, e_sp, e_trc, e_trc_direct, TrcBranch};
use crate::format::sig12;
use crate::refdist::{kolmogorov_distance, ReferenceDistribution};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPUTE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable that overrides `--seed`.
pub const SEED_ENV: &str = "EXPLAB_SEED";
pub const DEFAULT_SEED: u64 = 20_190_801;

#[derive(Debug, Parser)]
#[command(name = "explab", version, about = "Error exponents and random-code concentration experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate E_rce, E_ex, E_sp and E_trc over a rate grid.
    Exponents(ExponentsArgs),
    /// Sample random codebooks and record the V_n/n exponent proxy.
    Simulate(SimulateArgs),
    /// Run a cross-check suite and report per-check residuals.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Nats,
    Bits,
}

impl Unit {
    pub fn scale(self) -> f64 {
        match self {
            Unit::Nats => 1.0,
            Unit::Bits => 1.0 / std::f64::consts::LN_2,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ChannelArgs {
    /// Channel file: {"W": [[...], ...], "Q": [...]} (Q optional)
    #[arg(long, conflicts_with = "bsc")]
    pub channel: Option<PathBuf>,
    /// Binary symmetric channel with this crossover probability
    #[arg(long)]
    pub bsc: Option<f64>,
    /// Input distribution: "uniform" or a file holding a JSON array or {"Q": [...]}
    #[arg(long)]
    pub q: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ExponentsArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    /// Single rate
    #[arg(long, conflicts_with = "rates")]
    pub rate: Option<f64>,
    /// Rate grid: "START:STOP:COUNT" (inclusive) or a comma-separated list.
    /// Defaults to 50 rates k*I/50, k = 0..49.
    #[arg(long)]
    pub rates: Option<String>,
    #[arg(long, value_enum, default_value_t = Unit::Nats)]
    pub unit: Unit,
    /// Write exponents.csv and manifest.json here instead of printing the table
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub channel: ChannelArgs,
    #[arg(long, default_value = "iid")]
    pub ensemble: EnsembleKind,
    /// Number of codewords
    #[arg(long, default_value_t = 4)]
    pub m: usize,
    /// Blocklength
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = crate::ensemble::DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long, value_enum, default_value_t = Unit::Nats)]
    pub unit: Unit,
    #[arg(long, default_value = "explab-out")]
    pub out: PathBuf,
    /// Worker cap; output does not depend on it
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// De Caen <= exact <= union on the tiny-code corpus
    Sandwich,
    /// closed form vs KKT solver vs grid oracle
    Trc,
    /// single-letter identities and exponent orderings
    Identities,
    All,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// Also write report.txt and manifest.json here
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Record of one invocation, written next to its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub unit: Option<Unit>,
    pub outputs: Vec<String>,
    pub duration_secs: f64,
}

/// A failure carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: message.into() }
    }
    fn compute(message: impl Into<String>) -> Self {
        CliError { code: EXIT_COMPUTE, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::compute(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::compute(format!("{}: {e}", path.display()))
}

pub fn resolve_channel(args: &ChannelArgs) -> Result<(Channel, InputDistribution), CliError> {
    let (ch, file_q) = match (&args.channel, args.bsc) {
        (Some(path), None) => ChannelFile::load(path).map_err(CliError::usage)?,
        (None, Some(p)) => (Channel::bsc(p).map_err(|e| CliError::usage(e.to_string()))?, None),
        (None, None) => return Err(CliError::usage("one of --channel or --bsc is required")),
        (Some(_), Some(_)) => return Err(CliError::usage("--channel and --bsc are exclusive")),
    };
    let q = match args.q.as_deref() {
        None => file_q.unwrap_or_else(|| InputDistribution::uniform(ch.input_size())),
        Some("uniform") => InputDistribution::uniform(ch.input_size()),
        Some(path) => load_q(Path::new(path))?,
    };
    if q.len() != ch.input_size() {
        return Err(CliError::usage(format!(
            "input distribution has {} entries, channel has {} inputs",
            q.len(),
            ch.input_size()
        )));
    }
    Ok((ch, q))
}

fn load_q(path: &Path) -> Result<InputDistribution, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let arr = value.get("Q").unwrap_or(&value);
    let q: Vec<f64> =
        serde_json::from_value(arr.clone()).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    InputDistribution::new(q).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

/// Parses `START:STOP:COUNT` or `a,b,c`.
pub fn parse_rates(spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::usage(format!("cannot parse rate grid '{spec}'"));
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if count == 0 {
            return Err(bad());
        }
        if count == 1 {
            return Ok(vec![start]);
        }
        return Ok((0..count).map(|k| start + (stop - start) * k as f64 / (count - 1) as f64).collect());
    }
    spec.split(',').map(|s| s.trim().parse::<f64>().map_err(|_| bad())).collect()
}

/// One row of the exponent table, in nats.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentRow {
    pub rate: f64,
    pub e_rce: f64,
    pub e_ex: f64,
    pub e_sp: Option<f64>,
    pub e_trc: f64,
    pub above_crit: bool,
    pub branch: Option<TrcBranch>,
}

pub const EXPONENT_HEADER: &str = "rate,E_rce,E_ex,E_sp,E_trc,above_R_crit,trc_branch";

/// Computes the table rows for rates in nats.
pub fn exponent_rows(ch: &Channel, q: &InputDistribution, rates: &[f64]) -> Result<Vec<ExponentRow>, CliError> {
    let capacity = mutual_information(ch, q)?;
    let r_crit = critical_rate(q, ch, EnsembleKind::Iid)?;
    // surfaces inadmissible channels before any row is computed
    bhattacharyya_matrix(ch)?;
    let mut rows = Vec::with_capacity(rates.len());
    for &rate in rates {
        if !(rate >= 0.0 && rate < capacity) {
            return Err(CliError::compute(format!(
                "rate {rate} nats is outside [0, I(Q,W)) = [0, {capacity})"
            )));
        }
        let e_sp = match e_sp(rate, q, ch) {
            Ok(p) => Some(p.value),
            Err(Error::Diverging { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        let above_crit = rate >= r_crit;
        let branch = if above_crit {
            Some(TrcBranch::HighRateRce)
        } else if rate > 0.0 {
            Some(e_trc_direct(rate, q, ch)?.branch)
        } else {
            None
        };
        rows.push(ExponentRow {
            rate,
            e_rce: e_rce(rate, q, ch, EnsembleKind::Iid)?.value,
            e_ex: e_ex(rate, q, ch)?.value,
            e_sp,
            e_trc: e_trc(rate, q, ch)?.value,
            above_crit,
            branch,
        });
    }
    Ok(rows)
}

pub fn exponent_csv(rows: &[ExponentRow], unit: Unit) -> String {
    let s = unit.scale();
    let mut out = String::from(EXPONENT_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            sig12(r.rate * s),
            sig12(r.e_rce * s),
            sig12(r.e_ex * s),
            r.e_sp.map_or("NA".to_string(), |v| sig12(v * s)),
            sig12(r.e_trc * s),
            r.above_crit as u8,
            r.branch.map_or("NA".to_string(), |b| b.to_string()),
        ));
    }
    out
}

fn write_file(dir: &Path, name: &str, contents: &str, outputs: &mut Vec<String>) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
    outputs.push(path.display().to_string());
    Ok(())
}

fn write_manifest(dir: &Path, mut manifest: RunManifest) -> Result<(), CliError> {
    let path = dir.join("manifest.json");
    manifest.outputs.push(path.display().to_string());
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text + "\n").map_err(|e| io_err(&path, e))
}

fn argv() -> Vec<String> {
    std::env::args().collect()
}

pub fn cmd_exponents(args: &ExponentsArgs) -> Result<String, CliError> {
    let start = Instant::now();
    let (ch, q) = resolve_channel(&args.channel)?;
    let scale = args.unit.scale();
    let rates_nats: Vec<f64> = match (&args.rate, &args.rates) {
        (Some(r), _) => vec![r / scale],
        (None, Some(spec)) => parse_rates(spec)?.into_iter().map(|r| r / scale).collect(),
        (None, None) => {
            let capacity = mutual_information(&ch, &q)?;
            (0..50).map(|k| capacity * k as f64 / 50.0).collect()
        }
    };
    let rows = exponent_rows(&ch, &q, &rates_nats)?;
    let csv = exponent_csv(&rows, args.unit);
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let mut outputs = Vec::new();
        write_file(dir, "exponents.csv", &csv, &mut outputs)?;
        let config = serde_json::json!({
            "W": ch.rows(),
            "Q": q.as_slice(),
            "rates_nats": rates_nats,
            "r_crit_nats": critical_rate(&q, &ch, EnsembleKind::Iid)?,
            "mutual_information_nats": mutual_information(&ch, &q)?,
        });
        write_manifest(
            dir,
            RunManifest {
                command: argv(),
                config,
                seed: None,
                unit: Some(args.unit),
                outputs,
                duration_secs: start.elapsed().as_secs_f64(),
            },
        )?;
    }
    Ok(csv)
}

/// Grid of `points` equally spaced abscissae over `mean +/- 6 sd`, with the
/// reference density rescaled to that location and scale.
pub fn reference_curve_csv(reference: &ReferenceDistribution, mean: f64, sd: f64, points: usize) -> String {
    let mut out = String::from("x,density\n");
    let points = points.max(2);
    for k in 0..points {
        let z = -6.0 + 12.0 * k as f64 / (points - 1) as f64;
        out.push_str(&format!("{},{}\n", sig12(mean + z * sd), sig12(reference.pdf(z) / sd)));
    }
    out
}

/// Kolmogorov distances of the normalized samples to the min-of-Gaussians law
/// with `L = M(M-1)` and to the standard Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    pub l: u32,
    pub ks_min_gauss: f64,
    pub ks_gauss: f64,
}

pub fn diagnostics(run: &SimulationRun) -> Result<Option<Diagnostics>, Error> {
    if run.samples.len() < MIN_DIAGNOSTIC_SAMPLES || run.variance <= 0.0 {
        return Ok(None);
    }
    let l = (run.config.m * (run.config.m - 1)) as u32;
    let z = run.normalized();
    let ks_min_gauss = kolmogorov_distance(&z, &ReferenceDistribution::normalized_min_of_gaussians(l)?)?;
    let ks_gauss = kolmogorov_distance(&z, &ReferenceDistribution::standard_gaussian())?;
    Ok(Some(Diagnostics { l, ks_min_gauss, ks_gauss }))
}

/// Output of [`cmd_simulate`].
pub struct SimulateOutcome {
    pub run: SimulationRun,
    pub diagnostics: Option<Diagnostics>,
    pub warnings: Vec<String>,
}

pub fn effective_seed(flag: u64) -> Result<u64, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| CliError::usage(format!("{SEED_ENV}='{v}' is not a u64"))),
        Err(_) => Ok(flag),
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<SimulateOutcome, CliError> {
    let start = Instant::now();
    let (ch, q) = resolve_channel(&args.channel)?;
    let d = bhattacharyya_matrix(&ch)?;
    let seed = effective_seed(args.seed)?;
    let config = EnsembleConfig::new(args.ensemble, q, args.n, args.m, args.trials, seed)
        .map_err(|e| CliError::usage(e.to_string()))?;
    if args.bins == 0 {
        return Err(CliError::usage("--bins must be positive"));
    }
    let run = match args.threads {
        Some(0) => return Err(CliError::usage("--threads must be positive")),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| CliError::compute(e.to_string()))?;
            pool.install(|| run_concentration_experiment(&config, &d, args.bins))
        }
        None => run_concentration_experiment(&config, &d, args.bins),
    };

    // everything written below is in the requested unit
    let scale = args.unit.scale();
    let scaled = SimulationRun::from_samples(
        run.config.clone(),
        run.samples.iter().map(|v| v * scale).collect(),
        args.bins,
    );
    let mut warnings = Vec::new();
    let diag = diagnostics(&scaled)?;
    if diag.is_none() {
        warnings.push(format!(
            "{} samples: distribution diagnostics are suppressed below {MIN_DIAGNOSTIC_SAMPLES} samples",
            scaled.samples.len()
        ));
    }

    let dir = &args.out;
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut outputs = Vec::new();
    write_file(dir, "samples.csv", &scaled.samples_csv(), &mut outputs)?;
    write_file(dir, "histogram.csv", &scaled.histogram_csv(), &mut outputs)?;
    let mut summary = scaled.to_json();
    summary["unit"] = serde_json::json!(args.unit);
    summary["diagnostics"] = serde_json::to_value(diag).expect("diagnostics serialize");
    write_file(dir, "run.json", &(serde_json::to_string_pretty(&summary).expect("json") + "\n"), &mut outputs)?;
    if scaled.variance > 0.0 {
        let (mean, sd) = (scaled.mean, scaled.std_dev());
        let l = (args.m * (args.m - 1)) as u32;
        write_file(
            dir,
            "reference_gaussian.csv",
            &reference_curve_csv(&ReferenceDistribution::standard_gaussian(), mean, sd, 241),
            &mut outputs,
        )?;
        write_file(
            dir,
            "reference_min_gauss.csv",
            &reference_curve_csv(&ReferenceDistribution::normalized_min_of_gaussians(l)?, mean, sd, 241),
            &mut outputs,
        )?;
    }
    let config_json = serde_json::json!({
        "W": ch.rows(),
        "Q": config.q.as_slice(),
        "ensemble": config.kind,
        "m": config.m,
        "n": config.n,
        "trials": config.trials,
        "bins": args.bins,
        "threads": args.threads,
    });
    write_manifest(
        dir,
        RunManifest {
            command: argv(),
            config: config_json,
            seed: Some(seed),
            unit: Some(args.unit),
            outputs,
            duration_secs: start.elapsed().as_secs_f64(),
        },
    )?;
    Ok(SimulateOutcome { run: scaled, diagnostics: diag, warnings })
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<verify::Report, CliError> {
    let start = Instant::now();
    let report = verify::run_suite(args.suite)?;
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let mut outputs = Vec::new();
        write_file(dir, "report.txt", &report.render(), &mut outputs)?;
        write_manifest(
            dir,
            RunManifest {
                command: argv(),
                config: serde_json::json!({ "suite": args.suite }),
                seed: None,
                unit: None,
                outputs,
                duration_secs: start.elapsed().as_secs_f64(),
            },
        )?;
    }
    Ok(report)
}

/// Parses `argv`, runs the command, prints results; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Exponents(a) => cmd_exponents(a).map(|csv| {
            if a.out.is_none() {
                print!("{csv}");
            }
            EXIT_OK
        }),
        Command::Simulate(a) => cmd_simulate(a).map(|o| {
            for w in &o.warnings {
                eprintln!("warning: {w}");
            }
            println!(
                "trials={} mean={} sd={} out={}",
                o.run.samples.len(),
                sig12(o.run.mean),
                sig12(o.run.std_dev()),
                a.out.display()
            );
            if let Some(d) = o.diagnostics {
                println!(
                    "kolmogorov distance: min-of-{} gaussians {}, gaussian {}",
                    d.l,
                    sig12(d.ks_min_gauss),
                    sig12(d.ks_gauss)
                );
            }
            EXIT_OK
        }),
        Command::Verify(a) => cmd_verify(a).map(|r| {
            print!("{}", r.render());
            if r.passed() {
                EXIT_OK
            } else {
                EXIT_COMPUTE
            }
        }),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_grid_parsing() {
        assert_eq!(parse_rates("0:0.3:4").unwrap().len(), 4);
        let r = parse_rates("0:0.3:4").unwrap();
        assert!((r[3] - 0.3).abs() < 1e-15 && r[0] == 0.0);
        assert_eq!(parse_rates("0.1, 0.2").unwrap(), vec![0.1, 0.2]);
        assert_eq!(parse_rates("0.5:1:1").unwrap(), vec![0.5]);
        assert!(parse_rates("0:1").is_err());
        assert!(parse_rates("a,b").is_err());
        assert!(parse_rates("0:1:0").is_err());
    }

    #[test]
    fn unknown_suite_is_usage_error() {
        assert_eq!(main_with_args(["explab", "verify", "nonsense"]), EXIT_USAGE);
        assert_eq!(main_with_args(["explab", "frobnicate"]), EXIT_USAGE);
    }

    #[test]
    fn channel_resolution() {
        let args = ChannelArgs { channel: None, bsc: None, q: None };
        assert_eq!(resolve_channel(&args).unwrap_err().code, EXIT_USAGE);
        let args = ChannelArgs { channel: None, bsc: Some(0.7), q: None };
        assert_eq!(resolve_channel(&args).unwrap_err().code, EXIT_USAGE);
        let args = ChannelArgs { channel: None, bsc: Some(0.11), q: Some("uniform".into()) };
        let (ch, q) = resolve_channel(&args).unwrap();
        assert_eq!(ch.as_bsc(), Some(0.11));
        assert_eq!(q.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn rate_beyond_capacity_names_the_rate() {
        let ch = Channel::bsc(0.11).unwrap();
        let q = InputDistribution::uniform(2);
        let err = exponent_rows(&ch, &q, &[0.1, 0.5]).unwrap_err();
        assert_eq!(err.code, EXIT_COMPUTE);
        assert!(err.message.contains("0.5"), "{}", err.message);
    }

    #[test]
    fn reference_curve_integrates_to_one() {
        let r = ReferenceDistribution::normalized_min_of_gaussians(12).unwrap();
        let csv = reference_curve_csv(&r, 0.23, 0.002, 2001);
        let pts: Vec<(f64, f64)> = csv
            .lines()
            .skip(1)
            .map(|l| {
                let mut it = l.split(',').map(|v| v.parse::<f64>().unwrap());
                (it.next().unwrap(), it.next().unwrap())
            })
            .collect();
        let area: f64 = pts.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0)).sum();
        assert!((area - 1.0).abs() < 1e-3, "{area}");
    }
}
