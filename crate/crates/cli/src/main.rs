use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nilcorr_cli::config::{parse_config, Config};
use nilcorr_cli::experiment::{run, Command, Environment, Failure, Overrides, Report};

/// Multicorrelation sequences, fractional-part densities and nilsequence
/// approximants.
#[derive(Parser, Debug)]
#[command(name = "nilcorr", version)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory; defaults to `[output] dir` or `nilcorr-out`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads; overrides NILCORR_THREADS.
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug)]
enum Sub {
    /// Tabulate alpha(n) over `[correlation] range`.
    Correlate,
    /// Average alpha(n) under Cesàro or prime schemes.
    Average(AverageArgs),
    /// Fractional-part hit densities of a scalar polynomial.
    Equidist(EquidistArgs),
    /// Compare alpha(n) with the suspension correlation.
    Suspend,
    /// Averaged distance between alpha and a nilsequence candidate.
    ApproxError,
    /// The worked example with its constructive approximant.
    Example,
}

#[derive(Args, Debug)]
struct AverageArgs {
    /// Cesàro average over `[M, N)`.
    #[arg(long, value_name = "M:N", value_parser = pair)]
    cesaro: Option<(i128, i128)>,
    /// Prime average over `p <= N`.
    #[arg(long, value_name = "N")]
    primes: Option<u64>,
    /// Evaluate at `rp + s`.
    #[arg(long, value_name = "r:s", value_parser = pair, requires = "primes")]
    ap: Option<(i128, i128)>,
}

#[derive(Args, Debug)]
struct EquidistArgs {
    /// Scalar polynomial literal, e.g. `sqrt(2)*x^2`.
    #[arg(long)]
    poly: Option<String>,
    /// Threshold in (0,1); repeat for a descending grid.
    #[arg(long)]
    delta: Vec<f64>,
    /// Index window `[M, N)`.
    #[arg(long, value_name = "M:N", value_parser = pair, conflicts_with = "primes")]
    range: Option<(i128, i128)>,
    /// Primes `p <= N`.
    #[arg(long, value_name = "N")]
    primes: Option<u64>,
    /// Evaluate at `rp + s`.
    #[arg(long, value_name = "r:s", value_parser = pair, requires = "primes")]
    ap: Option<(i128, i128)>,
}

fn pair(s: &str) -> Result<(i128, i128), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected A:B, got `{s}`"))?;
    let parse = |t: &str| t.trim().parse::<i128>().map_err(|e| format!("`{t}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn threads(flag: Option<usize>) -> Result<Option<usize>, String> {
    if let Some(k) = flag {
        return if k >= 1 { Ok(Some(k)) } else { Err("--threads must be ≥ 1".into()) };
    }
    match std::env::var("NILCORR_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&k| k >= 1)
            .map(Some)
            .ok_or_else(|| format!("NILCORR_THREADS must be a positive integer, got `{v}`")),
        Err(_) => Ok(None),
    }
}

fn write_outputs(dir: &Path, command: Command, config: Option<&Path>, report: &Report) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(&report.csv_name), &report.csv)?;
    let mut summary = format!("command: {}\n", command.name());
    if let Some(path) = config {
        summary.push_str(&format!("config: {}\n", path.display()));
    }
    for line in &report.summary {
        summary.push_str(line);
        summary.push('\n');
    }
    summary.push_str("note: every figure is a finite computation; limits are not certified by it\n");
    std::fs::write(dir.join("summary.txt"), summary)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Validation(errors) => {
                    for e in errors {
                        eprintln!("error: {e}");
                    }
                }
                Failure::Runtime(message) => eprintln!("error: {message}"),
            }
            ExitCode::from(f.exit_code() as u8)
        }
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let k = threads(cli.threads).map_err(|m| Failure::Validation(vec![nilcorr_cli::config::ConfigError::new(m)]))?;
    if let Some(k) = k {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| Failure::Runtime(format!("thread pool: {e}")))?;
    }
    let (config, source) = match &cli.config {
        Some(path) => {
            let source = std::fs::read_to_string(path)
                .map_err(|e| Failure::Runtime(format!("reading {}: {e}", path.display())))?;
            (parse_config(&source)?, source)
        }
        None => (Config::default(), String::new()),
    };
    let mut overrides = Overrides::default();
    let command = match cli.command {
        Sub::Correlate => Command::Correlate,
        Sub::Average(a) => {
            overrides.cesaro = a.cesaro;
            overrides.primes = a.primes;
            overrides.ap = a.ap;
            Command::Average
        }
        Sub::Equidist(a) => {
            overrides.poly = a.poly;
            overrides.deltas = a.delta;
            overrides.range = a.range;
            overrides.primes = a.primes;
            overrides.ap = a.ap;
            Command::Equidist
        }
        Sub::Suspend => Command::Suspend,
        Sub::ApproxError => Command::ApproxError,
        Sub::Example => Command::Example,
    };
    let env = Environment {
        sieve_cache: std::env::var_os("NILCORR_SIEVE_CACHE")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("./.sieve")),
    };
    let report = run(command, &config, &source, &overrides, &env)?;
    let out = cli
        .out
        .or_else(|| config.output.as_ref().map(|o| PathBuf::from(&o.dir)))
        .unwrap_or_else(|| PathBuf::from("nilcorr-out"));
    write_outputs(&out, command, cli.config.as_deref(), &report)
        .map_err(|e| Failure::Runtime(format!("writing {}: {e}", out.display())))?;
    println!("{}", out.join(&report.csv_name).display());
    Ok(())
}
