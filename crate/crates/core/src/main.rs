use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use fomult::bounds_cli::{
    self, coeff_table, dims_table, parse_suites, run_report, write_rows_csv, BoundReport, Config, Format, Settings, Suite,
};
use fomult::Error;

/// Quantum dimensions, coefficient tables, cb-norm bounds and oracle checks for O_N^+.
#[derive(Debug, Parser)]
#[command(name = "fomult", version)]
struct Cli {
    #[command(flatten)]
    opts: Opts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Quantum dimensions and fusion with the fundamental representation.
    Dims,
    /// Coefficient tables with the exact identity and inequality checks.
    Coeffs,
    /// Bound table R(d) <= refined <= P(d) and the SO_q(3) table.
    Bounds,
    /// Net coefficients, the K_0 estimate and tail sums.
    Net,
    /// Tensor-oracle and GNS block suites (needs an integer N >= 3).
    Verify,
    /// Every configured suite.
    Report,
}

#[derive(Debug, Args)]
struct Opts {
    /// Kac parameter N (delta = N).
    #[arg(long, global = true, env = "FOMULT_N", conflicts_with = "delta")]
    n: Option<u32>,
    /// Deformation parameter delta as p/q, an integer or a decimal.
    #[arg(long, global = true, env = "FOMULT_DELTA")]
    delta: Option<String>,
    #[arg(long, global = true, env = "FOMULT_DMAX")]
    dmax: Option<usize>,
    #[arg(long, global = true, env = "FOMULT_KMAX")]
    kmax: Option<usize>,
    /// Truncation size for the translation operators.
    #[arg(long, global = true, env = "FOMULT_TRUNC")]
    trunc: Option<usize>,
    #[arg(long, global = true, env = "FOMULT_DEGREE_CAP")]
    degree_cap: Option<usize>,
    #[arg(long, global = true, env = "FOMULT_SEED")]
    seed: Option<u64>,
    #[arg(long, global = true, env = "FOMULT_TOL")]
    tol: Option<f64>,
    #[arg(long, global = true, env = "FOMULT_FORMAT", value_parser = parse_format)]
    format: Option<Format>,
    #[arg(long, global = true, env = "FOMULT_OUT")]
    out: Option<PathBuf>,
    /// key = value file using the flag names; flags and environment take precedence.
    #[arg(long, global = true, env = "FOMULT_CONFIG")]
    config: Option<PathBuf>,
    /// Comma-separated suites for `report`.
    #[arg(long, global = true, env = "FOMULT_SUITES", value_parser = parse_suite_list)]
    suites: Option<SuiteList>,
    /// Net parameter t.
    #[arg(long, global = true, env = "FOMULT_T")]
    t: Option<f64>,
    /// Lower end of the t-range used for the K_0 estimate.
    #[arg(long, global = true, env = "FOMULT_T0")]
    t0: Option<f64>,
    /// Threshold for the reported tail-sum cutoff index.
    #[arg(long, global = true, env = "FOMULT_CUTOFF")]
    cutoff: Option<f64>,
    /// K_max of the GNS truncation.
    #[arg(long, global = true, env = "FOMULT_GNS_KMAX")]
    gns_kmax: Option<usize>,
    /// Number of random seeds in the block suite.
    #[arg(long, global = true, env = "FOMULT_SEEDS")]
    seeds: Option<usize>,
    /// Largest auxiliary dimension in the block suite.
    #[arg(long, global = true, env = "FOMULT_AUX_DIM")]
    aux_dim: Option<usize>,
}

#[derive(Debug, Clone)]
struct SuiteList(Vec<Suite>);

fn parse_suite_list(s: &str) -> Result<SuiteList, String> {
    parse_suites(s).map(SuiteList)
}

fn parse_format(s: &str) -> Result<Format, String> {
    s.parse()
}

impl Opts {
    fn settings(&self) -> Settings {
        Settings {
            n: self.n,
            delta: self.delta.clone(),
            dmax: self.dmax,
            kmax: self.kmax,
            trunc: self.trunc,
            degree_cap: self.degree_cap,
            seed: self.seed,
            tol: self.tol,
            format: self.format,
            out: self.out.clone(),
            suites: self.suites.as_ref().map(|s| s.0.clone()),
            t: self.t,
            t0: self.t0,
            cutoff: self.cutoff,
            gns_kmax: self.gns_kmax,
            seeds: self.seeds,
            aux_dim: self.aux_dim,
        }
    }
}

fn load(opts: &Opts) -> Result<Config, Error> {
    let file = match &opts.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config { line: None, field: Some("config".into()), message: format!("{}: {e}", path.display()) })?;
            Settings::parse_config(&text)?
        }
        None => Settings::default(),
    };
    opts.settings().or(file).resolve()
}

fn emit(config: &Config, write: impl FnOnce(&mut dyn Write) -> Result<(), Error>) -> Result<(), Error> {
    match &config.out {
        Some(path) => {
            let mut file = io::BufWriter::new(fs::File::create(path)?);
            write(&mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            write(&mut lock)?;
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(config: &Config, value: &T) -> Result<(), Error> {
    emit(config, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}

#[derive(Serialize)]
struct NetRow {
    family: &'static str,
    t: f64,
    k: usize,
    b_k: f64,
}

fn with_suites(config: &Config, suites: &[Suite]) -> Config {
    Config {
        suites: suites.to_vec(),
        ..config.clone()
    }
}

fn summarize(report: &BoundReport) {
    let failures: usize = report.suites.iter().map(|s| s.report.failures().count()).sum();
    let skipped: usize = report.suites.iter().map(|s| s.report.skipped.len()).sum();
    eprintln!("{} checks, {failures} failed, {skipped} skipped", report.check_count());
    for s in &report.suites {
        if let Some(e) = &s.error {
            eprintln!("suite {}: {e}", s.suite);
        }
        for c in s.report.failures().take(10) {
            eprintln!("FAIL {} {:?} lhs={} rhs={} margin={}", c.name, c.indices, c.lhs, c.rhs, c.margin);
        }
    }
}

fn run(cli: &Cli) -> Result<bool, Error> {
    let config = load(&cli.opts)?;
    let report = match cli.command {
        Command::Dims => {
            let rows = dims_table(&config.param, config.dmax);
            match config.format {
                Format::Json => emit_json(&config, &rows)?,
                Format::Csv => emit(&config, |w| write_rows_csv(&rows, w))?,
            }
            return Ok(true);
        }
        Command::Coeffs => {
            let rows = coeff_table(&config.param, config.dmax, config.kmax)?;
            let report = run_report(&with_suites(&config, &[Suite::Identities, Suite::Inequalities]));
            match config.format {
                Format::Json => emit_json(&config, &serde_json::json!({ "table": rows, "suites": report.suites }))?,
                Format::Csv => emit(&config, |w| write_rows_csv(&rows, w))?,
            }
            report
        }
        Command::Net => {
            let report = run_report(&with_suites(&config, &[Suite::Nets]));
            match config.format {
                Format::Json => emit_json(&config, &report)?,
                Format::Csv => {
                    let rows: Vec<NetRow> = report
                        .nets
                        .iter()
                        .flat_map(|net| {
                            let family = match net.spec.family {
                                bounds_cli::NetFamily::FreeOrthogonal { .. } => "free_orthogonal",
                                bounds_cli::NetFamily::QuantumAutomorphism { .. } => "quantum_automorphism",
                            };
                            net.table.iter().map(move |&(k, b_k)| NetRow { family, t: net.spec.t, k, b_k })
                        })
                        .collect();
                    emit(&config, |w| write_rows_csv(&rows, w))?
                }
            }
            report
        }
        Command::Bounds | Command::Verify | Command::Report => {
            let config = match cli.command {
                Command::Bounds => with_suites(&config, &[Suite::Bounds]),
                Command::Verify => with_suites(&config, &[Suite::Tensor, Suite::Blocks]),
                _ => config,
            };
            let report = run_report(&config);
            match config.format {
                Format::Json => emit_json(&config, &report)?,
                Format::Csv => emit(&config, |w| report.write_csv(w))?,
            }
            report
        }
    };
    summarize(&report);
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ Error::Config { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
