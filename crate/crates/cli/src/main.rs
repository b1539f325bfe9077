use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use jsoq_cli::output::{fmt_f64, to_csv, to_json};
use jsoq_cli::*;

// Exit codes: 0 success, 2 bad flags (clap), then one code per failure class.
const EXIT_UNSTABLE: u8 = 3;
const EXIT_CONVERGENCE: u8 = 4;
const EXIT_COMPARISON: u8 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn parse_box(s: &str) -> Result<(usize, usize), String> {
    let (m, n) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected MxN, got {s}"))?;
    Ok((
        m.trim().parse().map_err(|e| format!("bad box: {e}"))?,
        n.trim().parse().map_err(|e| format!("bad box: {e}"))?,
    ))
}

/// Exact, brute-force and simulated stationary analysis of a two-orbit
/// retrial queue with join-the-shortest-orbit routing.
#[derive(Parser, Debug)]
#[command(name = "jsoq", version, about)]
struct Cli {
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Output path; standard output when omitted
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// JSON run description used instead of a subcommand
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact stationary probabilities via the compensation series
    Solve {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_TERMS)]
        max_terms: usize,
        #[arg(long, value_parser = parse_box, default_value = "4x4")]
        r#box: (usize, usize),
    },
    /// Stationary probabilities of the truncated chain (ground truth)
    Oracle {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_N_TRUNC)]
        n_trunc: usize,
        #[arg(long, value_parser = parse_box, default_value = "4x4")]
        r#box: (usize, usize),
    },
    /// Discrete-event simulation with replication confidence intervals
    Simulate {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 1e6)]
        horizon: f64,
        #[arg(long, default_value_t = 1e4)]
        warmup: f64,
        #[arg(long, default_value_t = 10)]
        replications: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_parser = parse_box, default_value = "4x4")]
        r#box: (usize, usize),
    },
    /// Compensation vs oracle (and optionally simulation) on a box
    Compare {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_N_TRUNC)]
        n_trunc: usize,
        #[arg(long, value_parser = parse_box, default_value = "10x10")]
        r#box: (usize, usize),
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Also run the simulator and report interval coverage
        #[arg(long)]
        sim: bool,
        #[arg(long, default_value_t = 1e6)]
        horizon: f64,
        #[arg(long, default_value_t = 1e4)]
        warmup: f64,
        #[arg(long, default_value_t = 10)]
        replications: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Tail decay-rate estimates and the spectral verification
    Decay {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_N_TRUNC)]
        n_trunc: usize,
    },
    /// The reference table: q_{0,n} for lambda in {2,3,4}, mu=10, alpha=3
    Table1 {
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Empty-system probability q(0,0,0) over a lambda grid per alpha
    Sweep {
        #[arg(long, default_value_t = 10.0)]
        mu: f64,
        #[arg(long, value_delimiter = ',', default_value = "5,8,10")]
        alphas: Vec<f64>,
        #[arg(long, default_value_t = 0.5)]
        lambda_min: f64,
        #[arg(long, default_value_t = 40)]
        points: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

impl Command {
    fn into_spec(self) -> RunSpec {
        match self {
            Command::Solve {
                lambda,
                mu,
                alpha,
                tol,
                max_terms,
                r#box,
            } => RunSpec::Solve(SolveArgs {
                lambda,
                mu,
                alpha,
                tol,
                max_terms,
                r#box,
            }),
            Command::Oracle {
                lambda,
                mu,
                alpha,
                n_trunc,
                r#box,
            } => RunSpec::Oracle(OracleArgs {
                lambda,
                mu,
                alpha,
                n_trunc,
                r#box,
            }),
            Command::Simulate {
                lambda,
                mu,
                alpha,
                horizon,
                warmup,
                replications,
                seed,
                r#box,
            } => RunSpec::Simulate(SimArgs {
                lambda,
                mu,
                alpha,
                horizon,
                warmup,
                replications,
                seed,
                r#box,
            }),
            Command::Compare {
                lambda,
                mu,
                alpha,
                n_trunc,
                r#box,
                tol,
                sim,
                horizon,
                warmup,
                replications,
                seed,
            } => RunSpec::Compare(CompareArgs {
                lambda,
                mu,
                alpha,
                n_trunc,
                r#box,
                tol,
                sim,
                horizon,
                warmup,
                replications,
                seed,
            }),
            Command::Decay {
                lambda,
                mu,
                alpha,
                n_trunc,
            } => RunSpec::Decay(DecayArgs {
                lambda,
                mu,
                alpha,
                n_trunc,
            }),
            Command::Table1 { tol } => RunSpec::Table1(Table1Args { tol }),
            Command::Sweep {
                mu,
                alphas,
                lambda_min,
                points,
                tol,
            } => RunSpec::Sweep(SweepArgs {
                mu,
                alphas,
                lambda_min,
                points,
                lambda_grid: None,
                tol,
            }),
        }
    }
}

fn emit(format: Format, output: &Option<PathBuf>, json: String, csv: String) -> anyhow::Result<()> {
    let body = match format {
        Format::Json => json,
        Format::Csv => csv,
    };
    match output {
        Some(path) => fs::write(path, body)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            if !body.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn decay_csv(report: &DecayReport) -> String {
    to_csv(
        "n,k,estimate,abs_error",
        report.estimates.iter().map(|r| {
            vec![
                r.n.to_string(),
                r.k.to_string(),
                fmt_f64(r.estimate),
                fmt_f64(r.abs_error),
            ]
        }),
    )
}

fn compare_csv(report: &CompareReport) -> String {
    to_csv(
        "m,n,k,compensation,oracle,abs_diff",
        report.rows.iter().map(|r| {
            vec![
                r.m.to_string(),
                r.n.to_string(),
                r.k.to_string(),
                fmt_f64(r.compensation),
                fmt_f64(r.oracle),
                fmt_f64(r.abs_diff),
            ]
        }),
    )
}

fn sim_csv(report: &SimReport) -> String {
    to_csv(
        "m,n,k,probability",
        report.states.iter().map(|r| {
            vec![
                r.m.to_string(),
                r.n.to_string(),
                r.k.to_string(),
                fmt_f64(r.probability),
            ]
        }),
    )
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    let spec = if let Some(path) = &cli.config {
        let text = fs::read_to_string(path)?;
        serde_json::from_str::<RunSpec>(&text)?
    } else if let Some(command) = cli.command {
        command.into_spec()
    } else {
        anyhow::bail!("either a subcommand or --config is required; see --help");
    };

    let mut exit = 0u8;
    let (json, csv) = match &spec {
        RunSpec::Solve(args) => {
            let report = cmd_solve(args)?;
            (to_json(&report)?, prob_rows_csv(&report.probabilities))
        }
        RunSpec::Oracle(args) => {
            let report = cmd_oracle(args)?;
            (to_json(&report)?, prob_rows_csv(&report.probabilities))
        }
        RunSpec::Simulate(args) => {
            let report = cmd_simulate(args)?;
            (to_json(&report)?, sim_csv(&report))
        }
        RunSpec::Compare(args) => {
            let report = cmd_compare(args)?;
            if !report.agreement {
                eprintln!(
                    "comparison failure: max |compensation - oracle| = {:e} exceeds {:e}",
                    report.max_abs_diff, report.gate
                );
                exit = EXIT_COMPARISON;
            }
            (to_json(&report)?, compare_csv(&report))
        }
        RunSpec::Decay(args) => {
            let report = cmd_decay(args)?;
            (to_json(&report)?, decay_csv(&report))
        }
        RunSpec::Table1(args) => {
            let report = cmd_table1(args)?;
            (to_json(&report)?, table1_csv(&report))
        }
        RunSpec::Sweep(args) => {
            let report = cmd_sweep(args)?;
            (to_json(&report)?, sweep_csv(&report))
        }
    };
    emit(cli.format, &cli.output, json, csv)?;
    Ok(exit)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.config.is_some() && cli.command.is_some() {
        eprintln!("error: --config and a subcommand cannot be combined");
        return ExitCode::from(2);
    }
    if cli.config.is_none() && cli.command.is_none() {
        eprintln!("error: either a subcommand or --config is required; see --help");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            let code = match err.downcast_ref::<jsoq::Error>() {
                Some(jsoq::Error::Unstable { .. }) => EXIT_UNSTABLE,
                Some(
                    jsoq::Error::Truncation { .. }
                    | jsoq::Error::SolverResidual { .. }
                    | jsoq::Error::Normalization(_)
                    | jsoq::Error::TruncationTooCoarse { .. },
                ) => EXIT_CONVERGENCE,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
