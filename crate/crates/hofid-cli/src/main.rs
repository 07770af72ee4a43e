//! Command-line front end: problem selection, solver configuration, JSON,
//! CSV and table output, and recomputation of the built-in reference tables.

mod output;
mod repro;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hofid::{catalog, solve, EndpointPolicy, SolverConfig};
use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "hofid",
    version,
    about = "Sturm-Liouville eigensolver: adaptive high-order finite differences"
)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    #[command(flatten)]
    run: RunArgs,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Recompute a built-in reference table and compare row by row
    Repro {
        /// Table number, 1 to 4
        table: u8,
    },
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// Problem name: mathieu, pruess, airy, laguerre, sine
    #[arg(long)]
    problem: Option<String>,

    /// Problem parameter, repeatable: --param c=5
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,

    /// Eigenvalue index (0-based)
    #[arg(short, long)]
    k: Option<usize>,

    /// Inclusive index range, e.g. 0..5
    #[arg(long = "k-range", value_name = "A..B", conflicts_with = "k")]
    k_range: Option<String>,

    /// Comma-separated even orders for the cascade, e.g. 6,8,10
    #[arg(long, value_delimiter = ',')]
    orders: Option<Vec<usize>>,

    /// Comma-separated exit tolerances matching --orders
    #[arg(long, value_delimiter = ',')]
    tols: Option<Vec<f64>>,

    /// Initial mesh interval count
    #[arg(long)]
    n0: Option<usize>,

    /// Truncation offset for problems with a singular or infinite endpoint
    /// (shorthand for --param delta=...)
    #[arg(long)]
    delta: Option<f64>,

    /// Treatment of truncated singular endpoints
    #[arg(long, value_enum, default_value_t = PolicyArg::Dirichlet)]
    endpoint_policy: PolicyArg,

    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,

    /// Write the result here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,

    /// Trace every mesh iteration to stderr
    #[arg(short, long)]
    verbose: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum PolicyArg {
    Dirichlet,
    Equation,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
    Table,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let informational =
                matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if informational {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn parse_k_range(spec: &str) -> Result<Vec<usize>> {
    let (a, b) = spec
        .split_once("..")
        .ok_or_else(|| anyhow!("--k-range expects A..B, got '{spec}'"))?;
    let a: usize = a.trim().parse().context("range start")?;
    let b: usize = b
        .trim()
        .trim_start_matches('=')
        .parse()
        .context("range end")?;
    if b < a {
        bail!("empty k range {a}..{b}");
    }
    Ok((a..=b).collect())
}

/// Tolerance ladder for a cascade the user gave no --tols for: two decades
/// per stage, ending at 1e-8.
fn default_tols(stages: usize) -> Vec<f64> {
    (0..stages)
        .map(|i| 1e-8 * 100f64.powi((stages - 1 - i) as i32))
        .collect()
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(Command::Repro { table }) = cli.command {
        return repro::run(table);
    }
    let args = cli.run;
    let name = args
        .problem
        .as_deref()
        .ok_or_else(|| anyhow!("--problem is required (see --help)"))?;

    let mut params = BTreeMap::new();
    for spec in &args.params {
        let (key, val) = spec
            .split_once('=')
            .ok_or_else(|| anyhow!("--param expects NAME=VALUE, got '{spec}'"))?;
        let v: f64 = val
            .parse()
            .with_context(|| format!("value of parameter '{key}'"))?;
        params.insert(key.to_string(), v);
    }
    if let Some(d) = args.delta {
        params.insert("delta".into(), d);
    }
    let problem = catalog(name, &params)?;

    let ks: Vec<usize> = match (&args.k_range, args.k) {
        (Some(spec), _) => parse_k_range(spec)?,
        (None, Some(k)) => vec![k],
        (None, None) => bail!("-k or --k-range is required"),
    };

    let mut cfg = SolverConfig::default();
    if let Some(orders) = args.orders {
        if args.tols.is_none() && orders.len() != cfg.tols.len() {
            cfg.tols = default_tols(orders.len());
        }
        cfg.orders = orders;
    }
    if let Some(tols) = args.tols {
        cfg.tols = tols;
    }
    if args.n0.is_some() {
        cfg.n0 = args.n0;
    }
    cfg.policy = match args.endpoint_policy {
        PolicyArg::Dirichlet => EndpointPolicy::Dirichlet,
        PolicyArg::Equation => EndpointPolicy::EquationAtEndpoint,
    };

    if args.format == FormatArg::Csv && ks.len() > 1 {
        bail!("csv output holds one eigenfunction; use a single -k or another format");
    }

    let mut results = Vec::new();
    for &k in &ks {
        if args.verbose {
            eprintln!("solving {name}, k = {k}");
        }
        let sol = solve(&problem, k, &cfg)?;
        if args.verbose {
            for rec in &sol.history {
                for it in &rec.trace {
                    eprintln!(
                        "  p={:<2} n={:<7} lambda={:+.15e} err={:.2e}",
                        rec.order, it.n, it.lambda, it.err_inf
                    );
                }
            }
            eprintln!(
                "  done: lambda={:+.15e} n={} E_r={:.2e} E_a={:.2e}",
                sol.lambda,
                sol.grid.n_intervals(),
                sol.e_r,
                sol.e_a
            );
        }
        results.push((k, sol));
    }

    let flagged = results.iter().any(|(_, s)| !s.converged);
    let text = match args.format {
        FormatArg::Json => output::json(&problem, &cfg, &results)?,
        FormatArg::Csv => output::csv(&results[0].1),
        FormatArg::Table => output::table(&results),
    };
    match &args.out {
        Some(path) => {
            std::fs::write(path, &text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }

    Ok(if flagged {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    })
}
