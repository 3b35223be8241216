use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use dkp_core::cli::{default_lam_window, emit_report, run_check_suite, Format, SessionConfig, Suite};

/// Runs residual checks for the (n,1)-reduced DKP hierarchy and writes a report.
#[derive(Parser, Debug)]
#[command(name = "dkp", version)]
struct Args {
    /// Reduction parameter.
    #[arg(long, default_value_t = 1)]
    n: u32,
    /// Fock-space energy bound (scaled units).
    #[arg(long, default_value_t = 8)]
    e_max: i64,
    /// Weight bound for Hirota and PDO checks.
    #[arg(long, default_value_t = 8)]
    w_max: i64,
    /// Guaranteed tail of PDO checks.
    #[arg(long, default_value_t = 8)]
    tail: i64,
    /// Mode window for Clifford and Grassmannian checks (default: e-max).
    #[arg(long)]
    window: Option<i64>,
    /// Weight of tau functions and λ-series (default depends on n and w-max).
    #[arg(long)]
    lam_window: Option<i64>,
    /// Suite to run; repeatable. Default: all.
    #[arg(long = "suite")]
    suites: Vec<String>,
    /// Group element (JSON) whose orbit is checked; default exp(α^1_{−1/2n}).
    #[arg(long)]
    group_spec: Option<PathBuf>,
    /// Report destination; default stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: Format,
    /// Worker threads: 1 = sequential, 0 = all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

fn run(args: Args) -> Result<bool, Box<dyn std::error::Error>> {
    let suites = if args.suites.is_empty() {
        Suite::ALL.to_vec()
    } else {
        args.suites.iter().map(|s| s.parse()).collect::<Result<Vec<Suite>, _>>()?
    };
    let cfg = SessionConfig {
        n: args.n,
        e_max: args.e_max,
        w_max: args.w_max,
        tail: args.tail,
        window: args.window.unwrap_or(args.e_max),
        lam_window: args.lam_window.unwrap_or_else(|| default_lam_window(args.n, args.w_max)),
        suites,
        group_spec: args.group_spec,
        out: args.out,
        jobs: args.jobs,
    };
    let report = run_check_suite(&cfg)?;
    let bytes = emit_report(&report, args.format);
    match &cfg.out {
        Some(p) => std::fs::write(p, &bytes)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(&bytes)?;
            if args.format == Format::Json {
                out.write_all(b"\n")?;
            }
        }
    }
    Ok(report.all_pass())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
