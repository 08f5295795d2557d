use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use hypoineq::group::QuasiNorm;
use hypoineq::report::{list_suites, run, Entry, RunOptions, SuiteConfig};
use hypoineq::trudinger as tm;

#[derive(Parser)]
#[command(
    name = "hypoineq",
    version,
    about = "Numerical checks of functional inequalities on homogeneous groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suites named in a TOML config and write report.json plus one CSV per suite.
    Run {
        config: PathBuf,
        /// Output directory; overrides `[output] dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        jobs: Option<u64>,
        /// Print one line per finished entry on stderr.
        #[arg(long, short)]
        verbose: bool,
    },
    /// List the registered suites.
    List,
    /// Evaluate a sharp exponent.
    Constant {
        #[command(subcommand)]
        which: ConstantCmd,
    },
}

#[derive(Subcommand)]
enum ConstantCmd {
    /// α_Q = Q·c_Q^{1/(Q−1)} by sphere quadrature.
    AlphaQ {
        /// Group id, e.g. "R:2" or "H:1".
        #[arg(long)]
        group: String,
        /// Norm id: euclidean, max or kaplan.
        #[arg(long)]
        norm: Option<String>,
    },
    /// Closed-form α_Q of an H-type group.
    Htype {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
    },
}

fn progress(suite: &str, e: &Entry, secs: f64) {
    let mark = if e.pass { "ok" } else { "FAIL" };
    eprintln!("{mark:>4} {suite}/{} ({secs:.2}s)", e.id);
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::List => {
            for (name, description) in list_suites() {
                println!("{name:<12} {description}");
            }
            ExitCode::SUCCESS
        }
        Command::Constant { which } => constant(which),
        Command::Run {
            config,
            out,
            seed,
            jobs,
            verbose,
        } => run_config(&config, out, seed, jobs, verbose),
    }
}

fn constant(which: ConstantCmd) -> ExitCode {
    let value = match which {
        ConstantCmd::AlphaQ { group, norm } => QuasiNorm::parse(&group, norm.as_deref())
            .and_then(|n| tm::alpha_q(&n).map(|a| (n, a)))
            .map(|(n, a)| json!({ "group": n.id(), "alpha_q": a.alpha_q, "c_q": a.c_q })),
        ConstantCmd::Htype { k, l } => tm::alpha_htype(k, l).map(|a| json!({ "k": k, "l": l, "alpha_q": a })),
    };
    match value {
        Ok(v) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("json"));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run_config(path: &PathBuf, out: Option<PathBuf>, seed: Option<u64>, jobs: Option<u64>, verbose: bool) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("cannot read {}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    let mut cfg = match SuiteConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let dir = out
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("hypoineq-report"));
    let opts = RunOptions {
        jobs: jobs.map(|j| j as usize),
        progress: verbose.then_some(progress as fn(&str, &Entry, f64)),
    };
    let report = match run(&cfg, opts) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{}: {e}", path.display());
            return ExitCode::from(2);
        }
    };
    if let Err(e) = report.write(&dir) {
        eprintln!("cannot write report to {}: {e}", dir.display());
        return ExitCode::from(2);
    }
    for s in &report.suites {
        let passed = s.entries.iter().filter(|e| e.pass).count();
        println!("{:<12} {passed}/{} passed", s.name, s.entries.len());
    }
    println!("report written to {}", dir.display());
    let failures = report.failures();
    if !failures.is_empty() {
        eprintln!("failing entries:");
        for (suite, e) in failures {
            let why = e.error.clone().unwrap_or_else(|| match (e.value, e.reference) {
                (Some(v), Some(r)) => format!("value {v:.6e}, reference {r:.6e}"),
                (Some(v), None) => format!("value {v:.6e}"),
                _ => "no value".into(),
            });
            eprintln!("  {suite}/{}: {why}", e.id);
        }
    }
    ExitCode::from(report.exit_code() as u8)
}
