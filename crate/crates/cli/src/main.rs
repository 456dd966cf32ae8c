//! `spinloc` command-line front end.
//!
//! Exit codes: 0 ok, 1 verification failure or runtime error, 2 usage error.

mod bench;
mod gen;
mod sample;
mod threshold;

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use spinloc::graphs::{erdos_renyi, random_regular};
use spinloc::verify::{run_suite, DEFAULT_SEED, SUITES};

/// Bad arguments or inputs; maps to exit code 2.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

#[derive(Debug, Parser)]
#[command(name = "spinloc", version, about = "Spectral-independence samplers for Ising and O(N) models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulates a threshold curve as `z,q,integral` CSV.
    Threshold {
        #[arg(long)]
        eta: f64,
        #[arg(long, value_enum, default_value_t = threshold::Mode::Ising)]
        mode: threshold::Mode,
        /// Semi-log-concavity constant (closed-form and semilogconcave modes).
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        /// Right end of the grid [default: 2, or the blow-up point in closed-form mode].
        #[arg(long)]
        z_max: Option<f64>,
        #[arg(long, default_value_t = 1e-4)]
        step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random graphs as edge lists.
    Graph {
        #[command(subcommand)]
        command: GraphCommand,
    },
    /// Model JSON from a generator string.
    Model {
        #[command(subcommand)]
        command: ModelCommand,
    },
    /// Runs a chain and writes samples as CSV.
    Sample(sample::SampleArgs),
    /// Runs an acceptance suite and prints a JSON report.
    Verify {
        /// One of: thresholds, closed-form, stationarity, polarized-kernel,
        /// trickledown, covariance, mixing, tree, sphere, slice-limit, spectra, all.
        suite: String,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Times the core operations and prints a JSON report.
    Bench(bench::BenchArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GraphKind {
    Regular,
    Gnp,
}

#[derive(Debug, Subcommand)]
enum GraphCommand {
    /// One `i j` pair per line, 0-based.
    Gen {
        #[arg(long, value_enum)]
        kind: GraphKind,
        #[arg(long)]
        n: usize,
        /// Degree for `regular`.
        #[arg(long, required_if_eq("kind", "regular"))]
        d: Option<usize>,
        /// Edge probability for `gnp`.
        #[arg(long, required_if_eq("kind", "gnp"))]
        p: Option<f64>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
enum ModelCommand {
    Gen {
        /// Generator string `kind:key=value,...`; kinds: sk, diluted-sk, hopfield,
        /// curie-weiss, antiferro-regular, antiferro-gnp, random-psd, free.
        /// Every kind accepts `mag=k` and `seed=s`.
        #[arg(long)]
        gen: String,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Thread pool capped by `SPINLOC_THREADS`.
pub fn pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("SPINLOC_THREADS") {
        let cap: usize = v
            .parse()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| Usage(format!("SPINLOC_THREADS='{v}' is not a positive integer")))?;
        b = b.num_threads(cap.min(rayon::current_num_threads()));
    }
    Ok(b.build()?)
}

/// Writes to `path`, or stdout when absent.
pub fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, bytes).with_context(|| p.display().to_string()),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            Ok(out.flush()?)
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Threshold {
            eta,
            mode,
            rho,
            z_max,
            step,
            out,
        } => {
            // computed in full before anything is written
            let curve = threshold::compute(eta, mode, rho, z_max, step)?;
            let mut buf = Vec::new();
            threshold::write_csv(&mut buf, &curve)?;
            emit(out.as_deref(), &buf)?;
            Ok(0)
        }
        Command::Graph {
            command: GraphCommand::Gen { kind, n, d, p, seed, out },
        } => {
            let g = match kind {
                GraphKind::Regular => random_regular(n, d.expect("required by clap"), seed),
                GraphKind::Gnp => erdos_renyi(n, p.expect("required by clap"), seed),
            }
            .map_err(|e| Usage(e.to_string()))?;
            emit(out.as_deref(), g.to_edge_list().as_bytes())?;
            Ok(0)
        }
        Command::Model {
            command: ModelCommand::Gen { gen, seed, out },
        } => {
            let model = gen
                .parse::<gen::Generator>()
                .and_then(|g| g.build(seed))
                .map_err(|e| Usage(format!("{e:#}")))?;
            emit(out.as_deref(), (spinloc::io::model_to_json(&model) + "\n").as_bytes())?;
            Ok(0)
        }
        Command::Sample(args) => sample::run(args),
        Command::Verify { suite, seed } => {
            let reports = run_suite(&suite, seed)
                .map_err(|e| Usage(format!("{e}; known suites: {}", SUITES.join(", "))))?;
            for r in &reports {
                eprintln!("{r}");
            }
            let passed = reports.iter().all(|r| r.passed);
            let json = serde_json::json!({ "suite": suite, "seed": seed, "passed": passed, "criteria": reports });
            emit(None, (serde_json::to_string_pretty(&json)? + "\n").as_bytes())?;
            Ok(if passed { 0 } else { 1 })
        }
        Command::Bench(args) => bench::run(args),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if e.is::<Usage>() { 2 } else { 1 })
        }
    }
}
