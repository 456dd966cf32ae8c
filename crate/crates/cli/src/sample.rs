use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use spinloc::glauber::{mixing_steps, GlauberChain, SpinChain};
use spinloc::io::{write_float_row, write_spin_row};
use spinloc::model::{config_index, IsingModel};
use spinloc::oracle::{exact_distribution, exact_kernel, tv_distance, ChainKind, KERNEL_MAX_SITES, MAX_SITES};
use spinloc::rng::chain_rng;
use spinloc::sphere::{OnConfig, OnGlauberChain, OnModel};
use spinloc::{FixedMagChain, PolarizedChain};

use crate::gen::Generator;
use crate::{emit, Usage};

/// Sites kept by `--verify-stationarity-small`.
const SMALL_SITES: usize = 8;
const STATIONARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Chain {
    Glauber,
    Polarized,
    Fixedmag,
    OnGlauber,
}

impl Chain {
    fn kind(self) -> Option<ChainKind> {
        match self {
            Chain::Glauber => Some(ChainKind::Glauber),
            Chain::Polarized => Some(ChainKind::Polarized),
            Chain::Fixedmag => Some(ChainKind::FixedMag),
            Chain::OnGlauber => None,
        }
    }
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long, value_enum)]
    pub chain: Chain,
    /// Model JSON file.
    #[arg(long, conflicts_with = "gen", required_unless_present = "gen")]
    pub model: Option<PathBuf>,
    /// Generator string, e.g. `sk:n=100,beta=0.25`.
    #[arg(long)]
    pub gen: Option<String>,
    /// Steps per chain [default: n·ln(n/eps)].
    #[arg(long)]
    pub steps: Option<u64>,
    #[arg(long)]
    pub seed: u64,
    /// Emit every T-th configuration (the initial one is always emitted).
    #[arg(long, default_value_t = 1)]
    pub thin: u64,
    /// Total TV budget for `on-glauber`; also sets the default step count.
    #[arg(long, default_value_t = 0.01)]
    pub eps: f64,
    /// Spin dimension N for `on-glauber`.
    #[arg(long, default_value_t = 3)]
    pub spin_dim: usize,
    /// Number of independent chains.
    #[arg(long, default_value_t = 1)]
    pub chains: usize,
    /// Sample CSV; stdout when absent. The summary goes to `<out>.summary.json`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Writes the exact transition matrix (n ≤ 12) as CSV.
    #[arg(long)]
    pub kernel_dump: Option<PathBuf>,
    /// Reports the TV distance from the pooled samples to the exact law (n ≤ 20).
    #[arg(long)]
    pub verify: bool,
    /// Checks stationarity of the exact kernel on the first 8 sites.
    #[arg(long)]
    pub verify_stationarity_small: bool,
}

#[derive(Debug, Serialize)]
struct Summary {
    chain: String,
    n: usize,
    chains: usize,
    seed: u64,
    steps_per_chain: u64,
    steps: u64,
    thin: u64,
    samples: u64,
    wall_seconds: f64,
    /// Mean of `Σx/n` over emitted samples (per spin component for O(N)).
    magnetization: Vec<f64>,
    tv_to_oracle: Option<f64>,
    small_stationarity_residual: Option<f64>,
}

struct ChainOutput {
    csv: Vec<u8>,
    samples: u64,
    mag_sum: Vec<f64>,
    counts: Option<Vec<u64>>,
}

pub fn run(args: SampleArgs) -> Result<i32> {
    let model = match (&args.model, &args.gen) {
        (Some(path), _) => spinloc::io::load_model(path).map_err(|e| Usage(format!("{}: {e}", path.display())))?,
        (None, Some(text)) => text
            .parse::<Generator>()
            .and_then(|g| g.build(args.seed))
            .map_err(|e| Usage(format!("{e:#}")))?,
        (None, None) => unreachable!("clap requires one of them"),
    };
    let n = model.n();
    if args.chains == 0 {
        return Err(Usage("--chains must be at least 1".into()).into());
    }
    if !(args.eps > 0.0 && args.eps < 1.0) {
        return Err(Usage(format!("eps = {} must lie in (0, 1)", args.eps)).into());
    }
    if args.verify && n > MAX_SITES {
        return Err(Usage(format!("--verify needs n ≤ {MAX_SITES}, got {n}")).into());
    }
    if args.verify && args.chain == Chain::OnGlauber {
        return Err(Usage("--verify compares against the Ising law; use it with an Ising chain".into()).into());
    }
    check_compatible(args.chain, &model, args.spin_dim)?;

    let mut status = 0;
    if let Some(path) = &args.kernel_dump {
        let kind = args
            .chain
            .kind()
            .ok_or_else(|| Usage("--kernel-dump is defined for the Ising chains".into()))?;
        if n > KERNEL_MAX_SITES {
            return Err(Usage(format!("--kernel-dump needs n ≤ {KERNEL_MAX_SITES}, got {n}")).into());
        }
        let k = exact_kernel(kind, &model)?;
        std::fs::write(path, k.to_csv()).with_context(|| path.display().to_string())?;
    }
    let small = if args.verify_stationarity_small {
        let kind = args
            .chain
            .kind()
            .ok_or_else(|| Usage("--verify-stationarity-small is defined for the Ising chains".into()))?;
        let sub = truncate(&model, SMALL_SITES.min(n))?;
        let k = exact_kernel(kind, &sub)?;
        let nu = exact_distribution(&sub)?;
        let r = k.stationarity_residual(nu.probabilities()).max(k.max_row_sum_error());
        if r.is_nan() || r >= STATIONARITY_TOL {
            eprintln!("stationarity residual {r:e} on {} sites exceeds {STATIONARITY_TOL:e}", sub.n());
            status = 1;
        }
        Some(r)
    } else {
        None
    };

    let steps = args.steps.unwrap_or_else(|| mixing_steps(n, args.eps));
    let start = Instant::now();
    let outputs: Vec<ChainOutput> = crate::pool()?.install(|| {
        (0..args.chains)
            .into_par_iter()
            .map(|c| run_chain(&args, &model, steps, c as u64))
            .collect::<Result<_>>()
    })?;
    let wall_seconds = start.elapsed().as_secs_f64();

    let mut csv = Vec::new();
    for (c, o) in outputs.iter().enumerate() {
        if args.chains > 1 {
            csv.extend_from_slice(format!("# chain {c}\n").as_bytes());
        }
        csv.extend_from_slice(&o.csv);
    }
    let samples: u64 = outputs.iter().map(|o| o.samples).sum();
    let width = outputs[0].mag_sum.len();
    let magnetization = (0..width)
        .map(|k| outputs.iter().map(|o| o.mag_sum[k]).sum::<f64>() / samples as f64)
        .collect();
    let tv_to_oracle = if args.verify {
        let mut pooled = vec![0u64; 1 << n];
        for o in &outputs {
            for (p, c) in pooled.iter_mut().zip(o.counts.as_ref().expect("counted")) {
                *p += c;
            }
        }
        let emp: Vec<f64> = pooled.iter().map(|&c| c as f64 / samples as f64).collect();
        Some(tv_distance(&emp, exact_distribution(&model)?.probabilities())?)
    } else {
        None
    };
    let summary = Summary {
        chain: args.chain.to_possible_value().expect("no skipped variants").get_name().to_string(),
        n,
        chains: args.chains,
        seed: args.seed,
        steps_per_chain: steps,
        steps: steps * args.chains as u64,
        thin: args.thin,
        samples,
        wall_seconds,
        magnetization,
        tv_to_oracle,
        small_stationarity_residual: small,
    };
    let json = serde_json::to_string_pretty(&summary)? + "\n";
    emit(args.out.as_deref(), &csv)?;
    match &args.out {
        Some(path) => {
            let mut side = path.clone().into_os_string();
            side.push(".summary.json");
            std::fs::write(&side, json).with_context(|| format!("{side:?}"))?;
        }
        None => eprint!("{json}"),
    }
    Ok(status)
}

fn check_compatible(chain: Chain, model: &IsingModel, dim: usize) -> Result<()> {
    let bad = |msg: String| Err(Usage(msg).into());
    match chain {
        Chain::Glauber | Chain::Polarized if model.magnetization().is_some() => bad(format!(
            "{chain:?} does not preserve a magnetization slice; use fixedmag"
        )),
        Chain::Fixedmag if model.magnetization().is_none() => {
            bad("fixedmag needs a model with a magnetization".into())
        }
        Chain::OnGlauber => OnModel::from_ising(model, dim)
            .map(|_| ())
            .map_err(|e| Usage(format!("on-glauber: {e}")).into()),
        _ => Ok(()),
    }
}

fn run_chain(args: &SampleArgs, model: &IsingModel, steps: u64, c: u64) -> Result<ChainOutput> {
    let n = model.n();
    let rng = chain_rng(args.seed, c);
    let mut csv = Vec::new();
    let mut samples = 0u64;
    let mut counts = args.verify.then(|| vec![0u64; 1 << n]);
    if args.chain == Chain::OnGlauber {
        let on = OnModel::from_ising(model, args.spin_dim)?;
        let dim = on.dim();
        let eps = args.eps / steps.max(1) as f64;
        let mut chain = OnGlauberChain::new(&on, OnConfig::aligned(&on), eps, rng)?;
        let mut mag_sum = vec![0.0; dim];
        let mut io = Ok(());
        chain.run(steps, args.thin, &mut |s| {
            samples += 1;
            for i in 0..n {
                for k in 0..dim {
                    mag_sum[k] += s[i * dim + k] / n as f64;
                }
            }
            if io.is_ok() {
                io = write_float_row(&mut csv, s);
            }
        })?;
        io?;
        return Ok(ChainOutput {
            csv,
            samples,
            mag_sum,
            counts,
        });
    }

    let mut mag = 0.0;
    let mut io = Ok(());
    let mut emit_row = |x: &[i8]| {
        samples += 1;
        mag += x.iter().map(|&s| s as f64).sum::<f64>() / n as f64;
        if let Some(h) = counts.as_mut() {
            h[config_index(x)] += 1;
        }
        if io.is_ok() {
            io = write_spin_row(&mut csv, x);
        }
    };
    match args.chain {
        Chain::Glauber => GlauberChain::all_minus(model, rng)?.run(steps, args.thin, &mut emit_row)?,
        Chain::Polarized => PolarizedChain::all_minus(model, rng)?.run(steps, args.thin, &mut emit_row)?,
        Chain::Fixedmag => FixedMagChain::first_sites_plus(model, rng)?.run(steps, args.thin, &mut emit_row)?,
        Chain::OnGlauber => unreachable!(),
    }
    io?;
    Ok(ChainOutput {
        csv,
        samples,
        mag_sum: vec![mag],
        counts,
    })
}

/// The model induced on the first `m` sites: couplings among them, their
/// fields, the same `γ/n` per pair, and a magnetization scaled to `m` sites.
fn truncate(model: &IsingModel, m: usize) -> Result<IsingModel> {
    let n = model.n();
    let trip = model
        .triplets()
        .iter()
        .copied()
        .filter(|&(i, j, _)| i < m && j < m)
        .collect();
    let gamma = model.gamma() * m as f64 / n as f64;
    let mag = model.plus_count().map(|p| {
        let p = ((p as f64 * m as f64 / n as f64).round() as i64).clamp(1, (m as i64 - 1).max(1));
        2 * p - m as i64
    });
    Ok(IsingModel::new(m, trip, model.h()[..m].to_vec(), gamma, mag)?
        .with_diagonal(model.diagonal())
        .with_uniform_coupling(model.uniform_coupling()))
}
