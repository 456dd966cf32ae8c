use std::collections::BTreeMap;
use std::time::Instant;

use anyhow::Result;
use clap::Args;
use rand::Rng;
use spinloc::glauber::{GlauberChain, SpinChain};
use spinloc::model::build_sk;
use spinloc::rng::chain_rng;
use spinloc::thresholds::{solve_q_eta_ising, SolverOptions};
use spinloc::{PolarizedChain, WeightedIndexTree};

use crate::{emit, Usage};

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Sites in the SK model driven by the chain benchmarks.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Steps per chain benchmark.
    #[arg(long, default_value_t = 1_000_000)]
    pub steps: u64,
    /// Keys in the tree benchmark.
    #[arg(long, default_value_t = 1 << 16)]
    pub keys: usize,
    #[arg(long)]
    pub seed: u64,
}

pub fn run(args: BenchArgs) -> Result<i32> {
    if args.n < 2 || args.keys == 0 || args.steps == 0 {
        return Err(Usage("need n ≥ 2 and positive steps and keys".into()).into());
    }
    let mut out: BTreeMap<&str, f64> = BTreeMap::new();

    let mut rng = chain_rng(args.seed, 0);
    let mut tree = WeightedIndexTree::from_pairs((0..args.keys).map(|k| (k, 1.0 + k as f64 % 7.0)))?;
    let ops = 200_000;
    let t = Instant::now();
    for _ in 0..ops {
        let k = rng.random_range(0..args.keys);
        tree.update(k, rng.random_range(0.5..2.0))?;
        std::hint::black_box(tree.sample(&mut rng)?);
    }
    out.insert("tree_update_sample_ns", t.elapsed().as_secs_f64() * 1e9 / ops as f64);

    let model = build_sk(args.n, 0.25, args.seed);
    let mut g = GlauberChain::all_minus(&model, chain_rng(args.seed, 1))?;
    let t = Instant::now();
    for _ in 0..args.steps {
        g.step()?;
    }
    out.insert("glauber_step_ns", t.elapsed().as_secs_f64() * 1e9 / args.steps as f64);

    let mut p = PolarizedChain::all_minus(&model, chain_rng(args.seed, 2))?;
    let t = Instant::now();
    for _ in 0..args.steps {
        p.step()?;
    }
    out.insert("polarized_step_ns", t.elapsed().as_secs_f64() * 1e9 / args.steps as f64);

    let t = Instant::now();
    solve_q_eta_ising(0.5, SolverOptions::default())?;
    out.insert("solver_eta_half_s", t.elapsed().as_secs_f64());

    emit(None, (serde_json::to_string_pretty(&out)? + "\n").as_bytes())?;
    Ok(0)
}
