//! Named model ensembles.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{IsingModel, ModelError, SpectralSummary};
use crate::graphs::{spectral_lambda_lenient, Graph};
use crate::linalg::symmetric_eigenvalues;
use crate::rng::rng_from_seed;

/// Sherrington–Kirkpatrick: `J_ij ~ N(0, β²/n)` independently for `i < j`.
pub fn build_sk(n: usize, beta: f64, seed: u64) -> IsingModel {
    assert!(n >= 1, "n must be positive");
    let mut rng = rng_from_seed(seed);
    let mut trip = Vec::new();
    if beta > 0.0 {
        let normal = Normal::new(0.0, beta / (n as f64).sqrt()).expect("finite sd");
        for i in 0..n {
            for j in (i + 1)..n {
                trip.push((i, j, normal.sample(&mut rng)));
            }
        }
    }
    IsingModel::new(n, trip, vec![0.0; n], 0.0, None).expect("valid")
}

/// Hopfield network with `m` uniform random ±1 patterns.
pub fn build_hopfield(n: usize, m: usize, beta: f64, seed: u64) -> IsingModel {
    assert!(n >= 1 && m >= 1, "n and m must be positive");
    let mut rng = rng_from_seed(seed);
    let patterns: Vec<Vec<i8>> = (0..m)
        .map(|_| (0..n).map(|_| if rng.random() { 1 } else { -1 }).collect())
        .collect();
    build_hopfield_with_patterns(&patterns, beta).expect("consistent pattern lengths")
}

/// `J = (β/2n) Σ_v η_v η_vᵀ` for the given patterns; the diagonal is
/// `βm/2n` exactly.
pub fn build_hopfield_with_patterns(
    patterns: &[Vec<i8>],
    beta: f64,
) -> Result<IsingModel, ModelError> {
    let m = patterns.len();
    let n = patterns.first().map_or(0, Vec::len);
    if m == 0 || n == 0 {
        return Err(ModelError::InvalidParameter("need at least one non-empty pattern".into()));
    }
    if patterns.iter().any(|p| p.len() != n) {
        return Err(ModelError::InvalidParameter("patterns differ in length".into()));
    }
    let scale = beta / (2.0 * n as f64);
    let mut trip = Vec::new();
    if beta != 0.0 {
        let p = DMatrix::from_fn(n, m, |i, v| f64::from(patterns[v][i]));
        let gram = &p * p.transpose();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = scale * gram[(i, j)];
                if v != 0.0 {
                    trip.push((i, j, v));
                }
            }
        }
    }
    Ok(IsingModel::new(n, trip, vec![0.0; n], 0.0, None)?.with_diagonal(scale * m as f64))
}

/// Diluted SK: Rademacher `±β` couplings on the edges of `graph`.
pub fn build_diluted_sk(graph: &Graph, beta: f64, seed: u64) -> IsingModel {
    let mut rng = rng_from_seed(seed);
    let trip = graph
        .edges()
        .iter()
        .map(|&(i, j)| (i, j, if rng.random() { beta } else { -beta }))
        .collect();
    IsingModel::new(graph.n(), trip, vec![0.0; graph.n()], 0.0, None).expect("graph is simple")
}

/// Pure confinement: no couplings, `ν ∝ exp(⟨h,x⟩ − (γ/2n)(Σx)²)`.
pub fn build_curie_weiss(n: usize, gamma: f64, h: Vec<f64>) -> Result<IsingModel, ModelError> {
    IsingModel::new(n, Vec::new(), h, gamma, None)
}

/// Diagnostics returned with an antiferromagnetic graph model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntiferroSummary {
    /// Spectrum of the returned couplings, shifted by the stored diagonal.
    pub spectral: SpectralSummary,
    pub d_max: usize,
    pub d_min: usize,
    pub lambda_g: f64,
    /// `(1−δ)/4 + β(d_max − d_min + d_max·λ(G))`, an upper bound on `‖J‖`
    /// when `J` is PSD.
    pub op_norm_bound: f64,
    /// `(1−δ)/4 · (d_max − d_min + d_max·λ(G))⁻¹`.
    pub beta_threshold: f64,
    /// Whether `β` is at most `beta_threshold`.
    pub applicable: bool,
    /// Smallest eigenvalue of the returned `J`; negative only for irregular
    /// graphs outside the applicable range.
    pub lambda_min_j: f64,
}

/// Antiferromagnetic Ising model `ν ∝ exp(−(β/2)⟨x, Ax⟩ + ⟨h, x⟩)` rewritten as
/// a confined model: couplings `−βA + (βd_max/n)(11ᵀ − I)`, diagonal
/// `(1−δ)/4 + βd_max/n` and confinement `γ = β·d_max`. The rank-one parts
/// cancel, so the measure is unchanged.
pub fn build_antiferro(
    graph: &Graph,
    beta: f64,
    h: Vec<f64>,
    delta: f64,
) -> Result<(IsingModel, AntiferroSummary), ModelError> {
    let n = graph.n();
    if n == 0 {
        return Err(ModelError::EmptyGraph);
    }
    if !(beta.is_finite() && beta >= 0.0 && delta.is_finite()) {
        return Err(ModelError::NonFinite);
    }
    let d_max = graph.max_degree();
    let d_min = graph.min_degree();
    let c = beta * d_max as f64 / n as f64;
    let trip = if beta > 0.0 {
        graph.edges().iter().map(|&(i, j)| (i, j, -beta)).collect()
    } else {
        Vec::new()
    };
    let alpha = (1.0 - delta) / 4.0 + c;
    let model = IsingModel::new(n, trip, h, beta * d_max as f64, None)?
        .with_uniform_coupling(c)
        .with_diagonal(alpha);

    let lambda_g = spectral_lambda_lenient(graph).map_or(0.0, |s| s.lambda_g);
    let denom = (d_max - d_min) as f64 + d_max as f64 * lambda_g;
    let base = (1.0 - delta) / 4.0;
    let beta_threshold = if denom > 0.0 { base / denom } else { f64::INFINITY };
    let spectral = model.stored_spectral_summary();
    let summary = AntiferroSummary {
        spectral,
        d_max,
        d_min,
        lambda_g,
        op_norm_bound: base + beta * denom,
        beta_threshold,
        applicable: beta <= beta_threshold,
        lambda_min_j: alpha + spectral.lambda_min_tilde,
    };
    Ok((model, summary))
}

/// Random model with dense Gaussian couplings shifted to be PSD with
/// `‖J‖ = op_norm`, uniform fields in `[−field, field]` and confinement `γ`.
pub fn build_random_psd(
    n: usize,
    op_norm: f64,
    gamma: f64,
    field: f64,
    seed: u64,
) -> Result<IsingModel, ModelError> {
    let mut rng = rng_from_seed(seed);
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v: f64 = Normal::new(0.0, 1.0).expect("unit").sample(&mut rng);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    let ev = symmetric_eigenvalues(&g);
    let (lo, hi) = (ev[0], ev[n - 1]);
    let raw = hi - lo;
    let s = if raw > 0.0 { op_norm / raw } else { 0.0 };
    let trip = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, s * g[(i, j)]))
        .collect();
    let h = (0..n).map(|_| field * (2.0 * rng.random::<f64>() - 1.0)).collect();
    Ok(IsingModel::new(n, trip, h, gamma, None)?.with_diagonal(-s * lo))
}
