//! Brute-force ground truth for small systems: exact distributions and
//! covariances, assembled transition kernels, TV distances and the pinning
//! covariance identity.
//!
//! Configuration `x` has index `Σ_{x_b = +1} 2^b`.

use std::collections::HashMap;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::glauber;
use crate::model::{config_from_index, config_index, IsingModel, ModelError};
use crate::polarized::{fixed_mag_kernel_row, polarized_kernel_row};
use crate::sphere::OnModel;

pub const MAX_SITES: usize = 20;
pub const EXTENDED_MAX_SITES: usize = 22;
pub const KERNEL_MAX_SITES: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("n = {n} exceeds the enumeration cap {cap}")]
    TooLarge { n: usize, cap: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("vector sums to {0}, not 1")]
    NotNormalized(f64),
    #[error("the family has no positive weight")]
    DegenerateSupport,
    #[error("invalid complex: {0}")]
    InvalidComplex(String),
    #[error("{0}")]
    Incompatible(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Full probability vector over `{±1}ⁿ` (zero off the slice).
#[derive(Debug, Clone)]
pub struct ExactDistribution {
    n: usize,
    log_weights: Vec<f64>,
    probabilities: Vec<f64>,
    log_partition: f64,
}

impl ExactDistribution {
    /// Normalizes unnormalized log-weights (`-∞` for excluded states).
    pub fn from_log_weights(n: usize, log_weights: Vec<f64>) -> Result<Self, OracleError> {
        if log_weights.len() != 1usize << n {
            return Err(OracleError::LengthMismatch(log_weights.len(), 1 << n));
        }
        let top = log_weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(OracleError::DegenerateSupport);
        }
        let mut probabilities: Vec<f64> = log_weights.iter().map(|l| (l - top).exp()).collect();
        let z: f64 = probabilities.iter().sum();
        probabilities.iter_mut().for_each(|p| *p /= z);
        Ok(Self {
            n,
            log_weights,
            probabilities,
            log_partition: top + z.ln(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn prob(&self, x: &[i8]) -> f64 {
        self.probabilities[config_index(x)]
    }

    /// Indices with positive probability.
    pub fn support(&self) -> Vec<usize> {
        (0..self.probabilities.len())
            .filter(|&s| self.probabilities[s] > 0.0)
            .collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n];
        for (s, &p) in self.probabilities.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (i, mi) in m.iter_mut().enumerate() {
                *mi += if s >> i & 1 == 1 { p } else { -p };
            }
        }
        m
    }

    /// Conditional law given `Σx = k`; `None` if the slice has no mass.
    pub fn restrict_to_slice(&self, k: i64) -> Option<Vec<f64>> {
        let mut out = vec![0.0; self.probabilities.len()];
        let mut mass = 0.0;
        for (s, &p) in self.probabilities.iter().enumerate() {
            if spin_sum_of(s, self.n) == k {
                out[s] = p;
                mass += p;
            }
        }
        if mass <= 0.0 {
            return None;
        }
        out.iter_mut().for_each(|p| *p /= mass);
        Some(out)
    }

    /// Mass on configurations with `Σx ≠ k`.
    pub fn off_slice_mass(&self, k: i64) -> f64 {
        self.probabilities
            .iter()
            .enumerate()
            .filter(|(s, _)| spin_sum_of(*s, self.n) != k)
            .map(|(_, p)| p)
            .sum()
    }
}

fn spin_sum_of(index: usize, n: usize) -> i64 {
    2 * i64::from((index as u64).count_ones()) - n as i64
}

/// Exact law of `model` for `n ≤ 20`.
pub fn exact_distribution(model: &IsingModel) -> Result<ExactDistribution, OracleError> {
    exact_distribution_capped(model, false)
}

/// As [`exact_distribution`]; `extended` raises the cap to 22 sites.
pub fn exact_distribution_capped(model: &IsingModel, extended: bool) -> Result<ExactDistribution, OracleError> {
    let n = model.n();
    let cap = if extended { EXTENDED_MAX_SITES } else { MAX_SITES };
    if n > cap {
        return Err(OracleError::TooLarge { n, cap });
    }
    let lw = (0..1usize << n)
        .map(|s| {
            let x = config_from_index(s, n);
            if model.allows(&x) {
                model.log_weight(&x)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    ExactDistribution::from_log_weights(n, lw)
}

/// `E[x xᵀ] − E[x] E[x]ᵀ`.
pub fn exact_covariance(dist: &ExactDistribution) -> DMatrix<f64> {
    let n = dist.n;
    let mean = dist.mean();
    let mut c = DMatrix::zeros(n, n);
    for (s, &p) in dist.probabilities.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for i in 0..n {
            let xi = if s >> i & 1 == 1 { 1.0 } else { -1.0 };
            for j in i..n {
                let xj = if s >> j & 1 == 1 { 1.0 } else { -1.0 };
                c[(i, j)] += p * xi * xj;
            }
        }
    }
    for i in 0..n {
        for j in i..n {
            let v = c[(i, j)] - mean[i] * mean[j];
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    c
}

/// `½‖p − q‖₁`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64, OracleError> {
    if p.len() != q.len() {
        return Err(OracleError::LengthMismatch(p.len(), q.len()));
    }
    for v in [p, q] {
        let s: f64 = v.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(OracleError::NotNormalized(s));
        }
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Normalized histogram of ±1 samples over `2ⁿ` configurations.
pub fn empirical_distribution<'s, I>(n: usize, samples: I) -> Result<Vec<f64>, OracleError>
where
    I: IntoIterator<Item = &'s [i8]>,
{
    if n > MAX_SITES {
        return Err(OracleError::TooLarge { n, cap: MAX_SITES });
    }
    let mut counts = vec![0u64; 1 << n];
    let mut total = 0u64;
    for x in samples {
        if x.len() != n {
            return Err(OracleError::LengthMismatch(x.len(), n));
        }
        counts[config_index(x)] += 1;
        total += 1;
    }
    let t = total.max(1) as f64;
    Ok(counts.into_iter().map(|c| c as f64 / t).collect())
}

/// Plug-in covariance (divisor = sample count).
pub fn empirical_covariance<'s, I>(n: usize, samples: I) -> DMatrix<f64>
where
    I: IntoIterator<Item = &'s [i8]>,
{
    let mut sum = vec![0.0; n];
    let mut outer = DMatrix::<f64>::zeros(n, n);
    let mut count = 0.0;
    for x in samples {
        count += 1.0;
        for i in 0..n {
            sum[i] += f64::from(x[i]);
            for j in i..n {
                outer[(i, j)] += f64::from(x[i] * x[j]);
            }
        }
    }
    if count == 0.0 {
        return outer;
    }
    for i in 0..n {
        for j in i..n {
            let v = outer[(i, j)] / count - sum[i] * sum[j] / (count * count);
            outer[(i, j)] = v;
            outer[(j, i)] = v;
        }
    }
    outer
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChainKind {
    Glauber,
    Polarized,
    FixedMag,
}

impl std::str::FromStr for ChainKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "glauber" => Ok(Self::Glauber),
            "polarized" => Ok(Self::Polarized),
            "fixedmag" => Ok(Self::FixedMag),
            other => Err(format!("unknown chain '{other}'")),
        }
    }
}

/// Transition matrix on an explicit list of states, stored by rows.
#[derive(Debug, Clone)]
pub struct Kernel {
    n: usize,
    states: Vec<usize>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl Kernel {
    /// Assembles a kernel from rows over configuration indices; targets
    /// outside `states` are an error.
    pub fn from_rows<F>(n: usize, states: Vec<usize>, mut row: F) -> Result<Self, OracleError>
    where
        F: FnMut(&[i8]) -> Vec<(usize, f64)>,
    {
        let pos: HashMap<usize, usize> = states.iter().enumerate().map(|(p, &s)| (s, p)).collect();
        let mut rows = Vec::with_capacity(states.len());
        for &s in &states {
            let mut acc: Vec<(usize, f64)> = Vec::new();
            for (t, p) in row(&config_from_index(s, n)) {
                let &tp = pos
                    .get(&t)
                    .ok_or(OracleError::Incompatible("kernel leaves the state space"))?;
                match acc.iter_mut().find(|(q, _)| *q == tp) {
                    Some(e) => e.1 += p,
                    None => acc.push((tp, p)),
                }
            }
            acc.sort_by_key(|e| e.0);
            rows.push(acc);
        }
        Ok(Self { n, states, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Configuration indices of the states, in row order.
    pub fn states(&self) -> &[usize] {
        &self.states
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn entry(&self, from: usize, to: usize) -> f64 {
        self.rows[from]
            .iter()
            .find(|e| e.0 == to)
            .map_or(0.0, |e| e.1)
    }

    pub fn max_row_sum_error(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| (r.iter().map(|e| e.1).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `μP` for a row vector `μ` over the states.
    pub fn apply_left(&self, mu: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (r, row) in self.rows.iter().enumerate() {
            for &(t, p) in row {
                out[t] += mu[r] * p;
            }
        }
        out
    }

    /// `dist` read off at the kernel's states.
    pub fn restrict(&self, dist: &[f64]) -> Vec<f64> {
        self.states.iter().map(|&s| dist[s]).collect()
    }

    /// `‖νP − ν‖₁`.
    pub fn stationarity_residual(&self, dist: &[f64]) -> f64 {
        let nu = self.restrict(dist);
        let moved = self.apply_left(&nu);
        moved.iter().zip(&nu).map(|(a, b)| (a - b).abs()).sum()
    }

    /// `max |ν(x)P(x,y) − ν(y)P(y,x)|`.
    pub fn detailed_balance_residual(&self, dist: &[f64]) -> f64 {
        let nu = self.restrict(dist);
        let mut worst: f64 = 0.0;
        for (x, row) in self.rows.iter().enumerate() {
            for &(y, p) in row {
                worst = worst.max((nu[x] * p - nu[y] * self.entry(y, x)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.len(), self.len());
        for (r, row) in self.rows.iter().enumerate() {
            for &(t, p) in row {
                m[(r, t)] += p;
            }
        }
        m
    }

    /// Header `from,to…` followed by one dense row per state.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("state");
        for &t in &self.states {
            s.push_str(&format!(",{t}"));
        }
        s.push('\n');
        let dense = self.to_dense();
        for r in 0..self.len() {
            s.push_str(&self.states[r].to_string());
            for c in 0..self.len() {
                s.push_str(&format!(",{:e}", dense[(r, c)]));
            }
            s.push('\n');
        }
        s
    }
}

/// Configuration indices allowed by the model (all of `{±1}ⁿ` or one slice).
pub fn state_space(model: &IsingModel) -> Vec<usize> {
    let n = model.n();
    match model.magnetization() {
        None => (0..1usize << n).collect(),
        Some(k) => (0..1usize << n).filter(|&s| spin_sum_of(s, n) == k).collect(),
    }
}

/// Transition kernel of a chain, assembled from its per-state rows.
pub fn exact_kernel(kind: ChainKind, model: &IsingModel) -> Result<Kernel, OracleError> {
    let n = model.n();
    if n > KERNEL_MAX_SITES {
        return Err(OracleError::TooLarge { n, cap: KERNEL_MAX_SITES });
    }
    let slice = model.magnetization().is_some();
    match kind {
        ChainKind::Glauber if slice => Err(OracleError::Incompatible("Glauber dynamics needs an unconstrained model")),
        ChainKind::Polarized if slice => Err(OracleError::Incompatible("the polarized walk needs an unconstrained model")),
        ChainKind::FixedMag if !slice => Err(OracleError::Incompatible("the fixed-magnetization walk needs a magnetization")),
        ChainKind::Glauber => Kernel::from_rows(n, state_space(model), |x| glauber::kernel_row(model, x)),
        ChainKind::Polarized => Kernel::from_rows(n, state_space(model), |x| polarized_kernel_row(model, x)),
        ChainKind::FixedMag => Kernel::from_rows(n, state_space(model), |x| fixed_mag_kernel_row(model, x)),
    }
}

/// The polarized walk as the product `D·U` of its down operator
/// `D[x, T]` (`1/n` for `T = x₊∖{i}`, `(n − |x₊|)/n` for `T = x₊`) and the
/// Bayes-posterior up operator `U[T, x'] = ν(x')D[x', T]/(νD)(T)`. Rows and
/// columns are indexed by configuration index.
pub fn polarized_product_kernel(model: &IsingModel) -> Result<DMatrix<f64>, OracleError> {
    let n = model.n();
    if n > 8 {
        return Err(OracleError::TooLarge { n, cap: 8 });
    }
    let nu = exact_distribution(model)?;
    let size = 1usize << n;
    let nf = n as f64;
    let mut d = DMatrix::<f64>::zeros(size, size);
    for x in 0..size {
        let plus = (x as u64).count_ones() as f64;
        d[(x, x)] += (nf - plus) / nf;
        for i in 0..n {
            if x >> i & 1 == 1 {
                d[(x, x & !(1 << i))] += 1.0 / nf;
            }
        }
    }
    let p = DMatrix::from_row_slice(1, size, nu.probabilities());
    let marg = &p * &d;
    let mut u = DMatrix::<f64>::zeros(size, size);
    for t in 0..size {
        if marg[(0, t)] <= 0.0 {
            continue;
        }
        for x in 0..size {
            u[(t, x)] = nu.probabilities()[x] * d[(x, t)] / marg[(0, t)];
        }
    }
    Ok(d * u)
}

/// Weighted family of `k`-subsets of `{0, …, m−1}`, as bitmasks.
#[derive(Debug, Clone)]
pub struct WeightedComplex {
    m: usize,
    k: usize,
    facets: Vec<(u32, f64)>,
}

impl WeightedComplex {
    pub fn new(m: usize, k: usize, facets: Vec<(u32, f64)>) -> Result<Self, OracleError> {
        if m > 20 || k == 0 || k > m {
            return Err(OracleError::InvalidComplex(format!("need 1 ≤ k ≤ m ≤ 20, got m={m}, k={k}")));
        }
        for &(s, w) in &facets {
            if s.count_ones() as usize != k || (s >> m) != 0 {
                return Err(OracleError::InvalidComplex(format!("{s:#b} is not a {k}-subset of [{m}]")));
            }
            if !(w >= 0.0 && w.is_finite()) {
                return Err(OracleError::InvalidComplex(format!("weight {w}")));
            }
        }
        if facets.iter().all(|f| f.1 == 0.0) {
            return Err(OracleError::DegenerateSupport);
        }
        Ok(Self { m, k, facets })
    }

    /// Every `k`-subset of `[m]`, each with weight `weight(mask)`.
    pub fn all_subsets(m: usize, k: usize, mut weight: impl FnMut(u32) -> f64) -> Result<Self, OracleError> {
        let facets = (0u32..1 << m)
            .filter(|s| s.count_ones() as usize == k)
            .map(|s| (s, weight(s)))
            .collect();
        Self::new(m, k, facets)
    }

    /// A configuration `x ∈ {±1}ⁿ` becomes the `n`-subset of `[2n]` holding `i`
    /// for `x_i = +1` and `n + i` for `x_i = −1`.
    pub fn homogenize(dist: &ExactDistribution) -> Result<Self, OracleError> {
        let n = dist.n();
        let full = (1u32 << n) - 1;
        let facets = dist
            .probabilities()
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(s, &p)| {
                let s = s as u32;
                (s | ((full & !s) << n), p)
            })
            .collect();
        Self::new(2 * n, n, facets)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Marginal vector, second-moment matrix and total weight of the facets
    /// containing `pinned`.
    fn moments(&self, pinned: u32) -> (Vec<f64>, DMatrix<f64>, f64) {
        let m = self.m;
        let mut mu = vec![0.0; m];
        let mut second = DMatrix::zeros(m, m);
        let mut total = 0.0;
        for &(s, w) in &self.facets {
            if s & pinned != pinned || w == 0.0 {
                continue;
            }
            total += w;
            for a in 0..m {
                if s >> a & 1 == 0 {
                    continue;
                }
                mu[a] += w;
                for b in 0..m {
                    if s >> b & 1 == 1 {
                        second[(a, b)] += w;
                    }
                }
            }
        }
        if total > 0.0 {
            mu.iter_mut().for_each(|v| *v /= total);
            second /= total;
        }
        (mu, second, total)
    }
}

/// Residuals of the pinning identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PinningResidual {
    /// `Cov(ν₀)` against `E[Cov(ν₁)] + (1/k)·Cov(ν₀) N₀⁺ Cov(ν₀)`.
    pub one_step: f64,
    /// `Cov(ν₀)` against `E[Cov(ν₁)] + Cov(E[1_S | a₁])`.
    pub total_variance: f64,
    /// The one-step form applied at every reachable link, plus the
    /// telescoped sum `Cov(ν₀) = Σ_t E[(1/(k−t))·Cov(ν_t) N_t⁺ Cov(ν_t)]`.
    pub multistep: f64,
    /// Elements with zero marginal, excluded from pinning.
    pub excluded: usize,
}

impl PinningResidual {
    pub fn max(&self) -> f64 {
        self.one_step.max(self.total_variance).max(self.multistep)
    }
}

struct Link {
    cov: DMatrix<f64>,
    /// `(1/(k−t))·Cov N⁺ Cov`
    correction: DMatrix<f64>,
    /// `(element, probability it is pinned next, mean vector after pinning)`
    children: Vec<(usize, f64)>,
}

fn link(complex: &WeightedComplex, pinned: u32) -> Option<Link> {
    let m = complex.m;
    let free = (complex.k - pinned.count_ones() as usize) as f64;
    let (mu, second, total) = complex.moments(pinned);
    if total <= 0.0 {
        return None;
    }
    let mut cov = second;
    for a in 0..m {
        for b in 0..m {
            cov[(a, b)] -= mu[a] * mu[b];
        }
    }
    let mut n_inv = DMatrix::zeros(m, m);
    let mut children = Vec::new();
    for a in 0..m {
        if pinned >> a & 1 == 0 && mu[a] > 0.0 {
            n_inv[(a, a)] = 1.0 / mu[a];
            children.push((a, mu[a] / free));
        }
    }
    let correction = if free > 0.0 {
        &cov * n_inv * &cov / free
    } else {
        DMatrix::zeros(m, m)
    };
    Some(Link { cov, correction, children })
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |a, v| a.max(v.abs()))
}

/// Both sides of the pinning decomposition of `Cov(ν₀)`, by enumeration over
/// the first pinned element and, for the multistep form, over all pinned sets.
pub fn verify_trickledown_pinning(complex: &WeightedComplex) -> Result<PinningResidual, OracleError> {
    let m = complex.m;
    let root = link(complex, 0).ok_or(OracleError::DegenerateSupport)?;
    let excluded = m - root.children.len();

    // one step
    let mut expected_cov = DMatrix::zeros(m, m);
    let mut mean_second = DMatrix::zeros(m, m);
    let mut mean_first = vec![0.0; m];
    for &(a, pa) in &root.children {
        let (mu_a, _, _) = complex.moments(1 << a);
        let child = link(complex, 1 << a).expect("positive marginal");
        expected_cov += &child.cov * pa;
        for i in 0..m {
            mean_first[i] += pa * mu_a[i];
            for j in 0..m {
                mean_second[(i, j)] += pa * mu_a[i] * mu_a[j];
            }
        }
    }
    let mut between = mean_second;
    for i in 0..m {
        for j in 0..m {
            between[(i, j)] -= mean_first[i] * mean_first[j];
        }
    }
    let one_step = max_abs(&(&root.cov - (&expected_cov + &root.correction)));
    let total_variance = max_abs(&(&root.cov - (&expected_cov + between)));

    // every link, weighted by the probability of reaching it
    let mut reach: HashMap<u32, f64> = HashMap::from([(0u32, 1.0)]);
    let mut telescoped = DMatrix::zeros(m, m);
    let mut worst_link: f64 = 0.0;
    for _ in 0..complex.k {
        let mut next: HashMap<u32, f64> = HashMap::new();
        for (&pinned, &w) in &reach {
            let l = link(complex, pinned).expect("reachable link has mass");
            telescoped += &l.correction * w;
            let mut exp_child = DMatrix::zeros(m, m);
            for &(a, pa) in &l.children {
                let cm = pinned | (1 << a);
                let child = link(complex, cm).expect("positive marginal");
                exp_child += &child.cov * pa;
                *next.entry(cm).or_insert(0.0) += w * pa;
            }
            worst_link = worst_link.max(max_abs(&(&l.cov - (exp_child + &l.correction))));
        }
        reach = next;
    }
    let multistep = worst_link.max(max_abs(&(&root.cov - telescoped)));
    Ok(PinningResidual {
        one_step,
        total_variance,
        multistep,
        excluded,
    })
}

const MAX_DEPTH: u32 = 50;
// forced bisections before the error test may stop the recursion
const MIN_DEPTH: u32 = 5;

/// Adaptive Simpson quadrature of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || (depth <= MAX_DEPTH - MIN_DEPTH && delta.abs() <= 15.0 * tol) {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

/// `E[y^p]`, `p = 1..=max_power`, for the density `∝ e^{by}(1 − y²)^{(N−3)/2}`
/// on `[−1, 1]` (two atoms at ±1 when `N = 1`). Uses `y = cos θ` so that the
/// integrand `e^{b(cos θ − 1)} sin^{N−2} θ` is smooth.
pub fn sphere_marginal_moments(dim: usize, b: f64, max_power: u32) -> Vec<f64> {
    if dim == 1 {
        let p = 1.0 / (1.0 + (-2.0 * b).exp());
        return (1..=max_power)
            .map(|k| p + (1.0 - p) * (-1f64).powi(k as i32))
            .collect();
    }
    let shift = b.abs();
    let weight = move |t: f64| (b * t.cos() - shift).exp() * t.sin().powi(dim as i32 - 2);
    let pi = std::f64::consts::PI;
    let z = adaptive_simpson(&weight, 0.0, pi, 1e-14);
    (1..=max_power)
        .map(|k| adaptive_simpson(&|t: f64| t.cos().powi(k as i32) * weight(t), 0.0, pi, 1e-14) / z)
        .collect()
}

/// Normalized CDF of the `N = 3` marginal, `(e^{by} − e^{−b})/(e^b − e^{−b})`.
pub fn sphere_n3_cdf(b: f64, y: f64) -> f64 {
    if b == 0.0 {
        return (y + 1.0) / 2.0;
    }
    // e^{−2b}-scaled numerator and denominator
    ((b * (y - 1.0)).exp() - (-2.0 * b).exp()) / (-(-2.0 * b).exp_m1())
}

/// Inverse of [`sphere_n3_cdf`].
pub fn sphere_n3_quantile(b: f64, p: f64) -> f64 {
    if b == 0.0 {
        return 2.0 * p - 1.0;
    }
    1.0 + (-(1.0 - p) * -(-2.0 * b).exp_m1()).ln_1p() / b
}

/// Grid stand-in for O(2) Glauber dynamics: each spin takes one of `grid`
/// equally spaced angles and is resampled from its conditional law restricted
/// to the grid. Returns the kernel (states in mixed radix, site 0 fastest)
/// and the grid-restricted target law.
pub fn on_glauber_grid_kernel(model: &OnModel, grid: usize) -> Result<(DMatrix<f64>, Vec<f64>), OracleError> {
    if model.dim() != 2 {
        return Err(OracleError::Incompatible("the grid surrogate is for planar spins"));
    }
    let n = model.n();
    let size = grid
        .checked_pow(n as u32)
        .filter(|&s| s <= 4096)
        .ok_or(OracleError::TooLarge { n, cap: 4096 })?;
    let angle = |g: usize| 2.0 * std::f64::consts::PI * g as f64 / grid as f64;
    let decode = |s: usize| -> Vec<usize> {
        let mut v = Vec::with_capacity(n);
        let mut r = s;
        for _ in 0..n {
            v.push(r % grid);
            r /= grid;
        }
        v
    };
    let spins_of = |digits: &[usize]| -> Vec<f64> {
        digits
            .iter()
            .flat_map(|&g| [angle(g).cos(), angle(g).sin()])
            .collect()
    };
    let lw: Vec<f64> = (0..size).map(|s| model.log_weight(&spins_of(&decode(s)))).collect();
    let top = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut nu: Vec<f64> = lw.iter().map(|l| (l - top).exp()).collect();
    let z: f64 = nu.iter().sum();
    nu.iter_mut().for_each(|p| *p /= z);

    let mut p = DMatrix::zeros(size, size);
    let stride: Vec<usize> = (0..n).map(|i| grid.pow(i as u32)).collect();
    for s in 0..size {
        let digits = decode(s);
        for i in 0..n {
            let base = s - digits[i] * stride[i];
            let logs: Vec<f64> = (0..grid).map(|g| lw[base + g * stride[i]]).collect();
            let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let tot: f64 = logs.iter().map(|l| (l - m).exp()).sum();
            for (g, l) in logs.iter().enumerate() {
                p[(s, base + g * stride[i])] += (l - m).exp() / tot / n as f64;
            }
        }
    }
    Ok((p, nu))
}
