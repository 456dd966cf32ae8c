//! Ising-type models on `{±1}^n`.
//!
//! The log-density of a configuration `x` is
//!
//! ```text
//! ½⟨x, Jx⟩ + ⟨h, x⟩ − (γ/2n)(Σᵢ xᵢ)²
//! ```
//!
//! restricted to the slice `Σᵢ xᵢ = k` when a magnetization is set. `J` is
//! stored as sorted off-diagonal triplets, a uniform diagonal `α` and a uniform
//! off-diagonal coupling `c` (so `J = sparse + c(11ᵀ − I) + αI`). The diagonal
//! never enters the dynamics since `xᵢ² = 1`. The rank-one parts (`c` and the
//! confinement `γ`) are never materialized: their contribution to a local field
//! is `−(γ/n − c)(S − xᵢ)` with `S` the cached spin sum.

mod ensembles;
mod spectral;

pub use ensembles::{
    build_antiferro, build_curie_weiss, build_diluted_sk, build_hopfield,
    build_hopfield_with_patterns, build_random_psd, build_sk, AntiferroSummary,
};
pub use spectral::{shift_to_psd, SpectralSummary};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("site index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("pair ({0}, {1}) listed more than once")]
    DuplicatePair(usize, usize),
    #[error("diagonal entry ({0}, {0}) given as a coupling triplet")]
    SelfCoupling(usize),
    #[error("field has length {got}, expected {expected}")]
    FieldLength { expected: usize, got: usize },
    #[error("confinement strength must be finite and non-negative, got {0}")]
    InvalidGamma(f64),
    #[error("magnetization {k} is not attainable with n = {n} spins")]
    InvalidMagnetization { k: i64, n: usize },
    #[error("matrix is not symmetric")]
    NonSymmetric,
    #[error("matrix has a non-zero diagonal")]
    NonZeroDiagonal,
    #[error("non-finite parameter")]
    NonFinite,
    #[error("graph has no vertices")]
    EmptyGraph,
    #[error("configuration has length {got}, expected {expected}")]
    ConfigLength { expected: usize, got: usize },
    #[error("spin values must be ±1")]
    InvalidSpin,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// An Ising model with sparse couplings, external field, confinement and an
/// optional magnetization slice. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    n: usize,
    triplets: Vec<(usize, usize, f64)>,
    diagonal: f64,
    uniform_coupling: f64,
    h: Vec<f64>,
    gamma: f64,
    magnetization: Option<i64>,
    // symmetric CSR view of `triplets`
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl IsingModel {
    /// Builds a model from off-diagonal triplets. Pairs may be given in either
    /// order; each unordered pair may appear once.
    pub fn new(
        n: usize,
        triplets: Vec<(usize, usize, f64)>,
        h: Vec<f64>,
        gamma: f64,
        magnetization: Option<i64>,
    ) -> Result<Self, ModelError> {
        if h.len() != n {
            return Err(ModelError::FieldLength {
                expected: n,
                got: h.len(),
            });
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite);
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(ModelError::InvalidGamma(gamma));
        }
        if let Some(k) = magnetization {
            check_magnetization(k, n)?;
        }
        let mut trip = Vec::with_capacity(triplets.len());
        for (i, j, v) in triplets {
            if i >= n {
                return Err(ModelError::IndexOutOfRange { index: i, n });
            }
            if j >= n {
                return Err(ModelError::IndexOutOfRange { index: j, n });
            }
            if i == j {
                return Err(ModelError::SelfCoupling(i));
            }
            if !v.is_finite() {
                return Err(ModelError::NonFinite);
            }
            trip.push((i.min(j), i.max(j), v));
        }
        trip.sort_by_key(|a| (a.0, a.1));
        for w in trip.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 == w[1].1 {
                return Err(ModelError::DuplicatePair(w[0].0, w[0].1));
            }
        }

        let mut degree = vec![0usize; n];
        for &(i, j, _) in &trip {
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut row_ptr = vec![0usize; n + 1];
        for i in 0..n {
            row_ptr[i + 1] = row_ptr[i] + degree[i];
        }
        let mut fill = row_ptr.clone();
        let mut cols = vec![0usize; row_ptr[n]];
        let mut vals = vec![0.0; row_ptr[n]];
        for &(i, j, v) in &trip {
            cols[fill[i]] = j;
            vals[fill[i]] = v;
            fill[i] += 1;
            cols[fill[j]] = i;
            vals[fill[j]] = v;
            fill[j] += 1;
        }

        Ok(Self {
            n,
            triplets: trip,
            diagonal: 0.0,
            uniform_coupling: 0.0,
            h,
            gamma,
            magnetization,
            row_ptr,
            cols,
            vals,
        })
    }

    /// Zero couplings, zero field.
    pub fn free(n: usize) -> Self {
        Self::new(n, Vec::new(), vec![0.0; n], 0.0, None).expect("valid")
    }

    pub fn with_diagonal(mut self, alpha: f64) -> Self {
        self.diagonal = alpha;
        self
    }

    /// Adds `c` to every off-diagonal entry of `J` (kept implicit).
    pub fn with_uniform_coupling(mut self, c: f64) -> Self {
        self.uniform_coupling = c;
        self
    }

    pub fn with_field(mut self, h: Vec<f64>) -> Result<Self, ModelError> {
        if h.len() != self.n {
            return Err(ModelError::FieldLength {
                expected: self.n,
                got: h.len(),
            });
        }
        self.h = h;
        Ok(self)
    }

    pub fn with_gamma(mut self, gamma: f64) -> Result<Self, ModelError> {
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(ModelError::InvalidGamma(gamma));
        }
        self.gamma = gamma;
        Ok(self)
    }

    pub fn with_magnetization(mut self, k: Option<i64>) -> Result<Self, ModelError> {
        if let Some(k) = k {
            check_magnetization(k, self.n)?;
        }
        self.magnetization = k;
        Ok(self)
    }

    /// Adds the soft constraint `−(λ/2)(Σx − k)²`, i.e. `γ += nλ` and `h += λk`.
    pub fn with_slice_confinement(mut self, k: i64, lambda: f64) -> Result<Self, ModelError> {
        check_magnetization(k, self.n)?;
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(ModelError::InvalidGamma(lambda));
        }
        self.gamma += self.n as f64 * lambda;
        for hi in &mut self.h {
            *hi += lambda * k as f64;
        }
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }

    pub fn diagonal(&self) -> f64 {
        self.diagonal
    }

    pub fn uniform_coupling(&self) -> f64 {
        self.uniform_coupling
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn magnetization(&self) -> Option<i64> {
        self.magnetization
    }

    /// Number of `+1` spins on the slice, if a magnetization is set.
    pub fn plus_count(&self) -> Option<usize> {
        self.magnetization
            .map(|k| ((self.n as i64 + k) / 2) as usize)
    }

    /// Sparse off-diagonal neighbours of site `i`, excluding the uniform coupling.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n)
            .map(|i| self.row_ptr[i + 1] - self.row_ptr[i])
            .max()
            .unwrap_or(0)
    }

    /// Coefficient `κ = γ/n − c` of the rank-one term in every local field.
    pub fn rank_one(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.gamma / self.n as f64 - self.uniform_coupling
        }
    }

    /// Unnormalized log-density of `x` (ignores the slice constraint).
    pub fn log_weight(&self, x: &[i8]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        let mut e = 0.0;
        for &(i, j, v) in &self.triplets {
            e += v * f64::from(x[i]) * f64::from(x[j]);
        }
        let s: f64 = x.iter().map(|&v| f64::from(v)).sum();
        e += self.h.iter().zip(x).map(|(h, &v)| h * f64::from(v)).sum::<f64>();
        let n = self.n as f64;
        e += 0.5 * self.diagonal * n;
        e += 0.5 * self.uniform_coupling * (s * s - n);
        e -= self.gamma / (2.0 * n) * s * s;
        e
    }

    /// Sparse part of the local field, `Σ_{j≠i} J_ij x_j + h_i` without the
    /// rank-one terms, computed from scratch.
    pub fn fresh_cached_field(&self, x: &[i8], i: usize) -> f64 {
        self.h[i]
            + self
                .neighbors(i)
                .map(|(j, v)| v * f64::from(x[j]))
                .sum::<f64>()
    }

    /// Full local field `m_i` computed from scratch.
    pub fn fresh_local_field(&self, x: &[i8], i: usize) -> f64 {
        let s: i64 = x.iter().map(|&v| i64::from(v)).sum();
        self.fresh_cached_field(x, i) - self.rank_one() * (s - i64::from(x[i])) as f64
    }

    pub fn allows(&self, x: &[i8]) -> bool {
        match self.magnetization {
            None => true,
            Some(k) => x.iter().map(|&v| i64::from(v)).sum::<i64>() == k,
        }
    }
}

fn check_magnetization(k: i64, n: usize) -> Result<(), ModelError> {
    let ni = n as i64;
    if k.abs() > ni || (ni - k).rem_euclid(2) != 0 {
        return Err(ModelError::InvalidMagnetization { k, n });
    }
    Ok(())
}

/// Configuration index: bit `b` set iff site `b` is `+1`.
pub fn config_index(x: &[i8]) -> usize {
    x.iter()
        .enumerate()
        .filter(|(_, &v)| v > 0)
        .fold(0usize, |acc, (b, _)| acc | (1 << b))
}

pub fn config_from_index(index: usize, n: usize) -> Vec<i8> {
    (0..n)
        .map(|b| if index >> b & 1 == 1 { 1 } else { -1 })
        .collect()
}

/// A ±1 configuration with cached local fields and spin sum.
///
/// `cached_field(i)` holds `Σ_{j≠i} J_ij x_j + h_i` over the sparse couplings;
/// the rank-one contribution is added from `spin_sum` on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinConfig {
    x: Vec<i8>,
    field: Vec<f64>,
    spin_sum: i64,
}

impl SpinConfig {
    pub fn new(model: &IsingModel, x: Vec<i8>) -> Result<Self, ModelError> {
        if x.len() != model.n() {
            return Err(ModelError::ConfigLength {
                expected: model.n(),
                got: x.len(),
            });
        }
        if x.iter().any(|&v| v != 1 && v != -1) {
            return Err(ModelError::InvalidSpin);
        }
        let mut c = Self {
            x,
            field: vec![0.0; model.n()],
            spin_sum: 0,
        };
        c.refresh(model);
        Ok(c)
    }

    pub fn all_minus(model: &IsingModel) -> Self {
        Self::new(model, vec![-1; model.n()]).expect("valid length")
    }

    pub fn all_plus(model: &IsingModel) -> Self {
        Self::new(model, vec![1; model.n()]).expect("valid length")
    }

    pub fn from_index(model: &IsingModel, index: usize) -> Self {
        Self::new(model, config_from_index(index, model.n())).expect("valid length")
    }

    /// Recomputes every cache from the spins.
    pub fn refresh(&mut self, model: &IsingModel) {
        self.spin_sum = self.x.iter().map(|&v| i64::from(v)).sum();
        for i in 0..self.x.len() {
            self.field[i] = model.fresh_cached_field(&self.x, i);
        }
    }

    pub fn spins(&self) -> &[i8] {
        &self.x
    }

    pub fn spin(&self, i: usize) -> i8 {
        self.x[i]
    }

    pub fn spin_sum(&self) -> i64 {
        self.spin_sum
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn plus_count(&self) -> usize {
        ((self.x.len() as i64 + self.spin_sum) / 2) as usize
    }

    pub fn cached_field(&self, i: usize) -> f64 {
        self.field[i]
    }

    /// `m_i = Σ_{j≠i} J_ij x_j + h_i − (γ/n)(S − x_i)` (with the uniform
    /// coupling folded into the rank-one coefficient). No bounds check.
    #[inline]
    pub fn field(&self, model: &IsingModel, i: usize) -> f64 {
        self.field[i] - model.rank_one() * (self.spin_sum - i64::from(self.x[i])) as f64
    }

    /// Sets site `i` to `s`, updating the neighbours' caches in `O(d_i)`.
    /// Returns whether the spin changed.
    pub fn set(&mut self, model: &IsingModel, i: usize, s: i8) -> bool {
        debug_assert!(s == 1 || s == -1);
        if self.x[i] == s {
            return false;
        }
        self.x[i] = s;
        let delta = 2.0 * f64::from(s);
        for (j, v) in model.neighbors(i) {
            self.field[j] += v * delta;
        }
        self.spin_sum += 2 * i64::from(s);
        true
    }

    pub fn flip(&mut self, model: &IsingModel, i: usize) {
        let s = -self.x[i];
        self.set(model, i, s);
    }

    /// Largest deviation of the cached fields from a fresh recomputation.
    pub fn max_cache_error(&self, model: &IsingModel) -> f64 {
        let s: i64 = self.x.iter().map(|&v| i64::from(v)).sum();
        assert_eq!(s, self.spin_sum, "spin sum cache out of sync");
        (0..self.x.len())
            .map(|i| (self.field[i] - model.fresh_cached_field(&self.x, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn index(&self) -> usize {
        config_index(&self.x)
    }
}

/// Local field `m_i` at site `i`, including the confinement term.
pub fn local_field(model: &IsingModel, config: &SpinConfig, i: usize) -> Result<f64, ModelError> {
    if i >= model.n() {
        return Err(ModelError::IndexOutOfRange {
            index: i,
            n: model.n(),
        });
    }
    Ok(config.field(model, i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn zero_model_has_zero_field() {
        let m = IsingModel::free(5);
        let c = SpinConfig::new(&m, vec![1, -1, 1, 1, -1]).unwrap();
        for i in 0..5 {
            assert_eq!(local_field(&m, &c, i).unwrap(), 0.0);
        }
    }

    #[test]
    fn two_site_field() {
        let beta = 0.7;
        let m = IsingModel::new(2, vec![(0, 1, beta)], vec![0.0; 2], 0.0, None).unwrap();
        let c = SpinConfig::new(&m, vec![-1, 1]).unwrap();
        assert_abs_diff_eq!(local_field(&m, &c, 0).unwrap(), beta);
    }

    #[test]
    fn confinement_field_by_hand() {
        // −(γ/2n)(S_{∼i} ± 1)² difference gives −(γ/n)·S_{∼i}
        let m = IsingModel::new(3, vec![], vec![0.0; 3], 3.0, None).unwrap();
        let c = SpinConfig::new(&m, vec![1, 1, -1]).unwrap();
        assert_abs_diff_eq!(local_field(&m, &c, 0).unwrap(), 0.0);
        let c = SpinConfig::new(&m, vec![1, 1, 1]).unwrap();
        assert_abs_diff_eq!(local_field(&m, &c, 0).unwrap(), -2.0);
    }

    #[test]
    fn field_matches_log_weight_difference() {
        let m = IsingModel::new(
            4,
            vec![(0, 1, 0.3), (1, 3, -0.4), (0, 2, 0.2)],
            vec![0.1, -0.2, 0.3, 0.0],
            2.5,
            None,
        )
        .unwrap()
        .with_uniform_coupling(0.15)
        .with_diagonal(0.9);
        let x = vec![1, -1, -1, 1];
        let c = SpinConfig::new(&m, x.clone()).unwrap();
        for i in 0..4 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] = 1;
            xm[i] = -1;
            let diff = m.log_weight(&xp) - m.log_weight(&xm);
            assert_abs_diff_eq!(diff, 2.0 * c.field(&m, i), epsilon = 1e-12);
        }
    }

    #[test]
    fn out_of_range_site() {
        let m = IsingModel::free(2);
        let c = SpinConfig::all_minus(&m);
        assert!(matches!(
            local_field(&m, &c, 2),
            Err(ModelError::IndexOutOfRange { index: 2, n: 2 })
        ));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            IsingModel::new(3, vec![(0, 1, 1.0), (1, 0, 2.0)], vec![0.0; 3], 0.0, None),
            Err(ModelError::DuplicatePair(0, 1))
        ));
        assert!(matches!(
            IsingModel::new(3, vec![(0, 3, 1.0)], vec![0.0; 3], 0.0, None),
            Err(ModelError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            IsingModel::new(3, vec![], vec![0.0; 3], -1.0, None),
            Err(ModelError::InvalidGamma(_))
        ));
        assert!(matches!(
            IsingModel::new(3, vec![], vec![0.0; 3], 0.0, Some(0)),
            Err(ModelError::InvalidMagnetization { .. })
        ));
        assert!(IsingModel::new(3, vec![], vec![0.0; 3], 0.0, Some(-1)).is_ok());
        assert!(matches!(
            IsingModel::new(3, vec![], vec![0.0; 3], 0.0, Some(5)),
            Err(ModelError::InvalidMagnetization { .. })
        ));
    }

    #[test]
    fn index_round_trip() {
        let x = vec![1, -1, -1, 1, 1];
        assert_eq!(config_index(&x), 0b11001);
        assert_eq!(config_from_index(0b11001, 5), x);
    }

    proptest! {
        #[test]
        fn incremental_cache_matches_fresh(
            n in 2usize..64,
            seed in any::<u64>(),
            flips in proptest::collection::vec(any::<u16>(), 0..300),
        ) {
            use rand::Rng;
            let mut rng = crate::rng::rng_from_seed(seed);
            let mut trip = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.random::<f64>() < 0.2 {
                        trip.push((i, j, rng.random::<f64>() - 0.5));
                    }
                }
            }
            let h = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            let m = IsingModel::new(n, trip, h, rng.random::<f64>() * 3.0, None)
                .unwrap()
                .with_uniform_coupling(0.1);
            let mut c = SpinConfig::all_minus(&m);
            for f in flips {
                c.flip(&m, f as usize % n);
            }
            prop_assert!(c.max_cache_error(&m) < 1e-9);
            for i in 0..n {
                prop_assert!((c.field(&m, i) - m.fresh_local_field(c.spins(), i)).abs() < 1e-9);
            }
        }
    }
}
