//! O(N)-model Glauber dynamics.
//!
//! Spins are unit vectors in `R^N`; the measure is
//! `∝ exp(½ Σ J_ij ⟨x_i, x_j⟩ + Σ ⟨h_i, x_i⟩)`. The conditional law of one spin
//! given the rest is the uniform measure tilted by `exp(⟨w_i, x_i⟩)` with
//! `w_i = h_i + Σ_j J_ij x_j`. It is sampled by drawing the coordinate along
//! `w_i` from its one-dimensional marginal, a uniform direction in the
//! orthogonal complement, and reflecting `e₁` onto `w_i/‖w_i‖`.

pub mod envelope;
pub mod marginal;

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::model::IsingModel;
use crate::rng::ChainRng;
pub use marginal::sample_sphere_marginal;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SphereError {
    #[error("spin dimension must be at least 1, got {0}")]
    BadDimension(usize),
    #[error("potential must vanish to first order at 0 (V(0) = {v0}, V'(0) = {dv0})")]
    InvalidPotential { v0: f64, dv0: f64 },
    #[error("inner interval must contain 0 and lie in the domain, with κ ≥ 1")]
    InvalidEnvelope,
    #[error("eps must lie in (0, 1), got {0}")]
    InvalidEps(f64),
    #[error("non-finite input")]
    NonFinite,
    #[error("field has {got} components, expected {expected}")]
    FieldLength { expected: usize, got: usize },
    #[error("the O(N) model takes plain couplings: {0}")]
    Unsupported(&'static str),
}

/// Couplings (as the off-diagonal part of an [`IsingModel`]) plus one field
/// vector per site.
#[derive(Debug, Clone)]
pub struct OnModel {
    couplings: IsingModel,
    dim: usize,
    h: Vec<f64>,
}

impl OnModel {
    /// `h` holds `n` vectors of length `dim`, flattened site-major.
    pub fn new(couplings: IsingModel, dim: usize, h: Vec<f64>) -> Result<Self, SphereError> {
        if dim < 1 {
            return Err(SphereError::BadDimension(dim));
        }
        if couplings.gamma() != 0.0 {
            return Err(SphereError::Unsupported("confinement"));
        }
        if couplings.magnetization().is_some() {
            return Err(SphereError::Unsupported("magnetization slice"));
        }
        if couplings.uniform_coupling() != 0.0 {
            return Err(SphereError::Unsupported("uniform coupling"));
        }
        if h.len() != couplings.n() * dim {
            return Err(SphereError::FieldLength {
                expected: couplings.n() * dim,
                got: h.len(),
            });
        }
        if h.iter().any(|v| !v.is_finite()) {
            return Err(SphereError::NonFinite);
        }
        Ok(Self { couplings, dim, h })
    }

    /// Same couplings; the Ising field `h_i` becomes `h_i·e₁`.
    pub fn from_ising(model: &IsingModel, dim: usize) -> Result<Self, SphereError> {
        let n = model.n();
        let mut h = vec![0.0; n * dim.max(1)];
        for i in 0..n {
            if dim >= 1 {
                h[i * dim] = model.h()[i];
            }
        }
        let bare = model.clone().with_field(vec![0.0; n]).expect("same length");
        Self::new(bare, dim, h)
    }

    pub fn n(&self) -> usize {
        self.couplings.n()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn couplings(&self) -> &IsingModel {
        &self.couplings
    }

    pub fn field(&self, i: usize) -> &[f64] {
        &self.h[i * self.dim..(i + 1) * self.dim]
    }

    /// Unnormalized log-density of a configuration.
    pub fn log_weight(&self, spins: &[f64]) -> f64 {
        let d = self.dim;
        let dot = |i: usize, j: usize| -> f64 {
            (0..d).map(|k| spins[i * d + k] * spins[j * d + k]).sum()
        };
        let mut e = 0.0;
        for &(i, j, v) in self.couplings.triplets() {
            e += v * dot(i, j);
        }
        for i in 0..self.n() {
            e += (0..d).map(|k| self.h[i * d + k] * spins[i * d + k]).sum::<f64>();
        }
        e
    }
}

/// Unit spins with cached tilts `w_i = h_i + Σ_j J_ij x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct OnConfig {
    dim: usize,
    spins: Vec<f64>,
    fields: Vec<f64>,
}

impl OnConfig {
    /// Every spin along `+e₁`.
    pub fn aligned(model: &OnModel) -> Self {
        let d = model.dim();
        let mut spins = vec![0.0; model.n() * d];
        for i in 0..model.n() {
            spins[i * d] = 1.0;
        }
        Self::new(model, spins).expect("unit spins")
    }

    pub fn new(model: &OnModel, spins: Vec<f64>) -> Result<Self, SphereError> {
        let d = model.dim();
        if spins.len() != model.n() * d {
            return Err(SphereError::FieldLength {
                expected: model.n() * d,
                got: spins.len(),
            });
        }
        let mut c = Self {
            dim: d,
            spins,
            fields: vec![0.0; model.n() * d],
        };
        for i in 0..model.n() {
            let nrm = c.spin(i).iter().map(|x| x * x).sum::<f64>().sqrt();
            if !(nrm > 0.0 && nrm.is_finite()) {
                return Err(SphereError::NonFinite);
            }
            c.spins[i * d..(i + 1) * d].iter_mut().for_each(|x| *x /= nrm);
        }
        c.refresh(model);
        Ok(c)
    }

    pub fn refresh(&mut self, model: &OnModel) {
        for i in 0..model.n() {
            let w = fresh_tilt(model, &self.spins, i);
            self.fields[i * self.dim..(i + 1) * self.dim].copy_from_slice(&w);
        }
    }

    pub fn spins(&self) -> &[f64] {
        &self.spins
    }

    pub fn spin(&self, i: usize) -> &[f64] {
        &self.spins[i * self.dim..(i + 1) * self.dim]
    }

    pub fn tilt(&self, i: usize) -> &[f64] {
        &self.fields[i * self.dim..(i + 1) * self.dim]
    }

    /// Replaces spin `i`, updating the neighbours' tilts in `O(d_i·N)`.
    pub fn set_spin(&mut self, model: &OnModel, i: usize, s: &[f64]) {
        let d = self.dim;
        let old = &self.spins[i * d..(i + 1) * d];
        for (j, v) in model.couplings().neighbors(i) {
            for ((f, new), prev) in self.fields[j * d..(j + 1) * d].iter_mut().zip(s).zip(old) {
                *f += v * (new - prev);
            }
        }
        self.spins[i * d..(i + 1) * d].copy_from_slice(s);
    }

    pub fn max_cache_error(&self, model: &OnModel) -> f64 {
        (0..model.n())
            .flat_map(|i| {
                let w = fresh_tilt(model, &self.spins, i);
                let cached = self.tilt(i).to_vec();
                w.into_iter().zip(cached).map(|(a, b)| (a - b).abs())
            })
            .fold(0.0, f64::max)
    }

    pub fn max_norm_error(&self) -> f64 {
        self.spins
            .chunks(self.dim)
            .map(|s| (s.iter().map(|x| x * x).sum::<f64>().sqrt() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

fn fresh_tilt(model: &OnModel, spins: &[f64], i: usize) -> Vec<f64> {
    let d = model.dim();
    let mut w = model.field(i).to_vec();
    for (j, v) in model.couplings().neighbors(i) {
        for k in 0..d {
            w[k] += v * spins[j * d + k];
        }
    }
    w
}

fn random_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let nrm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > 1e-12 {
            return g.into_iter().map(|x| x / nrm).collect();
        }
    }
}

/// Unit vector from the uniform measure on `S^{N−1}` tilted by `exp(⟨w, s⟩)`,
/// within TV `eps`.
pub fn sample_conditional_spin<R: Rng + ?Sized>(
    w: &[f64],
    eps: f64,
    rng: &mut R,
) -> Result<Vec<f64>, SphereError> {
    let dim = w.len();
    if dim < 1 {
        return Err(SphereError::BadDimension(dim));
    }
    let b = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !b.is_finite() {
        return Err(SphereError::NonFinite);
    }
    if b == 0.0 {
        return Ok(random_unit(dim, rng));
    }
    let y = sample_sphere_marginal(dim, b, eps, rng)?;
    if dim == 1 {
        return Ok(vec![y * w[0].signum()]);
    }
    // s = y e₁ + √(1−y²) (0, v)
    let v = random_unit(dim - 1, rng);
    let r = (1.0 - y * y).max(0.0).sqrt();
    let mut s = Vec::with_capacity(dim);
    s.push(y);
    s.extend(v.iter().map(|x| r * x));
    // Householder reflection taking e₁ to u = w/‖w‖: H = I − 2ppᵀ/(pᵀp), p = e₁ − u
    let mut p: Vec<f64> = w.iter().map(|x| -x / b).collect();
    p[0] += 1.0;
    let pp: f64 = p.iter().map(|x| x * x).sum();
    if pp > 1e-30 {
        let ps: f64 = p.iter().zip(&s).map(|(a, c)| a * c).sum();
        let f = 2.0 * ps / pp;
        for (sk, pk) in s.iter_mut().zip(&p) {
            *sk -= f * pk;
        }
    }
    let nrm = s.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(s.into_iter().map(|x| x / nrm).collect())
}

/// Glauber dynamics for the O(N) model.
#[derive(Debug, Clone)]
pub struct OnGlauberChain<'a> {
    model: &'a OnModel,
    config: OnConfig,
    eps: f64,
    steps: u64,
    rng: ChainRng,
}

impl<'a> OnGlauberChain<'a> {
    /// `eps` is the per-step TV budget.
    pub fn new(model: &'a OnModel, config: OnConfig, eps: f64, rng: ChainRng) -> Result<Self, SphereError> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(SphereError::InvalidEps(eps));
        }
        Ok(Self {
            model,
            config,
            eps,
            steps: 0,
            rng,
        })
    }

    /// Per-step budget `ε/T` for a total budget `ε` over `T = n ln(n/ε)` steps.
    pub fn per_step_eps(n: usize, eps_total: f64) -> f64 {
        let t = crate::glauber::mixing_steps(n, eps_total).max(1);
        eps_total / t as f64
    }

    pub fn step(&mut self) -> Result<(), SphereError> {
        let n = self.model.n();
        if n == 0 {
            return Ok(());
        }
        let i = self.rng.random_range(0..n);
        let s = sample_conditional_spin(self.config.tilt(i), self.eps, &mut self.rng)?;
        self.config.set_spin(self.model, i, &s);
        self.steps += 1;
        Ok(())
    }

    pub fn config(&self) -> &OnConfig {
        &self.config
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps
    }

    /// Emits the current spins, then every `thin`-th configuration.
    pub fn run(&mut self, steps: u64, thin: u64, emit: &mut dyn FnMut(&[f64])) -> Result<(), SphereError> {
        let thin = thin.max(1);
        emit(self.config.spins());
        for t in 1..=steps {
            self.step()?;
            if t % thin == 0 {
                emit(self.config.spins());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn conditional_spin_is_unit_and_aligned() {
        let mut rng = rng_from_seed(4);
        let w = [0.0, 3.0, -4.0];
        let mut mean = [0.0; 3];
        for _ in 0..20_000 {
            let s = sample_conditional_spin(&w, 1e-8, &mut rng).unwrap();
            let n: f64 = s.iter().map(|x| x * x).sum();
            assert!((n - 1.0).abs() < 1e-12);
            for k in 0..3 {
                mean[k] += s[k] / 2e4;
            }
        }
        // E⟨s, u⟩ = coth(5) − 1/5 in three dimensions
        let along = (mean[1] * 3.0 - mean[2] * 4.0) / 5.0;
        let exact = 1.0 / 5f64.tanh() - 0.2;
        assert!((along - exact).abs() < 0.01, "{along} vs {exact}");
        assert!(mean[0].abs() < 0.02);
    }

    #[test]
    fn chain_keeps_caches() {
        let ising = IsingModel::new(4, vec![(0, 1, 0.3), (1, 2, -0.5), (2, 3, 0.2)], vec![0.1; 4], 0.0, None).unwrap();
        let model = OnModel::from_ising(&ising, 3).unwrap();
        let mut chain = OnGlauberChain::new(&model, OnConfig::aligned(&model), 1e-6, rng_from_seed(3)).unwrap();
        for _ in 0..2000 {
            chain.step().unwrap();
        }
        assert!(chain.config().max_cache_error(&model) < 1e-9);
        assert!(chain.config().max_norm_error() < 1e-12);
    }

    #[test]
    fn rejects_confinement() {
        let ising = IsingModel::new(2, vec![], vec![0.0; 2], 1.0, None).unwrap();
        assert!(matches!(
            OnModel::from_ising(&ising, 2),
            Err(SphereError::Unsupported(_))
        ));
    }
}
