//! Heat-bath Glauber dynamics.

use rand::Rng;
use thiserror::Error;

use crate::model::{config_index, IsingModel, ModelError, SpinConfig};
use crate::rng::ChainRng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("{0} is not ergodic on a magnetization slice")]
    ConstraintViolation(&'static str),
    #[error("the fixed-magnetization walk needs a model with a magnetization")]
    MissingMagnetization,
    #[error("the slice has no +1 spins; the walk is a fixed point")]
    EmptySlice,
    #[error("initial configuration has magnetization {got}, expected {expected}")]
    OffSlice { expected: i64, got: i64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Common interface of the Ising chains.
pub trait SpinChain {
    /// One transition.
    fn step(&mut self) -> Result<(), ChainError>;

    fn config(&self) -> &SpinConfig;

    fn steps_taken(&self) -> u64;

    fn spins(&self) -> &[i8] {
        self.config().spins()
    }

    /// Emits the current configuration, then every `thin`-th one over
    /// `steps` further transitions. An empty slice counts as staying put.
    fn run(&mut self, steps: u64, thin: u64, emit: &mut dyn FnMut(&[i8])) -> Result<(), ChainError> {
        let thin = thin.max(1);
        emit(self.spins());
        for t in 1..=steps {
            match self.step() {
                Ok(()) | Err(ChainError::EmptySlice) => {}
                Err(e) => return Err(e),
            }
            if t % thin == 0 {
                emit(self.spins());
            }
        }
        Ok(())
    }
}

/// `T = ⌈n ln(n/ε)⌉`.
pub fn mixing_steps(n: usize, eps: f64) -> u64 {
    let n = n as f64;
    (n * (n / eps).ln()).ceil().max(0.0) as u64
}

#[inline]
pub fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

/// `P(x_i = +1 | x_{∼i}) = σ(2m_i)`, from a fresh field computation.
pub fn conditional_plus(model: &IsingModel, x: &[i8], i: usize) -> f64 {
    sigmoid(2.0 * model.fresh_local_field(x, i))
}

#[cfg(debug_assertions)]
pub(crate) const CACHE_CHECK_PERIOD: u64 = 1 << 16;

/// Single-site heat-bath chain with uniform site selection.
#[derive(Debug, Clone)]
pub struct GlauberChain<'a> {
    model: &'a IsingModel,
    config: SpinConfig,
    steps: u64,
    rng: ChainRng,
}

impl<'a> GlauberChain<'a> {
    pub fn new(model: &'a IsingModel, x0: Vec<i8>, rng: ChainRng) -> Result<Self, ChainError> {
        if model.magnetization().is_some() {
            return Err(ChainError::ConstraintViolation("Glauber dynamics"));
        }
        Ok(Self {
            model,
            config: SpinConfig::new(model, x0)?,
            steps: 0,
            rng,
        })
    }

    pub fn all_minus(model: &'a IsingModel, rng: ChainRng) -> Result<Self, ChainError> {
        Self::new(model, vec![-1; model.n()], rng)
    }
}

impl SpinChain for GlauberChain<'_> {
    fn step(&mut self) -> Result<(), ChainError> {
        let n = self.model.n();
        if n == 0 {
            return Ok(());
        }
        let i = self.rng.random_range(0..n);
        let p = sigmoid(2.0 * self.config.field(self.model, i));
        let s = if self.rng.random::<f64>() < p { 1 } else { -1 };
        self.config.set(self.model, i, s);
        self.steps += 1;
        #[cfg(debug_assertions)]
        if self.steps.is_multiple_of(CACHE_CHECK_PERIOD) {
            debug_assert!(self.config.max_cache_error(self.model) < 1e-6);
        }
        Ok(())
    }

    fn config(&self) -> &SpinConfig {
        &self.config
    }

    fn steps_taken(&self) -> u64 {
        self.steps
    }
}

/// One Glauber step on a bare spin vector, recomputing the field from scratch.
/// Consumes the generator exactly like [`GlauberChain`].
pub fn reference_step<R: Rng + ?Sized>(model: &IsingModel, x: &mut [i8], rng: &mut R) {
    let n = model.n();
    if n == 0 {
        return;
    }
    let i = rng.random_range(0..n);
    let p = conditional_plus(model, x, i);
    x[i] = if rng.random::<f64>() < p { 1 } else { -1 };
}

/// Transition row of the Glauber kernel from `x`: `(target index, prob)`
/// pairs, possibly repeating the target.
pub fn kernel_row(model: &IsingModel, x: &[i8]) -> Vec<(usize, f64)> {
    let n = model.n();
    let base = config_index(x);
    let mut row = Vec::with_capacity(2 * n);
    for i in 0..n {
        let p = conditional_plus(model, x, i);
        let plus = base | (1 << i);
        let minus = base & !(1 << i);
        row.push((plus, p / n as f64));
        row.push((minus, (1.0 - p) / n as f64));
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use approx::assert_abs_diff_eq;

    #[test]
    fn free_conditional_is_half() {
        let m = IsingModel::free(3);
        assert_eq!(conditional_plus(&m, &[1, -1, 1], 1), 0.5);
    }

    #[test]
    fn two_site_conditional() {
        let m = IsingModel::new(2, vec![(0, 1, 0.5)], vec![0.0; 2], 0.0, None).unwrap();
        let p = conditional_plus(&m, &[-1, 1], 0);
        assert_abs_diff_eq!(p, 0.5f64.exp() / (0.5f64.exp() + (-0.5f64).exp()), epsilon = 1e-15);
    }

    #[test]
    fn refuses_slice() {
        let m = IsingModel::free(4).with_magnetization(Some(0)).unwrap();
        assert!(matches!(
            GlauberChain::all_minus(&m, rng_from_seed(0)),
            Err(ChainError::ConstraintViolation(_))
        ));
    }

    #[test]
    fn zero_steps_emit_initial_only() {
        let m = IsingModel::free(3);
        let mut c = GlauberChain::all_minus(&m, rng_from_seed(0)).unwrap();
        let mut out = Vec::new();
        c.run(0, 1, &mut |x| out.push(x.to_vec())).unwrap();
        assert_eq!(out, vec![vec![-1, -1, -1]]);
    }

    #[test]
    fn schedule() {
        assert_eq!(mixing_steps(10, 0.01), (10.0 * 1000f64.ln()).ceil() as u64);
    }
}
