//! The polarized walk and the fixed-magnetization down-up walk.
//!
//! Both chains keep the minus sites in a [`WeightedIndexTree`] with weight
//! `exp(2b_j − shift)`, where `b_j` is the sparse part of the local field.
//! The rank-one confinement contribution is the same for every minus site, so
//! it is applied to the tree total in O(1) instead of to each weight.
//!
//! Polarized step from `x` with plus set `x₊`:
//!
//! - down: with probability `|x₊|/n` flip a uniform plus site to −1;
//! - up from `T`: stay with probability `(n−|T|)/(n−|T|+L)` where
//!   `L = Σ_{j∉T} exp(2m_j(χ_T))`, otherwise flip `j ∉ T` to +1 with
//!   probability proportional to `exp(2m_j(χ_T))`.

pub mod tree;

use rand::Rng;

use crate::glauber::{ChainError, SpinChain};
use crate::model::{config_index, IsingModel, SpinConfig};
use crate::rng::ChainRng;
use tree::WeightedIndexTree;

const NIL: usize = usize::MAX;
/// Largest exponent stored in the tree before the shift is recomputed.
const EXP_LIMIT: f64 = 575.0;
/// Below this total the tree is rebuilt to recover underflowed weights.
const SUM_FLOOR: f64 = 1e-200;
pub const REANCHOR_PERIOD: u64 = 100_000;

/// Plus-set bookkeeping, minus-site tree and log-weight shared by both walks.
#[derive(Debug, Clone)]
struct DownUpState<'a> {
    model: &'a IsingModel,
    config: SpinConfig,
    plus: Vec<usize>,
    pos: Vec<usize>,
    tree: WeightedIndexTree,
    shift: f64,
    log_weight: f64,
    max_drift: f64,
    rebuilds: u64,
}

impl<'a> DownUpState<'a> {
    fn new(model: &'a IsingModel, x0: Vec<i8>) -> Result<Self, ChainError> {
        let config = SpinConfig::new(model, x0)?;
        let mut s = Self {
            model,
            plus: Vec::new(),
            pos: vec![NIL; model.n()],
            tree: WeightedIndexTree::new(),
            shift: 0.0,
            log_weight: model.log_weight(config.spins()),
            max_drift: 0.0,
            rebuilds: 0,
            config,
        };
        for i in 0..model.n() {
            if s.config.spin(i) > 0 {
                s.pos[i] = s.plus.len();
                s.plus.push(i);
            }
        }
        s.rebuild();
        Ok(s)
    }

    fn exponent(&self, j: usize) -> f64 {
        2.0 * self.config.cached_field(j)
    }

    /// Recomputes every tree weight with a fresh shift.
    fn rebuild(&mut self) {
        let minus: Vec<usize> = (0..self.model.n())
            .filter(|&j| self.config.spin(j) < 0)
            .collect();
        self.shift = minus
            .iter()
            .map(|&j| self.exponent(j))
            .fold(f64::NEG_INFINITY, f64::max);
        if !self.shift.is_finite() {
            self.shift = 0.0;
        }
        let pairs = minus.iter().map(|&j| (j, (self.exponent(j) - self.shift).exp()));
        self.tree = WeightedIndexTree::from_pairs(pairs.collect::<Vec<_>>()).expect("finite weights");
        self.rebuilds += 1;
    }

    fn put(&mut self, j: usize) -> bool {
        let e = self.exponent(j) - self.shift;
        if e > EXP_LIMIT {
            return false;
        }
        self.tree.update(j, e.exp()).expect("finite weight");
        true
    }

    /// Flips site `i` to `s`, keeping plus list, tree and log-weight in sync.
    fn set(&mut self, i: usize, s: i8) {
        if self.config.spin(i) == s {
            return;
        }
        // log ν(x with x_i = +1) − log ν(x with x_i = −1) = 2 m_i
        let m = self.config.field(self.model, i);
        self.log_weight += f64::from(s) * 2.0 * m;
        self.config.set(self.model, i, s);
        let mut ok = true;
        if s > 0 {
            self.tree.delete(i).expect("minus site is in the tree");
            self.pos[i] = self.plus.len();
            self.plus.push(i);
        } else {
            let p = self.pos[i];
            self.plus.swap_remove(p);
            if p < self.plus.len() {
                self.pos[self.plus[p]] = p;
            }
            self.pos[i] = NIL;
            ok &= self.put(i);
        }
        for (k, _) in self.model.neighbors(i) {
            if self.config.spin(k) < 0 {
                ok &= self.put(k);
            }
        }
        if !ok || (!self.tree.is_empty() && self.tree.sum() < SUM_FLOOR) {
            self.rebuild();
        }
    }

    /// `ln Σ_{j ∉ x₊} exp(2m_j(x))` for the current configuration.
    fn log_up_mass(&self) -> f64 {
        let kappa = self.model.rank_one();
        // every minus site sees S − x_j = S + 1
        self.shift - 2.0 * kappa * (self.config.spin_sum() + 1) as f64 + self.tree.sum().ln()
    }

    fn reanchor(&mut self) {
        let fresh = self.model.log_weight(self.config.spins());
        self.max_drift = self.max_drift.max((fresh - self.log_weight).abs());
        self.log_weight = fresh;
        #[cfg(debug_assertions)]
        debug_assert!(self.config.max_cache_error(self.model) < 1e-6);
    }

    fn check(&self) -> Result<(), String> {
        let n = self.model.n();
        if self.plus.len() + self.tree.len() != n {
            return Err("plus set and tree do not partition the sites".into());
        }
        for j in 0..n {
            let minus = self.config.spin(j) < 0;
            if minus != self.tree.contains(j) {
                return Err(format!("tree membership wrong at site {j}"));
            }
            if !minus && self.plus[self.pos[j]] != j {
                return Err(format!("plus list wrong at site {j}"));
            }
            if minus {
                let w = self.tree.weight(j).expect("member");
                let fresh = (2.0 * self.model.fresh_cached_field(self.config.spins(), j) - self.shift).exp();
                if (w - fresh).abs() > 1e-9 * fresh.max(1e-300) {
                    return Err(format!("stale weight at site {j}: {w} vs {fresh}"));
                }
            }
        }
        self.tree.check_invariants()
    }
}

macro_rules! delegate_state {
    ($t:ty) => {
        impl<'a> $t {
            pub fn model(&self) -> &'a IsingModel {
                self.state.model
            }

            pub fn plus_set(&self) -> &[usize] {
                &self.state.plus
            }

            pub fn tree(&self) -> &WeightedIndexTree {
                &self.state.tree
            }

            /// Stored log-weight, equal to `model.log_weight(x)` up to rounding.
            pub fn log_weight(&self) -> f64 {
                self.state.log_weight
            }

            /// Largest discrepancy seen at a re-anchoring point.
            pub fn max_log_weight_drift(&self) -> f64 {
                self.state.max_drift
            }

            /// Current `|V − fresh log-weight|`.
            pub fn log_weight_error(&self) -> f64 {
                (self.state.model.log_weight(self.state.config.spins()) - self.state.log_weight).abs()
            }

            /// Number of full tree rebuilds (initial build included).
            pub fn rebuilds(&self) -> u64 {
                self.state.rebuilds
            }

            /// Checks the plus set, tree membership, tree weights and tree
            /// structure against fresh recomputation.
            pub fn check_invariants(&self) -> Result<(), String> {
                self.state.check()
            }
        }
    };
}

/// The polarized down-up walk.
#[derive(Debug, Clone)]
pub struct PolarizedChain<'a> {
    state: DownUpState<'a>,
    steps: u64,
    rng: ChainRng,
}

impl<'a> PolarizedChain<'a> {
    pub fn new(model: &'a IsingModel, x0: Vec<i8>, rng: ChainRng) -> Result<Self, ChainError> {
        if model.magnetization().is_some() {
            return Err(ChainError::ConstraintViolation("the polarized walk"));
        }
        Ok(Self {
            state: DownUpState::new(model, x0)?,
            steps: 0,
            rng,
        })
    }

    pub fn all_minus(model: &'a IsingModel, rng: ChainRng) -> Result<Self, ChainError> {
        Self::new(model, vec![-1; model.n()], rng)
    }
}

delegate_state!(PolarizedChain<'a>);

impl SpinChain for PolarizedChain<'_> {
    fn step(&mut self) -> Result<(), ChainError> {
        let st = &mut self.state;
        let n = st.model.n();
        if n == 0 {
            return Ok(());
        }
        let u = self.rng.random_range(0..n);
        if u < st.plus.len() {
            let i = st.plus[u];
            st.set(i, -1);
        }
        let free = (n - st.plus.len()) as f64;
        if free > 0.0 {
            // stay with probability free / (free + L)
            let stay = 1.0 / (1.0 + (st.log_up_mass() - free.ln()).exp());
            if self.rng.random::<f64>() >= stay {
                let j = st.tree.sample(&mut self.rng).expect("non-empty tree");
                st.set(j, 1);
            }
        }
        self.steps += 1;
        if self.steps.is_multiple_of(REANCHOR_PERIOD) {
            st.reanchor();
        }
        Ok(())
    }

    fn config(&self) -> &SpinConfig {
        &self.state.config
    }

    fn steps_taken(&self) -> u64 {
        self.steps
    }
}

/// Down-up walk on a magnetization slice: remove a uniform plus site, then
/// add back a minus site with probability proportional to `exp(2m_j)`.
#[derive(Debug, Clone)]
pub struct FixedMagChain<'a> {
    state: DownUpState<'a>,
    steps: u64,
    rng: ChainRng,
}

impl<'a> FixedMagChain<'a> {
    pub fn new(model: &'a IsingModel, x0: Vec<i8>, rng: ChainRng) -> Result<Self, ChainError> {
        let k = model.magnetization().ok_or(ChainError::MissingMagnetization)?;
        let got: i64 = x0.iter().map(|&v| i64::from(v)).sum();
        if got != k {
            return Err(ChainError::OffSlice { expected: k, got });
        }
        Ok(Self {
            state: DownUpState::new(model, x0)?,
            steps: 0,
            rng,
        })
    }

    /// Starts with sites `0..m` at +1.
    pub fn first_sites_plus(model: &'a IsingModel, rng: ChainRng) -> Result<Self, ChainError> {
        let m = model.plus_count().ok_or(ChainError::MissingMagnetization)?;
        let x0 = (0..model.n()).map(|i| if i < m { 1 } else { -1 }).collect();
        Self::new(model, x0, rng)
    }
}

delegate_state!(FixedMagChain<'a>);

impl SpinChain for FixedMagChain<'_> {
    fn step(&mut self) -> Result<(), ChainError> {
        let st = &mut self.state;
        if st.plus.is_empty() {
            return Err(ChainError::EmptySlice);
        }
        let u = self.rng.random_range(0..st.plus.len());
        let i = st.plus[u];
        st.set(i, -1);
        let j = st.tree.sample(&mut self.rng).expect("non-empty tree");
        st.set(j, 1);
        self.steps += 1;
        if self.steps.is_multiple_of(REANCHOR_PERIOD) {
            st.reanchor();
        }
        Ok(())
    }

    fn config(&self) -> &SpinConfig {
        &self.state.config
    }

    fn steps_taken(&self) -> u64 {
        self.steps
    }
}

fn up_row(model: &IsingModel, x: &mut [i8], weight: f64, stay_mass: f64, row: &mut Vec<(usize, f64)>) {
    // probabilities ∝ stay_mass for staying, exp(2m_j) for adding j
    let minus: Vec<usize> = (0..x.len()).filter(|&j| x[j] < 0).collect();
    let logs: Vec<f64> = minus
        .iter()
        .map(|&j| 2.0 * model.fresh_local_field(x, j))
        .collect();
    let mut top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if stay_mass > 0.0 {
        top = top.max(stay_mass.ln());
    }
    let stay = if stay_mass > 0.0 { (stay_mass.ln() - top).exp() } else { 0.0 };
    let total: f64 = stay + logs.iter().map(|l| (l - top).exp()).sum::<f64>();
    let base = config_index(x);
    if stay > 0.0 {
        row.push((base, weight * stay / total));
    }
    for (&j, l) in minus.iter().zip(&logs) {
        row.push((base | (1 << j), weight * (l - top).exp() / total));
    }
}

/// Transition row of the polarized walk from `x`, following the sampling
/// procedure with fresh field computations.
pub fn polarized_kernel_row(model: &IsingModel, x: &[i8]) -> Vec<(usize, f64)> {
    let n = model.n();
    let mut row = Vec::new();
    let mut y = x.to_vec();
    let plus: Vec<usize> = (0..n).filter(|&i| x[i] > 0).collect();
    // down step: remove i ∈ x₊ w.p. 1/n, stay w.p. (n − |x₊|)/n
    let stay_down = (n - plus.len()) as f64 / n as f64;
    if stay_down > 0.0 {
        up_row(model, &mut y, stay_down, (n - plus.len()) as f64, &mut row);
    }
    for &i in &plus {
        y[i] = -1;
        up_row(model, &mut y, 1.0 / n as f64, (n - plus.len() + 1) as f64, &mut row);
        y[i] = 1;
    }
    row
}

/// Transition row of the fixed-magnetization walk from `x`.
pub fn fixed_mag_kernel_row(model: &IsingModel, x: &[i8]) -> Vec<(usize, f64)> {
    let n = model.n();
    let plus: Vec<usize> = (0..n).filter(|&i| x[i] > 0).collect();
    if plus.is_empty() {
        return vec![(config_index(x), 1.0)];
    }
    let mut row = Vec::new();
    let mut y = x.to_vec();
    for &i in &plus {
        y[i] = -1;
        up_row(model, &mut y, 1.0 / plus.len() as f64, 0.0, &mut row);
        y[i] = 1;
    }
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn small_model() -> IsingModel {
        IsingModel::new(
            5,
            vec![(0, 1, 0.2), (1, 2, -0.3), (3, 4, 0.1), (0, 4, 0.05)],
            vec![0.1, -0.2, 0.0, 0.3, -0.1],
            2.0,
            None,
        )
        .unwrap()
    }

    #[test]
    fn rows_are_stochastic() {
        let m = small_model();
        for idx in 0..32 {
            let x = crate::model::config_from_index(idx, 5);
            let s: f64 = polarized_kernel_row(&m, &x).iter().map(|p| p.1).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn invariants_hold_along_run() {
        let m = small_model();
        let mut c = PolarizedChain::all_minus(&m, rng_from_seed(3)).unwrap();
        for _ in 0..2000 {
            let before: Vec<i8> = c.spins().to_vec();
            c.step().unwrap();
            let moved = before.iter().zip(c.spins()).filter(|(a, b)| a != b).count();
            assert!(moved <= 2);
            c.check_invariants().unwrap();
        }
        assert!(c.log_weight_error() < 1e-9);
    }

    #[test]
    fn fixed_mag_keeps_slice() {
        let m = small_model().with_magnetization(Some(1)).unwrap();
        let mut c = FixedMagChain::first_sites_plus(&m, rng_from_seed(1)).unwrap();
        for _ in 0..1000 {
            c.step().unwrap();
            assert_eq!(c.plus_set().len(), 3);
            c.check_invariants().unwrap();
        }
    }

    #[test]
    fn fixed_mag_all_plus_is_identity() {
        let m = small_model().with_magnetization(Some(5)).unwrap();
        let mut c = FixedMagChain::first_sites_plus(&m, rng_from_seed(1)).unwrap();
        for _ in 0..10 {
            c.step().unwrap();
            assert!(c.spins().iter().all(|&s| s == 1));
        }
    }

    #[test]
    fn fixed_mag_empty_slice() {
        let m = small_model().with_magnetization(Some(-5)).unwrap();
        let mut c = FixedMagChain::first_sites_plus(&m, rng_from_seed(1)).unwrap();
        assert!(matches!(c.step(), Err(ChainError::EmptySlice)));
        assert!(c.spins().iter().all(|&s| s == -1));
    }

    #[test]
    fn constructors_check_constraints() {
        let m = small_model();
        assert!(matches!(
            FixedMagChain::first_sites_plus(&m, rng_from_seed(0)),
            Err(ChainError::MissingMagnetization)
        ));
        let ms = m.with_magnetization(Some(1)).unwrap();
        assert!(PolarizedChain::all_minus(&ms, rng_from_seed(0)).is_err());
        assert!(matches!(
            FixedMagChain::new(&ms, vec![-1; 5], rng_from_seed(0)),
            Err(ChainError::OffSlice { .. })
        ));
    }

    #[test]
    fn strong_fields_trigger_rebuilds_without_overflow() {
        let h = vec![400.0, -400.0, 350.0, -300.0];
        let m = IsingModel::new(4, vec![(0, 1, 200.0)], h, 0.0, None).unwrap();
        let mut c = PolarizedChain::all_minus(&m, rng_from_seed(2)).unwrap();
        for _ in 0..500 {
            c.step().unwrap();
            c.check_invariants().unwrap();
        }
    }
}
