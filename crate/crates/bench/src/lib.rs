//! Shared fixtures for the criterion benches.

use spinloc::model::{build_sk, IsingModel};
use spinloc::WeightedIndexTree;

/// Tree on keys `0..len` with weights cycling through 1..=7.
pub fn tree_fixture(len: usize) -> WeightedIndexTree {
    WeightedIndexTree::from_pairs((0..len).map(|k| (k, 1.0 + (k % 7) as f64))).expect("positive weights")
}

/// High-temperature SK model used by the chain benches.
pub fn sk_fixture(n: usize) -> IsingModel {
    build_sk(n, 0.25, 1)
}
