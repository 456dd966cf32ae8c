//! Samplers and diagnostics for Ising-type spin systems.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: Ising models (sparse couplings, field, confinement, optional
//!   magnetization slice), named ensembles and the PSD shift / η summary.
//! - [`graphs`]: random regular and Erdős–Rényi graphs plus spectral diagnostics.
//! - [`thresholds`]: the Volterra curve `q_η`, its closed form for constant
//!   semi-log-concavity, and the tensorization constant.
//! - [`glauber`], [`polarized`], [`sphere`]: the Markov chains.
//! - [`oracle`]: exhaustive enumeration for small systems (exact laws, kernels,
//!   covariances, the pinning trickle-down identity).
//! - [`verify`]: the acceptance criteria, runnable from tests and the CLI.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod glauber;
pub mod graphs;
pub mod io;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod polarized;
pub mod rng;
pub mod sphere;
pub mod thresholds;
pub mod verify;

pub use glauber::{ChainError, GlauberChain, SpinChain};
pub use graphs::{Graph, GraphError, SpectralLambda};
pub use model::{IsingModel, ModelError, SpectralSummary, SpinConfig};
pub use oracle::{ExactDistribution, OracleError};
pub use polarized::tree::{TreeError, WeightedIndexTree};
pub use polarized::{FixedMagChain, PolarizedChain};
pub use sphere::{OnConfig, OnModel, SphereError};
pub use thresholds::{QCurve, ThresholdError};
