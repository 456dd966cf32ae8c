use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{IsingModel, ModelError};
use crate::linalg::{lanczos_extremes, symmetric_eigenvalues, LanczosOptions, SymmetricOperator};

/// Extreme eigenvalues of the zero-diagonal couplings `J̃` and the uniform
/// shift `J = J̃ + αI` derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    /// Largest eigenvalue of the shifted matrix.
    pub op_norm_j: f64,
    pub alpha: f64,
    /// `α / ‖J‖`, 0 when `‖J‖ = 0`.
    pub eta: f64,
    pub lambda_min_tilde: f64,
    pub lambda_max_tilde: f64,
}

impl SpectralSummary {
    /// Summary for the minimal PSD shift `α = max(−λ_min, 0)`.
    pub fn from_extremes(lambda_min: f64, lambda_max: f64) -> Self {
        Self::with_alpha((-lambda_min).max(0.0), lambda_min, lambda_max)
    }

    /// Summary for an explicitly chosen diagonal `α`.
    pub fn with_alpha(alpha: f64, lambda_min: f64, lambda_max: f64) -> Self {
        let op = alpha + lambda_max;
        let eta = if op > 0.0 {
            (alpha / op).clamp(0.0, 1.0)
        } else {
            0.0
        };
        Self {
            op_norm_j: op,
            alpha,
            eta,
            lambda_min_tilde: lambda_min,
            lambda_max_tilde: lambda_max,
        }
    }
}

/// PSD shift of a dense symmetric zero-diagonal matrix.
pub fn shift_to_psd(j_tilde: &DMatrix<f64>) -> Result<SpectralSummary, ModelError> {
    let n = j_tilde.nrows();
    if j_tilde.ncols() != n {
        return Err(ModelError::NonSymmetric);
    }
    let scale = j_tilde.iter().fold(1.0_f64, |a, x| a.max(x.abs()));
    for i in 0..n {
        if j_tilde[(i, i)].abs() > 1e-12 * scale {
            return Err(ModelError::NonZeroDiagonal);
        }
        for k in (i + 1)..n {
            if (j_tilde[(i, k)] - j_tilde[(k, i)]).abs() > 1e-12 * scale {
                return Err(ModelError::NonSymmetric);
            }
        }
    }
    if n == 0 {
        return Ok(SpectralSummary::from_extremes(0.0, 0.0));
    }
    let ev = symmetric_eigenvalues(j_tilde);
    Ok(SpectralSummary::from_extremes(ev[0], ev[n - 1]))
}

struct OffDiagonal<'a>(&'a IsingModel);

impl SymmetricOperator for OffDiagonal<'_> {
    fn dim(&self) -> usize {
        self.0.n()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let m = self.0;
        let c = m.uniform_coupling();
        let total: f64 = x.iter().sum();
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = m.neighbors(i).map(|(j, v)| v * x[j]).sum::<f64>() + c * (total - x[i]);
        }
    }
}

const DENSE_LIMIT: usize = 2000;

impl IsingModel {
    /// `J̃`: the off-diagonal couplings as a dense matrix (uniform coupling
    /// included, diagonal zero).
    pub fn off_diagonal_dense(&self) -> DMatrix<f64> {
        let c = self.uniform_coupling();
        let mut m = DMatrix::from_fn(self.n(), self.n(), |i, j| if i == j { 0.0 } else { c });
        for &(i, j, v) in self.triplets() {
            m[(i, j)] += v;
            m[(j, i)] += v;
        }
        m
    }

    /// `J = J̃ + αI` with the stored diagonal.
    pub fn coupling_dense(&self) -> DMatrix<f64> {
        let mut m = self.off_diagonal_dense();
        for i in 0..self.n() {
            m[(i, i)] = self.diagonal();
        }
        m
    }

    /// Extreme eigenvalues `(λ_min, λ_max)` of `J̃`. Dense up to 2000 sites,
    /// Lanczos above.
    pub fn off_diagonal_extremes(&self) -> (f64, f64) {
        let n = self.n();
        if n == 0 {
            return (0.0, 0.0);
        }
        if n <= DENSE_LIMIT {
            let ev = symmetric_eigenvalues(&self.off_diagonal_dense());
            (ev[0], ev[n - 1])
        } else {
            let r = lanczos_extremes(&OffDiagonal(self), &[], LanczosOptions::default());
            (r.min, r.max)
        }
    }

    /// Minimal PSD shift of this model's off-diagonal couplings.
    pub fn spectral_summary(&self) -> SpectralSummary {
        let (lo, hi) = self.off_diagonal_extremes();
        SpectralSummary::from_extremes(lo, hi)
    }

    /// Summary using the stored diagonal as the shift.
    pub fn stored_spectral_summary(&self) -> SpectralSummary {
        let (lo, hi) = self.off_diagonal_extremes();
        SpectralSummary::with_alpha(self.diagonal(), lo, hi)
    }
}
