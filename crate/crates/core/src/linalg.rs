//! Symmetric eigenvalue routines.
//!
//! Dense problems go through nalgebra's symmetric eigensolver. Large sparse
//! operators use Lanczos with full reorthogonalization; deflation is done by
//! keeping the Krylov basis orthogonal to the supplied vectors, so the deflated
//! directions never show up as spurious zero Ritz values.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::rng::rng_from_seed;

/// A real symmetric linear operator.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    /// `y = A x`
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

impl SymmetricOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.nrows();
        for (i, yi) in y.iter_mut().enumerate().take(n) {
            *yi = (0..n).map(|j| self[(i, j)] * x[j]).sum();
        }
    }
}

/// All eigenvalues of a dense symmetric matrix, ascending.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Largest eigenvalue magnitude of a dense symmetric matrix.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m)
        .into_iter()
        .fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Maximum Krylov dimension (capped at the operator dimension).
    pub max_dim: usize,
    /// Residual tolerance on the extreme Ritz pairs, relative to `max(1, |θ|)`.
    pub tol: f64,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            max_dim: 400,
            tol: 1e-8,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LanczosResult {
    pub min: f64,
    pub max: f64,
    /// Ritz vector for `max`, unit norm.
    pub max_vector: Vec<f64>,
    /// Residual norms of the two extreme Ritz pairs.
    pub residuals: (f64, f64),
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn orthogonalize(w: &mut [f64], basis: &[Vec<f64>]) {
    for v in basis {
        let c = dot(w, v);
        axpy(-c, v, w);
    }
}

/// Extreme eigenvalues of `op` restricted to the orthogonal complement of
/// `deflate` (which must be orthonormal).
pub fn lanczos_extremes(
    op: &dyn SymmetricOperator,
    deflate: &[Vec<f64>],
    opts: LanczosOptions,
) -> LanczosResult {
    let n = op.dim();
    let free_dim = n.saturating_sub(deflate.len());
    assert!(free_dim > 0, "nothing left after deflation");
    let m_max = opts.max_dim.min(free_dim).max(1);

    let mut rng = rng_from_seed(opts.seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    orthogonalize(&mut v, deflate);
    orthogonalize(&mut v, deflate);
    let nv = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= nv);

    let mut basis: Vec<Vec<f64>> = vec![v];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut last: Option<(f64, f64, DVector<f64>, f64, f64)> = None;

    for j in 0..m_max {
        op.apply(&basis[j], &mut w);
        let a = dot(&w, &basis[j]);
        alphas.push(a);
        // full reorthogonalization, twice
        for _ in 0..2 {
            orthogonalize(&mut w, deflate);
            orthogonalize(&mut w, &basis);
        }
        let b = dot(&w, &w).sqrt();

        let k = j + 1;
        let cadence = (k / 8).max(5);
        let check = k == m_max || b < 1e-13 || k % cadence == 0 || k < 5;
        if check {
            let t = DMatrix::from_fn(k, k, |r, c| {
                if r == c {
                    alphas[r]
                } else if r + 1 == c {
                    betas[r]
                } else if c + 1 == r {
                    betas[c]
                } else {
                    0.0
                }
            });
            let eig = t.symmetric_eigen();
            let (mut imin, mut imax) = (0, 0);
            for i in 0..k {
                if eig.eigenvalues[i] < eig.eigenvalues[imin] {
                    imin = i;
                }
                if eig.eigenvalues[i] > eig.eigenvalues[imax] {
                    imax = i;
                }
            }
            let tmin = eig.eigenvalues[imin];
            let tmax = eig.eigenvalues[imax];
            let rmin = (b * eig.eigenvectors[(k - 1, imin)]).abs();
            let rmax = (b * eig.eigenvectors[(k - 1, imax)]).abs();
            let svec = eig.eigenvectors.column(imax).into_owned();
            last = Some((tmin, tmax, svec, rmin, rmax));
            let done = b < 1e-13
                || (rmin <= opts.tol * tmin.abs().max(1.0) && rmax <= opts.tol * tmax.abs().max(1.0));
            if done || k == m_max {
                break;
            }
        }
        if b < 1e-13 {
            break;
        }
        betas.push(b);
        let next: Vec<f64> = w.iter().map(|x| x / b).collect();
        basis.push(next);
    }

    let (min, max, svec, rmin, rmax) = last.expect("at least one Lanczos step");
    let mut max_vector = vec![0.0; n];
    for (i, coef) in svec.iter().enumerate() {
        axpy(*coef, &basis[i], &mut max_vector);
    }
    let nrm = dot(&max_vector, &max_vector).sqrt();
    max_vector.iter_mut().for_each(|x| *x /= nrm);
    LanczosResult {
        min,
        max,
        max_vector,
        residuals: (rmin, rmax),
        iterations: alphas.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn random_symmetric(n: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rng_from_seed(seed);
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let x: f64 = rng.random::<f64>() - 0.5;
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        m
    }

    #[test]
    fn lanczos_matches_dense() {
        let m = random_symmetric(120, 3);
        let ev = symmetric_eigenvalues(&m);
        let res = lanczos_extremes(&m, &[], LanczosOptions::default());
        assert_abs_diff_eq!(res.min, ev[0], epsilon = 1e-7);
        assert_abs_diff_eq!(res.max, ev[ev.len() - 1], epsilon = 1e-7);
    }

    #[test]
    fn deflation_removes_direction() {
        // diag(5, 1, -2) with e0 deflated
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, 1.0, -2.0]));
        let e0 = vec![1.0, 0.0, 0.0];
        let res = lanczos_extremes(&m, &[e0], LanczosOptions::default());
        assert_abs_diff_eq!(res.max, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(res.min, -2.0, epsilon = 1e-10);
    }
}
