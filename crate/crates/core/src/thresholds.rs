//! Mixing-threshold curves.
//!
//! `q(z) = S(z) + ∫₀^z q(y)² dy` is solved as the ODE `q' = S'(z) + q²` with
//! classical RK4. For the Ising curve `S(z) = r(ηz)` with
//! `r(t) = E[1 − tanh²(tx + √t g)]`; in the semi-log-concave case
//! `S(z) = 1/(ηz + 1/ρ(ηz))`. Near the blow-up the step shrinks so that
//! `q·h` stays small; once `q` passes the cap the remaining distance is taken
//! from the tail `q ≈ 1/(z* − z)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThresholdError {
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("eta = {0} outside its admissible range")]
    InvalidEta(f64),
    #[error("closed form undefined at eta = 0")]
    EtaZero,
    #[error("z = {z} is at or beyond the blow-up point {limit}")]
    BeyondBlowup { z: f64, limit: f64 },
    #[error("q doubled within one step at z = {z} (step {step}); rerun with a smaller step")]
    StepTooLarge { z: f64, step: f64 },
    #[error("invalid solver parameter: {0}")]
    InvalidParameter(String),
}

/// Gauss–Hermite rule for `E[f(g)]`, `g ~ N(0, 1)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Golub–Welsch on the Jacobi matrix of the probabilists' Hermite
    /// polynomials.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let jac = DMatrix::from_fn(order, order, |i, j| {
            if i + 1 == j {
                (j as f64).sqrt()
            } else if j + 1 == i {
                (i as f64).sqrt()
            } else {
                0.0
            }
        });
        let eig = jac.symmetric_eigen();
        let mut pairs: Vec<(f64, f64)> = (0..order)
            .map(|k| (eig.eigenvalues[k], eig.eigenvectors[(0, k)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total: f64 = pairs.iter().map(|p| p.1).sum();
        Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1 / total).collect(),
        }
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

pub const DEFAULT_ORDER: usize = 64;

/// `r(t)` with a precomputed quadrature rule.
#[derive(Debug, Clone)]
pub struct IsingSource {
    gh: GaussHermite,
}

impl Default for IsingSource {
    fn default() -> Self {
        Self::new(DEFAULT_ORDER)
    }
}

impl IsingSource {
    pub fn new(order: usize) -> Self {
        Self {
            gh: GaussHermite::new(order),
        }
    }

    /// Averages over `x = ±1`; the two halves agree by symmetry.
    pub fn eval(&self, t: f64) -> Result<f64, ThresholdError> {
        if t < 0.0 || t.is_nan() {
            return Err(ThresholdError::NegativeTime(t));
        }
        let st = t.sqrt();
        let half = |x: f64| self.gh.expect(|g| 1.0 - (t * x + st * g).tanh().powi(2));
        Ok(0.5 * (half(1.0) + half(-1.0)))
    }
}

/// `E[1 − tanh²(tx + √t g)]` with a Gauss–Hermite rule of the given order.
pub fn r_ising(t: f64, order: usize) -> Result<f64, ThresholdError> {
    IsingSource::new(order).eval(t)
}

/// Tabulated solution of the Volterra equation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QCurve {
    pub eta: f64,
    pub step: f64,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    /// `∫₀^z q` at each grid point.
    pub integral: Vec<f64>,
    pub blowup_z: Option<f64>,
}

impl QCurve {
    pub fn last_z(&self) -> f64 {
        *self.grid.last().expect("grid starts at 0")
    }

    fn locate(&self, z: f64) -> Result<(usize, f64), ThresholdError> {
        let last = self.last_z();
        if z < 0.0 || z > last + 1e-12 {
            return Err(ThresholdError::BeyondBlowup {
                z,
                limit: self.blowup_z.unwrap_or(last),
            });
        }
        let pos = (z / self.step).min((self.grid.len() - 1) as f64);
        let k = (pos.floor() as usize).min(self.grid.len().saturating_sub(2));
        Ok((k, pos - k as f64))
    }

    fn interp(&self, data: &[f64], z: f64) -> Result<f64, ThresholdError> {
        if self.grid.len() == 1 {
            return self.locate(z).map(|_| data[0]);
        }
        let (k, t) = self.locate(z)?;
        Ok(data[k] + t * (data[k + 1] - data[k]))
    }

    /// `q(z)` by linear interpolation.
    pub fn value_at(&self, z: f64) -> Result<f64, ThresholdError> {
        self.interp(&self.values, z)
    }

    pub fn integral_at(&self, z: f64) -> Result<f64, ThresholdError> {
        self.interp(&self.integral, z)
    }
}

/// `exp(∫₀^z q)`, the approximate-tensorization constant.
pub fn ate_constant(curve: &QCurve, z: f64) -> Result<f64, ThresholdError> {
    curve.integral_at(z).map(f64::exp)
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub z_max: f64,
    pub step: f64,
    pub cap: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            z_max: 2.0,
            step: 1e-4,
            cap: 1e6,
        }
    }
}

const FD_H: f64 = 1e-5;
/// Largest `q·h` allowed in one RK4 sub-step.
const QH_MAX: f64 = 0.01;

fn derivative(src: &dyn Fn(f64) -> f64, z: f64) -> f64 {
    if z >= FD_H {
        (src(z + FD_H) - src(z - FD_H)) / (2.0 * FD_H)
    } else {
        (-3.0 * src(z) + 4.0 * src(z + FD_H) - src(z + 2.0 * FD_H)) / (2.0 * FD_H)
    }
}

/// Solves `q(z) = S(z) + ∫₀^z q²` on `[0, z_max]`.
pub fn solve_volterra(
    eta: f64,
    src: &dyn Fn(f64) -> f64,
    opts: SolverOptions,
) -> Result<QCurve, ThresholdError> {
    let SolverOptions { z_max, step, cap } = opts;
    if !(step > 0.0 && step.is_finite()) {
        return Err(ThresholdError::InvalidParameter(format!("step {step}")));
    }
    if !(cap >= 1e3) {
        return Err(ThresholdError::InvalidParameter(format!("cap {cap}")));
    }
    if !(z_max > 0.0 && z_max.is_finite()) {
        return Err(ThresholdError::InvalidParameter(format!("z_max {z_max}")));
    }

    let rhs = |z: f64, q: f64| (derivative(src, z) + q * q, q);
    let n_steps = (z_max / step).round().max(1.0) as usize;
    let mut grid = vec![0.0];
    let mut values = vec![src(0.0)];
    let mut integral = vec![0.0];
    let mut q = values[0];
    let mut acc = 0.0;
    let mut blowup = None;

    'grid: for k in 0..n_steps {
        let z_start = k as f64 * step;
        let z_end = (k + 1) as f64 * step;
        let mut z = z_start;
        while z < z_end - 1e-15 * z_end.max(1.0) {
            let h = (z_end - z).min(QH_MAX / q.abs().max(1e-300));
            let (k1q, k1i) = rhs(z, q);
            let (k2q, k2i) = rhs(z + h / 2.0, q + h / 2.0 * k1q);
            let (k3q, k3i) = rhs(z + h / 2.0, q + h / 2.0 * k2q);
            let (k4q, k4i) = rhs(z + h, q + h * k3q);
            let q_new = q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
            acc += h / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i);
            if q_new > 2.0 * q && q > 0.0 && q * h <= QH_MAX {
                return Err(ThresholdError::StepTooLarge { z, step: h });
            }
            q = q_new;
            z += h;
            if !q.is_finite() || q > cap {
                blowup = Some(z + 1.0 / q);
                break 'grid;
            }
        }
        grid.push(z_end);
        values.push(q);
        integral.push(acc);
    }

    Ok(QCurve {
        eta,
        step,
        grid,
        values,
        integral,
        blowup_z: blowup,
    })
}

fn check_eta(eta: f64) -> Result<(), ThresholdError> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(ThresholdError::InvalidEta(eta));
    }
    Ok(())
}

/// Ising curve `q_η` for an arbitrary source `r` (evaluated at `ηz`).
pub fn solve_q_eta(
    eta: f64,
    r: &dyn Fn(f64) -> f64,
    opts: SolverOptions,
) -> Result<QCurve, ThresholdError> {
    check_eta(eta)?;
    solve_volterra(eta, &|z| r(eta * z), opts)
}

/// Ising curve `q_η` with the Gauss–Hermite `r`.
pub fn solve_q_eta_ising(eta: f64, opts: SolverOptions) -> Result<QCurve, ThresholdError> {
    check_eta(eta)?;
    let source = IsingSource::default();
    solve_q_eta(eta, &|t| source.eval(t).expect("non-negative time"), opts)
}

/// Semi-log-concave curve with source `1/(ηz + 1/ρ(ηz))`.
pub fn solve_q_semilogconcave(
    eta: f64,
    rho: &dyn Fn(f64) -> f64,
    opts: SolverOptions,
) -> Result<QCurve, ThresholdError> {
    check_eta(eta)?;
    solve_volterra(eta, &|z| 1.0 / (eta * z + 1.0 / rho(eta * z)), opts)
}

/// Roots `λ₁ > λ₂` of `ηλ² − ηλ − 1 = 0`.
pub fn lambda_roots(eta: f64) -> Result<(f64, f64), ThresholdError> {
    if eta == 0.0 {
        return Err(ThresholdError::EtaZero);
    }
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(ThresholdError::InvalidEta(eta));
    }
    let disc = (eta * eta + 4.0 * eta).sqrt();
    Ok(((eta + disc) / (2.0 * eta), (eta - disc) / (2.0 * eta)))
}

/// Blow-up point `s(η)` of `Q_η`.
pub fn s_of_eta(eta: f64) -> Result<f64, ThresholdError> {
    let (l1, l2) = lambda_roots(eta)?;
    // |λ₁/λ₂| = 1 + 1/|λ₂| since λ₁ + λ₂ = 1
    let log_ratio = (1.0 / (-l2)).ln_1p();
    Ok((2.0 / (l1 - l2) * log_ratio).exp_m1() / eta)
}

/// `Q_η(z)` for constant semi-log-concavity 1.
pub fn big_q(eta: f64, z: f64) -> Result<f64, ThresholdError> {
    let (l1, l2) = lambda_roots(eta)?;
    let s = s_of_eta(eta)?;
    if z >= s {
        return Err(ThresholdError::BeyondBlowup { z, limit: s });
    }
    if z < 0.0 {
        return Err(ThresholdError::InvalidParameter(format!("z {z}")));
    }
    let u = eta * z + 1.0;
    let p = u.powf(l1 - l2);
    Ok(eta * (-l1 * l2 * l2 * p + l1 * l1 * l2) / (l2 * l2 * p * u - l1 * l1 * u))
}

/// `ρ·Q_η(ρz)`.
pub fn q_closed_form(eta: f64, rho: f64, z: f64) -> Result<f64, ThresholdError> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(ThresholdError::InvalidParameter(format!("rho {rho}")));
    }
    let s = s_of_eta(eta)?;
    if rho * z >= s {
        return Err(ThresholdError::BeyondBlowup { z, limit: s / rho });
    }
    Ok(rho * big_q(eta, rho * z)?)
}
