//! First coordinate of a tilted uniform point on `S^{N−1}`:
//! density `∝ exp(by)(1 − y²)^{(N−3)/2}` on `[−1, 1]`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

use rand::Rng;
use rand_distr::{Beta, Distribution};

use super::envelope::{round_budget, EnvelopeSampler};
use super::SphereError;

/// Sample `y` within TV `eps` of the tilted marginal. Negative `b` is mapped
/// to positive by `y → −y`.
pub fn sample_sphere_marginal<R: Rng + ?Sized>(
    dim: usize,
    b: f64,
    eps: f64,
    rng: &mut R,
) -> Result<f64, SphereError> {
    if dim < 1 {
        return Err(SphereError::BadDimension(dim));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(SphereError::InvalidEps(eps));
    }
    if !b.is_finite() {
        return Err(SphereError::NonFinite);
    }
    if b < 0.0 {
        return sample_sphere_marginal(dim, -b, eps, rng).map(|y| -y);
    }
    if dim == 1 {
        let p = 1.0 / (1.0 + (-2.0 * b).exp());
        return Ok(if rng.random::<f64>() < p { 1.0 } else { -1.0 });
    }
    if b == 0.0 {
        let k = (dim as f64 - 1.0) / 2.0;
        let beta = Beta::new(k, k).expect("positive shape");
        return Ok(2.0 * beta.sample(rng) - 1.0);
    }
    Ok(match dim {
        2 => sample_circle(b, eps, rng)?.cos(),
        3 => sample_n3(b, rng),
        _ => sample_high(dim, b, eps, rng)?,
    })
}

/// `y = 1 + ln(1 − V(1 − e^{−2b}))/b` with `V` uniform: the inverse of
/// `F(y) ∝ e^{by} − e^{−b}`.
fn sample_n3<R: Rng + ?Sized>(b: f64, rng: &mut R) -> f64 {
    let v: f64 = rng.random();
    let y = 1.0 + (-v * -(-2.0 * b).exp_m1()).ln_1p() / b;
    y.clamp(-1.0, 1.0)
}

/// Angle with density `∝ exp(b cos θ)` on `[−π, π)`: sample the restriction
/// to `[−π/4, π/4)` with the envelope sampler, shift by a uniform quadrant
/// and accept with `exp(b(cos θ − cos θ̃))`.
pub fn sample_circle<R: Rng + ?Sized>(b: f64, eps: f64, rng: &mut R) -> Result<f64, SphereError> {
    // V(θ) = b(1 − cos θ), V'' ∈ [b/√2, b]; rescale so that V'' ≥ 1
    let alpha = b / SQRT_2;
    let s = alpha.sqrt();
    let half = FRAC_PI_4 * s;
    let v = move |t: f64| b * (1.0 - (t / s).cos());
    let dv = move |t: f64| b * (t / s).sin() / s;
    let env = EnvelopeSampler::new(v, &dv, (-half, half), (-half, half), SQRT_2)?;
    let rounds = round_budget(eps / 2.0, 0.25);
    let mut last = 0.0;
    for _ in 0..rounds {
        let theta_t = env.sample(eps / 2.0, rng) / s;
        let u = rng.random_range(0..4u32);
        let theta = theta_t + f64::from(u) * FRAC_PI_2;
        last = theta;
        if rng.random::<f64>() < (b * (theta.cos() - theta_t.cos())).exp() {
            return Ok(wrap(theta));
        }
    }
    Ok(wrap(last))
}

fn wrap(theta: f64) -> f64 {
    let t = (theta + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI);
    t - std::f64::consts::PI
}

/// Parameters of the rescaled potential for `N ≥ 4`.
#[derive(Debug, Clone, Copy)]
pub struct HighDimEnvelope {
    pub y0: f64,
    /// `1/√(N−3)`, the map `t ↦ y = y₀ + t·scale`.
    pub scale: f64,
    pub domain: (f64, f64),
    pub inner: (f64, f64),
    pub kappa: f64,
}

fn potential(dim: usize, b: f64, y: f64) -> f64 {
    if y <= -1.0 || y >= 1.0 {
        return f64::INFINITY;
    }
    -b * y - (dim as f64 - 3.0) / 2.0 * (-y * y).ln_1p()
}

/// Mode `y₀ = (√(c²+4) − c)/2`, `c = (N−3)/b`, and the inner interval where
/// `1 − y² ≥ E = exp(−(2/(N−3))(½ + b + V(y₀)))`; there `Ṽ'' ≤ 2/E²`.
pub fn high_dim_envelope(dim: usize, b: f64) -> HighDimEnvelope {
    let m = dim as f64 - 3.0;
    let c = m / b;
    let y0 = 2.0 / ((c * c + 4.0).sqrt() + c);
    let v0 = potential(dim, b, y0);
    let level = 0.5 + b + v0;
    let e = (-2.0 / m * level).exp();
    let edge = (1.0 - e).sqrt();
    let sq = m.sqrt();
    HighDimEnvelope {
        y0,
        scale: 1.0 / sq,
        domain: (sq * (-1.0 - y0), sq * (1.0 - y0)),
        inner: ((sq * (-edge - y0)).min(0.0), (sq * (edge - y0)).max(0.0)),
        kappa: 2.0 * (4.0 / m * level).exp(),
    }
}

fn sample_high<R: Rng + ?Sized>(dim: usize, b: f64, eps: f64, rng: &mut R) -> Result<f64, SphereError> {
    let env = high_dim_envelope(dim, b);
    let m = dim as f64 - 3.0;
    let v0 = potential(dim, b, env.y0);
    let (y0, sc) = (env.y0, env.scale);
    let v = move |t: f64| potential(dim, b, y0 + t * sc) - v0;
    let dv = move |t: f64| {
        let y = y0 + t * sc;
        (-b + m * y / (1.0 - y * y)) * sc
    };
    #[cfg(debug_assertions)]
    check_outer_region(&v, &env);
    let sampler = EnvelopeSampler::new(v, &dv, env.domain, env.inner, env.kappa)?;
    let t = sampler.sample(eps, rng);
    Ok((y0 + t * sc).clamp(-1.0, 1.0))
}

/// `Ṽ ≥ ½` at 100 points outside the inner interval.
#[cfg(debug_assertions)]
fn check_outer_region(v: &dyn Fn(f64) -> f64, env: &HighDimEnvelope) {
    let (a, b) = env.domain;
    let (ai, bi) = env.inner;
    for k in 0..50 {
        let f = (k as f64 + 0.5) / 50.0;
        for t in [a + f * (ai - a), bi + f * (b - bi)] {
            if (ai - a) > 0.0 && t < ai || (b - bi) > 0.0 && t > bi {
                debug_assert!(v(t) >= 0.5 - 1e-9, "potential below 1/2 outside inner interval");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn n1_signs() {
        let mut rng = rng_from_seed(1);
        let plus = (0..20_000)
            .filter(|_| sample_sphere_marginal(1, 0.5, 1e-6, &mut rng).unwrap() > 0.0)
            .count();
        let p = 1.0 / (1.0 + (-1.0f64).exp());
        assert!((plus as f64 / 2e4 - p).abs() < 0.015);
    }

    #[test]
    fn bad_dimension() {
        let mut rng = rng_from_seed(1);
        assert!(matches!(
            sample_sphere_marginal(0, 1.0, 1e-3, &mut rng),
            Err(SphereError::BadDimension(0))
        ));
    }

    #[test]
    fn high_dim_interval_is_valid() {
        for dim in [4, 5, 7, 12, 40] {
            for b in [0.01, 0.5, 2.0, 20.0, 500.0] {
                let e = high_dim_envelope(dim, b);
                assert!(e.domain.0 <= e.inner.0 && e.inner.0 <= 0.0);
                assert!(0.0 <= e.inner.1 && e.inner.1 <= e.domain.1);
                assert!(e.kappa >= 1.0);
            }
        }
    }

    #[test]
    fn samples_stay_in_range() {
        let mut rng = rng_from_seed(2);
        for dim in 1..9 {
            for b in [-3.0, 0.0, 0.2, 7.0, 300.0] {
                for _ in 0..200 {
                    let y = sample_sphere_marginal(dim, b, 1e-6, &mut rng).unwrap();
                    assert!((-1.0..=1.0).contains(&y));
                }
            }
        }
    }
}
