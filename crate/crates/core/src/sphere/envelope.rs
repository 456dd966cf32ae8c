//! Envelope rejection sampling for one-dimensional log-concave densities.
//!
//! Target `p(x) ∝ exp(−V(x))` on `[a, b]` with `V(0) = V'(0) = 0`, `V'' ≥ 1`
//! everywhere, `V'' ≤ κ` on an inner interval `[a', b']` and `V ≥ ½` outside
//! it. The envelope is flat on `[x₋, x₊]` and has Gaussian-times-exponential
//! tails beyond, with `x±` found by doubling from `±1/√κ` until `V ≥ ½`.

use rand::Rng;
use statrs::function::erf::erfc;

use super::SphereError;

/// Acceptance probability lower bound used to size the round budget.
pub const P_ACCEPT_LOWER: f64 = 0.05;

const SQRT_PI_2: f64 = 1.253_314_137_315_500_3; // √(π/2)

/// `exp(x²)·erfc(x)`, stable for large positive `x`.
pub fn erfcx(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 * (x * x).exp() - erfcx(-x);
    }
    if x < 25.0 {
        return (x * x).exp() * erfc(x);
    }
    let r = 1.0 / (x * x);
    (1.0 - 0.5 * r + 0.75 * r * r - 1.875 * r * r * r + 6.5625 * r.powi(4))
        / (x * std::f64::consts::PI.sqrt())
}

/// Number of rejection rounds so that failing all of them has probability at
/// most `eps` when each round accepts with probability at least `p`.
pub fn round_budget(eps: f64, p: f64) -> usize {
    ((1.0 / eps).log2() / (1.0 / (1.0 - p)).log2()).ceil().max(1.0) as usize
}

/// First `x = sign·2^i/√κ`, `i = 0, 1, …`, with `V(x) ≥ ½` and `|x| ≤ |bound|`;
/// `bound` itself if there is none.
pub fn doubling_point(v: &dyn Fn(f64) -> f64, bound: f64, kappa: f64, sign: f64) -> f64 {
    let lim = bound.abs();
    let mut x = 1.0 / kappa.sqrt();
    for _ in 0..1100 {
        if x > lim {
            break;
        }
        if v(sign * x) >= 0.5 {
            return sign * x;
        }
        x *= 2.0;
    }
    bound
}

/// Standard normal truncated to `[lo, lo + len]`, `lo ≥ 0`.
fn truncated_normal_tail<R: Rng + ?Sized>(lo: f64, len: f64, rng: &mut R) -> f64 {
    let hi = lo + len;
    if len * (len + 2.0 * lo) < 2.0 {
        // uniform proposal, acceptance ≥ e⁻¹
        loop {
            let t = lo + len * rng.random::<f64>();
            if rng.random::<f64>() < (-(t * t - lo * lo) / 2.0).exp() {
                return t;
            }
        }
    }
    // exponential proposal with the optimal rate
    let lam = (lo + (lo * lo + 4.0).sqrt()) / 2.0;
    loop {
        let t = lo - (1.0 - rng.random::<f64>()).ln() / lam;
        if t > hi {
            continue;
        }
        if rng.random::<f64>() < (-(t - lam).powi(2) / 2.0).exp() {
            return t;
        }
    }
}

/// Mass of `exp(−s/(2x) − s²/2)` over `s ∈ [0, len]`, `x > 0`.
fn tail_mass(x: f64, len: f64) -> f64 {
    if len <= 0.0 {
        return 0.0;
    }
    let mu = 1.0 / (2.0 * x);
    let s2 = std::f64::consts::SQRT_2;
    let far = if len.is_finite() {
        erfcx((len + mu) / s2) * (-len * (len + 2.0 * mu) / 2.0).exp()
    } else {
        0.0
    };
    SQRT_PI_2 * (erfcx(mu / s2) - far)
}

/// Envelope rejection sampler for a fixed potential.
pub struct EnvelopeSampler<F: Fn(f64) -> f64> {
    v: F,
    a: f64,
    b: f64,
    x_minus: f64,
    x_plus: f64,
    mass_left: f64,
    mass_mid: f64,
    mass_right: f64,
}

impl<F: Fn(f64) -> f64> EnvelopeSampler<F> {
    /// `domain = (a, b)` may be infinite; `inner = (a', b')` bounds the region
    /// where `V'' ≤ κ`. `dv` is `V'`, used only to validate `V'(0) = 0`.
    pub fn new(
        v: F,
        dv: &dyn Fn(f64) -> f64,
        domain: (f64, f64),
        inner: (f64, f64),
        kappa: f64,
    ) -> Result<Self, SphereError> {
        let (v0, d0) = (v(0.0), dv(0.0));
        if v0.abs() > 1e-9 || d0.abs() > 1e-9 {
            return Err(SphereError::InvalidPotential { v0, dv0: d0 });
        }
        let (a, b) = domain;
        let (ai, bi) = inner;
        if !(a <= ai && ai <= 0.0 && 0.0 <= bi && bi <= b) || !(kappa >= 1.0) {
            return Err(SphereError::InvalidEnvelope);
        }
        let x_plus = doubling_point(&v, bi, kappa, 1.0);
        let x_minus = doubling_point(&v, ai, kappa, -1.0);
        let mass_right = tail_mass(x_plus, b - x_plus);
        let mass_left = tail_mass(-x_minus, x_minus - a);
        Ok(Self {
            v,
            a,
            b,
            x_minus,
            x_plus,
            mass_left,
            mass_mid: x_plus - x_minus,
            mass_right,
        })
    }

    pub fn x_plus(&self) -> f64 {
        self.x_plus
    }

    pub fn x_minus(&self) -> f64 {
        self.x_minus
    }

    fn log_envelope(&self, x: f64) -> f64 {
        if x > self.x_plus {
            let s = x - self.x_plus;
            -s / (2.0 * self.x_plus) - s * s / 2.0
        } else if x < self.x_minus {
            let s = self.x_minus - x;
            -s / (2.0 * -self.x_minus) - s * s / 2.0
        } else {
            0.0
        }
    }

    fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = self.mass_left + self.mass_mid + self.mass_right;
        let u = rng.random::<f64>() * total;
        if u < self.mass_mid {
            self.x_minus + rng.random::<f64>() * self.mass_mid
        } else if u < self.mass_mid + self.mass_right {
            let mu = 1.0 / (2.0 * self.x_plus);
            let t = truncated_normal_tail(mu, self.b - self.x_plus, rng);
            (self.x_plus + t - mu).min(self.b)
        } else {
            let mu = 1.0 / (2.0 * -self.x_minus);
            let t = truncated_normal_tail(mu, self.x_minus - self.a, rng);
            (self.x_minus - (t - mu)).max(self.a)
        }
    }

    /// One rejection round: `Some(x)` on acceptance.
    pub fn try_once<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<f64> {
        let x = self.propose(rng);
        let log_ratio = -(self.v)(x) - self.log_envelope(x);
        if log_ratio >= 0.0 || rng.random::<f64>() < log_ratio.exp() {
            Some(x)
        } else {
            None
        }
    }

    /// Draw within TV `eps` of the target: rejection rounds up to the budget,
    /// then a uniform draw on a finite domain (or the last proposal otherwise).
    pub fn sample<R: Rng + ?Sized>(&self, eps: f64, rng: &mut R) -> f64 {
        let rounds = round_budget(eps, P_ACCEPT_LOWER);
        for _ in 0..rounds {
            if let Some(x) = self.try_once(rng) {
                return x;
            }
        }
        if self.a.is_finite() && self.b.is_finite() {
            self.a + (self.b - self.a) * rng.random::<f64>()
        } else {
            self.propose(rng)
        }
    }
}
