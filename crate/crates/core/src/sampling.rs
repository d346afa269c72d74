//! Seeded random variates for every law the simulators draw from.
//!
//! All samplers are generic over [`UniformSource`], so tests can force the
//! underlying uniforms. Production code uses [`RandomSource`], a ChaCha8
//! stream addressed by `(seed, stream_id)`.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{check_alpha, nu_tail};
use crate::error::{domain, FiissError, Result};

/// Anything that yields uniforms on the open interval `(0, 1)`.
pub trait UniformSource {
    fn uniform_open(&mut self) -> f64;
}

/// Seeded, stream-splittable uniform generator.
///
/// `(seed, stream_id)` fixes the output sequence bit for bit. Distinct stream
/// ids select disjoint ChaCha streams of the same key.
#[derive(Clone, Debug)]
pub struct RandomSource {
    seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RandomSource {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        RandomSource {
            seed,
            stream_id,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

impl UniformSource for RandomSource {
    fn uniform_open(&mut self) -> f64 {
        loop {
            // 53 random mantissa bits; zero is rejected so the result is in (0, 1).
            let u = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
            if u > 0.0 {
                return u;
            }
        }
    }
}

/// Derive an independent seed for a named sub-experiment (splitmix64 mixing).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Run `n` independent replicas in parallel, replica `i` owning stream `i`.
///
/// Results come back in replica order regardless of scheduling, so output is
/// a deterministic function of `seed`.
pub fn replicate<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut RandomSource) -> T + Sync + Send,
{
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut src = RandomSource::new(seed, i);
            f(&mut src)
        })
        .collect()
}

/// Fallible variant of [`replicate`]; the first error in replica order wins.
pub fn try_replicate<T, F>(n: usize, seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut RandomSource) -> Result<T> + Sync + Send,
{
    replicate(n, seed, f).into_iter().collect()
}

/// Sorted i.i.d. draws of a scalar, with the parameters that generated them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalSample {
    values: Vec<f64>,
    pub meta: BTreeMap<String, serde_json::Value>,
}

impl EmpiricalSample {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(FiissError::EmptySample);
        }
        if values.iter().any(|v| v.is_nan()) {
            return domain("sample contains NaN");
        }
        values.sort_by(f64::total_cmp);
        Ok(EmpiricalSample {
            values,
            meta: BTreeMap::new(),
        })
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.meta.insert(key.to_string(), value.into());
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.len() as f64
    }

    /// Empirical quantile by the lower order statistic, `p` in `[0, 1]`.
    pub fn quantile(&self, p: f64) -> f64 {
        let idx = ((p * self.len() as f64).ceil() as usize).clamp(1, self.len()) - 1;
        self.values[idx]
    }

    /// Fraction of draws strictly greater than `x`.
    pub fn survival(&self, x: f64) -> f64 {
        let below = self.values.partition_point(|&v| v <= x);
        (self.len() - below) as f64 / self.len() as f64
    }

    /// Apply a map to every draw, keeping the metadata.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut out = EmpiricalSample::new(self.values.iter().map(|&v| f(v)).collect())?;
        out.meta = self.meta.clone();
        Ok(out)
    }
}

/// Standard positive alpha-stable draw, `E exp(-s S) = exp(-s^alpha)`.
///
/// Kanter's representation: with `theta` uniform on `(0, pi)` and `E` a unit
/// exponential,
/// `S = sin(alpha theta) / sin(theta)^(1/alpha) * (sin((1-alpha) theta) / E)^((1-alpha)/alpha)`.
pub fn sample_positive_stable<R: UniformSource + ?Sized>(alpha: f64, src: &mut R) -> f64 {
    debug_assert!(alpha > 0.0 && alpha < 1.0);
    loop {
        let theta = PI * src.uniform_open();
        let e = -src.uniform_open().ln();
        let s = (alpha * theta).sin() / theta.sin().powf(1.0 / alpha)
            * ((((1.0 - alpha) * theta).sin()) / e).powf((1.0 - alpha) / alpha);
        if s > 0.0 && s.is_finite() {
            return s;
        }
    }
}

/// Inter-shot law of the renewal sequences.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum InterShotTail {
    /// `P{xi > t} = t^(-alpha)` for `t >= 1`.
    #[default]
    Pareto,
    /// `P{xi > t} = t^(-alpha) / log(e - 1 + t)` for `t >= 1`.
    LogPareto,
}

impl InterShotTail {
    /// Exact survival function `P{xi > t}`.
    pub fn survival(self, alpha: f64, t: f64) -> f64 {
        if t < 1.0 {
            return 1.0;
        }
        match self {
            InterShotTail::Pareto => t.powf(-alpha),
            InterShotTail::LogPareto => t.powf(-alpha) / (E - 1.0 + t).ln(),
        }
    }

    pub fn sample<R: UniformSource + ?Sized>(self, alpha: f64, src: &mut R) -> f64 {
        match self {
            InterShotTail::Pareto => sample_pareto(alpha, src),
            InterShotTail::LogPareto => log_pareto_from_uniform(alpha, src.uniform_open()),
        }
    }
}

/// Pareto draw `U^(-1/alpha)` with `P{xi > t} = t^(-alpha)`, `t >= 1`.
pub fn sample_pareto<R: UniformSource + ?Sized>(alpha: f64, src: &mut R) -> f64 {
    pareto_from_uniform(alpha, src.uniform_open())
}

pub fn pareto_from_uniform(alpha: f64, u: f64) -> f64 {
    u.powf(-1.0 / alpha)
}

// Solves t^(-alpha)/log(e-1+t) = u for t >= 1 by safeguarded Newton in s = ln t.
fn log_pareto_from_uniform(alpha: f64, u: f64) -> f64 {
    let target = -u.ln();
    // g(s) = alpha s + ln ln(e - 1 + e^s), increasing from 0 at s = 0.
    let g = |s: f64| alpha * s + (E - 1.0 + s.exp()).ln().ln();
    let dg = |s: f64| {
        let es = s.exp();
        alpha + es / ((E - 1.0 + es) * (E - 1.0 + es).ln())
    };
    let (mut lo, mut hi) = (0.0, target / alpha);
    let mut s = 0.5 * (lo + hi);
    for _ in 0..200 {
        let v = g(s) - target;
        if v > 0.0 {
            hi = s;
        } else {
            lo = s;
        }
        let mut next = s - v / dg(s);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - s).abs() <= 1e-15 * s.max(1.0) {
            s = next;
            break;
        }
        s = next;
    }
    s.exp()
}

/// Exponential draw `-ln(U) / rate`.
pub fn sample_exponential<R: UniformSource + ?Sized>(rate: f64, src: &mut R) -> f64 {
    -src.uniform_open().ln() / rate
}

/// Jump of the Lamperti Levy measure restricted to `(eps, inf)` and normalised.
///
/// Exact inverse CDF in `y = 1 - e^{-x/alpha}`, where the measure has density
/// proportional to `y^(-alpha-1)` on `(y(eps), 1)`.
pub fn sample_nu_jump<R: UniformSource + ?Sized>(alpha: f64, eps: f64, src: &mut R) -> Result<f64> {
    check_alpha(alpha)?;
    if !(eps > 0.0) {
        return domain(format!("eps = {eps} must be positive"));
    }
    let tail = nu_tail(alpha, eps)?;
    Ok(nu_jump_with_tail(alpha, eps, tail, src))
}

/// [`sample_nu_jump`] with `nu_tail(alpha, eps)` precomputed.
pub(crate) fn nu_jump_with_tail<R: UniformSource + ?Sized>(
    alpha: f64,
    eps: f64,
    tail: f64,
    src: &mut R,
) -> f64 {
    loop {
        // P{Y > y} = (y^-alpha - 1) / tail, so y^-alpha = 1 + U tail.
        let u = src.uniform_open();
        let log_y = -(u * tail).ln_1p() / alpha;
        // x = -alpha ln(1 - y), y = e^{log_y}
        let x = -alpha * (-log_y.exp_m1()).ln();
        if x > eps && x.is_finite() {
            return x;
        }
    }
}
