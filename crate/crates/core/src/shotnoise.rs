//! Renewal sequences with Pareto-type gaps, first-passage counts, and renewal
//! shot noise `X(t) = sum_k h(t - S_k) 1{S_k <= t}`.
//!
//! With `a(t) = P{xi > t}`, the scaled shot noise `a(t) X(ut) / h(t)` converges
//! to `Y(u)` as `t -> inf`.

use serde::{Deserialize, Serialize};

use crate::analytic::check_alpha;
use crate::error::{domain, range, FiissError, Result};
use crate::sampling::{replicate, try_replicate, EmpiricalSample, InterShotTail, UniformSource};

/// Largest number of renewal epochs a single sequence may hold.
pub const MAX_RENEWALS: usize = 100_000_000;

/// Renewal epochs `S_0 = 0 < S_1 < ...`, simulated until past `horizon`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenewalSequence {
    times: Vec<f64>,
    horizon: f64,
}

impl RenewalSequence {
    /// Wraps explicit epochs; they must start at 0, increase strictly and end
    /// beyond `horizon`.
    pub fn from_times(times: Vec<f64>, horizon: f64) -> Result<Self> {
        if times.first() != Some(&0.0) {
            return domain("renewal epochs must start at 0");
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return domain("renewal epochs must increase strictly");
        }
        if !(times[times.len() - 1] > horizon) {
            return domain("last renewal epoch must exceed the horizon");
        }
        Ok(RenewalSequence { times, horizon })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    fn check(&self, t: f64) -> Result<()> {
        if t > self.horizon {
            return range(format!("t = {t} beyond horizon {}", self.horizon));
        }
        Ok(())
    }
}

/// Response functions usable in shot noise.
pub trait Response {
    /// `h(t)` for `t >= 0`.
    fn value(&self, t: f64) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResponseForm {
    /// `h(t) = t^beta`, `beta >= 0`.
    PowerLaw,
    /// `h(t) = (1 + t)^beta`, `beta < 0`.
    ShiftedPowerLaw,
}

/// Monotone response regularly varying with index `beta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResponseFunction {
    beta: f64,
    form: ResponseForm,
}

impl ResponseFunction {
    /// `t^beta` for `beta >= 0`, `(1 + t)^beta` for `beta < 0`.
    pub fn new(beta: f64) -> Result<Self> {
        if !beta.is_finite() {
            return domain(format!("beta = {beta} must be finite"));
        }
        let form = if beta >= 0.0 {
            ResponseForm::PowerLaw
        } else {
            ResponseForm::ShiftedPowerLaw
        };
        Ok(ResponseFunction { beta, form })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn form(&self) -> ResponseForm {
        self.form
    }
}

impl Response for ResponseFunction {
    fn value(&self, t: f64) -> f64 {
        match self.form {
            ResponseForm::PowerLaw => t.powf(self.beta),
            ResponseForm::ShiftedPowerLaw => (1.0 + t).powf(self.beta),
        }
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return domain(format!("horizon = {horizon} must be positive"));
    }
    Ok(())
}

/// Renewal sequence with exact Pareto gaps, `P{xi > t} = t^(-alpha)`.
pub fn simulate_renewal<R: UniformSource + ?Sized>(alpha: f64, horizon: f64, src: &mut R) -> Result<RenewalSequence> {
    simulate_renewal_with(alpha, InterShotTail::Pareto, horizon, src)
}

pub fn simulate_renewal_with<R: UniformSource + ?Sized>(
    alpha: f64,
    tail: InterShotTail,
    horizon: f64,
    src: &mut R,
) -> Result<RenewalSequence> {
    check_alpha(alpha)?;
    check_horizon(horizon)?;
    let mut times = vec![0.0];
    let mut s = 0.0;
    while s <= horizon {
        if times.len() >= MAX_RENEWALS {
            return Err(FiissError::Resource(format!(
                "more than {MAX_RENEWALS} renewals before {horizon}"
            )));
        }
        s += tail.sample(alpha, src);
        times.push(s);
    }
    Ok(RenewalSequence { times, horizon })
}

/// `nu(t) = #{k : S_k <= t}`, zero for `t < 0`.
pub fn first_passage(seq: &RenewalSequence, t: f64) -> Result<u64> {
    seq.check(t)?;
    Ok(seq.times.partition_point(|&s| s <= t) as u64)
}

/// `X(t) = sum_k h(t - S_k) 1{S_k <= t}`.
pub fn shot_noise<H: Response + ?Sized>(seq: &RenewalSequence, h: &H, t: f64) -> Result<f64> {
    seq.check(t)?;
    Ok(seq
        .times
        .iter()
        .take_while(|&&s| s <= t)
        .map(|&s| h.value(t - s))
        .sum())
}

// Shot noise at t streamed over fresh gaps, so no sequence is stored.
fn streamed_shot_noise<H: Response + ?Sized, R: UniformSource + ?Sized>(
    alpha: f64,
    tail: InterShotTail,
    h: &H,
    t: f64,
    src: &mut R,
) -> Result<f64> {
    let mut s = 0.0;
    let mut sum = 0.0;
    let mut count = 0usize;
    while s <= t {
        sum += h.value(t - s);
        count += 1;
        if count > MAX_RENEWALS {
            return Err(FiissError::Resource(format!("more than {MAX_RENEWALS} renewals before {t}")));
        }
        s += tail.sample(alpha, src);
    }
    Ok(sum)
}

/// `n` draws of `(a(t) / h(t)) X(ut)` with Pareto gaps and the default response.
pub fn scaled_marginal(alpha: f64, beta: f64, u: f64, t: f64, n: usize, seed: u64) -> Result<EmpiricalSample> {
    let h = ResponseFunction::new(beta)?;
    scaled_marginal_with(alpha, InterShotTail::Pareto, &h, u, t, n, seed)
}

/// [`scaled_marginal`] with an arbitrary gap law and response.
pub fn scaled_marginal_with<H: Response + Sync + ?Sized>(
    alpha: f64,
    tail: InterShotTail,
    h: &H,
    u: f64,
    t: f64,
    n: usize,
    seed: u64,
) -> Result<EmpiricalSample> {
    check_alpha(alpha)?;
    if !(u > 0.0) || !(t >= 1.0) {
        return domain(format!("need u > 0 and t >= 1, got u = {u}, t = {t}"));
    }
    let scale = tail.survival(alpha, t) / h.value(t);
    let draws = try_replicate(n, seed, |src| {
        streamed_shot_noise(alpha, tail, h, u * t, src).map(|x| scale * x)
    })?;
    Ok(EmpiricalSample::new(draws)?
        .with_meta("alpha", alpha)
        .with_meta("u", u)
        .with_meta("t", t)
        .with_meta("seed", seed))
}

/// `n` draws of the normalized undershoot `(t - S_{nu(t)-1}) / t`.
pub fn undershoot_sample(alpha: f64, t: f64, n: usize, seed: u64) -> Result<EmpiricalSample> {
    check_alpha(alpha)?;
    if !(t >= 1.0) {
        return domain(format!("t = {t} must be at least 1"));
    }
    let draws = try_replicate(n, seed, |src| {
        let mut last = 0.0;
        let mut s = 0.0;
        let mut count = 0usize;
        while s <= t {
            last = s;
            count += 1;
            if count > MAX_RENEWALS {
                return Err(FiissError::Resource(format!("more than {MAX_RENEWALS} renewals before {t}")));
            }
            s += InterShotTail::Pareto.sample(alpha, src);
        }
        Ok((t - last) / t)
    })?;
    Ok(EmpiricalSample::new(draws)?
        .with_meta("alpha", alpha)
        .with_meta("t", t)
        .with_meta("seed", seed))
}

/// Dyadic modulus statistic
/// `max_j max_k a(t) (nu(tT k 2^(1-j)) - nu(tT (k-2) 2^(1-j))) / (T 2^(-j))^(alpha-delta)`
/// over `j = 1..ceil(log2(tT))`, `k = 1..2^(j-1)`, with `a(t) = t^(-alpha)`.
pub fn modulus_statistic(seq: &RenewalSequence, alpha: f64, t: f64, big_t: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < alpha) {
        return domain(format!("delta = {delta} must lie in (0, alpha)"));
    }
    if !(t >= 1.0) || !(big_t > 0.0) {
        return domain("need t >= 1 and T > 0");
    }
    let span = t * big_t;
    seq.check(span)?;
    let a_t = t.powf(-alpha);
    let levels = span.log2().ceil().max(1.0) as u32;
    let nu = |x: f64| {
        if x < 0.0 {
            0.0
        } else {
            seq.times.partition_point(|&s| s <= x) as f64
        }
    };
    let mut best = 0.0f64;
    for j in 1..=levels {
        let cell = 2f64.powi(1 - j as i32);
        let denom = (big_t * 2f64.powi(-(j as i32))).powf(alpha - delta);
        for k in 1..=(1u64 << (j - 1)) {
            let hi = span * k as f64 * cell;
            let lo = span * (k as f64 - 2.0) * cell;
            best = best.max(a_t * (nu(hi) - nu(lo)) / denom);
        }
    }
    Ok(best)
}

/// Quantiles of the modulus statistic at one ladder entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusRow {
    pub t: f64,
    pub median: f64,
    pub q90: f64,
    pub q99: f64,
    pub n: usize,
    pub seed: u64,
}

/// Modulus statistic quantiles along `t_ladder`, `n` sequences per entry.
pub fn modulus_diagnostic(
    alpha: f64,
    big_t: f64,
    t_ladder: &[f64],
    delta: f64,
    n: usize,
    seed: u64,
) -> Result<Vec<ModulusRow>> {
    t_ladder
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let row_seed = crate::sampling::derive_seed(seed, i as u64);
            let stats = try_replicate(n, row_seed, |src| {
                let seq = simulate_renewal(alpha, t * big_t, src)?;
                modulus_statistic(&seq, alpha, t, big_t, delta)
            })?;
            let sample = EmpiricalSample::new(stats)?;
            Ok(ModulusRow {
                t,
                median: sample.quantile(0.5),
                q90: sample.quantile(0.9),
                q99: sample.quantile(0.99),
                n,
                seed: row_seed,
            })
        })
        .collect()
}

/// Empirical `E exp(lambda a(t) nu(t))` for each `t` in `t_ladder`.
pub fn exponential_moment(alpha: f64, lambda: f64, t_ladder: &[f64], n: usize, seed: u64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let h = ResponseFunction::new(0.0)?;
    t_ladder
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let row_seed = crate::sampling::derive_seed(seed, i as u64);
            let a_t = t.powf(-alpha);
            let vals = replicate(n, row_seed, |src| {
                streamed_shot_noise(alpha, InterShotTail::Pareto, &h, t, src).map(|c| (lambda * a_t * c).exp())
            });
            let vals = vals.into_iter().collect::<Result<Vec<f64>>>()?;
            Ok(vals.iter().sum::<f64>() / n as f64)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::RandomSource;

    fn seq(times: &[f64], horizon: f64) -> RenewalSequence {
        RenewalSequence::from_times(times.to_vec(), horizon).unwrap()
    }

    #[test]
    fn renewal_basics() {
        let mut src = RandomSource::new(1, 0);
        let s = simulate_renewal(0.6, 500.0, &mut src).unwrap();
        assert_eq!(s.times()[0], 0.0);
        assert!(s.times().windows(2).all(|w| w[1] - w[0] >= 1.0));
        assert!(*s.times().last().unwrap() > 500.0);
        assert!(simulate_renewal(0.6, 0.0, &mut src).is_err());
    }

    #[test]
    fn first_passage_hand_cases() {
        let s = seq(&[0.0, 2.0, 5.0, 9.0], 8.0);
        assert_eq!(first_passage(&s, -1.0).unwrap(), 0);
        assert_eq!(first_passage(&s, 0.0).unwrap(), 1);
        assert_eq!(first_passage(&s, 4.0).unwrap(), 2);
        assert!(matches!(first_passage(&s, 8.5), Err(FiissError::Range(_))));
    }

    struct Linear;
    impl Response for Linear {
        fn value(&self, t: f64) -> f64 {
            t
        }
    }

    #[test]
    fn shot_noise_hand_cases() {
        let s = seq(&[0.0, 2.0, 5.0], 4.0);
        assert_eq!(shot_noise(&s, &Linear, 3.0).unwrap(), 4.0);
        assert_eq!(shot_noise(&s, &Linear, -0.5).unwrap(), 0.0);
        let one = ResponseFunction::new(0.0).unwrap();
        for &t in &[0.0, 1.0, 2.0, 3.9] {
            assert_eq!(shot_noise(&s, &one, t).unwrap(), first_passage(&s, t).unwrap() as f64);
        }
        let single = seq(&[0.0, 10.0], 9.0);
        let dec = ResponseFunction::new(-0.7).unwrap();
        assert_eq!(shot_noise(&single, &dec, 3.0).unwrap(), dec.value(3.0));
    }

    #[test]
    fn response_shapes() {
        let up = ResponseFunction::new(0.5).unwrap();
        let down = ResponseFunction::new(-0.5).unwrap();
        assert_eq!(up.form(), ResponseForm::PowerLaw);
        assert_eq!(down.form(), ResponseForm::ShiftedPowerLaw);
        assert_eq!(down.value(0.0), 1.0);
        assert!((down.value(1e8) / 1e8f64.powf(-0.5) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn beta_zero_marginal_is_scaled_count() {
        let (alpha, u, t) = (0.7, 1.5, 300.0);
        let x = scaled_marginal(alpha, 0.0, u, t, 50, 5).unwrap();
        let counts = replicate(50, 5, |src| {
            let s = simulate_renewal(alpha, u * t, src).unwrap();
            t.powf(-alpha) * first_passage(&s, u * t).unwrap() as f64
        });
        let mut counts = counts;
        counts.sort_by(f64::total_cmp);
        assert_eq!(x.values(), counts.as_slice());
    }

    #[test]
    fn undershoot_in_unit_interval() {
        let s = undershoot_sample(0.5, 100.0, 2000, 3).unwrap();
        assert!(s.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn modulus_synthetic() {
        let s = seq(&[0.0, 2.5, 100.0], 10.0);
        let alpha = 0.75;
        let stat = modulus_statistic(&s, alpha, 4.0, 1.0, alpha - 0.5).unwrap();
        let expected = 4f64.powf(-alpha) * 2.0 * 2f64.sqrt();
        assert!((stat - expected).abs() < 1e-12, "{stat} vs {expected}");
    }

    #[test]
    fn modulus_nonincreasing_in_delta_on_unit_window() {
        for seed in 0..10 {
            let mut src = RandomSource::new(seed, 0);
            let s = simulate_renewal(0.6, 1000.0, &mut src).unwrap();
            let deltas = [0.05, 0.2, 0.4, 0.55];
            let stats: Vec<f64> = deltas
                .iter()
                .map(|&d| modulus_statistic(&s, 0.6, 1000.0, 1.0, d).unwrap())
                .collect();
            assert!(stats.windows(2).all(|w| w[1] <= w[0]), "{stats:?}");
        }
    }
}
