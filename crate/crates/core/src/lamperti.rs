//! Exponential functionals `I = int_0^inf exp(-c Z(t)) dt` of the killed
//! subordinator `Z` with Levy measure
//! `nu(dx) = e^{-x/alpha} (1 - e^{-x/alpha})^(-alpha-1) dx` and unit killing
//! rate. For `beta > -alpha`, `Y(u)` has the law of `u^(alpha+beta) I` with
//! `c = (alpha+beta)/alpha`.

use serde::{Deserialize, Serialize};

use crate::analytic::{check_alpha, nu_tail, small_jump_mean, FiissParams};
use crate::error::{domain, FiissError, Result};
use crate::paths::fiiss_point;
use crate::sampling::{
    derive_seed, nu_jump_with_tail, sample_exponential, try_replicate, EmpiricalSample, UniformSource,
};
use crate::stats::{ks_two_sample, Relation, ReportEntry};

/// Default jump truncation level.
pub const DEFAULT_EPS: f64 = 1e-4;

/// Treatment of the jumps below the truncation level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SmallJumps {
    /// Replaced by their mean, a drift `int_0^eps x nu(dx)`.
    #[default]
    Compensated,
    /// Dropped.
    Truncated,
}

/// One killed-subordinator path: jumps above `eps` before the kill time, plus
/// an optional drift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KilledSubordinatorDraw {
    pub jump_times: Vec<f64>,
    pub jump_sizes: Vec<f64>,
    pub kill_time: f64,
    pub eps: f64,
    pub drift: f64,
}

impl KilledSubordinatorDraw {
    /// `int_0^kill exp(-c Z(t)) dt`, exact for piecewise-linear `Z`.
    pub fn exp_functional(&self, c: f64) -> f64 {
        let mut acc = Integrator::new(c, self.drift);
        let mut t = 0.0;
        let mut jumps = 0.0;
        for (&s, &x) in self.jump_times.iter().zip(&self.jump_sizes) {
            acc.segment(t, s, jumps);
            jumps += x;
            t = s;
        }
        acc.segment(t, self.kill_time, jumps);
        acc.sum
    }
}

struct Integrator {
    c: f64,
    drift: f64,
    sum: f64,
}

impl Integrator {
    fn new(c: f64, drift: f64) -> Self {
        Integrator { c, drift, sum: 0.0 }
    }

    // Adds int_a^b exp(-c (drift s + jumps)) ds.
    fn segment(&mut self, a: f64, b: f64, jumps: f64) {
        let len = b - a;
        if len <= 0.0 {
            return;
        }
        let level = (-self.c * (self.drift * a + jumps)).exp();
        let rate = self.c * self.drift;
        self.sum += if rate > 0.0 {
            level * -(-rate * len).exp_m1() / rate
        } else {
            level * len
        };
    }
}

fn check_inputs(alpha: f64, c: f64, eps: f64) -> Result<()> {
    check_alpha(alpha)?;
    if !(c > 0.0) || !c.is_finite() {
        return domain(format!("c = {c} must be positive"));
    }
    if !(eps > 0.0) {
        return domain(format!("eps = {eps} must be positive"));
    }
    Ok(())
}

fn drift_for(alpha: f64, eps: f64, small: SmallJumps) -> Result<f64> {
    match small {
        SmallJumps::Compensated => small_jump_mean(alpha, eps),
        SmallJumps::Truncated => Ok(0.0),
    }
}

/// Killed subordinator with jumps above `eps`.
pub fn simulate_killed_subordinator<R: UniformSource + ?Sized>(
    alpha: f64,
    eps: f64,
    small: SmallJumps,
    src: &mut R,
) -> Result<KilledSubordinatorDraw> {
    check_inputs(alpha, 1.0, eps)?;
    let rate = nu_tail(alpha, eps)?;
    let drift = drift_for(alpha, eps, small)?;
    let kill_time = sample_exponential(1.0, src);
    let mut jump_times = Vec::new();
    let mut jump_sizes = Vec::new();
    let mut t = sample_exponential(rate, src);
    while t < kill_time {
        jump_times.push(t);
        jump_sizes.push(nu_jump_with_tail(alpha, eps, rate, src));
        t += sample_exponential(rate, src);
    }
    Ok(KilledSubordinatorDraw {
        jump_times,
        jump_sizes,
        kill_time,
        eps,
        drift,
    })
}

/// One draw of `int_0^inf exp(-c Z(t)) dt` with small jumps compensated.
pub fn simulate_exp_functional<R: UniformSource + ?Sized>(alpha: f64, c: f64, eps: f64, src: &mut R) -> Result<f64> {
    simulate_exp_functional_with(alpha, c, eps, SmallJumps::Compensated, src)
}

/// [`simulate_exp_functional`] with a chosen small-jump treatment. Draws the
/// same variates as [`simulate_killed_subordinator`] followed by
/// [`KilledSubordinatorDraw::exp_functional`], without storing the path.
pub fn simulate_exp_functional_with<R: UniformSource + ?Sized>(
    alpha: f64,
    c: f64,
    eps: f64,
    small: SmallJumps,
    src: &mut R,
) -> Result<f64> {
    check_inputs(alpha, c, eps)?;
    let rate = nu_tail(alpha, eps)?;
    let drift = drift_for(alpha, eps, small)?;
    let kill_time = sample_exponential(1.0, src);
    let mut acc = Integrator::new(c, drift);
    let mut t = 0.0;
    let mut jumps = 0.0;
    let mut next = sample_exponential(rate, src);
    while next < kill_time {
        acc.segment(t, next, jumps);
        jumps += nu_jump_with_tail(alpha, eps, rate, src);
        t = next;
        next += sample_exponential(rate, src);
    }
    acc.segment(t, kill_time, jumps);
    Ok(acc.sum)
}

/// `n` exponential-functional draws; replica `i` uses stream `i` of `seed`.
pub fn exp_functional_sample(
    alpha: f64,
    c: f64,
    eps: f64,
    small: SmallJumps,
    n: usize,
    seed: u64,
) -> Result<EmpiricalSample> {
    let draws = try_replicate(n, seed, |src| simulate_exp_functional_with(alpha, c, eps, small, src))?;
    Ok(EmpiricalSample::new(draws)?
        .with_meta("alpha", alpha)
        .with_meta("c", c)
        .with_meta("eps", eps)
        .with_meta("seed", seed))
}

/// `n` draws of `u^(-1) W(u^(1/alpha))`, each Mittag-Leffler distributed.
pub fn mittag_leffler_sample(alpha: f64, n: usize, u: f64, t_step: f64, seed: u64) -> Result<EmpiricalSample> {
    if n == 0 {
        return Err(FiissError::EmptySample);
    }
    if !(u > 0.0) {
        return domain(format!("u = {u} must be positive"));
    }
    let params = FiissParams::new(alpha, 0.0)?;
    let level = u.powf(1.0 / alpha);
    let draws = try_replicate(n, seed, |src| Ok(fiiss_point(&params, level, t_step, src)? / u))?;
    Ok(EmpiricalSample::new(draws)?
        .with_meta("alpha", alpha)
        .with_meta("u", u)
        .with_meta("t_step", t_step)
        .with_meta("seed", seed))
}

/// Two-sample KS between exponential-functional draws and `Y(1)` draws,
/// accepted when the statistic is below `threshold`.
pub fn fiiss_identity_check(
    params: &FiissParams,
    n: usize,
    eps: f64,
    t_step: f64,
    threshold: f64,
    seed: u64,
) -> Result<ReportEntry> {
    params.require_regular("the exponential-functional identity")?;
    let c = params.functional_rate();
    let functional = exp_functional_sample(params.alpha(), c, eps, SmallJumps::Compensated, n, derive_seed(seed, 1))?;
    let marginal = crate::paths::fiiss_marginal(params, 1.0, n, t_step, derive_seed(seed, 2))?;
    let ks = ks_two_sample(&functional, &marginal);
    Ok(ReportEntry::new(
        format!("lamperti_identity_beta_{}", params.beta()),
        ks.statistic,
        Relation::Below(threshold),
        n,
        seed,
    )
    .param("alpha", params.alpha())
    .param("beta", params.beta())
    .param("eps", eps)
    .param("t_step", t_step)
    .param("p_value", ks.p_value))
}

/// Least-squares fit of `log(-log P{Y > x})` against `log x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Asymptotic slope `1 / (1 - alpha)`.
    pub target: f64,
    /// Exceedances at the right edge of the window.
    pub edge_count: usize,
}

/// Number of evaluation points across the fit window.
pub const TAIL_FIT_POINTS: usize = 32;

/// Tail-slope fit over `window`, evaluated at [`TAIL_FIT_POINTS`] evenly
/// spaced points. Fails with a window error when fewer than `min_edge_count`
/// draws exceed the right edge.
pub fn tail_fit(
    sample: &EmpiricalSample,
    params: &FiissParams,
    window: (f64, f64),
    min_edge_count: usize,
) -> Result<TailFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return domain("tail window must satisfy 0 < lo < hi");
    }
    let n = sample.len();
    let edge_count = (sample.survival(hi) * n as f64).round() as usize;
    if edge_count < min_edge_count.max(1) {
        return Err(FiissError::Window(format!(
            "{edge_count} draws exceed {hi}, need {min_edge_count}"
        )));
    }
    if sample.survival(lo) >= 1.0 {
        return Err(FiissError::Window(format!("every draw exceeds {lo}")));
    }
    let xs: Vec<f64> = (0..TAIL_FIT_POINTS)
        .map(|i| lo + (hi - lo) * i as f64 / (TAIL_FIT_POINTS - 1) as f64)
        .collect();
    let ys: Vec<f64> = xs.iter().map(|&x| -sample.survival(x).ln()).collect();
    let fit = crate::stats::loglog_slope(&xs, &ys, crate::stats::LogAxes::BOTH)?;
    Ok(TailFit {
        slope: fit.slope,
        intercept: fit.intercept,
        r2: fit.r2,
        target: 1.0 / (1.0 - params.alpha()),
        edge_count,
    })
}
