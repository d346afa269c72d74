//! Kolmogorov-Smirnov tests, moment and slope estimators, the Beta CDF, the
//! iterated-logarithm scan and verification reports.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::analytic::{lil_constant, ln_gamma, FiissParams};
use crate::error::{domain, Result};
use crate::paths::{fiiss_from_subordinator, simulate_subordinator_until};
use crate::sampling::{try_replicate, EmpiricalSample};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov survival `P{K > lambda}`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Theta-function dual form converges fast for small lambda.
        let mut s = 0.0;
        for k in 1..=20 {
            let m = (2 * k - 1) as f64;
            s += (-m * m * PI * PI / (8.0 * lambda * lambda)).exp();
        }
        return (1.0 - (2.0 * PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * lambda * lambda).exp();
        s += if k % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// Two-sample KS statistic and asymptotic p-value.
pub fn ks_two_sample(a: &EmpiricalSample, b: &EmpiricalSample) -> KsResult {
    let (xa, xb) = (a.values(), b.values());
    let (na, nb) = (xa.len(), xb.len());
    let (mut i, mut j) = (0, 0);
    let mut d = 0.0f64;
    while i < na && j < nb {
        let x = xa[i].min(xb[j]);
        while i < na && xa[i] <= x {
            i += 1;
        }
        while j < nb && xb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na as f64 - j as f64 / nb as f64).abs());
    }
    let ne = (na * nb) as f64 / (na + nb) as f64;
    KsResult {
        statistic: d,
        p_value: kolmogorov_survival(ne.sqrt() * d),
    }
}

/// One-sample KS statistic against `cdf` and asymptotic p-value.
pub fn ks_one_sample(a: &EmpiricalSample, cdf: impl Fn(f64) -> f64) -> KsResult {
    let xs = a.values();
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    KsResult {
        statistic: d,
        p_value: kolmogorov_survival(n.sqrt() * d),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub std_error: f64,
}

/// Sample mean of `x^n` and its standard error.
pub fn moment_estimate(a: &EmpiricalSample, n: u32) -> Result<MomentEstimate> {
    if n == 0 {
        return domain("moment order must be at least 1");
    }
    let powers: Vec<f64> = a.values().iter().map(|x| x.powi(n as i32)).collect();
    let len = powers.len() as f64;
    let mean = powers.iter().sum::<f64>() / len;
    let std_error = if powers.len() > 1 {
        let var = powers.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (len - 1.0);
        (var / len).sqrt()
    } else {
        0.0
    };
    Ok(MomentEstimate { mean, std_error })
}

/// Which coordinates are log-transformed before a linear fit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LogAxes {
    pub x: bool,
    pub y: bool,
}

impl LogAxes {
    pub const BOTH: LogAxes = LogAxes { x: true, y: true };
    pub const NONE: LogAxes = LogAxes { x: false, y: false };
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares of `y` on `x` after the chosen log transforms.
pub fn loglog_slope(xs: &[f64], ys: &[f64], axes: LogAxes) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return domain("need at least three paired points");
    }
    let tx = |v: f64, log: bool| -> Result<f64> {
        if !log {
            return Ok(v);
        }
        if !(v > 0.0) {
            return domain(format!("cannot take the log of {v}"));
        }
        Ok(v.ln())
    };
    let x = xs.iter().map(|&v| tx(v, axes.x)).collect::<Result<Vec<_>>>()?;
    let y = ys.iter().map(|&v| tx(v, axes.y)).collect::<Result<Vec<_>>>()?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    if sxx == 0.0 {
        return domain("x values are all equal");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - intercept - slope * a).powi(2))
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    Ok(LinearFit { slope, intercept, r2 })
}

/// CDF of the Beta(p, q) law by adaptive quadrature of its density, with
/// `y = s^(1/p)` near 0 and `1 - y = r^(1/q)` near 1 to remove the endpoint
/// singularities.
pub fn beta_cdf(p: f64, q: f64, x: f64) -> Result<f64> {
    if !(p > 0.0 && q > 0.0) {
        return domain(format!("Beta parameters must be positive, got ({p}, {q})"));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x >= 1.0 {
        return Ok(1.0);
    }
    let ln_b = ln_gamma(p)? + ln_gamma(q)? - ln_gamma(p + q)?;
    let norm = (-ln_b).exp();
    // int_0^x y^(p-1) (1-y)^(q-1) dy = (1/p) int_0^(x^p) (1 - s^(1/p))^(q-1) ds
    let lower = |x: f64, p: f64, q: f64| {
        let f = |s: f64| (1.0 - s.powf(1.0 / p)).powf(q - 1.0);
        adaptive_simpson(&f, 0.0, x.powf(p), 1e-14) / p
    };
    if x <= 0.5 {
        Ok((norm * lower(x, p, q)).clamp(0.0, 1.0))
    } else {
        Ok((1.0 - norm * lower(1.0 - x, q, p)).clamp(0.0, 1.0))
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Result of the iterated-logarithm envelope scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LilScan {
    /// Largest ratio over paths and grid points.
    pub max_ratio: f64,
    /// Largest over paths of the per-path smallest ratio on the grid.
    pub liminf_envelope: f64,
    /// Median over paths of the ratio at `fixed_u`.
    pub median_at_fixed_u: f64,
    pub fixed_u: f64,
    /// The almost-sure limsup constant.
    pub constant: f64,
    pub n_paths: usize,
    pub seed: u64,
}

/// Ratios `Y(u) / (u^(alpha+beta) (log log u)^(1-alpha))` over `u_grid`.
pub fn lil_ratio_scan(
    params: &FiissParams,
    u_grid: &[f64],
    fixed_u: f64,
    n_paths: usize,
    t_step: f64,
    seed: u64,
) -> Result<LilScan> {
    params.require_regular("the iterated-logarithm scan")?;
    if u_grid.is_empty() || u_grid.iter().any(|&u| !(u > std::f64::consts::E)) || !(fixed_u > std::f64::consts::E) {
        return domain("scan points must exceed e");
    }
    let (alpha, index) = (params.alpha(), params.index());
    let norm = |u: f64| u.powf(index) * u.ln().ln().powf(1.0 - alpha);
    let u_max = u_grid.iter().copied().fold(fixed_u, f64::max);
    let rows = try_replicate(n_paths, seed, |src| {
        let d = simulate_subordinator_until(alpha, u_max, t_step, src)?;
        let ys = fiiss_from_subordinator(&d, params, u_grid)?;
        let ratios: Vec<f64> = u_grid.iter().zip(&ys).map(|(&u, &y)| y / norm(u)).collect();
        let fixed = fiiss_from_subordinator(&d, params, &[fixed_u])?[0] / norm(fixed_u);
        let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        Ok((max, min, fixed))
    })?;
    let max_ratio = rows.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let liminf_envelope = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let fixed = EmpiricalSample::new(rows.iter().map(|r| r.2).collect())?;
    Ok(LilScan {
        max_ratio,
        liminf_envelope,
        median_at_fixed_u: fixed.quantile(0.5),
        fixed_u,
        constant: lil_constant(params)?,
        n_paths,
        seed,
    })
}

/// Acceptance relation between a statistic and its threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `statistic < threshold`.
    Below(f64),
    /// `statistic > threshold`.
    Above(f64),
    /// `lo <= statistic <= hi`.
    Between(f64, f64),
}

impl Relation {
    pub fn holds(&self, x: f64) -> bool {
        match *self {
            Relation::Below(t) => x < t,
            Relation::Above(t) => x > t,
            Relation::Between(lo, hi) => lo <= x && x <= hi,
        }
    }
}

/// One check in a [`VerificationReport`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub name: String,
    pub statistic: f64,
    pub threshold: Relation,
    pub pass: bool,
    pub n: usize,
    pub seed: u64,
    pub params: BTreeMap<String, serde_json::Value>,
}

impl ReportEntry {
    pub fn new(name: impl Into<String>, statistic: f64, threshold: Relation, n: usize, seed: u64) -> Self {
        ReportEntry {
            name: name.into(),
            statistic,
            threshold,
            pass: threshold.holds(statistic),
            n,
            seed,
            params: BTreeMap::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub entries: Vec<ReportEntry>,
}

impl VerificationReport {
    pub fn push(&mut self, entry: ReportEntry) {
        self.entries.push(entry);
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
