//! Closed-form special functions and constants.
//!
//! Everything here is a pure function of its arguments. The statistical
//! checks elsewhere in the crate compare Monte Carlo output against these
//! values.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Largest argument accepted by [`gamma_fn`] before `f64` overflow.
pub const GAMMA_MAX_ARG: f64 = 170.0;

// Lanczos approximation, g = 7, nine coefficients. Max relative error on the
// positive axis is about 2e-15.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(x: f64) -> f64 {
    let mut a = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    a
}

/// Euler's gamma function on `(0, 170]`.
pub fn gamma_fn(x: f64) -> Result<f64> {
    if !(x > 0.0) || x > GAMMA_MAX_ARG {
        return domain(format!("gamma argument {x} outside (0, {GAMMA_MAX_ARG}]"));
    }
    Ok(gamma_unchecked(x))
}

fn gamma_unchecked(x: f64) -> f64 {
    if x.fract() == 0.0 && x <= 30.0 {
        // Exact factorials for small integer arguments.
        return (1..x as u32).map(f64::from).product();
    }
    if x < 0.5 {
        // Reflection keeps the series in its accurate range.
        return PI / ((PI * x).sin() * gamma_unchecked(1.0 - x));
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    // Split the power so that t^(z+1/2) does not overflow before e^-t is applied.
    let half = t.powf(0.5 * (z + 0.5));
    (2.0 * PI).sqrt() * lanczos_sum(z) * (half * (-t).exp()) * half
}

/// Natural logarithm of the gamma function for `x > 0`.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return domain(format!("ln_gamma argument {x} must be positive and finite"));
    }
    if x < 0.5 {
        return Ok((PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x)?);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    Ok(0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln())
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        domain(format!("alpha = {alpha} must lie in (0, 1)"))
    }
}

/// Parameter regime of the pair `(alpha, beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    /// `beta > 0`: fractional integral of the inverse subordinator.
    PositiveBeta,
    /// `beta = 0`: the process is the inverse subordinator itself.
    InverseSub,
    /// `-alpha < beta < 0`: Marchaud-type fractional derivative, continuous paths.
    NegativeRegular,
    /// `beta = -alpha`.
    Critical,
    /// `beta < -alpha`.
    Divergent,
}

impl Regime {
    pub fn classify(alpha: f64, beta: f64) -> Regime {
        if beta > 0.0 {
            Regime::PositiveBeta
        } else if beta == 0.0 {
            Regime::InverseSub
        } else if beta > -alpha {
            Regime::NegativeRegular
        } else if beta == -alpha {
            Regime::Critical
        } else {
            Regime::Divergent
        }
    }

    /// True when paths are continuous (`beta > -alpha`).
    pub fn is_regular(self) -> bool {
        matches!(
            self,
            Regime::PositiveBeta | Regime::InverseSub | Regime::NegativeRegular
        )
    }
}

/// The pair `(alpha, beta)` indexing a fractionally integrated inverse stable
/// subordinator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiissParams {
    alpha: f64,
    beta: f64,
    regime: Regime,
}

impl FiissParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !beta.is_finite() {
            return domain(format!("beta = {beta} must be finite"));
        }
        Ok(FiissParams {
            alpha,
            beta,
            regime: Regime::classify(alpha, beta),
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    /// Self-similarity index `alpha + beta`.
    pub fn index(&self) -> f64 {
        self.alpha + self.beta
    }

    /// Exponent multiplier `(alpha + beta) / alpha` of the exponential functional.
    pub fn functional_rate(&self) -> f64 {
        (self.alpha + self.beta) / self.alpha
    }

    pub(crate) fn require_regular(&self, what: &str) -> Result<()> {
        if self.regime.is_regular() {
            Ok(())
        } else {
            domain(format!(
                "{what} requires beta > -alpha, got alpha = {}, beta = {}",
                self.alpha, self.beta
            ))
        }
    }
}

/// `E W(1)^n = n! / (Gamma(1-alpha)^n Gamma(1+n alpha))`, the moments of the
/// Mittag-Leffler law of the inverse subordinator at time one.
pub fn mittag_leffler_moment(alpha: f64, n: u32) -> Result<f64> {
    check_alpha(alpha)?;
    if n == 0 {
        return domain("moment order must be at least 1");
    }
    let nf = f64::from(n);
    let log_m = ln_gamma(nf + 1.0)? - nf * ln_gamma(1.0 - alpha)? - ln_gamma(1.0 + nf * alpha)?;
    Ok(log_m.exp())
}

/// Laplace exponent of the killed subordinator in the Lamperti representation,
/// `Gamma(1-alpha) Gamma(1+alpha s) / Gamma(1+alpha(s-1))`.
pub fn laplace_exponent_phi(alpha: f64, s: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(s >= 0.0) {
        return domain(format!("Laplace argument s = {s} must be nonnegative"));
    }
    Ok(gamma_fn(1.0 - alpha)? * gamma_fn(1.0 + alpha * s)? / gamma_fn(1.0 + alpha * (s - 1.0))?)
}

/// `-log E exp(-s c Z(1))` with `c = (alpha+beta)/alpha`.
pub fn psi_exponent(params: &FiissParams, s: f64) -> Result<f64> {
    params.require_regular("psi_exponent")?;
    if !(s >= 0.0) {
        return domain(format!("s = {s} must be nonnegative"));
    }
    let alpha = params.alpha();
    let hs = params.index() * s;
    if hs + 1.0 - alpha <= 0.0 {
        return domain("gamma argument (alpha+beta)s + 1 - alpha must be positive");
    }
    Ok(gamma_fn(1.0 - alpha)? * gamma_fn(hs + 1.0)? / gamma_fn(hs + 1.0 - alpha)?)
}

/// Limit constant `c_{alpha,beta} = 1/(Gamma(1-alpha)(alpha+beta)^alpha (1-alpha)^(1-alpha))`
/// of the law of the iterated logarithm for the fractionally integrated process.
pub fn lil_constant(params: &FiissParams) -> Result<f64> {
    params.require_regular("lil_constant")?;
    let a = params.alpha();
    Ok(1.0 / (gamma_fn(1.0 - a)? * params.index().powf(a) * (1.0 - a).powf(1.0 - a)))
}

/// Iterated-logarithm constant of the inverse subordinator itself,
/// `1/(Gamma(1-alpha) alpha^alpha (1-alpha)^(1-alpha))`.
pub fn inverse_subordinator_lil_constant(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(1.0 / (gamma_fn(1.0 - alpha)? * alpha.powf(alpha) * (1.0 - alpha).powf(1.0 - alpha)))
}

/// Uniform modulus-of-continuity constant of the inverse subordinator,
/// `1/(Gamma(1-alpha) alpha^(2 alpha - 1) (1-alpha)^(1-alpha))`.
///
/// Exposed for reference only; no routine checks convergence to it.
pub fn modulus_constant(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(1.0
        / (gamma_fn(1.0 - alpha)? * alpha.powf(2.0 * alpha - 1.0) * (1.0 - alpha).powf(1.0 - alpha)))
}

/// Leading-order log tail `(x / c_{alpha,beta})^(1/(1-alpha))` of `Y(1)`.
pub fn tail_asymptote(params: &FiissParams, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return domain(format!("x = {x} must be positive"));
    }
    let c = lil_constant(params)?;
    Ok((x / c).powf(1.0 / (1.0 - params.alpha())))
}

/// Density of the Levy measure `e^{-x/alpha} / (1 - e^{-x/alpha})^{alpha+1}`.
pub fn levy_density_nu(alpha: f64, x: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(x > 0.0) {
        return domain(format!("x = {x} must be positive"));
    }
    let e = (-x / alpha).exp();
    let y = -(-x / alpha).exp_m1();
    Ok(e / y.powf(alpha + 1.0))
}

/// `nu((eps, inf)) = (1 - e^{-eps/alpha})^{-alpha} - 1`.
pub fn nu_tail(alpha: f64, eps: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(eps > 0.0) {
        return domain(format!("eps = {eps} must be positive"));
    }
    if eps.is_infinite() {
        return Ok(0.0);
    }
    // ln(1 - e^{-eps/alpha}) computed without cancellation at either end.
    let log_y = (-(-eps / alpha).exp()).ln_1p();
    Ok((-alpha * log_y).exp_m1())
}

/// First moment of the Levy measure below `eps`, `int_0^eps x nu(dx)`.
///
/// With `y = 1 - e^{-x/alpha}` the measure becomes `alpha y^{-alpha-1} dy` and
/// `x = -alpha ln(1-y)`, giving the series `alpha^2 sum_k y^{k-alpha}/(k(k-alpha))`.
pub fn small_jump_mean(alpha: f64, eps: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(eps > 0.0) || !eps.is_finite() {
        return domain(format!("eps = {eps} must be positive and finite"));
    }
    let y = -(-eps / alpha).exp_m1();
    let mut sum = 0.0;
    let mut pow = y.powf(1.0 - alpha);
    for k in 1..10_000_000u64 {
        let kf = k as f64;
        let term = pow / (kf * (kf - alpha));
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
        pow *= y;
    }
    Ok(alpha * alpha * sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn gamma_small_integers() {
        assert_eq!(gamma_fn(1.0).unwrap(), 1.0);
        assert_relative_eq!(gamma_fn(5.0).unwrap(), 24.0, max_relative = 1e-14);
        for n in 1..=25u32 {
            assert_relative_eq!(
                gamma_fn(f64::from(n)).unwrap(),
                factorial(n - 1),
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn gamma_half_integers() {
        // Gamma(n + 1/2) = (2n)! sqrt(pi) / (4^n n!)
        assert_relative_eq!(gamma_fn(0.5).unwrap(), 1.772_453_850_905_516, max_relative = 1e-13);
        for n in 0..=14u32 {
            let exact = factorial(2 * n) * PI.sqrt() / (4f64.powi(n as i32) * factorial(n));
            assert_relative_eq!(
                gamma_fn(f64::from(n) + 0.5).unwrap(),
                exact,
                max_relative = 1e-10
            );
        }
    }

    #[test]
    fn gamma_reflection_and_recurrence() {
        for i in 1..200 {
            let x = i as f64 * 0.15;
            let g = gamma_fn(x).unwrap();
            assert_relative_eq!(gamma_fn(x + 1.0).unwrap(), x * g, max_relative = 1e-12);
            if x < 1.0 {
                let r = g * gamma_fn(1.0 - x).unwrap();
                assert_relative_eq!(r, PI / (PI * x).sin(), max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn gamma_domain() {
        assert!(gamma_fn(0.0).is_err());
        assert!(gamma_fn(-1.5).is_err());
        assert!(gamma_fn(170.5).is_err());
        assert!(gamma_fn(f64::NAN).is_err());
        assert!(gamma_fn(170.0).unwrap().is_finite());
    }

    #[test]
    fn ln_gamma_matches_gamma() {
        for i in 1..300 {
            let x = i as f64 * 0.1;
            assert_relative_eq!(
                ln_gamma(x).unwrap().exp(),
                gamma_fn(x).unwrap(),
                max_relative = 1e-11
            );
        }
    }

    #[test]
    fn regime_classification() {
        let a = 0.75;
        assert_eq!(Regime::classify(a, 0.5), Regime::PositiveBeta);
        assert_eq!(Regime::classify(a, 0.0), Regime::InverseSub);
        assert_eq!(Regime::classify(a, -0.5), Regime::NegativeRegular);
        assert_eq!(Regime::classify(a, -0.75), Regime::Critical);
        assert_eq!(Regime::classify(a, -1.5), Regime::Divergent);
        assert!(FiissParams::new(1.0, 0.0).is_err());
        assert!(FiissParams::new(0.0, 0.0).is_err());
        assert!(FiissParams::new(0.5, f64::NAN).is_err());
    }

    #[test]
    fn ml_moment_examples() {
        assert_relative_eq!(mittag_leffler_moment(0.5, 1).unwrap(), 2.0 / PI, max_relative = 1e-12);
        assert_relative_eq!(mittag_leffler_moment(0.5, 2).unwrap(), 2.0 / PI, max_relative = 1e-12);
        let lhs = mittag_leffler_moment(0.3, 3).unwrap();
        let prod: f64 = (1..=3)
            .map(|k| laplace_exponent_phi(0.3, f64::from(k)).unwrap())
            .product();
        assert_relative_eq!(lhs, 6.0 / prod, max_relative = 1e-10);
        assert!(mittag_leffler_moment(0.5, 0).is_err());
        assert!(mittag_leffler_moment(1.2, 1).is_err());
    }

    #[test]
    fn phi_examples() {
        for a in [0.1, 0.5, 0.9] {
            assert_relative_eq!(laplace_exponent_phi(a, 0.0).unwrap(), 1.0, max_relative = 1e-12);
        }
        assert_relative_eq!(laplace_exponent_phi(0.5, 1.0).unwrap(), PI / 2.0, max_relative = 1e-12);
        let expected = gamma_fn(0.25).unwrap() * gamma_fn(2.5).unwrap() / gamma_fn(1.75).unwrap();
        assert_relative_eq!(laplace_exponent_phi(0.75, 2.0).unwrap(), expected, max_relative = 1e-14);
        assert!(laplace_exponent_phi(0.5, -1.0).is_err());
    }

    #[test]
    fn psi_examples() {
        let p = FiissParams::new(0.5, 0.0).unwrap();
        assert_relative_eq!(psi_exponent(&p, 0.0).unwrap(), 1.0, max_relative = 1e-12);
        assert_relative_eq!(psi_exponent(&p, 1.0).unwrap(), PI / 2.0, max_relative = 1e-12);
        let q = FiissParams::new(0.5, 0.5).unwrap();
        let ratio = psi_exponent(&q, 4.0).unwrap() / (gamma_fn(0.5).unwrap() * 2.0);
        assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
        let bad = FiissParams::new(0.5, -0.5).unwrap();
        assert!(psi_exponent(&bad, 1.0).is_err());
    }

    #[test]
    fn psi_is_phi_at_scaled_argument() {
        for &(a, b) in &[(0.3, 0.4), (0.5, -0.2), (0.75, 0.5), (0.75, -0.5), (0.6, 2.0)] {
            let p = FiissParams::new(a, b).unwrap();
            let c = p.functional_rate();
            for i in 0..20 {
                let s = i as f64 * 0.37;
                assert_relative_eq!(
                    psi_exponent(&p, s).unwrap(),
                    laplace_exponent_phi(a, c * s).unwrap(),
                    max_relative = 1e-10
                );
            }
        }
    }

    #[test]
    fn lil_constant_examples() {
        let p = FiissParams::new(0.75, 0.5).unwrap();
        let c = lil_constant(&p).unwrap();
        assert!((c - 0.3300).abs() < 5e-5, "c = {c}");
        let q = FiissParams::new(0.5, 0.0).unwrap();
        assert_relative_eq!(lil_constant(&q).unwrap(), 2.0 / PI.sqrt(), max_relative = 1e-12);
        for a in [0.2, 0.5, 0.75, 0.9] {
            let p0 = FiissParams::new(a, 0.0).unwrap();
            assert_relative_eq!(
                lil_constant(&p0).unwrap(),
                inverse_subordinator_lil_constant(a).unwrap(),
                max_relative = 1e-12
            );
        }
        assert!(lil_constant(&FiissParams::new(0.75, -0.75).unwrap()).is_err());
    }

    #[test]
    fn tail_asymptote_examples() {
        let p = FiissParams::new(0.75, 0.5).unwrap();
        let c = lil_constant(&p).unwrap();
        assert_relative_eq!(tail_asymptote(&p, c).unwrap(), 1.0, max_relative = 1e-12);
        let q = FiissParams::new(0.5, 0.0).unwrap();
        let v = tail_asymptote(&q, 3.0).unwrap();
        assert!((v - 7.0686).abs() < 1e-3, "v = {v}");
        let r = tail_asymptote(&p, 2.0).unwrap() / tail_asymptote(&p, 1.0).unwrap();
        assert_relative_eq!(r, 2f64.powf(4.0), max_relative = 1e-12);
    }

    #[test]
    fn nu_tail_examples() {
        assert_relative_eq!(
            nu_tail(0.5, 0.5).unwrap(),
            (1.0 - (-1.0f64).exp()).powf(-0.5) - 1.0,
            max_relative = 1e-12
        );
        assert!((nu_tail(0.5, 0.5).unwrap() - 0.25776).abs() < 1e-5);
        assert!(nu_tail(0.5, 60.0).unwrap() < 1e-50);
        assert_eq!(nu_tail(0.5, f64::INFINITY).unwrap(), 0.0);
        assert!(nu_tail(0.5, 0.0).is_err());
        assert!(levy_density_nu(0.5, 0.0).is_err());
    }

    // Composite Gauss-Legendre on a log-spaced partition; independent of the
    // closed forms it checks.
    fn quad(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        quad_on(f, a, b, true)
    }

    fn quad_on(f: impl Fn(f64) -> f64, a: f64, b: f64, log_spaced: bool) -> f64 {
        const X: [f64; 5] = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683,
            0.0,
            0.538_469_310_105_683,
            0.906_179_845_938_664,
        ];
        const W: [f64; 5] = [
            0.236_926_885_056_189,
            0.478_628_670_499_366,
            0.568_888_888_888_889,
            0.478_628_670_499_366,
            0.236_926_885_056_189,
        ];
        let cells = 4000;
        let node = |i: usize| {
            let frac = i as f64 / cells as f64;
            if log_spaced {
                (a.ln() + (b.ln() - a.ln()) * frac).exp()
            } else {
                a + (b - a) * frac
            }
        };
        let mut total = 0.0;
        for i in 0..cells {
            let (lo, hi) = (node(i), node(i + 1));
            let (m, h) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            total += X.iter().zip(W.iter()).map(|(x, w)| w * f(m + h * x)).sum::<f64>() * h;
        }
        total
    }

    #[test]
    fn nu_tail_matches_quadrature() {
        for &a in &[0.3, 0.5, 0.75] {
            for &(e, x) in &[(0.01, 1.0), (0.1, 5.0), (0.5, 3.0)] {
                let q = quad(|t| levy_density_nu(a, t).unwrap(), e, x);
                let closed = nu_tail(a, e).unwrap() - nu_tail(a, x).unwrap();
                assert!((q - closed).abs() < 1e-8, "alpha {a}: {q} vs {closed}");
            }
        }
    }

    #[test]
    fn nu_tail_decreasing_convex() {
        let a = 0.6;
        let h = 1e-3;
        let mut prev = f64::INFINITY;
        for i in 1..2000 {
            let x = i as f64 * 0.005;
            let v = nu_tail(a, x).unwrap();
            assert!(v < prev);
            prev = v;
            let second = nu_tail(a, x + h).unwrap() - 2.0 * v + nu_tail(a, x - h + 1e-12).unwrap();
            if x > 2.0 * h {
                assert!(second > -1e-9, "convexity at {x}: {second}");
            }
        }
    }

    #[test]
    fn small_jump_mean_matches_quadrature() {
        for &a in &[0.3, 0.5, 0.75] {
            for &e in &[1e-4f64, 1e-2, 0.5, 2.0] {
                // s = x^(1-alpha) removes the x^(-alpha) singularity at the origin.
                let p = 1.0 / (1.0 - a);
                let q = quad_on(
                    |s| {
                        let x = s.powf(p);
                        x * levy_density_nu(a, x).unwrap() * p * s.powf(p - 1.0)
                    },
                    0.0,
                    e.powf(1.0 - a),
                    false,
                );
                let s = small_jump_mean(a, e).unwrap();
                assert_relative_eq!(s, q, max_relative = 1e-7);
            }
        }
    }
}
