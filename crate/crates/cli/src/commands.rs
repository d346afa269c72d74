use serde_json::{json, Value};

use fiiss::analytic::{laplace_exponent_phi, mittag_leffler_moment, FiissParams};
use fiiss::lamperti::{fiiss_identity_check, mittag_leffler_sample, tail_fit, DEFAULT_EPS};
use fiiss::paths::{divergence_scan, fiiss_from_subordinator, fiiss_marginal, invert_path, simulate_subordinator_until, UniformGrid};
use fiiss::sampling::{derive_seed, RandomSource};
use fiiss::shotnoise::scaled_marginal;
use fiiss::stats::{ks_two_sample, lil_ratio_scan, moment_estimate, Relation, ReportEntry, VerificationReport};

use crate::config::{Command, Format, RunConfig};
use crate::output::{series_csv, write_csv, write_json, Meta};
use crate::{CliError, Outcome};

/// Parameters of Figure 1.
pub const FIGURE1_ALPHA: f64 = 0.75;
pub const FIGURE1_BETAS: [f64; 3] = [0.5, -0.5, -1.5];

pub fn dispatch(config: &RunConfig) -> Result<Outcome, CliError> {
    match config.command {
        Command::Simulate => simulate(config),
        Command::Figure1 => figure1(config),
        Command::Verify => verify(config),
        Command::Converge => converge(config),
        Command::Tail => tail(config),
        Command::Lil => lil(config),
        Command::Diverge => diverge(config),
    }
}

fn params(config: &RunConfig) -> Result<FiissParams, CliError> {
    let alpha = config
        .alpha
        .ok_or_else(|| CliError::Usage("--alpha is required".into()))?;
    Ok(FiissParams::new(alpha, config.beta.unwrap_or(0.0))?)
}

fn require_regular(p: &FiissParams, what: &str) -> Result<(), CliError> {
    if p.regime().is_regular() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "{what} needs beta > -alpha, got alpha = {}, beta = {}",
            p.alpha(),
            p.beta()
        )))
    }
}

fn base_meta(config: &RunConfig, p: &FiissParams) -> Meta {
    Meta::new(config).param("alpha", p.alpha()).param("beta", p.beta())
}

fn beta_tag(beta: f64) -> String {
    format!("beta_{beta}")
}

// W and Y paths on [0, horizon] from one subordinator path.
fn path_pair(p: &FiissParams, horizon: f64, u_step: f64, t_step: f64, seed: u64) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>), CliError> {
    let mut src = RandomSource::new(seed, 0);
    let d = simulate_subordinator_until(p.alpha(), horizon, t_step, &mut src)?;
    let grid = UniformGrid::up_to(horizon, u_step)?;
    let us = grid.points();
    let w = invert_path(&d, &grid)?;
    let y = fiiss_from_subordinator(&d, p, &us)?;
    Ok((us, w.values().to_vec(), y))
}

fn write_paths(config: &RunConfig, meta: &Meta, stem: &str, us: &[f64], w: &[f64], y: &[f64]) -> Result<(), CliError> {
    match config.format {
        Format::Csv => {
            write_csv(&config.output, &format!("{stem}_w.csv"), meta, &series_csv("u", us, w))?;
            write_csv(&config.output, &format!("{stem}_y.csv"), meta, &series_csv("u", us, y))
        }
        Format::Json => write_json(&config.output, &format!("{stem}.json"), meta, &json!({"u": us, "w": w, "y": y})),
    }
}

fn simulate(config: &RunConfig) -> Result<Outcome, CliError> {
    let p = params(config)?;
    let horizon = config.horizon.unwrap_or(1.0);
    let u_step = config.u_step.unwrap_or(1e-3);
    let t_step = config.t_step.unwrap_or(1e-5);
    let (us, w, y) = path_pair(&p, horizon, u_step, t_step, config.seed)?;
    let meta = base_meta(config, &p)
        .param("horizon", horizon)
        .param("u_step", u_step)
        .param("t_step", t_step);
    write_paths(config, &meta, "simulate", &us, &w, &y)?;
    Ok(Outcome::Pass)
}

fn figure1(config: &RunConfig) -> Result<Outcome, CliError> {
    let u_step = config.u_step.unwrap_or(1e-3);
    let t_step = config.t_step.unwrap_or(1e-5);
    for (i, &beta) in FIGURE1_BETAS.iter().enumerate() {
        let p = FiissParams::new(FIGURE1_ALPHA, beta)?;
        let seed = derive_seed(config.seed, i as u64);
        let (us, w, y) = path_pair(&p, 1.0, u_step, t_step, seed)?;
        let meta = base_meta(config, &p)
            .param("path_seed", seed)
            .param("u_step", u_step)
            .param("t_step", t_step);
        write_paths(config, &meta, &format!("figure1_{}", beta_tag(beta)), &us, &w, &y)?;
    }
    Ok(Outcome::Pass)
}

fn write_report(config: &RunConfig, meta: &Meta, report: &VerificationReport, details: Value) -> Result<Outcome, CliError> {
    let name = meta.command.clone();
    match config.format {
        Format::Json => write_json(
            &config.output,
            &format!("{name}.json"),
            meta,
            &json!({"report": report, "details": details}),
        )?,
        Format::Csv => {
            let mut body = String::from("name,statistic,pass\n");
            for e in &report.entries {
                body.push_str(&format!("{},{:.16e},{}\n", e.name, e.statistic, e.pass));
            }
            write_csv(&config.output, &format!("{name}.csv"), meta, &body)?;
        }
    }
    Ok(if report.all_pass() { Outcome::Pass } else { Outcome::Fail })
}

fn verify(config: &RunConfig) -> Result<Outcome, CliError> {
    let p = params(config)?;
    let n = config.n.unwrap_or(100_000);
    let t_step = config.t_step.unwrap_or(1e-3);
    let seed = config.seed;
    let alpha = p.alpha();
    let mut report = VerificationReport::default();

    let mut worst = 0.0f64;
    for k in 1..=4u32 {
        let product: f64 = (1..=k)
            .map(|j| laplace_exponent_phi(alpha, j as f64))
            .collect::<fiiss::Result<Vec<_>>>()?
            .iter()
            .product();
        let via_phi = (1..=k).map(f64::from).product::<f64>() / product;
        worst = worst.max((mittag_leffler_moment(alpha, k)? / via_phi - 1.0).abs());
    }
    report.push(ReportEntry::new("moment_formula_identity", worst, Relation::Below(1e-8), 4, seed).param("alpha", alpha));

    let ml = mittag_leffler_sample(alpha, n, 1.0, t_step, derive_seed(seed, 1))?;
    for k in 1..=2u32 {
        let est = moment_estimate(&ml, k)?;
        let exact = mittag_leffler_moment(alpha, k)?;
        report.push(
            ReportEntry::new(format!("mittag_leffler_moment_{k}"), (est.mean / exact - 1.0).abs(), Relation::Below(0.03), n, derive_seed(seed, 1))
                .param("alpha", alpha)
                .param("estimate", est.mean)
                .param("std_error", est.std_error)
                .param("exact", exact)
                .param("t_step", t_step),
        );
    }

    if p.regime().is_regular() {
        let m = n.min(10_000);
        report.push(fiiss_identity_check(&p, m, DEFAULT_EPS, t_step, 0.05, derive_seed(seed, 2))?);
        let s = derive_seed(seed, 3);
        let y1 = fiiss_marginal(&p, 1.0, m, t_step, derive_seed(s, 1))?;
        let y2 = fiiss_marginal(&p, 2.0, m, t_step, derive_seed(s, 2))?;
        let scale = 2f64.powf(-p.index());
        let ks = ks_two_sample(&y2.map(|y| y * scale)?, &y1);
        report.push(
            ReportEntry::new("self_similarity_p_value", ks.p_value, Relation::Above(0.01), m, s)
                .param("alpha", alpha)
                .param("beta", p.beta())
                .param("ks", ks.statistic),
        );
    }
    let meta = base_meta(config, &p).param("n", n).param("t_step", t_step);
    write_report(config, &meta, &report, json!({"regime": p.regime()}))
}

fn converge(config: &RunConfig) -> Result<Outcome, CliError> {
    let p = params(config)?;
    let n = config.n.unwrap_or(5000);
    let u = config.u.unwrap_or(1.0);
    let t_step = config.t_step.unwrap_or(1e-4);
    let ladder = config.t_ladder.clone().unwrap_or_else(|| vec![1e2, 1e3, 1e4]);
    let limit = fiiss_marginal(&p, u, n, t_step, derive_seed(config.seed, 0))?;
    let mut rows = Vec::new();
    let mut stats = Vec::new();
    for (i, &t) in ladder.iter().enumerate() {
        let seed = derive_seed(config.seed, 1 + i as u64);
        let x = scaled_marginal(p.alpha(), p.beta(), u, t, n, seed)?;
        let ks = ks_two_sample(&x, &limit);
        stats.push(ks.statistic);
        rows.push(json!({"t": t, "statistic": ks.statistic, "n": n, "seed": seed}));
    }
    let mut report = VerificationReport::default();
    let rise = stats.windows(2).map(|w| w[1] - w[0]).fold(-1.0f64, f64::max);
    if stats.len() > 1 {
        report.push(ReportEntry::new("ks_largest_increase", rise, Relation::Between(-1.0, 0.0), n, config.seed));
    }
    report.push(ReportEntry::new("ks_at_largest_t", stats[stats.len() - 1], Relation::Below(0.1), n, config.seed).param("t", ladder[ladder.len() - 1]));
    let meta = base_meta(config, &p).param("n", n).param("u", u).param("t_step", t_step);
    write_report(config, &meta, &report, json!({"ladder": rows}))
}

fn tail(config: &RunConfig) -> Result<Outcome, CliError> {
    let p = params(config)?;
    require_regular(&p, "the tail fit")?;
    let n = config.n.unwrap_or(1_000_000);
    let t_step = config.t_step.unwrap_or(1e-3);
    let window = config.window.unwrap_or((2.0, 3.5));
    let min_edge = config.min_edge_count.unwrap_or(20);
    let seed = derive_seed(config.seed, 0);
    let sample = if p.beta() == 0.0 {
        mittag_leffler_sample(p.alpha(), n, 1.0, t_step, seed)?
    } else {
        fiiss_marginal(&p, 1.0, n, t_step, seed)?
    };
    let fit = tail_fit(&sample, &p, window, min_edge)?;
    let mut report = VerificationReport::default();
    report.push(
        ReportEntry::new("tail_slope", fit.slope, Relation::Between(0.85 * fit.target, 1.15 * fit.target), n, seed)
            .param("target", fit.target)
            .param("edge_count", fit.edge_count as u64)
            .param("r2", fit.r2),
    );
    let meta = base_meta(config, &p)
        .param("n", n)
        .param("t_step", t_step)
        .param("window", vec![window.0, window.1])
        .param("min_edge_count", min_edge as u64);
    write_report(config, &meta, &report, serde_json::to_value(&fit).unwrap_or(Value::Null))
}

/// Log-spaced scan grid on `[10, 10^4]`.
pub fn lil_grid() -> Vec<f64> {
    (0..=120).map(|i| 10f64 * 1000f64.powf(i as f64 / 120.0)).collect()
}

fn lil(config: &RunConfig) -> Result<Outcome, CliError> {
    let p = params(config)?;
    require_regular(&p, "the iterated-logarithm scan")?;
    let n = config.n.unwrap_or(100);
    let t_step = config.t_step.unwrap_or(1e-2);
    let fixed_u = config.u.unwrap_or(1000.0);
    let scan = lil_ratio_scan(&p, &lil_grid(), fixed_u, n, t_step, config.seed)?;
    let mut report = VerificationReport::default();
    report.push(
        ReportEntry::new("max_ratio_over_constant", scan.max_ratio / scan.constant, Relation::Between(0.3, 3.0), n, config.seed)
            .param("constant", scan.constant),
    );
    let meta = base_meta(config, &p).param("n", n).param("t_step", t_step);
    write_report(config, &meta, &report, serde_json::to_value(&scan).unwrap_or(Value::Null))
}

fn diverge(config: &RunConfig) -> Result<Outcome, CliError> {
    let p = params(config)?;
    let n = config.n.unwrap_or(50);
    let t_step = config.t_step.unwrap_or(1e-3);
    let ladder = config
        .ladder
        .clone()
        .unwrap_or_else(|| (10..=14).map(|k| 1usize << k).collect());
    let interval = config.interval.unwrap_or((0.25, 0.75));
    let scan = divergence_scan(&p, interval, &ladder, n, t_step, config.seed)?;
    let ratios = scan.ratios();
    let mut report = VerificationReport::default();
    if p.regime().is_regular() {
        let worst = ratios.iter().map(|r| (r - 1.0).abs()).fold(0.0, f64::max);
        report.push(ReportEntry::new("largest_ratio_deviation", worst, Relation::Below(0.1), n, config.seed));
    } else {
        let smallest = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        report.push(ReportEntry::new("smallest_successive_ratio", smallest, Relation::Above(1.0), n, config.seed));
    }
    let meta = base_meta(config, &p)
        .param("n", n)
        .param("t_step", t_step)
        .param("interval", vec![interval.0, interval.1]);
    write_report(
        config,
        &meta,
        &report,
        json!({"ladder": scan.ladder, "medians": scan.medians, "t_steps": scan.t_steps, "ratios": ratios}),
    )
}
