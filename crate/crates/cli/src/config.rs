//! Command-line flags, config files and their merge into a [`RunConfig`].

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Simulate one inverse-subordinator path and its fractional integral.
    Simulate,
    /// Paths for alpha = 0.75 and beta in {0.5, -0.5, -1.5}.
    Figure1,
    /// Moment, identity and self-similarity checks.
    Verify,
    /// Shot-noise convergence along a t ladder.
    Converge,
    /// Tail exponent fit of the marginal at u = 1.
    Tail,
    /// Iterated-logarithm envelope scan.
    Lil,
    /// Grid maxima under refinement.
    Diverge,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "fiiss", version, about = "Fractionally integrated inverse stable subordinators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

/// Flags shared by every command; unset flags fall back to the config file,
/// then to per-command defaults.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct Flags {
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    pub streams: Option<usize>,
    /// Replicas or paths.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Comma-separated scale ladder.
    #[arg(long, global = true, value_delimiter = ',')]
    pub t_ladder: Option<Vec<f64>>,
    /// Comma-separated grid sizes for `diverge`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub ladder: Option<Vec<usize>>,
    /// Subordinator time step.
    #[arg(long, global = true)]
    pub t_step: Option<f64>,
    /// Spacing of the u grid.
    #[arg(long, global = true)]
    pub u_step: Option<f64>,
    /// Right end of the u range for path output.
    #[arg(long, global = true)]
    pub horizon: Option<f64>,
    /// Evaluation point of marginals.
    #[arg(long, global = true)]
    pub u: Option<f64>,
    /// Comma-separated pair `lo,hi`.
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    pub window: Option<Vec<f64>>,
    /// Comma-separated pair `a,b`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub interval: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub min_edge_count: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// File of `key = value` lines; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Fully merged run configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub seed: u64,
    pub streams: usize,
    pub n: Option<usize>,
    pub t_ladder: Option<Vec<f64>>,
    pub ladder: Option<Vec<usize>>,
    pub t_step: Option<f64>,
    pub u_step: Option<f64>,
    pub horizon: Option<f64>,
    pub u: Option<f64>,
    pub window: Option<(f64, f64)>,
    pub interval: Option<(f64, f64)>,
    pub min_edge_count: Option<usize>,
    pub output: PathBuf,
    pub format: Format,
}

pub const DEFAULT_SEED: u64 = 42;

impl RunConfig {
    pub fn from_cli(cli: Cli) -> Result<Self, CliError> {
        let file = match &cli.flags.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
                parse_config(&text)?
            }
            None => Flags::default(),
        };
        let f = merge(cli.flags, file);
        let pair = |v: Option<Vec<f64>>, name: &str| -> Result<Option<(f64, f64)>, CliError> {
            match v {
                None => Ok(None),
                Some(v) if v.len() == 2 => Ok(Some((v[0], v[1]))),
                Some(_) => Err(CliError::Usage(format!("--{name} takes two comma-separated values"))),
            }
        };
        let config = RunConfig {
            command: cli.command,
            alpha: f.alpha,
            beta: f.beta,
            seed: f.seed.unwrap_or(DEFAULT_SEED),
            streams: f.streams.unwrap_or_else(|| {
                std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
            }),
            n: f.n,
            t_ladder: f.t_ladder,
            ladder: f.ladder,
            t_step: f.t_step,
            u_step: f.u_step,
            horizon: f.horizon,
            u: f.u,
            window: pair(f.window, "window")?,
            interval: pair(f.interval, "interval")?,
            min_edge_count: f.min_edge_count,
            output: f.output.unwrap_or_else(|| PathBuf::from("out")),
            format: f.format.unwrap_or_default(),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a < 1.0) {
                return usage(format!("alpha = {a} must lie in (0, 1)"));
            }
        }
        if let Some(b) = self.beta {
            if !b.is_finite() {
                return usage(format!("beta = {b} must be finite"));
            }
        }
        if self.streams == 0 {
            return usage("streams must be at least 1".into());
        }
        if self.n == Some(0) {
            return usage("n must be at least 1".into());
        }
        for (name, v) in [("t-step", self.t_step), ("u-step", self.u_step), ("horizon", self.horizon), ("u", self.u)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return usage(format!("--{name} = {v} must be positive"));
                }
            }
        }
        if let Some(l) = &self.t_ladder {
            if l.is_empty() || l.iter().any(|&t| !(t >= 1.0)) {
                return usage("t ladder entries must be at least 1".into());
            }
        }
        Ok(())
    }
}

fn merge(flags: Flags, file: Flags) -> Flags {
    Flags {
        alpha: flags.alpha.or(file.alpha),
        beta: flags.beta.or(file.beta),
        seed: flags.seed.or(file.seed),
        streams: flags.streams.or(file.streams),
        n: flags.n.or(file.n),
        t_ladder: flags.t_ladder.or(file.t_ladder),
        ladder: flags.ladder.or(file.ladder),
        t_step: flags.t_step.or(file.t_step),
        u_step: flags.u_step.or(file.u_step),
        horizon: flags.horizon.or(file.horizon),
        u: flags.u.or(file.u),
        window: flags.window.or(file.window),
        interval: flags.interval.or(file.interval),
        min_edge_count: flags.min_edge_count.or(file.min_edge_count),
        output: flags.output.or(file.output),
        format: flags.format.or(file.format),
        config: flags.config,
    }
}

/// Parses `key = value` lines. Keys are flag names with `-` or `_`; `#`
/// starts a comment.
pub fn parse_config(text: &str) -> Result<Flags, CliError> {
    let mut f = Flags::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |m: &str| CliError::Usage(format!("config line {}: {m}", lineno + 1));
        let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key = value"))?;
        let (key, value) = (key.trim().replace('_', "-"), value.trim());
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad(&format!("not a number: {v}")));
        let int = |v: &str| v.parse::<usize>().map_err(|_| bad(&format!("not an integer: {v}")));
        let list = |v: &str| v.split(',').map(|x| num(x.trim())).collect::<Result<Vec<_>, _>>();
        match key.as_str() {
            "alpha" => f.alpha = Some(num(value)?),
            "beta" => f.beta = Some(num(value)?),
            "seed" => f.seed = Some(value.parse().map_err(|_| bad("seed must be a 64-bit integer"))?),
            "streams" => f.streams = Some(int(value)?),
            "n" => f.n = Some(int(value)?),
            "t-ladder" => f.t_ladder = Some(list(value)?),
            "ladder" => {
                f.ladder = Some(value.split(',').map(|x| int(x.trim())).collect::<Result<Vec<_>, _>>()?)
            }
            "t-step" => f.t_step = Some(num(value)?),
            "u-step" => f.u_step = Some(num(value)?),
            "horizon" => f.horizon = Some(num(value)?),
            "u" => f.u = Some(num(value)?),
            "window" => f.window = Some(list(value)?),
            "interval" => f.interval = Some(list(value)?),
            "min-edge-count" => f.min_edge_count = Some(int(value)?),
            "output" => f.output = Some(PathBuf::from(value)),
            "format" => {
                f.format = Some(Format::from_str(value, true).map_err(|_| bad("format is csv or json"))?)
            }
            other => return Err(bad(&format!("unknown key {other}"))),
        }
    }
    Ok(f)
}
