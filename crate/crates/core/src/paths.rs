//! Grid simulation of the stable subordinator `D`, its inverse `W`, and the
//! fractionally integrated process `Y(u) = int_[0,u] (u-y)^beta dW(y)`.
//!
//! `Y` is available through three quadratures:
//!
//! * the time integral `int_0^inf (u - D(t))^beta 1{D(t) <= u} dt` evaluated on
//!   the subordinator grid ([`fiiss_from_subordinator`]); this works for every
//!   `beta` and is the production route;
//! * the Riemann-Liouville form `beta int_0^u (u-y)^(beta-1) W(y) dy` for
//!   `beta > 0` ([`fiiss_riemann_liouville`]);
//! * the Marchaud form `u^beta W(u) + |beta| int_0^u (W(u) - W(u-y)) y^(beta-1) dy`
//!   for `-alpha < beta < 0` ([`fiiss_marchaud`]).
//!
//! The last two act on an inverse-subordinator grid path, interpolated
//! linearly between nodes, with the power kernels integrated exactly per cell.

use std::fmt::Write as _;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::analytic::{check_alpha, gamma_fn, mittag_leffler_moment, FiissParams};
use crate::error::{domain, range, FiissError, Result};
use crate::sampling::{sample_positive_stable, try_replicate, EmpiricalSample, UniformSource};

/// Largest number of grid nodes a single simulated path may hold.
pub const MAX_PATH_NODES: usize = 100_000_000;

/// Uniform-grid sample path: `values[i]` is the value at `origin + i * step`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPath {
    step: f64,
    origin: f64,
    values: Vec<f64>,
}

impl GridPath {
    pub fn new(step: f64, origin: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return domain(format!("grid step {step} must be positive"));
        }
        if values.len() < 2 {
            return domain("a grid path needs at least two nodes");
        }
        Ok(GridPath {
            step,
            origin,
            values,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn origin(&self) -> f64 {
        self.origin
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

    /// Grid coordinate of node `i`.
    pub fn coord(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.step
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Linear interpolation at coordinate `x`, clamped to the first node below
    /// the origin.
    pub fn interpolate(&self, x: f64) -> Result<f64> {
        let pos = (x - self.origin) / self.step;
        if pos <= 0.0 {
            return Ok(self.values[0]);
        }
        let i = pos.floor() as usize;
        if i + 1 >= self.len() {
            if i + 1 == self.len() && pos - i as f64 <= 1e-9 {
                return Ok(self.last());
            }
            return range(format!("x = {x} beyond the path's last node {}", self.coord(self.len() - 1)));
        }
        let frac = pos - i as f64;
        Ok(self.values[i] + frac * (self.values[i + 1] - self.values[i]))
    }

    /// CSV with header `<axis>,value` and 17 significant digits per field.
    pub fn to_csv(&self, axis: &str) -> String {
        let mut out = String::with_capacity(48 * self.len());
        out.push_str(axis);
        out.push_str(",value\n");
        for (i, v) in self.values.iter().enumerate() {
            let _ = writeln!(out, "{:.16e},{:.16e}", self.coord(i), v);
        }
        out
    }
}

/// Uniform grid `origin + k * step`, `k = 0..len`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub origin: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformGrid {
    pub fn new(origin: f64, step: f64, len: usize) -> Result<Self> {
        if !(step > 0.0) || len < 2 {
            return domain("uniform grid needs a positive step and at least two points");
        }
        Ok(UniformGrid { origin, step, len })
    }

    /// Grid `0, step, ..., floor(max/step) * step`.
    pub fn up_to(max: f64, step: f64) -> Result<Self> {
        let len = (max / step + 1e-9).floor() as usize + 1;
        UniformGrid::new(0.0, step, len)
    }

    pub fn point(&self, k: usize) -> f64 {
        self.origin + k as f64 * self.step
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.point(k)).collect()
    }

    pub fn max(&self) -> f64 {
        self.point(self.len - 1)
    }
}

/// Increments of `D` over one grid step: `(Gamma(1-alpha) step)^(1/alpha) S`.
#[derive(Clone, Copy, Debug)]
struct Stepper {
    alpha: f64,
    scale: f64,
}

impl Stepper {
    fn new(alpha: f64, step: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(step > 0.0) || !step.is_finite() {
            return domain(format!("time step {step} must be positive"));
        }
        let scale = (gamma_fn(1.0 - alpha)? * step).powf(1.0 / alpha);
        Ok(Stepper { alpha, scale })
    }

    fn next<R: UniformSource + ?Sized>(&self, src: &mut R) -> f64 {
        self.scale * sample_positive_stable(self.alpha, src)
    }
}

/// Stable subordinator on `0, step, ..., floor(horizon/step) * step`, with
/// `E exp(-s D(t)) = exp(-Gamma(1-alpha) t s^alpha)` and `D(0) = 0`.
pub fn simulate_subordinator<R: UniformSource + ?Sized>(
    alpha: f64,
    horizon: f64,
    step: f64,
    src: &mut R,
) -> Result<GridPath> {
    let stepper = Stepper::new(alpha, step)?;
    if !(step < horizon) {
        return domain(format!("step {step} must be smaller than horizon {horizon}"));
    }
    let nodes = (horizon / step + 1e-9).floor() + 1.0;
    if nodes > MAX_PATH_NODES as f64 {
        return Err(FiissError::Resource(format!(
            "{nodes} nodes requested, cap is {MAX_PATH_NODES}"
        )));
    }
    let nodes = nodes as usize;
    let mut values = Vec::with_capacity(nodes);
    let mut level = 0.0;
    values.push(level);
    for _ in 1..nodes {
        level += stepper.next(src);
        values.push(level);
    }
    GridPath::new(step, 0.0, values)
}

/// Mean number of grid nodes before the subordinator first exceeds `level`.
pub fn expected_nodes(alpha: f64, level: f64, step: f64) -> Result<f64> {
    Ok(level.max(0.0).powf(alpha) * mittag_leffler_moment(alpha, 1)? / step + 1.0)
}

fn check_expected_nodes(alpha: f64, level: f64, step: f64) -> Result<()> {
    let expected = expected_nodes(alpha, level, step)?;
    if expected > MAX_PATH_NODES as f64 {
        return Err(FiissError::Resource(format!(
            "about {expected:.3e} nodes needed to pass {level}, cap is {MAX_PATH_NODES}"
        )));
    }
    Ok(())
}

/// Subordinator simulated until it first exceeds `level`. The horizon grows
/// by doubling; the draw sequence is the same as one long simulation.
pub fn simulate_subordinator_until<R: UniformSource + ?Sized>(
    alpha: f64,
    level: f64,
    step: f64,
    src: &mut R,
) -> Result<GridPath> {
    let stepper = Stepper::new(alpha, step)?;
    check_expected_nodes(alpha, level, step)?;
    let mut values = Vec::with_capacity(1024);
    let mut d = 0.0;
    values.push(d);
    while d <= level {
        if values.len() == values.capacity() {
            if values.len() >= MAX_PATH_NODES {
                return Err(FiissError::Resource(format!(
                    "subordinator did not reach {level} within {MAX_PATH_NODES} nodes"
                )));
            }
            values.reserve(values.len());
        }
        d += stepper.next(src);
        values.push(d);
    }
    if values.len() < 2 {
        values.push(d + stepper.next(src));
    }
    GridPath::new(step, 0.0, values)
}

/// `W(u) = inf{t : D(t) > u}` on a subordinator grid: the time of the first
/// node strictly above `u`. `W(u) = 0` for `u <= 0`.
pub fn invert_at(d: &GridPath, u: f64) -> Result<f64> {
    if u <= 0.0 {
        return Ok(0.0);
    }
    if !(u < d.last()) {
        return range(format!("u = {u} beyond the subordinator's reach {}", d.last()));
    }
    let idx = d.values.partition_point(|&v| v <= u);
    Ok(d.step * idx as f64 + d.origin)
}

/// Inverse subordinator on a uniform `u` grid. Rounds up to the next time
/// node, so the bias lies in `[0, d.step)`.
pub fn invert_path(d: &GridPath, grid: &UniformGrid) -> Result<GridPath> {
    let values = (0..grid.len)
        .map(|k| invert_at(d, grid.point(k)))
        .collect::<Result<Vec<_>>>()?;
    GridPath::new(grid.step, grid.origin, values)
}

/// Inverse subordinator on `0, u_step, ..., u_max`.
pub fn simulate_inverse_subordinator<R: UniformSource + ?Sized>(
    alpha: f64,
    u_max: f64,
    u_step: f64,
    t_step: f64,
    src: &mut R,
) -> Result<GridPath> {
    if !(u_step > 0.0) || !(u_max > 0.0) {
        return domain("u_max and u_step must be positive");
    }
    let d = simulate_subordinator_until(alpha, u_max, t_step, src)?;
    invert_path(&d, &UniformGrid::up_to(u_max, u_step)?)
}

/// Time-integral quadrature of `Y(u)` on a subordinator grid:
/// `step * sum (u - D_i)^beta` over nodes with `D_i <= u` (`beta >= 0`) or
/// `D_i < u` strictly (`beta < 0`, so the summands stay finite).
pub fn fiiss_from_subordinator(d: &GridPath, params: &FiissParams, u_grid: &[f64]) -> Result<Vec<f64>> {
    u_grid.iter().map(|&u| fiiss_at(d, params.beta(), u)).collect()
}

fn fiiss_at(d: &GridPath, beta: f64, u: f64) -> Result<f64> {
    if u <= 0.0 {
        return Ok(0.0);
    }
    if !(u < d.last()) {
        return range(format!("u = {u} beyond the subordinator's reach {}", d.last()));
    }
    if beta == 0.0 {
        let idx = d.values.partition_point(|&v| v <= u);
        return Ok(d.step * idx as f64 + d.origin);
    }
    let mut acc = TimeIntegral::new(beta, u);
    for &v in &d.values {
        if !acc.push(v) {
            break;
        }
    }
    Ok(d.step * acc.sum)
}

// Running sum of (u - D_i)^beta over a nondecreasing node sequence.
struct TimeIntegral {
    beta: f64,
    u: f64,
    sum: f64,
}

impl TimeIntegral {
    fn new(beta: f64, u: f64) -> Self {
        TimeIntegral { beta, u, sum: 0.0 }
    }

    /// Adds one node; returns false once the node is past `u`.
    fn push(&mut self, v: f64) -> bool {
        let inside = if self.beta < 0.0 { v < self.u } else { v <= self.u };
        if inside {
            self.sum += (self.u - v).powf(self.beta);
        }
        inside
    }
}

/// One draw of `Y(u)` by the time-integral quadrature, streamed so the path is
/// never stored. Bit-identical to [`fiiss_from_subordinator`] on the same draws.
pub fn fiiss_point<R: UniformSource + ?Sized>(
    params: &FiissParams,
    u: f64,
    t_step: f64,
    src: &mut R,
) -> Result<f64> {
    if !(u > 0.0) {
        return domain(format!("u = {u} must be positive"));
    }
    let stepper = Stepper::new(params.alpha(), t_step)?;
    check_expected_nodes(params.alpha(), u, t_step)?;
    let beta = params.beta();
    let mut acc = TimeIntegral::new(beta, u);
    let mut count = 0usize;
    let mut d = 0.0;
    loop {
        let inside = if beta == 0.0 { d <= u } else { acc.push(d) };
        if !inside {
            break;
        }
        count += 1;
        if count > MAX_PATH_NODES {
            return Err(FiissError::Resource(format!(
                "subordinator did not reach {u} within {MAX_PATH_NODES} nodes"
            )));
        }
        d += stepper.next(src);
    }
    if beta == 0.0 {
        Ok(t_step * count as f64)
    } else {
        Ok(t_step * acc.sum)
    }
}

/// `n` independent draws of `Y(u)`; replica `i` uses stream `i` of `seed`.
pub fn fiiss_marginal(params: &FiissParams, u: f64, n: usize, t_step: f64, seed: u64) -> Result<EmpiricalSample> {
    let draws = try_replicate(n, seed, |src| fiiss_point(params, u, t_step, src))?;
    Ok(EmpiricalSample::new(draws)?
        .with_meta("alpha", params.alpha())
        .with_meta("beta", params.beta())
        .with_meta("u", u)
        .with_meta("t_step", t_step)
        .with_meta("seed", seed))
}

// Cells [y_lo, y_hi] covering [0, u] with W linear on each, as
// (y_lo, y_hi, W(y_lo), W(y_hi)).
fn linear_cells(w: &GridPath, u: f64) -> Result<Vec<(f64, f64, f64, f64)>> {
    if w.origin() != 0.0 {
        return domain("inverse-subordinator path must start at 0");
    }
    let w_u = w.interpolate(u)?;
    let full = ((u / w.step()) + 1e-12).floor() as usize;
    let full = full.min(w.len() - 1);
    let mut cells = Vec::with_capacity(full + 1);
    for k in 0..full {
        cells.push((w.coord(k), w.coord(k + 1), w.values[k], w.values[k + 1]));
    }
    let last = w.coord(full);
    if u - last > 1e-12 * u.max(1.0) {
        cells.push((last, u, w.values[full], w_u));
    }
    Ok(cells)
}

/// Riemann-Liouville form `beta int_0^u (u-y)^(beta-1) W(y) dy` for `beta > 0`,
/// product trapezoid: `W` linear per cell, kernel integrated exactly.
pub fn fiiss_riemann_liouville(w: &GridPath, beta: f64, u_grid: &[f64]) -> Result<Vec<f64>> {
    if !(beta > 0.0) {
        return domain(format!("Riemann-Liouville form needs beta > 0, got {beta}"));
    }
    u_grid
        .iter()
        .map(|&u| {
            if u <= 0.0 {
                return Ok(0.0);
            }
            let mut y = 0.0;
            for (y_lo, y_hi, w_lo, w_hi) in linear_cells(w, u)? {
                let slope = (w_hi - w_lo) / (y_hi - y_lo);
                let (x_lo, x_hi) = ((u - y_hi).max(0.0), u - y_lo);
                y += (w_lo + slope * x_hi) * (x_hi.powf(beta) - x_lo.powf(beta))
                    - slope * beta * (x_hi.powf(beta + 1.0) - x_lo.powf(beta + 1.0)) / (beta + 1.0);
            }
            Ok(y)
        })
        .collect()
}

/// Marchaud form for `-alpha < beta < 0`:
/// `u^beta W(u) + |beta| int_0^u (W(u) - W(u-y)) y^(beta-1) dy`, with the
/// increment linear between grid nodes and `y^(beta-1)`, `y^beta` integrated
/// exactly on each cell.
pub fn fiiss_marchaud(w: &GridPath, params: &FiissParams, u_grid: &[f64]) -> Result<Vec<f64>> {
    let beta = params.beta();
    if !(beta < 0.0 && beta > -params.alpha()) {
        return domain(format!(
            "Marchaud form needs -alpha < beta < 0, got alpha = {}, beta = {beta}",
            params.alpha()
        ));
    }
    u_grid
        .iter()
        .map(|&u| {
            if u <= 0.0 {
                return Ok(0.0);
            }
            let w_u = w.interpolate(u)?;
            // Nodes in y = u - t, running from y = 0 outwards.
            let mut nodes: Vec<(f64, f64)> = Vec::new();
            nodes.push((0.0, 0.0));
            for (t_lo, t_hi, w_lo, _w_hi) in linear_cells(w, u)?.into_iter().rev() {
                let _ = t_hi;
                nodes.push((u - t_lo, w_u - w_lo));
            }
            let mut integral = 0.0;
            for pair in nodes.windows(2) {
                let ((ya, ga), (yb, gb)) = (pair[0], pair[1]);
                if yb <= ya {
                    continue;
                }
                let slope = (gb - ga) / (yb - ya);
                let intercept = ga - slope * ya;
                if ya > 0.0 {
                    integral += intercept * (yb.powf(beta) - ya.powf(beta)) / beta;
                }
                integral += slope * (yb.powf(beta + 1.0) - ya.powf(beta + 1.0)) / (beta + 1.0);
            }
            Ok(u.powf(beta) * w_u + beta.abs() * integral)
        })
        .collect()
}

/// Grid maxima of `Y` under joint refinement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceScan {
    pub ladder: Vec<usize>,
    /// Median over paths of the grid maximum, one per ladder entry.
    pub medians: Vec<f64>,
    /// `maxima[p][l]`: maximum of path `p` at ladder entry `l`.
    pub maxima: Vec<Vec<f64>>,
    /// Time step used at each ladder entry.
    pub t_steps: Vec<f64>,
}

impl DivergenceScan {
    /// True when the medians increase strictly along the ladder.
    pub fn strictly_increasing(&self) -> bool {
        self.medians.windows(2).all(|w| w[1] > w[0])
    }

    /// Ratios of successive medians.
    pub fn ratios(&self) -> Vec<f64> {
        self.medians.windows(2).map(|w| w[1] / w[0]).collect()
    }
}

/// Maximum of `Y` over `N`-point grids on `[a, b]` for each `N` in `ladder`.
///
/// Each path's subordinator is simulated once at the finest time step
/// `base_t_step * ladder[0] / ladder[last]`; coarser ladder entries use its
/// sub-sampled nodes, so the refinement is coupled path by path and the time
/// step shrinks in proportion to the `u` spacing. On each grid `Y` is the
/// Stieltjes sum of `(u - y)^beta` against `dW`, with `W` linear per cell; for
/// `beta <= -1` the cell adjacent to `u` has an infinite kernel and is dropped.
pub fn divergence_scan(
    params: &FiissParams,
    interval: (f64, f64),
    ladder: &[usize],
    n_paths: usize,
    base_t_step: f64,
    seed: u64,
) -> Result<DivergenceScan> {
    let (a, b) = interval;
    if !(a > 0.0 && b > a) {
        return domain("divergence interval must satisfy 0 < a < b");
    }
    if ladder.is_empty() || ladder.windows(2).any(|w| w[1] <= w[0] || w[1] % w[0] != 0) {
        return domain("ladder must be increasing with each entry dividing the next");
    }
    let finest = *ladder.last().expect("nonempty");
    let fine_step = base_t_step * ladder[0] as f64 / finest as f64;
    let maxima = try_replicate(n_paths, seed, |src| {
        let mut d = simulate_subordinator_until(params.alpha(), b, fine_step, src)?;
        // Every strided sub-path must also pass b.
        let stepper = Stepper::new(params.alpha(), fine_step)?;
        let coarsest = finest / ladder[0];
        let mut level = d.last();
        while (d.values.len() - 1) % coarsest != 0 {
            level += stepper.next(src);
            d.values.push(level);
        }
        ladder
            .iter()
            .map(|&n| {
                let stride = finest / n;
                grid_maximum(&d, stride, params.beta(), a, b, n)
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let medians = (0..ladder.len())
        .map(|l| {
            let mut col: Vec<f64> = maxima.iter().map(|m| m[l]).collect();
            col.sort_by(f64::total_cmp);
            median_sorted(&col)
        })
        .collect();
    Ok(DivergenceScan {
        ladder: ladder.to_vec(),
        medians,
        maxima,
        t_steps: ladder
            .iter()
            .map(|&n| fine_step * (finest / n) as f64)
            .collect(),
    })
}

fn median_sorted(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

fn grid_maximum(d: &GridPath, stride: usize, beta: f64, a: f64, b: f64, n: usize) -> Result<f64> {
    let delta = (b - a) / n as f64;
    let j_lo = (a / delta - 1e-9).ceil() as usize;
    let j_hi = (b / delta + 1e-9).floor() as usize;
    let cells = j_hi + 1;
    let h = d.step() * stride as f64;

    // W on the u grid from the strided nodes, by a merge walk.
    let mut w = vec![0.0; cells];
    let nodes: Vec<f64> = d.values().iter().step_by(stride).copied().collect();
    if !(nodes[nodes.len() - 1] > b) {
        return range("sub-sampled subordinator does not reach the interval end");
    }
    let mut count = 0usize;
    for (k, wk) in w.iter_mut().enumerate().skip(1) {
        let u = k as f64 * delta;
        while count < nodes.len() && nodes[count] <= u {
            count += 1;
        }
        *wk = h * count as f64;
    }
    let dw: Vec<f64> = w.windows(2).map(|p| p[1] - p[0]).collect();

    // Kernel K_m = int over the m-th cell back from u of x^beta dx / delta.
    let kernel: Vec<f64> = (0..cells)
        .map(|m| {
            if m == 0 {
                return 0.0;
            }
            let (lo, hi) = ((m - 1) as f64, m as f64);
            if m == 1 && beta <= -1.0 {
                return 0.0;
            }
            let cell = if (beta + 1.0).abs() < 1e-12 {
                (hi / lo).ln()
            } else {
                (hi.powf(beta + 1.0) - lo.powf(beta + 1.0)) / (beta + 1.0)
            };
            delta.powf(beta) * cell
        })
        .collect();

    let y = convolve(&dw, &kernel, cells);
    Ok(y[j_lo..=j_hi]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max))
}

// y[j] = sum_{k < j} dw[k] * kernel[j - k] for j < len, by FFT.
fn convolve(dw: &[f64], kernel: &[f64], len: usize) -> Vec<f64> {
    let size = (dw.len() + kernel.len()).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut x: Vec<Complex<f64>> = (0..size)
        .map(|i| Complex::new(dw.get(i).copied().unwrap_or(0.0), 0.0))
        .collect();
    let mut k: Vec<Complex<f64>> = (0..size)
        .map(|i| Complex::new(kernel.get(i).copied().unwrap_or(0.0), 0.0))
        .collect();
    fwd.process(&mut x);
    fwd.process(&mut k);
    for (a, b) in x.iter_mut().zip(k.iter()) {
        *a *= *b;
    }
    inv.process(&mut x);
    let scale = 1.0 / size as f64;
    (0..len).map(|j| x[j].re * scale).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::mittag_leffler_moment;
    use crate::sampling::{replicate, RandomSource};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn path(step: f64, values: &[f64]) -> GridPath {
        GridPath::new(step, 0.0, values.to_vec()).unwrap()
    }

    #[test]
    fn subordinator_starts_at_zero_and_increases() {
        let mut src = RandomSource::new(3, 0);
        let d = simulate_subordinator(0.6, 1.0, 1e-3, &mut src).unwrap();
        assert_eq!(d.values()[0], 0.0);
        assert_eq!(d.len(), 1001);
        assert!(d.values().windows(2).all(|w| w[1] > w[0]));
        assert!(simulate_subordinator(0.6, 1.0, 2.0, &mut src).is_err());
    }

    #[test]
    fn subordinator_laplace_at_one() {
        let alpha = 0.6;
        let n = 20_000;
        let xs = replicate(n, 17, |src| {
            let d = simulate_subordinator(alpha, 1.0, 1e-2, src).unwrap();
            (-d.last()).exp()
        });
        let m = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        let exact = (-gamma_fn(1.0 - alpha).unwrap()).exp();
        assert!((m - exact).abs() < 3.0 * sd / (n as f64).sqrt(), "{m} vs {exact}");
    }

    #[test]
    fn resource_cap() {
        let mut src = RandomSource::new(0, 0);
        let err = simulate_subordinator(0.5, 1.0, 1e-9, &mut src).unwrap_err();
        assert!(matches!(err, FiissError::Resource(_)));
    }

    #[test]
    fn first_passage_cap_checked_up_front() {
        let mut src = RandomSource::new(0, 0);
        let err = simulate_subordinator_until(0.5, 1.0, 1e-12, &mut src).unwrap_err();
        assert!(matches!(err, FiissError::Resource(_)));
        let p = FiissParams::new(0.5, 0.0).unwrap();
        assert!(matches!(fiiss_point(&p, 1.0, 1e-12, &mut src), Err(FiissError::Resource(_))));
        assert!((expected_nodes(0.5, 1.0, 1e-3).unwrap() - (1e3 * 2.0 / PI + 1.0)).abs() < 1e-9);
    }

    #[test]
    fn inversion_hand_cases() {
        let d = path(0.1, &[0.0, 1.0, 2.5]);
        assert_eq!(invert_at(&d, -1.0).unwrap(), 0.0);
        assert_eq!(invert_at(&d, 0.5).unwrap(), 0.1);
        assert_eq!(invert_at(&d, 1.0).unwrap(), 0.2);
        assert_eq!(invert_at(&d, 1.7).unwrap(), 0.2);
        assert!(invert_at(&d, 2.5).is_err());
        let grid = UniformGrid::new(0.0, 0.5, 5).unwrap();
        let w = invert_path(&d, &grid).unwrap();
        assert_eq!(w.values(), &[0.0, 0.1, 0.2, 0.2, 0.2]);
    }

    #[test]
    fn inverse_paths_nondecreasing() {
        for seed in 0..20 {
            let mut src = RandomSource::new(seed, 0);
            let w = simulate_inverse_subordinator(0.7, 2.0, 1e-2, 1e-3, &mut src).unwrap();
            assert!(w.values().windows(2).all(|p| p[1] >= p[0]));
            assert!(w.values().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn inverse_subordinator_mean() {
        let alpha = 0.6;
        let n = 20_000;
        let xs = replicate(n, 29, |src| {
            let d = simulate_subordinator_until(alpha, 1.0, 1e-3, src).unwrap();
            invert_at(&d, 1.0).unwrap()
        });
        let m = xs.iter().sum::<f64>() / n as f64;
        let exact = mittag_leffler_moment(alpha, 1).unwrap();
        assert!((m / exact - 1.0).abs() < 0.03, "{m} vs {exact}");
    }

    #[test]
    fn time_integral_hand_cases() {
        let d = path(1.0, &[0.0, 1.0, 2.5]);
        let p1 = FiissParams::new(0.5, 1.0).unwrap();
        assert_eq!(fiiss_from_subordinator(&d, &p1, &[2.0]).unwrap(), vec![3.0]);
        assert_eq!(fiiss_from_subordinator(&d, &p1, &[0.0]).unwrap(), vec![0.0]);
        let pneg = FiissParams::new(0.5, -0.5).unwrap();
        // Node at exactly u is excluded for beta < 0.
        let v = fiiss_from_subordinator(&d, &pneg, &[1.0]).unwrap()[0];
        assert_eq!(v, 1.0);
    }

    #[test]
    fn beta_zero_is_bit_identical_to_inversion() {
        let mut src = RandomSource::new(8, 1);
        let d = simulate_subordinator_until(0.65, 3.0, 1e-3, &mut src).unwrap();
        let grid = UniformGrid::up_to(3.0, 0.01).unwrap();
        let w = invert_path(&d, &grid).unwrap();
        let p0 = FiissParams::new(0.65, 0.0).unwrap();
        let y = fiiss_from_subordinator(&d, &p0, &grid.points()).unwrap();
        assert_eq!(w.values(), y.as_slice());
    }

    #[test]
    fn streamed_point_matches_stored_path() {
        for &beta in &[0.0, 0.4, -0.3, -1.5] {
            let p = FiissParams::new(0.7, beta).unwrap();
            let mut a = RandomSource::new(4, 2);
            let mut b = RandomSource::new(4, 2);
            let y = fiiss_point(&p, 1.3, 1e-3, &mut a).unwrap();
            let d = simulate_subordinator_until(0.7, 1.3, 1e-3, &mut b).unwrap();
            assert_eq!(y, fiiss_from_subordinator(&d, &p, &[1.3]).unwrap()[0], "beta {beta}");
            assert!(y.is_finite());
        }
    }

    #[test]
    fn monotone_for_nonnegative_beta() {
        let mut src = RandomSource::new(12, 0);
        let d = simulate_subordinator_until(0.5, 2.0, 1e-3, &mut src).unwrap();
        let grid = UniformGrid::up_to(1.9, 0.01).unwrap().points();
        for &beta in &[0.0, 0.3, 1.7] {
            let p = FiissParams::new(0.5, beta).unwrap();
            let y = fiiss_from_subordinator(&d, &p, &grid).unwrap();
            assert!(y.windows(2).all(|w| w[1] >= w[0]), "beta {beta}");
        }
    }

    #[test]
    fn riemann_liouville_synthetic() {
        let zeros = path(0.01, &vec![0.0; 201]);
        assert_eq!(fiiss_riemann_liouville(&zeros, 0.5, &[1.0]).unwrap(), vec![0.0]);
        let ones = path(0.01, &vec![1.0; 201]);
        for &(beta, u) in &[(0.5, 1.0), (1.3, 1.537), (0.2, 0.003)] {
            let y = fiiss_riemann_liouville(&ones, beta, &[u]).unwrap()[0];
            assert_relative_eq!(y, u.powf(beta), max_relative = 1e-12);
        }
        // W(y) = y: beta int_0^u (u-y)^(beta-1) y dy = u^(beta+1) / (beta+1)
        let ramp: Vec<f64> = (0..201).map(|i| i as f64 * 0.01).collect();
        let ramp = path(0.01, &ramp);
        let y = fiiss_riemann_liouville(&ramp, 0.7, &[1.234]).unwrap()[0];
        assert_relative_eq!(y, 1.234f64.powf(1.7) / 1.7, max_relative = 1e-12);
        assert!(fiiss_riemann_liouville(&ones, 0.0, &[1.0]).is_err());
    }

    #[test]
    fn marchaud_synthetic() {
        let p = FiissParams::new(0.75, -0.5).unwrap();
        let flat = path(0.01, &vec![0.3; 201]);
        let y = fiiss_marchaud(&flat, &p, &[1.0, 0.555]).unwrap();
        assert_relative_eq!(y[0], 0.3, max_relative = 1e-12);
        assert_relative_eq!(y[1], 0.3 * 0.555f64.powf(-0.5), max_relative = 1e-12);
        assert_eq!(fiiss_marchaud(&flat, &p, &[0.0]).unwrap(), vec![0.0]);
        // W(y) = y: int_0^u (u-y)^beta dy = u^(beta+1)/(beta+1)
        let ramp: Vec<f64> = (0..201).map(|i| i as f64 * 0.01).collect();
        let ramp = path(0.01, &ramp);
        let y = fiiss_marchaud(&ramp, &p, &[1.5]).unwrap()[0];
        assert_relative_eq!(y, 1.5f64.powf(0.5) / 0.5, max_relative = 1e-10);
        let bad = FiissParams::new(0.75, 0.5).unwrap();
        assert!(fiiss_marchaud(&flat, &bad, &[1.0]).is_err());
    }

    #[test]
    fn csv_layout() {
        let p = path(0.5, &[0.0, 1.0]);
        let csv = p.to_csv("t");
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,value");
        assert_eq!(lines[2], "5.0000000000000000e-1,1.0000000000000000e0");
    }

    #[test]
    fn convolution_matches_direct_sum() {
        let dw = [0.5, 0.0, 1.5, 2.0, 0.25];
        let kernel = [0.0, 3.0, 1.0, 0.5, 0.25];
        let y = convolve(&dw, &kernel, 5);
        for j in 0..5 {
            let direct: f64 = (0..j).map(|k| dw[k] * kernel[j - k]).sum();
            assert!((y[j] - direct).abs() < 1e-12);
        }
    }
}
