//! Chain-ordered projections used by the spectral block updates.
//!
//! [`reg_isotonic`] solves
//!
//! ```text
//! minimize  -sum log x_i + (beta/2) |x - d|^2
//! s.t.      lower <= x_1 <= ... <= x_q <= upper
//! ```
//!
//! by pooling adjacent violators. A pooled block `B` takes the closed-form
//! value `(dbar + sqrt(dbar^2 + 4/beta)) / 2` where `dbar` is the mean of `d`
//! over `B`. Once the chain is ordered, values outside the box are clamped to
//! the nearest bound; for separable convex costs that clamp is exact.
//!
//! [`sym_isotonic_psi`] handles the adjacency side: a vector that is
//! antisymmetric about its midpoint and non-increasing on its first half.

use crate::error::{Error, Result};

pub mod oracle;

/// Bounds on an ordered chain of values.
///
/// The Laplacian side uses `lower = c1 > 0`, `upper = c2`. The adjacency side
/// orders its half-spectrum downwards from `c1` to `c2`, which is the box
/// `OrderedBox::new(c2, c1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderedBox {
    lower: f64,
    upper: f64,
}

impl OrderedBox {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower > upper {
            return Err(Error::domain(format!(
                "box bounds must satisfy lower <= upper (got {lower}, {upper})"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// `(-inf, +inf)`.
    pub fn unbounded() -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    fn clamp(&self, v: f64) -> f64 {
        v.max(self.lower).min(self.upper)
    }
}

/// Output of the pooling solver together with how many passes it took.
#[derive(Debug, Clone, PartialEq)]
pub struct IsotonicSolution {
    pub values: Vec<f64>,
    /// Number of pooling or clamping passes after the initial closed-form
    /// evaluation. Never exceeds `q + 1`.
    pub sweeps: usize,
}

#[derive(Debug, Clone, Copy)]
enum Loss {
    /// `-log x + (beta/2)(x - d)^2`
    LogBarrier { beta: f64 },
    /// `(1/2)(x - d)^2`
    Squared,
}

impl Loss {
    /// Minimiser of the loss summed over a block whose targets average to
    /// `mean`.
    fn block_value(self, mean: f64) -> f64 {
        match self {
            Loss::Squared => mean,
            Loss::LogBarrier { beta } => {
                let disc = (mean * mean + 4.0 / beta).sqrt();
                if mean >= 0.0 {
                    0.5 * (mean + disc)
                } else {
                    // Same root, written to avoid cancellation.
                    (2.0 / beta) / (disc - mean)
                }
            }
        }
    }

    fn grad(self, x: f64, d: f64) -> f64 {
        match self {
            Loss::Squared => x - d,
            Loss::LogBarrier { beta } => -1.0 / x + beta * (x - d),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Block {
    len: usize,
    sum: f64,
    value: f64,
}

fn pool(d: &[f64], loss: Loss, bounds: OrderedBox) -> IsotonicSolution {
    let mut blocks: Vec<Block> = d
        .iter()
        .map(|&di| Block {
            len: 1,
            sum: di,
            value: loss.block_value(di),
        })
        .collect();
    let mut sweeps = 0;

    // Merge every maximal run of descending neighbours per pass. Each pass
    // removes at least one block, so at most q - 1 passes are needed.
    while blocks.windows(2).any(|w| w[0].value > w[1].value) {
        sweeps += 1;
        let mut merged: Vec<Block> = Vec::with_capacity(blocks.len());
        let mut iter = blocks.into_iter().peekable();
        while let Some(mut run) = iter.next() {
            let mut last = run.value;
            while let Some(next) = iter.peek() {
                if next.value < last {
                    last = next.value;
                    run.len += next.len;
                    run.sum += next.sum;
                    iter.next();
                } else {
                    break;
                }
            }
            run.value = loss.block_value(run.sum / run.len as f64);
            merged.push(run);
        }
        blocks = merged;
    }

    if blocks
        .iter()
        .any(|b| b.value < bounds.lower || b.value > bounds.upper)
    {
        sweeps += 1;
        for b in &mut blocks {
            b.value = bounds.clamp(b.value);
        }
    }

    let values = blocks
        .iter()
        .flat_map(|b| std::iter::repeat_n(b.value, b.len))
        .collect();
    IsotonicSolution { values, sweeps }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::domain(format!("beta must be positive, got {beta}")));
    }
    Ok(())
}

fn check_log_box(bounds: &OrderedBox) -> Result<()> {
    if !(bounds.lower > 0.0) {
        return Err(Error::domain(format!(
            "lower bound must be positive for the log-regularised problem, got {}",
            bounds.lower
        )));
    }
    Ok(())
}

/// Log-regularised isotonic regression on a box. See the module docs.
pub fn reg_isotonic(d: &[f64], beta: f64, bounds: OrderedBox) -> Result<Vec<f64>> {
    Ok(reg_isotonic_with_stats(d, beta, bounds)?.values)
}

pub fn reg_isotonic_with_stats(
    d: &[f64],
    beta: f64,
    bounds: OrderedBox,
) -> Result<IsotonicSolution> {
    check_beta(beta)?;
    check_log_box(&bounds)?;
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite isotonic target".into()));
    }
    Ok(pool(d, Loss::LogBarrier { beta }, bounds))
}

/// Plain least-squares isotonic regression (non-decreasing) on a box.
pub fn box_isotonic(d: &[f64], bounds: OrderedBox) -> Vec<f64> {
    pool(d, Loss::Squared, bounds).values
}

/// Projection of `e` onto vectors that satisfy `psi_i = -psi_{b+1-i}` and
/// `upper >= psi_1 >= ... >= psi_{b/2} >= lower`.
///
/// With the antisymmetry substituted, the first half solves a decreasing
/// isotonic fit to `(e_i - e_{b+1-i}) / 2`.
pub fn sym_isotonic_psi(e: &[f64], bounds: OrderedBox) -> Result<Vec<f64>> {
    let b = e.len();
    if b % 2 != 0 {
        return Err(Error::domain(format!(
            "symmetric spectrum needs an even length, got {b}"
        )));
    }
    let half = b / 2;
    // Decreasing fit to t == increasing fit to -t on the mirrored box.
    let neg_targets: Vec<f64> = (0..half).map(|i| -(e[i] - e[b - 1 - i]) / 2.0).collect();
    let mirrored = OrderedBox {
        lower: -bounds.upper,
        upper: -bounds.lower,
    };
    let first: Vec<f64> = box_isotonic(&neg_targets, mirrored)
        .into_iter()
        .map(|v| -v)
        .collect();
    let mut out = first.clone();
    out.extend(first.iter().rev().map(|v| -v));
    Ok(out)
}

/// Largest violation of the KKT system of the log-regularised problem at
/// `x`, scaled by the magnitude of the gradient terms.
///
/// Covers primal feasibility, the sign of every multiplier implied by the
/// stationarity recursion, and complementary slackness on each maximal run of
/// tied values.
pub fn kkt_residual(x: &[f64], d: &[f64], beta: f64, bounds: OrderedBox) -> f64 {
    residual(x, d, Loss::LogBarrier { beta }, bounds)
}

fn residual(x: &[f64], d: &[f64], loss: Loss, bounds: OrderedBox) -> f64 {
    let q = x.len();
    if q == 0 {
        return 0.0;
    }
    let vscale = x.iter().chain(d).fold(1.0f64, |m, v| m.max(v.abs()));
    let gscale = match loss {
        Loss::Squared => vscale,
        Loss::LogBarrier { beta } => {
            let xmin = x.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
            1.0 + beta * vscale + 1.0 / xmin
        }
    };

    let mut primal = 0.0f64;
    primal = primal.max(bounds.lower - x[0]);
    primal = primal.max(x[q - 1] - bounds.upper);
    for w in x.windows(2) {
        primal = primal.max(w[0] - w[1]);
    }
    if matches!(loss, Loss::LogBarrier { .. }) && x.iter().any(|v| *v <= 0.0) {
        return f64::INFINITY;
    }

    let tie = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
    let mut dual = 0.0f64;
    let mut start = 0;
    while start < q {
        let mut end = start + 1;
        while end < q && tie(x[end], x[start]) {
            end += 1;
        }
        let v = x[start];
        let g: Vec<f64> = (start..end).map(|i| loss.grad(x[i], d[i])).collect();
        let total: f64 = g.iter().sum();
        let at_lower = start == 0 && tie(v, bounds.lower);
        let at_upper = end == q && tie(v, bounds.upper);
        // Multipliers inside the run: mu_{i+1} = mu_start - prefix_i.
        let mut prefix = 0.0;
        let mut worst_prefix = f64::NEG_INFINITY; // max prefix sum before the end
        for gi in &g[..g.len() - 1] {
            prefix += gi;
            worst_prefix = worst_prefix.max(prefix);
        }
        match (at_lower, at_upper) {
            (true, true) => {}
            (true, false) => {
                // mu_start = total >= 0, interior mu = total - prefix >= 0.
                dual = dual.max(-total);
                if worst_prefix.is_finite() {
                    dual = dual.max(worst_prefix - total);
                }
            }
            (false, true) => {
                // mu_start = 0, mu_end = -total >= 0, interior -prefix >= 0.
                dual = dual.max(total);
                if worst_prefix.is_finite() {
                    dual = dual.max(worst_prefix);
                }
            }
            (false, false) => {
                dual = dual.max(total.abs());
                if worst_prefix.is_finite() {
                    dual = dual.max(worst_prefix);
                }
            }
        }
        start = end;
    }
    (primal / vscale).max(dual / gscale)
}
