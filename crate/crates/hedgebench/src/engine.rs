//! Discounted terminal hedging cost of a strategy along t0-normalized paths,
//! with proportional transaction costs and physical-settlement accounting.
//!
//! `Z_T` is a COST: positive values are money spent by the trader, and for a
//! good hedge its mean sits near the option premium.

use crate::analytic::{bs_delta, leland_vol, CostModel, OptionSpec};
use crate::error::{HedgeError, Result};
use crate::simulation::PathSet;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// State visible to a strategy at a rebalancing time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HedgeState {
    /// Strike divided by current spot, `K / X_t`.
    pub moneyness: f64,
    /// Time to maturity in years.
    pub ttm: f64,
    /// Asset holding carried from the previous rebalance.
    pub prev_hedge: f64,
}

/// A deterministic mapping from state to hedge ratio. Outputs are
/// unconstrained: strategies may go short or above one.
pub trait Strategy {
    fn hedge(&self, state: &HedgeState) -> f64;
}

/// Black-Scholes delta at a fixed implied volatility.
#[derive(Debug, Clone)]
pub struct BsStrategy {
    spec: OptionSpec,
    r: f64,
    vol: f64,
}

impl BsStrategy {
    pub fn new(vol: f64, spec: OptionSpec, r: f64) -> Result<Self> {
        if !(vol > 0.0) {
            return Err(HedgeError::invalid(format!("vol must be > 0, got {vol}")));
        }
        Ok(Self { spec, r, vol })
    }

    /// Black-Scholes delta with the implied volatility replaced by Leland's
    /// `nu*` for the given cost rate and rebalancing interval.
    pub fn leland(sigma: f64, tc_alpha: f64, dt: f64, spec: OptionSpec, r: f64) -> Result<Self> {
        let nu = leland_vol(sigma, tc_alpha, dt)?;
        Self::new(nu, spec, r)
    }

    pub fn vol(&self) -> f64 {
        self.vol
    }
}

impl Strategy for BsStrategy {
    fn hedge(&self, state: &HedgeState) -> f64 {
        let spot = self.spec.strike_k / state.moneyness;
        bs_delta(spot, &self.spec, state.ttm, self.r, self.vol)
            .expect("engine never queries ttm <= 0")
    }
}

/// A strategy backed by an explicit table, keyed by rebalance index; used by
/// tests that script every hedge by hand.
pub struct TableStrategy {
    pub spec: OptionSpec,
    pub dt: f64,
    pub hedges: Vec<f64>,
}

impl Strategy for TableStrategy {
    fn hedge(&self, state: &HedgeState) -> f64 {
        let i = ((self.spec.maturity_t - state.ttm) / self.dt).round() as usize;
        self.hedges[i]
    }
}

/// Terminal cost along one path, split into the full `Z_T` and the part
/// proportional to the transaction-cost rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathCost {
    pub z_t: f64,
    /// Sum of the discounted `tc * |delta_i - delta_{i-1}| * X_i` rebalancing
    /// terms only; terminal settlement is excluded so the quantity matches
    /// the cumulated-rebalancing-cost sum exactly.
    pub tc_component: f64,
}

fn check_path(path: &[f64]) -> Result<usize> {
    if path.len() < 2 {
        return Err(HedgeError::invalid("path must have at least 2 points"));
    }
    if (path[0] - 1.0).abs() > 1e-12 {
        return Err(HedgeError::invalid(format!(
            "path is not t0-normalized: first price is {}",
            path[0]
        )));
    }
    Ok(path.len() - 1)
}

/// Present value of the hedging cash flows along one t0-normalized path.
///
/// Ledger: the initial delta is charged undiscounted and without transaction
/// cost; rebalances at `i = 1..n-1` are discounted by `gamma^i` and charged
/// `tc` per unit of currency traded; at `i = n` only settlement occurs. An
/// out-of-the-money expiry unwinds the residual position at `(1 -/+ tc)`
/// prices; an in-the-money expiry receives the strike and trades only the
/// difference to the one delivered share.
pub fn compute_zt(
    path: &[f64],
    strategy: &dyn Strategy,
    spec: &OptionSpec,
    r: f64,
    cost: &CostModel,
) -> Result<f64> {
    Ok(compute_zt_detailed(path, strategy, spec, r, cost)?.z_t)
}

/// As [`compute_zt`], also accumulating the transaction-cost column.
pub fn compute_zt_detailed(
    path: &[f64],
    strategy: &dyn Strategy,
    spec: &OptionSpec,
    r: f64,
    cost: &CostModel,
) -> Result<PathCost> {
    let n = check_path(path)?;
    let dt = spec.maturity_t / n as f64;
    let tc = cost.tc_alpha;
    let gamma = (-r * dt).exp();

    let mut prev = 0.0;
    let mut delta = f64::NAN;
    let mut cost_value = 0.0;
    let mut tc_column = 0.0;
    let mut discount = 1.0;
    for i in 0..n {
        let state = HedgeState {
            moneyness: spec.strike_k / path[i],
            ttm: spec.maturity_t - i as f64 * dt,
            prev_hedge: prev,
        };
        delta = strategy.hedge(&state);
        if i == 0 {
            // Initial delta delivered by the option buyer: no trading cost.
            cost_value = delta * path[0];
        } else {
            let dd = delta - prev;
            cost_value += discount * (dd + tc * dd.abs()) * path[i];
            tc_column += discount * tc * dd.abs() * path[i];
        }
        prev = delta;
        discount *= gamma;
    }
    // `discount` is now gamma^n.
    let x_n = path[n];
    if x_n < spec.strike_k {
        // Expires worthless: liquidate a long, or buy back a short.
        cost_value -= discount * delta.max(0.0) * (1.0 - tc) * x_n;
        cost_value += discount * (-delta).max(0.0) * (1.0 + tc) * x_n;
    } else {
        // Physical settlement: receive the strike, deliver one share.
        cost_value -= discount * spec.strike_k;
        cost_value += discount * (1.0 - delta).max(0.0) * x_n * (1.0 + tc);
        cost_value -= discount * (delta - 1.0).max(0.0) * x_n * (1.0 - tc);
    }
    Ok(PathCost {
        z_t: cost_value,
        tc_component: tc_column,
    })
}

/// Per-path costs with summary statistics and a histogram.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HedgeReport {
    pub costs: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (n-1).
    pub std: f64,
    pub histogram: Histogram,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges spanning the observed cost range.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn build(values: &[f64], bins: usize) -> Histogram {
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut counts = vec![0usize; bins];
        for &v in values {
            let mut b = ((v - lo) / span * bins as f64) as usize;
            if b >= bins {
                b = bins - 1;
            }
            counts[b] += 1;
        }
        let edges = (0..=bins)
            .map(|i| lo + span * i as f64 / bins as f64)
            .collect();
        Histogram { edges, counts }
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub const DEFAULT_HISTOGRAM_BINS: usize = 30;

/// Apply [`compute_zt`] to every row of a path set.
pub fn evaluate(
    paths: &PathSet,
    strategy: &dyn Strategy,
    spec: &OptionSpec,
    r: f64,
    cost: &CostModel,
) -> Result<HedgeReport> {
    evaluate_binned(paths, strategy, spec, r, cost, DEFAULT_HISTOGRAM_BINS)
}

pub fn evaluate_binned(
    paths: &PathSet,
    strategy: &dyn Strategy,
    spec: &OptionSpec,
    r: f64,
    cost: &CostModel,
    bins: usize,
) -> Result<HedgeReport> {
    if !paths.t0_normalized {
        return Err(HedgeError::invalid(
            "evaluate requires a t0-normalized path set",
        ));
    }
    let mut costs = Vec::with_capacity(paths.n_paths());
    for (row_idx, row) in paths.prices.iter().enumerate() {
        let z = compute_zt(row, strategy, spec, r, cost).map_err(|e| HedgeError::PathRow {
            row: row_idx,
            source: Box::new(e),
        })?;
        costs.push(z);
    }
    let (mean, std) = mean_std(&costs);
    let histogram = Histogram::build(&costs, bins);
    Ok(HedgeReport {
        costs,
        mean,
        std,
        histogram,
    })
}

impl HedgeReport {
    /// One cost per line.
    pub fn write_costs_csv(&self, path: &Path) -> Result<()> {
        let mut buf = String::from("path,z_t\n");
        for (i, c) in self.costs.iter().enumerate() {
            buf.push_str(&format!("{i},{c:.17e}\n"));
        }
        std::fs::write(path, buf).map_err(|e| HedgeError::io(path, e))
    }

    /// Summary and histogram as JSON.
    pub fn write_summary_json(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Summary<'a> {
            n_paths: usize,
            mean: f64,
            std: f64,
            histogram: &'a Histogram,
        }
        let doc = Summary {
            n_paths: self.costs.len(),
            mean: self.mean,
            std: self.std,
            histogram: &self.histogram,
        };
        let json = serde_json::to_string_pretty(&doc).expect("report serializes");
        std::fs::write(path, json).map_err(|e| HedgeError::io(path, e))
    }
}
