//! Experiment harness: benchmark tables over cost rates and strategies,
//! overlapping-window training, the transaction-cost divergence study, the
//! wealth-approximation residual check, and the delta-surface dump.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analytic::{bs_delta, leland_pnl_approx, CostModel, MarketParams, OptionSpec};
use crate::config::{DataSource, Mode, RunConfig};
use crate::engine::{compute_zt_detailed, evaluate, BsStrategy, HedgeReport, Strategy};
use crate::error::{HedgeError, Result};
use crate::policy::{train, LossRecord, MlpParams, NnStrategy, TrainConfig};
use crate::simulation::{ingest_csv, overlapping_paths, simulate_gbm, PathSet, RngSeed};

/// One benchmark table cell: a strategy's cost statistics on one data set.
#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub steps: usize,
    pub alpha: f64,
    /// "train" or "test".
    pub set: String,
    /// "BS", "Leland", or "NN".
    pub strategy: String,
    pub mean_pct: f64,
    pub std_pct: f64,
}

/// Per-alpha artifacts kept alongside the table rows.
#[derive(Debug, Clone)]
pub struct CellArtifacts {
    pub alpha: f64,
    pub params: MlpParams,
    pub history: Vec<LossRecord>,
    /// Test-set reports keyed by strategy name.
    pub test_reports: Vec<(String, HedgeReport)>,
}

#[derive(Debug, Clone)]
pub struct TablesOutput {
    pub rows: Vec<TableRow>,
    pub cells: Vec<CellArtifacts>,
}

fn market_of(cfg: &RunConfig) -> Result<MarketParams> {
    MarketParams::new(cfg.s0, cfg.mu, cfg.sigma, cfg.r, cfg.maturity_t)
}

/// Build the training path set according to the configured mode and source.
pub fn build_train_set(cfg: &RunConfig) -> Result<PathSet> {
    let dt = cfg.maturity_t / cfg.steps as f64;
    match (cfg.mode, &cfg.source) {
        (Mode::Independent, DataSource::Simulated) => {
            let market = market_of(cfg)?;
            Ok(simulate_gbm(&market, cfg.steps, cfg.num_paths, RngSeed(cfg.seed_value))?
                .normalized())
        }
        (Mode::Overlapping, DataSource::Simulated) => {
            if cfg.series_len < cfg.steps + 256 {
                return Err(HedgeError::config(format!(
                    "overlapping mode needs a source series of at least {} points, got {}",
                    cfg.steps + 256,
                    cfg.series_len
                )));
            }
            let n_series_steps = cfg.series_len - 1;
            let series_market = MarketParams::new(
                cfg.s0,
                cfg.mu,
                cfg.sigma,
                cfg.r,
                dt * n_series_steps as f64,
            )?;
            let long = simulate_gbm(&series_market, n_series_steps, 1, RngSeed(cfg.seed_value))?;
            let n_windows = cfg.series_len - cfg.steps - 1;
            overlapping_paths(&long.prices[0], cfg.steps, n_windows, dt)
        }
        (_, DataSource::Csv { file, column }) => {
            let series = ingest_csv(file, column)?;
            if cfg.mode == Mode::Overlapping && series.len() < cfg.steps + 256 {
                return Err(HedgeError::config(format!(
                    "overlapping mode needs a source series of at least {} points, got {}",
                    cfg.steps + 256,
                    series.len()
                )));
            }
            let n_windows = series
                .len()
                .checked_sub(cfg.steps + 1)
                .ok_or_else(|| {
                    HedgeError::config("series shorter than one window".to_string())
                })?;
            overlapping_paths(&series, cfg.steps, n_windows.min(cfg.num_paths), dt)
        }
    }
}

/// The test set is always independently simulated under the configured
/// market, on a seed disjoint from training.
pub fn build_test_set(cfg: &RunConfig) -> Result<PathSet> {
    let market = market_of(cfg)?;
    Ok(simulate_gbm(&market, cfg.steps, cfg.num_paths, RngSeed(cfg.test_seed))?.normalized())
}

fn push_rows(
    rows: &mut Vec<TableRow>,
    steps: usize,
    alpha: f64,
    set: &str,
    strategy: &str,
    report: &HedgeReport,
) {
    rows.push(TableRow {
        steps,
        alpha,
        set: set.to_string(),
        strategy: strategy.to_string(),
        mean_pct: report.mean * 100.0,
        std_pct: report.std * 100.0,
    });
}

/// For each cost rate: evaluate the Black-Scholes hedge, the Leland hedge,
/// and a freshly trained network on both the train and the test set.
pub fn run_tables(cfg: &RunConfig) -> Result<TablesOutput> {
    cfg.validate()?;
    let dt = cfg.maturity_t / cfg.steps as f64;
    let spec = OptionSpec::call(cfg.strike / cfg.s0, cfg.maturity_t)?;
    let train_set = build_train_set(cfg)?;
    let test_set = build_test_set(cfg)?;

    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for &alpha in &cfg.alphas {
        let cost = CostModel::new(alpha)?;
        let bs = BsStrategy::new(cfg.sigma, spec, cfg.r)?;
        let leland = BsStrategy::leland(cfg.sigma, alpha, dt, spec, cfg.r)?;
        let train_cfg = TrainConfig {
            epochs: cfg.epochs,
            batch_size: cfg.batch_size,
            lr: cfg.lr,
            seed: cfg.seed_value,
            strikes: vec![spec.strike_k],
            r: cfg.r,
            tc_alpha: alpha,
        };
        let trained = train(&train_set, &train_cfg)?;
        let nn = NnStrategy {
            params: trained.params.clone(),
        };

        let mut test_reports = Vec::new();
        for (name, strategy) in [
            ("BS", &bs as &dyn Strategy),
            ("NN", &nn),
            ("Leland", &leland),
        ] {
            let train_report = evaluate(&train_set, strategy, &spec, cfg.r, &cost)?;
            push_rows(&mut rows, cfg.steps, alpha, "train", name, &train_report);
            let test_report = evaluate(&test_set, strategy, &spec, cfg.r, &cost)?;
            push_rows(&mut rows, cfg.steps, alpha, "test", name, &test_report);
            test_reports.push((name.to_string(), test_report));
        }
        cells.push(CellArtifacts {
            alpha,
            params: trained.params,
            history: trained.history,
            test_reports,
        });
    }
    Ok(TablesOutput { rows, cells })
}

/// [`run_tables`] with the training set sliced as overlapping windows from
/// one long series.
pub fn run_overlapping(cfg: &RunConfig) -> Result<TablesOutput> {
    if cfg.mode != Mode::Overlapping {
        return Err(HedgeError::config(
            "run_overlapping requires mode = overlapping",
        ));
    }
    run_tables(cfg)
}

/// One row of the transaction-cost divergence study.
#[derive(Debug, Clone, Serialize)]
pub struct DivergenceRow {
    pub n: usize,
    pub alpha: f64,
    /// Mean of the discounted `tc * |trade| * price` ledger column.
    pub mean_tc_cost: f64,
    pub std_error: f64,
    /// Ratio of `mean_tc_cost` to the row with the smallest `n`.
    pub ratio_vs_smallest: f64,
}

/// Rebalancing costs of a fixed-volatility hedge as the grid is refined.
///
/// The hedge volatility is held constant across `n` (deliberately not
/// Leland-adjusted) so the cumulated costs grow like the square root of the
/// rebalancing frequency instead of being absorbed into the price.
pub fn divergence_study(
    market: &MarketParams,
    nu_fixed: f64,
    alphas: &[f64],
    n_list: &[usize],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<DivergenceRow>> {
    if n_list.is_empty() {
        return Err(HedgeError::invalid("n_list must not be empty"));
    }
    let spec = OptionSpec::call(1.0, market.maturity_t)?;
    let mut rows = Vec::new();
    for &alpha in alphas {
        let cost = CostModel::new(alpha)?;
        let mut base: Option<f64> = None;
        for &n in n_list {
            let paths = simulate_gbm(market, n, n_paths, RngSeed(seed ^ (n as u64)))?.normalized();
            let strategy = BsStrategy::new(nu_fixed, spec, market.r)?;
            let mut tcs = Vec::with_capacity(n_paths);
            for row in &paths.prices {
                tcs.push(compute_zt_detailed(row, &strategy, &spec, market.r, &cost)?.tc_component);
            }
            let (mean, std) = crate::engine::mean_std(&tcs);
            let se = std / (tcs.len() as f64).sqrt();
            let base_val = *base.get_or_insert(mean);
            let ratio = if base_val != 0.0 { mean / base_val } else { 1.0 };
            rows.push(DivergenceRow {
                n,
                alpha,
                mean_tc_cost: mean,
                std_error: se,
                ratio_vs_smallest: ratio,
            });
        }
    }
    Ok(rows)
}

/// One row of the wealth-approximation residual check.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualRow {
    pub n: usize,
    pub nu: f64,
    pub mean_abs_residual: f64,
    /// Shrink factor relative to the previous (coarser) grid; 1 for the first.
    pub shrink_vs_prev: f64,
}

/// Compares the analytic leading-order hedge wealth with the exact ledger at
/// zero transaction costs: the residual mean should shrink like sqrt(dt) as
/// the grid is refined.
pub fn leland_approx_check(
    market: &MarketParams,
    nu: f64,
    n_list: &[usize],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<ResidualRow>> {
    let spec = OptionSpec::call(1.0, market.maturity_t)?;
    let cost = CostModel::none();
    let mut rows: Vec<ResidualRow> = Vec::new();
    for &n in n_list {
        let dt = market.maturity_t / n as f64;
        let paths = simulate_gbm(market, n, n_paths, RngSeed(seed ^ (n as u64)))?.normalized();
        let strategy = BsStrategy::new(nu, spec, market.r)?;
        let mut abs_sum = 0.0;
        for row in &paths.prices {
            let z = compute_zt_detailed(row, &strategy, &spec, market.r, &cost)?.z_t;
            let wealth = leland_pnl_approx(row, &spec, market.r, nu, dt)?;
            abs_sum += (wealth - (-z)).abs();
        }
        let mean_abs = abs_sum / n_paths as f64;
        let shrink = rows
            .last()
            .map(|prev| prev.mean_abs_residual / mean_abs)
            .unwrap_or(1.0);
        rows.push(ResidualRow {
            n,
            nu,
            mean_abs_residual: mean_abs,
            shrink_vs_prev: shrink,
        });
    }
    Ok(rows)
}

/// One visited hedging point with the model and network hedges side by side.
#[derive(Debug, Clone, Serialize)]
pub struct SurfaceRow {
    pub path: usize,
    pub step: usize,
    pub moneyness: f64,
    pub ttm: f64,
    pub prev_hedge: f64,
    pub bs_delta: f64,
    pub nn_delta: f64,
    pub difference: f64,
}

/// Walk every path with the trained network, recording at each rebalancing
/// time both its hedge and the Black-Scholes hedge at volatility `sigma`.
pub fn delta_surface(
    trained: &MlpParams,
    paths: &PathSet,
    spec: &OptionSpec,
    sigma: f64,
    r: f64,
) -> Result<Vec<SurfaceRow>> {
    if !paths.t0_normalized {
        return Err(HedgeError::invalid(
            "delta surface requires t0-normalized paths",
        ));
    }
    let n = paths.n_steps();
    let dt = spec.maturity_t / n as f64;
    let mut rows = Vec::new();
    for (p, row) in paths.prices.iter().enumerate() {
        let mut prev = 0.0;
        for i in 0..n {
            let ttm = spec.maturity_t - i as f64 * dt;
            let moneyness = spec.strike_k / row[i];
            let nn = trained.forward(&[moneyness, ttm, prev]);
            let bs = bs_delta(row[i], spec, ttm, r, sigma)?;
            rows.push(SurfaceRow {
                path: p,
                step: i,
                moneyness,
                ttm,
                prev_hedge: prev,
                bs_delta: bs,
                nn_delta: nn,
                difference: nn - bs,
            });
            prev = nn;
        }
    }
    Ok(rows)
}

/// Run metadata written beside every experiment's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub version: String,
    pub steps: usize,
    pub num_paths: usize,
    pub train_seed: u64,
    pub test_seed: u64,
    pub alphas: Vec<f64>,
    pub mode: String,
    pub tc: f64,
    pub r: f64,
    pub s0: f64,
    pub mu: f64,
    pub sigma: f64,
    pub maturity_t: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
}

impl Manifest {
    pub fn from_config(cfg: &RunConfig) -> Manifest {
        Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            steps: cfg.steps,
            num_paths: cfg.num_paths,
            train_seed: cfg.seed_value,
            test_seed: cfg.test_seed,
            alphas: cfg.alphas.clone(),
            mode: match cfg.mode {
                Mode::Independent => "independent".to_string(),
                Mode::Overlapping => "overlapping".to_string(),
            },
            tc: cfg.tc,
            r: cfg.r,
            s0: cfg.s0,
            mu: cfg.mu,
            sigma: cfg.sigma,
            maturity_t: cfg.maturity_t,
            epochs: cfg.epochs,
            batch_size: cfg.batch_size,
            lr: cfg.lr,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| HedgeError::io(&path, e))?;
        Ok(path)
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| HedgeError::io(path, e))
}

/// `tables.csv`: one row per (steps, alpha, set, strategy).
pub fn write_tables_csv(rows: &[TableRow], path: &Path) -> Result<()> {
    let mut out = String::from("steps,alpha,set,strategy,mean_pct,std_pct\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.6},{:.6}\n",
            r.steps, r.alpha, r.set, r.strategy, r.mean_pct, r.std_pct
        ));
    }
    write_text(path, &out)
}

/// `loss_history.csv`: training curves for every cost rate.
pub fn write_histories_csv(cells: &[CellArtifacts], path: &Path) -> Result<()> {
    let mut out = String::from("alpha,epoch,step,loss\n");
    for cell in cells {
        for rec in &cell.history {
            out.push_str(&format!(
                "{},{},{},{}\n",
                cell.alpha, rec.epoch, rec.step, rec.loss
            ));
        }
    }
    write_text(path, &out)
}

/// `histogram.csv`: test-set cost histograms for every (alpha, strategy).
pub fn write_histograms_csv(cells: &[CellArtifacts], path: &Path) -> Result<()> {
    let mut out = String::from("alpha,strategy,bin_left,bin_right,count\n");
    for cell in cells {
        for (name, report) in &cell.test_reports {
            let h = &report.histogram;
            for (b, count) in h.counts.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    cell.alpha,
                    name,
                    h.edges[b],
                    h.edges[b + 1],
                    count
                ));
            }
        }
    }
    write_text(path, &out)
}

/// `divergence.csv`.
pub fn write_divergence_csv(rows: &[DivergenceRow], path: &Path) -> Result<()> {
    let mut out = String::from("n,alpha,mean_tc_cost,std_error,ratio_vs_smallest\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n, r.alpha, r.mean_tc_cost, r.std_error, r.ratio_vs_smallest
        ));
    }
    write_text(path, &out)
}

/// `delta_surface.csv`.
pub fn write_surface_csv(rows: &[SurfaceRow], path: &Path) -> Result<()> {
    let mut out = String::from("path,step,moneyness,ttm,prev_hedge,bs_delta,nn_delta,difference\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.path, r.step, r.moneyness, r.ttm, r.prev_hedge, r.bs_delta, r.nn_delta, r.difference
        ));
    }
    write_text(path, &out)
}
