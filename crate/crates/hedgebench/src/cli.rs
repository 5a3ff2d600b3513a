//! Command-line front end: wires config files to the simulation, training,
//! evaluation, and experiment modules.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::analytic::{CostModel, OptionSpec};
use crate::config::RunConfig;
use crate::engine::{evaluate, BsStrategy, Strategy};
use crate::error::{HedgeError, Result};
use crate::experiments::{
    delta_surface, divergence_study, run_tables, write_divergence_csv, write_histograms_csv,
    write_histories_csv, write_surface_csv, write_tables_csv, Manifest,
};
use crate::policy::{train, write_loss_csv, MlpParams, NnStrategy, TrainConfig};
use crate::simulation::{ingest_csv, overlapping_paths, simulate_gbm, vol_stats, PathSet, RngSeed};

#[derive(Debug, Parser)]
#[command(name = "hedgebench", version, about = "Hedging strategy benchmark")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Flat key=value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory (fallback: HEDGEBENCH_OUT, then the current dir).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Overrides the config's seed_value.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Parallelism degree; 1 (the default) is fully deterministic.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,

    /// Overrides the config's tc.
    #[arg(long, global = true)]
    pub tc: Option<f64>,

    /// Overrides the config's steps.
    #[arg(long, global = true)]
    pub steps: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate GBM paths and write them as CSV.
    Simulate,
    /// Read a price column from a CSV file and slice it into overlapping
    /// hedging windows.
    Ingest {
        /// Source CSV file with a header row.
        #[arg(long)]
        file: PathBuf,
        /// Name of the price column.
        #[arg(long, default_value = "close")]
        column: String,
    },
    /// Train the network hedge on a path file (or freshly simulated paths).
    Train {
        /// Path CSV produced by `simulate` or `ingest`; simulated when absent.
        #[arg(long)]
        paths: Option<PathBuf>,
    },
    /// Evaluate one strategy on a path file (or a fresh test set).
    Evaluate {
        #[arg(long)]
        paths: Option<PathBuf>,
        /// `bs`, `leland`, or `nn=<params.json>`.
        #[arg(long)]
        strategy: String,
    },
    /// Regenerate the full benchmark tables with training curves,
    /// histograms, a delta surface, and a manifest.
    Bench,
    /// Transaction-cost divergence study over refined grids.
    Diverge,
    /// Dump the (moneyness, ttm) hedge surface of trained parameters.
    Surface {
        /// Parameter JSON written by `train` or `bench`.
        #[arg(long)]
        params: PathBuf,
    },
}

impl Cli {
    fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os("HEDGEBENCH_OUT").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."))
    }

    fn load_config(&self) -> Result<RunConfig> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| HedgeError::config("--config is required for this command"))?;
        let mut cfg = RunConfig::load(path)?;
        if let Some(seed) = self.seed {
            cfg.seed_value = seed;
        }
        if let Some(tc) = self.tc {
            cfg.tc = tc;
        }
        if let Some(steps) = self.steps {
            cfg.steps = steps;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HedgeError::io(dir, e))
}

fn load_paths(file: &Path) -> Result<PathSet> {
    let set = PathSet::read_csv(file)?;
    set.validate()?;
    Ok(set)
}

fn strategy_from_spec(
    name: &str,
    cfg: &RunConfig,
    spec: OptionSpec,
) -> Result<Box<dyn Strategy>> {
    let dt = cfg.maturity_t / cfg.steps as f64;
    match name {
        "bs" => Ok(Box::new(BsStrategy::new(cfg.sigma, spec, cfg.r)?)),
        "leland" => Ok(Box::new(BsStrategy::leland(
            cfg.sigma, cfg.tc, dt, spec, cfg.r,
        )?)),
        other => {
            if let Some(file) = other.strip_prefix("nn=") {
                let params = MlpParams::load_json(Path::new(file))?;
                Ok(Box::new(NnStrategy { params }))
            } else {
                Err(HedgeError::config(format!(
                    "unknown strategy '{other}': expected bs, leland, or nn=<params.json>"
                )))
            }
        }
    }
}

/// Entry point used by `main`; every subcommand returns only after all of
/// its output files are written.
pub fn run(cli: &Cli) -> Result<()> {
    let out = cli.out_dir();
    match &cli.command {
        Command::Simulate => cmd_simulate(cli, &out),
        Command::Ingest { file, column } => cmd_ingest(cli, file, column, &out),
        Command::Train { paths } => cmd_train(cli, paths.as_deref(), &out),
        Command::Evaluate { paths, strategy } => {
            cmd_evaluate(cli, paths.as_deref(), strategy, &out)
        }
        Command::Bench => cmd_bench(cli, &out),
        Command::Diverge => cmd_diverge(cli, &out),
        Command::Surface { params } => cmd_surface(cli, params, &out),
    }
}

fn cmd_simulate(cli: &Cli, out: &Path) -> Result<()> {
    let cfg = cli.load_config()?;
    ensure_dir(out)?;
    let market = crate::MarketParams::new(cfg.s0, cfg.mu, cfg.sigma, cfg.r, cfg.maturity_t)?;
    let paths = simulate_gbm(&market, cfg.steps, cfg.num_paths, RngSeed(cfg.seed_value))?;
    let file = out.join("paths.csv");
    paths.write_csv(&file)?;
    let stats = vol_stats(&paths)?;
    println!(
        "wrote {} paths of {} steps to {}; realized vol mean {:.2}% std {:.2}% min {:.2}% max {:.2}%",
        paths.n_paths(),
        paths.n_steps(),
        file.display(),
        stats.mean * 100.0,
        stats.std * 100.0,
        stats.min * 100.0,
        stats.max * 100.0,
    );
    Ok(())
}

fn cmd_ingest(cli: &Cli, file: &Path, column: &str, out: &Path) -> Result<()> {
    let cfg = cli.load_config()?;
    ensure_dir(out)?;
    let series = ingest_csv(file, column)?;
    let dt = cfg.maturity_t / cfg.steps as f64;
    let n_windows = series.len().checked_sub(cfg.steps + 1).ok_or_else(|| {
        HedgeError::config(format!(
            "series of {} points is shorter than one {}-step window",
            series.len(),
            cfg.steps
        ))
    })?;
    let paths = overlapping_paths(&series, cfg.steps, n_windows.min(cfg.num_paths), dt)?;
    let dest = out.join("paths.csv");
    paths.write_csv(&dest)?;
    println!(
        "ingested {} points from {}; wrote {} windows of {} steps to {}",
        series.len(),
        file.display(),
        paths.n_paths(),
        paths.n_steps(),
        dest.display()
    );
    Ok(())
}

fn cmd_train(cli: &Cli, paths_file: Option<&Path>, out: &Path) -> Result<()> {
    let cfg = cli.load_config()?;
    ensure_dir(out)?;
    let paths = match paths_file {
        Some(f) => load_paths(f)?.normalized(),
        None => crate::experiments::build_train_set(&cfg)?,
    };
    let train_cfg = TrainConfig {
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
        lr: cfg.lr,
        seed: cfg.seed_value,
        strikes: vec![cfg.strike / cfg.s0],
        r: cfg.r,
        tc_alpha: cfg.tc,
    };
    let result = train(&paths, &train_cfg)?;
    let params_file = out.join("params.json");
    result.params.save_json(&params_file)?;
    let loss_file = out.join("loss.csv");
    write_loss_csv(&result.history, &loss_file)?;
    Manifest::from_config(&cfg).write(out)?;
    println!(
        "trained {} steps; wrote {} and {}",
        result.history.len(),
        params_file.display(),
        loss_file.display()
    );
    Ok(())
}

fn cmd_evaluate(
    cli: &Cli,
    paths_file: Option<&Path>,
    strategy_spec: &str,
    out: &Path,
) -> Result<()> {
    let cfg = cli.load_config()?;
    ensure_dir(out)?;
    let paths = match paths_file {
        Some(f) => load_paths(f)?.normalized(),
        None => crate::experiments::build_test_set(&cfg)?,
    };
    let spec = OptionSpec::call(cfg.strike / cfg.s0, cfg.maturity_t)?;
    let strategy = strategy_from_spec(strategy_spec, &cfg, spec)?;
    let cost = CostModel::new(cfg.tc)?;
    let report = evaluate(&paths, strategy.as_ref(), &spec, cfg.r, &cost)?;
    let costs_file = out.join("costs.csv");
    report.write_costs_csv(&costs_file)?;
    let summary_file = out.join("summary.json");
    report.write_summary_json(&summary_file)?;
    println!(
        "evaluated {} on {} paths: mean {:.4}% std {:.4}%; wrote {} and {}",
        strategy_spec,
        paths.n_paths(),
        report.mean * 100.0,
        report.std * 100.0,
        costs_file.display(),
        summary_file.display()
    );
    Ok(())
}

fn cmd_bench(cli: &Cli, out: &Path) -> Result<()> {
    let cfg = cli.load_config()?;
    ensure_dir(out)?;
    let tables = run_tables(&cfg)?;
    write_tables_csv(&tables.rows, &out.join("tables.csv"))?;
    write_histories_csv(&tables.cells, &out.join("loss_history.csv"))?;
    write_histograms_csv(&tables.cells, &out.join("histogram.csv"))?;
    // Hedge surface of the highest-cost cell, on the test set.
    if let Some(cell) = tables
        .cells
        .iter()
        .max_by(|a, b| a.alpha.total_cmp(&b.alpha))
    {
        let spec = OptionSpec::call(cfg.strike / cfg.s0, cfg.maturity_t)?;
        let test = crate::experiments::build_test_set(&cfg)?;
        let rows = delta_surface(&cell.params, &test, &spec, cfg.sigma, cfg.r)?;
        write_surface_csv(&rows, &out.join("delta_surface.csv"))?;
        cell.params.save_json(&out.join("params.json"))?;
    }
    Manifest::from_config(&cfg).write(out)?;
    println!(
        "wrote {} table rows across {} cost rates to {}",
        tables.rows.len(),
        tables.cells.len(),
        out.display()
    );
    Ok(())
}

fn cmd_diverge(cli: &Cli, out: &Path) -> Result<()> {
    let cfg = cli.load_config()?;
    ensure_dir(out)?;
    let market = crate::MarketParams::new(cfg.s0, cfg.mu, cfg.sigma, cfg.r, cfg.maturity_t)?;
    let n_list = [cfg.steps, cfg.steps * 4, cfg.steps * 16];
    let alphas: Vec<f64> = if cfg.alphas.is_empty() {
        vec![cfg.tc]
    } else {
        cfg.alphas.clone()
    };
    let rows = divergence_study(
        &market,
        cfg.sigma,
        &alphas,
        &n_list,
        cfg.num_paths,
        cfg.seed_value,
    )?;
    write_divergence_csv(&rows, &out.join("divergence.csv"))?;
    Manifest::from_config(&cfg).write(out)?;
    println!(
        "wrote {} divergence rows over n = {:?} to {}",
        rows.len(),
        n_list,
        out.display()
    );
    Ok(())
}

fn cmd_surface(cli: &Cli, params_file: &Path, out: &Path) -> Result<()> {
    let cfg = cli.load_config()?;
    ensure_dir(out)?;
    let params = MlpParams::load_json(params_file)?;
    let spec = OptionSpec::call(cfg.strike / cfg.s0, cfg.maturity_t)?;
    let test = crate::experiments::build_test_set(&cfg)?;
    let rows = delta_surface(&params, &test, &spec, cfg.sigma, cfg.r)?;
    let dest = out.join("delta_surface.csv");
    write_surface_csv(&rows, &dest)?;
    println!("wrote {} surface rows to {}", rows.len(), dest.display());
    Ok(())
}
