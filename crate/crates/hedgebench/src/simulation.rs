//! GBM trajectory generation, overlapping-window construction, CSV ingestion
//! and realized-volatility diagnostics.
//!
//! Randomness contract: normals come from `rand_distr::StandardNormal`
//! (ziggurat algorithm) driven by a `ChaCha8` stream cipher seeded with a
//! 64-bit seed, drawn row by row in a fixed order. Identical inputs produce
//! bit-identical path sets.

use crate::analytic::MarketParams;
use crate::error::{HedgeError, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

/// 64-bit seed for reproducible simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

/// A set of price trajectories on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSet {
    /// `n_paths` rows of `n_steps + 1` positive prices each.
    pub prices: Vec<Vec<f64>>,
    /// Years per step.
    pub dt: f64,
    /// True when every row has been divided by its own first element,
    /// so column 0 is all ones.
    pub t0_normalized: bool,
}

impl PathSet {
    pub fn n_paths(&self) -> usize {
        self.prices.len()
    }

    pub fn n_steps(&self) -> usize {
        self.prices.first().map_or(0, |r| r.len() - 1)
    }

    /// Divide each row by its first element.
    pub fn normalized(&self) -> PathSet {
        let prices = self
            .prices
            .iter()
            .map(|row| {
                let x0 = row[0];
                row.iter().map(|x| x / x0).collect()
            })
            .collect();
        PathSet {
            prices,
            dt: self.dt,
            t0_normalized: true,
        }
    }

    /// Write one row per path, with `dt` in a leading comment line.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path).map_err(|e| HedgeError::io(path, e))?;
        let mut buf = String::new();
        buf.push_str(&format!("# dt = {:.17e}\n", self.dt));
        for row in &self.prices {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.17e}")).collect();
            buf.push_str(&cells.join(","));
            buf.push('\n');
        }
        file.write_all(buf.as_bytes())
            .map_err(|e| HedgeError::io(path, e))
    }

    /// Read a path set previously written by [`PathSet::write_csv`].
    pub fn read_csv(path: &Path) -> Result<PathSet> {
        let file = std::fs::File::open(path).map_err(|e| HedgeError::io(path, e))?;
        let reader = BufReader::new(file);
        let mut dt = None;
        let mut prices: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| HedgeError::io(path, e))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("dt =") {
                    dt = Some(v.trim().parse::<f64>().map_err(|_| HedgeError::Csv {
                        path: path.to_path_buf(),
                        message: format!("bad dt value on line {}", lineno + 1),
                    })?);
                }
                continue;
            }
            let row: Vec<f64> = line
                .split(',')
                .map(|c| {
                    c.trim().parse::<f64>().map_err(|_| HedgeError::Csv {
                        path: path.to_path_buf(),
                        message: format!("non-numeric value on line {}", lineno + 1),
                    })
                })
                .collect::<Result<_>>()?;
            prices.push(row);
        }
        let dt = dt.ok_or_else(|| HedgeError::Csv {
            path: path.to_path_buf(),
            message: "missing '# dt = ...' header comment".into(),
        })?;
        let set = PathSet {
            t0_normalized: prices.iter().all(|r| r[0] == 1.0),
            prices,
            dt,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.prices.is_empty() {
            return Err(HedgeError::invalid("path set has no rows"));
        }
        let len = self.prices[0].len();
        if len < 2 {
            return Err(HedgeError::invalid("rows must have at least 2 points"));
        }
        if !(self.dt > 0.0) {
            return Err(HedgeError::invalid("dt must be > 0"));
        }
        for (i, row) in self.prices.iter().enumerate() {
            if row.len() != len {
                return Err(HedgeError::invalid(format!(
                    "row {i} has length {} but row 0 has length {len}",
                    row.len()
                )));
            }
            if row.iter().any(|x| !(*x > 0.0)) {
                return Err(HedgeError::invalid(format!(
                    "row {i} contains a non-positive price"
                )));
            }
            if self.t0_normalized && row[0] != 1.0 {
                return Err(HedgeError::invalid(format!(
                    "row {i} flagged t0-normalized but starts at {}",
                    row[0]
                )));
            }
        }
        Ok(())
    }
}

/// Annualized realized-volatility summary across the rows of a path set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolStats {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub std: f64,
}

/// Simulate GBM paths: `X_{i+1} = X_i * exp((mu - sigma^2/2)dt + sigma*sqrt(dt)*Z_i)`.
pub fn simulate_gbm(
    params: &MarketParams,
    n_steps: usize,
    n_paths: usize,
    seed: RngSeed,
) -> Result<PathSet> {
    if n_steps == 0 || n_paths == 0 {
        return Err(HedgeError::invalid(
            "n_steps and n_paths must both be at least 1",
        ));
    }
    let dt = params.maturity_t / n_steps as f64;
    let drift = (params.mu - 0.5 * params.sigma * params.sigma) * dt;
    let diffusion = params.sigma * dt.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed.0);
    let mut prices = Vec::with_capacity(n_paths);
    for _ in 0..n_paths {
        let mut row = Vec::with_capacity(n_steps + 1);
        row.push(params.s0);
        let mut x = params.s0;
        for _ in 0..n_steps {
            let z: f64 = StandardNormal.sample(&mut rng);
            x *= (drift + diffusion * z).exp();
            row.push(x);
        }
        prices.push(row);
    }
    Ok(PathSet {
        prices,
        dt,
        t0_normalized: params.s0 == 1.0,
    })
}

/// Slice `n_paths` overlapping windows of `window` steps (`window + 1`
/// points) out of one long series, advancing one observation at a time, each
/// row divided by its own first element.
pub fn overlapping_paths(series: &[f64], window: usize, n_paths: usize, dt: f64) -> Result<PathSet> {
    if window < 1 || n_paths < 1 {
        return Err(HedgeError::invalid("window and n_paths must be at least 1"));
    }
    let needed = window + n_paths;
    if series.len() < needed {
        return Err(HedgeError::invalid(format!(
            "series of length {} too short: {} windows of {} steps need at least {} points",
            series.len(),
            n_paths,
            window,
            needed
        )));
    }
    if series.iter().any(|x| !(*x > 0.0)) {
        return Err(HedgeError::invalid("series contains a non-positive price"));
    }
    let prices = (0..n_paths)
        .map(|j| {
            let base = series[j];
            series[j..=j + window].iter().map(|x| x / base).collect()
        })
        .collect();
    Ok(PathSet {
        prices,
        dt,
        t0_normalized: true,
    })
}

/// Annualized realized volatility of one row: mean-removed sample standard
/// deviation (n-1) of log-returns, divided by `sqrt(dt)`. Rows of length 2
/// are rejected because the estimator is undefined for a single return.
pub fn realized_vol(row: &[f64], dt: f64) -> Result<f64> {
    if row.len() < 3 {
        return Err(HedgeError::invalid(format!(
            "realized vol needs at least 2 log-returns, got a row of {} points",
            row.len()
        )));
    }
    let returns: Vec<f64> = row.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / (n - 1.0);
    Ok(var.sqrt() / dt.sqrt())
}

/// Min/max/mean/std of [`realized_vol`] over the rows of a path set.
pub fn vol_stats(paths: &PathSet) -> Result<VolStats> {
    if paths.n_paths() < 2 {
        return Err(HedgeError::invalid("vol_stats needs at least 2 paths"));
    }
    let vols: Vec<f64> = paths
        .prices
        .iter()
        .map(|row| realized_vol(row, paths.dt))
        .collect::<Result<_>>()?;
    let n = vols.len() as f64;
    let mean = vols.iter().sum::<f64>() / n;
    let var = vols.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let min = vols.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = vols.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(VolStats {
        min,
        max,
        mean,
        std: var.sqrt(),
    })
}

/// Read one positive-decimal price column from a headered CSV file.
/// Blank lines are skipped; a bad value is reported with its line number.
pub fn ingest_csv(file: &Path, column: &str) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_path(file)
        .map_err(|e| HedgeError::Csv {
            path: file.to_path_buf(),
            message: e.to_string(),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| HedgeError::Csv {
            path: file.to_path_buf(),
            message: e.to_string(),
        })?
        .clone();
    let col_idx = headers
        .iter()
        .position(|h| h.trim() == column)
        .ok_or_else(|| HedgeError::Csv {
            path: file.to_path_buf(),
            message: format!("column '{column}' not found in header"),
        })?;
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| HedgeError::Csv {
            path: file.to_path_buf(),
            message: e.to_string(),
        })?;
        // The csv reader skips fully empty lines on its own; a record with a
        // single empty field is what a stray blank line with separators
        // parses to, treat it the same way.
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let line = record.position().map_or(0, |p| p.line());
        let raw = record.get(col_idx).ok_or_else(|| HedgeError::Csv {
            path: file.to_path_buf(),
            message: format!("line {line}: missing column '{column}'"),
        })?;
        let value: f64 = raw.trim().parse().map_err(|_| HedgeError::Csv {
            path: file.to_path_buf(),
            message: format!("line {line}: value '{raw}' is not numeric"),
        })?;
        if !(value > 0.0) {
            return Err(HedgeError::Csv {
                path: file.to_path_buf(),
                message: format!("line {line}: value {value} is not positive"),
            });
        }
        values.push(value);
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::MarketParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};
    use std::io::Write;

    fn paper_params() -> MarketParams {
        MarketParams::new(1.0, 0.05, 0.2, 0.0, 0.25).unwrap()
    }

    #[test]
    fn degenerate_diffusion_is_constant() {
        let params = MarketParams {
            sigma: 1e-300,
            mu: 0.0,
            ..paper_params()
        };
        let paths = simulate_gbm(&params, 10, 4, RngSeed(7)).unwrap();
        for row in &paths.prices {
            for x in row {
                assert!((x - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn first_step_matches_rng_stream() {
        let params = paper_params();
        let paths = simulate_gbm(&params, 1, 1, RngSeed(42)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let z0: f64 = StandardNormal.sample(&mut rng);
        let dt = 0.25;
        let expected = (params.s0)
            * ((params.mu - 0.5 * params.sigma * params.sigma) * dt
                + params.sigma * dt.sqrt() * z0)
                .exp();
        assert_eq!(paths.prices[0][1], expected);
    }

    #[test]
    fn paper_scale_vol_stats() {
        let paths = simulate_gbm(&paper_params(), 30, 256, RngSeed(42)).unwrap();
        let stats = vol_stats(&paths).unwrap();
        assert!((stats.mean - 0.20).abs() < 0.015, "mean {}", stats.mean);
        assert!((stats.std - 0.0253).abs() < 0.010, "std {}", stats.std);
        assert!(stats.min <= stats.mean && stats.mean <= stats.max);
    }

    #[test]
    fn determinism_bit_identical() {
        let a = simulate_gbm(&paper_params(), 30, 16, RngSeed(5)).unwrap();
        let b = simulate_gbm(&paper_params(), 30, 16, RngSeed(5)).unwrap();
        assert_eq!(a, b);
        let c = simulate_gbm(&paper_params(), 30, 16, RngSeed(6)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn martingale_under_drift() {
        let params = paper_params();
        let n_paths = 100_000;
        let paths = simulate_gbm(&params, 4, n_paths, RngSeed(11)).unwrap();
        let terminal: Vec<f64> = paths.prices.iter().map(|r| r[r.len() - 1]).collect();
        let n = terminal.len() as f64;
        let mean = terminal.iter().sum::<f64>() / n;
        let var = terminal.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        let expected = (params.mu * params.maturity_t).exp();
        assert!(
            (mean - expected).abs() < 3.0 * se,
            "mean {mean} expected {expected} se {se}"
        );
    }

    #[test]
    fn realized_vol_converges_to_sigma() {
        let paths = simulate_gbm(&paper_params(), 10_000, 1, RngSeed(3)).unwrap();
        let rv = realized_vol(&paths.prices[0], paths.dt).unwrap();
        assert!((rv - 0.2).abs() / 0.2 < 0.02, "rv {rv}");
    }

    #[test]
    fn realized_vol_edge_cases() {
        assert_eq!(realized_vol(&[1.0, 1.0, 1.0], 1.0).unwrap(), 0.0);
        let e1 = 0.01f64.exp();
        let e2 = 0.02f64.exp();
        assert!(realized_vol(&[1.0, e1, e2], 1.0).unwrap().abs() < 1e-12);
        assert!(realized_vol(&[1.0, 0.05f64.exp()], 1.0).is_err());
    }

    #[test]
    fn overlapping_ratios() {
        let series = [1.0, 2.0, 4.0, 8.0];
        let paths = overlapping_paths(&series, 1, 3, 1.0).unwrap();
        for row in &paths.prices {
            assert_eq!(row, &vec![1.0, 2.0]);
        }
        let constant = [3.0; 10];
        let paths = overlapping_paths(&constant, 4, 6, 1.0).unwrap();
        for row in &paths.prices {
            assert!(row.iter().all(|x| *x == 1.0));
        }
    }

    #[test]
    fn overlapping_rejects_short_series() {
        let series = [1.0; 284];
        let err = overlapping_paths(&series, 30, 255, 0.25 / 30.0).unwrap_err();
        assert!(err.to_string().contains("285"), "{err}");
    }

    #[test]
    fn overlapping_reconstruction() {
        let paths = simulate_gbm(&paper_params(), 50, 1, RngSeed(9)).unwrap();
        let series = &paths.prices[0];
        let windows = overlapping_paths(series, 10, 20, paths.dt).unwrap();
        for (j, row) in windows.prices.iter().enumerate() {
            for (k, x) in row.iter().enumerate() {
                assert!((x * series[j] - series[j + k]).abs() < 1e-15 * series[j + k].abs() + 1e-300);
            }
        }
    }

    #[test]
    fn overlapping_simulated_vol_band() {
        // 285-point series at paper parameters, windows of 30 steps.
        let params = paper_params();
        // dt matches the 30-step hedging grid; the long series just carries
        // more observations at the same spacing.
        let dt = 0.25 / 30.0;
        let horizon = MarketParams {
            maturity_t: dt * 284.0,
            ..params
        };
        let series = simulate_gbm(&horizon, 284, 1, RngSeed(42)).unwrap();
        let windows = overlapping_paths(&series.prices[0], 30, 254, dt).unwrap();
        let stats = vol_stats(&windows).unwrap();
        assert!((stats.mean - 0.1943).abs() < 0.04, "mean {}", stats.mean);
    }

    #[test]
    fn vol_stats_constant_paths() {
        let paths = PathSet {
            prices: vec![vec![1.0; 5], vec![1.0; 5]],
            dt: 0.1,
            t0_normalized: true,
        };
        let stats = vol_stats(&paths).unwrap();
        assert_eq!(stats.mean, 0.0);
        assert_eq!(stats.std, 0.0);
        let one = PathSet {
            prices: vec![vec![1.0; 5]],
            dt: 0.1,
            t0_normalized: true,
        };
        assert!(vol_stats(&one).is_err());
    }

    #[test]
    fn finer_grid_tightens_vol_std() {
        let p30 = simulate_gbm(&paper_params(), 30, 256, RngSeed(42)).unwrap();
        let p90 = simulate_gbm(&paper_params(), 90, 256, RngSeed(42)).unwrap();
        let s30 = vol_stats(&p30).unwrap();
        let s90 = vol_stats(&p90).unwrap();
        assert!(s90.std < s30.std);
    }

    #[test]
    fn ingest_csv_roundtrip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("good.csv");
        std::fs::File::create(&good)
            .unwrap()
            .write_all(b"date,close\n2024-01-01,100\n\n2024-01-02,101\n2024-01-03,102\n")
            .unwrap();
        let series = ingest_csv(&good, "close").unwrap();
        assert_eq!(series, vec![100.0, 101.0, 102.0]);

        let bad = dir.path().join("bad.csv");
        std::fs::File::create(&bad)
            .unwrap()
            .write_all(b"close\n100\n-5\n")
            .unwrap();
        let err = ingest_csv(&bad, "close").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");

        assert!(ingest_csv(&good, "nope").is_err());
        assert!(ingest_csv(&dir.path().join("missing.csv"), "close").is_err());
    }

    #[test]
    fn pathset_csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("paths.csv");
        let paths = simulate_gbm(&paper_params(), 5, 3, RngSeed(1)).unwrap();
        paths.write_csv(&file).unwrap();
        let back = PathSet::read_csv(&file).unwrap();
        assert_eq!(paths, back);
    }
}
