//! Flat key=value run configuration, mirroring the simulation parameter
//! listing: explicit keys, no nesting, unknown keys rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{HedgeError, Result};

/// How the training set is constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Independently simulated paths.
    Independent,
    /// Overlapping windows sliced from one long series.
    Overlapping,
}

/// Where the price data comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Simulated,
    Csv { file: PathBuf, column: String },
}

/// A parsed run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub s0: f64,
    pub mu: f64,
    pub sigma: f64,
    pub maturity_t: f64,
    pub steps: usize,
    pub num_paths: usize,
    /// Training seed; the `--seed` flag overrides it.
    pub seed_value: u64,
    pub tc: f64,
    pub r: f64,
    // Optional keys with defaults below.
    pub test_seed: u64,
    pub alphas: Vec<f64>,
    pub mode: Mode,
    pub source: DataSource,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub strike: f64,
    /// Points in the long source series for overlapping mode.
    pub series_len: usize,
    pub out_dir: Option<PathBuf>,
}

const REQUIRED_KEYS: [&str; 9] = [
    "S0",
    "mu",
    "sigma",
    "T",
    "steps",
    "num_paths",
    "seed_value",
    "tc",
    "r",
];

const OPTIONAL_KEYS: [&str; 11] = [
    "test_seed",
    "alphas",
    "mode",
    "source",
    "csv_file",
    "csv_column",
    "epochs",
    "batch_size",
    "lr",
    "strike",
    "series_len",
];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| HedgeError::config(format!("key '{key}': cannot parse '{value}'")))
}

impl RunConfig {
    /// Parse `key = value` lines. Blank lines and `#` comments are ignored;
    /// every required key must appear and unknown keys are errors.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                HedgeError::config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let key = key.trim().to_string();
            if !REQUIRED_KEYS.contains(&key.as_str()) && !OPTIONAL_KEYS.contains(&key.as_str()) {
                return Err(HedgeError::config(format!(
                    "line {}: unknown key '{key}'",
                    lineno + 1
                )));
            }
            if map.insert(key.clone(), value.trim().to_string()).is_some() {
                return Err(HedgeError::config(format!(
                    "line {}: duplicate key '{key}'",
                    lineno + 1
                )));
            }
        }
        for key in REQUIRED_KEYS {
            if !map.contains_key(key) {
                return Err(HedgeError::config(format!("missing required key '{key}'")));
            }
        }

        let get = |k: &str| map.get(k).expect("required key present").as_str();
        let steps: usize = parse_num("steps", get("steps"))?;
        let seed_value: u64 = parse_num("seed_value", get("seed_value"))?;
        let test_seed = match map.get("test_seed") {
            Some(v) => parse_num("test_seed", v)?,
            None => seed_value.wrapping_add(1000),
        };
        let alphas = match map.get("alphas") {
            Some(v) => v
                .split(',')
                .map(|a| parse_num("alphas", a.trim()))
                .collect::<Result<Vec<f64>>>()?,
            None => vec![0.0, 0.002, 0.005, 0.01, 0.02],
        };
        let mode = match map.get("mode").map(String::as_str) {
            None | Some("independent") => Mode::Independent,
            Some("overlapping") => Mode::Overlapping,
            Some(other) => {
                return Err(HedgeError::config(format!(
                    "key 'mode': expected 'independent' or 'overlapping', got '{other}'"
                )))
            }
        };
        let source = match map.get("source").map(String::as_str) {
            None | Some("simulated") => DataSource::Simulated,
            Some("csv") => {
                let file = map.get("csv_file").ok_or_else(|| {
                    HedgeError::config("source = csv requires key 'csv_file'")
                })?;
                let column = map
                    .get("csv_column")
                    .cloned()
                    .unwrap_or_else(|| "close".to_string());
                DataSource::Csv {
                    file: PathBuf::from(file),
                    column,
                }
            }
            Some(other) => {
                return Err(HedgeError::config(format!(
                    "key 'source': expected 'simulated' or 'csv', got '{other}'"
                )))
            }
        };
        let series_len = match map.get("series_len") {
            Some(v) => parse_num("series_len", v)?,
            None => steps + 255,
        };

        let cfg = RunConfig {
            s0: parse_num("S0", get("S0"))?,
            mu: parse_num("mu", get("mu"))?,
            sigma: parse_num("sigma", get("sigma"))?,
            maturity_t: parse_num("T", get("T"))?,
            steps,
            num_paths: parse_num("num_paths", get("num_paths"))?,
            seed_value,
            tc: parse_num("tc", get("tc"))?,
            r: parse_num("r", get("r"))?,
            test_seed,
            alphas,
            mode,
            source,
            epochs: match map.get("epochs") {
                Some(v) => parse_num("epochs", v)?,
                None => 500,
            },
            batch_size: match map.get("batch_size") {
                Some(v) => parse_num("batch_size", v)?,
                None => 64,
            },
            lr: match map.get("lr") {
                Some(v) => parse_num("lr", v)?,
                None => 1e-3,
            },
            strike: match map.get("strike") {
                Some(v) => parse_num("strike", v)?,
                None => 1.0,
            },
            series_len,
            out_dir: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| HedgeError::io(path, e))?;
        RunConfig::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s0 > 0.0) {
            return Err(HedgeError::config("S0 must be > 0"));
        }
        if !(self.sigma > 0.0) {
            return Err(HedgeError::config("sigma must be > 0"));
        }
        if !(self.maturity_t > 0.0) {
            return Err(HedgeError::config("T must be > 0"));
        }
        if self.steps < 2 {
            return Err(HedgeError::config("steps must be at least 2"));
        }
        if self.num_paths < 2 {
            return Err(HedgeError::config("num_paths must be at least 2"));
        }
        if !(0.0..1.0).contains(&self.tc) {
            return Err(HedgeError::config("tc must satisfy 0 <= tc < 1"));
        }
        if self.alphas.iter().any(|a| *a < 0.0) {
            return Err(HedgeError::config("alphas must be nonnegative"));
        }
        if self.seed_value == self.test_seed {
            return Err(HedgeError::config(
                "seed_value and test_seed must differ: train and test sets may not share a seed",
            ));
        }
        if self.batch_size < 2 {
            return Err(HedgeError::config("batch_size must be at least 2"));
        }
        if !(self.strike > 0.0) {
            return Err(HedgeError::config("strike must be > 0"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
# market
S0 = 1.0
mu = 0.05
sigma = 0.2
T = 0.25
steps = 30
num_paths = 256
seed_value = 42
tc = 0.02
r = 0.0
";

    #[test]
    fn parses_minimal_config_with_defaults() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.steps, 30);
        assert_eq!(cfg.seed_value, 42);
        assert_eq!(cfg.test_seed, 1042);
        assert_eq!(cfg.alphas, vec![0.0, 0.002, 0.005, 0.01, 0.02]);
        assert_eq!(cfg.mode, Mode::Independent);
        assert_eq!(cfg.source, DataSource::Simulated);
        assert_eq!(cfg.epochs, 500);
        assert_eq!(cfg.batch_size, 64);
        assert_eq!(cfg.series_len, 285);
    }

    #[test]
    fn rejects_unknown_key() {
        let text = format!("{MINIMAL}volatility = 0.3\n");
        let err = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("unknown key 'volatility'"), "{err}");
    }

    #[test]
    fn rejects_missing_key() {
        let text = MINIMAL.replace("mu = 0.05\n", "");
        let err = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("missing required key 'mu'"), "{err}");
    }

    #[test]
    fn rejects_duplicate_and_bad_values() {
        let dup = format!("{MINIMAL}steps = 60\n");
        assert!(RunConfig::parse(&dup).is_err());
        let bad = MINIMAL.replace("steps = 30", "steps = many");
        assert!(RunConfig::parse(&bad).is_err());
    }

    #[test]
    fn rejects_coinciding_seeds() {
        let text = format!("{MINIMAL}test_seed = 42\n");
        let err = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("must differ"), "{err}");
    }

    #[test]
    fn parses_overlapping_and_csv_source() {
        let text = format!(
            "{MINIMAL}mode = overlapping\nsource = csv\ncsv_file = prices.csv\ncsv_column = px\nseries_len = 300\n"
        );
        let cfg = RunConfig::parse(&text).unwrap();
        assert_eq!(cfg.mode, Mode::Overlapping);
        assert_eq!(
            cfg.source,
            DataSource::Csv {
                file: PathBuf::from("prices.csv"),
                column: "px".to_string()
            }
        );
        assert_eq!(cfg.series_len, 300);
    }

    #[test]
    fn csv_source_requires_file() {
        let text = format!("{MINIMAL}source = csv\n");
        assert!(RunConfig::parse(&text).is_err());
    }
}
