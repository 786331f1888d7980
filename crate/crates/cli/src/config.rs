use std::collections::BTreeMap;
use std::str::FromStr;

use hbridge::bridges::TimeGrid;
use hbridge::measure_kernel::KernelId;

use crate::error::CliError;

/// Keys accepted in a config file and as `--flags`.
pub const KEYS: &[&str] = &[
    "command",
    "kernel",
    "a",
    "b",
    "x",
    "t",
    "y",
    "n",
    "seed",
    "tol",
    "alpha",
    "grid",
    "route",
    "permutations",
    "energy_n",
    "dt",
    "bins",
    "chain",
    "chain_b",
    "z_min",
    "z_max",
    "points",
    "out",
    "csv",
    "threads",
];

/// Parses `key = value` lines. `#` starts a comment; blank lines are skipped.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value, got {line:?}", lineno + 1)))?;
        let key = normalize_key(key.trim());
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("line {}: unknown key {key:?}", lineno + 1)));
        }
        out.insert(key, value.trim().to_string());
    }
    Ok(out)
}

fn normalize_key(key: &str) -> String {
    key.replace('-', "_")
}

/// Flag values layered over config-file values.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn new(file: BTreeMap<String, String>, flags: BTreeMap<String, String>) -> Self {
        let mut values = file;
        values.extend(flags);
        Settings { values }
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn all(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key).map(|v| v.parse::<T>().map_err(|e| CliError::Config(format!("{key} = {v:?}: {e}")))).transpose()
    }

    pub fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    pub fn kernel(&self, key: &str, default: Option<&str>) -> Result<KernelId, CliError> {
        let id =
            self.raw(key).or(default).ok_or_else(|| CliError::Config(format!("missing required kernel {key:?}")))?;
        id.parse::<KernelId>().map_err(|e| CliError::Config(format!("{key}: {e}")))
    }

    pub fn positive(&self, key: &str, default: f64) -> Result<f64, CliError> {
        let v: f64 = self.or(key, default)?;
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::Config(format!("{key} must be positive, got {v}")))
        }
    }

    pub fn count(&self, key: &str, default: usize) -> Result<usize, CliError> {
        let v: usize = self.or(key, default)?;
        if v >= 1 {
            Ok(v)
        } else {
            Err(CliError::Config(format!("{key} must be at least 1")))
        }
    }

    /// `grid` is either an interval count (`8`) or explicit comma-separated
    /// times starting at 0 and ending at `t`.
    pub fn grid(&self, t: f64, default_intervals: usize) -> Result<TimeGrid, CliError> {
        let spec = self.raw("grid").map(str::trim);
        let grid = match spec {
            None => TimeGrid::uniform(default_intervals, t),
            Some(s) if !s.contains(',') => {
                let n: usize = s.parse().map_err(|_| CliError::Config(format!("grid = {s:?}: not a count")))?;
                TimeGrid::uniform(n, t)
            }
            Some(s) => {
                let times = s
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| CliError::Config(format!("grid = {s:?}: not a list of times")))?;
                TimeGrid::new(times, t)
            }
        };
        grid.map_err(|e| CliError::Config(format!("grid: {e}")))
    }
}
