//! Run configuration: defaults, flat key = value config files, CLI overrides,
//! and the reproducibility manifest.
//!
//! Config grammar: one `key = value` pair per line, `#` starts a comment,
//! blank lines ignored. Keys are listed in the README. CLI flags override
//! file values; file values override defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use tei_core::panel::{CsvSchema, DummyRules, DEFAULT_CENSOR_TOL};
use tei_core::{Error, Result};

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub schema: CsvSchema,
    pub het: bool,
    pub trend_squared: bool,
    pub dummies: bool,
    pub clamp_tei: bool,
    pub charts: bool,
    pub censor_tol: f64,
    pub rules: DummyRules,
    pub seed: u64,
    pub reps: usize,
    pub n_firms: usize,
    pub n_years: usize,
    pub base_year: i32,
    pub sigma: f64,
    pub censor_target: Option<f64>,
    pub n_european: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            out_dir: PathBuf::from("out"),
            schema: CsvSchema::default(),
            het: true,
            trend_squared: false,
            dummies: true,
            clamp_tei: false,
            charts: false,
            censor_tol: DEFAULT_CENSOR_TOL,
            rules: DummyRules::default(),
            seed: 42,
            reps: 1,
            n_firms: 19,
            n_years: 10,
            base_year: 2012,
            sigma: 0.05,
            censor_target: None,
            n_european: 6,
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::InvalidData(format!("config key `{key}`: expected a boolean, got `{v}`"))),
    }
}

fn parse_year_range(key: &str, v: &str) -> Result<std::ops::RangeInclusive<i32>> {
    let (a, b) = v
        .split_once('-')
        .ok_or_else(|| Error::InvalidData(format!("config key `{key}`: expected YYYY-YYYY, got `{v}`")))?;
    let lo: i32 = a.trim().parse().map_err(|_| {
        Error::InvalidData(format!("config key `{key}`: bad year `{a}`"))
    })?;
    let hi: i32 = b.trim().parse().map_err(|_| {
        Error::InvalidData(format!("config key `{key}`: bad year `{b}`"))
    })?;
    Ok(lo..=hi)
}

/// Read a flat key = value file into a map, rejecting malformed lines.
pub fn read_kv_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidData(format!(
                "{}:{}: expected `key = value`",
                path.display(),
                lineno + 1
            ))
        })?;
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}

impl RunConfig {
    /// Apply a config file on top of the current values. A relative `input`
    /// resolves against the config file's directory.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let map = read_kv_file(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for (key, value) in &map {
            match key.as_str() {
                "input" => {
                    let p = PathBuf::from(value);
                    self.input = Some(if p.is_relative() { base.join(p) } else { p });
                }
                "out_dir" => self.out_dir = PathBuf::from(value),
                "firm_col" => self.schema.firm = value.clone(),
                "year_col" => self.schema.year = value.clone(),
                "lf_col" => self.schema.lf = value.clone(),
                "output_col" => self.schema.output = value.clone(),
                "input_cols" => {
                    self.schema.inputs =
                        value.split(',').map(|s| s.trim().to_string()).collect();
                }
                "het" => self.het = parse_bool(key, value)?,
                "trend_squared" => self.trend_squared = parse_bool(key, value)?,
                "dummies" => self.dummies = parse_bool(key, value)?,
                "clamp_tei" => self.clamp_tei = parse_bool(key, value)?,
                "charts" => self.charts = parse_bool(key, value)?,
                "censor_tol" => {
                    self.censor_tol = value.parse().map_err(|_| {
                        Error::InvalidData(format!("config key `censor_tol`: bad number `{value}`"))
                    })?;
                }
                "brexit_firms" => {
                    self.rules.brexit_firms = value
                        .split(',')
                        .map(|s| s.trim().to_string())
                        .filter(|s| !s.is_empty())
                        .collect();
                }
                "brexit_years" => self.rules.brexit_years = parse_year_range(key, value)?,
                "covid_years" => self.rules.covid_years = parse_year_range(key, value)?,
                "seed" => {
                    self.seed = value.parse().map_err(|_| {
                        Error::InvalidData(format!("config key `seed`: bad integer `{value}`"))
                    })?;
                }
                "reps" => {
                    self.reps = value.parse().map_err(|_| {
                        Error::InvalidData(format!("config key `reps`: bad integer `{value}`"))
                    })?;
                }
                "n_firms" => {
                    self.n_firms = value.parse().map_err(|_| {
                        Error::InvalidData(format!("config key `n_firms`: bad integer `{value}`"))
                    })?;
                }
                "n_years" => {
                    self.n_years = value.parse().map_err(|_| {
                        Error::InvalidData(format!("config key `n_years`: bad integer `{value}`"))
                    })?;
                }
                "base_year" => {
                    self.base_year = value.parse().map_err(|_| {
                        Error::InvalidData(format!("config key `base_year`: bad integer `{value}`"))
                    })?;
                }
                "sigma" => {
                    self.sigma = value.parse().map_err(|_| {
                        Error::InvalidData(format!("config key `sigma`: bad number `{value}`"))
                    })?;
                }
                "censor_target" => {
                    self.censor_target = if value.is_empty() || value == "none" {
                        None
                    } else {
                        Some(value.parse().map_err(|_| {
                            Error::InvalidData(format!(
                                "config key `censor_target`: bad number `{value}`"
                            ))
                        })?)
                    };
                }
                "n_european" => {
                    self.n_european = value.parse().map_err(|_| {
                        Error::InvalidData(format!("config key `n_european`: bad integer `{value}`"))
                    })?;
                }
                other => {
                    return Err(Error::InvalidData(format!(
                        "{}: unknown config key `{other}`",
                        path.display()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// FNV-1a 64-bit hash of a byte stream, hex encoded.
pub fn fnv1a64_hex(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}
