//! Flat `key = value` configuration files.
//!
//! ```text
//! # defaults reproduce the synthetic study
//! zipf.universe_m = 64
//! zipf.exponent_alpha = 1.2
//! k_b_grid = 2, 4, 6, 8, 10, 12, 16
//! policies = belady, lru, lfu, fifo, random
//! seeds = 42..51
//! ```
//!
//! Lists are comma-separated; `seeds` also accepts an inclusive range
//! `a..b`. Unknown keys are rejected with their line number.

use std::path::PathBuf;
use std::str::FromStr;

use crate::cache::PolicyKind;
use crate::error::{Error, Result};
use crate::trace::ZipfSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub zipf: ZipfSpec,
    pub k_b_grid: Vec<usize>,
    pub beta_grid: Vec<f64>,
    pub policies: Vec<PolicyKind>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Capacity used by the bound checks and the fig4 study.
    pub check_k_b: usize,
    pub rho_grid: Vec<f64>,
    pub p_grid: Vec<f64>,
    pub adversarial_k_b_grid: Vec<usize>,
    pub beta_true_grid: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            zipf: ZipfSpec::default(),
            k_b_grid: vec![2, 4, 6, 8, 10, 12, 16],
            beta_grid: vec![0.0, 0.02, 0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5],
            policies: PolicyKind::BASELINES.to_vec(),
            seeds: (42..=51).collect(),
            output_dir: PathBuf::from("out"),
            check_k_b: 8,
            rho_grid: vec![0.8, 0.9, 0.95, 1.0],
            p_grid: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            adversarial_k_b_grid: vec![2, 4, 8],
            beta_true_grid: vec![0.0, 0.1, 0.2, 0.4],
        }
    }
}

fn list<T: FromStr>(value: &str) -> std::result::Result<Vec<T>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| format!("cannot parse `{s}`")))
        .collect()
}

fn seeds(value: &str) -> std::result::Result<Vec<u64>, String> {
    if let Some((a, b)) = value.split_once("..") {
        let a: u64 = a
            .trim()
            .parse()
            .map_err(|_| format!("bad range start `{a}`"))?;
        let b: u64 = b
            .trim()
            .parse()
            .map_err(|_| format!("bad range end `{b}`"))?;
        if a > b {
            return Err(format!("empty seed range {a}..{b}"));
        }
        Ok((a..=b).collect())
    } else {
        list(value)
    }
}

fn scalar<T: FromStr>(value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("cannot parse `{value}`"))
}

impl ExperimentConfig {
    /// Parses a config file over the defaults. `source` labels diagnostics.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::parse(
                    source,
                    line_no,
                    format!("expected `key = value`, got `{line}`"),
                )
            })?;
            let (key, value) = (key.trim(), value.trim());
            let set = |r: std::result::Result<(), String>| {
                r.map_err(|m| Error::parse(source, line_no, format!("key `{key}`: {m}")))
            };
            match key {
                "zipf.universe_m" => set(scalar(value).map(|v| cfg.zipf.universe_m = v))?,
                "zipf.exponent_alpha" => set(scalar(value).map(|v| cfg.zipf.exponent_alpha = v))?,
                "zipf.hot_set_size" => set(scalar(value).map(|v| cfg.zipf.hot_set_size = v))?,
                "zipf.shift_interval" => set(scalar(value).map(|v| cfg.zipf.shift_interval = v))?,
                "zipf.length_t" => set(scalar(value).map(|v| cfg.zipf.length_t = v))?,
                "k_b_grid" => set(list(value).map(|v| cfg.k_b_grid = v))?,
                "beta_grid" => set(list(value).map(|v| cfg.beta_grid = v))?,
                "policies" => set(list(value).map(|v| cfg.policies = v))?,
                "seeds" => set(seeds(value).map(|v| cfg.seeds = v))?,
                "output_dir" => cfg.output_dir = PathBuf::from(value),
                "check.k_b" => set(scalar(value).map(|v| cfg.check_k_b = v))?,
                "check.rho_grid" => set(list(value).map(|v| cfg.rho_grid = v))?,
                "check.p_grid" => set(list(value).map(|v| cfg.p_grid = v))?,
                "check.adversarial_k_b_grid" => {
                    set(list(value).map(|v| cfg.adversarial_k_b_grid = v))?
                }
                "check.beta_true_grid" => set(list(value).map(|v| cfg.beta_true_grid = v))?,
                other => {
                    return Err(Error::parse(
                        source,
                        line_no,
                        format!("unknown key `{other}`"),
                    ))
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.zipf.validate()?;
        let grids = [
            ("k_b_grid", self.k_b_grid.is_empty()),
            ("beta_grid", self.beta_grid.is_empty()),
            ("policies", self.policies.is_empty()),
            ("seeds", self.seeds.is_empty()),
            ("check.rho_grid", self.rho_grid.is_empty()),
            ("check.p_grid", self.p_grid.is_empty()),
            (
                "check.adversarial_k_b_grid",
                self.adversarial_k_b_grid.is_empty(),
            ),
            ("check.beta_true_grid", self.beta_true_grid.is_empty()),
        ];
        if let Some((name, _)) = grids.iter().find(|(_, empty)| *empty) {
            return Err(Error::config(format!("`{name}` must not be empty")));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            return Err(Error::config("`seeds` must be distinct"));
        }
        if self.k_b_grid.contains(&0)
            || self.check_k_b == 0
            || self.adversarial_k_b_grid.contains(&0)
        {
            return Err(Error::config("cache capacities must be at least 1"));
        }
        let unit = |name: &str, grid: &[f64]| {
            if grid.iter().all(|v| (0.0..=1.0).contains(v)) {
                Ok(())
            } else {
                Err(Error::config(format!("`{name}` values must lie in [0, 1]")))
            }
        };
        unit("beta_grid", &self.beta_grid)?;
        unit("check.rho_grid", &self.rho_grid)?;
        unit("check.p_grid", &self.p_grid)?;
        unit("check.beta_true_grid", &self.beta_true_grid)?;
        for p in &self.policies {
            p.validate()?;
        }
        Ok(())
    }
}
