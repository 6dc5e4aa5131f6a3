use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::ValueEnum;
use serde::Serialize;
use thiserror::Error;

use crate::kernel::{default_k_max, K_MAX_LIMIT};
use crate::linalg::MAX_DIM;

pub const SCHEMA_VERSION: u32 = 1;

/// Largest number of values a single `--grid` may expand to.
pub const MAX_GRID_LEN: usize = 10_000;
/// Largest accepted budget value.
pub const MAX_BUDGET: u64 = 1_000_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid --grid '{spec}': {reason}")]
    Grid { spec: String, reason: String },
    #[error("invalid --budget '{spec}': {reason}")]
    Budget { spec: String, reason: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

fn steps(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    (0..=count).map(|i| round12(start + i as f64 * step)).collect()
}

/// Rounds to 12 decimals so that `0:0.95:0.05` yields `0.35`, not `0.35000000000000003`.
fn round12(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

/// Grids and their defaults. Values are `|z|`, radii or `delta`.
pub fn default_grids() -> BTreeMap<String, Vec<f64>> {
    let grids: [(&str, Vec<f64>); 12] = [
        ("z", vec![0.0, 0.5, 0.9]),
        ("r", vec![0.02, 0.05, 0.08]),
        ("delta", vec![0.05]),
        ("local_z", vec![0.0, 0.5, 0.9, 0.98]),
        ("local_r", vec![0.05]),
        ("smvp_z", vec![0.0, 0.25, 0.5, 0.7, 0.9]),
        ("smvp_r", vec![0.05]),
        ("diag", steps(0.0, 0.95, 0.05)),
        ("radial", steps(0.0, 0.98, 0.02)),
        ("volume_z", vec![0.2, 0.4, 0.6, 0.8, 0.9]),
        ("volume_r", vec![0.05]),
        ("reproducing_z", vec![0.0, 0.4, 0.7]),
    ];
    grids.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

/// Budgets and their defaults for dimension `n`.
pub fn default_budgets(n: usize) -> BTreeMap<String, u64> {
    let budgets: [(&str, u64); 20] = [
        ("samples", 10_000),
        ("bracket", 20),
        ("metric_samples", 1000),
        ("fd_points", 100),
        ("dual_trials", 200),
        ("lipschitz_pairs", 1000),
        ("volume_samples", 20_000),
        ("k_max", default_k_max(n.clamp(1, MAX_DIM)) as u64),
        ("kmax_limit", K_MAX_LIMIT as u64),
        ("cs_pairs", 200),
        ("quad_panels", 100),
        ("quad_angles", 256),
        ("identity_pairs", 10_000),
        ("local_samples", 10_000),
        ("smvp_samples", 100_000),
        ("smvp_trials", 8),
        ("bump_points", 10_000),
        ("cutoff_samples", 2000),
        ("pairs", 300),
        ("inconclusive_permille", 1000),
    ];
    budgets.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name.len() <= 64
        && name.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
}

fn parse_number(text: &str) -> Option<f64> {
    let t = text.trim();
    if t.is_empty() || t.len() > 64 {
        return None;
    }
    t.parse::<f64>().ok().filter(|x| x.is_finite())
}

/// Parses `name=v1,v2,...` or `name=start:stop:step` (stop inclusive).
/// Values must be finite and in `[0, 1)`.
pub fn parse_grid(spec: &str) -> Result<(String, Vec<f64>), ConfigError> {
    let fail = |reason: &str| ConfigError::Grid { spec: spec.to_string(), reason: reason.to_string() };
    let (name, body) = spec.split_once('=').ok_or_else(|| fail("expected name=values"))?;
    let name = name.trim();
    if !valid_name(name) {
        return Err(fail("grid name must match [a-z0-9_]+"));
    }
    let body = body.trim();
    let values = if body.contains(':') {
        let parts: Vec<&str> = body.split(':').collect();
        let [a, b, c] = parts[..] else {
            return Err(fail("range must be start:stop:step"));
        };
        let (start, stop, step) = match (parse_number(a), parse_number(b), parse_number(c)) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(fail("range bounds must be finite numbers")),
        };
        if !(step > 0.0) || stop < start {
            return Err(fail("range needs step > 0 and stop >= start"));
        }
        if (stop - start) / step >= MAX_GRID_LEN as f64 {
            return Err(fail("range expands to too many values"));
        }
        steps(start, stop, step)
    } else {
        body.split(',').map(|v| parse_number(v).ok_or_else(|| fail("values must be finite numbers"))).collect::<Result<Vec<_>, _>>()?
    };
    if values.is_empty() || values.len() > MAX_GRID_LEN {
        return Err(fail("grid must hold between 1 and 10000 values"));
    }
    if let Some(v) = values.iter().find(|v| !(0.0..1.0).contains(*v)) {
        return Err(fail(&format!("value {v} outside [0, 1)")));
    }
    Ok((name.to_string(), values))
}

/// Parses `name=N` with `N` a decimal integer, optionally suffixed `k` (10^3) or `M` (10^6).
pub fn parse_budget(spec: &str) -> Result<(String, u64), ConfigError> {
    let fail = |reason: &str| ConfigError::Budget { spec: spec.to_string(), reason: reason.to_string() };
    let (name, value) = spec.split_once('=').ok_or_else(|| fail("expected name=count"))?;
    let name = name.trim();
    if !valid_name(name) {
        return Err(fail("budget name must match [a-z0-9_]+"));
    }
    let value = value.trim();
    let (digits, mult) = match value.as_bytes().last() {
        Some(b'k') => (&value[..value.len() - 1], 1_000),
        Some(b'M') => (&value[..value.len() - 1], 1_000_000),
        _ => (value, 1),
    };
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(fail("count must be a non-negative integer"));
    }
    let count = digits
        .parse::<u64>()
        .ok()
        .and_then(|v| v.checked_mul(mult))
        .filter(|v| *v <= MAX_BUDGET)
        .ok_or_else(|| fail("count exceeds 10^9"))?;
    Ok((name.to_string(), count))
}

/// Everything that determines a run; embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub n: usize,
    pub seed: u64,
    pub radius_cap: f64,
    pub grids: BTreeMap<String, Vec<f64>>,
    pub budgets: BTreeMap<String, u64>,
    pub output_dir: PathBuf,
    pub format: Format,
}

impl RunConfig {
    /// Defaults overridden by `grid_specs` and `budget_specs`; rejects unknown names.
    pub fn build(
        n: usize,
        seed: u64,
        radius_cap: f64,
        grid_specs: &[String],
        budget_specs: &[String],
        output_dir: PathBuf,
        format: Format,
    ) -> Result<Self, ConfigError> {
        if !(1..=MAX_DIM).contains(&n) {
            return Err(ConfigError::Invalid(format!("--n {n} outside 1..={MAX_DIM}")));
        }
        if !(radius_cap > 0.0 && radius_cap < 1.0) {
            return Err(ConfigError::Invalid(format!("--radius-cap {radius_cap} not in (0, 1)")));
        }
        let mut grids = default_grids();
        // defaults are clipped to the cap; explicit grids are validated strictly
        for values in grids.values_mut() {
            values.retain(|v| *v < radius_cap);
        }
        for spec in grid_specs.iter().filter(|s| !s.trim().is_empty()) {
            let (name, values) = parse_grid(spec)?;
            match grids.get_mut(&name) {
                Some(slot) => *slot = values,
                None => return Err(ConfigError::Invalid(format!("unknown grid '{name}'"))),
            }
        }
        let mut budgets = default_budgets(n);
        for spec in budget_specs.iter().filter(|s| !s.trim().is_empty()) {
            let (name, value) = parse_budget(spec)?;
            match budgets.get_mut(&name) {
                Some(slot) => *slot = value,
                None => return Err(ConfigError::Invalid(format!("unknown budget '{name}'"))),
            }
        }
        let cfg = RunConfig { n, seed, radius_cap, grids, budgets, output_dir, format };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, values) in &self.grids {
            if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && **v < self.radius_cap)) {
                return Err(ConfigError::Invalid(format!(
                    "grid '{name}' value {v} not in [0, radius_cap = {})",
                    self.radius_cap
                )));
            }
        }
        if self.budget("inconclusive_permille") > 1000 {
            return Err(ConfigError::Invalid("inconclusive_permille exceeds 1000".into()));
        }
        Ok(())
    }

    pub fn grid(&self, name: &str) -> &[f64] {
        self.grids.get(name).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn budget(&self, name: &str) -> u64 {
        self.budgets.get(name).copied().unwrap_or(0)
    }

    pub fn count(&self, name: &str) -> usize {
        usize::try_from(self.budget(name)).unwrap_or(usize::MAX)
    }
}
