//! Structured outcome of one verification suite.

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extrema {
    pub min: f64,
    pub max: f64,
}

impl Extrema {
    pub fn empty() -> Self {
        Self { min: f64::INFINITY, max: f64::NEG_INFINITY }
    }

    pub fn observe(&mut self, x: f64) {
        self.min = self.min.min(x);
        self.max = self.max.max(x);
    }

    pub fn merge(&mut self, other: &Extrema) {
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
    }

    pub fn is_finite(&self) -> bool {
        self.min.is_finite() && self.max.is_finite()
    }

    /// `max / min`, infinite when `min <= 0`.
    pub fn spread(&self) -> f64 {
        if self.min > 0.0 {
            self.max / self.min
        } else {
            f64::INFINITY
        }
    }
}

impl Default for Extrema {
    fn default() -> Self {
        Self::empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FittedConstants {
    pub c: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub suite_name: String,
    pub n: usize,
    pub params: BTreeMap<String, Value>,
    pub samples: u64,
    pub extrema: Extrema,
    pub fitted_constants: Option<FittedConstants>,
    pub violations: u64,
    pub inconclusive: u64,
    /// Secondary measurements, keyed by name.
    pub metrics: BTreeMap<String, f64>,
    pub pass: bool,
}

impl VerificationReport {
    pub fn new(suite_name: &str, n: usize) -> Self {
        Self {
            suite_name: suite_name.to_string(),
            n,
            params: BTreeMap::new(),
            samples: 0,
            extrema: Extrema::empty(),
            fitted_constants: None,
            violations: 0,
            inconclusive: 0,
            metrics: BTreeMap::new(),
            pass: false,
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn metric(&mut self, key: &str, value: f64) {
        self.metrics.insert(key.to_string(), value);
    }

    /// Sets `pass`; the suite-specific `criterion` is combined with zero
    /// violations, finite extrema and the inconclusive allowance.
    pub fn finish(mut self, criterion: bool, inconclusive_fraction: f64) -> Self {
        let allowed = (inconclusive_fraction * self.samples as f64).floor() as u64;
        self.pass = criterion && self.violations == 0 && self.extrema.is_finite() && self.inconclusive <= allowed;
        self
    }
}
