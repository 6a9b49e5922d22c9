//! Scenario configuration and its plain-text grammar.
//!
//! One `key = value` pair per line, `#` starts a comment. Lists are comma
//! separated or given as an inclusive range `start:step:end`:
//!
//! ```text
//! mode = deterministic        # or hybrid
//! taps = 3
//! pilot_length = 1024
//! snr1_db = -21
//! tap_offsets_db = 0, -3, -6
//! alpha_grid = 0:0.05:1
//! trials = 1000
//! seed = 7
//! pilot_policy = fixed-per-scenario   # or redrawn-per-trial
//! snr_ladder_db = -21, -6, -3
//! expectation = quasi-random          # monte-carlo, quadrature, closed-form-linear
//! expectation_samples = 10000
//! ```
//!
//! Keys left out keep their defaults. If `taps` is set without
//! `tap_offsets_db`, the offsets default to `0, -3, -6, ...` dB.

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::hybrid::{ExpectationMethod, PriorExpectationConfig};
use crate::signal::GaussianPrior;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Fixed taps `h_k = +sqrt(SNR_k)`.
    Deterministic,
    /// Taps drawn from `N(0, diag(SNR_k))`.
    Hybrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PilotPolicy {
    FixedPerScenario,
    RedrawnPerTrial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub taps: usize,
    pub pilot_length: usize,
    pub snr1_db: f64,
    pub tap_offsets_db: Vec<f64>,
    pub alpha_grid: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub pilot_policy: PilotPolicy,
    /// First-tap SNRs for the loss tables.
    pub snr_ladder_db: Vec<f64>,
    pub expectation: ExpectationMethod,
    pub expectation_samples: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            mode: Mode::Deterministic,
            taps: 3,
            pilot_length: 1024,
            snr1_db: -21.0,
            tap_offsets_db: default_offsets(3),
            alpha_grid: range(0.0, 0.05, 1.0).unwrap(),
            trials: 1000,
            seed: 0,
            pilot_policy: PilotPolicy::FixedPerScenario,
            snr_ladder_db: vec![-21.0, -6.0, -3.0],
            expectation: ExpectationMethod::QuasiRandom,
            expectation_samples: 10_000,
        }
    }
}

/// `0, -3, -6, ...` dB relative to the first tap.
pub fn default_offsets(taps: usize) -> Vec<f64> {
    (0..taps).map(|k| -3.0 * k as f64).collect()
}

const KEYS: [&str; 12] = [
    "mode",
    "taps",
    "pilot_length",
    "snr1_db",
    "tap_offsets_db",
    "alpha_grid",
    "trials",
    "seed",
    "pilot_policy",
    "snr_ladder_db",
    "expectation",
    "expectation_samples",
];

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.taps == 0 {
            return Err(Error::invalid("taps", "must be at least 1"));
        }
        if self.pilot_length < 2 * self.taps || self.pilot_length % 2 != 0 {
            return Err(Error::invalid(
                "pilot_length",
                format!(
                    "{} must be even and at least twice the tap count",
                    self.pilot_length
                ),
            ));
        }
        if !self.snr1_db.is_finite() {
            return Err(Error::invalid("snr1_db", "not finite"));
        }
        if self.tap_offsets_db.len() != self.taps {
            return Err(Error::invalid(
                "tap_offsets_db",
                format!(
                    "{} offsets for {} taps",
                    self.tap_offsets_db.len(),
                    self.taps
                ),
            ));
        }
        if self.tap_offsets_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("tap_offsets_db", "not finite"));
        }
        if self.alpha_grid.is_empty() || self.alpha_grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("alpha_grid", "empty or not finite"));
        }
        if self.alpha_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("alpha_grid", "must be strictly ascending"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        if self.snr_ladder_db.is_empty() || self.snr_ladder_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("snr_ladder_db", "empty or not finite"));
        }
        self.expectation_config()?;
        Ok(())
    }

    /// Linear per-tap SNRs, which are `h_k^2` and the prior variances.
    pub fn tap_snrs(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.taps,
            self.tap_offsets_db
                .iter()
                .map(|off| 10f64.powf((self.snr1_db + off) / 10.0)),
        )
    }

    /// Deterministic taps, positive roots of the per-tap SNRs.
    pub fn channel(&self) -> DVector<f64> {
        self.tap_snrs().map(f64::sqrt)
    }

    pub fn prior(&self) -> Result<GaussianPrior> {
        GaussianPrior::new(self.tap_snrs())
    }

    pub fn expectation_config(&self) -> Result<PriorExpectationConfig> {
        PriorExpectationConfig::new(self.expectation, self.expectation_samples, self.seed).map_err(
            |e| match e {
                Error::InvalidArgument { reason, .. } => {
                    Error::invalid("expectation_samples", reason)
                }
                other => other,
            },
        )
    }

    /// The same scenario at a different first-tap SNR.
    pub fn with_snr(&self, snr1_db: f64) -> ScenarioConfig {
        ScenarioConfig {
            snr1_db,
            ..self.clone()
        }
    }

    pub fn parse(text: &str) -> Result<ScenarioConfig> {
        let mut cfg = ScenarioConfig::default();
        let mut seen: HashMap<&'static str, usize> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let bad = |reason: String| Error::Config { line, reason };
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| bad(format!("expected `key = value`, got `{content}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let key = KEYS
                .iter()
                .copied()
                .find(|k| *k == key)
                .ok_or_else(|| bad(format!("unknown key `{key}`")))?;
            if let Some(first) = seen.insert(key, line) {
                return Err(bad(format!("`{key}` already set on line {first}")));
            }
            cfg.set(key, value).map_err(bad)?;
        }
        if seen.contains_key("taps") && !seen.contains_key("tap_offsets_db") {
            cfg.tap_offsets_db = default_offsets(cfg.taps);
        }
        cfg.validate().map_err(|e| match &e {
            Error::InvalidArgument { field, reason } => match seen.get(field) {
                Some(&line) => Error::Config {
                    line,
                    reason: format!("{field}: {reason}"),
                },
                None => e,
            },
            _ => e,
        })?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "mode" => {
                self.mode = match value {
                    "deterministic" => Mode::Deterministic,
                    "hybrid" => Mode::Hybrid,
                    _ => return Err(format!("mode `{value}` is not deterministic or hybrid")),
                }
            }
            "taps" => self.taps = parse_int(value)?,
            "pilot_length" => self.pilot_length = parse_int(value)?,
            "snr1_db" => self.snr1_db = parse_real(value)?,
            "tap_offsets_db" => self.tap_offsets_db = parse_list(value)?,
            "alpha_grid" => self.alpha_grid = parse_list(value)?,
            "trials" => self.trials = parse_int(value)?,
            "seed" => self.seed = parse_int(value)?,
            "pilot_policy" => {
                self.pilot_policy = match value {
                    "fixed-per-scenario" => PilotPolicy::FixedPerScenario,
                    "redrawn-per-trial" => PilotPolicy::RedrawnPerTrial,
                    _ => return Err(format!("pilot_policy `{value}` is not recognized")),
                }
            }
            "snr_ladder_db" => self.snr_ladder_db = parse_list(value)?,
            "expectation" => {
                self.expectation = match value {
                    "quasi-random" => ExpectationMethod::QuasiRandom,
                    "monte-carlo" => ExpectationMethod::MonteCarlo,
                    "quadrature" => ExpectationMethod::Quadrature,
                    "closed-form-linear" => ExpectationMethod::ClosedFormLinear,
                    _ => return Err(format!("expectation `{value}` is not recognized")),
                }
            }
            "expectation_samples" => self.expectation_samples = parse_int(value)?,
            _ => unreachable!("key list and setter out of sync"),
        }
        Ok(())
    }

    /// Every field in grammar form, in a fixed order. Parsing the result
    /// gives back an equal config.
    pub fn to_canonical_string(&self) -> String {
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(", ");
        let mut s = String::new();
        let mode = match self.mode {
            Mode::Deterministic => "deterministic",
            Mode::Hybrid => "hybrid",
        };
        let policy = match self.pilot_policy {
            PilotPolicy::FixedPerScenario => "fixed-per-scenario",
            PilotPolicy::RedrawnPerTrial => "redrawn-per-trial",
        };
        let expectation = match self.expectation {
            ExpectationMethod::QuasiRandom => "quasi-random",
            ExpectationMethod::MonteCarlo => "monte-carlo",
            ExpectationMethod::Quadrature => "quadrature",
            ExpectationMethod::ClosedFormLinear => "closed-form-linear",
        };
        let _ = writeln!(s, "mode = {mode}");
        let _ = writeln!(s, "taps = {}", self.taps);
        let _ = writeln!(s, "pilot_length = {}", self.pilot_length);
        let _ = writeln!(s, "snr1_db = {}", self.snr1_db);
        let _ = writeln!(s, "tap_offsets_db = {}", list(&self.tap_offsets_db));
        let _ = writeln!(s, "alpha_grid = {}", list(&self.alpha_grid));
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "pilot_policy = {policy}");
        let _ = writeln!(s, "snr_ladder_db = {}", list(&self.snr_ladder_db));
        let _ = writeln!(s, "expectation = {expectation}");
        let _ = writeln!(s, "expectation_samples = {}", self.expectation_samples);
        s
    }
}

fn parse_int<T: std::str::FromStr>(value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("`{value}` is not a non-negative integer"))
}

fn parse_real(value: &str) -> std::result::Result<f64, String> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("`{value}` is not a finite number")),
    }
}

fn parse_list(value: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = value.split(':').map(str::trim).collect();
    match parts.as_slice() {
        [single] => single.split(',').map(|v| parse_real(v.trim())).collect(),
        [start, step, end] => range(parse_real(start)?, parse_real(step)?, parse_real(end)?),
        _ => Err(format!("`{value}` is neither a list nor start:step:end")),
    }
}

/// Inclusive `start, start + step, ..., end`; `end` must lie on the lattice.
pub fn range(start: f64, step: f64, end: f64) -> std::result::Result<Vec<f64>, String> {
    if !(step > 0.0) || end < start {
        return Err(format!(
            "range {start}:{step}:{end} is empty or has a non-positive step"
        ));
    }
    let n = ((end - start) / step).round();
    if (start + n * step - end).abs() > 1e-9 * end.abs().max(1.0) {
        return Err(format!(
            "range end {end} is not start plus a multiple of {step}"
        ));
    }
    if n > 1e6 {
        return Err(format!("range {start}:{step}:{end} has too many points"));
    }
    // trim lattice round-off such as 0.15000000000000002
    Ok((0..=n as usize)
        .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}
