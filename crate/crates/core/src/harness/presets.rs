//! Canned scenarios for the ten reference figures.
//!
//! | name  | mode          | task       | scenario                          |
//! |-------|---------------|------------|-----------------------------------|
//! | fig1  | deterministic | simulate   | K=3, SNR1 = -21 dB                |
//! | fig2  | deterministic | simulate   | K=3, SNR1 = -3 dB                 |
//! | fig3  | deterministic | losses     | K=3, ladder -21, -6, -3 dB (chi)  |
//! | fig4  | deterministic | losses     | K=3, same ladder (upsilon)        |
//! | fig5  | hybrid        | simulate   | K=3, SNR1 = -21 dB                |
//! | fig6  | hybrid        | simulate   | K=3, SNR1 = -3 dB                 |
//! | fig7  | hybrid        | losses     | K=3, ladder (chi)                 |
//! | fig8  | hybrid        | losses     | K=3, ladder (upsilon)             |
//! | fig9  | deterministic | losses     | K=1, ladder                       |
//! | fig10 | hybrid        | losses     | K=1, ladder                       |
//!
//! All use N = 1024 pilot symbols and 1000 trials.

use crate::error::{Error, Result};
use crate::harness::config::{default_offsets, Mode, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    /// Monte-Carlo curves plus bounds.
    Simulate,
    /// Analytic loss tables.
    Losses,
    /// Analytic bound tables.
    Bounds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FigurePreset {
    pub name: &'static str,
    pub title: &'static str,
    pub task: Task,
    pub config: ScenarioConfig,
}

pub const FIGURE_NAMES: [&str; 10] = [
    "fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9", "fig10",
];

pub fn figure_preset(name: &str) -> Result<FigurePreset> {
    let base = ScenarioConfig::default();
    let hybrid = ScenarioConfig {
        mode: Mode::Hybrid,
        ..base.clone()
    };
    let single = |c: &ScenarioConfig| ScenarioConfig {
        taps: 1,
        tap_offsets_db: default_offsets(1),
        ..c.clone()
    };
    let (title, task, config) = match name {
        "fig1" => (
            "RNMSE, deterministic ISI channel, -21 dB",
            Task::Simulate,
            base.with_snr(-21.0),
        ),
        "fig2" => (
            "RNMSE, deterministic ISI channel, -3 dB",
            Task::Simulate,
            base.with_snr(-3.0),
        ),
        "fig3" => (
            "Quantization loss, deterministic ISI channel",
            Task::Losses,
            base.clone(),
        ),
        "fig4" => (
            "Offset loss, deterministic ISI channel",
            Task::Losses,
            base.clone(),
        ),
        "fig5" => (
            "RNMSE, random ISI channel, -21 dB",
            Task::Simulate,
            hybrid.with_snr(-21.0),
        ),
        "fig6" => (
            "RNMSE, random ISI channel, -3 dB",
            Task::Simulate,
            hybrid.with_snr(-3.0),
        ),
        "fig7" => (
            "Quantization loss, random ISI channel",
            Task::Losses,
            hybrid.clone(),
        ),
        "fig8" => (
            "Offset loss, random ISI channel",
            Task::Losses,
            hybrid.clone(),
        ),
        "fig9" => (
            "Offset loss, deterministic single-tap channel",
            Task::Losses,
            single(&base),
        ),
        "fig10" => (
            "Offset loss, random single-tap channel",
            Task::Losses,
            single(&hybrid),
        ),
        _ => {
            return Err(Error::invalid(
                "name",
                format!(
                    "unknown figure `{name}`, expected one of {}",
                    FIGURE_NAMES.join(", ")
                ),
            ))
        }
    };
    let name = FIGURE_NAMES.iter().copied().find(|n| *n == name).unwrap();
    Ok(FigurePreset {
        name,
        title,
        task,
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_is_valid() {
        for name in FIGURE_NAMES {
            let p = figure_preset(name).unwrap();
            p.config.validate().unwrap();
            assert_eq!(p.config.pilot_length, 1024);
            assert_eq!(p.config.trials, 1000);
        }
        assert!(figure_preset("fig11").is_err());
    }

    #[test]
    fn ladder_and_taps() {
        let p = figure_preset("fig4").unwrap();
        assert_eq!(p.config.snr_ladder_db, vec![-21.0, -6.0, -3.0]);
        assert_eq!(p.config.tap_offsets_db, vec![0.0, -3.0, -6.0]);
        let p = figure_preset("fig10").unwrap();
        assert_eq!(p.config.taps, 1);
        assert_eq!(p.config.mode, Mode::Hybrid);
        assert_eq!(figure_preset("fig2").unwrap().config.snr1_db, -3.0);
    }
}
