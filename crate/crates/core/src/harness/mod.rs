//! Scenario configuration, Monte-Carlo runs and table output.

pub mod config;
pub mod output;
pub mod presets;
pub mod run;

pub use config::{Mode, PilotPolicy, ScenarioConfig};
pub use output::Table;
pub use presets::{figure_preset, FigurePreset, Task, FIGURE_NAMES};
pub use run::{
    run_bounds, run_deterministic, run_hybrid, run_loss_curves, run_monte_carlo, Curve, CurvePoint,
    CurveSet, LossTable,
};

use crate::error::Result;

/// Runs `task` and renders its tables with file stems starting `prefix`.
pub fn tables_for(task: Task, cfg: &ScenarioConfig, prefix: &str) -> Result<Vec<Table>> {
    Ok(match task {
        Task::Simulate => output::curve_tables(&run_monte_carlo(cfg)?, prefix),
        Task::Bounds => vec![output::bound_table(&run_bounds(cfg)?, prefix)],
        Task::Losses => run_loss_curves(cfg)?
            .iter()
            .map(|t| output::loss_table(t, prefix))
            .collect(),
    })
}
