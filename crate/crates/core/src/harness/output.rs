//! Tab-separated tables for plotting tools.
//!
//! Each file starts with `#` comment lines, the last of which names the
//! columns. The first column is always the threshold `alpha`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::harness::config::Mode;
use crate::harness::run::{BoundTable, CurveSet, LossTable, DETERMINISTIC_CURVES, HYBRID_CURVES};

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File stem.
    pub name: String,
    pub comments: Vec<String>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        for c in &self.comments {
            writeln!(w, "# {c}")?;
        }
        writeln!(w, "# {}", self.columns.join("\t"))?;
        for row in &self.rows {
            writeln!(w, "{}", row.join("\t"))?;
        }
        Ok(())
    }

    /// Writes `<dir>/<name>.tsv` and returns its path.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.tsv", self.name));
        let mut buf = Vec::new();
        self.write(&mut buf)?;
        fs::write(&path, buf)?;
        Ok(path)
    }
}

fn real(v: f64) -> String {
    format!("{v:.10e}")
}

fn alpha(v: f64) -> String {
    format!("{v}")
}

/// `-21` -> `m21`, `3.5` -> `3.5`.
pub fn snr_label(snr_db: f64) -> String {
    let s = format!("{}", snr_db.abs());
    if snr_db < 0.0 {
        format!("m{s}")
    } else {
        s
    }
}

pub fn curve_tables(set: &CurveSet, prefix: &str) -> Vec<Table> {
    set.curves
        .iter()
        .map(|c| Table {
            name: format!("{prefix}_{}", c.name),
            comments: vec![format!("{} RNMSE, Monte-Carlo and bound", c.name)],
            columns: vec![
                "alpha",
                "rnmse_mc",
                "rnmse_bound",
                "std_error",
                "bound_std_error",
                "separable",
                "bound_unreliable",
            ],
            rows: c
                .points
                .iter()
                .map(|p| {
                    vec![
                        alpha(p.alpha),
                        real(p.rnmse_mc),
                        real(p.rnmse_bound),
                        real(p.std_error),
                        real(p.bound_std_error),
                        p.separable.to_string(),
                        (p.bound_unreliable as u8).to_string(),
                    ]
                })
                .collect(),
        })
        .collect()
}

pub fn bound_table(t: &BoundTable, prefix: &str) -> Table {
    let names = match t.mode {
        Mode::Deterministic => DETERMINISTIC_CURVES,
        Mode::Hybrid => HYBRID_CURVES,
    };
    Table {
        name: format!("{prefix}_bounds"),
        comments: vec![format!(
            "RNMSE bounds for {}, {}, {}",
            names[0], names[1], names[2]
        )],
        columns: vec![
            "alpha",
            "rnmse_ideal",
            "rnmse_onebit",
            "rnmse_onebit_known",
            "std_error_onebit",
            "std_error_onebit_known",
            "unreliable",
        ],
        rows: t
            .rows
            .iter()
            .map(|r| {
                vec![
                    alpha(r.alpha),
                    real(r.rnmse[0]),
                    real(r.rnmse[1]),
                    real(r.rnmse[2]),
                    real(r.std_error[1]),
                    real(r.std_error[2]),
                    (r.unreliable as u8).to_string(),
                ]
            })
            .collect(),
    }
}

pub fn loss_table(t: &LossTable, prefix: &str) -> Table {
    let mode = match t.mode {
        Mode::Deterministic => "deterministic",
        Mode::Hybrid => "hybrid",
    };
    Table {
        name: format!("{prefix}_losses_{}dB", snr_label(t.snr1_db)),
        comments: vec![format!("{mode} losses in dB at SNR1 = {} dB", t.snr1_db)],
        columns: vec!["alpha", "chi_db", "chi_star_db", "upsilon_db"],
        rows: t
            .rows
            .iter()
            .map(|r| {
                let db = r.losses.db();
                vec![
                    alpha(r.alpha),
                    real(db.chi),
                    real(db.chi_star),
                    real(db.upsilon),
                ]
            })
            .collect(),
    }
}
