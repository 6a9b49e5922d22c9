//! Monte-Carlo runs and analytic tables over the threshold grid.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::{
    jmap_mle, map_ideal, map_quantized_known, mle_ideal, mle_quantized_joint, mle_quantized_known,
    EstimateResult,
};
use crate::fisher::{deterministic_bounds, BoundMatrix, Losses};
use crate::harness::config::{Mode, PilotPolicy, ScenarioConfig};
use crate::hybrid::{hybrid_bounds, BoundEstimate};
use crate::signal::{make_pilot, quantize, ChannelParams, PilotDesign};

/// Random stream of one trial. Stream 0 of the seed is left to the pilot
/// shuffle, so trial `t` reads stream `t + 1`.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 + 1);
    rng
}

/// The scenario pilot shared by all trials under the fixed policy.
pub fn scenario_pilot(cfg: &ScenarioConfig) -> Result<PilotDesign> {
    make_pilot(cfg.pilot_length, cfg.taps, cfg.seed)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub alpha: f64,
    pub rnmse_mc: f64,
    pub rnmse_bound: f64,
    /// Standard error of `rnmse_mc` (delta method).
    pub std_error: f64,
    /// Standard error of `rnmse_bound` when it comes from sampled prior
    /// expectations; zero for exact bounds.
    pub bound_std_error: f64,
    /// Trials whose estimate ended on the search box.
    pub separable: usize,
    /// The bound rejected more than the tolerated share of prior draws.
    pub bound_unreliable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub name: &'static str,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveSet {
    pub mode: Mode,
    pub curves: Vec<Curve>,
}

impl CurveSet {
    pub fn curve(&self, name: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.name == name)
    }
}

pub const DETERMINISTIC_CURVES: [&str; 3] = ["ideal_mle", "onebit_mle", "onebit_mle_known"];
pub const HYBRID_CURVES: [&str; 3] = ["ideal_map", "onebit_jmap_mle", "onebit_map_known"];

/// Normalized squared errors of one trial, one entry per curve and threshold.
struct TrialOutcome {
    errors: [Vec<f64>; 3],
    separable: [Vec<bool>; 3],
}

fn normalized_error(est: &EstimateResult, theta: &DVector<f64>, norm: &DVector<f64>) -> f64 {
    let k = theta.len();
    (0..k)
        .map(|i| (est.theta_hat[i] - theta[i]).powi(2) / norm[i])
        .sum::<f64>()
        / k as f64
}

fn run_trial(
    cfg: &ScenarioConfig,
    fixed_pilot: &PilotDesign,
    norm: &DVector<f64>,
    trial: usize,
) -> Result<TrialOutcome> {
    let mut rng = trial_rng(cfg.seed, trial);
    let redrawn;
    let pilot = match cfg.pilot_policy {
        PilotPolicy::FixedPerScenario => fixed_pilot,
        PilotPolicy::RedrawnPerTrial => {
            redrawn = make_pilot(cfg.pilot_length, cfg.taps, rng.random())?;
            &redrawn
        }
    };
    let prior = cfg.prior()?;
    let theta = match cfg.mode {
        Mode::Deterministic => cfg.channel(),
        Mode::Hybrid => prior.sample(&mut rng),
    };
    // the same noise realization serves every threshold
    let mut y = pilot.signal(&theta)?;
    for v in &mut y {
        let e: f64 = rng.sample(StandardNormal);
        *v += e;
    }

    let ideal = match cfg.mode {
        Mode::Deterministic => mle_ideal(pilot, &y)?,
        Mode::Hybrid => map_ideal(pilot, &y, &prior)?,
    };
    let n_alpha = cfg.alpha_grid.len();
    let mut out = TrialOutcome {
        errors: [
            vec![normalized_error(&ideal, &theta, norm); n_alpha],
            Vec::new(),
            Vec::new(),
        ],
        separable: [vec![false; n_alpha], Vec::new(), Vec::new()],
    };
    for &alpha in &cfg.alpha_grid {
        let z = quantize(&y, alpha);
        let (joint, known) = match cfg.mode {
            Mode::Deterministic => (
                mle_quantized_joint(pilot, &z)?,
                mle_quantized_known(pilot, &z, alpha)?,
            ),
            Mode::Hybrid => (
                jmap_mle(pilot, &z, &prior)?,
                map_quantized_known(pilot, &z, alpha, &prior)?,
            ),
        };
        for (slot, est) in [(1, &joint), (2, &known)] {
            out.errors[slot].push(normalized_error(est, &theta, norm));
            out.separable[slot].push(est.boundary_active);
        }
    }
    Ok(out)
}

/// Bounds at one threshold, in curve order.
struct PointBounds {
    rnmse: [f64; 3],
    se: [f64; 3],
    unreliable: [bool; 3],
}

fn rnmse_se(b: &BoundEstimate, norm: &DVector<f64>) -> f64 {
    let Some(se) = &b.standard_error else {
        return 0.0;
    };
    let k = norm.len();
    let r = b.bound.rnmse(norm);
    // delta method through the square root of a diagonal average
    let var: f64 = (0..k).map(|i| (se[(i, i)] / norm[i]).powi(2)).sum::<f64>() / (k * k) as f64;
    var.sqrt() / (2.0 * r)
}

fn point_bounds(
    cfg: &ScenarioConfig,
    pilot: &PilotDesign,
    alpha: f64,
    norm: &DVector<f64>,
) -> Result<PointBounds> {
    match cfg.mode {
        Mode::Deterministic => {
            let b = deterministic_bounds(pilot, &ChannelParams::new(cfg.channel(), alpha)?)?;
            Ok(PointBounds {
                rnmse: [
                    b.ideal.rnmse(norm),
                    b.unknown_offset.rnmse(norm),
                    b.known_offset.rnmse(norm),
                ],
                se: [0.0; 3],
                unreliable: [false; 3],
            })
        }
        Mode::Hybrid => {
            let b = hybrid_bounds(pilot, &cfg.prior()?, alpha, &cfg.expectation_config()?)?;
            let parts = [&b.ecrlb, &b.ehcrlb, &b.ehcrlb_known];
            Ok(PointBounds {
                rnmse: parts.map(|p| p.bound.rnmse(norm)),
                se: parts.map(|p| rnmse_se(p, norm)),
                unreliable: parts.map(|p| p.unreliable),
            })
        }
    }
}

/// Monte-Carlo RNMSE of the three estimators next to their bounds.
pub fn run_monte_carlo(cfg: &ScenarioConfig) -> Result<CurveSet> {
    cfg.validate()?;
    let pilot = scenario_pilot(cfg)?;
    let norm = cfg.tap_snrs();
    let bounds: Vec<PointBounds> = cfg
        .alpha_grid
        .iter()
        .map(|&a| point_bounds(cfg, &pilot, a, &norm))
        .collect::<Result<_>>()?;

    let outcomes: Vec<TrialOutcome> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, &pilot, &norm, t))
        .collect::<Result<_>>()?;

    let names = match cfg.mode {
        Mode::Deterministic => DETERMINISTIC_CURVES,
        Mode::Hybrid => HYBRID_CURVES,
    };
    let trials = cfg.trials as f64;
    let curves = (0..3)
        .map(|slot| {
            let points = cfg
                .alpha_grid
                .iter()
                .enumerate()
                .map(|(i, &alpha)| {
                    // fixed trial order keeps the sums bit-reproducible
                    let (mut sum, mut sq, mut sep) = (0.0, 0.0, 0);
                    for o in &outcomes {
                        let e = o.errors[slot][i];
                        sum += e;
                        sq += e * e;
                        sep += o.separable[slot][i] as usize;
                    }
                    let mean = sum / trials;
                    let var = if cfg.trials > 1 {
                        ((sq - trials * mean * mean) / (trials - 1.0)).max(0.0)
                    } else {
                        0.0
                    };
                    let rnmse = mean.sqrt();
                    let se = if rnmse > 0.0 {
                        (var / trials).sqrt() / (2.0 * rnmse)
                    } else {
                        0.0
                    };
                    CurvePoint {
                        alpha,
                        rnmse_mc: rnmse,
                        rnmse_bound: bounds[i].rnmse[slot],
                        std_error: se,
                        bound_std_error: bounds[i].se[slot],
                        separable: sep,
                        bound_unreliable: bounds[i].unreliable[slot],
                    }
                })
                .collect();
            Curve {
                name: names[slot],
                points,
            }
        })
        .collect();
    Ok(CurveSet {
        mode: cfg.mode,
        curves,
    })
}

pub fn run_deterministic(cfg: &ScenarioConfig) -> Result<CurveSet> {
    if cfg.mode != Mode::Deterministic {
        return Err(Error::invalid(
            "mode",
            "deterministic run needs mode = deterministic",
        ));
    }
    run_monte_carlo(cfg)
}

pub fn run_hybrid(cfg: &ScenarioConfig) -> Result<CurveSet> {
    if cfg.mode != Mode::Hybrid {
        return Err(Error::invalid("mode", "hybrid run needs mode = hybrid"));
    }
    run_monte_carlo(cfg)
}

/// Analytic bounds only, as RNMSE per curve.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundRow {
    pub alpha: f64,
    pub rnmse: [f64; 3],
    pub std_error: [f64; 3],
    pub unreliable: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundTable {
    pub mode: Mode,
    pub rows: Vec<BoundRow>,
}

pub fn run_bounds(cfg: &ScenarioConfig) -> Result<BoundTable> {
    cfg.validate()?;
    let pilot = scenario_pilot(cfg)?;
    let norm = cfg.tap_snrs();
    let rows = cfg
        .alpha_grid
        .par_iter()
        .map(|&alpha| {
            let b = point_bounds(cfg, &pilot, alpha, &norm)?;
            Ok(BoundRow {
                alpha,
                rnmse: b.rnmse,
                std_error: b.se,
                unreliable: b.unreliable.iter().any(|&u| u),
            })
        })
        .collect::<Result<_>>()?;
    Ok(BoundTable {
        mode: cfg.mode,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossRow {
    pub alpha: f64,
    /// Ratios; see [`Losses::db`] for decibels.
    pub losses: Losses,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossTable {
    pub mode: Mode,
    pub snr1_db: f64,
    pub rows: Vec<LossRow>,
}

/// Quantization and offset losses over the threshold grid, one table per
/// entry of the SNR ladder.
pub fn run_loss_curves(cfg: &ScenarioConfig) -> Result<Vec<LossTable>> {
    cfg.validate()?;
    let pilot = scenario_pilot(cfg)?;
    cfg.snr_ladder_db
        .iter()
        .map(|&snr| {
            let c = cfg.with_snr(snr);
            let rows = c
                .alpha_grid
                .par_iter()
                .map(|&alpha| {
                    let losses = match c.mode {
                        Mode::Deterministic => {
                            deterministic_bounds(&pilot, &ChannelParams::new(c.channel(), alpha)?)?
                                .losses
                        }
                        Mode::Hybrid => {
                            hybrid_bounds(&pilot, &c.prior()?, alpha, &c.expectation_config()?)?
                                .losses
                        }
                    };
                    Ok(LossRow { alpha, losses })
                })
                .collect::<Result<_>>()?;
            Ok(LossTable {
                mode: c.mode,
                snr1_db: snr,
                rows,
            })
        })
        .collect()
}

/// RNMSE of a bound matrix under the scenario's normalization.
pub fn bound_rnmse(cfg: &ScenarioConfig, bound: &BoundMatrix) -> f64 {
    bound.rnmse(&cfg.tap_snrs())
}
