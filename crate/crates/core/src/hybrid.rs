//! Bounds for random taps with a zero-mean Gaussian prior.
//!
//! The per-`theta` information blocks of the 1-bit receiver are averaged over
//! the prior in two different orders: HCRLB takes expectations of the blocks
//! before forming the Schur complement, EHCRLB takes the expectation of the
//! per-draw bound. For the linear ISI model the ideal receiver's `F` does not
//! depend on `theta`, which makes ECRLB and BCRLB closed-form.
//!
//! Expectations are estimated by antithetic sampling: every draw `theta` is
//! paired with `-theta`, so results at `alpha` and `-alpha` coincide exactly.
//! For a single tap an adaptive quadrature path serves as reference.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::fisher::{crlb_ideal, fim_ideal, fim_quantized, BoundMatrix, FimBlocks, Losses};
use crate::linalg::spd_inverse;
use crate::qfunc::normal_pdf;
use crate::signal::{ChannelParams, GaussianPrior, PilotDesign};

/// Rejected draws above this fraction of the total flag an expectation as unreliable.
pub const UNRELIABLE_REJECT_FRACTION: f64 = 1e-3;

pub const MIN_SAMPLE_COUNT: usize = 1000;

/// Independent randomizations of the low-discrepancy point set; their spread
/// gives the standard error.
const QMC_REPLICATES: usize = 16;

const HALTON_BASES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpectationMethod {
    /// Pseudo-random prior draws.
    MonteCarlo,
    /// Randomly shifted Halton points mapped through the normal quantile.
    QuasiRandom,
    /// Exact for quantities that do not depend on `theta`; rejected otherwise.
    ClosedFormLinear,
    /// Adaptive 1-D quadrature; single-tap channels only.
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PriorExpectationConfig {
    method: ExpectationMethod,
    sample_count: usize,
    seed: u64,
}

impl PriorExpectationConfig {
    pub fn new(method: ExpectationMethod, sample_count: usize, seed: u64) -> Result<Self> {
        let sampled = matches!(
            method,
            ExpectationMethod::MonteCarlo | ExpectationMethod::QuasiRandom
        );
        if sampled && sample_count < MIN_SAMPLE_COUNT {
            return Err(Error::invalid(
                "sample_count",
                format!("{sample_count} draws, need at least {MIN_SAMPLE_COUNT}"),
            ));
        }
        Ok(PriorExpectationConfig {
            method,
            sample_count,
            seed,
        })
    }

    pub fn method(&self) -> ExpectationMethod {
        self.method
    }

    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

impl Default for PriorExpectationConfig {
    fn default() -> Self {
        PriorExpectationConfig {
            method: ExpectationMethod::QuasiRandom,
            sample_count: 10_000,
            seed: 0,
        }
    }
}

/// A bound obtained through a prior expectation.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundEstimate {
    pub bound: BoundMatrix,
    /// Entrywise standard error; `None` when the value is exact or is a
    /// function of averaged blocks.
    pub standard_error: Option<DMatrix<f64>>,
    pub draws: usize,
    pub rejected: usize,
    pub unreliable: bool,
}

impl BoundEstimate {
    fn exact(bound: BoundMatrix) -> Self {
        BoundEstimate {
            bound,
            standard_error: None,
            draws: 0,
            rejected: 0,
            unreliable: false,
        }
    }
}

/// Prior averages of the 1-bit information blocks and of the per-draw bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorMoments {
    /// `E[J_tt]`, `E[J_ta]`, `E[J_aa]`.
    pub blocks: FimBlocks,
    /// `E[J_tt - J_ta J_at / J_aa]`.
    pub schur: DMatrix<f64>,
    /// `E[(J_tt - J_ta J_at / J_aa)^{-1}]`.
    pub schur_inverse: DMatrix<f64>,
    /// `E[J_tt^{-1}]`.
    pub theta_block_inverse: DMatrix<f64>,
    pub schur_inverse_se: Option<DMatrix<f64>>,
    pub theta_block_inverse_se: Option<DMatrix<f64>>,
    pub draws: usize,
    pub rejected: usize,
}

impl PriorMoments {
    pub fn unreliable(&self) -> bool {
        self.rejected as f64 > UNRELIABLE_REJECT_FRACTION * self.draws as f64
    }
}

/// Per-draw quantities, flattened so that sums and replicate statistics are
/// plain vector arithmetic.
struct Sample {
    values: DVector<f64>,
}

struct Layout {
    k: usize,
}

impl Layout {
    fn len(&self) -> usize {
        // J_tt, J_ta, J_aa, S, S^-1, J_tt^-1
        4 * self.k * self.k + self.k + 1
    }

    fn pack(
        &self,
        b: &FimBlocks,
        s: &DMatrix<f64>,
        s_inv: &DMatrix<f64>,
        t_inv: &DMatrix<f64>,
    ) -> DVector<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend(b.j_theta_theta.iter());
        v.extend(b.j_theta_alpha.iter());
        v.push(b.j_alpha_alpha);
        v.extend(s.iter());
        v.extend(s_inv.iter());
        v.extend(t_inv.iter());
        DVector::from_vec(v)
    }

    fn matrix(&self, v: &DVector<f64>, slot: usize) -> DMatrix<f64> {
        let k = self.k;
        let start = match slot {
            0 => 0,
            _ => k * k + k + 1 + (slot - 1) * k * k,
        };
        DMatrix::from_column_slice(k, k, &v.as_slice()[start..start + k * k])
    }

    fn blocks(&self, v: &DVector<f64>) -> FimBlocks {
        let k = self.k;
        FimBlocks {
            j_theta_theta: self.matrix(v, 0),
            j_theta_alpha: DVector::from_column_slice(&v.as_slice()[k * k..k * k + k]),
            j_alpha_alpha: v[k * k + k],
        }
    }
}

fn evaluate(
    pilot: &PilotDesign,
    layout: &Layout,
    theta: DVector<f64>,
    alpha: f64,
) -> Option<Sample> {
    let params = ChannelParams::new(theta, alpha).ok()?;
    let blocks = fim_quantized(pilot, &params).ok()?;
    if !(blocks.j_alpha_alpha > 0.0) {
        return None;
    }
    let s = blocks.schur_complement();
    let s_inv = spd_inverse(&s, "Schur complement").ok()?;
    let t_inv = spd_inverse(&blocks.j_theta_theta, "J_tt").ok()?;
    Some(Sample {
        values: layout.pack(&blocks, &s, &s_inv, &t_inv),
    })
}

fn check_inputs(pilot: &PilotDesign, prior: &GaussianPrior, alpha: f64) -> Result<()> {
    if prior.taps() != pilot.taps() {
        return Err(Error::invalid(
            "prior",
            format!("{} variances for {} taps", prior.taps(), pilot.taps()),
        ));
    }
    if !alpha.is_finite() {
        return Err(Error::NonFinite("alpha"));
    }
    Ok(())
}

/// Radical inverse of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u32) -> f64 {
    let b = b as u64;
    let inv = 1.0 / b as f64;
    let (mut f, mut r) = (inv, 0.0);
    while i > 0 {
        r += f * (i % b) as f64;
        i /= b;
        f *= inv;
    }
    r
}

/// Prior draws in pairs; the second member of each pair is the negation of
/// the first. Grouped into replicates for the QMC standard error.
fn draw_pairs(
    prior: &GaussianPrior,
    cfg: &PriorExpectationConfig,
) -> Result<Vec<Vec<DVector<f64>>>> {
    let k = prior.taps();
    let pairs = cfg.sample_count.div_ceil(2);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    match cfg.method {
        ExpectationMethod::MonteCarlo => {
            Ok(vec![(0..pairs).map(|_| prior.sample(&mut rng)).collect()])
        }
        ExpectationMethod::QuasiRandom => {
            if k > HALTON_BASES.len() {
                return Err(Error::invalid(
                    "method",
                    format!(
                        "quasi-random sampling supports at most {} taps",
                        HALTON_BASES.len()
                    ),
                ));
            }
            let normal = Normal::standard();
            let sd = prior.variances().map(f64::sqrt);
            let per = pairs.div_ceil(QMC_REPLICATES);
            Ok((0..QMC_REPLICATES)
                .map(|_| {
                    let shift: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
                    (1..=per as u64)
                        .map(|i| {
                            DVector::from_fn(k, |d, _| {
                                let u = (radical_inverse(i, HALTON_BASES[d]) + shift[d]).fract();
                                let u = u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
                                sd[d] * normal.inverse_cdf(u)
                            })
                        })
                        .collect()
                })
                .collect())
        }
        _ => unreachable!("sampling called for a non-sampling method"),
    }
}

fn sampled_moments(
    pilot: &PilotDesign,
    prior: &GaussianPrior,
    alpha: f64,
    cfg: &PriorExpectationConfig,
) -> Result<PriorMoments> {
    let layout = Layout { k: pilot.taps() };
    let groups = draw_pairs(prior, cfg)?;
    let draws = 2 * groups.iter().map(Vec::len).sum::<usize>();

    // Pair values in parallel, reduced sequentially in draw order.
    let group_values: Vec<Vec<Option<DVector<f64>>>> = groups
        .iter()
        .map(|g| {
            g.par_iter()
                .map(|theta| {
                    let a = evaluate(pilot, &layout, theta.clone(), alpha)?;
                    let b = evaluate(pilot, &layout, -theta, alpha)?;
                    // a + b == b + a bit for bit: the alpha <-> -alpha symmetry is exact
                    Some((a.values + b.values) * 0.5)
                })
                .collect()
        })
        .collect();

    let mut rejected = 0;
    let mut total = DVector::zeros(layout.len());
    let mut accepted = 0usize;
    let mut group_means = Vec::with_capacity(group_values.len());
    let mut pair_values = Vec::new();
    for g in &group_values {
        let mut sum = DVector::zeros(layout.len());
        let mut n = 0usize;
        for v in g {
            match v {
                Some(v) => {
                    sum += v;
                    n += 1;
                    if cfg.method == ExpectationMethod::MonteCarlo {
                        pair_values.push(v.clone());
                    }
                }
                None => rejected += 2,
            }
        }
        if n > 0 {
            group_means.push(&sum / n as f64);
        }
        total += sum;
        accepted += n;
    }
    if accepted == 0 {
        return Err(Error::DegenerateExpectation { rejected, draws });
    }
    let mean = total / accepted as f64;

    let se = match cfg.method {
        ExpectationMethod::MonteCarlo => spread(&pair_values, &mean),
        _ => spread(&group_means, &mean),
    };
    Ok(PriorMoments {
        blocks: layout.blocks(&mean),
        schur: layout.matrix(&mean, 1),
        schur_inverse: layout.matrix(&mean, 2),
        theta_block_inverse: layout.matrix(&mean, 3),
        schur_inverse_se: se.as_ref().map(|s| layout.matrix(s, 2)),
        theta_block_inverse_se: se.as_ref().map(|s| layout.matrix(s, 3)),
        draws,
        rejected,
    })
}

/// Entrywise standard error of the mean of `values`.
fn spread(values: &[DVector<f64>], mean: &DVector<f64>) -> Option<DVector<f64>> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let mut ss = DVector::zeros(mean.len());
    for v in values {
        let d = v - mean;
        ss += d.component_mul(&d);
    }
    Some(ss.map(|x| (x / ((n - 1) * n) as f64).sqrt()))
}

/// Largest prior variance the quadrature path accepts. The expected inverse
/// information of a single tap diverges at variance 1.
pub const QUADRATURE_MAX_VARIANCE: f64 = 0.85;

fn quadrature_moments(
    pilot: &PilotDesign,
    prior: &GaussianPrior,
    alpha: f64,
) -> Result<PriorMoments> {
    if pilot.taps() != 1 {
        return Err(Error::invalid(
            "method",
            "quadrature needs a single-tap channel",
        ));
    }
    let var = prior.variances()[0];
    if var > QUADRATURE_MAX_VARIANCE {
        return Err(Error::invalid(
            "prior",
            format!("variance {var} exceeds {QUADRATURE_MAX_VARIANCE} for quadrature"),
        ));
    }
    let sd = var.sqrt();
    let layout = Layout { k: 1 };
    // Integrate over standardized t; inverse-information terms decay like
    // exp(-(1 - var) t^2 / 2).
    let reach = (80.0 / (1.0 - var)).sqrt();
    let integrand = |slot: usize, t: f64| -> f64 {
        match evaluate(pilot, &layout, DVector::from_element(1, sd * t), alpha) {
            Some(s) => s.values[slot] * normal_pdf(t),
            None => f64::NAN,
        }
    };
    let mut mean = DVector::zeros(layout.len());
    for slot in 0..layout.len() {
        let rough = quadrature::integrate(|t| integrand(slot, t), -reach, reach, 1e-6).integral;
        let out = quadrature::integrate(
            |t| integrand(slot, t),
            -reach,
            reach,
            1e-13 * rough.abs().max(1e-300),
        );
        if !out.integral.is_finite() {
            return Err(Error::Singular {
                what: "single-tap information",
                cause: format!("quadrature did not converge at alpha = {alpha}"),
            });
        }
        mean[slot] = out.integral;
    }
    Ok(PriorMoments {
        blocks: layout.blocks(&mean),
        schur: layout.matrix(&mean, 1),
        schur_inverse: layout.matrix(&mean, 2),
        theta_block_inverse: layout.matrix(&mean, 3),
        schur_inverse_se: None,
        theta_block_inverse_se: None,
        draws: 0,
        rejected: 0,
    })
}

/// Prior averages of everything the hybrid bounds need, from one pass.
pub fn prior_moments(
    pilot: &PilotDesign,
    prior: &GaussianPrior,
    alpha: f64,
    cfg: &PriorExpectationConfig,
) -> Result<PriorMoments> {
    check_inputs(pilot, prior, alpha)?;
    match cfg.method {
        ExpectationMethod::MonteCarlo | ExpectationMethod::QuasiRandom => {
            sampled_moments(pilot, prior, alpha, cfg)
        }
        ExpectationMethod::Quadrature => quadrature_moments(pilot, prior, alpha),
        ExpectationMethod::ClosedFormLinear => Err(Error::invalid(
            "method",
            "1-bit information depends on theta; no closed form",
        )),
    }
}

/// Expected CRLB of the ideal receiver, `E[F^{-1}]`. `F` is the same for
/// every draw, so each method returns `F^{-1}`.
pub fn ecrlb(
    pilot: &PilotDesign,
    prior: &GaussianPrior,
    _cfg: &PriorExpectationConfig,
) -> Result<BoundEstimate> {
    check_inputs(pilot, prior, 0.0)?;
    crlb_ideal(pilot).map(BoundEstimate::exact)
}

/// Bayesian CRLB of the ideal receiver, `(E[F] + R^{-1})^{-1}`.
pub fn bcrlb(
    pilot: &PilotDesign,
    prior: &GaussianPrior,
    _cfg: &PriorExpectationConfig,
) -> Result<BoundEstimate> {
    check_inputs(pilot, prior, 0.0)?;
    let m = spd_inverse(
        &(fim_ideal(pilot) + prior.precision()),
        "Bayesian information",
    )?;
    Ok(BoundEstimate::exact(BoundMatrix::new(m)?))
}

/// Hybrid CRLB from prior-averaged blocks, with the prior information added.
pub fn hcrlb_from_moments(moments: &PriorMoments, prior: &GaussianPrior) -> Result<BoundMatrix> {
    let b = &moments.blocks;
    let a = &b.j_theta_alpha;
    let s = &b.j_theta_theta - (a * a.transpose()) / b.j_alpha_alpha + prior.precision();
    BoundMatrix::new(spd_inverse(&s, "expected Schur complement")?)
}

pub fn hcrlb(
    pilot: &PilotDesign,
    prior: &GaussianPrior,
    alpha: f64,
    cfg: &PriorExpectationConfig,
) -> Result<BoundMatrix> {
    hcrlb_from_moments(&prior_moments(pilot, prior, alpha, cfg)?, prior)
}

fn estimate(
    m: DMatrix<f64>,
    se: Option<DMatrix<f64>>,
    moments: &PriorMoments,
) -> Result<BoundEstimate> {
    Ok(BoundEstimate {
        bound: BoundMatrix::new(m)?,
        standard_error: se,
        draws: moments.draws,
        rejected: moments.rejected,
        unreliable: moments.unreliable(),
    })
}

/// `E[S^{-1}]`: the expected per-draw bound with the threshold unknown.
pub fn ehcrlb(
    pilot: &PilotDesign,
    prior: &GaussianPrior,
    alpha: f64,
    cfg: &PriorExpectationConfig,
) -> Result<BoundEstimate> {
    let m = prior_moments(pilot, prior, alpha, cfg)?;
    estimate(m.schur_inverse.clone(), m.schur_inverse_se.clone(), &m)
}

/// `E[J_tt^{-1}]`: the expected per-draw bound with the threshold known.
pub fn ehcrlb_known_offset(
    pilot: &PilotDesign,
    prior: &GaussianPrior,
    alpha: f64,
    cfg: &PriorExpectationConfig,
) -> Result<BoundEstimate> {
    let m = prior_moments(pilot, prior, alpha, cfg)?;
    estimate(
        m.theta_block_inverse.clone(),
        m.theta_block_inverse_se.clone(),
        &m,
    )
}

pub fn hybrid_losses(
    ecrlb: &BoundMatrix,
    ehcrlb: &BoundMatrix,
    ehcrlb_known: &BoundMatrix,
) -> Result<Losses> {
    Losses::from_bounds(ecrlb, ehcrlb, ehcrlb_known)
}

/// Every hybrid bound at one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridBounds {
    pub ecrlb: BoundEstimate,
    pub bcrlb: BoundEstimate,
    pub hcrlb: BoundMatrix,
    pub ehcrlb: BoundEstimate,
    pub ehcrlb_known: BoundEstimate,
    pub losses: Losses,
}

pub fn hybrid_bounds(
    pilot: &PilotDesign,
    prior: &GaussianPrior,
    alpha: f64,
    cfg: &PriorExpectationConfig,
) -> Result<HybridBounds> {
    let m = prior_moments(pilot, prior, alpha, cfg)?;
    let ecrlb = ecrlb(pilot, prior, cfg)?;
    let ehcrlb = estimate(m.schur_inverse.clone(), m.schur_inverse_se.clone(), &m)?;
    let ehcrlb_known = estimate(
        m.theta_block_inverse.clone(),
        m.theta_block_inverse_se.clone(),
        &m,
    )?;
    let losses = hybrid_losses(&ecrlb.bound, &ehcrlb.bound, &ehcrlb_known.bound)?;
    Ok(HybridBounds {
        bcrlb: bcrlb(pilot, prior, cfg)?,
        hcrlb: hcrlb_from_moments(&m, prior)?,
        ecrlb,
        ehcrlb,
        ehcrlb_known,
        losses,
    })
}

/// EHCRLB as the prior shrinks towards the origin, compared with its
/// low-SNR limit `F^{-1} / phi_0(alpha)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowSnrExtrapolation {
    pub variances: Vec<f64>,
    /// Largest relative deviation of a diagonal entry from the limit.
    pub relative_gaps: Vec<f64>,
    pub limit: BoundMatrix,
    /// Gaps non-increasing as the variance shrinks.
    pub monotone: bool,
}

pub const LOW_SNR_VARIANCES: [f64; 3] = [1e-2, 1e-3, 1e-4];

pub fn low_snr_extrapolation(
    pilot: &PilotDesign,
    alpha: f64,
    cfg: &PriorExpectationConfig,
) -> Result<LowSnrExtrapolation> {
    let limit = crate::fisher::low_snr_limits(pilot, alpha)?.mse_z_limit;
    let mut gaps = Vec::with_capacity(LOW_SNR_VARIANCES.len());
    for &v in &LOW_SNR_VARIANCES {
        let prior = GaussianPrior::new(DVector::from_element(pilot.taps(), v))?;
        let b = ehcrlb(pilot, &prior, alpha, cfg)?;
        let gap = (0..pilot.taps())
            .map(|k| {
                let l = limit.matrix()[(k, k)];
                (b.bound.matrix()[(k, k)] - l).abs() / l
            })
            .fold(0.0, f64::max);
        gaps.push(gap);
    }
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
    Ok(LowSnrExtrapolation {
        variances: LOW_SNR_VARIANCES.to_vec(),
        relative_gaps: gaps,
        limit,
        monotone,
    })
}
