//! BPSK pilots over an ISI channel and the two receivers observing them.
//!
//! Observation `n` is `y_n = x_n^T theta + eta_n` with regressor
//! `[x_n]_i = x_{n-i}` (0-based), unit-variance Gaussian noise, and the 1-bit
//! receiver keeps only `z_n = sign(y_n - alpha)` with `sign(0) = +1`.
//!
//! Symbols before the start of the pilot are taken cyclically, so every
//! regressor column sums to zero whenever the symbol stream does.

use std::io::{BufRead, Write};

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

const MAX_PILOT_RETRIES: u64 = 64;

/// One distinct regressor vector and how many pilot positions carry it.
///
/// With ±1 symbols there are at most `2^K` distinct regressors, so every sum
/// over the pilot collapses to a sum over patterns weighted by `count`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub regressor: DVector<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PilotDesign {
    symbols: Vec<i8>,
    taps: usize,
    regressors: Vec<DVector<f64>>,
    patterns: Vec<Pattern>,
    pattern_of: Vec<usize>,
}

impl PilotDesign {
    /// Builds the regressors for an arbitrary ±1 sequence. Balance is not
    /// enforced here; see [`make_pilot`] for the balanced construction.
    pub fn from_symbols(symbols: Vec<i8>, taps: usize) -> Result<Self> {
        if taps == 0 {
            return Err(Error::invalid("taps", "must be positive"));
        }
        if symbols.len() < taps {
            return Err(Error::invalid(
                "symbols",
                format!("length {} shorter than {taps} taps", symbols.len()),
            ));
        }
        if let Some(bad) = symbols.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::invalid("symbols", format!("entry {bad} is not ±1")));
        }
        let n = symbols.len();
        let regressors: Vec<DVector<f64>> = (0..n)
            .map(|t| DVector::from_fn(taps, |i, _| symbols[(t + n - i) % n] as f64))
            .collect();

        let mut patterns: Vec<Pattern> = Vec::new();
        let mut pattern_of = Vec::with_capacity(n);
        for x in &regressors {
            match patterns.iter().position(|p| &p.regressor == x) {
                Some(idx) => {
                    patterns[idx].count += 1;
                    pattern_of.push(idx);
                }
                None => {
                    pattern_of.push(patterns.len());
                    patterns.push(Pattern {
                        regressor: x.clone(),
                        count: 1,
                    });
                }
            }
        }
        Ok(PilotDesign {
            symbols,
            taps,
            regressors,
            patterns,
            pattern_of,
        })
    }

    pub fn symbols(&self) -> &[i8] {
        &self.symbols
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    /// Pilot length N.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn is_balanced(&self) -> bool {
        self.symbols.len() % 2 == 0 && self.symbols.iter().map(|&s| s as i64).sum::<i64>() == 0
    }

    pub fn regressor(&self, n: usize) -> &DVector<f64> {
        &self.regressors[n]
    }

    pub fn regressors(&self) -> &[DVector<f64>] {
        &self.regressors
    }

    /// `X_n = x_n x_n^T`.
    pub fn regressor_outer(&self, n: usize) -> DMatrix<f64> {
        let x = &self.regressors[n];
        x * x.transpose()
    }

    pub fn patterns(&self) -> &[Pattern] {
        &self.patterns
    }

    /// Index into [`patterns`](Self::patterns) of the regressor at position `n`.
    pub fn pattern_index(&self, n: usize) -> usize {
        self.pattern_of[n]
    }

    /// `sum_n X_n`, the ideal-receiver Fisher information.
    pub fn gram(&self) -> DMatrix<f64> {
        let k = self.taps;
        self.patterns.iter().fold(DMatrix::zeros(k, k), |acc, p| {
            acc + (&p.regressor * p.regressor.transpose()) * p.count as f64
        })
    }

    /// `sum_n x_n`.
    pub fn regressor_sum(&self) -> DVector<f64> {
        self.patterns
            .iter()
            .fold(DVector::zeros(self.taps), |acc, p| {
                acc + &p.regressor * p.count as f64
            })
    }

    fn check_theta(&self, theta: &DVector<f64>) -> Result<()> {
        if theta.len() != self.taps {
            return Err(Error::invalid(
                "theta",
                format!("length {} but pilot has {} taps", theta.len(), self.taps),
            ));
        }
        Ok(())
    }

    /// `s_n(theta) = x_n^T theta` for a 0-based position `n`.
    pub fn signal_value(&self, theta: &DVector<f64>, n: usize) -> Result<f64> {
        self.check_theta(theta)?;
        if n >= self.len() {
            return Err(Error::invalid(
                "n",
                format!("index {n} out of range for pilot of length {}", self.len()),
            ));
        }
        Ok(self.regressors[n].dot(theta))
    }

    /// Noiseless signal at every pilot position.
    pub fn signal(&self, theta: &DVector<f64>) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        let per_pattern: Vec<f64> = self
            .patterns
            .iter()
            .map(|p| p.regressor.dot(theta))
            .collect();
        Ok(self.pattern_of.iter().map(|&i| per_pattern[i]).collect())
    }

    /// Writes the symbol stream, one `+1`/`-1` per line.
    pub fn write_symbols<W: Write>(&self, mut w: W) -> Result<()> {
        for &s in &self.symbols {
            writeln!(w, "{}", if s > 0 { "+1" } else { "-1" })?;
        }
        Ok(())
    }

    /// Reads a symbol stream written by [`write_symbols`](Self::write_symbols).
    /// Blank lines and `#` comments are skipped. The pilot must be balanced.
    pub fn read_symbols<R: BufRead>(r: R, taps: usize) -> Result<Self> {
        let mut symbols = Vec::new();
        for (idx, line) in r.lines().enumerate() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let s = match t {
                "+1" | "1" => 1,
                "-1" => -1,
                other => {
                    return Err(Error::Config {
                        line: idx + 1,
                        reason: format!("expected +1 or -1, found `{other}`"),
                    })
                }
            };
            symbols.push(s);
        }
        let pilot = PilotDesign::from_symbols(symbols, taps)?;
        if !pilot.is_balanced() {
            return Err(Error::invalid("symbols", "pilot is not balanced"));
        }
        Ok(pilot)
    }
}

/// Balanced random pilot of even length `n` for a `taps`-tap channel.
///
/// A balanced ±1 multiset is shuffled with a seeded generator; shuffles whose
/// Gram matrix is singular are discarded and redrawn.
pub fn make_pilot(n: usize, taps: usize, seed: u64) -> Result<PilotDesign> {
    if taps == 0 {
        return Err(Error::invalid("taps", "must be positive"));
    }
    if n % 2 != 0 {
        return Err(Error::invalid("n", format!("pilot length {n} is odd")));
    }
    if n < 2 * taps {
        return Err(Error::invalid(
            "n",
            format!("pilot length {n} shorter than twice the tap count {taps}"),
        ));
    }
    let mut base: Vec<i8> = std::iter::repeat_n(1, n / 2)
        .chain(std::iter::repeat_n(-1, n / 2))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_PILOT_RETRIES {
        base.shuffle(&mut rng);
        let pilot = PilotDesign::from_symbols(base.clone(), taps)?;
        if pilot.gram().cholesky().is_some() {
            return Ok(pilot);
        }
    }
    Err(Error::Singular {
        what: "pilot Gram matrix",
        cause: format!("no invertible pilot after {MAX_PILOT_RETRIES} shuffles (N={n}, K={taps})"),
    })
}

/// Channel taps and quantizer threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub theta: DVector<f64>,
    pub alpha: f64,
}

impl ChannelParams {
    pub fn new(theta: DVector<f64>, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::NonFinite("alpha"));
        }
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("theta"));
        }
        Ok(ChannelParams { theta, alpha })
    }

    pub fn taps(&self) -> usize {
        self.theta.len()
    }
}

/// Zero-mean Gaussian prior with independent taps.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrior {
    variances: DVector<f64>,
}

impl GaussianPrior {
    pub fn new(variances: DVector<f64>) -> Result<Self> {
        if variances.is_empty() {
            return Err(Error::invalid("variances", "empty"));
        }
        if let Some(v) = variances.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::invalid(
                "variances",
                format!("{v} is not a positive variance"),
            ));
        }
        Ok(GaussianPrior { variances })
    }

    pub fn variances(&self) -> &DVector<f64> {
        &self.variances
    }

    pub fn taps(&self) -> usize {
        self.variances.len()
    }

    /// Prior Fisher information `R^{-1}`.
    pub fn precision(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.variances.map(|v| 1.0 / v))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        self.variances.map(|v| {
            let e: f64 = StandardNormal.sample(rng);
            v.sqrt() * e
        })
    }
}

/// Unquantized receive signal.
pub fn sample_ideal<R: Rng + ?Sized>(
    pilot: &PilotDesign,
    theta: &DVector<f64>,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let mut y = pilot.signal(theta)?;
    for v in &mut y {
        let e: f64 = StandardNormal.sample(rng);
        *v += e;
    }
    Ok(y)
}

/// Hard limiter with threshold `alpha`; ties go to `+1`.
pub fn quantize(y: &[f64], alpha: f64) -> Vec<i8> {
    y.iter()
        .map(|&v| if v - alpha >= 0.0 { 1 } else { -1 })
        .collect()
}

/// 1-bit receive signal.
pub fn sample_quantized<R: Rng + ?Sized>(
    pilot: &PilotDesign,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<Vec<i8>> {
    Ok(quantize(
        &sample_ideal(pilot, &params.theta, rng)?,
        params.alpha,
    ))
}

/// Largest entry of `f f^T` with `f = sum_n x_n`; the cross terms the
/// low-SNR simplification neglects.
pub fn cross_term_max(pilot: &PilotDesign) -> f64 {
    let f = pilot.regressor_sum();
    f.iter().map(|v| v.abs()).fold(0.0, f64::max).powi(2)
}

/// Growth of the neglected cross term with pilot length.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub lengths: Vec<usize>,
    pub cross_term_max: Vec<f64>,
    /// Least-squares slope of `ln(1 + max|f f^T|)` against `ln N`; zero for
    /// bounded cross terms, one for linear growth.
    pub exponent: f64,
}

impl GrowthReport {
    /// True when the cross terms grow at most linearly in N.
    pub fn is_at_most_linear(&self) -> bool {
        self.exponent <= 1.0 + 1e-9
    }
}

pub fn growth_report(taps: usize, lengths: &[usize], seed: u64) -> Result<GrowthReport> {
    if lengths.len() < 2 {
        return Err(Error::invalid("lengths", "need at least two pilot lengths"));
    }
    let mut maxima = Vec::with_capacity(lengths.len());
    for &n in lengths {
        maxima.push(cross_term_max(&make_pilot(n, taps, seed)?));
    }
    let xs: Vec<f64> = lengths.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = maxima.iter().map(|m| m.ln_1p()).collect();
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(GrowthReport {
        lengths: lengths.to_vec(),
        cross_term_max: maxima,
        exponent: sxy / sxx,
    })
}
