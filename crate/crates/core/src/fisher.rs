//! Fisher information of the ideal and the hard-limiting receiver, the
//! resulting Cramér-Rao bounds, and the loss measures comparing them.
//!
//! For the 1-bit receiver the information matrix of `psi = [theta; alpha]`
//! has the block form
//!
//! ```text
//! J_tt = sum_n phi_n X_n,   J_ta = -sum_n phi_n x_n,   J_aa = sum_n phi_n
//! ```
//!
//! where `phi_n` is [`info_factor`] at `alpha - x_n^T theta`. With the
//! threshold unknown the bound on `theta` is the inverse of the Schur
//! complement `J_tt - J_ta J_ta^T / J_aa`; with it known, `J_tt^{-1}`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{min_eigenvalue, spd_inverse};
use crate::qfunc::{info_factor, phi_zero};
use crate::signal::{ChannelParams, PilotDesign};

/// An asymptotic MSE matrix for the channel taps.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundMatrix {
    mse: DMatrix<f64>,
}

impl BoundMatrix {
    pub fn new(mse: DMatrix<f64>) -> Result<Self> {
        if !mse.is_square() {
            return Err(Error::invalid("mse", "matrix is not square"));
        }
        Ok(BoundMatrix { mse })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.mse
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.mse
    }

    pub fn diagonal(&self) -> DVector<f64> {
        self.mse.diagonal()
    }

    pub fn taps(&self) -> usize {
        self.mse.nrows()
    }

    /// `sqrt((1/K) sum_k mse_kk / norm_k)`: root of the normalized MSE
    /// averaged over taps.
    pub fn rnmse(&self, normalizers: &DVector<f64>) -> f64 {
        let k = self.taps();
        (self
            .mse
            .diagonal()
            .iter()
            .zip(normalizers.iter())
            .map(|(m, h)| m / h)
            .sum::<f64>()
            / k as f64)
            .sqrt()
    }
}

/// Block-structured Fisher information of the 1-bit receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct FimBlocks {
    pub j_theta_theta: DMatrix<f64>,
    pub j_theta_alpha: DVector<f64>,
    pub j_alpha_alpha: f64,
}

impl FimBlocks {
    pub fn taps(&self) -> usize {
        self.j_theta_alpha.len()
    }

    /// The assembled `(K+1) x (K+1)` matrix.
    pub fn full(&self) -> DMatrix<f64> {
        let k = self.taps();
        let mut m = DMatrix::zeros(k + 1, k + 1);
        m.view_mut((0, 0), (k, k)).copy_from(&self.j_theta_theta);
        m.view_mut((0, k), (k, 1)).copy_from(&self.j_theta_alpha);
        m.view_mut((k, 0), (1, k))
            .copy_from(&self.j_theta_alpha.transpose());
        m[(k, k)] = self.j_alpha_alpha;
        m
    }

    /// `J_tt - J_ta J_at / J_aa`, the information on `theta` left after the
    /// threshold is estimated alongside it.
    pub fn schur_complement(&self) -> DMatrix<f64> {
        let a = &self.j_theta_alpha;
        &self.j_theta_theta - (a * a.transpose()) / self.j_alpha_alpha
    }
}

/// `F = sum_n X_n`. The ISI model is linear, so this does not depend on `theta`.
pub fn fim_ideal(pilot: &PilotDesign) -> DMatrix<f64> {
    pilot.gram()
}

pub fn fim_quantized(pilot: &PilotDesign, params: &ChannelParams) -> Result<FimBlocks> {
    if params.taps() != pilot.taps() {
        return Err(Error::invalid(
            "theta",
            format!(
                "length {} but pilot has {} taps",
                params.taps(),
                pilot.taps()
            ),
        ));
    }
    let k = pilot.taps();
    let mut jtt = DMatrix::zeros(k, k);
    let mut jta = DVector::zeros(k);
    let mut jaa = 0.0;
    for p in pilot.patterns() {
        let x = &p.regressor;
        let w = p.count as f64 * info_factor(params.alpha - x.dot(&params.theta));
        jtt += (x * x.transpose()) * w;
        jta -= x * w;
        jaa += w;
    }
    Ok(FimBlocks {
        j_theta_theta: jtt,
        j_theta_alpha: jta,
        j_alpha_alpha: jaa,
    })
}

pub fn crlb_ideal(pilot: &PilotDesign) -> Result<BoundMatrix> {
    spd_inverse(&fim_ideal(pilot), "pilot Gram matrix sum_n X_n").map(|mse| BoundMatrix { mse })
}

/// Bound with the threshold as an unknown nuisance parameter.
pub fn crlb_quantized_unknown(blocks: &FimBlocks) -> Result<BoundMatrix> {
    if !(blocks.j_alpha_alpha > 0.0) {
        return Err(Error::Singular {
            what: "threshold information J_aa",
            cause: format!("J_aa = {:e}", blocks.j_alpha_alpha),
        });
    }
    spd_inverse(&blocks.schur_complement(), "Schur complement of J_aa")
        .map(|mse| BoundMatrix { mse })
}

/// Bound with the threshold known to the receiver.
pub fn crlb_quantized_known(blocks: &FimBlocks) -> Result<BoundMatrix> {
    spd_inverse(&blocks.j_theta_theta, "J_tt").map(|mse| BoundMatrix { mse })
}

/// `(1/K) sum_k num_kk / den_kk`.
pub fn diagonal_ratio(num: &BoundMatrix, den: &BoundMatrix) -> Result<f64> {
    if num.taps() != den.taps() {
        return Err(Error::invalid("mse", "bound matrices differ in size"));
    }
    let mut acc = 0.0;
    for k in 0..num.taps() {
        let (a, b) = (num.mse[(k, k)], den.mse[(k, k)]);
        if !(a > 0.0) {
            return Err(Error::ZeroDiagonal {
                what: "numerator MSE",
                index: k,
            });
        }
        if !(b > 0.0) {
            return Err(Error::ZeroDiagonal {
                what: "denominator MSE",
                index: k,
            });
        }
        acc += a / b;
    }
    Ok(acc / num.taps() as f64)
}

/// Quantization loss, ideal over 1-bit MSE with unknown threshold.
pub fn loss_chi(mse_y: &BoundMatrix, mse_z: &BoundMatrix) -> Result<f64> {
    diagonal_ratio(mse_y, mse_z)
}

/// Quantization loss with the threshold known.
pub fn loss_chi_star(mse_y: &BoundMatrix, mse_z_star: &BoundMatrix) -> Result<f64> {
    diagonal_ratio(mse_y, mse_z_star)
}

/// Offset loss, known-threshold over unknown-threshold MSE.
pub fn loss_upsilon(mse_z_star: &BoundMatrix, mse_z: &BoundMatrix) -> Result<f64> {
    diagonal_ratio(mse_z_star, mse_z)
}

pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Losses {
    pub chi: f64,
    pub chi_star: f64,
    pub upsilon: f64,
}

impl Losses {
    pub fn from_bounds(
        mse_y: &BoundMatrix,
        mse_z: &BoundMatrix,
        mse_z_star: &BoundMatrix,
    ) -> Result<Self> {
        Ok(Losses {
            chi: loss_chi(mse_y, mse_z)?,
            chi_star: loss_chi_star(mse_y, mse_z_star)?,
            upsilon: loss_upsilon(mse_z_star, mse_z)?,
        })
    }

    pub fn db(&self) -> Losses {
        Losses {
            chi: to_db(self.chi),
            chi_star: to_db(self.chi_star),
            upsilon: to_db(self.upsilon),
        }
    }
}

/// All deterministic bounds at one `psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicBounds {
    pub ideal: BoundMatrix,
    pub unknown_offset: BoundMatrix,
    pub known_offset: BoundMatrix,
    pub losses: Losses,
}

pub fn deterministic_bounds(
    pilot: &PilotDesign,
    params: &ChannelParams,
) -> Result<DeterministicBounds> {
    let blocks = fim_quantized(pilot, params)?;
    let ideal = crlb_ideal(pilot)?;
    let unknown_offset = crlb_quantized_unknown(&blocks)?;
    let known_offset = crlb_quantized_known(&blocks)?;
    let losses = Losses::from_bounds(&ideal, &unknown_offset, &known_offset)?;
    Ok(DeterministicBounds {
        ideal,
        unknown_offset,
        known_offset,
        losses,
    })
}

/// Closed forms for a single tap and a balanced pilot of length `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleTapBounds {
    pub phi_plus: f64,
    pub phi_minus: f64,
    pub mse_y: f64,
    pub mse_z: f64,
    pub mse_z_star: f64,
    pub chi: f64,
    pub chi_star: f64,
    pub upsilon: f64,
}

/// Single-tap bounds from `phi_+ = phi(alpha + theta)` and
/// `phi_- = phi(alpha - theta)`; each symbol sign occupies `n/2` positions.
pub fn single_tap_closed_forms(theta: f64, alpha: f64, n: usize) -> Result<SingleTapBounds> {
    if n == 0 {
        return Err(Error::invalid("n", "pilot length must be positive"));
    }
    if !theta.is_finite() {
        return Err(Error::NonFinite("theta"));
    }
    if !alpha.is_finite() {
        return Err(Error::NonFinite("alpha"));
    }
    let pp = info_factor(alpha + theta);
    let pm = info_factor(alpha - theta);
    let nf = n as f64;
    let sum = pp + pm;
    Ok(SingleTapBounds {
        phi_plus: pp,
        phi_minus: pm,
        mse_y: 1.0 / nf,
        mse_z: sum / (2.0 * nf * pp * pm),
        // J_tt = (n/2)(phi_+ + phi_-)
        mse_z_star: 2.0 / (nf * sum),
        chi: 2.0 * pp * pm / sum,
        chi_star: 0.5 * sum,
        upsilon: 4.0 * pp * pm / (sum * sum),
    })
}

/// Whether the pilot satisfies the cross-term growth condition well enough
/// for the low-SNR simplification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthStatus {
    /// Spectral norm of `(1/N) f f^T` relative to the smallest eigenvalue of
    /// `F`; the part of the exact low-SNR Schur complement that is dropped.
    pub neglected_ratio: f64,
    pub warning: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowSnrLimits {
    pub mse_z_limit: BoundMatrix,
    pub chi_limit: f64,
    pub status: GrowthStatus,
}

pub const LOW_SNR_WARNING_RATIO: f64 = 1e-2;

/// Limits of the unknown-threshold bound and quantization loss as the taps
/// vanish: `F^{-1} / phi_0(alpha)` and `phi_0(alpha)`.
pub fn low_snr_limits(pilot: &PilotDesign, alpha: f64) -> Result<LowSnrLimits> {
    let phi0 = phi_zero(alpha)?;
    let f = fim_ideal(pilot);
    let finv = spd_inverse(&f, "pilot Gram matrix sum_n X_n")?;
    let s = pilot.regressor_sum();
    let neglected = s.norm_squared() / pilot.len() as f64;
    let ratio = neglected / min_eigenvalue(&f);
    Ok(LowSnrLimits {
        mse_z_limit: BoundMatrix { mse: finv / phi0 },
        chi_limit: phi0,
        status: GrowthStatus {
            neglected_ratio: ratio,
            warning: ratio > LOW_SNR_WARNING_RATIO,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::psd_dominates;
    use crate::signal::make_pilot;
    use std::f64::consts::PI;

    fn params(theta: &[f64], alpha: f64) -> ChannelParams {
        ChannelParams::new(DVector::from_column_slice(theta), alpha).unwrap()
    }

    #[test]
    fn single_tap_ideal_information_is_n() {
        let p = make_pilot(20, 1, 0).unwrap();
        assert_eq!(fim_ideal(&p)[(0, 0)], 20.0);
        assert!((crlb_ideal(&p).unwrap().matrix()[(0, 0)] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn ideal_fim_matches_naive_loop() {
        let p = make_pilot(8, 2, 1).unwrap();
        let mut naive = DMatrix::zeros(2, 2);
        for n in 0..8 {
            let x = p.regressor(n);
            naive += x * x.transpose();
        }
        assert_eq!(fim_ideal(&p), naive);
    }

    #[test]
    fn reference_scenario_inverse_matches_solver() {
        let p = make_pilot(1024, 3, 0).unwrap();
        let f = fim_ideal(&p);
        let crlb = crlb_ideal(&p).unwrap();
        let solved = f.clone().lu().solve(&DMatrix::identity(3, 3)).unwrap();
        assert!((crlb.matrix() - solved).abs().max() < 1e-15);
    }

    #[test]
    fn orthogonal_regressors_give_diagonal_inverse() {
        // x_n x_{n-1} alternates so the off-diagonal of the Gram matrix cancels
        let p = crate::signal::PilotDesign::from_symbols(vec![1, 1, -1, -1], 2).unwrap();
        let f = fim_ideal(&p);
        assert_eq!(f, DMatrix::from_diagonal_element(2, 2, 4.0));
        let c = crlb_ideal(&p).unwrap();
        assert_eq!(c.matrix(), &DMatrix::from_diagonal_element(2, 2, 0.25));
    }

    #[test]
    fn zero_signal_blocks_take_low_snr_form() {
        let p = make_pilot(64, 3, 2).unwrap();
        let b = fim_quantized(&p, &params(&[0.0, 0.0, 0.0], 0.0)).unwrap();
        let two_pi = 2.0 / PI;
        assert!((&b.j_theta_theta - fim_ideal(&p) * two_pi).abs().max() < 1e-12);
        assert!(b.j_theta_alpha.abs().max() < 1e-12);
        assert!((b.j_alpha_alpha - 64.0 * two_pi).abs() < 1e-12);
    }

    #[test]
    fn single_tap_blocks_follow_half_occupancy() {
        let p = crate::signal::PilotDesign::from_symbols(vec![1, -1], 1).unwrap();
        let (theta, alpha) = (0.4, 0.25);
        let b = fim_quantized(&p, &params(&[theta], alpha)).unwrap();
        let pp = info_factor(alpha + theta);
        let pm = info_factor(alpha - theta);
        assert!((b.j_theta_theta[(0, 0)] - (pp + pm)).abs() < 1e-15);
        assert!((b.j_alpha_alpha - (pp + pm)).abs() < 1e-15);
        assert!((b.j_theta_alpha[0] - (pp - pm)).abs() < 1e-15);
    }

    #[test]
    fn decoupled_threshold_leaves_bound_unchanged() {
        let b = FimBlocks {
            j_theta_theta: DMatrix::from_row_slice(2, 2, &[3.0, 0.5, 0.5, 2.0]),
            j_theta_alpha: DVector::zeros(2),
            j_alpha_alpha: 4.0,
        };
        assert_eq!(
            crlb_quantized_unknown(&b).unwrap(),
            crlb_quantized_known(&b).unwrap()
        );
    }

    #[test]
    fn schur_bound_equals_block_of_full_inverse() {
        let p = make_pilot(32, 2, 4).unwrap();
        let b = fim_quantized(&p, &params(&[0.7, -0.4], 0.3)).unwrap();
        let full_inv = b.full().try_inverse().unwrap();
        let schur = crlb_quantized_unknown(&b).unwrap();
        let block = full_inv.view((0, 0), (2, 2)).into_owned();
        assert!((schur.matrix() - block).abs().max() < 1e-14);
    }

    #[test]
    fn known_offset_low_snr_and_linear_solver() {
        let p = make_pilot(128, 3, 5).unwrap();
        let alpha = 0.6;
        let b = fim_quantized(&p, &params(&[0.0; 3], alpha)).unwrap();
        let known = crlb_quantized_known(&b).unwrap();
        let expected = crlb_ideal(&p).unwrap().into_matrix() / phi_zero(alpha).unwrap();
        assert!((known.matrix() - &expected).abs().max() < 1e-14);
        let solved = b
            .j_theta_theta
            .clone()
            .lu()
            .solve(&DMatrix::identity(3, 3))
            .unwrap();
        assert!((known.matrix() - solved).abs().max() < 1e-14);
    }

    #[test]
    fn unknown_offset_low_snr_form_with_cross_term() {
        // unbalanced pilot so that f = sum x_n is nonzero
        let p = crate::signal::PilotDesign::from_symbols(vec![1, 1, 1, -1, 1, -1, -1, 1, 1, -1], 2)
            .unwrap();
        let alpha = 0.2;
        let b = fim_quantized(&p, &params(&[0.0, 0.0], alpha)).unwrap();
        let f = fim_ideal(&p);
        let s = p.regressor_sum();
        let expected =
            (f - &s * s.transpose() / 10.0).try_inverse().unwrap() / phi_zero(alpha).unwrap();
        let got = crlb_quantized_unknown(&b).unwrap();
        assert!((got.matrix() - expected).abs().max() < 1e-13);
    }

    #[test]
    fn singular_blocks_are_errors() {
        let b = FimBlocks {
            j_theta_theta: DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            j_theta_alpha: DVector::from_vec(vec![0.0, 0.0]),
            j_alpha_alpha: 1.0,
        };
        assert!(matches!(
            crlb_quantized_known(&b),
            Err(Error::Singular { .. })
        ));
        assert!(matches!(
            crlb_quantized_unknown(&b),
            Err(Error::Singular { .. })
        ));
        let p = crate::signal::PilotDesign::from_symbols(vec![1, -1, 1, -1], 2).unwrap();
        assert!(matches!(crlb_ideal(&p), Err(Error::Singular { .. })));
    }

    #[test]
    fn loss_measures() {
        let m =
            BoundMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0]))).unwrap();
        assert_eq!(loss_chi(&m, &m).unwrap(), 1.0);
        let z =
            BoundMatrix::new(DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 8.0]))).unwrap();
        assert!((loss_chi(&m, &z).unwrap() - 0.375).abs() < 1e-15);
        let zero = BoundMatrix::new(DMatrix::zeros(2, 2)).unwrap();
        assert!(matches!(
            loss_chi(&m, &zero),
            Err(Error::ZeroDiagonal { .. })
        ));
        assert!((to_db(2.0 / PI) + 1.961_198_770_301_526_6).abs() < 1e-12);
    }

    #[test]
    fn low_snr_loss_is_phi_zero() {
        let p = make_pilot(256, 3, 0).unwrap();
        let b = deterministic_bounds(&p, &params(&[0.0; 3], 0.0)).unwrap();
        assert!((b.losses.chi - 2.0 / PI).abs() < 1e-12);
        assert!((b.losses.chi_star - 2.0 / PI).abs() < 1e-12);
        assert!((b.losses.upsilon - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_tap_closed_forms_match_matrix_path() {
        for &(theta, alpha) in &[(0.707, 0.5), (0.0, 0.3), (1.3, -0.8), (0.2, 0.0)] {
            let n = 64;
            let p = make_pilot(n, 1, 3).unwrap();
            let b = deterministic_bounds(&p, &params(&[theta], alpha)).unwrap();
            let c = single_tap_closed_forms(theta, alpha, n).unwrap();
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
            assert!(rel(c.mse_z, b.unknown_offset.matrix()[(0, 0)]) < 1e-12);
            assert!(rel(c.mse_z_star, b.known_offset.matrix()[(0, 0)]) < 1e-12);
            assert!(rel(c.mse_y, b.ideal.matrix()[(0, 0)]) < 1e-12);
            assert!(rel(c.chi, b.losses.chi) < 1e-12);
            assert!(rel(c.chi_star, b.losses.chi_star) < 1e-12);
            assert!(rel(c.upsilon, b.losses.upsilon) < 1e-12);
        }
    }

    #[test]
    fn single_tap_offset_loss_vanishes_at_zero_and_is_even() {
        let c = single_tap_closed_forms(0.0, 0.7, 100).unwrap();
        assert!((c.upsilon - 1.0).abs() < 1e-15);
        for &t in &[0.1, 0.5, 1.5] {
            let a = single_tap_closed_forms(t, 0.0, 10).unwrap();
            let b = single_tap_closed_forms(-t, 0.0, 10).unwrap();
            assert_eq!(a.phi_plus, b.phi_minus);
            assert!((a.chi - b.chi).abs() < 1e-15);
            assert!((a.upsilon - b.upsilon).abs() < 1e-15);
        }
    }

    #[test]
    fn low_snr_limits_values() {
        let p = make_pilot(512, 3, 1).unwrap();
        let l0 = low_snr_limits(&p, 0.0).unwrap();
        assert!((l0.chi_limit - 2.0 / PI).abs() < 1e-12);
        let finv = crlb_ideal(&p).unwrap().into_matrix();
        assert!((l0.mse_z_limit.matrix() - finv * (PI / 2.0)).abs().max() < 1e-14);
        assert!(!l0.status.warning);
        assert_eq!(l0.status.neglected_ratio, 0.0);
        let l1 = low_snr_limits(&p, 1.0).unwrap();
        assert!((l1.chi_limit - 0.438_628_861_102_213_96).abs() < 1e-12);
    }

    #[test]
    fn low_snr_limits_warn_on_unbalanced_pilot() {
        let p =
            crate::signal::PilotDesign::from_symbols(vec![1, 1, 1, 1, -1, 1, 1, -1], 2).unwrap();
        let l = low_snr_limits(&p, 0.0).unwrap();
        assert!(l.status.warning);
    }

    #[test]
    fn bounds_are_continuous() {
        let p = make_pilot(64, 3, 9).unwrap();
        let base = params(&[0.9, -0.5, 0.3], 0.4);
        let b0 = deterministic_bounds(&p, &base).unwrap();
        for i in 0..4 {
            let mut q = base.clone();
            if i < 3 {
                q.theta[i] += 1e-6;
            } else {
                q.alpha += 1e-6;
            }
            let b1 = deterministic_bounds(&p, &q).unwrap();
            let scale = b0.unknown_offset.matrix().abs().max();
            assert!(
                (b1.unknown_offset.matrix() - b0.unknown_offset.matrix())
                    .abs()
                    .max()
                    < 1e-4 * scale
            );
            assert!(
                (b1.known_offset.matrix() - b0.known_offset.matrix())
                    .abs()
                    .max()
                    < 1e-4 * scale
            );
        }
    }

    #[test]
    fn orderings_on_grid() {
        let p = make_pilot(64, 2, 0).unwrap();
        for &t in &[-1.0, -0.3, 0.0, 0.6, 1.4] {
            for &a in &[-1.5, 0.0, 0.8] {
                let b = deterministic_bounds(&p, &params(&[t, 0.5 * t], a)).unwrap();
                assert!(psd_dominates(
                    b.unknown_offset.matrix(),
                    b.known_offset.matrix(),
                    1e-10
                ));
                assert!(psd_dominates(
                    b.known_offset.matrix(),
                    b.ideal.matrix(),
                    1e-10
                ));
                assert!(b.losses.chi <= b.losses.chi_star + 1e-12);
                assert!(b.losses.chi_star <= 1.0);
                assert!(b.losses.upsilon > 0.0 && b.losses.upsilon <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn taps_mismatch() {
        let p = make_pilot(8, 2, 0).unwrap();
        assert!(fim_quantized(&p, &params(&[0.1], 0.0)).is_err());
    }
}
