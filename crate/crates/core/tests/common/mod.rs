//! Oracles shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use onebit::qfunc::{normal_pdf, q};
use onebit::signal::PilotDesign;
use rand::Rng;

/// Fisher information of `[theta; alpha]` by summing the score outer product
/// over all `2^N` sign patterns, weighted by their probability.
pub fn enumerated_fim(pilot: &PilotDesign, theta: &DVector<f64>, alpha: f64) -> DMatrix<f64> {
    let n = pilot.len();
    let k = pilot.taps();
    let mut fim = DMatrix::zeros(k + 1, k + 1);
    for mask in 0..(1u32 << n) {
        let mut prob = 1.0;
        let mut score = DVector::<f64>::zeros(k + 1);
        for i in 0..n {
            let z = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
            let x = pilot.regressor(i);
            let u = z * (alpha - x.dot(theta));
            let p = q(u);
            prob *= p;
            // d/du ln Q(u) = -pdf(u)/Q(u); du/dtheta = -z x, du/dalpha = z
            let r = normal_pdf(u) / p;
            for j in 0..k {
                score[j] += r * z * x[j];
            }
            score[k] -= r * z;
        }
        fim += &score * score.transpose() * prob;
    }
    fim
}

/// A pilot of `n` random symbols (not necessarily balanced).
pub fn random_pilot<R: Rng>(rng: &mut R, n: usize, taps: usize) -> PilotDesign {
    let symbols = (0..n)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    PilotDesign::from_symbols(symbols, taps).unwrap()
}

/// Taps with `sum |theta_k| <= bound`, so every `|s_n| <= bound`.
pub fn bounded_taps<R: Rng>(rng: &mut R, taps: usize, bound: f64) -> DVector<f64> {
    let raw = DVector::from_fn(taps, |_, _| rng.random_range(-1.0..1.0));
    let l1: f64 = raw.iter().map(|v: &f64| v.abs()).sum();
    let scale = rng.random_range(0.0..bound) / l1.max(1e-12);
    raw * scale
}
