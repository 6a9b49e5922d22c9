//! Fixtures shared by the benchmarks.

use nalgebra::DVector;
use onebit::signal::{make_pilot, quantize, sample_ideal, PilotDesign};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct Fixture {
    pub pilot: PilotDesign,
    pub theta: DVector<f64>,
    pub alpha: f64,
    pub z: Vec<i8>,
}

/// K = 3 channel at -3 dB per tap offsets 0, -3, -6 dB.
pub fn fixture(n: usize) -> Fixture {
    let snr: f64 = 10f64.powf(-0.3);
    let theta = DVector::from_vec(vec![snr.sqrt(), (snr / 2.0).sqrt(), (snr / 4.0).sqrt()]);
    let pilot = make_pilot(n, 3, 1).unwrap();
    let alpha = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let y = sample_ideal(&pilot, &theta, &mut rng).unwrap();
    let z = quantize(&y, alpha);
    Fixture {
        pilot,
        theta,
        alpha,
        z,
    }
}
