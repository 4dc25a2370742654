use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use super::AudioStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub snr_db: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(snr_db: f64, seed: u64) -> Self {
        assert!(snr_db.is_finite(), "SNR must be finite");
        NoiseSpec { snr_db, seed }
    }
}

/// Mean squared sample value.
pub fn signal_power(samples: &[i16]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().map(|&s| (s as f64) * (s as f64)).sum::<f64>() / samples.len() as f64
}

/// Adds seeded white Gaussian noise at `spec.snr_db` below the signal.
///
/// The noise is drawn, made orthogonal to the signal and rescaled so the
/// realized ratio matches the request exactly rather than in expectation.
/// When the mix would overflow 16 bits, the whole mix is attenuated by one
/// common gain, which leaves the ratio intact; a final clamp catches
/// rounding at the edge.
pub fn mix_noise(stream: &AudioStream, spec: NoiseSpec) -> AudioStream {
    let n = stream.samples.len();
    if n == 0 {
        return stream.clone();
    }
    let signal: Vec<f64> = stream.samples.iter().map(|&s| s as f64).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut noise: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();

    let ss: f64 = signal.iter().map(|s| s * s).sum();
    if ss > 0.0 {
        let proj = noise.iter().zip(&signal).map(|(a, b)| a * b).sum::<f64>() / ss;
        for (v, s) in noise.iter_mut().zip(&signal) {
            *v -= proj * s;
        }
    }
    let ps = ss / n as f64;
    let target = ps / libm::pow(10.0, spec.snr_db / 10.0);
    let pn = noise.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let scale = if pn > 0.0 { libm::sqrt(target / pn) } else { 0.0 };

    let mixed: Vec<f64> = signal.iter().zip(&noise).map(|(s, v)| s + v * scale).collect();
    let peak = mixed.iter().fold(0.0f64, |m, v| m.max(libm::fabs(*v)));
    let gain = if peak > i16::MAX as f64 { i16::MAX as f64 / peak } else { 1.0 };
    let samples = mixed
        .iter()
        .map(|v| libm::round(v * gain).clamp(i16::MIN as f64, i16::MAX as f64) as i16)
        .collect();
    AudioStream::new(samples)
}
