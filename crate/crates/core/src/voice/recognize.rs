use alloc::string::String;
use core::f64::consts::PI;

use super::alphabet::{symbol_for_slot, symbol_frequency, SLOTS, UNKNOWN_SYMBOL};
use super::{AudioStream, SAMPLE_RATE, SYMBOL_LEN};

/// The strongest candidate must beat the runner-up by this much.
pub const AMBIGUITY_MARGIN_DB: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecognizeError {
    #[error("stream length {0} is not a whole number of symbols")]
    Length(usize),
}

fn goertzel(segment: &[i16], coeff: f64) -> f64 {
    let (mut s1, mut s2) = (0.0f64, 0.0f64);
    for &x in segment {
        let s0 = x as f64 + coeff * s1 - s2;
        s2 = s1;
        s1 = s0;
    }
    s1 * s1 + s2 * s2 - coeff * s1 * s2
}

fn coefficients() -> [f64; SLOTS] {
    let mut c = [0.0; SLOTS];
    for (slot, v) in c.iter_mut().enumerate() {
        *v = 2.0 * libm::cos(2.0 * PI * symbol_frequency(slot) / SAMPLE_RATE as f64);
    }
    c
}

/// Tone energy at every candidate frequency for one segment.
pub fn segment_energies(segment: &[i16]) -> [f64; SLOTS] {
    let coeffs = coefficients();
    let mut out = [0.0; SLOTS];
    for (e, c) in out.iter_mut().zip(coeffs) {
        *e = goertzel(segment, c);
    }
    out
}

fn decode_segment(energies: &[f64; SLOTS]) -> char {
    let (mut best, mut second) = ((0usize, f64::MIN), f64::MIN);
    for (slot, &e) in energies.iter().enumerate() {
        if e > best.1 {
            second = best.1;
            best = (slot, e);
        } else if e > second {
            second = e;
        }
    }
    let margin = libm::pow(10.0, AMBIGUITY_MARGIN_DB / 10.0);
    if best.1.is_nan() || best.1 <= 0.0 || best.1 < second * margin {
        return UNKNOWN_SYMBOL;
    }
    symbol_for_slot(best.0).unwrap_or(UNKNOWN_SYMBOL)
}

/// Decodes one symbol per 800-sample segment. Segments whose two strongest
/// tones are within 3 dB, or whose strongest tone is a reserved slot,
/// decode as `?`.
pub fn recognize(stream: &AudioStream) -> Result<String, RecognizeError> {
    let n = stream.samples.len();
    if n == 0 || !n.is_multiple_of(SYMBOL_LEN) {
        return Err(RecognizeError::Length(n));
    }
    let coeffs = coefficients();
    Ok(stream
        .samples
        .chunks_exact(SYMBOL_LEN)
        .map(|seg| {
            let mut energies = [0.0; SLOTS];
            for (e, &c) in energies.iter_mut().zip(&coeffs) {
                *e = goertzel(seg, c);
            }
            decode_segment(&energies)
        })
        .collect())
}
