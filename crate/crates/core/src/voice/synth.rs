use alloc::vec::Vec;
use core::f64::consts::PI;

use super::alphabet::{symbol_frequency, symbol_index};
use super::{AudioStream, SAMPLE_RATE, SYMBOL_LEN};

/// Peak amplitude of a tone, 0.6 of full scale.
pub const AMPLITUDE: f64 = 0.6 * i16::MAX as f64;
/// Raised-cosine ramp at each end of a segment (5 ms).
pub const FADE_LEN: usize = 80;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SynthError {
    #[error("empty voice command")]
    Empty,
    #[error("unsupported character {ch:?} at position {position}")]
    UnsupportedCharacter { ch: char, position: usize },
}

fn envelope(n: usize) -> f64 {
    let edge = n.min(SYMBOL_LEN - 1 - n);
    if edge >= FADE_LEN {
        1.0
    } else {
        0.5 * (1.0 - libm::cos(PI * edge as f64 / FADE_LEN as f64))
    }
}

pub fn synthesize(text: &str) -> Result<AudioStream, SynthError> {
    if text.is_empty() {
        return Err(SynthError::Empty);
    }
    let slots = text
        .chars()
        .enumerate()
        .map(|(position, ch)| symbol_index(ch).ok_or(SynthError::UnsupportedCharacter { ch, position }))
        .collect::<Result<Vec<_>, _>>()?;
    let mut samples = Vec::with_capacity(slots.len() * SYMBOL_LEN);
    for slot in slots {
        let w = 2.0 * PI * symbol_frequency(slot) / SAMPLE_RATE as f64;
        for n in 0..SYMBOL_LEN {
            let v = AMPLITUDE * envelope(n) * libm::sin(w * n as f64);
            samples.push(libm::round(v) as i16);
        }
    }
    Ok(AudioStream::new(samples))
}
