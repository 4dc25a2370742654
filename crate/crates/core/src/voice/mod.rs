//! Tone-coded voice commands: synthesis, additive noise, recognition and
//! the frame that carries audio over the wire.
//!
//! Each symbol is a 50 ms tone at `400 + 25·index` Hz sampled at 16 kHz.
//! The recognizer runs one Goertzel filter per candidate frequency over
//! each 800-sample segment.

mod alphabet;
mod frame;
mod noise;
mod recognize;
mod synth;

pub use alphabet::{symbol_frequency, symbol_index, symbol_for_slot, ALPHABET, SLOTS, UNKNOWN_SYMBOL};
pub use frame::{FrameError, FrameHeader, VoiceFrame, FRAME_HEADER_LEN, FRAME_MAGIC, FRAME_VERSION, MAX_FRAME_SAMPLES};
pub use noise::{mix_noise, signal_power, NoiseSpec};
pub use recognize::{recognize, segment_energies, RecognizeError, AMBIGUITY_MARGIN_DB};
pub use synth::{synthesize, SynthError, AMPLITUDE, FADE_LEN};

use alloc::vec::Vec;

pub const SAMPLE_RATE: u32 = 16_000;
/// Samples per symbol (50 ms).
pub const SYMBOL_LEN: usize = 800;

/// Mono 16-bit PCM at [`SAMPLE_RATE`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AudioStream {
    pub samples: Vec<i16>,
}

impl AudioStream {
    pub fn new(samples: Vec<i16>) -> Self {
        AudioStream { samples }
    }

    pub fn sample_rate(&self) -> u32 {
        SAMPLE_RATE
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn symbol_count(&self) -> usize {
        self.samples.len() / SYMBOL_LEN
    }
}
