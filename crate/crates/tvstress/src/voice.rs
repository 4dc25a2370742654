//! Client side of the voice channel: one frame out, one reply line back.

use std::io::{self, BufReader, Write};
use std::time::Duration;

use tvstress_core::reply::{MalformedReply, Reply};
use tvstress_core::voice::{mix_noise, synthesize, NoiseSpec, SynthError, VoiceFrame};

use crate::net;

#[derive(Debug, thiserror::Error)]
pub enum VoiceError {
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("voice connection: {0}")]
    Transport(#[from] io::Error),
    #[error("voice protocol: {0}")]
    Protocol(#[from] MalformedReply),
}

impl VoiceError {
    pub fn is_transport(&self) -> bool {
        matches!(self, VoiceError::Transport(_))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VoiceTimeouts {
    pub connect: Duration,
    pub io: Duration,
}

impl Default for VoiceTimeouts {
    fn default() -> Self {
        VoiceTimeouts {
            connect: Duration::from_secs(2),
            io: Duration::from_secs(10),
        }
    }
}

pub fn send_frame(endpoint: &str, frame: &VoiceFrame, t: VoiceTimeouts) -> Result<Reply, VoiceError> {
    let mut stream = net::connect(endpoint, t.connect)?;
    stream.set_read_timeout(Some(t.io))?;
    stream.set_write_timeout(Some(t.io))?;
    stream.write_all(&frame.encode())?;
    stream.flush()?;
    let line = net::expect_line(&mut BufReader::new(stream))?;
    Ok(Reply::parse(&line)?)
}

/// Synthesizes `text` and delivers it over a clean channel.
pub fn send_voice_cmd(endpoint: &str, text: &str, t: VoiceTimeouts) -> Result<Reply, VoiceError> {
    let stream = synthesize(text)?;
    send_frame(endpoint, &VoiceFrame::from_stream(&stream), t)
}

/// Synthesizes `text`, mixes in seeded noise at `snr_db`, and delivers it.
pub fn send_noisy_voice_cmd(endpoint: &str, text: &str, snr_db: f64, seed: u64, t: VoiceTimeouts) -> Result<Reply, VoiceError> {
    let clean = synthesize(text)?;
    let noisy = mix_noise(&clean, NoiseSpec::new(snr_db, seed));
    send_frame(endpoint, &VoiceFrame::from_stream(&noisy), t)
}
