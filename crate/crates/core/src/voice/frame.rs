use alloc::vec::Vec;

use super::AudioStream;

pub const FRAME_MAGIC: [u8; 4] = *b"TVVC";
pub const FRAME_VERSION: u8 = 1;
/// Magic, version, rate and count.
pub const FRAME_HEADER_LEN: usize = 13;
/// Upper bound on samples accepted from the wire (two minutes at 16 kHz).
pub const MAX_FRAME_SAMPLES: u32 = 16_000 * 120;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrameError {
    #[error("bad magic")]
    BadMagic,
    #[error("unsupported version {0}")]
    BadVersion(u8),
    #[error("frame declares {0} samples, over the limit")]
    TooLarge(u32),
    #[error("truncated frame: need {expected} bytes, have {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("{0} trailing bytes after frame")]
    Trailing(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameHeader {
    pub sample_rate: u32,
    pub sample_count: u32,
}

impl FrameHeader {
    pub fn decode(bytes: &[u8]) -> Result<FrameHeader, FrameError> {
        if bytes.len() < FRAME_HEADER_LEN {
            return Err(FrameError::Truncated {
                expected: FRAME_HEADER_LEN,
                actual: bytes.len(),
            });
        }
        if bytes[..4] != FRAME_MAGIC {
            return Err(FrameError::BadMagic);
        }
        if bytes[4] != FRAME_VERSION {
            return Err(FrameError::BadVersion(bytes[4]));
        }
        let sample_rate = u32::from_be_bytes([bytes[5], bytes[6], bytes[7], bytes[8]]);
        let sample_count = u32::from_be_bytes([bytes[9], bytes[10], bytes[11], bytes[12]]);
        if sample_count > MAX_FRAME_SAMPLES {
            return Err(FrameError::TooLarge(sample_count));
        }
        Ok(FrameHeader {
            sample_rate,
            sample_count,
        })
    }

    pub fn body_len(&self) -> usize {
        self.sample_count as usize * 2
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VoiceFrame {
    pub sample_rate: u32,
    pub samples: Vec<i16>,
}

impl VoiceFrame {
    pub fn from_stream(stream: &AudioStream) -> Self {
        VoiceFrame {
            sample_rate: stream.sample_rate(),
            samples: stream.samples.clone(),
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FRAME_HEADER_LEN + self.samples.len() * 2);
        out.extend_from_slice(&FRAME_MAGIC);
        out.push(FRAME_VERSION);
        out.extend_from_slice(&self.sample_rate.to_be_bytes());
        out.extend_from_slice(&(self.samples.len() as u32).to_be_bytes());
        for s in &self.samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
        out
    }

    /// Decodes the samples that follow an already decoded header.
    pub fn decode_body(header: FrameHeader, body: &[u8]) -> Result<VoiceFrame, FrameError> {
        let expected = header.body_len();
        if body.len() < expected {
            return Err(FrameError::Truncated {
                expected: FRAME_HEADER_LEN + expected,
                actual: FRAME_HEADER_LEN + body.len(),
            });
        }
        if body.len() > expected {
            return Err(FrameError::Trailing(body.len() - expected));
        }
        let samples = body.chunks_exact(2).map(|b| i16::from_be_bytes([b[0], b[1]])).collect();
        Ok(VoiceFrame {
            sample_rate: header.sample_rate,
            samples,
        })
    }

    pub fn decode(bytes: &[u8]) -> Result<VoiceFrame, FrameError> {
        let header = FrameHeader::decode(bytes)?;
        VoiceFrame::decode_body(header, &bytes[FRAME_HEADER_LEN..])
    }

    pub fn into_stream(self) -> AudioStream {
        AudioStream::new(self.samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout() {
        let f = VoiceFrame {
            sample_rate: 16000,
            samples: alloc::vec![1, -2],
        };
        let bytes = f.encode();
        assert_eq!(
            bytes,
            [b'T', b'V', b'V', b'C', 1, 0, 0, 0x3e, 0x80, 0, 0, 0, 2, 0, 1, 0xff, 0xfe]
        );
        assert_eq!(VoiceFrame::decode(&bytes).unwrap(), f);
    }

    #[test]
    fn rejects_malformed() {
        let good = VoiceFrame { sample_rate: 16000, samples: alloc::vec![5; 3] }.encode();
        let mut bad = good.clone();
        bad[0] = b'X';
        assert_eq!(VoiceFrame::decode(&bad), Err(FrameError::BadMagic));
        let mut bad = good.clone();
        bad[4] = 2;
        assert_eq!(VoiceFrame::decode(&bad), Err(FrameError::BadVersion(2)));
        assert!(matches!(VoiceFrame::decode(&good[..good.len() - 1]), Err(FrameError::Truncated { .. })));
        let mut long = good.clone();
        long.push(0);
        assert_eq!(VoiceFrame::decode(&long), Err(FrameError::Trailing(1)));
        let mut huge = good;
        huge[9..13].copy_from_slice(&u32::MAX.to_be_bytes());
        assert_eq!(VoiceFrame::decode(&huge), Err(FrameError::TooLarge(u32::MAX)));
    }
}
