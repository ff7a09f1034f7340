//! RIFF/WAVE ingest and canonical output for 16-bit PCM.
//!
//! Parsing accepts any channel count and downmixes to mono. Unknown chunks
//! (`LIST`, `fact`, ...) are skipped. Writing always produces the canonical
//! 44-byte header layout: `RIFF`, a 16-byte `fmt ` chunk, then `data`.

use thiserror::Error;

/// Sample rates accepted at ingest, in Hz.
pub const SUPPORTED_RATES: [u32; 7] = [5000, 8000, 11025, 16000, 22050, 44100, 48000];

const FORMAT_PCM: u16 = 1;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;
const CANONICAL_HEADER_LEN: usize = 44;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WavError {
    #[error("malformed RIFF/WAVE container: {0}")]
    MalformedContainer(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("unsupported sample rate {0} Hz")]
    UnsupportedRate(u32),
    #[error("audio contains no samples")]
    EmptyAudio,
}

/// Decoded mono PCM audio.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioBuffer {
    samples: Vec<i16>,
    sample_rate: u32,
}

impl AudioBuffer {
    /// Builds a buffer, enforcing the non-empty and supported-rate invariants.
    pub fn new(samples: Vec<i16>, sample_rate: u32) -> Result<Self, WavError> {
        if !SUPPORTED_RATES.contains(&sample_rate) {
            return Err(WavError::UnsupportedRate(sample_rate));
        }
        if samples.is_empty() {
            return Err(WavError::EmptyAudio);
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[i16] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false for a constructed buffer; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    pub fn into_samples(self) -> Vec<i16> {
        self.samples
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], WavError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| WavError::MalformedContainer(format!("truncated while reading {what}")))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn tag(&mut self, what: &str) -> Result<[u8; 4], WavError> {
        let b = self.take(4, what)?;
        Ok([b[0], b[1], b[2], b[3]])
    }

    fn u32(&mut self, what: &str) -> Result<u32, WavError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

fn le_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn le_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

struct FmtChunk {
    channels: u16,
    sample_rate: u32,
    block_align: u16,
}

fn parse_fmt(body: &[u8]) -> Result<FmtChunk, WavError> {
    if body.len() < 16 {
        return Err(WavError::MalformedContainer(format!(
            "fmt chunk is {} bytes, need at least 16",
            body.len()
        )));
    }
    let mut format_tag = le_u16(body, 0);
    let channels = le_u16(body, 2);
    let sample_rate = le_u32(body, 4);
    let block_align = le_u16(body, 12);
    let bits = le_u16(body, 14);

    if format_tag == FORMAT_EXTENSIBLE {
        // cbSize(2) validBits(2) channelMask(4) subformat GUID(16); first two GUID bytes carry the tag
        if body.len() < 40 {
            return Err(WavError::MalformedContainer(
                "WAVE_FORMAT_EXTENSIBLE fmt chunk shorter than 40 bytes".into(),
            ));
        }
        format_tag = le_u16(body, 24);
    }
    if format_tag != FORMAT_PCM {
        return Err(WavError::UnsupportedFormat(format!(
            "format tag {format_tag:#06x} is not PCM"
        )));
    }
    if bits != 16 {
        return Err(WavError::UnsupportedFormat(format!(
            "{bits}-bit samples (only 16-bit PCM supported)"
        )));
    }
    if channels == 0 {
        return Err(WavError::MalformedContainer("zero channels".into()));
    }
    if usize::from(block_align) != usize::from(channels) * 2 {
        return Err(WavError::MalformedContainer(format!(
            "block align {block_align} inconsistent with {channels} channels of 16-bit audio"
        )));
    }
    if !SUPPORTED_RATES.contains(&sample_rate) {
        return Err(WavError::UnsupportedRate(sample_rate));
    }
    Ok(FmtChunk {
        channels,
        sample_rate,
        block_align,
    })
}

/// Mean of one interleaved frame, rounded to nearest with ties away from zero.
fn downmix(frame: &[u8]) -> i16 {
    let channels = (frame.len() / 2) as i64;
    let sum: i64 = frame
        .chunks_exact(2)
        .map(|b| i64::from(i16::from_le_bytes([b[0], b[1]])))
        .sum();
    let q = sum / channels;
    let r = sum % channels;
    // round half away from zero using integer arithmetic
    let mean = if 2 * r.abs() >= channels { q + r.signum() } else { q };
    mean as i16
}

/// Parses a 16-bit PCM RIFF/WAVE byte stream into a mono buffer.
pub fn parse_wav(bytes: &[u8]) -> Result<AudioBuffer, WavError> {
    let mut r = Reader { bytes, pos: 0 };
    if &r.tag("RIFF magic")? != b"RIFF" {
        return Err(WavError::MalformedContainer("missing RIFF magic".into()));
    }
    let riff_len = r.u32("RIFF size")? as usize;
    if &r.tag("WAVE magic")? != b"WAVE" {
        return Err(WavError::MalformedContainer("missing WAVE identifier".into()));
    }
    // Declared RIFF payload bounds every chunk; never read past it.
    let riff_end = 8usize
        .checked_add(riff_len)
        .filter(|&end| end <= bytes.len())
        .ok_or_else(|| {
            WavError::MalformedContainer(format!(
                "RIFF size {riff_len} exceeds the {} available bytes",
                bytes.len().saturating_sub(8)
            ))
        })?;
    let mut r = Reader {
        bytes: &bytes[..riff_end],
        pos: r.pos,
    };

    let mut fmt: Option<FmtChunk> = None;
    loop {
        if r.pos == r.bytes.len() {
            return Err(WavError::MalformedContainer("no data chunk".into()));
        }
        let id = r.tag("chunk id")?;
        let len = r.u32("chunk size")? as usize;
        let body = r.take(len, "chunk body")?;
        match &id {
            b"fmt " => fmt = Some(parse_fmt(body)?),
            b"data" => {
                let fmt = fmt.ok_or_else(|| WavError::MalformedContainer("data chunk precedes fmt chunk".into()))?;
                let align = usize::from(fmt.block_align);
                if body.len() % align != 0 {
                    return Err(WavError::MalformedContainer(format!(
                        "data length {} is not a multiple of block align {align}",
                        body.len()
                    )));
                }
                let samples: Vec<i16> = if fmt.channels == 1 {
                    body.chunks_exact(2).map(|b| i16::from_le_bytes([b[0], b[1]])).collect()
                } else {
                    body.chunks_exact(align).map(downmix).collect()
                };
                return AudioBuffer::new(samples, fmt.sample_rate);
            }
            _ => {}
        }
        // chunks are word aligned; a pad byte follows odd-sized bodies
        if len % 2 == 1 && r.pos < r.bytes.len() {
            r.take(1, "chunk padding")?;
        }
    }
}

/// Serialises a buffer as a canonical mono 16-bit PCM file.
pub fn write_wav(buffer: &AudioBuffer) -> Vec<u8> {
    let data_len = buffer.samples.len() * 2;
    let mut out = Vec::with_capacity(CANONICAL_HEADER_LEN + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&((36 + data_len) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&buffer.sample_rate.to_le_bytes());
    out.extend_from_slice(&(buffer.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for s in &buffer.samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}
