//! WAV header inspection, aligner audio checks, and single-channel
//! extraction. No resampling: remediation is left to sox.

use thiserror::Error;

use crate::report::ValidationReport;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AudioError {
    #[error("not a RIFF/WAVE file")]
    NotRiff,
    #[error("no fmt chunk")]
    MissingFmtChunk,
    #[error("no data chunk")]
    MissingDataChunk,
    #[error("malformed {0} chunk")]
    MalformedChunk(&'static str),
    #[error("unsupported format code {0:#06x}")]
    UnsupportedFormatCode(u16),
    #[error("unsupported sample width of {0} bits")]
    UnsupportedBitDepth(u16),
    #[error("channel {requested} requested but the file has {channels}")]
    ChannelOutOfRange { requested: u16, channels: u16 },
}

pub type Result<T> = std::result::Result<T, AudioError>;

pub const FORMAT_PCM: u16 = 1;
pub const FORMAT_FLOAT: u16 = 3;
pub const FORMAT_EXTENSIBLE: u16 = 0xFFFE;
pub const MFA_SAMPLE_RATE: u32 = 16000;

/// Trailing 14 bytes shared by the KSDATAFORMAT sub-format GUIDs; the first
/// two bytes carry the plain format code.
const GUID_TAIL: [u8; 14] = [0x00, 0x00, 0x00, 0x00, 0x10, 0x00, 0x80, 0x00, 0x00, 0xAA, 0x00, 0x38, 0x9B, 0x71];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavInfo {
    pub sample_rate: u32,
    pub channels: u16,
    pub bits_per_sample: u16,
    /// 1 (integer PCM) or 3 (float); extensible files are reported by sub-format.
    pub format_code: u16,
    pub data_bytes: u64,
    /// Byte offset of the sample data within the file.
    pub data_offset: usize,
}

impl WavInfo {
    pub fn block_align(&self) -> u64 {
        self.channels as u64 * (self.bits_per_sample as u64 / 8)
    }

    pub fn frames(&self) -> u64 {
        self.data_bytes / self.block_align()
    }

    pub fn duration(&self) -> f64 {
        self.data_bytes as f64 / (self.block_align() as f64 * self.sample_rate as f64)
    }
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

pub fn parse_wav_header(content: &[u8]) -> Result<WavInfo> {
    if content.len() < 12 || &content[..4] != b"RIFF" || &content[8..12] != b"WAVE" {
        return Err(AudioError::NotRiff);
    }
    let mut fmt: Option<(u16, u16, u32, u16)> = None;
    let mut data: Option<(usize, u64)> = None;
    let mut pos = 12;
    while pos + 8 <= content.len() {
        let id = &content[pos..pos + 4];
        let size = u32_at(content, pos + 4) as usize;
        let body = pos + 8;
        match id {
            b"fmt " => {
                if size < 16 || body + size > content.len() {
                    return Err(AudioError::MalformedChunk("fmt"));
                }
                let mut code = u16_at(content, body);
                if code == FORMAT_EXTENSIBLE {
                    if size < 40 {
                        return Err(AudioError::MalformedChunk("fmt"));
                    }
                    let guid = &content[body + 24..body + 40];
                    if guid[2..] != GUID_TAIL {
                        return Err(AudioError::UnsupportedFormatCode(FORMAT_EXTENSIBLE));
                    }
                    code = u16_at(guid, 0);
                }
                fmt = Some((code, u16_at(content, body + 2), u32_at(content, body + 4), u16_at(content, body + 14)));
            }
            b"data" => {
                // streamed files may carry a placeholder size; trust the bytes present
                let available = content.len() - body;
                data = Some((body, size.min(available) as u64));
                if fmt.is_some() {
                    break;
                }
            }
            _ => {}
        }
        // chunks are word aligned
        pos = body.saturating_add(size).saturating_add(size & 1);
    }
    let (format_code, channels, sample_rate, bits_per_sample) = fmt.ok_or(AudioError::MissingFmtChunk)?;
    let (data_offset, data_bytes) = data.ok_or(AudioError::MissingDataChunk)?;
    if format_code != FORMAT_PCM && format_code != FORMAT_FLOAT {
        return Err(AudioError::UnsupportedFormatCode(format_code));
    }
    if channels == 0 || sample_rate == 0 {
        return Err(AudioError::MalformedChunk("fmt"));
    }
    if bits_per_sample == 0 || bits_per_sample % 8 != 0 || bits_per_sample > 64 {
        return Err(AudioError::UnsupportedBitDepth(bits_per_sample));
    }
    Ok(WavInfo { sample_rate, channels, bits_per_sample, format_code, data_bytes, data_offset })
}

/// Check against the aligner's 16 kHz mono requirement.
pub fn validate_for_mfa(info: &WavInfo) -> ValidationReport {
    validate_for_rate(info, MFA_SAMPLE_RATE)
}

pub fn validate_for_rate(info: &WavInfo, target_rate: u32) -> ValidationReport {
    let mut report = ValidationReport::new();
    if info.sample_rate != target_rate {
        report.error(
            "sample_rate",
            format!(
                "{} Hz, expected {target_rate} Hz; resample with e.g. `sox in.wav -r {target_rate} out.wav`",
                info.sample_rate
            ),
        );
    }
    if info.channels != 1 {
        report.error(
            "channels",
            format!("{} channels, expected 1; extract one with `phonprep audio mono` or `sox in.wav out.wav remix 1`", info.channels),
        );
    }
    report
}

/// Canonical 44-byte-header integer PCM WAV around `data`.
pub fn encode_pcm_wav(sample_rate: u32, channels: u16, bits_per_sample: u16, data: &[u8]) -> Vec<u8> {
    let block_align = channels * (bits_per_sample / 8);
    let mut out = Vec::with_capacity(44 + data.len() + 1);
    out.extend_from_slice(b"RIFF");
    let pad = data.len() & 1;
    out.extend_from_slice(&((36 + data.len() + pad) as u32).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * block_align as u32).to_le_bytes());
    out.extend_from_slice(&block_align.to_le_bytes());
    out.extend_from_slice(&bits_per_sample.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data.len() as u32).to_le_bytes());
    out.extend_from_slice(data);
    if pad == 1 {
        out.push(0);
    }
    out
}

/// 16-bit convenience wrapper over [`encode_pcm_wav`] for interleaved samples.
pub fn encode_pcm16(sample_rate: u32, channels: u16, samples: &[i16]) -> Vec<u8> {
    let data: Vec<u8> = samples.iter().flat_map(|s| s.to_le_bytes()).collect();
    encode_pcm_wav(sample_rate, channels, 16, &data)
}

/// Copy out one channel (1-based) of an integer PCM file as a mono WAV.
pub fn extract_channel(content: &[u8], channel: u16) -> Result<Vec<u8>> {
    let info = parse_wav_header(content)?;
    if info.format_code != FORMAT_PCM {
        return Err(AudioError::UnsupportedFormatCode(info.format_code));
    }
    if channel == 0 || channel > info.channels {
        return Err(AudioError::ChannelOutOfRange { requested: channel, channels: info.channels });
    }
    let width = info.bits_per_sample as usize / 8;
    let block = info.block_align() as usize;
    let offset = (channel as usize - 1) * width;
    let data = &content[info.data_offset..info.data_offset + info.frames() as usize * block];
    let mono: Vec<u8> = data.chunks_exact(block).flat_map(|frame| &frame[offset..offset + width]).copied().collect();
    Ok(encode_pcm_wav(info.sample_rate, 1, info.bits_per_sample, &mono))
}
