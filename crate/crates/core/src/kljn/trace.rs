//! Raw trace dump.
//!
//! Little-endian layout:
//!
//! | offset | type    | content                         |
//! |--------|---------|---------------------------------|
//! | 0      | [u8; 4] | magic `KLJN`                    |
//! | 4      | u32     | format version (1)              |
//! | 8      | f64     | sample rate, Hz                 |
//! | 16     | u64     | samples per channel             |
//! | 24     | f64 × n | channel 0, then channel 1, ...  |
//!
//! Simulation dumps carry three channels: Alice-end voltage, Bob-end
//! voltage, loop current.

use std::io::{self, Read, Write};

pub const MAGIC: &[u8; 4] = b"KLJN";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceFile {
    pub sample_rate: f64,
    pub channels: Vec<Vec<f64>>,
}

pub fn write_traces<W: Write>(mut out: W, sample_rate: f64, channels: &[&[f64]]) -> io::Result<()> {
    let count = channels.first().map_or(0, |c| c.len());
    if channels.iter().any(|c| c.len() != count) {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "channels differ in length"));
    }
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&sample_rate.to_le_bytes())?;
    out.write_all(&(count as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(count * 8);
    for ch in channels {
        buf.clear();
        for v in ch.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    out.flush()
}

pub fn read_traces<R: Read>(mut input: R) -> io::Result<TraceFile> {
    let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
    let mut header = [0u8; 24];
    input.read_exact(&mut header)?;
    if &header[0..4] != MAGIC {
        return Err(bad("missing KLJN magic"));
    }
    let version = u32::from_le_bytes(header[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(bad(&format!("unsupported trace version {version}")));
    }
    let sample_rate = f64::from_le_bytes(header[8..16].try_into().unwrap());
    let count = u64::from_le_bytes(header[16..24].try_into().unwrap());
    let mut body = Vec::new();
    input.read_to_end(&mut body)?;
    let channel_bytes = count
        .checked_mul(8)
        .and_then(|b| usize::try_from(b).ok())
        .ok_or_else(|| bad("sample count overflows"))?;
    if channel_bytes == 0 {
        return if body.is_empty() {
            Ok(TraceFile { sample_rate, channels: Vec::new() })
        } else {
            Err(bad("trailing bytes after an empty header"))
        };
    }
    if body.len() % channel_bytes != 0 {
        return Err(bad("body is not a whole number of channels"));
    }
    let channels = body
        .chunks_exact(channel_bytes)
        .map(|ch| ch.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect())
        .collect();
    Ok(TraceFile { sample_rate, channels })
}
