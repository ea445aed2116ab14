//! Bit-exact little-endian wire format.
//!
//! Perception frame: `"CAMP" | version u8 | node_id u16 | seq u32 |
//! capture_time u64 | count u16` followed by `count` records of
//! `class_code u8 | x f64 | y f64 | sigma f32`. A record's object index is
//! its ordinal within the frame.
//!
//! Warning frame: `"CAMW" | version u8 | event_id u64 | track_a u64 |
//! track_b u64 | time_to_conflict f64 | min_distance f64 | issued_at u64`.

use thiserror::Error;

use crate::geometry::Timestamp;

pub const PERCEPTION_MAGIC: [u8; 4] = *b"CAMP";
pub const WARNING_MAGIC: [u8; 4] = *b"CAMW";
pub const VERSION: u8 = 0x01;
pub const HEADER_LEN: usize = 21;
pub const RECORD_LEN: usize = 21;
pub const WARNING_LEN: usize = 53;
pub const MAX_RECORDS: usize = u16::MAX as usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CodecError {
    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("unexpected end of frame (need {needed} bytes, have {available})")]
    Truncated { needed: usize, available: usize },
    #[error("{0} trailing bytes after frame")]
    TrailingBytes(usize),
    #[error("{0} records exceed the frame limit of {MAX_RECORDS}")]
    TooManyRecords(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectRecord {
    pub class_code: u8,
    pub x: f64,
    pub y: f64,
    pub sigma: f32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerceptionMessage {
    pub node_id: u16,
    pub seq: u32,
    pub capture_time: Timestamp,
    pub records: Vec<ObjectRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarningMessage {
    pub event_id: u64,
    pub track_a: u64,
    pub track_b: u64,
    pub time_to_conflict: f64,
    pub min_distance: f64,
    pub issued_at: Timestamp,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Frame {
    Perception(PerceptionMessage),
    Warning(WarningMessage),
}

pub fn encoded_len(record_count: usize) -> usize {
    HEADER_LEN + RECORD_LEN * record_count
}

pub fn encode(msg: &PerceptionMessage) -> Result<Vec<u8>, CodecError> {
    let count = msg.records.len();
    if count > MAX_RECORDS {
        return Err(CodecError::TooManyRecords(count));
    }
    let mut out = Vec::with_capacity(encoded_len(count));
    out.extend_from_slice(&PERCEPTION_MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&msg.node_id.to_le_bytes());
    out.extend_from_slice(&msg.seq.to_le_bytes());
    out.extend_from_slice(&msg.capture_time.0.to_le_bytes());
    out.extend_from_slice(&(count as u16).to_le_bytes());
    for r in &msg.records {
        out.push(r.class_code);
        out.extend_from_slice(&r.x.to_le_bytes());
        out.extend_from_slice(&r.y.to_le_bytes());
        out.extend_from_slice(&r.sigma.to_le_bytes());
    }
    Ok(out)
}

pub fn encode_warning(msg: &WarningMessage) -> Vec<u8> {
    let mut out = Vec::with_capacity(WARNING_LEN);
    out.extend_from_slice(&WARNING_MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&msg.event_id.to_le_bytes());
    out.extend_from_slice(&msg.track_a.to_le_bytes());
    out.extend_from_slice(&msg.track_b.to_le_bytes());
    out.extend_from_slice(&msg.time_to_conflict.to_le_bytes());
    out.extend_from_slice(&msg.min_distance.to_le_bytes());
    out.extend_from_slice(&msg.issued_at.0.to_le_bytes());
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], CodecError> {
        let end = self.pos + N;
        if end > self.buf.len() {
            return Err(CodecError::Truncated {
                needed: end,
                available: self.buf.len(),
            });
        }
        let mut a = [0u8; N];
        a.copy_from_slice(&self.buf[self.pos..end]);
        self.pos = end;
        Ok(a)
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take::<1>()?[0])
    }
    fn u16(&mut self) -> Result<u16, CodecError> {
        Ok(u16::from_le_bytes(self.take()?))
    }
    fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(self.take()?))
    }
    fn f32(&mut self) -> Result<f32, CodecError> {
        Ok(f32::from_le_bytes(self.take()?))
    }
    fn f64(&mut self) -> Result<f64, CodecError> {
        Ok(f64::from_le_bytes(self.take()?))
    }

    fn finish(&self) -> Result<(), CodecError> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            n => Err(CodecError::TrailingBytes(n)),
        }
    }
}

/// Checks magic and version. A short prefix that still agrees with the
/// magic is reported as truncation.
fn check_preamble(bytes: &[u8], magic: [u8; 4]) -> Result<(), CodecError> {
    let n = bytes.len().min(4);
    if bytes[..n] != magic[..n] {
        let mut found = [0u8; 4];
        found[..n].copy_from_slice(&bytes[..n]);
        return Err(CodecError::BadMagic(found));
    }
    if bytes.len() < 5 {
        return Err(CodecError::Truncated {
            needed: 5,
            available: bytes.len(),
        });
    }
    if bytes[4] != VERSION {
        return Err(CodecError::UnsupportedVersion(bytes[4]));
    }
    Ok(())
}

pub fn decode(bytes: &[u8]) -> Result<PerceptionMessage, CodecError> {
    check_preamble(bytes, PERCEPTION_MAGIC)?;
    let mut r = Reader { buf: bytes, pos: 5 };
    let node_id = r.u16()?;
    let seq = r.u32()?;
    let capture_time = Timestamp(r.u64()?);
    let count = r.u16()? as usize;
    let needed = encoded_len(count);
    if bytes.len() < needed {
        return Err(CodecError::Truncated {
            needed,
            available: bytes.len(),
        });
    }
    let mut records = Vec::with_capacity(count);
    for _ in 0..count {
        records.push(ObjectRecord {
            class_code: r.u8()?,
            x: r.f64()?,
            y: r.f64()?,
            sigma: r.f32()?,
        });
    }
    r.finish()?;
    Ok(PerceptionMessage {
        node_id,
        seq,
        capture_time,
        records,
    })
}

pub fn decode_warning(bytes: &[u8]) -> Result<WarningMessage, CodecError> {
    check_preamble(bytes, WARNING_MAGIC)?;
    let mut r = Reader { buf: bytes, pos: 5 };
    let msg = WarningMessage {
        event_id: r.u64()?,
        track_a: r.u64()?,
        track_b: r.u64()?,
        time_to_conflict: r.f64()?,
        min_distance: r.f64()?,
        issued_at: Timestamp(r.u64()?),
    };
    r.finish()?;
    Ok(msg)
}

/// Decodes either frame kind, dispatching on the magic.
pub fn decode_frame(bytes: &[u8]) -> Result<Frame, CodecError> {
    if bytes.len() >= 4 && bytes[..4] == WARNING_MAGIC {
        decode_warning(bytes).map(Frame::Warning)
    } else {
        decode(bytes).map(Frame::Perception)
    }
}
