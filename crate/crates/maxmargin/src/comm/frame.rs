//! Wire format: a 1-byte tag, an 8-byte little-endian payload byte count,
//! then the payload as raw little-endian 64-bit floats. No compression; a
//! frame is readable straight off a hex dump.

use crate::error::{Error, Result};
use std::io::{Read, Write};

/// Broadcast frames use tags `BCAST_TAG_BASE | channel` for channel 0..=15.
pub const BCAST_TAG_BASE: u8 = 0x40;

/// Sanity cap on payload size (1 GiB) so a corrupt length field fails fast.
const MAX_PAYLOAD_BYTES: u64 = 1 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tag {
    Register,
    RegisterAck,
    ReduceSum,
    ReduceMax,
    ReduceMin,
    MinResult,
    Gather,
    Abort,
    Broadcast(u8),
}

impl Tag {
    pub fn to_byte(self) -> u8 {
        match self {
            Tag::Register => 1,
            Tag::RegisterAck => 2,
            Tag::ReduceSum => 3,
            Tag::ReduceMax => 4,
            Tag::ReduceMin => 5,
            Tag::MinResult => 6,
            Tag::Gather => 7,
            Tag::Abort => 8,
            Tag::Broadcast(ch) => BCAST_TAG_BASE | (ch & 0x0F),
        }
    }

    pub fn from_byte(b: u8) -> Result<Tag> {
        Ok(match b {
            1 => Tag::Register,
            2 => Tag::RegisterAck,
            3 => Tag::ReduceSum,
            4 => Tag::ReduceMax,
            5 => Tag::ReduceMin,
            6 => Tag::MinResult,
            7 => Tag::Gather,
            8 => Tag::Abort,
            b if b & 0xF0 == BCAST_TAG_BASE => Tag::Broadcast(b & 0x0F),
            other => return Err(Error::Protocol(format!("unknown frame tag {other:#04x}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub tag: Tag,
    pub payload: Vec<f64>,
}

impl Frame {
    pub fn new(tag: Tag, payload: Vec<f64>) -> Self {
        Frame { tag, payload }
    }

    /// Payload bytes as counted by the traffic meters.
    pub fn payload_bytes(&self) -> u64 {
        (self.payload.len() * 8) as u64
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        let mut buf = Vec::with_capacity(9 + self.payload.len() * 8);
        buf.push(self.tag.to_byte());
        buf.extend_from_slice(&self.payload_bytes().to_le_bytes());
        for v in &self.payload {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Frame> {
        let mut tag_byte = [0u8; 1];
        r.read_exact(&mut tag_byte)?;
        let tag = Tag::from_byte(tag_byte[0])?;
        let mut len_bytes = [0u8; 8];
        r.read_exact(&mut len_bytes)?;
        let len = u64::from_le_bytes(len_bytes);
        if len % 8 != 0 || len > MAX_PAYLOAD_BYTES {
            return Err(Error::Protocol(format!("bad payload length {len}")));
        }
        let mut raw = vec![0u8; len as usize];
        r.read_exact(&mut raw)?;
        let payload = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        Ok(Frame { tag, payload })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let frame = Frame::new(Tag::ReduceSum, vec![1.5, -0.25, f64::MIN_POSITIVE]);
        let mut buf = Vec::new();
        frame.write_to(&mut buf).unwrap();
        assert_eq!(buf.len(), 9 + 24);
        assert_eq!(buf[0], 3);
        assert_eq!(u64::from_le_bytes(buf[1..9].try_into().unwrap()), 24);
        let back = Frame::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(back, frame);
    }

    #[test]
    fn unknown_tag_rejected() {
        let mut buf = vec![0xEEu8];
        buf.extend_from_slice(&0u64.to_le_bytes());
        let err = Frame::read_from(&mut buf.as_slice()).unwrap_err();
        assert!(err.to_string().contains("unknown frame tag"), "{err}");
    }

    #[test]
    fn ragged_length_rejected() {
        let mut buf = vec![3u8];
        buf.extend_from_slice(&7u64.to_le_bytes());
        buf.extend_from_slice(&[0; 7]);
        assert!(Frame::read_from(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn broadcast_tag_channels() {
        for ch in 0..16u8 {
            let b = Tag::Broadcast(ch).to_byte();
            assert_eq!(Tag::from_byte(b).unwrap(), Tag::Broadcast(ch));
        }
    }
}
