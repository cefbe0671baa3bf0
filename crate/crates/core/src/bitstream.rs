//! The `CMC1` bitstream container plus MSB-first bit writer/reader.
//!
//! Container layout (all integers little-endian):
//!
//! | offset | size | field                |
//! |--------|------|----------------------|
//! | 0      | 4    | magic `"CMC1"`       |
//! | 4      | 1    | version (1)          |
//! | 5      | 1    | codec id             |
//! | 6      | 4    | codebook id (u32)    |
//! | 10     | 4    | payload bit length   |
//! | 14     | n    | payload, MSB first   |

use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"CMC1";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum CodecId {
    CmcText = 0,
    BaselineDct = 1,
}

impl CodecId {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Self::CmcText),
            1 => Some(Self::BaselineDct),
            _ => None,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Self::CmcText => "cmc",
            Self::BaselineDct => "dct",
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BitstreamError {
    #[error("bad container magic")]
    BadMagic,
    #[error("unsupported container version {0}")]
    BadVersion(u8),
    #[error("unsupported codec id {0}")]
    UnsupportedCodec(u8),
    #[error("truncated stream: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("{0} unexpected bytes after payload")]
    TrailingBytes(usize),
    #[error("payload length {bytes} bytes does not match bit length {bits}")]
    LengthMismatch { bits: u32, bytes: usize },
    #[error("padding bits after bit {0} are not zero")]
    NonZeroPadding(u32),
}

/// Entropy-coded payload tagged with its codec and codebook.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Bitstream {
    codec_id: CodecId,
    codebook_id: u32,
    payload_bit_length: u32,
    payload: Vec<u8>,
}

impl Bitstream {
    /// Checks the packing invariants: exact byte count and zero padding.
    pub fn new(
        codec_id: CodecId,
        codebook_id: u32,
        payload_bit_length: u32,
        payload: Vec<u8>,
    ) -> Result<Self, BitstreamError> {
        let bytes = payload_bit_length.div_ceil(8) as usize;
        if payload.len() != bytes {
            return Err(BitstreamError::LengthMismatch {
                bits: payload_bit_length,
                bytes: payload.len(),
            });
        }
        let used = payload_bit_length % 8;
        if used != 0 {
            let mask = 0xffu8 >> used;
            if payload[bytes - 1] & mask != 0 {
                return Err(BitstreamError::NonZeroPadding(payload_bit_length));
            }
        }
        Ok(Self {
            codec_id,
            codebook_id,
            payload_bit_length,
            payload,
        })
    }

    pub fn from_writer(codec_id: CodecId, codebook_id: u32, writer: BitWriter) -> Self {
        let (payload, bits) = writer.finish();
        Self::new(codec_id, codebook_id, bits, payload).expect("BitWriter output is well packed")
    }

    pub fn codec_id(&self) -> CodecId {
        self.codec_id
    }

    pub fn codebook_id(&self) -> u32 {
        self.codebook_id
    }

    pub fn payload_bit_length(&self) -> u32 {
        self.payload_bit_length
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn reader(&self) -> BitReader<'_> {
        BitReader::new(&self.payload, self.payload_bit_length as usize)
    }

    /// Size of the serialized container in bytes.
    pub fn serialized_len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }

    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.serialized_len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(self.codec_id as u8);
        out.extend_from_slice(&self.codebook_id.to_le_bytes());
        out.extend_from_slice(&self.payload_bit_length.to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn deserialize(bytes: &[u8]) -> Result<Self, BitstreamError> {
        if bytes.len() < MAGIC.len() || &bytes[..4] != MAGIC {
            return Err(BitstreamError::BadMagic);
        }
        if bytes.len() < HEADER_LEN {
            return Err(BitstreamError::Truncated {
                needed: HEADER_LEN,
                available: bytes.len(),
            });
        }
        if bytes[4] != VERSION {
            return Err(BitstreamError::BadVersion(bytes[4]));
        }
        let codec_id = CodecId::from_u8(bytes[5]).ok_or(BitstreamError::UnsupportedCodec(bytes[5]))?;
        let codebook_id = u32::from_le_bytes(bytes[6..10].try_into().unwrap());
        let bits = u32::from_le_bytes(bytes[10..14].try_into().unwrap());
        let needed = HEADER_LEN + bits.div_ceil(8) as usize;
        if bytes.len() < needed {
            return Err(BitstreamError::Truncated {
                needed,
                available: bytes.len(),
            });
        }
        if bytes.len() > needed {
            return Err(BitstreamError::TrailingBytes(bytes.len() - needed));
        }
        Self::new(codec_id, codebook_id, bits, bytes[HEADER_LEN..].to_vec())
    }
}

/// Accumulates bits MSB-first.
#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bits: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bit_len(&self) -> usize {
        self.bits
    }

    pub fn write_bit(&mut self, bit: bool) {
        let offset = self.bits % 8;
        if offset == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().unwrap() |= 0x80 >> offset;
        }
        self.bits += 1;
    }

    /// Writes the low `count` bits of `value`, most significant first.
    pub fn write_bits(&mut self, value: u128, count: u32) {
        for i in (0..count).rev() {
            self.write_bit((value >> i) & 1 == 1);
        }
    }

    pub fn finish(self) -> (Vec<u8>, u32) {
        let bits = u32::try_from(self.bits).expect("payload exceeds u32 bit length");
        (self.bytes, bits)
    }
}

/// Reads MSB-first bits up to a fixed bit length.
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    bytes: &'a [u8],
    limit: usize,
    pos: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(bytes: &'a [u8], limit: usize) -> Self {
        Self {
            bytes,
            limit: limit.min(bytes.len() * 8),
            pos: 0,
        }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.limit - self.pos
    }

    pub fn read_bit(&mut self) -> Option<bool> {
        if self.pos >= self.limit {
            return None;
        }
        let bit = self.bytes[self.pos / 8] & (0x80 >> (self.pos % 8)) != 0;
        self.pos += 1;
        Some(bit)
    }

    pub fn read_bits(&mut self, count: u32) -> Option<u64> {
        debug_assert!(count <= 64);
        if self.remaining() < count as usize {
            return None;
        }
        let mut v = 0u64;
        for _ in 0..count {
            v = (v << 1) | self.read_bit()? as u64;
        }
        Some(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_only_stream_is_fourteen_bytes() {
        let b = Bitstream::new(CodecId::CmcText, 7, 0, vec![]).unwrap();
        let bytes = b.serialize();
        assert_eq!(bytes, b"CMC1\x01\x00\x07\x00\x00\x00\x00\x00\x00\x00");
        assert_eq!(Bitstream::deserialize(&bytes).unwrap(), b);
    }

    #[test]
    fn msb_first_packing() {
        let mut w = BitWriter::new();
        w.write_bits(0b101, 3);
        let b = Bitstream::from_writer(CodecId::CmcText, 0, w);
        assert_eq!(b.payload(), &[0b1010_0000]);
        assert_eq!(b.payload_bit_length(), 3);
    }

    #[test]
    fn rejects_dirty_padding_and_bad_lengths() {
        assert_eq!(
            Bitstream::new(CodecId::CmcText, 0, 3, vec![0b1010_0001]),
            Err(BitstreamError::NonZeroPadding(3))
        );
        assert!(matches!(
            Bitstream::new(CodecId::CmcText, 0, 9, vec![0]),
            Err(BitstreamError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn deserialize_errors() {
        let good = Bitstream::new(CodecId::BaselineDct, 1, 16, vec![1, 2]).unwrap().serialize();

        let mut bad = good.clone();
        bad[0] = b'X';
        assert_eq!(Bitstream::deserialize(&bad), Err(BitstreamError::BadMagic));

        let mut bad = good.clone();
        bad[5] = 9;
        assert_eq!(Bitstream::deserialize(&bad), Err(BitstreamError::UnsupportedCodec(9)));

        // claims 64 bits but carries 4 payload bytes
        let mut bad = good[..14].to_vec();
        bad[10..14].copy_from_slice(&64u32.to_le_bytes());
        bad.extend_from_slice(&[0, 0, 0, 0]);
        assert_eq!(
            Bitstream::deserialize(&bad),
            Err(BitstreamError::Truncated { needed: 22, available: 18 })
        );

        assert!(matches!(
            Bitstream::deserialize(&good[..10]),
            Err(BitstreamError::Truncated { .. })
        ));
    }

    #[test]
    fn reader_stops_at_limit() {
        let mut r = BitReader::new(&[0xff], 3);
        assert_eq!(r.read_bits(3), Some(0b111));
        assert_eq!(r.read_bit(), None);
        assert_eq!(r.read_bits(1), None);
    }

    proptest! {
        #[test]
        fn container_round_trip(bits in proptest::collection::vec(any::<bool>(), 0..1200), id in any::<u32>(), dct in any::<bool>()) {
            let mut w = BitWriter::new();
            for &b in &bits {
                w.write_bit(b);
            }
            let codec = if dct { CodecId::BaselineDct } else { CodecId::CmcText };
            let stream = Bitstream::from_writer(codec, id, w);
            let bytes = stream.serialize();
            prop_assert_eq!(bytes.len(), HEADER_LEN + bits.len().div_ceil(8));
            let back = Bitstream::deserialize(&bytes).unwrap();
            prop_assert_eq!(&back, &stream);
            let mut r = back.reader();
            let read: Vec<bool> = std::iter::from_fn(|| r.read_bit()).collect();
            prop_assert_eq!(read, bits);
        }
    }
}
