//! Corpus-trained canonical Huffman coding of caption text.
//!
//! Symbols are bytes plus an end-of-text marker. Counts are add-one
//! smoothed so every byte is codable, and codebooks are shared priors
//! referenced by id rather than embedded in streams.

mod codebook;
pub mod huffman;

pub use codebook::{fnv1a_32, Codebook, CodebookError, EOT, NUM_SYMBOLS};
pub use huffman::{code_lengths, expected_length, shannon_entropy, CanonicalCode};

use thiserror::Error;

use crate::bitstream::{BitWriter, Bitstream, CodecId};
use huffman::DecodeError;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextCodingError {
    #[error("stream holds codec {0:?}, expected caption text")]
    WrongCodec(CodecId),
    #[error("stream was coded with codebook {found:#010x}, this codebook is {expected:#010x}")]
    WrongCodebook { expected: u32, found: u32 },
    #[error("stream ended before the end-of-text symbol")]
    Truncated,
    #[error("{0} bits follow the end-of-text symbol")]
    TrailingGarbage(usize),
}

/// Codes each byte of `text` followed by the end-of-text symbol.
pub fn encode_text(text: &[u8], cb: &Codebook) -> Bitstream {
    let code = cb.code();
    let mut w = BitWriter::new();
    for &b in text {
        code.encode(b as usize, &mut w);
    }
    code.encode(EOT, &mut w);
    Bitstream::from_writer(CodecId::CmcText, cb.id(), w)
}

pub fn decode_text(stream: &Bitstream, cb: &Codebook) -> Result<Vec<u8>, TextCodingError> {
    if stream.codec_id() != CodecId::CmcText {
        return Err(TextCodingError::WrongCodec(stream.codec_id()));
    }
    if stream.codebook_id() != cb.id() {
        return Err(TextCodingError::WrongCodebook {
            expected: cb.id(),
            found: stream.codebook_id(),
        });
    }
    let code = cb.code();
    let mut r = stream.reader();
    let mut out = Vec::new();
    loop {
        match code.decode(&mut r) {
            Ok(EOT) => break,
            Ok(sym) => out.push(sym as u8),
            // smoothed codes are complete, so only exhaustion can happen
            Err(DecodeError::Exhausted | DecodeError::InvalidCode) => return Err(TextCodingError::Truncated),
        }
    }
    if r.remaining() > 0 {
        return Err(TextCodingError::TrailingGarbage(r.remaining()));
    }
    Ok(out)
}
