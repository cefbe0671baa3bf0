use std::io::{self, Read, Write};

use thiserror::Error;

use super::huffman::{expected_length, shannon_entropy, CanonicalCode};

/// 256 byte values plus the end-of-text symbol.
pub const NUM_SYMBOLS: usize = 257;
pub const EOT: usize = 256;

const MAGIC: &[u8; 4] = b"CBK1";
const VERSION: u8 = 1;
const COUNTS_LEN: usize = NUM_SYMBOLS * 8;
pub const FILE_LEN: usize = 4 + 1 + COUNTS_LEN + 4;

#[derive(Debug, Error)]
pub enum CodebookError {
    #[error("bad codebook magic")]
    BadMagic,
    #[error("unsupported codebook version {0}")]
    BadVersion(u8),
    #[error("codebook file is {0} bytes, expected {FILE_LEN}")]
    BadLength(usize),
    #[error("codebook id {stored:#010x} does not match counts ({computed:#010x})")]
    IdMismatch { stored: u32, computed: u32 },
    #[error("symbol {0} has a zero count")]
    ZeroCount(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// 32-bit FNV-1a.
pub fn fnv1a_32(bytes: &[u8]) -> u32 {
    let mut hash: u32 = 0x811c_9dc5;
    for &b in bytes {
        hash ^= b as u32;
        hash = hash.wrapping_mul(0x0100_0193);
    }
    hash
}

fn counts_block(counts: &[u64; NUM_SYMBOLS]) -> Vec<u8> {
    counts.iter().flat_map(|c| c.to_le_bytes()).collect()
}

/// Smoothed symbol counts and the canonical Huffman code derived from them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Codebook {
    counts: Box<[u64; NUM_SYMBOLS]>,
    id: u32,
    code: CanonicalCode,
}

impl Codebook {
    /// Builds a codebook from already smoothed counts (all ≥ 1).
    pub fn from_counts(counts: [u64; NUM_SYMBOLS]) -> Result<Self, CodebookError> {
        if let Some(i) = counts.iter().position(|&c| c == 0) {
            return Err(CodebookError::ZeroCount(i));
        }
        let id = fnv1a_32(&counts_block(&counts));
        let code = CanonicalCode::from_frequencies(&counts);
        Ok(Self {
            counts: Box::new(counts),
            id,
            code,
        })
    }

    /// Counts every byte of every document, one end-of-text per document,
    /// then adds one to every symbol.
    pub fn train_documents<'a>(documents: impl IntoIterator<Item = &'a [u8]>) -> Self {
        let mut counts = [1u64; NUM_SYMBOLS];
        for doc in documents {
            for &b in doc {
                counts[b as usize] += 1;
            }
            counts[EOT] += 1;
        }
        Self::from_counts(counts).expect("smoothed counts are positive")
    }

    /// Trains on a newline-separated corpus, one document per line. A
    /// trailing newline does not start an extra document.
    pub fn train(corpus: &[u8]) -> Self {
        if corpus.is_empty() {
            return Self::train_documents(std::iter::empty());
        }
        let body = corpus.strip_suffix(b"\n").unwrap_or(corpus);
        Self::train_documents(body.split(|&b| b == b'\n'))
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn counts(&self) -> &[u64; NUM_SYMBOLS] {
        &self.counts
    }

    pub fn code(&self) -> &CanonicalCode {
        &self.code
    }

    pub fn code_length(&self, symbol: usize) -> u8 {
        self.code.length(symbol)
    }

    /// Shannon entropy of the smoothed distribution, bits per symbol.
    pub fn entropy(&self) -> f64 {
        shannon_entropy(&self.counts[..])
    }

    /// Expected codeword length under the smoothed distribution.
    pub fn expected_length(&self) -> f64 {
        expected_length(&self.counts[..], self.code.lengths())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(FILE_LEN);
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&counts_block(&self.counts));
        out.extend_from_slice(&self.id.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CodebookError> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(CodebookError::BadMagic);
        }
        if bytes.len() != FILE_LEN {
            return Err(CodebookError::BadLength(bytes.len()));
        }
        if bytes[4] != VERSION {
            return Err(CodebookError::BadVersion(bytes[4]));
        }
        let block = &bytes[5..5 + COUNTS_LEN];
        let stored = u32::from_le_bytes(bytes[5 + COUNTS_LEN..].try_into().unwrap());
        let computed = fnv1a_32(block);
        if stored != computed {
            return Err(CodebookError::IdMismatch { stored, computed });
        }
        let mut counts = [0u64; NUM_SYMBOLS];
        for (c, chunk) in counts.iter_mut().zip(block.chunks_exact(8)) {
            *c = u64::from_le_bytes(chunk.try_into().unwrap());
        }
        Self::from_counts(counts)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(&self.to_bytes())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self, CodebookError> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}
