//! Canonical Huffman codes over a dense symbol alphabet.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::bitstream::{BitReader, BitWriter};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecodeError {
    /// Ran out of bits in the middle of a codeword.
    Exhausted,
    /// The bits read match no codeword.
    InvalidCode,
}

/// Huffman code lengths for `freqs`; zero-frequency symbols get length 0.
///
/// Equal weights are merged lowest node id first, where leaves use their
/// symbol index and internal nodes are numbered after all leaves in creation
/// order. A lone used symbol gets a 1-bit code.
pub fn code_lengths(freqs: &[u64]) -> Vec<u8> {
    let n = freqs.len();
    let mut lengths = vec![0u8; n];
    let used: Vec<usize> = (0..n).filter(|&i| freqs[i] > 0).collect();
    match used.len() {
        0 => return lengths,
        1 => {
            lengths[used[0]] = 1;
            return lengths;
        }
        _ => {}
    }

    let mut parent: Vec<usize> = vec![usize::MAX; n];
    let mut heap: BinaryHeap<Reverse<(u128, usize)>> =
        used.iter().map(|&i| Reverse((freqs[i] as u128, i))).collect();
    let mut next_id = n;
    while heap.len() > 1 {
        let Reverse((w1, a)) = heap.pop().unwrap();
        let Reverse((w2, b)) = heap.pop().unwrap();
        parent.push(usize::MAX);
        parent[a] = next_id;
        parent[b] = next_id;
        heap.push(Reverse((w1 + w2, next_id)));
        next_id += 1;
    }

    // internal nodes are created after their children, so one reverse pass
    // from the root fills every depth
    let mut depth = vec![0u32; parent.len()];
    for id in (0..parent.len()).rev() {
        if parent[id] != usize::MAX {
            depth[id] = depth[parent[id]] + 1;
        }
    }
    for &i in &used {
        lengths[i] = u8::try_from(depth[i]).expect("code length exceeds 255 bits");
    }
    lengths
}

/// Canonical prefix code built from code lengths.
///
/// Codewords are assigned in (length, symbol index) order, so the lengths
/// alone determine every codeword.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalCode {
    lengths: Vec<u8>,
    codes: Vec<u128>,
    /// Symbols sorted by (length, index).
    sorted: Vec<usize>,
    /// Per length: number of codewords, first codeword, index into `sorted`.
    count: Vec<u128>,
    first: Vec<u128>,
    offset: Vec<usize>,
}

impl CanonicalCode {
    pub fn from_frequencies(freqs: &[u64]) -> Self {
        Self::from_lengths(code_lengths(freqs))
    }

    pub fn from_lengths(lengths: Vec<u8>) -> Self {
        let max_len = lengths.iter().copied().max().unwrap_or(0) as usize;
        assert!(max_len <= 127, "code lengths above 127 bits are unsupported");
        let mut sorted: Vec<usize> = (0..lengths.len()).filter(|&i| lengths[i] > 0).collect();
        sorted.sort_by_key(|&i| (lengths[i], i));

        let mut codes = vec![0u128; lengths.len()];
        let mut count = vec![0u128; max_len + 1];
        let mut first = vec![0u128; max_len + 1];
        let mut offset = vec![0usize; max_len + 1];
        let mut code = 0u128;
        let mut prev_len = 0u8;
        for (pos, &sym) in sorted.iter().enumerate() {
            let len = lengths[sym];
            if len != prev_len {
                code <<= len - prev_len;
                first[len as usize] = code;
                offset[len as usize] = pos;
                prev_len = len;
            }
            codes[sym] = code;
            count[len as usize] += 1;
            code += 1;
        }
        Self {
            lengths,
            codes,
            sorted,
            count,
            first,
            offset,
        }
    }

    pub fn num_symbols(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[u8] {
        &self.lengths
    }

    pub fn length(&self, symbol: usize) -> u8 {
        self.lengths[symbol]
    }

    pub fn codeword(&self, symbol: usize) -> u128 {
        self.codes[symbol]
    }

    pub fn has_code(&self, symbol: usize) -> bool {
        self.lengths.get(symbol).is_some_and(|&l| l > 0)
    }

    pub fn max_length(&self) -> u8 {
        self.count.len().saturating_sub(1) as u8
    }

    /// Sum of 2^-len over coded symbols.
    pub fn kraft_sum(&self) -> f64 {
        self.lengths
            .iter()
            .filter(|&&l| l > 0)
            .map(|&l| 2f64.powi(-(l as i32)))
            .sum()
    }

    pub fn encode(&self, symbol: usize, out: &mut BitWriter) {
        let len = self.lengths[symbol];
        assert!(len > 0, "symbol {symbol} has no codeword");
        out.write_bits(self.codes[symbol], len as u32);
    }

    pub fn decode(&self, input: &mut BitReader<'_>) -> Result<usize, DecodeError> {
        let mut code = 0u128;
        for len in 1..self.count.len() {
            let bit = input.read_bit().ok_or(DecodeError::Exhausted)?;
            code = (code << 1) | bit as u128;
            let delta = code.wrapping_sub(self.first[len]);
            if code >= self.first[len] && delta < self.count[len] {
                return Ok(self.sorted[self.offset[len] + delta as usize]);
            }
        }
        Err(DecodeError::InvalidCode)
    }
}

/// Shannon entropy in bits of the distribution proportional to `freqs`.
pub fn shannon_entropy(freqs: &[u64]) -> f64 {
    let total: f64 = freqs.iter().map(|&f| f as f64).sum();
    if total == 0.0 {
        return 0.0;
    }
    freqs
        .iter()
        .filter(|&&f| f > 0)
        .map(|&f| {
            let p = f as f64 / total;
            -p * p.log2()
        })
        .sum()
}

/// Mean codeword length in bits under the distribution proportional to `freqs`.
pub fn expected_length(freqs: &[u64], lengths: &[u8]) -> f64 {
    let total: f64 = freqs.iter().map(|&f| f as f64).sum();
    freqs
        .iter()
        .zip(lengths)
        .map(|(&f, &l)| f as f64 * l as f64)
        .sum::<f64>()
        / total
}
