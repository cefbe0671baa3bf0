//! Block-DCT codec payload.
//!
//! Payload layout, MSB first:
//!
//! ```text
//! quality   8 bits
//! width    16 bits
//! height   16 bits
//! channel 0 blocks, then channel 1, then channel 2
//! ```
//!
//! Blocks are visited in raster order over the image padded to a multiple
//! of 8 by edge replication. Each block is its DC difference from the
//! previous block of the same channel (category symbol + magnitude bits),
//! then AC (run, category) symbols with magnitude bits in zigzag order,
//! `ZRL` for 16 zeros, and always a closing `EOB`.

use thiserror::Error;

use super::dct::{self, Block};
use super::quant::{quantize, QuantizerConfig, ZIGZAG};
use crate::bitstream::{BitReader, BitWriter, Bitstream, CodecId};
use crate::entropy::huffman::DecodeError;
use crate::entropy::{fnv1a_32, CanonicalCode};
use crate::image::Image;

pub const DC_SYMBOLS: usize = 16;
pub const AC_SYMBOLS: usize = 256;
pub const EOB: usize = 0x00;
pub const ZRL: usize = 0xf0;
const MAX_SIDE: usize = u16::MAX as usize;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DctCodecError {
    #[error("image is {0}x{1}; sides must be in 1..=65535")]
    InvalidSize(usize, usize),
    #[error("stream holds codec {0:?}, expected the DCT baseline")]
    WrongCodec(CodecId),
    #[error("stream was coded with token codebook {found:#010x}, this one is {expected:#010x}")]
    WrongCodebook { expected: u32, found: u32 },
    #[error("stream was coded at quality {found}, decoder configured for {expected}")]
    QualityMismatch { expected: u8, found: u8 },
    #[error("malformed token stream at bit {0}: {1}")]
    Format(usize, &'static str),
}

/// Magnitude category: number of bits in |v|.
fn category(v: i32) -> u32 {
    32 - v.unsigned_abs().leading_zeros()
}

fn write_magnitude(w: &mut BitWriter, v: i32, cat: u32) {
    let bits = if v >= 0 { v } else { v + (1 << cat) - 1 };
    w.write_bits(bits as u128, cat);
}

fn read_magnitude(r: &mut BitReader<'_>, cat: u32) -> Option<i32> {
    if cat == 0 {
        return Some(0);
    }
    let bits = r.read_bits(cat)? as i32;
    Some(if bits >> (cat - 1) == 1 { bits } else { bits - (1 << cat) + 1 })
}

/// Symbol sink used both for coding and for gathering training counts.
trait TokenSink {
    fn dc(&mut self, symbol: usize, value: i32, cat: u32);
    fn ac(&mut self, symbol: usize, value: i32, cat: u32);
}

struct Counter<'a> {
    dc: &'a mut [u64; DC_SYMBOLS],
    ac: &'a mut [u64; AC_SYMBOLS],
}

impl TokenSink for Counter<'_> {
    fn dc(&mut self, symbol: usize, _: i32, _: u32) {
        self.dc[symbol] += 1;
    }
    fn ac(&mut self, symbol: usize, _: i32, _: u32) {
        self.ac[symbol] += 1;
    }
}

struct Coder<'a> {
    book: &'a TokenCodebook,
    out: BitWriter,
}

impl TokenSink for Coder<'_> {
    fn dc(&mut self, symbol: usize, value: i32, cat: u32) {
        self.book.dc.encode(symbol, &mut self.out);
        write_magnitude(&mut self.out, value, cat);
    }
    fn ac(&mut self, symbol: usize, value: i32, cat: u32) {
        self.book.ac.encode(symbol, &mut self.out);
        write_magnitude(&mut self.out, value, cat);
    }
}

fn emit_block(levels: &[i32; 64], prev_dc: &mut i32, sink: &mut impl TokenSink) {
    let diff = levels[0] - *prev_dc;
    *prev_dc = levels[0];
    let cat = category(diff);
    assert!((cat as usize) < DC_SYMBOLS, "DC difference {diff} out of range");
    sink.dc(cat as usize, diff, cat);

    let mut run = 0usize;
    for &level in &levels[1..] {
        if level == 0 {
            run += 1;
            continue;
        }
        while run > 15 {
            sink.ac(ZRL, 0, 0);
            run -= 16;
        }
        let cat = category(level);
        assert!(cat < 16, "AC level {level} out of range");
        sink.ac((run << 4) | cat as usize, level, cat);
        run = 0;
    }
    sink.ac(EOB, 0, 0);
}

fn padded_dims(img: &Image) -> (usize, usize) {
    (img.width().div_ceil(8) * 8, img.height().div_ceil(8) * 8)
}

/// Quantized zigzag levels for every block, channel-major.
fn quantized_blocks(img: &Image, cfg: &QuantizerConfig) -> Vec<[i32; 64]> {
    let (pw, ph) = padded_dims(img);
    let steps = cfg.steps();
    let mut out = Vec::with_capacity(3 * (pw / 8) * (ph / 8));
    for ch in 0..3 {
        for by in (0..ph).step_by(8) {
            for bx in (0..pw).step_by(8) {
                let mut block: Block = [[0.0; 8]; 8];
                for (r, row) in block.iter_mut().enumerate() {
                    let y = (by + r).min(img.height() - 1);
                    for (c, v) in row.iter_mut().enumerate() {
                        let x = (bx + c).min(img.width() - 1);
                        *v = img.get(x, y)[ch] as f64 - 128.0;
                    }
                }
                let coeffs = dct::forward(&block);
                let mut levels = [0i32; 64];
                for (i, &pos) in ZIGZAG.iter().enumerate() {
                    let (r, c) = (pos / 8, pos % 8);
                    levels[i] = quantize(coeffs[r][c], steps[r][c]);
                }
                out.push(levels);
            }
        }
    }
    out
}

fn blocks_per_channel(img: &Image) -> usize {
    let (pw, ph) = padded_dims(img);
    (pw / 8) * (ph / 8)
}

fn tokenize(img: &Image, cfg: &QuantizerConfig, sink: &mut impl TokenSink) {
    let per_channel = blocks_per_channel(img);
    for blocks in quantized_blocks(img, cfg).chunks(per_channel) {
        let mut prev_dc = 0;
        for levels in blocks {
            emit_block(levels, &mut prev_dc, sink);
        }
    }
}

/// Huffman tables for DC categories and AC (run, category) symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenCodebook {
    dc_counts: [u64; DC_SYMBOLS],
    ac_counts: Vec<u64>,
    dc: CanonicalCode,
    ac: CanonicalCode,
    id: u32,
}

impl TokenCodebook {
    /// Token counts gathered over `images` at every quality in `qualities`,
    /// add-one smoothed.
    pub fn train(images: &[Image], qualities: &[QuantizerConfig]) -> Self {
        let mut dc = [1u64; DC_SYMBOLS];
        let mut ac = [1u64; AC_SYMBOLS];
        for img in images {
            for cfg in qualities {
                tokenize(img, cfg, &mut Counter { dc: &mut dc, ac: &mut ac });
            }
        }
        Self::from_counts(dc, ac)
    }

    pub fn from_counts(dc_counts: [u64; DC_SYMBOLS], ac_counts: [u64; AC_SYMBOLS]) -> Self {
        assert!(dc_counts.iter().chain(&ac_counts).all(|&c| c > 0));
        let block: Vec<u8> = dc_counts
            .iter()
            .chain(&ac_counts)
            .flat_map(|c| c.to_le_bytes())
            .collect();
        Self {
            dc: CanonicalCode::from_frequencies(&dc_counts),
            ac: CanonicalCode::from_frequencies(&ac_counts),
            dc_counts,
            ac_counts: ac_counts.to_vec(),
            id: fnv1a_32(&block),
        }
    }

    pub fn id(&self) -> u32 {
        self.id
    }

    pub fn dc_code(&self) -> &CanonicalCode {
        &self.dc
    }

    pub fn ac_code(&self) -> &CanonicalCode {
        &self.ac
    }
}

pub fn encode_image(img: &Image, cfg: &QuantizerConfig, book: &TokenCodebook) -> Result<Bitstream, DctCodecError> {
    let (w, h) = (img.width(), img.height());
    if w == 0 || h == 0 || w > MAX_SIDE || h > MAX_SIDE {
        return Err(DctCodecError::InvalidSize(w, h));
    }
    let mut coder = Coder {
        book,
        out: BitWriter::new(),
    };
    coder.out.write_bits(cfg.quality() as u128, 8);
    coder.out.write_bits(w as u128, 16);
    coder.out.write_bits(h as u128, 16);
    tokenize(img, cfg, &mut coder);
    Ok(Bitstream::from_writer(CodecId::BaselineDct, book.id(), coder.out))
}

fn format_err(r: &BitReader<'_>, what: &'static str) -> DctCodecError {
    DctCodecError::Format(r.position(), what)
}

fn read_symbol(code: &CanonicalCode, r: &mut BitReader<'_>) -> Result<usize, DctCodecError> {
    code.decode(r).map_err(|e| match e {
        DecodeError::Exhausted => format_err(r, "stream ends inside a token"),
        DecodeError::InvalidCode => format_err(r, "invalid codeword"),
    })
}

fn read_block(r: &mut BitReader<'_>, book: &TokenCodebook, prev_dc: &mut i32) -> Result<[i32; 64], DctCodecError> {
    let mut levels = [0i32; 64];
    let cat = read_symbol(&book.dc, r)? as u32;
    let diff = read_magnitude(r, cat).ok_or_else(|| format_err(r, "stream ends inside DC bits"))?;
    *prev_dc = prev_dc
        .checked_add(diff)
        .ok_or_else(|| format_err(r, "DC overflow"))?;
    levels[0] = *prev_dc;
    let mut pos = 1usize;
    loop {
        let sym = read_symbol(&book.ac, r)?;
        if sym == EOB {
            return Ok(levels);
        }
        let run = sym >> 4;
        let cat = (sym & 0xf) as u32;
        pos += run;
        if sym == ZRL {
            pos += 1;
            if pos >= 64 {
                return Err(format_err(r, "zero run past end of block"));
            }
            continue;
        }
        if cat == 0 {
            return Err(format_err(r, "reserved AC symbol"));
        }
        if pos >= 64 {
            return Err(format_err(r, "AC run past end of block"));
        }
        levels[pos] = read_magnitude(r, cat).ok_or_else(|| format_err(r, "stream ends inside AC bits"))?;
        pos += 1;
    }
}

pub fn decode_image(stream: &Bitstream, cfg: &QuantizerConfig, book: &TokenCodebook) -> Result<Image, DctCodecError> {
    if stream.codec_id() != CodecId::BaselineDct {
        return Err(DctCodecError::WrongCodec(stream.codec_id()));
    }
    if stream.codebook_id() != book.id() {
        return Err(DctCodecError::WrongCodebook {
            expected: book.id(),
            found: stream.codebook_id(),
        });
    }
    let mut r = stream.reader();
    let header = |r: &mut BitReader<'_>, n| r.read_bits(n).ok_or_else(|| format_err(r, "truncated header"));
    let quality = header(&mut r, 8)? as u8;
    let width = header(&mut r, 16)? as usize;
    let height = header(&mut r, 16)? as usize;
    if quality != cfg.quality() {
        return Err(DctCodecError::QualityMismatch {
            expected: cfg.quality(),
            found: quality,
        });
    }
    if width == 0 || height == 0 {
        return Err(format_err(&r, "zero image dimension"));
    }
    let (pw, ph) = (width.div_ceil(8) * 8, height.div_ceil(8) * 8);
    // every block costs at least two symbols of one bit; reject headers that
    // promise more blocks than the payload could hold before allocating
    if 3 * (pw / 8) * (ph / 8) > r.remaining() {
        return Err(format_err(&r, "payload too short for the stated dimensions"));
    }

    let steps = cfg.steps();
    let mut planes = vec![vec![0u8; pw * ph]; 3];
    for plane in planes.iter_mut() {
        let mut prev_dc = 0;
        for by in (0..ph).step_by(8) {
            for bx in (0..pw).step_by(8) {
                let levels = read_block(&mut r, book, &mut prev_dc)?;
                let mut coeffs: Block = [[0.0; 8]; 8];
                for (i, &pos) in ZIGZAG.iter().enumerate() {
                    let (row, col) = (pos / 8, pos % 8);
                    coeffs[row][col] = levels[i] as f64 * steps[row][col] as f64;
                }
                let samples = dct::inverse(&coeffs);
                for (dy, row) in samples.iter().enumerate() {
                    for (dx, &v) in row.iter().enumerate() {
                        plane[(by + dy) * pw + bx + dx] = (v + 128.0).round().clamp(0.0, 255.0) as u8;
                    }
                }
            }
        }
    }
    if r.remaining() > 0 {
        return Err(format_err(&r, "trailing bits after the last block"));
    }
    Ok(Image::from_fn(width, height, |x, y| {
        let i = y * pw + x;
        [planes[0][i], planes[1][i], planes[2][i]]
    })
    .expect("dimensions checked"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn book() -> TokenCodebook {
        TokenCodebook::from_counts([1; DC_SYMBOLS], [1; AC_SYMBOLS])
    }

    #[test]
    fn magnitude_bits_round_trip() {
        for v in -3000..=3000 {
            let cat = category(v);
            let mut w = BitWriter::new();
            write_magnitude(&mut w, v, cat);
            let (bytes, bits) = w.finish();
            assert_eq!(bits, cat);
            let mut r = BitReader::new(&bytes, bits as usize);
            assert_eq!(read_magnitude(&mut r, cat), Some(v));
        }
        assert_eq!(category(0), 0);
        assert_eq!(category(-1), 1);
        assert_eq!(category(1024), 11);
    }

    #[test]
    fn constant_image_is_exact_at_q100() {
        let img = Image::filled(24, 16, [17, 128, 250]).unwrap();
        let cfg = QuantizerConfig::new(100).unwrap();
        let s = encode_image(&img, &cfg, &book()).unwrap();
        assert_eq!(decode_image(&s, &cfg, &book()).unwrap(), img);
    }

    #[test]
    fn blockwise_constant_image_is_exact_at_q100() {
        let img = Image::from_fn(32, 32, |x, y| {
            let b = ((x / 8) * 37 + (y / 8) * 91) as u8;
            [b, b.wrapping_mul(3), 255 - b]
        })
        .unwrap();
        let cfg = QuantizerConfig::new(100).unwrap();
        let s = encode_image(&img, &cfg, &book()).unwrap();
        assert_eq!(decode_image(&s, &cfg, &book()).unwrap(), img);
    }

    #[test]
    fn padding_is_cropped() {
        let img = Image::from_fn(13, 5, |x, y| [(x * 19) as u8, (y * 40) as u8, 7]).unwrap();
        for q in [10, 50, 95] {
            let cfg = QuantizerConfig::new(q).unwrap();
            let out = decode_image(&encode_image(&img, &cfg, &book()).unwrap(), &cfg, &book()).unwrap();
            assert_eq!((out.width(), out.height()), (13, 5));
        }
    }

    #[test]
    fn header_echoes_quality() {
        let img = Image::filled(8, 8, [0, 0, 0]).unwrap();
        let s = encode_image(&img, &QuantizerConfig::new(42).unwrap(), &book()).unwrap();
        assert_eq!(s.payload()[0], 42);
        let err = decode_image(&s, &QuantizerConfig::new(43).unwrap(), &book()).unwrap_err();
        assert_eq!(err, DctCodecError::QualityMismatch { expected: 43, found: 42 });
    }

    #[test]
    fn truncated_and_mismatched_streams() {
        let img = Image::from_fn(16, 16, |x, y| [(x * y) as u8, x as u8 * 9, y as u8 * 13]).unwrap();
        let cfg = QuantizerConfig::new(75).unwrap();
        let s = encode_image(&img, &cfg, &book()).unwrap();
        let keep = s.payload_bit_length() - 20;
        let mut bytes = s.payload()[..keep.div_ceil(8) as usize].to_vec();
        if keep % 8 != 0 {
            *bytes.last_mut().unwrap() &= 0xff << (8 - keep % 8);
        }
        let cut = Bitstream::new(CodecId::BaselineDct, s.codebook_id(), keep, bytes).unwrap();
        assert!(matches!(decode_image(&cut, &cfg, &book()), Err(DctCodecError::Format(..))));

        let other = TokenCodebook::from_counts([2; DC_SYMBOLS], [1; AC_SYMBOLS]);
        assert!(matches!(decode_image(&s, &cfg, &other), Err(DctCodecError::WrongCodebook { .. })));
        let text = Bitstream::new(CodecId::CmcText, s.codebook_id(), 0, vec![]).unwrap();
        assert_eq!(decode_image(&text, &cfg, &book()), Err(DctCodecError::WrongCodec(CodecId::CmcText)));
    }
}
