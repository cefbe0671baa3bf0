//! JPEG-like comparison codec: 8x8 orthonormal DCT on each RGB channel,
//! quality-scaled uniform quantization, zigzag run-length tokens and Huffman
//! coding with a token codebook trained on a fixed calibration corpus.
//!
//! Not JFIF compatible; it exists to produce rate-distortion sweeps.

mod calibration;
mod codec;
pub mod dct;
mod quant;

pub use calibration::{
    calibration_corpus, default_token_codebook, photo_like, CALIBRATION_IMAGES, CALIBRATION_SIDE, TRAINING_QUALITIES,
};
pub use codec::{decode_image, encode_image, DctCodecError, TokenCodebook, AC_SYMBOLS, DC_SYMBOLS};
pub use quant::{quality_scale, quantize, QualityError, QuantizerConfig, BASE_LUMA, ZIGZAG};

/// Default quality sweep.
pub const DEFAULT_SWEEP: [u32; 9] = [10, 20, 30, 40, 50, 60, 70, 80, 90];
