//! Cross-modal image compression through a caption text domain.
//!
//! The CMC pipeline maps an image to a scene graph ([`scene::analyze`]),
//! realizes it as a caption ([`caption::describe`]), entropy-codes the caption
//! with a corpus-trained canonical Huffman codebook ([`entropy`]), and
//! reverses each step to reconstruct an image. [`baseline`] is a block-DCT
//! codec used as the pixel-domain comparison, and [`metrics`] holds the
//! distortion measures used to score both.

pub mod baseline;
pub mod bitstream;
pub mod caption;
pub mod entropy;
pub mod harness;
pub mod image;
pub mod metrics;
pub mod rate;
pub mod scene;

pub use bitstream::{Bitstream, BitstreamError, CodecId};
pub use image::{Image, ImageError};
pub use rate::{compression_ratio, RdPoint};
