//! Procedural photo-like rasters and the token codebook trained on them.

use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::codec::TokenCodebook;
use super::quant::QuantizerConfig;
use crate::image::Image;

pub const CALIBRATION_SEED: u64 = 0x5eed_ca1b;
pub const CALIBRATION_IMAGES: usize = 10;
pub const CALIBRATION_SIDE: usize = 128;
/// Qualities whose token statistics feed the shipped codebook.
pub const TRAINING_QUALITIES: [u32; 10] = [10, 20, 30, 40, 50, 60, 70, 80, 90, 100];

struct Blob {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    color: [f64; 3],
}

/// A smooth gradient with soft blobs, a sinusoidal texture and mild noise.
pub fn photo_like(width: usize, height: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rgb = |rng: &mut ChaCha8Rng| -> [f64; 3] { std::array::from_fn(|_| rng.random_range(0.0..255.0)) };
    let c0 = rgb(&mut rng);
    let c1 = rgb(&mut rng);
    let angle: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let (gx, gy) = (angle.cos(), angle.sin());
    let blobs: Vec<Blob> = (0..rng.random_range(3..7))
        .map(|_| Blob {
            cx: rng.random_range(0.0..width as f64),
            cy: rng.random_range(0.0..height as f64),
            rx: rng.random_range(6.0..(width as f64 / 3.0).max(7.0)),
            ry: rng.random_range(6.0..(height as f64 / 3.0).max(7.0)),
            color: rgb(&mut rng),
        })
        .collect();
    let freq: f64 = rng.random_range(0.05..0.4);
    let amp: f64 = rng.random_range(4.0..20.0);
    let noise: f64 = rng.random_range(2.0..8.0);

    let (w, h) = (width as f64, height as f64);
    Image::from_fn(width, height, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        let t = ((fx / w - 0.5) * gx + (fy / h - 0.5) * gy + 0.5).clamp(0.0, 1.0);
        let mut px = [0.0; 3];
        for k in 0..3 {
            px[k] = c0[k] * (1.0 - t) + c1[k] * t;
        }
        for b in &blobs {
            let d = ((fx - b.cx) / b.rx).powi(2) + ((fy - b.cy) / b.ry).powi(2);
            // soft edge over the outer quarter of the radius
            let alpha = ((1.25 - d.sqrt()) * 4.0).clamp(0.0, 1.0);
            for k in 0..3 {
                px[k] = px[k] * (1.0 - alpha) + b.color[k] * alpha;
            }
        }
        let texture = amp * (freq * fx).sin() * (freq * 0.7 * fy).cos();
        let mut out = [0u8; 3];
        for k in 0..3 {
            let n = rng.random_range(-noise..=noise);
            out[k] = (px[k] + texture + n).round().clamp(0.0, 255.0) as u8;
        }
        out
    })
    .expect("positive dimensions")
}

/// The fixed calibration corpus.
pub fn calibration_corpus() -> Vec<Image> {
    (0..CALIBRATION_IMAGES as u64)
        .map(|i| photo_like(CALIBRATION_SIDE, CALIBRATION_SIDE, CALIBRATION_SEED + 1000 * i))
        .collect()
}

/// Token codebook trained once on the calibration corpus.
pub fn default_token_codebook() -> &'static TokenCodebook {
    static BOOK: OnceLock<TokenCodebook> = OnceLock::new();
    BOOK.get_or_init(|| {
        let qualities: Vec<QuantizerConfig> = TRAINING_QUALITIES
            .iter()
            .map(|&q| QuantizerConfig::new(q).expect("valid quality"))
            .collect();
        TokenCodebook::train(&calibration_corpus(), &qualities)
    })
}
