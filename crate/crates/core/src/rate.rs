//! Rate accounting shared by both codecs.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RateError {
    #[error("compressed size must be positive, got {0}")]
    NonPositiveSize(f64),
    #[error("raw dimensions must be positive, got {0}x{1}")]
    ZeroDimension(usize, usize),
}

/// Ratio of the raw 3-channel, 8-bit size to the compressed size.
pub fn compression_ratio(width: usize, height: usize, compressed_bytes: f64) -> Result<f64, RateError> {
    if width == 0 || height == 0 {
        return Err(RateError::ZeroDimension(width, height));
    }
    if !(compressed_bytes > 0.0) || !compressed_bytes.is_finite() {
        return Err(RateError::NonPositiveSize(compressed_bytes));
    }
    Ok((width * height * 3) as f64 / compressed_bytes)
}

/// Bits per pixel for a compressed size in bytes.
pub fn bits_per_pixel(width: usize, height: usize, compressed_bytes: f64) -> f64 {
    compressed_bytes * 8.0 / (width * height) as f64
}

/// One operating point of a codec on a distortion metric.
#[derive(Clone, Debug, PartialEq)]
pub struct RdPoint {
    pub rate_bytes: f64,
    pub distortion: f64,
    pub metric_name: String,
    pub codec_label: String,
}

impl RdPoint {
    pub fn new(
        rate_bytes: f64,
        distortion: f64,
        metric_name: impl Into<String>,
        codec_label: impl Into<String>,
    ) -> Result<Self, RateError> {
        if !(rate_bytes > 0.0) {
            return Err(RateError::NonPositiveSize(rate_bytes));
        }
        Ok(Self {
            rate_bytes,
            distortion,
            metric_name: metric_name.into(),
            codec_label: codec_label.into(),
        })
    }

    /// Scalarized cost `D + lambda * R`, for reporting only.
    pub fn cost(&self, lambda: f64) -> f64 {
        self.distortion + lambda * self.rate_bytes
    }
}
