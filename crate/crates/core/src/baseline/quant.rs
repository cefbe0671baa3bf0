use thiserror::Error;

/// The conventional JPEG luminance table, row-major.
pub const BASE_LUMA: [[u16; 8]; 8] = [
    [16, 11, 10, 16, 24, 40, 51, 61],
    [12, 12, 14, 19, 26, 58, 60, 55],
    [14, 13, 16, 24, 40, 57, 69, 56],
    [14, 17, 22, 29, 51, 87, 80, 62],
    [18, 22, 37, 56, 68, 109, 103, 77],
    [24, 35, 55, 64, 81, 104, 113, 92],
    [49, 64, 78, 87, 103, 121, 120, 101],
    [72, 92, 95, 98, 112, 100, 103, 99],
];

/// Zigzag scan: entry i is the (row * 8 + col) of the i-th scanned coefficient.
pub const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27,
    20, 13, 6, 7, 14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58,
    59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
];

#[derive(Debug, Error, PartialEq, Eq)]
#[error("quality must be in 1..=100, got {0}")]
pub struct QualityError(pub u32);

/// Quality setting and the quantizer matrix it implies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizerConfig {
    quality: u8,
    steps: [[u16; 8]; 8],
}

/// Table scale factor: 50/q below 50, (100 - q)/50 from 50 up.
pub fn quality_scale(quality: u8) -> f64 {
    let q = quality as f64;
    if quality < 50 {
        50.0 / q
    } else {
        (100.0 - q) / 50.0
    }
}

impl QuantizerConfig {
    pub fn new(quality: u32) -> Result<Self, QualityError> {
        if !(1..=100).contains(&quality) {
            return Err(QualityError(quality));
        }
        let quality = quality as u8;
        let scale = quality_scale(quality);
        let mut steps = [[0u16; 8]; 8];
        for (r, row) in steps.iter_mut().enumerate() {
            for (c, s) in row.iter_mut().enumerate() {
                *s = (BASE_LUMA[r][c] as f64 * scale).round().clamp(1.0, 255.0) as u16;
            }
        }
        Ok(Self { quality, steps })
    }

    pub fn quality(&self) -> u8 {
        self.quality
    }

    pub fn steps(&self) -> &[[u16; 8]; 8] {
        &self.steps
    }
}

/// Divides by the step and rounds half away from zero.
pub fn quantize(coeff: f64, step: u16) -> i32 {
    (coeff / step as f64).round() as i32
}
