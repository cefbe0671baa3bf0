//! 8-bit RGB rasters and binary PPM (P6) interchange.

use std::io::{self, BufRead, BufReader, Read, Write};

use thiserror::Error;

pub type Rgb = [u8; 3];

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("image dimensions must be positive, got {width}x{height}")]
    ZeroSized { width: usize, height: usize },
    #[error("pixel buffer holds {actual} pixels, expected {expected}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("malformed PPM: {0}")]
    Ppm(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Row-major RGB raster. The pixel count always equals `width * height`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::ZeroSized { width, height });
        }
        let expected = width * height;
        if pixels.len() != expected {
            return Err(ImageError::LengthMismatch {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, color: Rgb) -> Result<Self, ImageError> {
        Self::new(width, height, vec![color; width * height])
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> Rgb,
    ) -> Result<Self, ImageError> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    /// Raw size under the 3-bytes-per-pixel convention.
    pub fn raw_bytes(&self) -> usize {
        self.width * self.height * 3
    }

    pub fn write_ppm<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        let mut buf = Vec::with_capacity(self.raw_bytes());
        for px in &self.pixels {
            buf.extend_from_slice(px);
        }
        out.write_all(&buf)
    }

    pub fn to_ppm_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_ppm(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_ppm<R: Read>(input: R) -> Result<Self, ImageError> {
        let mut reader = BufReader::new(input);
        let magic = next_token(&mut reader)?;
        if magic != "P6" {
            return Err(ImageError::Ppm(format!("expected P6 magic, found {magic:?}")));
        }
        let width = parse_dim(&next_token(&mut reader)?)?;
        let height = parse_dim(&next_token(&mut reader)?)?;
        let maxval = parse_dim(&next_token(&mut reader)?)?;
        if maxval != 255 {
            return Err(ImageError::Ppm(format!("unsupported maxval {maxval}")));
        }
        // exactly one whitespace byte separates the header from the raster
        let mut sep = [0u8; 1];
        reader.read_exact(&mut sep)?;
        if !sep[0].is_ascii_whitespace() {
            return Err(ImageError::Ppm("missing whitespace after maxval".into()));
        }
        let mut raw = vec![0u8; width * height * 3];
        reader
            .read_exact(&mut raw)
            .map_err(|_| ImageError::Ppm("truncated raster".into()))?;
        let pixels = raw.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Self::new(width, height, pixels)
    }
}

fn parse_dim(tok: &str) -> Result<usize, ImageError> {
    tok.parse::<usize>()
        .map_err(|_| ImageError::Ppm(format!("bad header field {tok:?}")))
}

fn next_token<R: BufRead>(reader: &mut R) -> Result<String, ImageError> {
    let mut tok = String::new();
    loop {
        let byte = {
            let buf = reader.fill_buf()?;
            match buf.first() {
                Some(&b) => b,
                None => break,
            }
        };
        if byte == b'#' && tok.is_empty() {
            let mut comment = Vec::new();
            reader.read_until(b'\n', &mut comment)?;
            continue;
        }
        if byte.is_ascii_whitespace() {
            if tok.is_empty() {
                reader.consume(1);
                continue;
            }
            break;
        }
        tok.push(byte as char);
        reader.consume(1);
        if tok.len() > 16 {
            return Err(ImageError::Ppm("header token too long".into()));
        }
    }
    if tok.is_empty() {
        return Err(ImageError::Ppm("unexpected end of header".into()));
    }
    Ok(tok)
}
