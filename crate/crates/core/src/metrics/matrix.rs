//! Feature and probability matrices plus their `FMAT` / `PMAT` files.
//!
//! File layout: 4-byte magic, u32 LE row count `n`, u32 LE column count
//! `d`, then `n * d` little-endian f32 values in row-major order.

use std::io::{self, Read, Write};

use nalgebra::DMatrix;

use super::MetricsError;

pub const FMAT_MAGIC: &[u8; 4] = b"FMAT";
pub const PMAT_MAGIC: &[u8; 4] = b"PMAT";
/// Allowed deviation of a probability row sum from 1.
pub const ROW_SUM_TOLERANCE: f64 = 1e-5;

/// `n` samples of `d`-dimensional features, one sample per row.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self, MetricsError> {
        if rows == 0 || cols == 0 {
            return Err(MetricsError::InvalidArgument(format!("empty {rows}x{cols} matrix")));
        }
        if values.len() != rows * cols {
            return Err(MetricsError::InvalidArgument(format!(
                "{} values for a {rows}x{cols} matrix",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(MetricsError::InvalidArgument(format!(
                "non-finite value at row {}, column {}",
                i / cols,
                i % cols
            )));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MetricsError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(MetricsError::InvalidArgument("ragged rows".into()));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.values)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        encode(FMAT_MAGIC, self.rows, self.cols, &self.values)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, MetricsError> {
        let (rows, cols, values) = decode(FMAT_MAGIC, bytes)?;
        Self::new(rows, cols, values)
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> io::Result<()> {
        out.write_all(&self.to_bytes())
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self, MetricsError> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

/// Per-sample class distributions: every row lies in [0, 1] and sums to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbMatrix(FeatureMatrix);

impl ProbMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self, MetricsError> {
        let m = FeatureMatrix::new(rows, cols, values)?;
        for i in 0..rows {
            let row = m.row(i);
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(MetricsError::InvalidArgument(format!("row {i} has entries outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(MetricsError::InvalidArgument(format!("row {i} sums to {sum}")));
            }
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, MetricsError> {
        let m = FeatureMatrix::from_rows(rows)?;
        Self::new(m.rows, m.cols, m.values)
    }

    pub fn rows(&self) -> usize {
        self.0.rows
    }

    pub fn classes(&self) -> usize {
        self.0.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        encode(PMAT_MAGIC, self.0.rows, self.0.cols, &self.0.values)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, MetricsError> {
        let (rows, cols, values) = decode(PMAT_MAGIC, bytes)?;
        Self::new(rows, cols, values)
    }

    pub fn read_from<R: Read>(mut input: R) -> Result<Self, MetricsError> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

fn encode(magic: &[u8; 4], rows: usize, cols: usize, values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 4 * values.len());
    out.extend_from_slice(magic);
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    for &v in values {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

fn decode(magic: &[u8; 4], bytes: &[u8]) -> Result<(usize, usize, Vec<f64>), MetricsError> {
    let format = |m: String| MetricsError::Format(m);
    if bytes.len() < 12 {
        return Err(format(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != magic {
        return Err(format(format!("expected magic {:?}", String::from_utf8_lossy(magic))));
    }
    let rows = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(12))
        .ok_or_else(|| format("dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(format(format!("{rows}x{cols} matrix needs {expected} bytes, file has {}", bytes.len())));
    }
    let values = bytes[12..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok((rows, cols, values))
}
