//! Orthonormal 8x8 DCT-II.

use std::f64::consts::PI;
use std::sync::OnceLock;

pub type Block = [[f64; 8]; 8];

/// Row `k` holds basis vector k: alpha(k) * cos((2n + 1) k pi / 16).
fn basis() -> &'static Block {
    static BASIS: OnceLock<Block> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut c = [[0.0; 8]; 8];
        for (k, row) in c.iter_mut().enumerate() {
            let alpha = if k == 0 { (1.0f64 / 8.0).sqrt() } else { (2.0f64 / 8.0).sqrt() };
            for (n, v) in row.iter_mut().enumerate() {
                *v = alpha * ((2 * n + 1) as f64 * k as f64 * PI / 16.0).cos();
            }
        }
        c
    })
}

/// Forward transform: `C * block * C^T`.
pub fn forward(block: &Block) -> Block {
    let c = basis();
    let mut tmp = [[0.0; 8]; 8];
    for u in 0..8 {
        for y in 0..8 {
            tmp[u][y] = (0..8).map(|x| c[u][x] * block[x][y]).sum();
        }
    }
    let mut out = [[0.0; 8]; 8];
    for u in 0..8 {
        for v in 0..8 {
            out[u][v] = (0..8).map(|y| tmp[u][y] * c[v][y]).sum();
        }
    }
    out
}

/// Inverse transform: `C^T * coeffs * C`.
pub fn inverse(coeffs: &Block) -> Block {
    let c = basis();
    let mut tmp = [[0.0; 8]; 8];
    for x in 0..8 {
        for v in 0..8 {
            tmp[x][v] = (0..8).map(|u| c[u][x] * coeffs[u][v]).sum();
        }
    }
    let mut out = [[0.0; 8]; 8];
    for x in 0..8 {
        for y in 0..8 {
            out[x][y] = (0..8).map(|v| tmp[x][v] * c[v][y]).sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_block() {
        let coeffs = forward(&[[128.0; 8]; 8]);
        assert!((coeffs[0][0] - 1024.0).abs() < 1e-9);
        for (u, row) in coeffs.iter().enumerate() {
            for (v, &c) in row.iter().enumerate() {
                if (u, v) != (0, 0) {
                    assert!(c.abs() < 1e-9, "({u},{v}) = {c}");
                }
            }
        }
        assert_eq!(forward(&[[0.0; 8]; 8]), [[0.0; 8]; 8]);
    }

    #[test]
    fn basis_is_orthonormal() {
        let c = basis();
        for i in 0..8 {
            for j in 0..8 {
                let dot: f64 = (0..8).map(|n| c[i][n] * c[j][n]).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-14);
            }
        }
    }
}
