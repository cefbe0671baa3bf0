//! Distortion metrics: PSNR on rasters, and Inception score, Fréchet
//! distance, instance perceptual distance and the attention-driven
//! image-text matching score on externally supplied feature matrices.

mod matrix;

use std::io;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

pub use matrix::{FeatureMatrix, ProbMatrix, FMAT_MAGIC, PMAT_MAGIC, ROW_SUM_TOLERANCE};

use crate::image::Image;

/// Eigenvalues below this are treated as zero when taking square roots.
pub const EIGEN_FLOOR: f64 = 1e-10;
/// Fréchet distances in `[FID_FLOOR, 0)` are reported as 0.
pub const FID_FLOOR: f64 = -1e-6;
/// Relative symmetry tolerance for covariance matrices.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;
/// Relative tolerance for negative covariance eigenvalues.
pub const PSD_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("need at least 2 samples, got {0}")]
    InsufficientSamples(usize),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("malformed matrix file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn mismatch(msg: String) -> MetricsError {
    MetricsError::DimensionMismatch(msg)
}

/// Peak signal-to-noise ratio in dB over all channels; `+inf` when the
/// images are identical.
pub fn psnr(a: &Image, b: &Image, bits: u32) -> Result<f64, MetricsError> {
    if (a.width(), a.height()) != (b.width(), b.height()) {
        return Err(MetricsError::InvalidArgument(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    if !(1..=16).contains(&bits) {
        return Err(MetricsError::InvalidArgument(format!("bit depth {bits}")));
    }
    let sse: u64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .flat_map(|(p, q)| (0..3).map(move |k| (p[k] as i64 - q[k] as i64).pow(2) as u64))
        .sum();
    if sse == 0 {
        return Ok(f64::INFINITY);
    }
    let mse = sse as f64 / (a.pixels().len() * 3) as f64;
    let peak = ((1u64 << bits) - 1) as f64;
    Ok(10.0 * (peak * peak / mse).log10())
}

fn kl_divergence(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .sum()
}

fn inception_score_rows(p: &ProbMatrix, rows: std::ops::Range<usize>) -> f64 {
    let n = rows.len() as f64;
    let mut marginal = vec![0.0; p.classes()];
    for i in rows.clone() {
        for (m, &v) in marginal.iter_mut().zip(p.row(i)) {
            *m += v;
        }
    }
    marginal.iter_mut().for_each(|m| *m /= n);
    let mean_kl = rows.map(|i| kl_divergence(p.row(i), &marginal)).sum::<f64>() / n;
    mean_kl.exp()
}

/// `exp(mean_i KL(p_i || marginal))`, natural log, `0 log 0 = 0`.
pub fn inception_score(p: &ProbMatrix) -> f64 {
    inception_score_rows(p, 0..p.rows())
}

/// Mean Inception score over `splits` contiguous, near-equal row groups.
pub fn inception_score_split(p: &ProbMatrix, splits: usize) -> Result<f64, MetricsError> {
    if splits == 0 || splits > p.rows() {
        return Err(MetricsError::InvalidArgument(format!(
            "{splits} splits for {} rows",
            p.rows()
        )));
    }
    let n = p.rows();
    let total: f64 = (0..splits)
        .map(|k| inception_score_rows(p, k * n / splits..(k + 1) * n / splits))
        .sum();
    Ok(total / splits as f64)
}

/// Mean and covariance of a feature set.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianStats {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianStats {
    /// Validates symmetry and positive semi-definiteness up to noise.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self, MetricsError> {
        let d = mean.len();
        if d == 0 || cov.shape() != (d, d) {
            return Err(mismatch(format!("mean of length {d} with {:?} covariance", cov.shape())));
        }
        let scale = cov.amax().max(1.0);
        if (&cov - cov.transpose()).amax() > SYMMETRY_TOLERANCE * scale {
            return Err(MetricsError::Numerical("covariance is not symmetric".into()));
        }
        let min_eig = SymmetricEigen::new(cov.clone()).eigenvalues.min();
        if min_eig < -PSD_TOLERANCE * scale {
            return Err(MetricsError::Numerical(format!(
                "covariance has eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self { mean, cov })
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Sample mean and unbiased (1/(n-1)) covariance.
pub fn gaussian_stats(f: &FeatureMatrix) -> Result<GaussianStats, MetricsError> {
    let n = f.rows();
    if n < 2 {
        return Err(MetricsError::InsufficientSamples(n));
    }
    let x = f.to_dmatrix();
    let mean = x.row_mean().transpose();
    let mut centered = x;
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let mut cov = centered.transpose() * &centered / (n - 1) as f64;
    // exact symmetry regardless of summation order
    cov = (&cov + cov.transpose()) * 0.5;
    GaussianStats::new(mean, cov)
}

/// Principal square root of a symmetric PSD matrix via eigendecomposition,
/// with eigenvalues under [`EIGEN_FLOOR`] set to zero.
pub fn sqrtm_psd(c: &DMatrix<f64>) -> DMatrix<f64> {
    let sym = (c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let roots = eig.eigenvalues.map(|l| if l < EIGEN_FLOOR { 0.0 } else { l.sqrt() });
    &eig.eigenvectors * DMatrix::from_diagonal(&roots) * eig.eigenvectors.transpose()
}

/// Fréchet distance `|m1 - m2|^2 + Tr(C1 + C2 - 2 (C1 C2)^(1/2))`.
///
/// The trace of the square root is taken from the symmetric product
/// `C2^(1/2) C1 C2^(1/2)`, which shares its spectrum with `C1 C2`.
/// Eigenvalues of C2 under [`EIGEN_FLOOR`] are zeroed when taking its root.
pub fn fid(s1: &GaussianStats, s2: &GaussianStats) -> Result<f64, MetricsError> {
    if s1.dim() != s2.dim() {
        return Err(mismatch(format!("{} vs {} features", s1.dim(), s2.dim())));
    }
    let diff = &s1.mean - &s2.mean;
    let root2 = sqrtm_psd(&s2.cov);
    let product = &root2 * &s1.cov * &root2;
    let product = (&product + product.transpose()) * 0.5;
    let eig = SymmetricEigen::new(product).eigenvalues;
    let scale = eig.amax().max(1.0);
    if eig.min() < -PSD_TOLERANCE * scale {
        return Err(MetricsError::Numerical(format!(
            "covariance product has eigenvalue {:e}",
            eig.min()
        )));
    }
    // the product's eigenvalues are squared covariance scales; the floor was
    // already applied to C2 inside sqrtm_psd
    let trace_sqrt: f64 = eig.iter().map(|&l| l.max(0.0).sqrt()).sum();
    let d = diff.norm_squared() + s1.cov.trace() + s2.cov.trace() - 2.0 * trace_sqrt;
    if d >= 0.0 {
        Ok(d)
    } else if d >= FID_FLOOR {
        Ok(0.0)
    } else {
        Err(MetricsError::Numerical(format!("negative distance {d:e}")))
    }
}

/// Mean squared Euclidean distance between paired rows.
pub fn ipd(src: &FeatureMatrix, rec: &FeatureMatrix) -> Result<f64, MetricsError> {
    if (src.rows(), src.cols()) != (rec.rows(), rec.cols()) {
        return Err(MetricsError::InvalidArgument(format!(
            "{}x{} vs {}x{}",
            src.rows(),
            src.cols(),
            rec.rows(),
            rec.cols()
        )));
    }
    let total: f64 = (0..src.rows())
        .map(|i| {
            src.row(i)
                .iter()
                .zip(rec.row(i))
                .map(|(a, b)| (b - a) * (b - a))
                .sum::<f64>()
        })
        .sum();
    Ok(total / src.rows() as f64)
}

/// Attention sharpness and word-importance factors of the matching score.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MatchingConfig {
    gamma1: f64,
    gamma2: f64,
}

impl MatchingConfig {
    pub const DEFAULT_GAMMA1: f64 = 5.0;
    pub const DEFAULT_GAMMA2: f64 = 5.0;

    pub fn new(gamma1: f64, gamma2: f64) -> Result<Self, MetricsError> {
        for (name, g) in [("gamma1", gamma1), ("gamma2", gamma2)] {
            if !(g.is_finite() && g > 0.0) {
                return Err(MetricsError::InvalidArgument(format!("{name} = {g}")));
            }
        }
        Ok(Self { gamma1, gamma2 })
    }

    pub fn gamma1(&self) -> f64 {
        self.gamma1
    }

    pub fn gamma2(&self) -> f64 {
        self.gamma2
    }
}

impl Default for MatchingConfig {
    fn default() -> Self {
        Self {
            gamma1: Self::DEFAULT_GAMMA1,
            gamma2: Self::DEFAULT_GAMMA2,
        }
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Attention-driven image-text matching score.
///
/// `words` holds one word feature per row (J rows) and `regions` one region
/// feature per row (L rows), both of dimension d. Each word attends over the
/// regions with weights `softmax_l(gamma1 * e_j . v_l)`; the attended context
/// `c_j` is compared with `e_j` by cosine similarity, and the per-word scores
/// are pooled as `(1/gamma2) * ln(sum_j exp(gamma2 * R_j))`.
pub fn matching_score(
    words: &FeatureMatrix,
    regions: &FeatureMatrix,
    cfg: &MatchingConfig,
) -> Result<f64, MetricsError> {
    if words.cols() != regions.cols() {
        return Err(MetricsError::InvalidArgument(format!(
            "word dimension {} vs region dimension {}",
            words.cols(),
            regions.cols()
        )));
    }
    let d = words.cols();
    let mut relevance = Vec::with_capacity(words.rows());
    let mut weights = vec![0.0; regions.rows()];
    for j in 0..words.rows() {
        let e = words.row(j);
        for (l, w) in weights.iter_mut().enumerate() {
            *w = cfg.gamma1 * e.iter().zip(regions.row(l)).map(|(a, b)| a * b).sum::<f64>();
        }
        let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        weights.iter_mut().for_each(|w| *w = (*w - max).exp());
        let norm: f64 = weights.iter().sum();
        let mut context = vec![0.0; d];
        for (l, &w) in weights.iter().enumerate() {
            for (c, &v) in context.iter_mut().zip(regions.row(l)) {
                *c += w / norm * v;
            }
        }
        relevance.push(cosine(&context, e));
    }
    let max = relevance.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = relevance.iter().map(|&r| (cfg.gamma2 * (r - max)).exp()).sum();
    Ok(max + sum.ln() / cfg.gamma2)
}
