//! Per-segment PCA whitening of invariant features.
//!
//! The ten invariants differ by many orders of magnitude and are
//! strongly correlated, so raw Euclidean distances between them are
//! meaningless. For every strip index a whitening model is fitted on
//! the gallery features of that strip: subtract the mean, project onto
//! the leading principal directions and divide each coordinate by the
//! square root of its eigenvalue, giving components with unit sample
//! variance.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::moments::AmiVector;

/// Feature dimensionality entering the whitening stage.
pub const FEATURE_DIM: usize = 10;

/// Eigenvalues at or below this floor are treated as zero variance;
/// the matching directions are not available for whitening.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

/// A fitted per-segment whitening model.
#[derive(Debug, Clone, PartialEq)]
pub struct WhiteningModel {
    segment_index: usize,
    mean: [f64; FEATURE_DIM],
    /// Retained eigenvalues, strictly descending order, all above the floor.
    eigenvalues: Vec<f64>,
    /// Orthonormal principal directions, one row per retained eigenvalue.
    basis: Vec<[f64; FEATURE_DIM]>,
}

impl WhiteningModel {
    pub fn segment_index(&self) -> usize {
        self.segment_index
    }

    pub fn mean(&self) -> &[f64; FEATURE_DIM] {
        &self.mean
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn basis(&self) -> &[[f64; FEATURE_DIM]] {
        &self.basis
    }

    /// Number of whitened output dimensions M.
    pub fn output_dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub(crate) fn from_parts(
        segment_index: usize,
        mean: [f64; FEATURE_DIM],
        eigenvalues: Vec<f64>,
        basis: Vec<[f64; FEATURE_DIM]>,
    ) -> Self {
        debug_assert_eq!(eigenvalues.len(), basis.len());
        WhiteningModel {
            segment_index,
            mean,
            eigenvalues,
            basis,
        }
    }
}

/// A whitened feature vector for one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct WhitenedFeature {
    pub segment_index: usize,
    pub values: Vec<f64>,
}

/// Fits a whitening model on the gallery features of one segment.
///
/// The covariance is the unbiased sample estimate (1/(n-1)); its
/// eigenpairs are sorted by descending eigenvalue and the top `m`
/// retained. Each principal direction is sign-normalized so that its
/// largest-magnitude entry is positive, which makes the decomposition
/// deterministic.
///
/// Errors: fewer than two samples, `m` outside 1..=10, or fewer than
/// `m` directions with variance above [`EIGENVALUE_FLOOR`].
pub fn fit_whitening(
    samples: &[AmiVector],
    m: usize,
    segment_index: usize,
) -> Result<WhiteningModel> {
    if !(1..=FEATURE_DIM).contains(&m) {
        return Err(Error::InvalidOutputDim(m));
    }
    let n = samples.len();
    if n < 2 {
        return Err(Error::InsufficientSamples(n));
    }

    let mut mean = [0.0f64; FEATURE_DIM];
    for s in samples {
        for (acc, v) in mean.iter_mut().zip(s.values()) {
            *acc += v;
        }
    }
    for acc in &mut mean {
        *acc /= n as f64;
    }

    let mut cov = DMatrix::<f64>::zeros(FEATURE_DIM, FEATURE_DIM);
    for s in samples {
        let dev = DVector::from_fn(FEATURE_DIM, |i, _| s.values()[i] - mean[i]);
        cov += &dev * dev.transpose();
    }
    cov /= (n - 1) as f64;

    let eigen = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..FEATURE_DIM).collect();
    order.sort_by(|&i, &j| {
        eigen.eigenvalues[j]
            .partial_cmp(&eigen.eigenvalues[i])
            .expect("covariance eigenvalues are finite")
    });

    let available = order
        .iter()
        .filter(|&&i| eigen.eigenvalues[i] > EIGENVALUE_FLOOR)
        .count();
    if m > available {
        return Err(Error::InsufficientVarianceRank {
            requested: m,
            available,
        });
    }

    let mut eigenvalues = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    for &idx in order.iter().take(m) {
        eigenvalues.push(eigen.eigenvalues[idx]);
        let col = eigen.eigenvectors.column(idx);
        let mut row = [0.0f64; FEATURE_DIM];
        for (r, v) in row.iter_mut().zip(col.iter()) {
            *r = *v;
        }
        // Sign convention: the largest-magnitude entry is positive.
        let lead = row.iter().fold(
            0.0f64,
            |best, &v| if v.abs() > best.abs() { v } else { best },
        );
        if lead < 0.0 {
            for r in &mut row {
                *r = -*r;
            }
        }
        basis.push(row);
    }

    Ok(WhiteningModel {
        segment_index,
        mean,
        eigenvalues,
        basis,
    })
}

/// Whitens a feature vector with a fitted model:
/// output_i = basis_i . (f - mean) / sqrt(eigenvalue_i).
pub fn whiten(model: &WhiteningModel, feature: &AmiVector) -> WhitenedFeature {
    let values = model
        .basis
        .iter()
        .zip(&model.eigenvalues)
        .map(|(row, &lambda)| {
            let mut dot = 0.0;
            for ((&r, &f), &m) in row.iter().zip(feature.values()).zip(&model.mean) {
                dot += r * (f - m);
            }
            dot / lambda.sqrt()
        })
        .collect();
    WhitenedFeature {
        segment_index: model.segment_index,
        values,
    }
}
