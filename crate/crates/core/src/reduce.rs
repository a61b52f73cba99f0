//! Dimension reduction: Johnson–Lindenstrauss random projection and the
//! significant-digits PCA retention rule.
//!
//! Matrices hold one point (observation) per row.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{column_means, sym_eigen_desc};
use crate::quadrature::substream;

/// Parameters of one random projection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JLConfig {
    pub n_points: usize,
    pub epsilon: f64,
    /// Target dimension; derived from the bound when absent.
    pub k: Option<usize>,
    pub seed: u64,
}

impl JLConfig {
    pub fn target_dimension(&self) -> Result<usize> {
        match self.k {
            Some(0) => Err(Error::DomainError("target dimension must be positive".into())),
            Some(k) => Ok(k),
            None => jl_min_dimension(self.n_points, self.epsilon),
        }
    }
}

/// Pairwise squared-distance ratios `‖f(u)−f(v)‖² / ‖u−v‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistortionReport {
    pub pairs: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    /// Share of pairs with ratio in `[1−ε, 1+ε]`.
    pub fraction_within: f64,
    /// Pairs skipped because the original points coincide.
    pub coincident_pairs: usize,
}

fn jl_denominator(epsilon: f64) -> f64 {
    epsilon * epsilon / 2.0 - epsilon.powi(3) / 3.0
}

/// Smallest integer `k ≥ 4 ln n / (ε²/2 − ε³/3)`.
pub fn jl_min_dimension(n: usize, epsilon: f64) -> Result<usize> {
    if n < 2 {
        return Err(Error::DomainError(format!("need at least two points, got {n}")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::DomainError(format!("epsilon {epsilon} outside (0, 1)")));
    }
    let bound = 4.0 * (n as f64).ln() / jl_denominator(epsilon);
    Ok(bound.ceil() as usize)
}

/// `k × d` matrix with i.i.d. N(0, 1) entries scaled by `1/√k`, filled row
/// by row from the ChaCha stream of `seed`.
pub fn jl_projection_matrix(d: usize, k: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = substream(seed, 0);
    let scale = 1.0 / (k as f64).sqrt();
    let mut c = DMatrix::zeros(k, d);
    for i in 0..k {
        for j in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            c[(i, j)] = z * scale;
        }
    }
    c
}

/// Projects each row of `data` (n × d) to k dimensions: `X Cᵀ`.
pub fn jl_project(data: &DMatrix<f64>, k: usize, seed: u64) -> Result<DMatrix<f64>> {
    if k == 0 {
        return Err(Error::DomainError("target dimension must be positive".into()));
    }
    if data.ncols() == 0 {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    let c = jl_projection_matrix(data.ncols(), k, seed);
    Ok(data * c.transpose())
}

pub fn jl_distortion_report(original: &DMatrix<f64>, projected: &DMatrix<f64>, epsilon: f64) -> Result<DistortionReport> {
    if original.nrows() != projected.nrows() {
        return Err(Error::DimensionMismatch {
            expected: original.nrows(),
            found: projected.nrows(),
        });
    }
    let n = original.nrows();
    if n < 2 {
        return Err(Error::DomainError("need at least two points".into()));
    }
    let sq = |m: &DMatrix<f64>, i: usize, j: usize| (m.row(i) - m.row(j)).norm_squared();
    let (mut pairs, mut within, mut coincident) = (0usize, 0usize, 0usize);
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let d0 = sq(original, i, j);
            if d0 == 0.0 {
                coincident += 1;
                continue;
            }
            let r = sq(projected, i, j) / d0;
            pairs += 1;
            lo = lo.min(r);
            hi = hi.max(r);
            sum += r;
            if r >= 1.0 - epsilon && r <= 1.0 + epsilon {
                within += 1;
            }
        }
    }
    let denom = pairs.max(1) as f64;
    Ok(DistortionReport {
        pairs,
        min_ratio: lo,
        max_ratio: hi,
        mean_ratio: sum / denom,
        fraction_within: within as f64 / denom,
        coincident_pairs: coincident,
    })
}

/// How many principal components to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PcaMode {
    /// Keep 1 + the number of variance-share increments that stay positive
    /// after rounding to this many decimal places.
    SignificantDigits(u32),
    ComponentCount(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaOutput {
    /// Scores (truncated) or the rank-reduced reconstruction.
    pub data: DMatrix<f64>,
    pub retained: usize,
    pub transposed: bool,
    /// Component variances, descending.
    pub variances: Vec<f64>,
}

/// Retained count from descending component variances.
pub fn retained_components(variances: &[f64], digits: u32) -> usize {
    let total: f64 = variances.iter().sum();
    if total <= 0.0 || variances.is_empty() {
        return 1;
    }
    let scale = 10f64.powi(digits as i32);
    let kept = variances[1..]
        .iter()
        .filter(|&&v| ((v / total) * scale).round_ties_even() > 0.0)
        .count();
    kept + 1
}

/// Covariance PCA (centered, unscaled).
///
/// With `return_truncated` the retained scores are returned; otherwise the
/// scores are mapped back to the original variables and the center re-added.
/// When `transpose_if_needed` is set and the data has fewer rows than
/// columns, the analysis runs on the transpose and the result is transposed
/// back.
pub fn pca_reduce(data: &DMatrix<f64>, mode: PcaMode, return_truncated: bool, transpose_if_needed: bool) -> Result<PcaOutput> {
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::DomainError("data contains non-finite values".into()));
    }
    if data.nrows() < 2 || data.ncols() == 0 {
        return Err(Error::DegenerateData(format!(
            "PCA needs at least two rows and one column, got {}×{}",
            data.nrows(),
            data.ncols()
        )));
    }
    let transposed = transpose_if_needed && data.nrows() < data.ncols();
    let x = if transposed { data.transpose() } else { data.clone() };
    let center = column_means(&x);
    let mut xc = x.clone();
    for (j, mut col) in xc.column_iter_mut().enumerate() {
        col.add_scalar_mut(-center[j]);
    }
    let cov = crate::linalg::symmetrize(&(xc.transpose() * &xc / (x.nrows() - 1) as f64));
    if cov.diagonal().iter().all(|&v| v <= 0.0) {
        return Err(Error::DegenerateData("every column has zero variance".into()));
    }
    let (values, mut vectors) = sym_eigen_desc(&cov);
    // fix the sign of each axis so its largest loading is positive
    for mut col in vectors.column_iter_mut() {
        let (idx, _) = col.iter().enumerate().fold((0, 0.0f64), |best, (i, v)| {
            if v.abs() > best.1 {
                (i, v.abs())
            } else {
                best
            }
        });
        if col[idx] < 0.0 {
            col.neg_mut();
        }
    }
    let available = x.ncols().min(x.nrows());
    let variances: Vec<f64> = values.iter().take(available).map(|v| v.max(0.0)).collect();
    let retained = match mode {
        PcaMode::SignificantDigits(s) => {
            if s == 0 {
                return Err(Error::DomainError("significant digits must be at least 1".into()));
            }
            retained_components(&variances, s)
        }
        PcaMode::ComponentCount(0) => {
            return Err(Error::DomainError("component count must be positive".into()));
        }
        PcaMode::ComponentCount(c) => c.min(available),
    };
    let axes = vectors.columns(0, retained).into_owned();
    let scores = &xc * &axes;
    let mut out = if return_truncated {
        scores
    } else {
        let mut recon = &scores * axes.transpose();
        for (j, mut col) in recon.column_iter_mut().enumerate() {
            col.add_scalar_mut(center[j]);
        }
        recon
    };
    if transposed {
        out = out.transpose();
    }
    Ok(PcaOutput {
        data: out,
        retained,
        transposed,
        variances,
    })
}
