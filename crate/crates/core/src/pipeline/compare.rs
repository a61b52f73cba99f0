//! Pairwise comparison of groups over seeded iterations.

use nalgebra::DMatrix;
use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use super::estimate::{estimate_discrete, estimate_mvn, estimate_truncated_mvn};
use super::io::log_returns;
use super::{FitSpec, GroupDataset, Reduction, RunConfig};
use crate::divergence::bc_coefficient_discrete;
use crate::error::{Error, Result};
use crate::gaussian_distance::{bc_mvn, bc_truncated_mvn};
use crate::quadrature::{substream, QuadConfig};
use crate::reduce::{jl_min_dimension, jl_project, pca_reduce, PcaMode};
use crate::types::{ext_f64, DiscreteDist, DistanceMatrix, GaussianMulti, TruncGaussianMulti};

/// A fitted group distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum Fitted {
    Mvn(GaussianMulti),
    TruncatedMvn(TruncGaussianMulti),
    Discrete(DiscreteDist),
}

/// Fit of one (reduced) group with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupFit {
    #[serde(skip)]
    pub fitted: Fitted,
    pub group: String,
    pub dim: usize,
    pub shrinkage: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Diagnostics of one ordered pair on the PCA path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairInfo {
    pub from: String,
    pub to: String,
    /// Components retained for `from` by the significant-digits rule.
    pub retained: usize,
    /// Dimension both groups were fitted in.
    pub dim: usize,
    pub shrinkage: [f64; 2],
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationResult {
    pub iteration: usize,
    pub seed: u64,
    pub matrix: DistanceMatrix,
    pub argmin: Option<[String; 2]>,
    /// Common projection dimension (JL path).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub groups: Vec<GroupFit>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<PairInfo>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Per-pair statistics across iterations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub labels: Vec<String>,
    #[serde(with = "ext_f64::matrix")]
    pub mean: Vec<Vec<f64>>,
    #[serde(with = "ext_f64::matrix")]
    pub min: Vec<Vec<f64>>,
    #[serde(with = "ext_f64::matrix")]
    pub max: Vec<Vec<f64>>,
    pub argmin_per_iteration: Vec<Option<[String; 2]>>,
    /// Largest `(max − min) / mean` over off-diagonal pairs.
    #[serde(with = "ext_f64")]
    pub max_relative_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareOutput {
    pub config: RunConfig,
    pub iterations: Vec<IterationResult>,
    pub summary: Summary,
}

#[derive(Serialize)]
pub(super) struct FileRecord<'a> {
    labels: &'a [String],
    #[serde(with = "ext_f64::matrix")]
    matrix: Vec<Vec<f64>>,
    symmetric: bool,
    iteration: usize,
    seed: u64,
    argmin: &'a Option<[String; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    groups: &'a [GroupFit],
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    pairs: &'a [PairInfo],
    #[serde(skip_serializing_if = "<[_]>::is_empty")]
    notes: &'a [String],
    config: &'a RunConfig,
}

#[derive(Serialize)]
pub(super) struct SummaryRecord<'a> {
    seed: u64,
    iterations: usize,
    #[serde(flatten)]
    summary: &'a Summary,
    config: &'a RunConfig,
}

impl IterationResult {
    pub(super) fn file_record<'a>(&'a self, config: &'a RunConfig) -> FileRecord<'a> {
        FileRecord {
            labels: self.matrix.labels(),
            matrix: self.matrix.values().to_vec(),
            symmetric: self.matrix.is_symmetric(),
            iteration: self.iteration,
            seed: self.seed,
            argmin: &self.argmin,
            k: self.k,
            groups: &self.groups,
            pairs: &self.pairs,
            notes: &self.notes,
            config,
        }
    }
}

impl CompareOutput {
    pub(super) fn summary_record(&self) -> SummaryRecord<'_> {
        SummaryRecord {
            seed: self.config.seed,
            iterations: self.iterations.len(),
            summary: &self.summary,
            config: &self.config,
        }
    }
}

/// Seed of iteration `it`.
fn iteration_seed(seed: u64, it: usize) -> u64 {
    substream(seed, 0x1000 + it as u64).next_u64()
}

fn fit_group(group: &str, data: &DMatrix<f64>, cfg: &RunConfig) -> Result<GroupFit> {
    let dim = data.ncols();
    let (fitted, shrinkage, warnings) = match cfg.fit {
        FitSpec::Mvn => {
            let e = estimate_mvn(data, cfg.shrinkage)?;
            (Fitted::Mvn(e.dist), e.shrinkage, Vec::new())
        }
        FitSpec::TruncatedMvn { bounds } => {
            let (d, s, w) = estimate_truncated_mvn(data, bounds, cfg.shrinkage)?;
            (Fitted::TruncatedMvn(d), s, w)
        }
        FitSpec::Discrete { nodes } => (Fitted::Discrete(estimate_discrete(data, nodes)?), 0.0, Vec::new()),
    };
    Ok(GroupFit {
        fitted,
        group: group.to_string(),
        dim,
        shrinkage,
        warnings,
    })
}

/// Bhattacharyya distance between two fits of the same family and dimension.
pub fn fit_distance(a: &Fitted, b: &Fitted, cfg: &QuadConfig) -> Result<f64> {
    let d = match (a, b) {
        (Fitted::Mvn(p), Fitted::Mvn(q)) => bc_mvn(p, q)?.distance,
        (Fitted::TruncatedMvn(p), Fitted::TruncatedMvn(q)) => bc_truncated_mvn(p, q, cfg)?.distance,
        (Fitted::Discrete(p), Fitted::Discrete(q)) => bc_coefficient_discrete(p, q)?.distance,
        _ => return Err(Error::DomainError("fits of different families".into())),
    };
    Ok(d.max(0.0))
}

fn check_groups(groups: &[GroupDataset]) -> Result<()> {
    if groups.len() < 2 {
        return Err(Error::DomainError(format!("need at least two groups, got {}", groups.len())));
    }
    let t = groups[0].n_obs();
    for g in groups {
        if g.n_obs() != t {
            return Err(Error::DimensionMismatch {
                expected: t,
                found: g.n_obs(),
            });
        }
        if g.n_vars() < 2 {
            return Err(Error::DegenerateData(format!("group {} has fewer than two variables", g.name)));
        }
    }
    for (i, g) in groups.iter().enumerate() {
        if groups[..i].iter().any(|h| h.name == g.name) {
            return Err(Error::Config(format!("duplicate group name {}", g.name)));
        }
    }
    Ok(())
}

/// Reduces, fits and compares every pair of groups, `cfg.iterations` times.
///
/// JL path: each iteration projects every group to the common `k` with the
/// iteration's seed (groups with equal width share the matrix), so each
/// iteration's matrix is symmetric. PCA path: for each ordered pair the
/// first group sets the component count and the matrix is kept asymmetric.
pub fn compare_groups(groups: &[GroupDataset], cfg: &RunConfig) -> Result<CompareOutput> {
    cfg.validate()?;
    check_groups(groups)?;
    let data: Vec<DMatrix<f64>> = groups
        .iter()
        .map(|g| if cfg.log_returns { log_returns(g.data.values()) } else { Ok(g.data.values().clone()) })
        .collect::<Result<_>>()?;
    let labels: Vec<String> = groups.iter().map(|g| g.name.clone()).collect();
    let mut iterations = Vec::with_capacity(cfg.iterations);
    for it in 0..cfg.iterations {
        let seed = iteration_seed(cfg.seed, it);
        let result = match cfg.reduction {
            Reduction::Jl { epsilon, k } => jl_iteration(&labels, &data, epsilon, k, seed, cfg)?,
            Reduction::Pca { significant_digits } => pca_iteration(&labels, &data, significant_digits, seed, cfg)?,
        };
        let (matrix, k, groups, pairs, notes) = result;
        let argmin = matrix.argmin().map(|(i, j)| [labels[i].clone(), labels[j].clone()]);
        iterations.push(IterationResult {
            iteration: it,
            seed,
            matrix,
            argmin,
            k,
            groups,
            pairs,
            notes,
        });
    }
    let summary = summarize(&labels, &iterations);
    Ok(CompareOutput {
        config: cfg.clone(),
        iterations,
        summary,
    })
}

type IterParts = (DistanceMatrix, Option<usize>, Vec<GroupFit>, Vec<PairInfo>, Vec<String>);

fn jl_iteration(labels: &[String], data: &[DMatrix<f64>], epsilon: Option<f64>, k: Option<usize>, seed: u64, cfg: &RunConfig) -> Result<IterParts> {
    let t = data[0].nrows();
    let narrowest = data.iter().map(|d| d.ncols()).min().unwrap_or(0);
    let mut notes = Vec::new();
    let mut k = match k {
        Some(k) => k,
        None => jl_min_dimension(t, epsilon.unwrap_or(0.5))?,
    };
    if k > narrowest {
        notes.push(format!("projection dimension {k} clamped to the narrowest group width {narrowest}"));
        k = narrowest;
    }
    let fits: Vec<GroupFit> = data
        .par_iter()
        .zip(labels.par_iter())
        .map(|(x, name)| {
            let projected = jl_project(x, k, seed)?;
            fit_group(name, &projected, cfg)
        })
        .collect::<Result<_>>()?;
    let g = labels.len();
    let pairs: Vec<(usize, usize)> = (0..g).flat_map(|i| (i + 1..g).map(move |j| (i, j))).collect();
    let dists: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| fit_distance(&fits[i].fitted, &fits[j].fitted, &cfg.quadrature))
        .collect::<Result<_>>()?;
    let mut m = vec![vec![0.0; g]; g];
    for (&(i, j), &d) in pairs.iter().zip(&dists) {
        m[i][j] = d;
        m[j][i] = d;
    }
    let matrix = DistanceMatrix::new(labels.to_vec(), m, true)?;
    Ok((matrix, Some(k), fits, Vec::new(), notes))
}

fn pca_iteration(labels: &[String], data: &[DMatrix<f64>], digits: u32, seed: u64, cfg: &RunConfig) -> Result<IterParts> {
    let g = labels.len();
    let reduced: Vec<_> = data
        .par_iter()
        .map(|x| pca_reduce(x, PcaMode::SignificantDigits(digits), true, false))
        .collect::<Result<_>>()?;
    let pairs: Vec<(usize, usize)> = (0..g).flat_map(|i| (0..g).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let results: Vec<(f64, PairInfo)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let first = &reduced[i];
            let c = first.retained;
            let mut notes = Vec::new();
            let mut xi = first.data.clone();
            let mut xj = pca_reduce(&data[j], PcaMode::ComponentCount(c), true, false)?.data;
            if xj.ncols() < xi.ncols() {
                notes.push(format!(
                    "{} has only {} components; {} projected from {} to {}",
                    labels[j],
                    xj.ncols(),
                    labels[i],
                    xi.ncols(),
                    xj.ncols()
                ));
                xi = jl_project(&xi, xj.ncols(), seed)?;
            } else if xi.ncols() < xj.ncols() {
                xj = jl_project(&xj, xi.ncols(), seed)?;
            }
            let fi = fit_group(&labels[i], &xi, cfg)?;
            let fj = fit_group(&labels[j], &xj, cfg)?;
            let d = fit_distance(&fi.fitted, &fj.fitted, &cfg.quadrature)?;
            notes.extend(fi.warnings.iter().chain(&fj.warnings).cloned());
            Ok((
                d,
                PairInfo {
                    from: labels[i].clone(),
                    to: labels[j].clone(),
                    retained: c,
                    dim: xi.ncols(),
                    shrinkage: [fi.shrinkage, fj.shrinkage],
                    notes,
                },
            ))
        })
        .collect::<Result<_>>()?;
    let mut m = vec![vec![0.0; g]; g];
    let mut infos = Vec::with_capacity(results.len());
    for (&(i, j), (d, info)) in pairs.iter().zip(results) {
        m[i][j] = d;
        infos.push(info);
    }
    let matrix = DistanceMatrix::new(labels.to_vec(), m, false)?;
    Ok((matrix, None, Vec::new(), infos, Vec::new()))
}

fn summarize(labels: &[String], iterations: &[IterationResult]) -> Summary {
    let g = labels.len();
    let n = iterations.len() as f64;
    let mut mean = vec![vec![0.0; g]; g];
    let mut min = vec![vec![f64::INFINITY; g]; g];
    let mut max = vec![vec![f64::NEG_INFINITY; g]; g];
    for it in iterations {
        for i in 0..g {
            for j in 0..g {
                let v = it.matrix.get(i, j);
                mean[i][j] += v / n;
                min[i][j] = min[i][j].min(v);
                max[i][j] = max[i][j].max(v);
            }
        }
    }
    let mut spread: f64 = 0.0;
    for i in 0..g {
        for j in 0..g {
            if i != j && mean[i][j] > 0.0 && mean[i][j].is_finite() {
                spread = spread.max((max[i][j] - min[i][j]) / mean[i][j]);
            }
        }
    }
    Summary {
        labels: labels.to_vec(),
        mean,
        min,
        max,
        argmin_per_iteration: iterations.iter().map(|it| it.argmin.clone()).collect(),
        max_relative_spread: spread,
    }
}
