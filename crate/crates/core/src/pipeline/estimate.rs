//! Moment estimators for the fitted families.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::Serialize;

use super::BoundsRule;
use crate::approx::{moment_match_moments, product_distribution};
use crate::error::{Error, Result};
use crate::linalg::{column_means, condition_number, sample_covariance, symmetrize};
use crate::quadrature::{std_normal_interval, std_normal_pdf};
use crate::types::{DiscreteDist, GaussianMulti, TruncGaussianMulti, TruncGaussianUni};

/// Shrinkage intensities tried, in order, until the covariance is well conditioned.
pub const SHRINKAGE_LADDER: [f64; 5] = [0.0, 0.01, 0.05, 0.1, 0.25];

/// Largest accepted condition number of a fitted covariance.
pub const TARGET_CONDITION: f64 = 1e10;

/// Largest product-form support built by the discrete fit.
const MAX_DISCRETE_CELLS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MvnEstimate {
    #[serde(skip)]
    pub dist: GaussianMulti,
    /// Shrinkage actually applied.
    pub shrinkage: f64,
    pub condition: f64,
}

/// Mean and shrunk covariance `(1−λ)S + λ·avg(diag S)·I`, with λ raised
/// along [`SHRINKAGE_LADDER`] until the condition number drops below
/// [`TARGET_CONDITION`].
pub fn estimate_mvn(data: &DMatrix<f64>, shrinkage: f64) -> Result<MvnEstimate> {
    if data.nrows() < 2 {
        return Err(Error::DegenerateData(format!("need at least two observations, got {}", data.nrows())));
    }
    if data.ncols() == 0 {
        return Err(Error::DegenerateData("no variables".into()));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::DomainError("data contains non-finite values".into()));
    }
    if !(0.0..1.0).contains(&shrinkage) {
        return Err(Error::DomainError(format!("shrinkage {shrinkage} outside [0, 1)")));
    }
    let mean = column_means(data);
    let s = sample_covariance(data);
    let n = s.nrows();
    let avg = s.trace() / n as f64;
    if !(avg > 0.0) {
        return Err(Error::DegenerateData("every variable is constant".into()));
    }
    let candidates = std::iter::once(shrinkage).chain(SHRINKAGE_LADDER.iter().copied().filter(|&l| l > shrinkage));
    for lambda in candidates {
        let cov = symmetrize(&(&s * (1.0 - lambda) + DMatrix::identity(n, n) * (lambda * avg)));
        let cond = condition_number(&cov);
        if cond.is_finite() && cond < TARGET_CONDITION {
            if lambda > shrinkage {
                log::info!("covariance shrinkage raised from {shrinkage} to {lambda} (condition {cond:.3e})");
            }
            let dist = GaussianMulti::new(mean.clone(), cov)?;
            return Ok(MvnEstimate {
                dist,
                shrinkage: lambda,
                condition: cond,
            });
        }
    }
    Err(Error::DegenerateData(format!(
        "covariance stays ill-conditioned at shrinkage {}",
        SHRINKAGE_LADDER[SHRINKAGE_LADDER.len() - 1].max(shrinkage)
    )))
}

/// Mean and variance of `N(μ, σ²)` truncated to `[a, b]`.
pub fn truncated_moments(mu: f64, sigma2: f64, a: f64, b: f64) -> (f64, f64) {
    let s = sigma2.sqrt();
    let al = (a - mu) / s;
    let be = (b - mu) / s;
    let z = std_normal_interval(al, be);
    let pa = if al.is_finite() { std_normal_pdf(al) } else { 0.0 };
    let pb = if be.is_finite() { std_normal_pdf(be) } else { 0.0 };
    let apa = if al.is_finite() { al * pa } else { 0.0 };
    let bpb = if be.is_finite() { be * pb } else { 0.0 };
    let shift = (pa - pb) / z;
    let mean = mu + s * shift;
    let var = sigma2 * (1.0 + (apa - bpb) / z - shift * shift);
    (mean, var)
}

/// Truncated normal whose mean and variance match the sample's, with bounds
/// from `rule`. Fails with `NoSolution` when the moment equations have no
/// root the solver can reach.
pub fn estimate_truncated_uni(data: &[f64], rule: BoundsRule) -> Result<TruncGaussianUni> {
    if data.len() < 10 {
        return Err(Error::DegenerateData(format!("need at least 10 observations, got {}", data.len())));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::DomainError("data contains non-finite values".into()));
    }
    let n = data.len() as f64;
    let m = data.iter().sum::<f64>() / n;
    let v = data.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    if !(v > 0.0) {
        return Err(Error::DegenerateData("constant column".into()));
    }
    let (a, b) = match rule {
        BoundsRule::ObservedRange => data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x))),
        BoundsRule::Fixed(a, b) => {
            if let Some(x) = data.iter().find(|&&x| x < a || x > b) {
                return Err(Error::DomainError(format!("observation {x} outside fixed bounds ({a}, {b})")));
            }
            (a, b)
        }
    };
    if !a.is_finite() && !b.is_finite() {
        return Ok(TruncGaussianUni::new(m, v, a, b)?);
    }
    let sd = v.sqrt();
    let residual = |th: &Vector2<f64>| -> Vector2<f64> {
        let (tm, tv) = truncated_moments(th[0], (2.0 * th[1]).exp(), a, b);
        Vector2::new((tm - m) / sd, (tv - v) / v)
    };
    let mut th = Vector2::new(m, sd.ln());
    let mut r = residual(&th);
    for _ in 0..200 {
        if !(r.amax() > 1e-12) {
            break;
        }
        let mut jac = Matrix2::zeros();
        for k in 0..2 {
            let h = 1e-6 * if k == 0 { sd } else { 1.0 };
            let mut up = th;
            let mut dn = th;
            up[k] += h;
            dn[k] -= h;
            let col = (residual(&up) - residual(&dn)) / (2.0 * h);
            jac.set_column(k, &col);
        }
        let Some(step) = jac.lu().solve(&(-r)) else { break };
        let mut t = 1.0;
        let norm0 = r.norm();
        let mut moved = false;
        for _ in 0..40 {
            let cand = th + step * t;
            let rc = residual(&cand);
            if rc.iter().all(|x| x.is_finite()) && rc.norm() < norm0 {
                th = cand;
                r = rc;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let (mu, s2) = (th[0], (2.0 * th[1]).exp());
    let (tm, tv) = truncated_moments(mu, s2, a, b);
    if !((tm - m).abs() <= 1e-6 * sd.max(1.0) && (tv - v).abs() <= 1e-6 * v.max(1.0)) || !s2.is_finite() {
        return Err(Error::NoSolution(format!(
            "no truncated normal on ({a}, {b}) has mean {m} and variance {v}"
        )));
    }
    Ok(TruncGaussianUni::new(mu, s2, a, b)?)
}

/// Per-axis truncated normals joined by the sample correlation. Axes whose
/// moment equations fail keep the untruncated sample moments and their
/// bounds; the warnings name them.
pub fn estimate_truncated_mvn(data: &DMatrix<f64>, rule: BoundsRule, shrinkage: f64) -> Result<(TruncGaussianMulti, f64, Vec<String>)> {
    let mvn = estimate_mvn(data, shrinkage)?;
    let k = data.ncols();
    let mut mu = DVector::zeros(k);
    let mut sd = DVector::zeros(k);
    let mut lower = Vec::with_capacity(k);
    let mut upper = Vec::with_capacity(k);
    let mut warnings = Vec::new();
    for j in 0..k {
        let col: Vec<f64> = data.column(j).iter().copied().collect();
        let fit = match estimate_truncated_uni(&col, rule) {
            Ok(f) => f,
            Err(Error::NoSolution(msg)) => {
                let w = format!("axis {j}: {msg}; using untruncated moments");
                log::warn!("{w}");
                warnings.push(w);
                let (a, b) = match rule {
                    BoundsRule::ObservedRange => col
                        .iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x))),
                    BoundsRule::Fixed(a, b) => (a, b),
                };
                TruncGaussianUni::new(mvn.dist.mu()[j], mvn.dist.cov()[(j, j)], a, b)?
            }
            Err(e) => return Err(e),
        };
        mu[j] = fit.mu();
        sd[j] = fit.sigma2().sqrt();
        lower.push(fit.lower());
        upper.push(fit.upper());
    }
    let c = mvn.dist.cov();
    let cov = symmetrize(&DMatrix::from_fn(k, k, |i, j| {
        c[(i, j)] / (c[(i, i)] * c[(j, j)]).sqrt() * sd[i] * sd[j]
    }));
    let base = GaussianMulti::new(mu, cov)?;
    Ok((TruncGaussianMulti::new(base, lower, upper)?, mvn.shrinkage, warnings))
}

/// Product of per-axis `nodes`-point moment matches of the standardized
/// columns. Weights are invariant under the standardization.
pub fn estimate_discrete(data: &DMatrix<f64>, nodes: usize) -> Result<DiscreteDist> {
    let k = data.ncols();
    let cells = (nodes as f64).powi(k as i32);
    if cells > MAX_DISCRETE_CELLS as f64 {
        return Err(Error::DomainError(format!(
            "{nodes}^{k} product cells exceed the limit of {MAX_DISCRETE_CELLS}"
        )));
    }
    let n = data.nrows() as f64;
    let mut axes = Vec::with_capacity(k);
    for col in data.column_iter() {
        let m = col.sum() / n;
        let sd = (col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
        if !(sd > 0.0) {
            return Err(Error::DegenerateData("constant column".into()));
        }
        let mut moments = vec![0.0; 2 * nodes];
        for &x in col.iter() {
            let z = (x - m) / sd;
            let mut p = 1.0;
            for mj in moments.iter_mut() {
                *mj += p;
                p *= z;
            }
        }
        moments.iter_mut().for_each(|v| *v /= n);
        moments[0] = 1.0;
        axes.push(moment_match_moments(&moments, nodes)?);
    }
    product_distribution(&axes)
}
