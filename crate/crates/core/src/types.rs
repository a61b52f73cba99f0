//! Domain types shared by every module.
//!
//! All public constructors validate their invariants, so a value of any of
//! these types is always well formed. The JSON representation of every
//! distribution writes fields by name; infinite bounds are written as the
//! strings `"-inf"` / `"+inf"`.

use std::fmt;
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{std_normal_cdf, std_normal_pdf};

/// Probability-sum tolerance accepted without touching the input.
pub const PROB_SUM_TOL: f64 = 1e-12;
/// Inputs within this distance of 1 are renormalized with a warning.
pub const PROB_RENORM_TOL: f64 = 1e-9;
/// Symmetry tolerance for covariance matrices.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// The first violated invariant of a candidate value.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Empty,
    NonFinite(&'static str),
    NegativeProbability { index: usize, value: f64 },
    SumNotOne { sum: f64 },
    LabelCount { labels: usize, entries: usize },
    NonPositiveVariance(f64),
    NotSquare { rows: usize, cols: usize },
    DimensionMismatch { expected: usize, found: usize },
    NotSymmetric { row: usize, col: usize },
    NotPositiveDefinite { min_eigenvalue: f64 },
    BoundsOrder { index: usize, lower: f64, upper: f64 },
    RaggedRows { row: usize },
    NegativeValue { row: usize, col: usize },
    NonZeroDiagonal { index: usize },
    Asymmetric { row: usize, col: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "no entries"),
            Violation::NonFinite(what) => write!(f, "non-finite value in {what}"),
            Violation::NegativeProbability { index, value } => {
                write!(f, "probability {index} is negative ({value})")
            }
            Violation::SumNotOne { sum } => write!(f, "sum ≠ 1 (sum = {sum})"),
            Violation::LabelCount { labels, entries } => {
                write!(f, "{labels} labels for {entries} entries")
            }
            Violation::NonPositiveVariance(v) => write!(f, "variance must be > 0, got {v}"),
            Violation::NotSquare { rows, cols } => write!(f, "matrix is {rows}x{cols}, not square"),
            Violation::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Violation::NotSymmetric { row, col } => {
                write!(f, "covariance not symmetric at ({row}, {col})")
            }
            Violation::NotPositiveDefinite { min_eigenvalue } => {
                write!(f, "not positive definite (min eigenvalue {min_eigenvalue:e})")
            }
            Violation::BoundsOrder { index, lower, upper } => {
                write!(f, "bound {index}: lower {lower} is not below upper {upper}")
            }
            Violation::RaggedRows { row } => write!(f, "row {row} has the wrong length"),
            Violation::NegativeValue { row, col } => write!(f, "negative entry at ({row}, {col})"),
            Violation::NonZeroDiagonal { index } => write!(f, "diagonal entry {index} is not zero"),
            Violation::Asymmetric { row, col } => {
                write!(f, "matrix flagged symmetric but differs at ({row}, {col})")
            }
        }
    }
}

impl std::error::Error for Violation {}

/// Serde helpers that accept and emit `"-inf"` / `"+inf"` for infinities.
pub mod ext_f64 {
    use serde::de::{self, Deserializer, Visitor};
    use serde::ser::{SerializeSeq, Serializer};
    use std::fmt;

    pub fn to_text(x: f64) -> Option<&'static str> {
        if x == f64::INFINITY {
            Some("+inf")
        } else if x == f64::NEG_INFINITY {
            Some("-inf")
        } else if x.is_nan() {
            Some("nan")
        } else {
            None
        }
    }

    pub fn parse_text(s: &str) -> Option<f64> {
        match s.trim().to_ascii_lowercase().as_str() {
            "+inf" | "inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
            "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
            "nan" => Some(f64::NAN),
            other => other.parse().ok(),
        }
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        match to_text(*x) {
            Some(t) => s.serialize_str(t),
            None => s.serialize_f64(*x),
        }
    }

    struct ExtVisitor;

    impl Visitor<'_> for ExtVisitor {
        type Value = f64;

        fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
            f.write_str("a number or one of \"-inf\", \"+inf\"")
        }
        fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
            Ok(v)
        }
        fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
            Ok(v as f64)
        }
        fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
            Ok(v as f64)
        }
        fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
            parse_text(v).ok_or_else(|| E::custom(format!("not a number: {v:?}")))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        d.deserialize_any(ExtVisitor)
    }

    pub mod vec {
        use super::*;
        use serde::Deserialize;

        #[derive(Deserialize)]
        struct Wrapped(#[serde(with = "super")] f64);

        pub fn serialize<S: Serializer>(xs: &[f64], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(xs.len()))?;
            for x in xs {
                match to_text(*x) {
                    Some(t) => seq.serialize_element(t)?,
                    None => seq.serialize_element(x)?,
                }
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            let v: Vec<Wrapped> = Vec::deserialize(d)?;
            Ok(v.into_iter().map(|w| w.0).collect())
        }
    }

    pub mod matrix {
        use super::*;
        use serde::{Deserialize, Serialize};

        #[derive(Serialize, Deserialize)]
        struct Row(#[serde(with = "super::vec")] Vec<f64>);

        pub fn serialize<S: Serializer>(rows: &[Vec<f64>], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(rows.len()))?;
            for r in rows {
                seq.serialize_element(&Row(r.clone()))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<f64>>, D::Error> {
            let v: Vec<Row> = Vec::deserialize(d)?;
            Ok(v.into_iter().map(|r| r.0).collect())
        }
    }
}

fn check_finite(xs: &[f64], what: &'static str) -> std::result::Result<(), Violation> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Violation::NonFinite(what))
    }
}

fn check_bounds(lower: &[f64], upper: &[f64]) -> std::result::Result<(), Violation> {
    if lower.len() != upper.len() {
        return Err(Violation::DimensionMismatch {
            expected: lower.len(),
            found: upper.len(),
        });
    }
    for (i, (&a, &b)) in lower.iter().zip(upper).enumerate() {
        if a.is_nan() || b.is_nan() || a >= b || a == f64::INFINITY || b == f64::NEG_INFINITY {
            return Err(Violation::BoundsOrder {
                index: i,
                lower: a,
                upper: b,
            });
        }
    }
    Ok(())
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> std::result::Result<DMatrix<f64>, Violation> {
    let n = rows.len();
    if n == 0 {
        return Err(Violation::Empty);
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != n {
            return Err(Violation::RaggedRows { row: i });
        }
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

// ---------------------------------------------------------------------------
// DiscreteDist

/// Probability vector over `k` aligned categories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DiscreteSpec", into = "DiscreteSpec")]
pub struct DiscreteDist {
    probs: Vec<f64>,
    labels: Option<Vec<String>>,
}

/// Unvalidated fields of a [`DiscreteDist`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSpec {
    pub probs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl DiscreteSpec {
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        if self.probs.is_empty() {
            return Err(Violation::Empty);
        }
        check_finite(&self.probs, "probabilities")?;
        if let Some((index, &value)) = self.probs.iter().enumerate().find(|(_, &p)| p < 0.0) {
            return Err(Violation::NegativeProbability { index, value });
        }
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > PROB_RENORM_TOL {
            return Err(Violation::SumNotOne { sum });
        }
        if let Some(l) = &self.labels {
            if l.len() != self.probs.len() {
                return Err(Violation::LabelCount {
                    labels: l.len(),
                    entries: self.probs.len(),
                });
            }
        }
        Ok(())
    }
}

impl TryFrom<DiscreteSpec> for DiscreteDist {
    type Error = Violation;

    fn try_from(spec: DiscreteSpec) -> std::result::Result<Self, Violation> {
        spec.validate()?;
        let mut probs = spec.probs;
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            log::warn!("probabilities sum to {sum}; renormalizing");
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        Ok(DiscreteDist {
            probs,
            labels: spec.labels,
        })
    }
}

impl From<DiscreteDist> for DiscreteSpec {
    fn from(d: DiscreteDist) -> Self {
        DiscreteSpec {
            probs: d.probs,
            labels: d.labels,
        }
    }
}

impl DiscreteDist {
    pub fn new(probs: Vec<f64>) -> std::result::Result<Self, Violation> {
        DiscreteSpec { probs, labels: None }.try_into()
    }

    pub fn with_labels(probs: Vec<f64>, labels: Vec<String>) -> std::result::Result<Self, Violation> {
        DiscreteSpec {
            probs,
            labels: Some(labels),
        }
        .try_into()
    }

    /// Normalizes nonnegative weights (counts, histogram heights) into a distribution.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::EmptySample);
        }
        Ok(DiscreteDist::new(weights.iter().map(|w| w / total).collect())?)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

// ---------------------------------------------------------------------------
// Univariate normal

/// Univariate normal stored as mean and variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NormalSpec", into = "NormalSpec")]
pub struct GaussianUni {
    mu: f64,
    sigma2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalSpec {
    pub mu: f64,
    pub sigma2: f64,
}

impl NormalSpec {
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        check_finite(&[self.mu, self.sigma2], "normal parameters")?;
        if self.sigma2 <= 0.0 {
            return Err(Violation::NonPositiveVariance(self.sigma2));
        }
        Ok(())
    }
}

impl TryFrom<NormalSpec> for GaussianUni {
    type Error = Violation;
    fn try_from(s: NormalSpec) -> std::result::Result<Self, Violation> {
        s.validate()?;
        Ok(GaussianUni {
            mu: s.mu,
            sigma2: s.sigma2,
        })
    }
}

impl From<GaussianUni> for NormalSpec {
    fn from(g: GaussianUni) -> Self {
        NormalSpec {
            mu: g.mu,
            sigma2: g.sigma2,
        }
    }
}

impl GaussianUni {
    pub fn new(mu: f64, sigma2: f64) -> std::result::Result<Self, Violation> {
        NormalSpec { mu, sigma2 }.try_into()
    }

    pub fn standard() -> Self {
        GaussianUni { mu: 0.0, sigma2: 1.0 }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let s = self.sigma();
        std_normal_pdf((x - self.mu) / s) / s
    }

    pub fn cdf(&self, x: f64) -> f64 {
        std_normal_cdf((x - self.mu) / self.sigma())
    }
}

// ---------------------------------------------------------------------------
// Multivariate normal

/// Multivariate normal with a symmetric positive definite covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MvnSpec", into = "MvnSpec")]
pub struct GaussianMulti {
    mu: DVector<f64>,
    cov: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MvnSpec {
    pub mu: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
}

fn validate_mvn(mu: &[f64], cov: &DMatrix<f64>) -> std::result::Result<(), Violation> {
    let k = mu.len();
    if k == 0 {
        return Err(Violation::Empty);
    }
    check_finite(mu, "mean")?;
    check_finite(cov.as_slice(), "covariance")?;
    if !cov.is_square() {
        return Err(Violation::NotSquare {
            rows: cov.nrows(),
            cols: cov.ncols(),
        });
    }
    if cov.nrows() != k {
        return Err(Violation::DimensionMismatch {
            expected: k,
            found: cov.nrows(),
        });
    }
    for i in 0..k {
        for j in (i + 1)..k {
            let (a, b) = (cov[(i, j)], cov[(j, i)]);
            if (a - b).abs() > SYMMETRY_TOL * a.abs().max(b.abs()).max(1.0) {
                return Err(Violation::NotSymmetric { row: i, col: j });
            }
        }
    }
    let min_eig = crate::linalg::min_eigenvalue(cov);
    if !(min_eig > 0.0) {
        return Err(Violation::NotPositiveDefinite {
            min_eigenvalue: min_eig,
        });
    }
    Ok(())
}

impl MvnSpec {
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        let cov = rows_to_matrix(&self.cov)?;
        validate_mvn(&self.mu, &cov)
    }
}

impl TryFrom<MvnSpec> for GaussianMulti {
    type Error = Violation;
    fn try_from(s: MvnSpec) -> std::result::Result<Self, Violation> {
        let cov = rows_to_matrix(&s.cov)?;
        GaussianMulti::new(DVector::from_vec(s.mu), cov)
    }
}

impl From<GaussianMulti> for MvnSpec {
    fn from(g: GaussianMulti) -> Self {
        MvnSpec {
            mu: g.mu.as_slice().to_vec(),
            cov: matrix_to_rows(&g.cov),
        }
    }
}

impl GaussianMulti {
    pub fn new(mu: DVector<f64>, cov: DMatrix<f64>) -> std::result::Result<Self, Violation> {
        validate_mvn(mu.as_slice(), &cov)?;
        // exact symmetry from here on
        let cov = (&cov + cov.transpose()) * 0.5;
        Ok(GaussianMulti { mu, cov })
    }

    pub fn from_rows(mu: &[f64], cov: &[Vec<f64>]) -> std::result::Result<Self, Violation> {
        MvnSpec {
            mu: mu.to_vec(),
            cov: cov.to_vec(),
        }
        .try_into()
    }

    pub fn identity(dim: usize) -> Self {
        GaussianMulti {
            mu: DVector::zeros(dim),
            cov: DMatrix::identity(dim, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Density at `x`; `x` must have length `dim()`.
    pub fn pdf(&self, x: &[f64]) -> f64 {
        let chol = self
            .cov
            .clone()
            .cholesky()
            .expect("validated covariance is positive definite");
        let d = DVector::from_iterator(x.len(), x.iter().zip(self.mu.iter()).map(|(a, b)| a - b));
        let z = chol.l().solve_lower_triangular(&d).expect("nonsingular");
        let log_det: f64 = chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
        let k = self.dim() as f64;
        (-0.5 * z.norm_squared() - 0.5 * log_det - 0.5 * k * (2.0 * std::f64::consts::PI).ln()).exp()
    }
}

// ---------------------------------------------------------------------------
// Truncated normals

/// Normal conditioned on `lower < X < upper`; bounds may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TruncNormalSpec", into = "TruncNormalSpec")]
pub struct TruncGaussianUni {
    base: GaussianUni,
    lower: f64,
    upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncNormalSpec {
    pub mu: f64,
    pub sigma2: f64,
    #[serde(with = "ext_f64")]
    pub lower: f64,
    #[serde(with = "ext_f64")]
    pub upper: f64,
}

impl TruncNormalSpec {
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        NormalSpec {
            mu: self.mu,
            sigma2: self.sigma2,
        }
        .validate()?;
        check_bounds(&[self.lower], &[self.upper])
    }
}

impl TryFrom<TruncNormalSpec> for TruncGaussianUni {
    type Error = Violation;
    fn try_from(s: TruncNormalSpec) -> std::result::Result<Self, Violation> {
        s.validate()?;
        Ok(TruncGaussianUni {
            base: GaussianUni {
                mu: s.mu,
                sigma2: s.sigma2,
            },
            lower: s.lower,
            upper: s.upper,
        })
    }
}

impl From<TruncGaussianUni> for TruncNormalSpec {
    fn from(t: TruncGaussianUni) -> Self {
        TruncNormalSpec {
            mu: t.base.mu,
            sigma2: t.base.sigma2,
            lower: t.lower,
            upper: t.upper,
        }
    }
}

impl TruncGaussianUni {
    pub fn new(mu: f64, sigma2: f64, lower: f64, upper: f64) -> std::result::Result<Self, Violation> {
        TruncNormalSpec {
            mu,
            sigma2,
            lower,
            upper,
        }
        .try_into()
    }

    pub fn untruncated(base: GaussianUni) -> Self {
        TruncGaussianUni {
            base,
            lower: f64::NEG_INFINITY,
            upper: f64::INFINITY,
        }
    }

    pub fn base(&self) -> &GaussianUni {
        &self.base
    }

    pub fn mu(&self) -> f64 {
        self.base.mu
    }

    pub fn sigma2(&self) -> f64 {
        self.base.sigma2
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    /// Probability of the truncation interval under the parent normal.
    pub fn mass(&self) -> f64 {
        self.base.cdf(self.upper) - self.base.cdf(self.lower)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.lower || x > self.upper {
            0.0
        } else {
            self.base.pdf(x) / self.mass()
        }
    }
}

/// Multivariate normal restricted to the box `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TruncMvnSpec", into = "TruncMvnSpec")]
pub struct TruncGaussianMulti {
    base: GaussianMulti,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncMvnSpec {
    pub mu: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    #[serde(with = "ext_f64::vec")]
    pub lower: Vec<f64>,
    #[serde(with = "ext_f64::vec")]
    pub upper: Vec<f64>,
}

impl TruncMvnSpec {
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        MvnSpec {
            mu: self.mu.clone(),
            cov: self.cov.clone(),
        }
        .validate()?;
        if self.lower.len() != self.mu.len() {
            return Err(Violation::DimensionMismatch {
                expected: self.mu.len(),
                found: self.lower.len(),
            });
        }
        check_bounds(&self.lower, &self.upper)
    }
}

impl TryFrom<TruncMvnSpec> for TruncGaussianMulti {
    type Error = Violation;
    fn try_from(s: TruncMvnSpec) -> std::result::Result<Self, Violation> {
        s.validate()?;
        let base = GaussianMulti::from_rows(&s.mu, &s.cov)?;
        Ok(TruncGaussianMulti {
            base,
            lower: s.lower,
            upper: s.upper,
        })
    }
}

impl From<TruncGaussianMulti> for TruncMvnSpec {
    fn from(t: TruncGaussianMulti) -> Self {
        let MvnSpec { mu, cov } = t.base.into();
        TruncMvnSpec {
            mu,
            cov,
            lower: t.lower,
            upper: t.upper,
        }
    }
}

impl TruncGaussianMulti {
    pub fn new(base: GaussianMulti, lower: Vec<f64>, upper: Vec<f64>) -> std::result::Result<Self, Violation> {
        if lower.len() != base.dim() {
            return Err(Violation::DimensionMismatch {
                expected: base.dim(),
                found: lower.len(),
            });
        }
        check_bounds(&lower, &upper)?;
        Ok(TruncGaussianMulti { base, lower, upper })
    }

    pub fn base(&self) -> &GaussianMulti {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&v, (&a, &b))| v >= a && v <= b)
    }
}

// ---------------------------------------------------------------------------
// Overlap parameters

/// Overlap interval and the mixture normal parameters of the univariate
/// truncated closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OverlapParams {
    #[serde(with = "ext_f64")]
    pub l: f64,
    #[serde(with = "ext_f64")]
    pub u: f64,
    pub nu: f64,
    pub varsigma: f64,
}

/// Multivariate counterpart of [`OverlapParams`].
///
/// `s` is `(Σp⁻¹ + Σq⁻¹)⁻¹`, `big_m` the quadratic mean term
/// `(μp−μq)ᵀ(Σp+Σq)⁻¹(μp−μq)`, `sigma_bar` the average covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct MvnOverlapParams {
    pub l: Vec<f64>,
    pub u: Vec<f64>,
    pub m: DVector<f64>,
    pub s: DMatrix<f64>,
    pub big_m: f64,
    pub sigma_bar: DMatrix<f64>,
}

// ---------------------------------------------------------------------------
// Samples and distance tables

/// T observations (rows) by N variables (columns).
///
/// This orientation is used throughout the crate: a row is one observation
/// (one day of prices), a column is one variable (one ticker).
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    values: DMatrix<f64>,
    labels: Vec<String>,
}

impl SampleMatrix {
    pub fn new(values: DMatrix<f64>, labels: Vec<String>) -> std::result::Result<Self, Violation> {
        if values.nrows() == 0 || values.ncols() == 0 {
            return Err(Violation::Empty);
        }
        if labels.len() != values.ncols() {
            return Err(Violation::LabelCount {
                labels: labels.len(),
                entries: values.ncols(),
            });
        }
        check_finite(values.as_slice(), "sample matrix")?;
        Ok(SampleMatrix { values, labels })
    }

    /// Builds a matrix with labels `x0, x1, ...`.
    pub fn unlabeled(values: DMatrix<f64>) -> std::result::Result<Self, Violation> {
        let labels = (0..values.ncols()).map(|j| format!("x{j}")).collect();
        SampleMatrix::new(values, labels)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> std::result::Result<Self, Violation> {
        let t = rows.len();
        if t == 0 {
            return Err(Violation::Empty);
        }
        let n = rows[0].len();
        if let Some(row) = rows.iter().position(|r| r.len() != n) {
            return Err(Violation::RaggedRows { row });
        }
        SampleMatrix::unlabeled(DMatrix::from_fn(t, n, |i, j| rows[i][j]))
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_obs(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_vars(&self) -> usize {
        self.values.ncols()
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    /// Reads a CSV with a header row of column labels and one row per
    /// observation. Every cell must parse as a finite number.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let labels: Vec<String> = rdr.headers()?.iter().map(|s| s.trim().to_string()).collect();
        let mut data = Vec::new();
        let mut rows = 0;
        for (r, rec) in rdr.records().enumerate() {
            let rec = rec?;
            if rec.len() != labels.len() {
                return Err(Error::Parse {
                    row: r + 1,
                    column: String::new(),
                    message: format!("expected {} fields, found {}", labels.len(), rec.len()),
                });
            }
            for (c, cell) in rec.iter().enumerate() {
                let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                    row: r + 1,
                    column: labels[c].clone(),
                    message: format!("not a number: {cell:?}"),
                })?;
                data.push(v);
            }
            rows += 1;
        }
        let n = labels.len();
        let values = DMatrix::from_row_slice(rows, n, &data);
        Ok(SampleMatrix::new(values, labels)?)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(&self.labels)?;
        for i in 0..self.n_obs() {
            w.write_record(self.values.row(i).iter().map(|v| format!("{v:?}")))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Labeled, possibly asymmetric table of pairwise distances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistanceMatrixSpec", into = "DistanceMatrixSpec")]
pub struct DistanceMatrix {
    labels: Vec<String>,
    values: Vec<Vec<f64>>,
    symmetric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrixSpec {
    pub labels: Vec<String>,
    #[serde(with = "ext_f64::matrix")]
    pub matrix: Vec<Vec<f64>>,
    pub symmetric: bool,
}

/// Diagonal entries within this tolerance of zero are accepted.
pub const DIAGONAL_TOL: f64 = 1e-8;

impl DistanceMatrixSpec {
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        let g = self.labels.len();
        if g == 0 {
            return Err(Violation::Empty);
        }
        if self.matrix.len() != g {
            return Err(Violation::DimensionMismatch {
                expected: g,
                found: self.matrix.len(),
            });
        }
        for (i, row) in self.matrix.iter().enumerate() {
            if row.len() != g {
                return Err(Violation::RaggedRows { row: i });
            }
            for (j, &v) in row.iter().enumerate() {
                if v.is_nan() || v < 0.0 {
                    return Err(Violation::NegativeValue { row: i, col: j });
                }
            }
            if row[i].abs() > DIAGONAL_TOL {
                return Err(Violation::NonZeroDiagonal { index: i });
            }
        }
        if self.symmetric {
            for i in 0..g {
                for j in 0..i {
                    if self.matrix[i][j] != self.matrix[j][i] {
                        return Err(Violation::Asymmetric { row: i, col: j });
                    }
                }
            }
        }
        Ok(())
    }
}

impl TryFrom<DistanceMatrixSpec> for DistanceMatrix {
    type Error = Violation;
    fn try_from(s: DistanceMatrixSpec) -> std::result::Result<Self, Violation> {
        s.validate()?;
        Ok(DistanceMatrix {
            labels: s.labels,
            values: s.matrix,
            symmetric: s.symmetric,
        })
    }
}

impl From<DistanceMatrix> for DistanceMatrixSpec {
    fn from(d: DistanceMatrix) -> Self {
        DistanceMatrixSpec {
            labels: d.labels,
            matrix: d.values,
            symmetric: d.symmetric,
        }
    }
}

impl DistanceMatrix {
    pub fn new(labels: Vec<String>, values: Vec<Vec<f64>>, symmetric: bool) -> std::result::Result<Self, Violation> {
        DistanceMatrixSpec {
            labels,
            matrix: values,
            symmetric,
        }
        .try_into()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Off-diagonal ordered pair with the smallest distance.
    pub fn argmin(&self) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..self.len() {
            for j in 0..self.len() {
                if i != j && best.is_none_or(|(_, _, v)| self.values[i][j] < v) {
                    best = Some((i, j, self.values[i][j]));
                }
            }
        }
        best.map(|(i, j, _)| (i, j))
    }

    /// CSV with the labels in the header row and first column.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![String::new()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(&self.values) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(|v| match ext_f64::to_text(*v) {
                Some(t) => t.trim_start_matches('+').to_string(),
                None => format!("{v:?}"),
            }));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Callables and quadrature results

/// Real function of one real argument, shareable across threads.
pub trait ScalarFn: Fn(f64) -> f64 + Sync {}
impl<F: Fn(f64) -> f64 + Sync> ScalarFn for F {}

/// Real function of two real arguments, shareable across threads.
pub trait ScalarFn2: Fn(f64, f64) -> f64 + Sync {}
impl<F: Fn(f64, f64) -> f64 + Sync> ScalarFn2 for F {}

/// Value of a numerical integral with its error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

impl QuadResult {
    pub fn exact(value: f64) -> Self {
        QuadResult {
            value,
            error_estimate: 0.0,
            evaluations: 0,
        }
    }
}

// ---------------------------------------------------------------------------
// Tagged union used by the CLI and FFI

/// Any supported distribution, tagged by `kind` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Distribution {
    Discrete(DiscreteDist),
    Normal(GaussianUni),
    Mvn(GaussianMulti),
    TruncatedNormal(TruncGaussianUni),
    TruncatedMvn(TruncGaussianMulti),
}

/// Unvalidated counterpart of [`Distribution`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Discrete(DiscreteSpec),
    Normal(NormalSpec),
    Mvn(MvnSpec),
    TruncatedNormal(TruncNormalSpec),
    TruncatedMvn(TruncMvnSpec),
}

/// Reports the first violated invariant of a candidate distribution.
pub fn validate(spec: &DistributionSpec) -> std::result::Result<(), Violation> {
    match spec {
        DistributionSpec::Discrete(s) => s.validate(),
        DistributionSpec::Normal(s) => s.validate(),
        DistributionSpec::Mvn(s) => s.validate(),
        DistributionSpec::TruncatedNormal(s) => s.validate(),
        DistributionSpec::TruncatedMvn(s) => s.validate(),
    }
}

impl TryFrom<DistributionSpec> for Distribution {
    type Error = Violation;
    fn try_from(spec: DistributionSpec) -> std::result::Result<Self, Violation> {
        Ok(match spec {
            DistributionSpec::Discrete(s) => Distribution::Discrete(s.try_into()?),
            DistributionSpec::Normal(s) => Distribution::Normal(s.try_into()?),
            DistributionSpec::Mvn(s) => Distribution::Mvn(s.try_into()?),
            DistributionSpec::TruncatedNormal(s) => Distribution::TruncatedNormal(s.try_into()?),
            DistributionSpec::TruncatedMvn(s) => Distribution::TruncatedMvn(s.try_into()?),
        })
    }
}
