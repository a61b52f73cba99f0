//! Group-comparison pipeline: load per-group sample matrices, reduce their
//! dimension, fit a distribution to each and tabulate pairwise distances.

mod compare;
mod estimate;
mod io;

pub use compare::{compare_groups, fit_distance, CompareOutput, Fitted, GroupFit, IterationResult, PairInfo, Summary};
pub use estimate::{estimate_discrete, estimate_mvn, estimate_truncated_mvn, estimate_truncated_uni, truncated_moments, MvnEstimate, SHRINKAGE_LADDER, TARGET_CONDITION};
pub use io::{load_group, load_group_from_reader, log_returns, report_json, write_outputs};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::QuadConfig;
use crate::types::SampleMatrix;

/// One group of series: `T` observations (rows) of `N ≥ 2` variables.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupDataset {
    pub name: String,
    pub data: SampleMatrix,
    /// Columns removed by [`load_group`] because of missing values.
    pub dropped: Vec<String>,
}

impl GroupDataset {
    pub fn new(name: impl Into<String>, data: SampleMatrix) -> Result<Self> {
        let name = name.into();
        if data.n_vars() < 2 {
            return Err(Error::DegenerateData(format!(
                "group {name} has {} variable(s); at least two are needed",
                data.n_vars()
            )));
        }
        Ok(GroupDataset {
            name,
            data,
            dropped: Vec::new(),
        })
    }

    pub fn n_obs(&self) -> usize {
        self.data.n_obs()
    }

    pub fn n_vars(&self) -> usize {
        self.data.n_vars()
    }
}

/// How each group is reduced before fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum Reduction {
    /// Significant-digits PCA; pairs are reduced to the first group's count.
    Pca { significant_digits: u32 },
    /// Common random projection to `k`, or to the bound for `epsilon`.
    Jl {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        epsilon: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k: Option<usize>,
    },
}

/// Support of a fitted truncated axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsRule {
    ObservedRange,
    Fixed(#[serde(with = "crate::types::ext_f64")] f64, #[serde(with = "crate::types::ext_f64")] f64),
}

/// Distribution family fitted to each reduced group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FitSpec {
    Mvn,
    /// Per-axis truncated normals with the sample correlation.
    TruncatedMvn { bounds: BoundsRule },
    /// Per-axis moment-matched nodes in product form.
    Discrete { nodes: usize },
}

/// Everything that determines a comparison run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub reduction: Reduction,
    pub fit: FitSpec,
    pub iterations: usize,
    pub seed: u64,
    /// Minimum covariance shrinkage toward the scaled identity, in `[0, 1)`.
    pub shrinkage: f64,
    /// Compare log returns instead of levels.
    pub log_returns: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    pub quadrature: QuadConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            reduction: Reduction::Jl { epsilon: Some(0.5), k: None },
            fit: FitSpec::Mvn,
            iterations: 1,
            seed: 0,
            shrinkage: 0.0,
            log_returns: false,
            output_dir: None,
            quadrature: QuadConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.shrinkage) {
            return Err(Error::Config(format!("shrinkage {} outside [0, 1)", self.shrinkage)));
        }
        match self.reduction {
            Reduction::Pca { significant_digits: 0 } => {
                return Err(Error::Config("significant_digits must be at least 1".into()));
            }
            Reduction::Jl { epsilon: None, k: None } => {
                return Err(Error::Config("jl reduction needs epsilon or k".into()));
            }
            Reduction::Jl { k: Some(0), .. } => return Err(Error::Config("k must be positive".into())),
            Reduction::Jl { epsilon: Some(e), .. } if !(e > 0.0 && e < 1.0) => {
                return Err(Error::Config(format!("epsilon {e} outside (0, 1)")));
            }
            _ => {}
        }
        match self.fit {
            FitSpec::Discrete { nodes: 0 } => return Err(Error::Config("nodes must be at least 1".into())),
            FitSpec::TruncatedMvn {
                bounds: BoundsRule::Fixed(a, b),
            } if !(a < b) => {
                return Err(Error::Config(format!("fixed bounds ({a}, {b}) are not ordered")));
            }
            _ => {}
        }
        self.quadrature.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_defaults() {
        let cfg = RunConfig::from_json(r#"{"reduction":{"method":"pca","significant_digits":2},"fit":{"kind":"discrete","nodes":3},"iterations":2}"#).unwrap();
        assert_eq!(cfg.reduction, Reduction::Pca { significant_digits: 2 });
        assert_eq!(cfg.fit, FitSpec::Discrete { nodes: 3 });
        assert_eq!(cfg.seed, 0);
        let back = RunConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);

        let t = RunConfig::from_json(r#"{"fit":{"kind":"truncated_mvn","bounds":{"fixed":["-inf",3.0]}}}"#).unwrap();
        assert_eq!(
            t.fit,
            FitSpec::TruncatedMvn {
                bounds: BoundsRule::Fixed(f64::NEG_INFINITY, 3.0)
            }
        );
    }

    #[test]
    fn config_rejects_bad_values() {
        for bad in [
            r#"{"iterations":0}"#,
            r#"{"shrinkage":1.0}"#,
            r#"{"reduction":{"method":"jl"}}"#,
            r#"{"reduction":{"method":"jl","epsilon":1.5}}"#,
            r#"{"fit":{"kind":"discrete","nodes":0}}"#,
            r#"{"unknown":1}"#,
        ] {
            assert!(RunConfig::from_json(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn group_needs_two_variables() {
        let m = SampleMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(matches!(GroupDataset::new("x", m), Err(Error::DegenerateData(_))));
    }
}
