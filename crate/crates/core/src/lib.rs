//! Bhattacharyya coefficients and distances for discrete, normal and
//! truncated normal distributions, with the numerical machinery around
//! them: adaptive quadrature, rectangle probabilities, random projection
//! and PCA reduction, moment-matched discrete approximations, Stein
//! identity checks and a group-comparison pipeline.
//!
//! ```
//! use bcdist::gaussian_distance::bc_normal_uni;
//! use bcdist::types::GaussianUni;
//!
//! let p = GaussianUni::new(0.0, 1.0).unwrap();
//! let q = GaussianUni::new(1.0, 1.0).unwrap();
//! let d = bc_normal_uni(&p, &q);
//! assert!((d.distance - 0.125).abs() < 1e-15);
//! ```

pub mod approx;
pub mod cli;
pub mod divergence;
pub mod error;
pub mod gaussian_distance;
pub mod linalg;
pub mod pipeline;
pub mod quadrature;
pub mod reduce;
pub mod stein;
pub mod types;

pub use divergence::DivergenceValue;
pub use error::{Error, Result};
pub use quadrature::QuadConfig;
pub use types::{DiscreteDist, Distribution, DistributionSpec, GaussianMulti, GaussianUni, TruncGaussianMulti, TruncGaussianUni};
