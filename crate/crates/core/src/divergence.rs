//! Distribution-free similarity measures between discrete or continuous
//! distributions.
//!
//! Logarithms are natural throughout, so the Kullback–Leibler divergence is
//! in nats. A coefficient of exactly zero maps to an infinite distance.

use std::cell::Cell;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_1d, QuadConfig};
use crate::types::{ext_f64, DiscreteDist};

/// Mass tolerance for densities passed to [`bc_coefficient_continuous`].
pub const DENSITY_MASS_TOL: f64 = 1e-6;

/// Bhattacharyya coefficient with its distance `−ln ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceValue {
    pub coefficient: f64,
    #[serde(with = "ext_f64")]
    pub distance: f64,
    /// Absolute error bound on `coefficient`; zero for closed forms.
    pub error_estimate: f64,
}

impl DivergenceValue {
    pub fn from_coefficient(coefficient: f64) -> Self {
        Self::with_error(coefficient, 0.0)
    }

    pub fn with_error(coefficient: f64, error_estimate: f64) -> Self {
        DivergenceValue {
            coefficient,
            distance: distance_from_coefficient(coefficient),
            error_estimate,
        }
    }

    /// Builds the value from a distance, the direction used by closed forms.
    pub fn from_distance(distance: f64) -> Self {
        DivergenceValue {
            coefficient: (-distance).exp(),
            distance,
            error_estimate: 0.0,
        }
    }
}

/// `−ln ρ`, with `+∞` at zero and quadrature overshoot above one clipped to 0.
pub fn distance_from_coefficient(rho: f64) -> f64 {
    if rho <= 0.0 {
        f64::INFINITY
    } else {
        (-rho.ln()).max(0.0)
    }
}

fn aligned(p: &DiscreteDist, q: &DiscreteDist) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    Ok(())
}

fn coefficient_raw(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a * b).sqrt()).sum::<f64>().min(1.0)
}

pub fn bc_coefficient_discrete(p: &DiscreteDist, q: &DiscreteDist) -> Result<DivergenceValue> {
    aligned(p, q)?;
    Ok(DivergenceValue::from_coefficient(coefficient_raw(p.probs(), q.probs())))
}

/// `√(1 − ρ)`, a metric on distributions.
pub fn modified_metric(rho: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::DomainError(format!("coefficient {rho} outside [0, 1]")));
    }
    Ok((1.0 - rho).sqrt())
}

/// Hellinger (Matusita) distance `2 − 2ρ`.
pub fn hellinger_discrete(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64> {
    Ok(2.0 - 2.0 * bc_coefficient_discrete(p, q)?.coefficient)
}

/// `½ Σ (p_i − q_i)² / (p_i + q_i)`; empty bins contribute nothing.
pub fn chi_squared_discrete(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64> {
    aligned(p, q)?;
    let s: f64 = p
        .probs()
        .iter()
        .zip(q.probs())
        .filter(|(a, b)| *a + *b > 0.0)
        .map(|(a, b)| (a - b).powi(2) / (a + b))
        .sum();
    Ok(0.5 * s)
}

/// Kullback–Leibler divergence of `q` from `p`, in nats.
pub fn kl_discrete(p: &DiscreteDist, q: &DiscreteDist) -> Result<f64> {
    aligned(p, q)?;
    let mut s = 0.0;
    for (&a, &b) in p.probs().iter().zip(q.probs()) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Ok(f64::INFINITY);
        }
        s += a * (a / b).ln();
    }
    Ok(s.max(0.0))
}

/// `Σ_i (Π_j p_{j,i})^{1/M}` over M aligned distributions.
pub fn multi_population_coefficient(dists: &[DiscreteDist]) -> Result<f64> {
    if dists.len() < 2 {
        return Err(Error::DomainError(format!(
            "need at least two populations, got {}",
            dists.len()
        )));
    }
    for d in &dists[1..] {
        aligned(&dists[0], d)?;
    }
    if dists.len() == 2 {
        return Ok(coefficient_raw(dists[0].probs(), dists[1].probs()));
    }
    let inv_m = 1.0 / dists.len() as f64;
    let s: f64 = (0..dists[0].len())
        .map(|i| {
            let prod: f64 = dists.iter().map(|d| d.probs()[i]).product();
            prod.powf(inv_m)
        })
        .sum();
    Ok(s.min(1.0))
}

/// Plug-in estimate from category counts, using the frequency estimates
/// `m_i / m` of each sample.
pub fn sample_coefficient(counts_p: &[u64], counts_q: &[u64]) -> Result<f64> {
    if counts_p.len() != counts_q.len() {
        return Err(Error::DimensionMismatch {
            expected: counts_p.len(),
            found: counts_q.len(),
        });
    }
    let mp: u64 = counts_p.iter().sum();
    let mq: u64 = counts_q.iter().sum();
    if mp == 0 || mq == 0 {
        return Err(Error::EmptySample);
    }
    let (mp, mq) = (mp as f64, mq as f64);
    let s: f64 = counts_p
        .iter()
        .zip(counts_q)
        .map(|(&a, &b)| ((a as f64 / mp) * (b as f64 / mq)).sqrt())
        .sum();
    Ok(s.min(1.0))
}

/// `∫ √(f g)` over `(lo, hi)` by adaptive quadrature, after checking that
/// both densities carry unit mass within [`DENSITY_MASS_TOL`].
pub fn bc_coefficient_continuous<F, G>(f: F, g: G, lo: f64, hi: f64, cfg: &QuadConfig) -> Result<DivergenceValue>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let negative = Cell::new(None);
    let check = |x: f64, v: f64| {
        if v < 0.0 || v.is_nan() {
            negative.set(Some(x));
            0.0
        } else {
            v
        }
    };
    for h in [&f as &dyn Fn(f64) -> f64, &g] {
        let mass = integrate_1d(|x| check(x, h(x)), lo, hi, cfg)?;
        if let Some(x) = negative.get() {
            return Err(Error::DomainError(format!("density is negative or NaN at {x}")));
        }
        if (mass.value - 1.0).abs() > DENSITY_MASS_TOL {
            return Err(Error::NotADensity { mass: mass.value });
        }
    }
    let r = integrate_1d(|x| (check(x, f(x)) * check(x, g(x))).sqrt(), lo, hi, cfg)?;
    Ok(DivergenceValue::with_error(r.value.max(0.0), r.error_estimate))
}
