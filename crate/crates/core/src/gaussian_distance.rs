//! Closed-form Bhattacharyya distances between normal distributions,
//! truncated or not.
//!
//! For two truncated normals the geometric mean of the densities is, on the
//! common support, a rescaled normal density with mean `m` and covariance
//! `2S = Σp Σ̄⁻¹ Σq`. The truncated distance is therefore the untruncated one
//! plus log-normalizer corrections:
//!
//! `D_T = D_N + ½ ln P_p + ½ ln P_q − ln P_overlap`
//!
//! where `P_p`, `P_q` are the truncation masses and `P_overlap` is the mass of
//! `N(m, 2S)` on `[max(a, c), min(b, d)]`. The lower overlap bound is the
//! larger of the two lower truncation points; the smaller one would count
//! mass where one of the densities vanishes.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::divergence::{bc_coefficient_discrete, DivergenceValue};
use crate::error::{Error, Result};
use crate::linalg::{log_det_spd, spd_inverse, spd_solve, symmetrize};
use crate::quadrature::{mvn_rect_prob, std_normal_interval, QuadConfig};
use crate::types::{Distribution, GaussianMulti, GaussianUni, MvnOverlapParams, OverlapParams, TruncGaussianMulti, TruncGaussianUni};

pub fn bc_normal_uni(p: &GaussianUni, q: &GaussianUni) -> DivergenceValue {
    DivergenceValue::from_distance(distance_normal_uni(p, q))
}

fn distance_normal_uni(p: &GaussianUni, q: &GaussianUni) -> f64 {
    let (vp, vq) = (p.sigma2(), q.sigma2());
    let ratio = vp / vq + vq / vp;
    let dm = p.mu() - q.mu();
    0.25 * (0.25 * (ratio + 2.0)).ln() + 0.25 * dm * dm / (vp + vq)
}

pub fn bc_mvn(p: &GaussianMulti, q: &GaussianMulti) -> Result<DivergenceValue> {
    Ok(DivergenceValue::from_distance(distance_mvn(p, q)?))
}

fn check_dims(p: usize, q: usize) -> Result<()> {
    if p != q {
        return Err(Error::DimensionMismatch { expected: p, found: q });
    }
    Ok(())
}

fn distance_mvn(p: &GaussianMulti, q: &GaussianMulti) -> Result<f64> {
    check_dims(p.dim(), q.dim())?;
    let sigma_bar = (p.cov() + q.cov()) * 0.5;
    let ld_bar = log_det_spd(&sigma_bar, "average covariance")?;
    let ld_p = log_det_spd(p.cov(), "first covariance")?;
    let ld_q = log_det_spd(q.cov(), "second covariance")?;
    let dm = p.mu() - q.mu();
    let x = spd_solve(&sigma_bar, &dm, "average covariance")?;
    let quad = dm.dot(&x).max(0.0);
    Ok(0.125 * quad + 0.5 * (ld_bar - 0.5 * (ld_p + ld_q)))
}

/// Overlap interval and mixture parameters; `None` when the supports do not
/// overlap.
pub fn overlap_params_uni(p: &TruncGaussianUni, q: &TruncGaussianUni) -> Option<OverlapParams> {
    let l = p.lower().max(q.lower());
    let u = p.upper().min(q.upper());
    if !(l < u) {
        return None;
    }
    let (vp, vq) = (p.sigma2(), q.sigma2());
    let nu = (p.mu() * vq + q.mu() * vp) / (vp + vq);
    let varsigma = (2.0 * vp * vq / (vp + vq)).sqrt();
    Some(OverlapParams { l, u, nu, varsigma })
}

/// `P_overlap` for two univariate truncated normals.
fn overlap_mass(o: &OverlapParams) -> f64 {
    std_normal_interval((o.l - o.nu) / o.varsigma, (o.u - o.nu) / o.varsigma)
}

pub fn bc_truncated_uni(p: &TruncGaussianUni, q: &TruncGaussianUni) -> DivergenceValue {
    let Some(o) = overlap_params_uni(p, q) else {
        return DivergenceValue::from_coefficient(0.0);
    };
    let po = overlap_mass(&o);
    if po <= 0.0 {
        return DivergenceValue::from_coefficient(0.0);
    }
    let d = distance_normal_uni(p.base(), q.base()) + 0.5 * (p.mass().ln() + q.mass().ln()) - po.ln();
    DivergenceValue::from_distance(d.max(0.0))
}

/// Multivariate overlap box and mixture parameters; `None` when some
/// coordinate has an empty overlap.
pub fn overlap_params_mvn(p: &TruncGaussianMulti, q: &TruncGaussianMulti) -> Result<Option<MvnOverlapParams>> {
    check_dims(p.dim(), q.dim())?;
    let l: Vec<f64> = p.lower().iter().zip(q.lower()).map(|(a, c)| a.max(*c)).collect();
    let u: Vec<f64> = p.upper().iter().zip(q.upper()).map(|(b, d)| b.min(*d)).collect();
    if l.iter().zip(&u).any(|(lo, hi)| !(lo < hi)) {
        return Ok(None);
    }
    let (bp, bq) = (p.base(), q.base());
    let ip = spd_inverse(bp.cov(), "first covariance")?;
    let iq = spd_inverse(bq.cov(), "second covariance")?;
    let s = spd_inverse(&(&ip + &iq), "precision sum")?;
    let m: DVector<f64> = &s * (&ip * bp.mu() + &iq * bq.mu());
    let dm = bp.mu() - bq.mu();
    let big_m = dm.dot(&spd_solve(&(bp.cov() + bq.cov()), &dm, "covariance sum")?).max(0.0);
    let sigma_bar = (bp.cov() + bq.cov()) * 0.5;
    Ok(Some(MvnOverlapParams {
        l,
        u,
        m,
        s,
        big_m,
        sigma_bar,
    }))
}

/// The three box probabilities entering the truncated multivariate form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxMasses {
    pub p: f64,
    pub q: f64,
    pub overlap: f64,
    /// Combined absolute error on `ln √(P_p P_q) − ln P_overlap`.
    pub log_error: f64,
}

fn box_masses(p: &TruncGaussianMulti, q: &TruncGaussianMulti, o: &MvnOverlapParams, cfg: &QuadConfig) -> Result<BoxMasses> {
    let rp = mvn_rect_prob(p.base(), p.lower(), p.upper(), cfg)?;
    let rq = mvn_rect_prob(q.base(), q.lower(), q.upper(), cfg)?;
    let mix_cov = symmetrize(&(&o.s * 2.0));
    let mix = GaussianMulti::new(o.m.clone(), mix_cov).map_err(Error::from)?;
    let ro = mvn_rect_prob(&mix, &o.l, &o.u, cfg)?;
    let rel = |v: f64, e: f64| if v > 0.0 { e / v } else { f64::INFINITY };
    let log_error = 0.5 * rel(rp.value, rp.error_estimate) + 0.5 * rel(rq.value, rq.error_estimate) + rel(ro.value, ro.error_estimate);
    Ok(BoxMasses {
        p: rp.value,
        q: rq.value,
        overlap: ro.value,
        log_error,
    })
}

/// Truncated multivariate normal distance. The coefficient error estimate
/// propagates the quadrature errors of the three box probabilities.
pub fn bc_truncated_mvn(p: &TruncGaussianMulti, q: &TruncGaussianMulti, cfg: &QuadConfig) -> Result<DivergenceValue> {
    let Some(o) = overlap_params_mvn(p, q)? else {
        return Ok(DivergenceValue::from_coefficient(0.0));
    };
    let dn = distance_mvn(p.base(), q.base())?;
    let masses = box_masses(p, q, &o, cfg)?;
    if masses.overlap <= 0.0 {
        return Ok(DivergenceValue::from_coefficient(0.0));
    }
    let d = (dn + 0.5 * (masses.p.ln() + masses.q.ln()) - masses.overlap.ln()).max(0.0);
    let rho = (-d).exp();
    Ok(DivergenceValue {
        coefficient: rho,
        distance: d,
        error_estimate: rho * masses.log_error,
    })
}

/// Both sides of the truncation condition `√(P_p P_q) ≥ P_overlap`, which is
/// equivalent to the truncated distance being at least the untruncated one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncationCondition {
    /// `√(P_p P_q)`.
    pub normalizer_side: f64,
    /// `P_overlap`.
    pub overlap_side: f64,
    pub holds: bool,
    pub truncated_distance: f64,
    pub untruncated_distance: f64,
}

pub fn truncation_inequality_holds_uni(p: &TruncGaussianUni, q: &TruncGaussianUni) -> Result<TruncationCondition> {
    let o = overlap_params_uni(p, q)
        .ok_or_else(|| Error::DomainError("truncation supports do not overlap".into()))?;
    let lhs = (p.mass() * q.mass()).sqrt();
    let rhs = overlap_mass(&o);
    Ok(TruncationCondition {
        normalizer_side: lhs,
        overlap_side: rhs,
        holds: lhs >= rhs,
        truncated_distance: bc_truncated_uni(p, q).distance,
        untruncated_distance: distance_normal_uni(p.base(), q.base()),
    })
}

pub fn truncation_inequality_holds_mvn(
    p: &TruncGaussianMulti,
    q: &TruncGaussianMulti,
    cfg: &QuadConfig,
) -> Result<TruncationCondition> {
    let o = overlap_params_mvn(p, q)?
        .ok_or_else(|| Error::DomainError("truncation boxes do not overlap".into()))?;
    let masses = box_masses(p, q, &o, cfg)?;
    let dn = distance_mvn(p.base(), q.base())?;
    let lhs = (masses.p * masses.q).sqrt();
    let dt = (dn + 0.5 * (masses.p.ln() + masses.q.ln()) - masses.overlap.ln()).max(0.0);
    Ok(TruncationCondition {
        normalizer_side: lhs,
        overlap_side: masses.overlap,
        holds: lhs >= masses.overlap,
        truncated_distance: dt,
        untruncated_distance: dn,
    })
}

/// `Σp Σ̄⁻¹ Σq`, the covariance of the normalized geometric-mean density.
pub fn mixture_covariance(p: &GaussianMulti, q: &GaussianMulti) -> Result<DMatrix<f64>> {
    check_dims(p.dim(), q.dim())?;
    let sigma_bar = (p.cov() + q.cov()) * 0.5;
    let inv = spd_inverse(&sigma_bar, "average covariance")?;
    Ok(symmetrize(&(p.cov() * inv * q.cov())))
}

/// Distance between two supported distributions of compatible kinds. An
/// untruncated normal meets a truncated one as a truncation to the whole
/// space.
pub fn bc_between(p: &Distribution, q: &Distribution, cfg: &QuadConfig) -> Result<DivergenceValue> {
    use Distribution::*;
    let whole = |g: &GaussianMulti| {
        let k = g.dim();
        TruncGaussianMulti::new(g.clone(), vec![f64::NEG_INFINITY; k], vec![f64::INFINITY; k])
    };
    match (p, q) {
        (Discrete(a), Discrete(b)) => bc_coefficient_discrete(a, b),
        (Normal(a), Normal(b)) => Ok(bc_normal_uni(a, b)),
        (Mvn(a), Mvn(b)) => bc_mvn(a, b),
        (TruncatedNormal(a), TruncatedNormal(b)) => Ok(bc_truncated_uni(a, b)),
        (Normal(a), TruncatedNormal(b)) => Ok(bc_truncated_uni(&TruncGaussianUni::untruncated(*a), b)),
        (TruncatedNormal(a), Normal(b)) => Ok(bc_truncated_uni(a, &TruncGaussianUni::untruncated(*b))),
        (TruncatedMvn(a), TruncatedMvn(b)) => bc_truncated_mvn(a, b, cfg),
        (Mvn(a), TruncatedMvn(b)) => bc_truncated_mvn(&whole(a)?, b, cfg),
        (TruncatedMvn(a), Mvn(b)) => bc_truncated_mvn(a, &whole(b)?, cfg),
        _ => Err(Error::DomainError("distributions of incompatible kinds".into())),
    }
}
