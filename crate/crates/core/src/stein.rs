//! Numerical checks of the generalized Stein identity, the
//! distance–covariance relation and the asset-pricing decomposition.
//!
//! For a joint density `f(t, u)` on a rectangle and `h` with `E[h(Y)] = μ_Y`,
//!
//! `G(r, u) = f(r, u)·g(r, u) = [h(u) − μ_Y] ∫_r^b f(t, u) dt`
//!
//! and `Cov[c(X), h(Y)] = ∫∫ c'(r) G(r, u) dr du`. All integrals are nested
//! adaptive Gauss–Kronrod rules over the (clipped) support.

use std::cell::Cell;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_1d, integrate_2d, QuadConfig, Rect};

pub type Density1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Density2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Below this the joint density is treated as zero and `g` is undefined.
pub const DENSITY_FLOOR: f64 = 1e-300;

/// Tolerance for the marginal spot checks and the `E[h(Y)] = μ_Y` check.
pub const CONSISTENCY_TOL: f64 = 1e-4;

/// Joint density of `(X, Y)` with its marginals on `support`
/// (`x0..x1` for X, `y0..y1` for Y).
#[derive(Clone)]
pub struct JointDensitySpec {
    pub f_xy: Density2,
    pub f_x: Density1,
    pub f_y: Density1,
    pub support: Rect,
    pub mu_x: f64,
    pub mu_y: f64,
}

impl std::fmt::Debug for JointDensitySpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("JointDensitySpec")
            .field("support", &self.support)
            .field("mu_x", &self.mu_x)
            .field("mu_y", &self.mu_y)
            .finish_non_exhaustive()
    }
}

/// Bivariate normal parameters, the serializable form used by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariateNormal {
    pub mu_x: f64,
    pub mu_y: f64,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub rho: f64,
}

impl BivariateNormal {
    pub fn standard(rho: f64) -> Self {
        BivariateNormal {
            mu_x: 0.0,
            mu_y: 0.0,
            sigma_x: 1.0,
            sigma_y: 1.0,
            rho,
        }
    }

    pub fn covariance(&self) -> f64 {
        self.rho * self.sigma_x * self.sigma_y
    }

    /// Joint spec clipped to `μ ± 10σ` in each coordinate.
    pub fn spec(&self) -> Result<JointDensitySpec> {
        let BivariateNormal {
            mu_x,
            mu_y,
            sigma_x: sx,
            sigma_y: sy,
            rho,
        } = *self;
        if !(sx > 0.0 && sy > 0.0) || !(rho > -1.0 && rho < 1.0) || !mu_x.is_finite() || !mu_y.is_finite() {
            return Err(Error::DomainError(format!("invalid bivariate normal {self:?}")));
        }
        let one_m = 1.0 - rho * rho;
        let norm = 1.0 / (2.0 * PI * sx * sy * one_m.sqrt());
        let f_xy: Density2 = Arc::new(move |t, u| {
            let (a, b) = ((t - mu_x) / sx, (u - mu_y) / sy);
            norm * (-(a * a - 2.0 * rho * a * b + b * b) / (2.0 * one_m)).exp()
        });
        let f_x: Density1 = Arc::new(move |t| normal_pdf(t, mu_x, sx));
        let f_y: Density1 = Arc::new(move |u| normal_pdf(u, mu_y, sy));
        let support = Rect::new(mu_x - 10.0 * sx, mu_x + 10.0 * sx, mu_y - 10.0 * sy, mu_y + 10.0 * sy);
        JointDensitySpec::new(f_xy, f_x, f_y, support, mu_x, mu_y)
    }
}

fn normal_pdf(x: f64, mu: f64, s: f64) -> f64 {
    let z = (x - mu) / s;
    (-0.5 * z * z).exp() / (s * (2.0 * PI).sqrt())
}

impl JointDensitySpec {
    /// Builds the spec after spot-checking both marginals against the joint
    /// at 16 points.
    pub fn new(f_xy: Density2, f_x: Density1, f_y: Density1, support: Rect, mu_x: f64, mu_y: f64) -> Result<Self> {
        if !support.is_finite() || support.x0 >= support.x1 || support.y0 >= support.y1 {
            return Err(Error::DomainError(format!("invalid support {support:?}")));
        }
        let spec = JointDensitySpec {
            f_xy,
            f_x,
            f_y,
            support,
            mu_x,
            mu_y,
        };
        spec.check_marginals(&QuadConfig::default())?;
        Ok(spec)
    }

    /// Independent joint density `f_X(t) f_Y(u)`.
    pub fn independent(f_x: Density1, f_y: Density1, support: Rect, mu_x: f64, mu_y: f64) -> Result<Self> {
        let (fx, fy) = (f_x.clone(), f_y.clone());
        let f_xy: Density2 = Arc::new(move |t, u| fx(t) * fy(u));
        JointDensitySpec::new(f_xy, f_x, f_y, support, mu_x, mu_y)
    }

    fn check_marginals(&self, cfg: &QuadConfig) -> Result<()> {
        let s = self.support;
        for i in 0..8 {
            let w = (i as f64 + 0.5) / 8.0;
            let t = s.x0 + w * (s.x1 - s.x0);
            let u = s.y0 + w * (s.y1 - s.y0);
            let mx = integrate_1d(|v| (self.f_xy)(t, v), s.y0, s.y1, cfg)?.value;
            let my = integrate_1d(|v| (self.f_xy)(v, u), s.x0, s.x1, cfg)?.value;
            if (self.f_xy)(t, u) < 0.0 {
                return Err(Error::DomainError(format!("joint density negative at ({t}, {u})")));
            }
            if (mx - (self.f_x)(t)).abs() > CONSISTENCY_TOL {
                return Err(Error::DomainError(format!(
                    "X marginal disagrees with the joint at {t}: {} vs {mx}",
                    (self.f_x)(t)
                )));
            }
            if (my - (self.f_y)(u)).abs() > CONSISTENCY_TOL {
                return Err(Error::DomainError(format!(
                    "Y marginal disagrees with the joint at {u}: {} vs {my}",
                    (self.f_y)(u)
                )));
            }
        }
        Ok(())
    }

    /// Joint mass outside the clipped support.
    pub fn clipping_mass(&self, cfg: &QuadConfig) -> Result<f64> {
        Ok((1.0 - integrate_2d(|t, u| (self.f_xy)(t, u), self.support, cfg)?.value).abs())
    }
}

/// Both sides of an identity with their difference and error budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub combined_error: f64,
}

impl IdentityReport {
    pub fn new(lhs: f64, rhs: f64, combined_error: f64) -> Self {
        IdentityReport {
            lhs,
            rhs,
            residual: (lhs - rhs).abs(),
            combined_error,
        }
    }

    /// `residual ≤ max(floor, 3 × combined_error)`.
    pub fn holds(&self, floor: f64) -> bool {
        self.residual <= floor.max(3.0 * self.combined_error)
    }
}

/// Value plus error bound of one integral.
#[derive(Debug, Clone, Copy)]
struct Est {
    value: f64,
    error: f64,
}

/// Records the largest weighted error of integrals evaluated inside another
/// integrand.
#[derive(Default)]
struct Inner {
    max_error: Cell<f64>,
    failure: Cell<Option<f64>>,
}

impl Inner {
    fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, weight: f64, cfg: &QuadConfig) -> f64 {
        match integrate_1d(f, a, b, cfg) {
            Ok(r) => {
                self.max_error.set(self.max_error.get().max(weight.abs() * r.error_estimate));
                r.value
            }
            Err(Error::NonConvergence { error, .. }) => {
                self.failure.set(Some(error));
                f64::NAN
            }
            Err(_) => {
                self.failure.set(Some(f64::INFINITY));
                f64::NAN
            }
        }
    }

    fn check(&self, what: &'static str) -> Result<()> {
        match self.failure.get() {
            Some(error) => Err(Error::NonConvergence {
                what,
                error,
                evaluations: 0,
            }),
            None => Ok(()),
        }
    }
}

fn double<F: Fn(f64, f64) -> f64>(f: F, s: Rect, cfg: &QuadConfig) -> Result<Est> {
    let r = integrate_2d(f, s, cfg)?;
    if !r.value.is_finite() {
        return Err(Error::NonConvergence {
            what: "double integral",
            error: f64::INFINITY,
            evaluations: r.evaluations,
        });
    }
    Ok(Est {
        value: r.value,
        error: r.error_estimate,
    })
}

fn single<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<Est> {
    let r = integrate_1d(f, a, b, cfg)?;
    Ok(Est {
        value: r.value,
        error: r.error_estimate,
    })
}

/// `E[h(Y)]` from the Y marginal.
fn mean_of<H: Fn(f64) -> f64>(spec: &JointDensitySpec, h: &H, cfg: &QuadConfig) -> Result<Est> {
    single(|u| h(u) * (spec.f_y)(u), spec.support.y0, spec.support.y1, cfg)
}

fn check_mean<H: Fn(f64) -> f64>(spec: &JointDensitySpec, h: &H, cfg: &QuadConfig) -> Result<()> {
    let m = mean_of(spec, h, cfg)?.value;
    if (m - spec.mu_y).abs() > CONSISTENCY_TOL {
        return Err(Error::DomainError(format!(
            "E[h(Y)] = {m} differs from mu_y = {}",
            spec.mu_y
        )));
    }
    Ok(())
}

fn density_at(spec: &JointDensitySpec, r: f64, u: f64) -> Result<f64> {
    let f = (spec.f_xy)(r, u);
    if !(f > DENSITY_FLOOR) {
        return Err(Error::DensityUnderflow { t: r, u });
    }
    Ok(f)
}

/// `g(r, u)` from the upper-integral form `∫_r^b [h(u) − μ_Y] f(t, u) dt / f(r, u)`.
pub fn g_from_joint<H: Fn(f64) -> f64>(spec: &JointDensitySpec, h: &H, r: f64, u: f64, cfg: &QuadConfig) -> Result<f64> {
    check_mean(spec, h, cfg)?;
    let f = density_at(spec, r, u)?;
    let tail = integrate_1d(|t| (spec.f_xy)(t, u), r, spec.support.x1, cfg)?.value;
    Ok((h(u) - spec.mu_y) * tail / f)
}

/// `g(r, u)` from the lower-integral form `∫_a^r [μ_Y − h(u)] f(t, u) dt / f(r, u)`.
///
/// It differs from [`g_from_joint`] by `[h(u) − μ_Y] f_Y(u) / f(r, u)`; the two
/// agree after integration against `c'(r) f(r, u)` because `E[h(Y)] = μ_Y`.
pub fn g_from_joint_lower<H: Fn(f64) -> f64>(spec: &JointDensitySpec, h: &H, r: f64, u: f64, cfg: &QuadConfig) -> Result<f64> {
    check_mean(spec, h, cfg)?;
    let f = density_at(spec, r, u)?;
    let head = integrate_1d(|t| (spec.f_xy)(t, u), spec.support.x0, r, cfg)?.value;
    Ok((spec.mu_y - h(u)) * head / f)
}

/// Univariate `g(r) = ∫_r^b [h(t) − μ] f(t) dt / f(r)`.
pub fn g_univariate<F: Fn(f64) -> f64, H: Fn(f64) -> f64>(f: F, h: H, mu: f64, r: f64, b: f64, cfg: &QuadConfig) -> Result<f64> {
    let fr = f(r);
    if !(fr > DENSITY_FLOOR) {
        return Err(Error::DensityUnderflow { t: r, u: r });
    }
    Ok(integrate_1d(|t| (h(t) - mu) * f(t), r, b, cfg)?.value / fr)
}

/// `∫∫ c'(r) G(r, u) dr du` with `G` evaluated by an inner quadrature.
fn stein_pointwise<C: Fn(f64) -> f64, H: Fn(f64) -> f64>(spec: &JointDensitySpec, c_prime: &C, h: &H, mu: f64, cfg: &QuadConfig) -> Result<Est> {
    let s = spec.support;
    let inner = Inner::default();
    let out = double(
        |r, u| {
            let cp = c_prime(r);
            let dh = h(u) - mu;
            if cp == 0.0 || dh == 0.0 {
                return 0.0;
            }
            cp * dh * inner.integrate(|t| (spec.f_xy)(t, u), r, s.x1, cp * dh, cfg)
        },
        s,
        cfg,
    )?;
    inner.check("stein rhs")?;
    Ok(Est {
        value: out.value,
        error: out.error + inner.max_error.get() * s.area(),
    })
}

/// The same integral after interchanging the order:
/// `∫∫ [h(u) − μ] f(t, u) ∫_a^t c'(r) dr dt du`.
fn stein_interchanged<C: Fn(f64) -> f64, H: Fn(f64) -> f64>(spec: &JointDensitySpec, c_prime: &C, h: &H, mu: f64, cfg: &QuadConfig) -> Result<Est> {
    let s = spec.support;
    let inner = Inner::default();
    let out = double(
        |t, u| {
            let w = (h(u) - mu) * (spec.f_xy)(t, u);
            if w == 0.0 {
                return 0.0;
            }
            w * inner.integrate(c_prime, s.x0, t, w, cfg)
        },
        s,
        cfg,
    )?;
    inner.check("stein interchanged rhs")?;
    Ok(Est {
        value: out.value,
        error: out.error + inner.max_error.get() * s.area(),
    })
}

/// `Cov[a(X), b(Y)]` under the joint density, centered on the joint mean of `b`.
fn covariance<A: Fn(f64) -> f64, B: Fn(f64) -> f64>(spec: &JointDensitySpec, a: &A, b: &B, cfg: &QuadConfig) -> Result<Est> {
    let s = spec.support;
    let eb = double(|t, u| b(u) * (spec.f_xy)(t, u), s, cfg)?;
    let cov = double(|t, u| a(t) * (b(u) - eb.value) * (spec.f_xy)(t, u), s, cfg)?;
    let abs_a = double(|t, u| a(t).abs() * (spec.f_xy)(t, u), s, cfg)?;
    Ok(Est {
        value: cov.value,
        error: cov.error + eb.error * abs_a.value,
    })
}

/// Integration-by-parts boundary terms at the clipped X edges.
fn check_boundary<C: Fn(f64) -> f64, H: Fn(f64) -> f64>(spec: &JointDensitySpec, c: &C, h: &H, mu: f64) -> Result<()> {
    let s = spec.support;
    let width = (s.x1 - s.x0) * (s.y1 - s.y0);
    for &t in &[s.x0, s.x1] {
        for i in 0..=16 {
            let u = s.y0 + (s.y1 - s.y0) * i as f64 / 16.0;
            let term = c(t).abs() * (h(u) - mu).abs() * (spec.f_xy)(t, u) * width;
            if !(term <= 1e-8) {
                return Err(Error::BoundaryConditionViolated(format!(
                    "boundary term {term:e} at ({t}, {u}) exceeds 1e-8"
                )));
            }
        }
    }
    Ok(())
}

/// Stein identity check: the pointwise route and the interchanged route.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteinReport {
    /// `Cov[c(X), h(Y)]` against `E[c'(X) g(X, Y)]`.
    pub identity: IdentityReport,
    /// Pointwise route against the interchanged route of the right side.
    pub fubini: IdentityReport,
}

pub fn verify_stein<C, D, H>(spec: &JointDensitySpec, c: C, c_prime: D, h: H, cfg: &QuadConfig) -> Result<SteinReport>
where
    C: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    check_mean(spec, &h, cfg)?;
    check_boundary(spec, &c, &h, spec.mu_y)?;
    let lhs = covariance(spec, &c, &h, cfg)?;
    let rhs = stein_pointwise(spec, &c_prime, &h, spec.mu_y, cfg)?;
    let alt = stein_interchanged(spec, &c_prime, &h, spec.mu_y, cfg)?;
    Ok(SteinReport {
        identity: IdentityReport::new(lhs.value, rhs.value, lhs.error + rhs.error),
        fubini: IdentityReport::new(rhs.value, alt.value, rhs.error + alt.error),
    })
}

/// `√(f_Y(t) / f_X(t))`.
fn density_ratio_root(spec: &JointDensitySpec, t: f64) -> f64 {
    let fx = (spec.f_x)(t);
    if !(fx > DENSITY_FLOOR) {
        return f64::NAN;
    }
    ((spec.f_y)(t) / fx).sqrt()
}

/// `∫ √(f_X f_Y)` over the X support, where both closures are evaluated
/// directly so the value matches `E[√(f_Y/f_X)(X)]`.
fn overlap_coefficient(spec: &JointDensitySpec, cfg: &QuadConfig) -> Result<Est> {
    let s = spec.support;
    for i in 0..=32 {
        let t = s.x0 + (s.x1 - s.x0) * i as f64 / 32.0;
        if !((spec.f_x)(t) > DENSITY_FLOOR) {
            return Err(Error::DensityUnderflow { t, u: f64::NAN });
        }
    }
    let negative = Cell::new(false);
    let r = single(
        |t| {
            let p = (spec.f_x)(t) * (spec.f_y)(t);
            if p < 0.0 {
                negative.set(true);
                return 0.0;
            }
            p.sqrt()
        },
        s.x0,
        s.x1,
        cfg,
    )?;
    if negative.get() {
        return Err(Error::DomainError("negative marginal density".into()));
    }
    Ok(r)
}

/// Five-point central difference.
fn derivative<F: Fn(f64) -> f64>(f: &F, t: f64) -> f64 {
    let d = 1e-3 * t.abs().max(1.0);
    (-f(t + 2.0 * d) + 8.0 * f(t + d) - 8.0 * f(t - d) + f(t - 2.0 * d)) / (12.0 * d)
}

/// Both equations of the distance–covariance relation for
/// `c(t) = t − √(f_Y(t)/f_X(t))`, in the `h(Y)` form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BridgeReport {
    /// Bhattacharyya coefficient of the two marginals.
    pub rho: f64,
    /// `Cov[c(X), h(Y)]` against `Cov(X, h(Y)) − E[√(f_Y/f_X)(X) h(Y)] + E[h(Y)] ρ`.
    pub first: IdentityReport,
    /// `Cov(X, h(Y)) + E[h(Y)] ρ` against `E[c'(X) g(X, Y)] + E[√(f_Y/f_X)(X) h(Y)]`.
    pub second: IdentityReport,
}

/// Distance–covariance relation with `h(u) = u`.
pub fn verify_distance_covariance(spec: &JointDensitySpec, cfg: &QuadConfig) -> Result<BridgeReport> {
    verify_distance_covariance_with(spec, |u| u, cfg)
}

/// Distance–covariance relation with a general `h`.
pub fn verify_distance_covariance_with<H: Fn(f64) -> f64>(spec: &JointDensitySpec, h: H, cfg: &QuadConfig) -> Result<BridgeReport> {
    let s = spec.support;
    let rho = overlap_coefficient(spec, cfg)?;
    let root = |t: f64| density_ratio_root(spec, t);
    let c = |t: f64| t - root(t);
    let c_prime = |t: f64| 1.0 - derivative(&root, t);
    let mh = mean_of(spec, &h, cfg)?;

    let cov_c = covariance(spec, &c, &h, cfg)?;
    let cov_x = covariance(spec, &|t| t, &h, cfg)?;
    let root_h = double(|t, u| root(t) * h(u) * (spec.f_xy)(t, u), s, cfg)?;
    let stein = stein_pointwise(spec, &c_prime, &h, mh.value, cfg)?;
    if !(cov_c.value.is_finite() && root_h.value.is_finite() && stein.value.is_finite()) {
        return Err(Error::DensityUnderflow { t: f64::NAN, u: f64::NAN });
    }
    let rho_term_err = mh.value.abs() * rho.error + mh.error * rho.value;
    let first_rhs = cov_x.value - root_h.value + mh.value * rho.value;
    let first = IdentityReport::new(cov_c.value, first_rhs, cov_c.error + cov_x.error + root_h.error + rho_term_err);
    let second_lhs = cov_x.value + mh.value * rho.value;
    let second_rhs = stein.value + root_h.value;
    let second = IdentityReport::new(second_lhs, second_rhs, cov_x.error + rho_term_err + stein.error + root_h.error);
    Ok(BridgeReport {
        rho: rho.value,
        first,
        second,
    })
}

/// The four terms of the price under `c(f) = f − √(f_x(f)/f_f(f))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestrictedPricing {
    /// `E[c(f)] E(x)`.
    pub mean_product: f64,
    /// `Cov(f, x)`.
    pub covariance: f64,
    /// `μ_x ρ(f_f, f_x)`.
    pub overlap: f64,
    /// `−E[√(f_x(f)/f_f(f)) x]`.
    pub ratio_term: f64,
    pub total: f64,
    /// `E[c(f) x]` evaluated directly.
    pub direct: f64,
    pub combined_error: f64,
}

/// Price routes for the payoff `x` (Y coordinate) and factor `f` (X coordinate).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PricingReport {
    /// `E[c(f) x]`.
    pub direct: f64,
    /// `E[c(f)] E(x) + Cov[c(f), x]`.
    pub covariance_route: f64,
    /// `E[c(f)] E(x) + E[c'(f) g(f, x)]`.
    pub stein_route: f64,
    pub mean_c: f64,
    pub mean_x: f64,
    /// Largest pairwise difference between the three routes.
    pub max_residual: f64,
    pub combined_error: f64,
    /// Present when `f_f > 0` on the support so the restricted factor exists.
    pub restricted: Option<RestrictedPricing>,
}

pub fn price_asset<C: Fn(f64) -> f64, D: Fn(f64) -> f64>(spec: &JointDensitySpec, c: C, c_prime: D, cfg: &QuadConfig) -> Result<PricingReport> {
    let s = spec.support;
    let id = |u: f64| u;
    let ec = single(|t| c(t) * (spec.f_x)(t), s.x0, s.x1, cfg)?;
    let ex = mean_of(spec, &id, cfg)?;
    check_boundary(spec, &c, &id, ex.value)?;
    let direct = double(|t, u| c(t) * u * (spec.f_xy)(t, u), s, cfg)?;
    let cov = covariance(spec, &c, &id, cfg)?;
    let stein = stein_pointwise(spec, &c_prime, &id, ex.value, cfg)?;
    let base = ec.value * ex.value;
    let base_err = ec.error * ex.value.abs() + ex.error * ec.value.abs();
    let p2 = base + cov.value;
    let p3 = base + stein.value;
    let routes = [direct.value, p2, p3];
    let max_residual = routes
        .iter()
        .flat_map(|a| routes.iter().map(move |b| (a - b).abs()))
        .fold(0.0, f64::max);
    let combined_error = direct.error + cov.error + stein.error + 2.0 * base_err;

    let restricted = match restricted_pricing(spec, ex, cfg) {
        Ok(r) => Some(r),
        Err(Error::DensityUnderflow { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(PricingReport {
        direct: direct.value,
        covariance_route: p2,
        stein_route: p3,
        mean_c: ec.value,
        mean_x: ex.value,
        max_residual,
        combined_error,
        restricted,
    })
}

fn restricted_pricing(spec: &JointDensitySpec, ex: Est, cfg: &QuadConfig) -> Result<RestrictedPricing> {
    let s = spec.support;
    let rho = overlap_coefficient(spec, cfg)?;
    let root = |t: f64| density_ratio_root(spec, t);
    let c = |t: f64| t - root(t);
    let ec = single(|t| c(t) * (spec.f_x)(t), s.x0, s.x1, cfg)?;
    let cov = covariance(spec, &|t| t, &|u| u, cfg)?;
    let root_x = double(|t, u| root(t) * u * (spec.f_xy)(t, u), s, cfg)?;
    let direct = double(|t, u| c(t) * u * (spec.f_xy)(t, u), s, cfg)?;
    let mean_product = ec.value * ex.value;
    let overlap = ex.value * rho.value;
    let ratio_term = -root_x.value;
    let total = mean_product + cov.value + overlap + ratio_term;
    let combined_error = ec.error * ex.value.abs()
        + ex.error * (ec.value.abs() + rho.value)
        + cov.error
        + ex.value.abs() * rho.error
        + root_x.error
        + direct.error;
    Ok(RestrictedPricing {
        mean_product,
        covariance: cov.value,
        overlap,
        ratio_term,
        total,
        direct: direct.value,
        combined_error,
    })
}

/// Polynomial `Σ a_i t^i`, the serializable test-function family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polynomial(pub Vec<f64>);

impl Polynomial {
    pub fn identity() -> Self {
        Polynomial(vec![0.0, 1.0])
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, a| acc * t + a)
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial(self.0.iter().enumerate().skip(1).map(|(i, a)| i as f64 * a).collect())
    }
}

/// One case of the Stein battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteinCase {
    pub name: String,
    pub joint: BivariateNormal,
    pub c: Polynomial,
    #[serde(default = "Polynomial::identity")]
    pub h: Polynomial,
}

/// Result row of a battery run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseResult<T> {
    pub name: String,
    pub report: T,
    pub passed: bool,
}

/// Residual floor used by the batteries on top of three combined errors.
pub const BATTERY_FLOOR: f64 = 1e-3;

pub fn run_stein_case(case: &SteinCase, cfg: &QuadConfig) -> Result<CaseResult<SteinReport>> {
    let spec = case.joint.spec()?;
    let dc = case.c.derivative();
    let report = verify_stein(&spec, |t| case.c.eval(t), |t| dc.eval(t), |u| case.h.eval(u), cfg)?;
    let passed = report.identity.holds(BATTERY_FLOOR) && report.fubini.holds(BATTERY_FLOOR);
    Ok(CaseResult {
        name: case.name.clone(),
        report,
        passed,
    })
}

/// One case of the distance–covariance battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeCase {
    pub name: String,
    pub joint: BivariateNormal,
}

pub fn run_bridge_case(case: &BridgeCase, cfg: &QuadConfig) -> Result<CaseResult<BridgeReport>> {
    let spec = case.joint.spec()?;
    let report = verify_distance_covariance(&spec, cfg)?;
    let passed = report.first.holds(BATTERY_FLOOR) && report.second.holds(BATTERY_FLOOR);
    Ok(CaseResult {
        name: case.name.clone(),
        report,
        passed,
    })
}

/// One case of the pricing battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingCase {
    pub name: String,
    pub joint: BivariateNormal,
    pub c: Polynomial,
}

pub fn run_pricing_case(case: &PricingCase, cfg: &QuadConfig) -> Result<CaseResult<PricingReport>> {
    let spec = case.joint.spec()?;
    let dc = case.c.derivative();
    let report = price_asset(&spec, |t| case.c.eval(t), |t| dc.eval(t), cfg)?;
    let restricted_ok = report
        .restricted
        .as_ref()
        .is_none_or(|r| (r.total - r.direct).abs() <= 3.0 * r.combined_error.max(1e-12));
    let passed = report.max_residual <= 3.0 * report.combined_error && restricted_ok;
    Ok(CaseResult {
        name: case.name.clone(),
        report,
        passed,
    })
}

/// Deterministic battery of bivariate-normal Stein cases.
pub fn default_stein_battery() -> Vec<SteinCase> {
    let mut cases = vec![
        SteinCase {
            name: "classical c(t)=t, r=0.6".into(),
            joint: BivariateNormal::standard(0.6),
            c: Polynomial::identity(),
            h: Polynomial::identity(),
        },
        SteinCase {
            name: "c(t)=t^2, r=0.6".into(),
            joint: BivariateNormal::standard(0.6),
            c: Polynomial(vec![0.0, 0.0, 1.0]),
            h: Polynomial::identity(),
        },
        SteinCase {
            name: "independent, cubic c".into(),
            joint: BivariateNormal::standard(0.0),
            c: Polynomial(vec![0.5, -1.0, 0.3, 0.2]),
            h: Polynomial::identity(),
        },
    ];
    let rhos = [-0.8, -0.5, -0.2, 0.1, 0.3, 0.45, 0.7, 0.85, 0.9, -0.65];
    for i in 0..17 {
        let r = rhos[i % rhos.len()];
        let joint = BivariateNormal {
            mu_x: 0.3 * (i as f64 - 8.0) / 8.0,
            mu_y: -0.5 + 0.1 * i as f64,
            sigma_x: 0.6 + 0.1 * (i % 5) as f64,
            sigma_y: 1.4 - 0.1 * (i % 4) as f64,
            rho: r,
        };
        let c = match i % 4 {
            0 => Polynomial(vec![0.0, 2.0]),
            1 => Polynomial(vec![1.0, 0.5, -0.25]),
            2 => Polynomial(vec![0.0, 0.0, 0.0, 0.1]),
            _ => Polynomial(vec![-0.5, 1.0, 0.2, -0.05]),
        };
        cases.push(SteinCase {
            name: format!("bivariate normal #{i}"),
            joint,
            c,
            h: Polynomial::identity(),
        });
    }
    cases
}

/// Deterministic battery for the distance–covariance relation.
pub fn default_bridge_battery() -> Vec<BridgeCase> {
    let case = |name: &str, joint| BridgeCase {
        name: name.to_string(),
        joint,
    };
    let mut cases = vec![
        case("equal marginals, r=0.5", BivariateNormal::standard(0.5)),
        case(
            "N(0,1) vs N(1,1), r=0.5",
            BivariateNormal {
                mu_y: 1.0,
                ..BivariateNormal::standard(0.5)
            },
        ),
        case("independent, equal marginals", BivariateNormal::standard(0.0)),
    ];
    for i in 0..17 {
        cases.push(case(
            &format!("bivariate normal #{i}"),
            BivariateNormal {
                mu_x: -0.4 + 0.05 * i as f64,
                mu_y: 0.3 - 0.04 * i as f64,
                sigma_x: 1.0,
                sigma_y: 0.8 + 0.025 * i as f64,
                rho: -0.7 + 0.08 * i as f64,
            },
        ));
    }
    cases
}

/// Deterministic battery for the pricing routes.
pub fn default_pricing_battery() -> Vec<PricingCase> {
    let mut cases = vec![
        PricingCase {
            name: "corr 0.9, c(t)=t".into(),
            joint: BivariateNormal {
                mu_x: 0.5,
                mu_y: 1.0,
                sigma_x: 1.0,
                sigma_y: 2.0,
                rho: 0.9,
            },
            c: Polynomial::identity(),
        },
        PricingCase {
            name: "constant factor".into(),
            joint: BivariateNormal::standard(0.4),
            c: Polynomial(vec![0.95]),
        },
    ];
    for i in 0..18 {
        let c = match i % 3 {
            0 => Polynomial(vec![1.0, -0.2 + 0.02 * i as f64]),
            1 => Polynomial(vec![0.9, 0.1, -0.05]),
            _ => Polynomial(vec![1.1, -0.3, 0.05, 0.01]),
        };
        cases.push(PricingCase {
            name: format!("bivariate normal #{i}"),
            joint: BivariateNormal {
                mu_x: -0.2 + 0.03 * i as f64,
                mu_y: 1.0 + 0.05 * i as f64,
                sigma_x: 0.5 + 0.04 * i as f64,
                sigma_y: 0.9,
                rho: -0.85 + 0.1 * i as f64,
            },
            c,
        });
    }
    cases
}
