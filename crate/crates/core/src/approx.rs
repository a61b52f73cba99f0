//! Normal log-normal mixture densities and moment-matched discrete
//! approximations.
//!
//! A component `U = X·e^Y` has `X ~ N(0, 1/k)` independent of
//! `Y ~ N(μ_Y, σ_Y²)`. Sums of components are handled by numerical
//! convolution on a symmetric grid with an odd number of nodes, so that
//! differences of grid points are again grid points.

use std::io::Write;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_1d, QuadConfig};
use crate::types::DiscreteDist;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Mass deficit beyond which a grid density is rejected.
pub const GRID_MASS_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NLNComponent {
    pub k: usize,
    pub mu_y: f64,
    pub sigma_y: f64,
}

impl NLNComponent {
    pub fn new(k: usize, mu_y: f64, sigma_y: f64) -> Result<Self> {
        let c = NLNComponent { k, mu_y, sigma_y };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::DomainError("k must be at least 1".into()));
        }
        if !self.mu_y.is_finite() || !(self.sigma_y >= 0.0) || !self.sigma_y.is_finite() {
            return Err(Error::DomainError(format!(
                "invalid log-scale parameters ({}, {})",
                self.mu_y, self.sigma_y
            )));
        }
        Ok(())
    }

    /// Var(U) = E[X²]·E[e^{2Y}].
    pub fn variance(&self) -> f64 {
        (2.0 * self.mu_y + 2.0 * self.sigma_y * self.sigma_y).exp() / self.k as f64
    }
}

/// Density of `X·e^Y` at `u`. The integral over `y` is restricted to
/// `μ_Y ± 10σ_Y`; `σ_Y = 0` gives the N(0, 1/k) density exactly.
pub fn nln_density(u: f64, comp: &NLNComponent, cfg: &QuadConfig) -> Result<f64> {
    comp.validate()?;
    let k = comp.k as f64;
    if comp.sigma_y == 0.0 {
        // X·e^μ ~ N(0, e^{2μ}/k)
        let s = (-comp.mu_y).exp();
        return Ok(k.sqrt() * s * INV_SQRT_2PI * (-0.5 * k * (u * s).powi(2)).exp());
    }
    let (mu, sig) = (comp.mu_y, comp.sigma_y);
    let pref = k.sqrt() / (2.0 * std::f64::consts::PI * sig);
    let integrand = |y: f64| {
        let z = (y - mu) / sig;
        (-y - 0.5 * k * u * u * (-2.0 * y).exp() - 0.5 * z * z).exp()
    };
    let inner_cfg = QuadConfig {
        abs_tol: cfg.abs_tol / pref.max(1.0),
        ..*cfg
    };
    let r = integrate_1d(integrand, mu - 10.0 * sig, mu + 10.0 * sig, &inner_cfg)?;
    Ok((pref * r.value).max(0.0))
}

/// Values on the grid `x0 + i·h`, `i = 0..len`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridDensity {
    pub x0: f64,
    pub h: f64,
    pub values: Vec<f64>,
}

impl GridDensity {
    pub fn abscissae(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| self.x(i)).collect()
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    /// Trapezoid mass.
    pub fn mass(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let inner: f64 = self.values[1..n - 1].iter().sum();
        self.h * (inner + 0.5 * (self.values[0] + self.values[n - 1]))
    }

    /// Linear interpolation; zero outside the grid.
    pub fn eval(&self, x: f64) -> f64 {
        let t = (x - self.x0) / self.h;
        if t < 0.0 || t > (self.values.len() - 1) as f64 {
            return 0.0;
        }
        let i = (t.floor() as usize).min(self.values.len() - 2);
        let w = t - i as f64;
        self.values[i] * (1.0 - w) + self.values[i + 1] * w
    }

    /// Two-column CSV `x,density`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["x", "density"])?;
        for (i, v) in self.values.iter().enumerate() {
            w.write_record([format!("{:?}", self.x(i)), format!("{v:?}")])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Symmetric grid layout for [`nln_sum_density`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    /// Node count; even values are bumped to the next odd number.
    pub points: usize,
    /// Half width in units of the standard deviation of the sum.
    pub sd_multiple: f64,
    /// Explicit half width, overriding `sd_multiple`.
    pub half_width: Option<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            points: 4097,
            sd_multiple: 12.0,
            half_width: None,
        }
    }
}

fn check_mass(g: &GridDensity) -> Result<()> {
    let deficit = (1.0 - g.mass()).abs();
    if deficit > GRID_MASS_TOL {
        return Err(Error::GridTooCoarse { deficit });
    }
    Ok(())
}

/// Discrete convolution on a shared odd-length grid centered at zero.
fn convolve(a: &[f64], b: &[f64], h: f64) -> Vec<f64> {
    let n = a.len();
    let c = (n / 2) as isize;
    (0..n)
        .into_par_iter()
        .map(|i| {
            // x_i - x_j = x_{i - j + c}
            let i = i as isize;
            let lo = (i - c).max(0);
            let hi = (i + c).min(n as isize - 1);
            let mut s = 0.0;
            for j in lo..=hi {
                s += a[j as usize] * b[(i - j + c) as usize];
            }
            s * h
        })
        .collect()
}

/// Density of the sum of independent components by pairwise convolution.
pub fn nln_sum_density(comps: &[NLNComponent], grid: &GridSpec, cfg: &QuadConfig) -> Result<GridDensity> {
    if comps.is_empty() {
        return Err(Error::DomainError("need at least one component".into()));
    }
    for c in comps {
        c.validate()?;
    }
    let points = if grid.points.is_multiple_of(2) { grid.points + 1 } else { grid.points };
    if points < 3 {
        return Err(Error::Config("grid needs at least three points".into()));
    }
    let half = match grid.half_width {
        Some(w) if w > 0.0 => w,
        Some(w) => return Err(Error::Config(format!("grid half width {w} must be positive"))),
        None => grid.sd_multiple * comps.iter().map(|c| c.variance()).sum::<f64>().sqrt(),
    };
    let h = 2.0 * half / (points - 1) as f64;
    let x0 = -half;
    let sample = |comp: &NLNComponent| -> Result<Vec<f64>> {
        (0..points)
            .into_par_iter()
            .map(|i| nln_density(x0 + i as f64 * h, comp, cfg))
            .collect()
    };
    let mut acc = GridDensity {
        x0,
        h,
        values: sample(&comps[0])?,
    };
    check_mass(&acc)?;
    for comp in &comps[1..] {
        let next = GridDensity {
            x0,
            h,
            values: sample(comp)?,
        };
        check_mass(&next)?;
        acc.values = convolve(&acc.values, &next.values, h);
        check_mass(&acc)?;
    }
    Ok(acc)
}

/// Nodes and weights of a discrete distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteApprox {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl DiscreteApprox {
    /// `Σ p_i x_i^j`.
    pub fn moment(&self, j: u32) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, p)| p * x.powi(j as i32)).sum()
    }

    fn abs_moment(&self, j: u32) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, p)| p * x.abs().powi(j as i32)).sum()
    }

    pub fn to_discrete(&self) -> Result<DiscreteDist> {
        DiscreteDist::from_weights(&self.weights)
    }
}

/// Product-form joint distribution of independent per-axis approximations;
/// categories are ordered lexicographically with the last axis fastest.
pub fn product_distribution(axes: &[DiscreteApprox]) -> Result<DiscreteDist> {
    let mut weights = vec![1.0];
    for axis in axes {
        weights = weights
            .iter()
            .flat_map(|w| axis.weights.iter().map(move |p| w * p))
            .collect();
    }
    DiscreteDist::from_weights(&weights)
}

/// Recurrence coefficients `(α, β)` from moments `m_0..m_{2N−1}` by the
/// Chebyshev algorithm.
fn recurrence_from_moments(m: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let len = 2 * n;
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    let mut prev = vec![0.0; len];
    let mut cur = m[..len].to_vec();
    alpha[0] = m[1] / m[0];
    beta[0] = m[0];
    for k in 1..n {
        let mut next = vec![0.0; len];
        for l in k..len - k {
            next[l] = cur[l + 1] - alpha[k - 1] * cur[l] - beta[k - 1] * prev[l];
        }
        if !(next[k] > 0.0) || !next[k].is_finite() {
            return Err(Error::MomentMatrixNotPD { order: k });
        }
        alpha[k] = next[k + 1] / next[k] - cur[k] / cur[k - 1];
        beta[k] = next[k] / cur[k - 1];
        prev = cur;
        cur = next;
    }
    Ok((alpha, beta))
}

fn gauss_from_recurrence(alpha: &[f64], beta: &[f64]) -> DiscreteApprox {
    let n = alpha.len();
    let jac = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j || j + 1 == i {
            beta[i.max(j)].sqrt()
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], beta[0] * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    DiscreteApprox {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

const MOMENT_TOL: f64 = 1e-8;

fn moments_match(d: &DiscreteApprox, m: &[f64]) -> bool {
    (0..m.len()).all(|j| {
        let scale = m[j].abs().max(d.abs_moment(j as u32)).max(f64::MIN_POSITIVE);
        (d.moment(j as u32) - m[j]).abs() <= MOMENT_TOL * scale
    })
}

/// Damped Newton (Levenberg–Marquardt) polish of nodes and weights against
/// the moment equations, used when the recurrence route loses accuracy.
fn polish(start: &DiscreteApprox, m: &[f64]) -> DiscreteApprox {
    let n = start.nodes.len();
    let mut x = start.nodes.clone();
    let mut p = start.weights.clone();
    let scale: Vec<f64> = (0..m.len())
        .map(|j| m[j].abs().max(start.abs_moment(j as u32)).max(1e-300))
        .collect();
    let residual = |x: &[f64], p: &[f64]| -> DVector<f64> {
        DVector::from_fn(m.len(), |j, _| {
            let s: f64 = x.iter().zip(p).map(|(xi, pi)| pi * xi.powi(j as i32)).sum();
            (s - m[j]) / scale[j]
        })
    };
    let mut r = residual(&x, &p);
    let mut lambda = 1e-6;
    for _ in 0..200 {
        let jac = DMatrix::from_fn(m.len(), 2 * n, |j, c| {
            let e = j as i32;
            if c < n {
                if e == 0 {
                    0.0
                } else {
                    p[c] * e as f64 * x[c].powi(e - 1) / scale[j]
                }
            } else {
                x[c - n].powi(e) / scale[j]
            }
        });
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * &r;
        let mut improved = false;
        for _ in 0..30 {
            let mut a = jtj.clone();
            for i in 0..2 * n {
                a[(i, i)] += lambda * (1.0 + jtj[(i, i)]);
            }
            let Some(step) = a.lu().solve(&(-&g)) else {
                lambda *= 10.0;
                continue;
            };
            let xn: Vec<f64> = (0..n).map(|i| x[i] + step[i]).collect();
            let pn: Vec<f64> = (0..n).map(|i| (p[i] + step[n + i]).max(0.0)).collect();
            let rn = residual(&xn, &pn);
            if rn.norm() < r.norm() {
                x = xn;
                p = pn;
                r = rn;
                lambda = (lambda * 0.3).max(1e-15);
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved || r.norm() < 1e-14 {
            break;
        }
    }
    let mut pairs: Vec<(f64, f64)> = x.into_iter().zip(p).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    DiscreteApprox {
        nodes: pairs.iter().map(|v| v.0).collect(),
        weights: pairs.iter().map(|v| v.1).collect(),
    }
}

/// N-point distribution reproducing the moments `m_0..m_{2N−1}`.
pub fn moment_match_moments(moments: &[f64], n: usize) -> Result<DiscreteApprox> {
    if n == 0 {
        return Err(Error::DomainError("N must be at least 1".into()));
    }
    if moments.len() < 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            found: moments.len(),
        });
    }
    let m = &moments[..2 * n];
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::DomainError("moments must be finite".into()));
    }
    if (m[0] - 1.0).abs() > 1e-6 {
        return Err(Error::DomainError(format!("zeroth moment {} is not 1", m[0])));
    }
    let (alpha, beta) = recurrence_from_moments(m, n)?;
    let mut d = gauss_from_recurrence(&alpha, &beta);
    if !moments_match(&d, m) {
        log::debug!("moment recurrence inaccurate for N={n}; polishing");
        d = polish(&d, m);
        if !moments_match(&d, m) {
            let worst = (0..m.len())
                .map(|j| (d.moment(j as u32) - m[j]).abs())
                .fold(0.0, f64::max);
            return Err(Error::NonConvergence {
                what: "moment_match",
                error: worst,
                evaluations: 0,
            });
        }
    }
    if d.nodes.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::MomentMatrixNotPD { order: n });
    }
    let total: f64 = d.weights.iter().sum();
    d.weights.iter_mut().for_each(|w| *w /= total);
    Ok(d)
}

/// Raw moments `∫ x^j f` for `j < count` by quadrature.
pub fn density_moments<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, count: usize, cfg: &QuadConfig) -> Result<Vec<f64>> {
    (0..count)
        .map(|j| integrate_1d(|x| f(x) * x.powi(j as i32), a, b, cfg).map(|r| r.value))
        .collect()
}

/// N-point approximation of the density `f` on `(a, b)`.
pub fn moment_match_density<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize, cfg: &QuadConfig) -> Result<DiscreteApprox> {
    let m = density_moments(f, a, b, 2 * n, cfg)?;
    let d = moment_match_moments(&m, n)?;
    if d.nodes.iter().any(|&x| x <= a || x >= b) {
        return Err(Error::MomentMatrixNotPD { order: n });
    }
    Ok(d)
}
