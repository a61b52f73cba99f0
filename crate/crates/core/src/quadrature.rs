//! Numerical integration primitives.
//!
//! * the standard normal density, CDF and quantile,
//! * adaptive Gauss–Kronrod quadrature on finite and infinite intervals,
//! * nested adaptive and plain Monte Carlo integration over rectangles,
//! * multivariate normal rectangle probabilities by the Genz
//!   separation-of-variables transform with randomized lattice replicates.
//!
//! Every randomized routine draws from ChaCha streams derived from
//! [`QuadConfig::seed`], one stream per replicate, so results do not depend on
//! thread scheduling.

use std::cell::Cell;
use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{GaussianMulti, QuadResult};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Tolerances and sample budgets for every integrator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_evals: usize,
    pub mc_samples: usize,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig {
            abs_tol: 1e-9,
            rel_tol: 1e-10,
            max_evals: 2_000_000,
            mc_samples: 200_000,
            replicates: 12,
            seed: 0x5eed_b4a7,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.mc_samples < 1000 {
            return Err(Error::Config("mc_samples must be at least 1000".into()));
        }
        if self.replicates < 2 {
            return Err(Error::Config("at least two replicates are needed".into()));
        }
        Ok(())
    }

    pub fn with_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_samples(mut self, mc_samples: usize) -> Self {
        self.mc_samples = mc_samples;
        self
    }
}

/// ChaCha stream `stream` of the generator keyed by `seed`.
pub fn substream(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// ---------------------------------------------------------------------------
// Standard normal

pub fn std_normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Φ(x), computed from the complementary error function so both tails keep
/// full relative precision.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// 1 − Φ(x).
pub fn std_normal_sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// Φ(b) − Φ(a) evaluated on the tail where cancellation is smaller.
pub fn std_normal_interval(a: f64, b: f64) -> f64 {
    if a > 0.0 {
        std_normal_sf(a) - std_normal_sf(b)
    } else {
        std_normal_cdf(b) - std_normal_cdf(a)
    }
}

/// Φ⁻¹(p): Acklam's rational approximation polished by one Halley step.
pub fn std_normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    // Halley refinement; the residual is taken on the smaller tail.
    let e = if x < 0.0 {
        std_normal_cdf(x) - p
    } else {
        (1.0 - p) - std_normal_sf(x)
    };
    let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
    x - u / (1.0 + 0.5 * x * u)
}

/// Two-sided Student-t critical value for `level` (e.g. 0.99) and `df`
/// degrees of freedom, via the Cornish–Fisher expansion.
pub fn student_t_critical(level: f64, df: usize) -> f64 {
    let z = std_normal_quantile(0.5 + level / 2.0);
    let nu = df as f64;
    let z2 = z * z;
    let g1 = (z2 + 1.0) * z / 4.0;
    let g2 = ((5.0 * z2 + 16.0) * z2 + 3.0) * z / 96.0;
    let g3 = (((3.0 * z2 + 19.0) * z2 + 17.0) * z2 - 15.0) * z / 384.0;
    let g4 = ((((79.0 * z2 + 776.0) * z2 + 1482.0) * z2 - 1920.0) * z2 - 945.0) * z / 92160.0;
    z + g1 / nu + g2 / nu.powi(2) + g3 / nu.powi(3) + g4 / nu.powi(4)
}

// ---------------------------------------------------------------------------
// Adaptive Gauss–Kronrod

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// One 21-point Kronrod panel: (estimate, error, round-off floor).
fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let (f1, f2) = (f(center - dx), f(center + dx));
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = res_k * 0.5;
    let mut res_asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = res_k * half;
    res_abs *= half.abs();
    res_asc *= half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    let round = 50.0 * f64::EPSILON * res_abs;
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(round);
    }
    (result, err, round)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    round: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive bisection on a finite interval. Returns the result and whether
/// the tolerance was met. An error estimate that has reached the round-off
/// floor of the panels counts as converged, since bisection cannot lower it.
fn adaptive_finite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, cfg: &QuadConfig) -> (QuadResult, bool) {
    let (v0, e0, r0) = gk21(f, a, b);
    let mut evals = 21;
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value: v0,
        error: e0,
        round: r0,
    });
    let (mut total, mut err, mut round) = (v0, e0, r0);
    let converged = |total: f64, err: f64, round: f64| {
        let tol = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        err <= tol || err <= 2.0 * round
    };
    loop {
        if converged(total, err, round) || !err.is_finite() {
            break;
        }
        if evals + 42 > cfg.max_evals {
            break;
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval cannot be split further in floating point
            heap.push(worst);
            break;
        }
        let (v1, e1, r1) = gk21(f, worst.a, mid);
        let (v2, e2, r2) = gk21(f, mid, worst.b);
        evals += 42;
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        round += r1 + r2 - worst.round;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
            round: r1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
            round: r2,
        });
        // re-sum periodically to keep accumulated rounding out of the totals
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.error).sum();
            round = heap.iter().map(|p| p.round).sum();
        }
    }
    total = heap.iter().map(|p| p.value).sum();
    err = heap.iter().map(|p| p.error).sum();
    round = heap.iter().map(|p| p.round).sum();
    (
        QuadResult {
            value: total,
            error_estimate: err,
            evaluations: evals,
        },
        converged(total, err, round),
    )
}

/// Adaptive quadrature on any interval; infinite ends are mapped onto a
/// finite parameter interval. Returns the result and a convergence flag.
pub fn integrate_1d_flagged<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<(QuadResult, bool)> {
    if a.is_nan() || b.is_nan() || a >= b {
        if a == b {
            return Ok((QuadResult::exact(0.0), true));
        }
        return Err(Error::DomainError(format!("invalid interval ({a}, {b})")));
    }
    let guard = |v: f64| if v.is_finite() { v } else { 0.0 };
    let out = match (a.is_finite(), b.is_finite()) {
        (true, true) => adaptive_finite(&f, a, b, cfg),
        (true, false) => {
            // x = a + t/(1-t)
            let g = |t: f64| {
                let s = 1.0 - t;
                guard(f(a + t / s) / (s * s))
            };
            adaptive_finite(&g, 0.0, 1.0, cfg)
        }
        (false, true) => {
            // x = b - t/(1-t)
            let g = |t: f64| {
                let s = 1.0 - t;
                guard(f(b - t / s) / (s * s))
            };
            adaptive_finite(&g, 0.0, 1.0, cfg)
        }
        (false, false) => {
            // x = t/(1-t²)
            let g = |t: f64| {
                let s = 1.0 - t * t;
                guard(f(t / s) * (1.0 + t * t) / (s * s))
            };
            adaptive_finite(&g, -1.0, 1.0, cfg)
        }
    };
    Ok(out)
}

/// Adaptive quadrature of `f` over `(a, b)`; either end may be infinite.
pub fn integrate_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult> {
    let (res, ok) = integrate_1d_flagged(f, a, b, cfg)?;
    if ok {
        Ok(res)
    } else {
        Err(Error::NonConvergence {
            what: "integrate_1d",
            error: res.error_estimate,
            evaluations: res.evaluations,
        })
    }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        Rect { x0, x1, y0, y1 }
    }

    pub fn square(lo: f64, hi: f64) -> Self {
        Rect::new(lo, hi, lo, hi)
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn is_finite(&self) -> bool {
        [self.x0, self.x1, self.y0, self.y1].iter().all(|v| v.is_finite())
    }
}

/// Nested adaptive quadrature over a rectangle (outer in x, inner in y).
///
/// The reported error is the outer error plus the largest inner error times
/// the outer width.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(f: F, rect: Rect, cfg: &QuadConfig) -> Result<QuadResult> {
    if !rect.is_finite() || rect.x0 >= rect.x1 || rect.y0 >= rect.y1 {
        return Err(Error::DomainError(format!("invalid rectangle {rect:?}")));
    }
    let inner_err = Cell::new(0.0f64);
    let inner_evals = Cell::new(0usize);
    let inner_failed = Cell::new(false);
    let inner_cfg = QuadConfig {
        abs_tol: cfg.abs_tol / (rect.x1 - rect.x0).max(1.0),
        ..*cfg
    };
    let outer = |x: f64| {
        let (r, ok) = adaptive_finite(&|y: f64| f(x, y), rect.y0, rect.y1, &inner_cfg);
        inner_err.set(inner_err.get().max(r.error_estimate));
        inner_evals.set(inner_evals.get() + r.evaluations);
        if !ok {
            inner_failed.set(true);
        }
        r.value
    };
    let (res, ok) = adaptive_finite(&outer, rect.x0, rect.x1, cfg);
    let error = res.error_estimate + inner_err.get() * (rect.x1 - rect.x0);
    let evaluations = inner_evals.get();
    if !ok || inner_failed.get() {
        return Err(Error::NonConvergence {
            what: "integrate_2d",
            error,
            evaluations,
        });
    }
    Ok(QuadResult {
        value: res.value,
        error_estimate: error,
        evaluations,
    })
}

/// Plain Monte Carlo over a finite rectangle. The error estimate is three
/// standard errors; the result depends only on `cfg.seed` and
/// `cfg.mc_samples`.
pub fn integrate_2d_mc<F: Fn(f64, f64) -> f64 + Sync>(f: F, rect: Rect, cfg: &QuadConfig) -> Result<QuadResult> {
    if !rect.is_finite() || rect.x0 >= rect.x1 || rect.y0 >= rect.y1 {
        return Err(Error::DomainError(format!(
            "Monte Carlo needs a finite rectangle, got {rect:?}"
        )));
    }
    let n = cfg.mc_samples.max(1);
    let chunks = cfg.replicates.max(1);
    let per = n.div_ceil(chunks);
    let partial: Vec<(f64, f64, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(cfg.seed, c as u64);
            let count = per.min(n.saturating_sub(c * per));
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let x = rect.x0 + (rect.x1 - rect.x0) * rng.random::<f64>();
                let y = rect.y0 + (rect.y1 - rect.y0) * rng.random::<f64>();
                let v = f(x, y);
                s += v;
                s2 += v * v;
            }
            (s, s2, count)
        })
        .collect();
    let (s, s2, m) = partial
        .iter()
        .fold((0.0, 0.0, 0usize), |acc, p| (acc.0 + p.0, acc.1 + p.1, acc.2 + p.2));
    let mf = m as f64;
    let mean = s / mf;
    let var = ((s2 / mf - mean * mean) * mf / (mf - 1.0)).max(0.0);
    let area = rect.area();
    Ok(QuadResult {
        value: mean * area,
        error_estimate: 3.0 * area * (var / mf).sqrt(),
        evaluations: m,
    })
}

// ---------------------------------------------------------------------------
// Multivariate normal rectangle probabilities

fn small_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut n = 2u64;
    while primes.len() < count {
        if primes.iter().take_while(|&&p| p * p <= n).all(|&p| !n.is_multiple_of(p)) {
            primes.push(n);
        }
        n += 1;
    }
    primes
}

/// P(lower ≤ X ≤ upper) for X ~ `dist`.
///
/// One dimension is evaluated exactly. Higher dimensions use the Genz
/// transform integrated by `cfg.replicates` randomly shifted Richtmyer
/// lattices with `cfg.mc_samples` points in total; the error estimate is the
/// 99% Student-t half width across replicates. Infinite limits go straight
/// through Φ.
pub fn mvn_rect_prob(dist: &GaussianMulti, lower: &[f64], upper: &[f64], cfg: &QuadConfig) -> Result<QuadResult> {
    let k = dist.dim();
    if lower.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: lower.len(),
        });
    }
    if upper.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: upper.len(),
        });
    }
    if let Some(i) = (0..k).find(|&i| !(lower[i] < upper[i])) {
        return Err(Error::DomainError(format!(
            "bound {i}: lower {} is not below upper {}",
            lower[i], upper[i]
        )));
    }
    cfg.validate()?;
    let l = crate::linalg::cholesky_lower(dist.cov(), "covariance")?;
    let mu: &DVector<f64> = dist.mu();
    let a: Vec<f64> = (0..k).map(|i| lower[i] - mu[i]).collect();
    let b: Vec<f64> = (0..k).map(|i| upper[i] - mu[i]).collect();

    if k == 1 {
        let s = l[(0, 0)];
        let p = std_normal_interval(a[0] / s, b[0] / s);
        return Ok(QuadResult {
            value: p.clamp(0.0, 1.0),
            error_estimate: 0.0,
            evaluations: 1,
        });
    }

    let first = std_normal_interval(a[0] / l[(0, 0)], b[0] / l[(0, 0)]);
    if first == 0.0 {
        return Ok(QuadResult::exact(0.0));
    }

    let generators: Vec<f64> = small_primes(k - 1).iter().map(|&p| (p as f64).sqrt().fract()).collect();
    let reps = cfg.replicates;
    let per = (cfg.mc_samples / reps).max(1);

    let integrand = |w: &[f64], y: &mut [f64]| -> f64 {
        let mut prob = first;
        let (d0, e0) = (
            std_normal_cdf(a[0] / l[(0, 0)]),
            std_normal_cdf(b[0] / l[(0, 0)]),
        );
        y[0] = std_normal_quantile(d0 + w[0] * (e0 - d0));
        for i in 1..k {
            let s: f64 = (0..i).map(|j| l[(i, j)] * y[j]).sum();
            let lo = (a[i] - s) / l[(i, i)];
            let hi = (b[i] - s) / l[(i, i)];
            let width = std_normal_interval(lo, hi);
            prob *= width;
            if prob == 0.0 {
                return 0.0;
            }
            if i + 1 < k {
                let d = std_normal_cdf(lo);
                y[i] = std_normal_quantile(d + w[i] * width);
            }
        }
        prob
    };

    let means: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rng = substream(cfg.seed, r as u64);
            let shift: Vec<f64> = (0..k - 1).map(|_| rng.random::<f64>()).collect();
            let mut w = vec![0.0; k - 1];
            let mut y = vec![0.0; k];
            let mut sum = 0.0;
            for n in 1..=per {
                for j in 0..k - 1 {
                    let frac = (n as f64 * generators[j] + shift[j]).fract();
                    // tent transform periodizes the integrand
                    w[j] = (2.0 * frac - 1.0).abs();
                }
                sum += integrand(&w, &mut y);
            }
            sum / per as f64
        })
        .collect();

    let rf = reps as f64;
    let mean = means.iter().sum::<f64>() / rf;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (rf - 1.0);
    let half_width = student_t_critical(0.99, reps - 1) * (var / rf).sqrt();
    Ok(QuadResult {
        value: mean.clamp(0.0, 1.0),
        error_estimate: half_width,
        evaluations: per * reps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::GaussianMulti;

    /// erf by its Maclaurin series, summed in extended steps; valid for |x| < 3.
    fn erf_series(x: f64) -> f64 {
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        for n in 1..200 {
            term *= -x2 / n as f64;
            let add = term / (2 * n + 1) as f64;
            sum += add;
            if add.abs() < 1e-18 {
                break;
            }
        }
        2.0 / PI.sqrt() * sum
    }

    /// Upper tail Q(x) by the Laplace continued fraction; accurate for x > 3.
    fn tail_continued_fraction(x: f64) -> f64 {
        let mut f = x;
        for n in (1..200).rev() {
            f = x + n as f64 / f;
        }
        std_normal_pdf(x) / f
    }

    #[test]
    fn cdf_examples() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert_eq!(std_normal_cdf(f64::INFINITY), 1.0);
        assert_eq!(std_normal_cdf(f64::NEG_INFINITY), 0.0);
        assert!((std_normal_cdf(1.959964) - 0.975).abs() < 1e-6);
    }

    #[test]
    fn cdf_matches_independent_oracles() {
        for i in -290..=290 {
            let x = i as f64 / 100.0;
            let oracle = 0.5 * (1.0 + erf_series(x * FRAC_1_SQRT_2));
            assert!((std_normal_cdf(x) - oracle).abs() < 1e-14, "x={x}");
        }
        for i in 0..60 {
            let x = 3.0 + i as f64 * 0.25;
            let oracle = tail_continued_fraction(x);
            assert!((std_normal_sf(x) - oracle).abs() <= 1e-13 * oracle, "x={x}");
            assert!((std_normal_cdf(-x) - oracle).abs() <= 1e-13 * oracle, "x={x}");
        }
    }

    #[test]
    fn cdf_symmetry_and_monotonicity() {
        let mut prev = 0.0;
        for i in -4000..=4000 {
            let x = i as f64 / 400.0;
            let c = std_normal_cdf(x);
            assert!((c + std_normal_cdf(-x) - 1.0).abs() <= 1e-14);
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-300, 1e-20, 1e-8, 0.001, 0.02425, 0.1, 0.5, 0.7, 0.97575, 0.999, 1.0 - 1e-12] {
            let x = std_normal_quantile(p);
            let back = if x < 0.0 { std_normal_cdf(x) } else { 1.0 - std_normal_sf(x) };
            assert!((back - p).abs() <= 1e-14 * p.max(1e-300) + 1e-16, "p={p} x={x} back={back}");
        }
        assert!((std_normal_quantile(0.975) - 1.959963984540054).abs() < 1e-13);
    }

    #[test]
    fn student_t_values() {
        // tabulated t_{0.995}: 11 df -> 3.106, 30 df -> 2.750
        assert!((student_t_critical(0.99, 11) - 3.1058).abs() < 2e-3);
        assert!((student_t_critical(0.99, 30) - 2.7500).abs() < 2e-3);
    }

    #[test]
    fn integrate_1d_examples() {
        let cfg = QuadConfig::default();
        let r = integrate_1d(|x| x, 0.0, 1.0, &cfg).unwrap();
        assert!((r.value - 0.5).abs() < 1e-14);
        let r = integrate_1d(std_normal_pdf, f64::NEG_INFINITY, f64::INFINITY, &cfg).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert!((r.value - 1.0).abs() <= r.error_estimate.max(1e-15));
        let r = integrate_1d(f64::sin, 0.0, PI, &cfg).unwrap();
        assert!((r.value - 2.0).abs() < 1e-13);
        let r = integrate_1d(std_normal_pdf, 1.0, f64::INFINITY, &cfg).unwrap();
        assert!((r.value - std_normal_sf(1.0)).abs() < 1e-12);
        let r = integrate_1d(std_normal_pdf, f64::NEG_INFINITY, -1.0, &cfg).unwrap();
        assert!((r.value - std_normal_sf(1.0)).abs() < 1e-12);
    }

    #[test]
    fn integrate_1d_reports_nonconvergence() {
        let cfg = QuadConfig {
            max_evals: 100,
            abs_tol: 1e-14,
            ..QuadConfig::default()
        };
        let err = integrate_1d(|x: f64| 1.0 / x.sqrt(), 0.0, 1.0, &cfg).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
        assert!(integrate_1d(|x| x, 1.0, 0.0, &cfg).is_err());
    }

    #[test]
    fn integrate_2d_mc_examples() {
        let cfg = QuadConfig::default();
        let unit = Rect::square(0.0, 1.0);
        let r = integrate_2d_mc(|_, _| 1.0, unit, &cfg).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        let r = integrate_2d_mc(|x, y| x * y, unit, &cfg).unwrap();
        assert!((r.value - 0.25).abs() <= r.error_estimate);
        let r = integrate_2d_mc(|x, y| std_normal_pdf(x) * std_normal_pdf(y), Rect::square(-8.0, 8.0), &cfg).unwrap();
        assert!((r.value - 1.0).abs() <= r.error_estimate, "{r:?}");
        let again = integrate_2d_mc(|x, y| std_normal_pdf(x) * std_normal_pdf(y), Rect::square(-8.0, 8.0), &cfg).unwrap();
        assert_eq!(r.value.to_bits(), again.value.to_bits());
        assert!(integrate_2d_mc(|_, _| 1.0, Rect::square(0.0, f64::INFINITY), &cfg).is_err());
    }

    #[test]
    fn integrate_2d_nested() {
        let cfg = QuadConfig::default();
        let r = integrate_2d(|x, y| x * y, Rect::square(0.0, 1.0), &cfg).unwrap();
        assert!((r.value - 0.25).abs() < 1e-13);
        let r = integrate_2d(|x, y| std_normal_pdf(x) * std_normal_pdf(y), Rect::square(-10.0, 10.0), &cfg).unwrap();
        assert!((r.value - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mvn_examples() {
        let cfg = QuadConfig::default();
        let one = GaussianMulti::identity(1);
        let r = mvn_rect_prob(&one, &[f64::NEG_INFINITY], &[0.0], &cfg).unwrap();
        assert!((r.value - 0.5).abs() < 1e-15);

        let three = GaussianMulti::identity(3);
        let r = mvn_rect_prob(&three, &[f64::NEG_INFINITY; 3], &[0.0; 3], &cfg).unwrap();
        assert!((r.value - 0.125).abs() <= 3.0 * r.error_estimate.max(1e-12), "{r:?}");

        let corr = GaussianMulti::from_rows(&[0.0, 0.0], &[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let r = mvn_rect_prob(&corr, &[f64::NEG_INFINITY; 2], &[0.0; 2], &cfg).unwrap();
        let orthant = 0.25 + 0.5f64.asin() / (2.0 * PI);
        assert!((orthant - 1.0 / 3.0).abs() < 1e-15);
        assert!((r.value - orthant).abs() <= 3.0 * r.error_estimate, "{r:?}");
        assert!(r.error_estimate < 1e-4);

        // same orthant by a dense midpoint grid on the standardized density
        let n = 1200;
        let h = 8.0 / n as f64;
        let mut grid = 0.0;
        for i in 0..n {
            for j in 0..n {
                let x = -8.0 + (i as f64 + 0.5) * h;
                let y = -8.0 + (j as f64 + 0.5) * h;
                grid += corr.pdf(&[x, y]);
            }
        }
        grid *= h * h;
        assert!((grid - orthant).abs() < 1e-5, "grid {grid}");
    }

    #[test]
    fn mvn_errors() {
        let cfg = QuadConfig::default();
        let two = GaussianMulti::identity(2);
        assert!(matches!(
            mvn_rect_prob(&two, &[0.0], &[1.0, 1.0], &cfg),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(mvn_rect_prob(&two, &[0.0, 1.0], &[1.0, 1.0], &cfg).is_err());
    }

    #[test]
    fn mvn_is_reproducible_and_product_form() {
        let cfg = QuadConfig::default();
        let cov = nalgebra::DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0, 0.25]));
        let d = GaussianMulti::new(DVector::from_vec(vec![0.5, -1.0, 0.0]), cov).unwrap();
        let lo = [-1.0, -2.0, f64::NEG_INFINITY];
        let hi = [1.0, 3.0, 0.2];
        let r1 = mvn_rect_prob(&d, &lo, &hi, &cfg).unwrap();
        let r2 = mvn_rect_prob(&d, &lo, &hi, &cfg).unwrap();
        assert_eq!(r1.value.to_bits(), r2.value.to_bits());
        let product = std_normal_interval(-1.5, 0.5) * std_normal_interval(-0.5, 2.0) * std_normal_cdf(0.4);
        assert!((r1.value - product).abs() <= 3.0 * r1.error_estimate.max(1e-13), "{r1:?} vs {product}");
    }
}
