//! Acceptance criteria 1–13. Runs as a plain binary (no libtest harness) and
//! prints one PASS/FAIL line per criterion; exits non-zero if any fails.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use bcdist::approx::{moment_match_moments, nln_density, nln_sum_density, GridSpec, NLNComponent};
use bcdist::divergence::{bc_coefficient_continuous, bc_coefficient_discrete, hellinger_discrete, modified_metric};
use bcdist::gaussian_distance::{bc_mvn, bc_normal_uni, bc_truncated_mvn, bc_truncated_uni};
use bcdist::linalg::cholesky_lower;
use bcdist::pipeline::{compare_groups, GroupDataset, Reduction, RunConfig};
use bcdist::quadrature::{integrate_1d, std_normal_pdf};
use bcdist::reduce::{jl_distortion_report, jl_min_dimension, jl_project};
use bcdist::stein::{
    default_bridge_battery, default_pricing_battery, default_stein_battery, price_asset, run_bridge_case, run_pricing_case, run_stein_case, BivariateNormal,
    BATTERY_FLOOR,
};
use bcdist::types::SampleMatrix;
use bcdist::{DiscreteDist, GaussianMulti, GaussianUni, QuadConfig, TruncGaussianMulti, TruncGaussianUni};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn normal_pdf(x: f64, mu: f64, s2: f64) -> f64 {
    let s = s2.sqrt();
    std_normal_pdf((x - mu) / s) / s
}

fn random_spd(r: &mut ChaCha20Rng, k: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(k, k, |_, _| r.random_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(k, k) * 0.3
}

/// 1. Univariate closed form against quadrature of the coefficient.
fn criterion_1() -> Outcome {
    let cfg = QuadConfig::default();
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let p = GaussianUni::new(r.random_range(-3.0..3.0), r.random_range(0.2..4.0)).unwrap();
        let q = GaussianUni::new(r.random_range(-3.0..3.0), r.random_range(0.2..4.0)).unwrap();
        let closed = bc_normal_uni(&p, &q).distance;
        let rho = bc_coefficient_continuous(|x| p.pdf(x), |x| q.pdf(x), f64::NEG_INFINITY, f64::INFINITY, &cfg).unwrap();
        worst = worst.max((closed + rho.coefficient.ln()).abs());
    }
    outcome(worst < 1e-7, format!("max |D - (-ln rho_quad)| = {worst:.2e} over 50 pairs (tol 1e-7)"))
}

/// 2. Multivariate closed form against Monte Carlo integration of the coefficient.
fn criterion_2() -> Outcome {
    let n = 400_000usize;
    let mut r = rng(2);
    let mut cases = Vec::new();
    for i in 0..20 {
        let k = 2 + i % 2;
        let mu_p = DVector::from_fn(k, |_, _| r.random_range(-0.7..0.7));
        let mu_q = DVector::from_fn(k, |_, _| r.random_range(-0.7..0.7));
        let p = GaussianMulti::new(mu_p, random_spd(&mut r, k)).unwrap();
        let q = GaussianMulti::new(mu_q, random_spd(&mut r, k)).unwrap();
        cases.push((p, q, 100 + i as u64));
    }
    let results: Vec<(f64, f64, f64)> = cases
        .par_iter()
        .map(|(p, q, seed)| {
            let k = p.dim();
            let l = cholesky_lower(p.cov(), "p").unwrap();
            let mut g = rng(*seed);
            let (mut s, mut s2) = (0.0, 0.0);
            let mut z = DVector::zeros(k);
            for _ in 0..n {
                for v in z.iter_mut() {
                    *v = g.sample(StandardNormal);
                }
                let x = p.mu() + &l * &z;
                let w = (q.pdf(x.as_slice()) / p.pdf(x.as_slice())).sqrt();
                s += w;
                s2 += w * w;
            }
            let mean = s / n as f64;
            let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
            let rho = bc_mvn(p, q).unwrap().coefficient;
            (rho, mean, se)
        })
        .collect();
    let worst = results.iter().map(|(rho, m, se)| (rho - m).abs() / se).fold(0.0, f64::max);
    let ok = results.iter().all(|(rho, m, se)| (rho - m).abs() <= 3.0 * se);
    outcome(ok, format!("max |rho - rho_mc| / se = {worst:.2} over 20 pairs, k = 2, 3 (tol 3 se, {n} draws)"))
}

/// 3. Bounds at ±10σ reproduce the untruncated distance.
fn criterion_3() -> Outcome {
    let cfg = QuadConfig::default();
    let mut r = rng(3);
    let mut worst_uni: f64 = 0.0;
    for _ in 0..20 {
        let (m1, v1, m2, v2) = (r.random_range(-2.0..2.0), r.random_range(0.3..3.0), r.random_range(-2.0..2.0), r.random_range(0.3..3.0));
        let clip = |m: f64, v: f64| TruncGaussianUni::new(m, v, m - 10.0 * v.sqrt(), m + 10.0 * v.sqrt()).unwrap();
        let dt = bc_truncated_uni(&clip(m1, v1), &clip(m2, v2)).distance;
        let dn = bc_normal_uni(&GaussianUni::new(m1, v1).unwrap(), &GaussianUni::new(m2, v2).unwrap()).distance;
        worst_uni = worst_uni.max((dt - dn).abs());
    }
    let mut worst_mvn: f64 = 0.0;
    for _ in 0..5 {
        let mk = |r: &mut ChaCha20Rng| {
            let g = GaussianMulti::new(DVector::from_fn(2, |_, _| r.random_range(-1.0..1.0)), random_spd(r, 2)).unwrap();
            let sd: Vec<f64> = (0..2).map(|i| g.cov()[(i, i)].sqrt()).collect();
            let lo = (0..2).map(|i| g.mu()[i] - 10.0 * sd[i]).collect();
            let hi = (0..2).map(|i| g.mu()[i] + 10.0 * sd[i]).collect();
            TruncGaussianMulti::new(g, lo, hi).unwrap()
        };
        let (p, q) = (mk(&mut r), mk(&mut r));
        let dt = bc_truncated_mvn(&p, &q, &cfg).unwrap().distance;
        let dn = bc_mvn(p.base(), q.base()).unwrap().distance;
        worst_mvn = worst_mvn.max((dt - dn).abs());
    }
    outcome(
        worst_uni < 1e-6 && worst_mvn < 1e-4,
        format!("max |D_T - D_N| = {worst_uni:.2e} univariate (tol 1e-6), {worst_mvn:.2e} for k = 2 (tol 1e-4)"),
    )
}

/// Midpoint rule of `f` on `[x0, x1] × [y0, y1]` with `n × n` cells.
fn midpoint_2d<F: Fn(f64, f64) -> f64 + Sync>(f: F, x0: f64, x1: f64, y0: f64, y1: f64, n: usize) -> f64 {
    let (hx, hy) = ((x1 - x0) / n as f64, (y1 - y0) / n as f64);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let x = x0 + (i as f64 + 0.5) * hx;
            (0..n).map(|j| f(x, y0 + (j as f64 + 0.5) * hy)).sum::<f64>()
        })
        .sum::<f64>()
        * hx
        * hy
}

/// 4. Truncated closed forms against the defining integrals.
fn criterion_4() -> Outcome {
    let cfg = QuadConfig::default();
    let mut r = rng(4);
    let mut worst_uni: f64 = 0.0;
    let mut done = 0;
    while done < 50 {
        let (m1, v1, m2, v2) = (r.random_range(-2.0..2.0), r.random_range(0.3..3.0), r.random_range(-2.0..2.0), r.random_range(0.3..3.0));
        let (a, b): (f64, f64) = (r.random_range(-3.0..0.5), r.random_range(0.0..3.0));
        let (c, d): (f64, f64) = (r.random_range(-3.0..0.5), r.random_range(0.0..3.0));
        let (lo, hi) = (a.max(c), b.min(d));
        if !(a < b && c < d && lo < hi) {
            continue;
        }
        done += 1;
        let p = TruncGaussianUni::new(m1, v1, a, b).unwrap();
        let q = TruncGaussianUni::new(m2, v2, c, d).unwrap();
        let pp = integrate_1d(|x| normal_pdf(x, m1, v1), a, b, &cfg).unwrap().value;
        let pq = integrate_1d(|x| normal_pdf(x, m2, v2), c, d, &cfg).unwrap().value;
        let overlap = integrate_1d(|x| (normal_pdf(x, m1, v1) * normal_pdf(x, m2, v2)).sqrt(), lo, hi, &cfg).unwrap().value;
        let oracle = overlap / (pp * pq).sqrt();
        worst_uni = worst_uni.max((bc_truncated_uni(&p, &q).coefficient - oracle).abs());
    }
    let mut worst_mvn: f64 = 0.0;
    for _ in 0..10 {
        let mk = |r: &mut ChaCha20Rng| {
            let g = GaussianMulti::new(DVector::from_fn(2, |_, _| r.random_range(-0.5..0.5)), random_spd(r, 2)).unwrap();
            let lo = vec![r.random_range(-2.5..-0.5), r.random_range(-2.5..-0.5)];
            let hi = vec![r.random_range(0.5..2.5), r.random_range(0.5..2.5)];
            TruncGaussianMulti::new(g, lo, hi).unwrap()
        };
        let (p, q) = (mk(&mut r), mk(&mut r));
        let fp = |x: f64, y: f64| p.base().pdf(&[x, y]);
        let fq = |x: f64, y: f64| q.base().pdf(&[x, y]);
        let n = 400;
        let pp = midpoint_2d(fp, p.lower()[0], p.upper()[0], p.lower()[1], p.upper()[1], n);
        let pq = midpoint_2d(fq, q.lower()[0], q.upper()[0], q.lower()[1], q.upper()[1], n);
        let (l0, l1) = (p.lower()[0].max(q.lower()[0]), p.lower()[1].max(q.lower()[1]));
        let (u0, u1) = (p.upper()[0].min(q.upper()[0]), p.upper()[1].min(q.upper()[1]));
        let ov = midpoint_2d(|x, y| (fp(x, y) * fq(x, y)).sqrt(), l0, u0, l1, u1, n);
        let oracle = ov / (pp * pq).sqrt();
        let rho = bc_truncated_mvn(&p, &q, &cfg).unwrap().coefficient;
        worst_mvn = worst_mvn.max((rho - oracle).abs());
    }
    outcome(
        worst_uni < 1e-8 && worst_mvn < 1e-3,
        format!("max |rho - oracle| = {worst_uni:.2e} on 50 univariate configs (tol 1e-8), {worst_mvn:.2e} on 10 k = 2 configs vs 400x400 grid (tol 1e-3)"),
    )
}

fn random_discrete(r: &mut ChaCha20Rng, k: usize) -> DiscreteDist {
    let w: Vec<f64> = (0..k).map(|_| r.random_range(0.0..1.0f64).powi(2) + 1e-12).collect();
    DiscreteDist::from_weights(&w).unwrap()
}

/// 5. Hellinger identity.
fn criterion_5() -> Outcome {
    let mut r = rng(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let k = r.random_range(1..30);
        let (p, q) = (random_discrete(&mut r, k), random_discrete(&mut r, k));
        let rho = bc_coefficient_discrete(&p, &q).unwrap().coefficient;
        worst = worst.max((hellinger_discrete(&p, &q).unwrap() - (2.0 - 2.0 * rho)).abs());
    }
    outcome(worst <= 1e-12, format!("max |H - (2 - 2 rho)| = {worst:.2e} over 1000 pairs (tol 1e-12)"))
}

/// 6. Triangle inequality of the modified metric.
fn criterion_6() -> Outcome {
    let mut r = rng(6);
    let mut violations = 0;
    let d = |a: &DiscreteDist, b: &DiscreteDist| modified_metric(bc_coefficient_discrete(a, b).unwrap().coefficient).unwrap();
    for _ in 0..1000 {
        let k = r.random_range(2..12);
        let (a, b, c) = (random_discrete(&mut r, k), random_discrete(&mut r, k), random_discrete(&mut r, k));
        // rounding slack of a few ulps on values of order one
        if d(&a, &c) > d(&a, &b) + d(&b, &c) + 1e-15 {
            violations += 1;
        }
    }
    outcome(violations == 0, format!("{violations} triangle violations over 1000 triples"))
}

/// 7. Distortion bound of the random projection.
fn criterion_7() -> Outcome {
    let k = jl_min_dimension(100, 0.3).unwrap();
    let exact = jl_min_dimension(566, 0.5).unwrap();
    let mut g = rng(7);
    let x = DMatrix::from_fn(100, 1000, |_, _| g.sample::<f64, _>(StandardNormal));
    let good = (0..100u64)
        .into_par_iter()
        .filter(|&seed| {
            let y = jl_project(&x, k, seed).unwrap();
            jl_distortion_report(&x, &y, 0.3).unwrap().fraction_within >= 0.99
        })
        .count();
    outcome(
        good >= 95 && exact == 305,
        format!("k = {k}; {good}/100 seeds with distortion fraction >= 0.99 (need 95); jl_min_dimension(566, 0.5) = {exact}"),
    )
}

/// 8. Three-point match of the standard normal.
fn criterion_8() -> Outcome {
    let m = [1.0, 0.0, 1.0, 0.0, 3.0, 0.0];
    let d = moment_match_moments(&m, 3).unwrap();
    let s3 = 3f64.sqrt();
    let nodes = [-s3, 0.0, s3];
    let weights = [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0];
    let node_err = d.nodes.iter().zip(&nodes).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let weight_err = d.weights.iter().zip(&weights).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mom_err = (0..6)
        .map(|j| (d.moment(j as u32) - m[j]).abs() / m[j].abs().max(1.0))
        .fold(0.0, f64::max);
    outcome(
        node_err < 1e-8 && weight_err < 1e-8 && mom_err < 1e-8,
        format!("node err {node_err:.1e}, weight err {weight_err:.1e}, moment err {mom_err:.1e} (tol 1e-8)"),
    )
}

/// 9. Normal log-normal density.
fn criterion_9() -> Outcome {
    let cfg = QuadConfig::default();
    let mut worst_mass: f64 = 0.0;
    for &s in &[0.0, 0.25, 1.0, 2.0] {
        for &k in &[1usize, 4, 16] {
            let c = NLNComponent::new(k, 0.0, s).unwrap();
            let mass = integrate_1d(|u| nln_density(u, &c, &cfg).unwrap(), f64::NEG_INFINITY, f64::INFINITY, &cfg).unwrap().value;
            worst_mass = worst_mass.max((mass - 1.0).abs());
        }
    }
    let k = 4;
    let c = NLNComponent::new(k, 0.0, 1e-3).unwrap();
    let var = 1.0 / k as f64;
    let limit_gap = (0..=600)
        .map(|i| {
            let u = -3.0 + 6.0 * i as f64 / 600.0;
            (nln_density(u, &c, &cfg).unwrap() - normal_pdf(u, 0.0, var)).abs()
        })
        .fold(0.0, f64::max);
    let unit = NLNComponent::new(1, 0.0, 0.0).unwrap();
    let g = nln_sum_density(&[unit, unit], &GridSpec::default(), &cfg).unwrap();
    let conv_gap = g
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| (v - normal_pdf(g.x(i), 0.0, 2.0)).abs())
        .fold(0.0, f64::max);
    outcome(
        worst_mass < 1e-6 && limit_gap < 1e-3 && conv_gap < 1e-4,
        format!("mass err {worst_mass:.1e} on 12 configs (tol 1e-6); sigma_Y = 1e-3 gap {limit_gap:.1e} (tol 1e-3); N(0,2) convolution gap {conv_gap:.1e} (tol 1e-4)"),
    )
}

/// 10. Stein and distance–covariance batteries.
fn criterion_10() -> Outcome {
    let cfg = QuadConfig::default();
    let stein: Vec<_> = default_stein_battery().par_iter().map(|c| run_stein_case(c, &cfg).unwrap()).collect();
    let bridge: Vec<_> = default_bridge_battery().par_iter().map(|c| run_bridge_case(c, &cfg).unwrap()).collect();
    let classical = &stein[0].report.identity;
    let classical_ok = (classical.lhs - 0.6).abs() < 1e-3 && (classical.rhs - 0.6).abs() < 1e-3;
    let eq = &bridge[0].report;
    let equal_ok = (eq.first.lhs - 0.5).abs() < 1e-3 && (eq.first.rhs - 0.5).abs() < 1e-3 && (eq.second.lhs - 0.5).abs() < 1e-3 && (eq.second.rhs - 0.5).abs() < 1e-3;
    let s_fail: Vec<&str> = stein.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let b_fail: Vec<&str> = bridge.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let worst = stein
        .iter()
        .map(|c| c.report.identity.residual)
        .chain(bridge.iter().flat_map(|c| [c.report.first.residual, c.report.second.residual]))
        .fold(0.0, f64::max);
    outcome(
        s_fail.is_empty() && b_fail.is_empty() && classical_ok && equal_ok,
        format!(
            "stein {}/{} pass, bridge {}/{} pass (residual <= max({BATTERY_FLOOR:.0e}, 3 x error)); max residual {worst:.1e}; classical lhs {:.6}, rhs {:.6}; equal-marginal sides {:.6} / {:.6}{}",
            stein.len() - s_fail.len(),
            stein.len(),
            bridge.len() - b_fail.len(),
            bridge.len(),
            classical.lhs,
            classical.rhs,
            eq.first.lhs,
            eq.second.rhs,
            if s_fail.is_empty() && b_fail.is_empty() { String::new() } else { format!("; failing: {:?} {:?}", s_fail, b_fail) }
        ),
    )
}

/// 11. Asset-pricing routes.
fn criterion_11() -> Outcome {
    let cfg = QuadConfig::default();
    let results: Vec<_> = default_pricing_battery().par_iter().map(|c| run_pricing_case(c, &cfg).unwrap()).collect();
    let fails = results.iter().filter(|c| !c.passed).count();
    let worst_ratio = results
        .iter()
        .map(|c| c.report.max_residual / (3.0 * c.report.combined_error))
        .fold(0.0, f64::max);
    let (mf, sf, mx) = (0.4, 1.3, 2.0);
    let joint = BivariateNormal {
        mu_x: mf,
        mu_y: mx,
        sigma_x: sf,
        sigma_y: 0.7,
        rho: 0.0,
    };
    let c = |t: f64| 1.0 - 0.2 * t + 0.05 * t * t - 0.01 * t * t * t;
    let dc = |t: f64| -0.2 + 0.1 * t - 0.03 * t * t;
    let p = price_asset(&joint.spec().unwrap(), c, dc, &cfg).unwrap();
    let v = sf * sf;
    let ec = 1.0 - 0.2 * mf + 0.05 * (mf * mf + v) - 0.01 * (mf.powi(3) + 3.0 * mf * v);
    let target = ec * mx;
    let ind_gap = [p.direct, p.covariance_route, p.stein_route].iter().map(|x| (x - target).abs()).fold(0.0, f64::max);
    outcome(
        fails == 0 && ind_gap < 1e-6,
        format!(
            "{}/{} specs with routes within 3 x combined error (worst residual / bound {worst_ratio:.2}); independent case gap {ind_gap:.1e} (tol 1e-6)",
            results.len() - fails,
            results.len()
        ),
    )
}

fn synthetic_group(name: &str, load: &DMatrix<f64>, scale: f64, t: usize, seed: u64) -> GroupDataset {
    let n = load.nrows();
    let f = load.ncols();
    let mut g = rng(seed);
    let s = scale.sqrt();
    let x = DMatrix::from_fn(t, n, |_, _| 0.0);
    let mut x = x;
    for i in 0..t {
        let z: Vec<f64> = (0..f).map(|_| g.sample(StandardNormal)).collect();
        for j in 0..n {
            let common: f64 = (0..f).map(|l| load[(j, l)] * z[l]).sum();
            let e: f64 = g.sample(StandardNormal);
            x[(i, j)] = 10.0 + s * (common + e);
        }
    }
    GroupDataset::new(name, SampleMatrix::unlabeled(x).unwrap()).unwrap()
}

/// 12. Discrimination of a doubled-covariance outsider on the JL path.
fn criterion_12() -> Outcome {
    let correct = (0..40u64)
        .into_par_iter()
        .filter(|&run| {
            let mut g = rng(1000 + run);
            let load = DMatrix::from_fn(20, 3, |_, _| g.random_range(-1.0..1.0));
            let a = synthetic_group("A", &load, 1.0, 300, 3 * run);
            let b = synthetic_group("B", &load, 1.0, 300, 3 * run + 1);
            let c = synthetic_group("C", &load, 2.0, 300, 3 * run + 2);
            let cfg = RunConfig {
                reduction: Reduction::Jl { epsilon: None, k: Some(10) },
                iterations: 5,
                seed: run,
                ..RunConfig::default()
            };
            let out = compare_groups(&[a, b, c], &cfg).unwrap();
            let m = &out.summary.mean;
            m[0][1] < m[0][2] && m[0][1] < m[1][2]
        })
        .count();
    outcome(correct >= 38, format!("same-law pair closest in {correct}/40 runs (need 38)"))
}

fn bcdist(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bcdist")).args(args).output().unwrap()
}

fn files_in(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

/// 13. Seeded subcommands rerun byte-identically.
fn criterion_13() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let mut g = rng(13);
    let load = DMatrix::from_fn(8, 2, |_, _| g.random_range(-1.0..1.0));
    let mut groups = Vec::new();
    for (i, name) in ["AUS", "SGP", "HKG"].iter().enumerate() {
        let grp = synthetic_group(name, &load, 1.0 + i as f64, 120, 50 + i as u64);
        let path = root.join(format!("{name}.csv"));
        grp.data.write_csv(fs::File::create(&path).unwrap()).unwrap();
        groups.push(path.to_string_lossy().into_owned());
    }
    let dist_a = root.join("a.json");
    let dist_b = root.join("b.json");
    fs::write(&dist_a, r#"{"kind":"truncated_mvn","mu":[0,0],"cov":[[1,0.4],[0.4,1]],"lower":[-1,-2],"upper":[2,"+inf"]}"#).unwrap();
    fs::write(&dist_b, r#"{"kind":"truncated_mvn","mu":[0.3,0],"cov":[[2,0],[0,1]],"lower":[-1.5,-1],"upper":[1,3]}"#).unwrap();
    let mut mismatches = Vec::new();
    let mut runs = 0;
    for label in ["jl", "pca", "project", "distance", "nln-grid"] {
        let mut outputs = Vec::new();
        for rep in 0..2 {
            // same directory both times: the path is echoed in configs and stdout
            let out = root.join(label);
            if rep == 1 {
                fs::remove_dir_all(&out).unwrap();
            }
            fs::create_dir_all(&out).unwrap();
            let o = out.to_string_lossy().into_owned();
            let mut args: Vec<String> = match label {
                "jl" => ["--strict", "compare", "--method", "jl", "--k", "4", "--iterations", "3", "--seed", "21", "--out", &o].map(String::from).to_vec(),
                "pca" => ["--strict", "compare", "--method", "pca", "--digits", "3", "--seed", "21", "--out", &o].map(String::from).to_vec(),
                "project" => vec![
                    "jl".into(),
                    "project".into(),
                    "--input".into(),
                    groups[0].clone(),
                    "--k".into(),
                    "5".into(),
                    "--seed".into(),
                    "8".into(),
                    "--output".into(),
                    format!("{o}/p.csv"),
                ],
                "distance" => vec!["distance".into(), dist_a.to_string_lossy().into_owned(), dist_b.to_string_lossy().into_owned(), "--seed".into(), "4".into()],
                _ => ["approx", "nln-grid", "--component", "2,0.1,0.4", "--component", "1,0,0.2", "--output"].map(String::from).to_vec(),
            };
            if label == "jl" || label == "pca" {
                args.extend(groups.iter().cloned());
            }
            if label == "nln-grid" {
                args.push(format!("{o}/grid.csv"));
            }
            let argv: Vec<&str> = args.iter().map(String::as_str).collect();
            let result = bcdist(&argv);
            if !result.status.success() {
                return outcome(false, format!("{label}: exit {:?}: {}", result.status.code(), String::from_utf8_lossy(&result.stderr)));
            }
            let mut files = files_in(&out);
            files.push(("stdout".into(), result.stdout));
            outputs.push(files);
        }
        runs += 1;
        if outputs[0] != outputs[1] {
            mismatches.push(label);
        }
    }
    outcome(
        mismatches.is_empty(),
        format!("{runs} seeded subcommands run twice; differing outputs: {mismatches:?}"),
    )
}

type Criterion = (u32, &'static str, f64, fn() -> Outcome);

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [Criterion; 13] = [
        (1, "univariate closed form vs quadrature", 5.0, criterion_1),
        (2, "multivariate closed form vs Monte Carlo", 60.0, criterion_2),
        (3, "truncated limit at +-10 sigma", 30.0, criterion_3),
        (4, "truncated closed forms vs defining integrals", 90.0, criterion_4),
        (5, "Hellinger identity", 1.0, criterion_5),
        (6, "modified metric triangle inequality", 2.0, criterion_6),
        (7, "JL distortion bound", 60.0, criterion_7),
        (8, "moment matching of N(0,1)", 1.0, criterion_8),
        (9, "normal log-normal density", 60.0, criterion_9),
        (10, "Stein and distance-covariance batteries", 120.0, criterion_10),
        (11, "asset pricing routes", 60.0, criterion_11),
        (12, "pipeline discrimination", 120.0, criterion_12),
        (13, "determinism of seeded subcommands", 120.0, criterion_13),
    ];
    let mut failed = 0;
    let total = Instant::now();
    for (id, name, budget, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == &id.to_string()) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        let in_time = start.elapsed() <= Duration::from_secs_f64(budget);
        let passed = o.passed && in_time;
        if !passed {
            failed += 1;
        }
        println!(
            "criterion {id:>2} [{}] {name}: {} ({secs:.2} s, budget {budget} s{})",
            if passed { "PASS" } else { "FAIL" },
            o.detail,
            if in_time { "" } else { ", over budget" }
        );
    }
    println!("acceptance: {failed} failing criteria ({:.1} s total)", total.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
