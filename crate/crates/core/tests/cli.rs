use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

fn bcdist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcdist")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write_group(path: &Path, t: usize, n: usize, scale: f64, seed: u64) {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut s = (0..n).map(|j| format!("S{j}")).collect::<Vec<_>>().join(",");
    s.push('\n');
    for _ in 0..t {
        let f: f64 = rng.sample(StandardNormal);
        let row: Vec<String> = (0..n)
            .map(|_| {
                let e: f64 = rng.sample(StandardNormal);
                format!("{}", 50.0 + scale * (f + e))
            })
            .collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    fs::write(path, s).unwrap();
}

#[test]
fn jl_min_dim_prints_bound() {
    let o = bcdist(&["jl", "min-dim", "--n", "566", "--eps", "0.5"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "305\n");
}

#[test]
fn identical_distributions_have_zero_distance() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    fs::write(&a, r#"{"kind":"mvn","mu":[1,2],"cov":[[2,0.5],[0.5,1]]}"#).unwrap();
    let p = a.to_str().unwrap();
    let o = bcdist(&["distance", p, p, "--format", "text"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("D=0 "), "{}", stdout(&o));
    let o = bcdist(&["distance", p, p]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["distance"], 0.0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("none.json");
    assert_eq!(bcdist(&["distance", missing.to_str().unwrap(), missing.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(bcdist(&["jl", "min-dim", "--n", "1", "--eps", "0.5"]).status.code(), Some(1));
    // indefinite moment sequence: variance below zero
    let o = bcdist(&["approx", "moment-match", "--moments", "1,1,0.5,0", "--nodes", "2"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(bcdist(&["no-such-command"]).status.code(), Some(1));
}

#[test]
fn strict_mode_requires_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    write_group(&a, 40, 4, 1.0, 1);
    write_group(&b, 40, 4, 1.0, 2);
    let (a, b) = (a.to_str().unwrap(), b.to_str().unwrap());
    let o = bcdist(&["--strict", "compare", "--k", "2", a, b]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--seed"));
    assert!(bcdist(&["--strict", "compare", "--k", "2", "--seed", "4", a, b]).status.success());
}

#[test]
fn compare_emits_one_matrix_per_iteration() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["compare".to_string(), "--method".into(), "jl".into(), "--k".into(), "3".into(), "--iterations".into(), "5".into(), "--seed".into(), "11".into()];
    for (i, name) in ["AUS", "SGP", "HKG"].iter().enumerate() {
        let p = dir.path().join(format!("{name}.csv"));
        write_group(&p, 80, 6, 1.0 + i as f64, 10 + i as u64);
        args.push(p.to_string_lossy().into_owned());
    }
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = bcdist(&argv);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let matrices = v["matrices"].as_array().unwrap();
    assert_eq!(matrices.len(), 5);
    for (i, m) in matrices.iter().enumerate() {
        assert_eq!(m["iteration"], i);
        assert_eq!(m["labels"], serde_json::json!(["AUS", "SGP", "HKG"]));
        assert_eq!(m["matrix"].as_array().unwrap().len(), 3);
        assert_eq!(m["config"]["seed"], 11);
    }
    assert_eq!(v["summary"]["argmin_per_iteration"].as_array().unwrap().len(), 5);
    assert_eq!(v["summary"]["mean"].as_array().unwrap().len(), 3);

    let out = dir.path().join("out");
    let mut with_out = argv.clone();
    with_out.extend(["--out", out.to_str().unwrap()]);
    assert!(bcdist(&with_out).status.success());
    for i in 0..5 {
        assert!(out.join(format!("distance_{i}.json")).exists());
        let csv = fs::read_to_string(out.join(format!("distance_{i}.csv"))).unwrap();
        assert!(csv.starts_with(",AUS,SGP,HKG\n"));
    }
    assert!(out.join("summary.json").exists());
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(&cfg, r#"{"reduction":{"method":"pca","significant_digits":2},"iterations":1,"seed":5}"#).unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    write_group(&a, 60, 5, 1.0, 3);
    write_group(&b, 60, 5, 2.0, 4);
    let base = ["compare", "--config", cfg.to_str().unwrap(), a.to_str().unwrap(), b.to_str().unwrap()];
    let o = bcdist(&base);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["matrices"][0]["symmetric"], false);
    assert_eq!(v["matrices"][0]["config"]["reduction"]["method"], "pca");

    let mut over = base.to_vec();
    over.extend(["--digits", "6", "--iterations", "2"]);
    let v: serde_json::Value = serde_json::from_slice(&bcdist(&over).stdout).unwrap();
    assert_eq!(v["matrices"].as_array().unwrap().len(), 2);
    assert_eq!(v["summary"]["config"]["reduction"]["significant_digits"], 6);
}

#[test]
fn jl_project_and_distortion() {
    let dir = tempfile::tempdir().unwrap();
    let x = dir.path().join("x.csv");
    write_group(&x, 30, 200, 1.0, 9);
    let y = dir.path().join("y.csv");
    let o = bcdist(&["jl", "project", "--input", x.to_str().unwrap(), "--k", "150", "--seed", "2", "--output", y.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = bcdist(&["jl", "distortion", "--original", x.to_str().unwrap(), "--projected", y.to_str().unwrap(), "--eps", "0.5"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["pairs"], 435);
    assert!(v["fraction_within"].as_f64().unwrap() > 0.9);
}

#[test]
fn approx_subcommands() {
    let o = bcdist(&["approx", "moment-match", "--moments", "1,0,1,0,3,0", "--nodes", "3"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let w: Vec<f64> = v["weights"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert!((w[1] - 2.0 / 3.0).abs() < 1e-8);

    let o = bcdist(&["approx", "nln-grid", "--component", "2,0,0", "--points", "1025"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("x,density\n"));
    assert_eq!(text.lines().count(), 1026);
}

#[test]
fn verify_stein_with_case_file() {
    let dir = tempfile::tempdir().unwrap();
    let cases = dir.path().join("cases.json");
    fs::write(&cases, r#"[{"name":"classical","joint":{"mu_x":0,"mu_y":0,"sigma_x":1,"sigma_y":1,"rho":0.6},"c":[0,1]}]"#).unwrap();
    let o = bcdist(&["verify", "stein", "--cases", cases.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v[0]["passed"], true);
    assert!((v[0]["report"]["identity"]["lhs"].as_f64().unwrap() - 0.6).abs() < 1e-3);
}
