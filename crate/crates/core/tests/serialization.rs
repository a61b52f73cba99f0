use bcdist::pipeline::{BoundsRule, FitSpec, Reduction, RunConfig};
use bcdist::stein::{BivariateNormal, Polynomial, SteinCase};
use bcdist::types::DistanceMatrix;
use bcdist::{DiscreteDist, Distribution, GaussianMulti, GaussianUni, TruncGaussianMulti, TruncGaussianUni};
use proptest::prelude::*;

fn bound() -> impl Strategy<Value = f64> {
    prop_oneof![Just(f64::NEG_INFINITY), -5.0..-0.5f64]
}

fn spd(k: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(-1.0..1.0f64, k * k).prop_map(move |a| {
        (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| (0..k).map(|l| a[i * k + l] * a[j * k + l]).sum::<f64>() + if i == j { 0.5 } else { 0.0 })
                    .collect()
            })
            .collect()
    })
}

fn distribution() -> impl Strategy<Value = Distribution> {
    let discrete = proptest::collection::vec(0.01..1.0f64, 1..8).prop_map(|w| {
        let s: f64 = w.iter().sum();
        Distribution::Discrete(DiscreteDist::new(w.iter().map(|x| x / s).collect()).unwrap())
    });
    let normal = (-10.0..10.0f64, 0.01..10.0f64).prop_map(|(m, v)| Distribution::Normal(GaussianUni::new(m, v).unwrap()));
    let trunc = (-3.0..3.0f64, 0.1..4.0f64, bound(), prop_oneof![Just(f64::INFINITY), 0.5..5.0f64])
        .prop_map(|(m, v, a, b)| Distribution::TruncatedNormal(TruncGaussianUni::new(m, v, a, b).unwrap()));
    let mvn = (1usize..4).prop_flat_map(|k| (proptest::collection::vec(-3.0..3.0f64, k), spd(k))).prop_map(|(mu, cov)| {
        Distribution::Mvn(GaussianMulti::from_rows(&mu, &cov).unwrap())
    });
    let tmvn = (1usize..4)
        .prop_flat_map(|k| (proptest::collection::vec(-3.0..3.0f64, k), spd(k), proptest::collection::vec(bound(), k)))
        .prop_map(|(mu, cov, lo)| {
            let k = mu.len();
            let base = GaussianMulti::from_rows(&mu, &cov).unwrap();
            Distribution::TruncatedMvn(TruncGaussianMulti::new(base, lo, vec![f64::INFINITY; k]).unwrap())
        });
    prop_oneof![discrete, normal, trunc, mvn, tmvn]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn distribution_json_round_trip(d in distribution()) {
        let text = serde_json::to_string(&d).unwrap();
        let back: Distribution = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn distance_matrix_round_trip(g in 1usize..6, vals in proptest::collection::vec(prop_oneof![0.0..5.0f64, Just(f64::INFINITY)], 36), symmetric in any::<bool>()) {
        let m: Vec<Vec<f64>> = (0..g)
            .map(|i| (0..g).map(|j| if i == j { 0.0 } else if symmetric { vals[i.min(j) * 6 + i.max(j)] } else { vals[i * 6 + j] }).collect())
            .collect();
        let labels = (0..g).map(|i| format!("G{i}")).collect();
        let d = DistanceMatrix::new(labels, m, symmetric).unwrap();
        let back: DistanceMatrix = serde_json::from_str(&serde_json::to_string(&d).unwrap()).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn run_config_round_trip(digits in 1u32..8, eps in 0.05..0.95f64, k in proptest::option::of(1usize..50), nodes in 1usize..6,
                             iterations in 1usize..10, seed in any::<u64>(), shrink in 0.0..0.99f64, which in 0usize..4) {
        let reduction = if which % 2 == 0 { Reduction::Pca { significant_digits: digits } } else { Reduction::Jl { epsilon: Some(eps), k } };
        let fit = match which {
            0 => FitSpec::Mvn,
            1 => FitSpec::Discrete { nodes },
            2 => FitSpec::TruncatedMvn { bounds: BoundsRule::ObservedRange },
            _ => FitSpec::TruncatedMvn { bounds: BoundsRule::Fixed(f64::NEG_INFINITY, eps) },
        };
        let cfg = RunConfig { reduction, fit, iterations, seed, shrinkage: shrink, ..RunConfig::default() };
        let back = RunConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn stein_case_round_trip(c in proptest::collection::vec(-2.0..2.0f64, 0..5), r in -0.95..0.95f64) {
        let case = SteinCase { name: "x".into(), joint: BivariateNormal::standard(r), c: Polynomial(c), h: Polynomial::identity() };
        let back: SteinCase = serde_json::from_str(&serde_json::to_string(&case).unwrap()).unwrap();
        prop_assert_eq!(back, case);
    }
}

#[test]
fn invalid_documents_are_rejected() {
    for bad in [
        r#"{"kind":"normal","mu":0,"sigma2":0}"#,
        r#"{"kind":"discrete","probs":[0.5,0.6]}"#,
        r#"{"kind":"mvn","mu":[0,0],"cov":[[1,2],[2,1]]}"#,
        r#"{"kind":"truncated_normal","mu":0,"sigma2":1,"lower":1,"upper":-1}"#,
        r#"{"kind":"cauchy"}"#,
    ] {
        assert!(serde_json::from_str::<Distribution>(bad).is_err(), "{bad}");
    }
}
