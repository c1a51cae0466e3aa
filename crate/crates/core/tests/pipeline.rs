use std::collections::BTreeSet;

use lvcd_core::model::{builtin_skeleton, random_model_instance, simulate};
use lvcd_core::pipeline::benchmark::{benchmark, cell_seed, BenchmarkSpec};
use lvcd_core::pipeline::{discover, discover_population, evaluate, DiscoveryResult};
use lvcd_core::{Config, ModelSpec, SampleMatrix};

fn model(name: &str, seed: u64) -> ModelSpec {
    random_model_instance(&builtin_skeleton(name).unwrap(), seed).unwrap()
}

#[test]
fn population_result_scores_perfectly() {
    let truth = model("e", 1);
    let res = discover_population(&truth, &Config::population()).unwrap();
    let m = evaluate(&res, &truth).unwrap();
    assert!(m.cl_exact && m.ls_exact && m.os_exact && m.cs_exact);
    for v in [m.pre_ll, m.rec_ll, m.f1_ll, m.pre_oo, m.rec_oo, m.f1_oo] {
        assert_eq!(v, Some(1.0));
    }
}

#[test]
fn extra_latent_edge_lowers_precision_only() {
    let truth = model("e", 2);
    let mut res = discover_population(&truth, &Config::population()).unwrap();
    let pos = |x: &str| {
        res.clusters
            .iter()
            .position(|c| c.iter().any(|n| n == x))
            .unwrap()
            + 1
    };
    let (l1, l3) = (pos("X1"), pos("X3"));
    res.latent_edges.push((l1, l3, 0.5));
    let m = evaluate(&res, &truth).unwrap();
    assert!((m.pre_ll.unwrap() - 2.0 / 3.0).abs() < 1e-15);
    assert_eq!(m.rec_ll, Some(1.0));
    assert!(!m.ls_exact && !m.cs_exact && m.cl_exact);
}

#[test]
fn wrong_clusters_leave_edge_metrics_absent() {
    let truth = model("c", 3);
    let mut res = discover_population(&truth, &Config::population()).unwrap();
    res.clusters = vec![vec!["X1".into(), "X2".into(), "X3".into()]];
    let m = evaluate(&res, &truth).unwrap();
    assert!(!m.cl_exact);
    assert!(m.pre_ll.is_none() && m.f1_ll.is_none() && m.f1_oo.is_none());
    assert!(evaluate(&res, &model("d", 1)).is_err());
}

#[test]
fn result_json_round_trips_with_stable_keys() {
    let truth = model("f", 4);
    let data = simulate(&truth, 3000, 5).unwrap();
    let res = discover(&data, &Config::default()).unwrap();
    let json = res.to_json().unwrap();
    let back = DiscoveryResult::from_json(&json).unwrap();
    assert_eq!(back, res);
    assert_eq!(back.to_json().unwrap(), json);
    let keys: Vec<&str> = [
        "\"observed\"",
        "\"clusters\"",
        "\"latent_edges\"",
        "\"latent_ancestry\"",
        "\"observed_ancestry\"",
        "\"diagnostics\"",
        "\"config\"",
    ]
    .into_iter()
    .collect();
    let positions: Vec<usize> = keys.iter().map(|k| json.find(k).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "{positions:?}");
    assert!(!json.contains("runtime_ms"));
}

#[test]
fn discovery_is_a_pure_function_of_data_and_config() {
    let truth = model("d", 6);
    let data = simulate(&truth, 4000, 7).unwrap();
    let cfg = Config {
        seed: 3,
        ..Config::default()
    };
    let a = discover(&data, &cfg).unwrap().to_json().unwrap();
    let reread = SampleMatrix::from_csv_str(&data.to_csv_string()).unwrap();
    let b = discover(&reread, &cfg).unwrap().to_json().unwrap();
    assert_eq!(a, b);
}

#[test]
fn discovery_rejects_tiny_or_invalid_input() {
    let data = simulate(&model("c", 1), 10, 1).unwrap();
    assert!(discover(&data, &Config::default()).is_err());
    let bad = Config {
        ell_max: 5,
        ..Config::default()
    };
    assert!(discover(&simulate(&model("c", 1), 100, 1).unwrap(), &bad).is_err());
    assert!(SampleMatrix::from_csv_str("a,b\n1,2\n3,nan\n")
        .unwrap_err()
        .to_string()
        .contains("row"));
    assert!(SampleMatrix::from_csv_str("a,b\n1,2\n3\n").is_err());
}

#[test]
fn smoke_grid_over_the_six_models() {
    let spec = BenchmarkSpec {
        models: ["a", "b", "c", "d", "e", "f"].map(String::from).to_vec(),
        ns: vec![2000],
        reps: 1,
        seed: 1,
        tau_s: vec![],
    };
    let report = benchmark(&spec, &Config::default()).unwrap();
    assert_eq!(report.cells.len(), 6);
    assert_eq!(report.summary.len(), 6);
    assert!(report.to_table().lines().count() == 7);
    assert_eq!(report.to_csv().unwrap().lines().count(), 7);
}

#[test]
fn benchmark_report_is_independent_of_worker_count() {
    let spec = BenchmarkSpec {
        models: vec!["c".into(), "e".into()],
        ns: vec![1500],
        reps: 4,
        seed: 11,
        tau_s: vec![("e".into(), 0.005)],
    };
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                benchmark(&spec, &Config::default())
                    .unwrap()
                    .to_csv()
                    .unwrap()
            })
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(1));
    assert!(benchmark(
        &BenchmarkSpec {
            reps: 0,
            ..spec.clone()
        },
        &Config::default()
    )
    .is_err());
    assert!(benchmark(
        &BenchmarkSpec {
            models: vec!["zz".into()],
            ..spec
        },
        &Config::default()
    )
    .is_err());
}

#[test]
fn cell_seeds_are_distinct_over_a_full_grid() {
    let mut seen = BTreeSet::new();
    for m in ["a", "b", "c", "d", "e", "f"] {
        for n in [1000, 2000, 4000, 8000, 16000] {
            for rep in 0..100 {
                assert!(seen.insert(cell_seed(0, m, n, rep)), "{m} {n} {rep}");
            }
        }
    }
}
