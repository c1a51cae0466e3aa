//! Acceptance run: one PASS/FAIL line per criterion, with the measured numbers.
//!
//! Every criterion is evaluated and reported; the process exits non-zero only
//! when a check cannot be executed at all.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use lvcd_core::backend::{Backend, PopulationBackend};
use lvcd_core::cumulants::matrix::{cumulant_matrix, numeric_rank, orders_for};
use lvcd_core::cumulants::{a7_ratio, total_effect_roots};
use lvcd_core::independence::{hsic_test, HsicOptions};
use lvcd_core::model::{builtin_skeleton, mixing_matrix, random_model_instance, Disturbance};
use lvcd_core::pipeline::benchmark::{benchmark, BenchmarkReport, BenchmarkSpec, SummaryRow};
use lvcd_core::pipeline::{discover_population, evaluate, DiscoveryResult};
use lvcd_core::{Config, ModelSpec};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use rayon::prelude::*;

const ALL_MODELS: [&str; 10] = [
    "a", "b", "c", "d", "e", "f", "fig2a", "fig2b", "fig3a", "fig3b",
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(id: usize, title: &str, o: &Outcome) {
    println!(
        "{} criterion {id}: {title} ({})",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail
    );
}

/// Two observed variables with `ell` confounders and an optional `X1 -> X2`
/// edge; loadings and the edge are drawn with random signs.
fn pair_model(ell: usize, edge: bool, seed: u64) -> ModelSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |lo: f64, hi: f64| {
        let v = rng.random_range(lo..hi);
        if rng.random_bool(0.5) {
            v
        } else {
            -v
        }
    };
    let lambda = DMatrix::from_fn(2, ell, |_, _| draw(0.5, 1.5));
    let mut b = DMatrix::zeros(2, 2);
    if edge {
        b[(1, 0)] = draw(0.5, 0.9);
    }
    ModelSpec {
        latent_names: (1..=ell).map(|i| format!("L{i}")).collect(),
        observed_names: vec!["X1".into(), "X2".into()],
        a: DMatrix::zeros(ell, ell),
        lambda,
        b,
        latent_disturbances: vec![Disturbance::default(); ell],
        observed_disturbances: vec![Disturbance::default(); 2],
    }
}

fn population_oracle() -> Outcome {
    let start = Instant::now();
    let cfg = Config::population();
    let mut failures = Vec::new();
    let mut trials = 0;
    for name in ALL_MODELS {
        for draw in 0..20u64 {
            trials += 1;
            let truth =
                random_model_instance(&builtin_skeleton(name).unwrap(), 1000 + draw).unwrap();
            let ok = discover_population(&truth, &cfg)
                .and_then(|r| evaluate(&r, &truth))
                .map(|m| m.cl_exact && m.ls_exact && m.os_exact)
                .unwrap_or(false);
            if !ok {
                failures.push(format!("{name}#{draw}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: failures.is_empty() && secs < 60.0,
        detail: format!(
            "{}/{trials} exact in {secs:.1}s {failures:?}",
            trials - failures.len()
        ),
    }
}

fn rank_law() -> Outcome {
    let rank = |be: &dyn Backend, a: usize, b: usize, ell: usize| {
        let (k1, k2) = orders_for(ell).unwrap();
        numeric_rank(
            &cumulant_matrix(be, &be.column(a), &be.column(b), k1, k2).unwrap(),
            1e-9,
            1e-12,
        )
    };
    let (mut ok, mut total) = (0, 0);
    for ell in 1..=2 {
        for draw in 0..50 {
            let plain = PopulationBackend::new(&pair_model(ell, false, draw)).unwrap();
            let edged = PopulationBackend::new(&pair_model(ell, true, 100 + draw)).unwrap();
            let checks = [
                rank(&plain, 0, 1, ell) == ell + 1,
                rank(&plain, 1, 0, ell) == ell + 1,
                rank(&edged, 0, 1, ell) == ell + 1,
                rank(&edged, 1, 0, ell) == ell + 2,
            ];
            total += checks.len();
            ok += checks.iter().filter(|c| **c).count();
        }
    }
    Outcome {
        pass: ok == total,
        detail: format!("{ok}/{total} ranks as predicted"),
    }
}

fn root_recovery() -> Outcome {
    let cfg = Config::population();
    let (mut pairs, mut within, mut worst) = (0, 0, 0.0f64);
    for name in ALL_MODELS {
        for draw in 0..20u64 {
            let truth =
                random_model_instance(&builtin_skeleton(name).unwrap(), 1000 + draw).unwrap();
            let m = mixing_matrix(&truth).unwrap();
            let be = PopulationBackend::new(&truth).unwrap();
            for a in 0..truth.p() {
                for b in 0..truth.p() {
                    let shared = (0..m.ncols()).any(|s| m[(a, s)] != 0.0 && m[(b, s)] != 0.0);
                    if a == b || !shared || m[(a, truth.q() + b)] != 0.0 {
                        continue;
                    }
                    let mut expected: Vec<f64> = Vec::new();
                    for s in (0..m.ncols()).filter(|&s| m[(a, s)] != 0.0) {
                        let r = m[(b, s)] / m[(a, s)];
                        if !expected
                            .iter()
                            .any(|x| (x - r).abs() <= 1e-12 * (1.0 + r.abs()))
                        {
                            expected.push(r);
                        }
                    }
                    expected.sort_by(f64::total_cmp);
                    let ell = expected.len() - 1;
                    if ell == 0 || ell > 2 {
                        continue;
                    }
                    pairs += 1;
                    let err = match total_effect_roots(&be, &be.column(a), &be.column(b), ell, &cfg)
                    {
                        Ok(r) if r.len() == expected.len() => r
                            .iter()
                            .zip(&expected)
                            .map(|(x, y)| (x - y).abs())
                            .fold(0.0, f64::max),
                        _ => f64::INFINITY,
                    };
                    worst = worst.max(err);
                    if err <= 1e-9 {
                        within += 1;
                    }
                }
            }
        }
    }
    Outcome {
        pass: within == pairs,
        detail: format!("{within}/{pairs} pairs within 1e-9, worst {worst:.2e}"),
    }
}

fn single_confounder_criterion() -> Outcome {
    let cfg = Config::population();
    let ratio = |m: &ModelSpec| {
        let be = PopulationBackend::new(m).unwrap();
        a7_ratio(&be, &be.column(0), &be.column(1), &cfg).unwrap_or(f64::NAN)
    };
    let mut zero_max = 0.0f64;
    let (mut separated, mut total, mut smallest) = (0, 0, f64::INFINITY);
    for draw in 0..50 {
        zero_max = zero_max.max(ratio(&pair_model(1, false, draw)));
        for (ell, edge) in [(2, false), (1, true), (2, true)] {
            let r = ratio(&pair_model(ell, edge, 1000 + draw));
            total += 1;
            smallest = smallest.min(r);
            if r > 1e-3 {
                separated += 1;
            }
        }
    }
    Outcome {
        pass: zero_max < 1e-12 && separated == total,
        detail: format!(
            "one-confounder max {zero_max:.1e}; {separated}/{total} two-confounder or edge pairs above 1e-3, min {smallest:.1e}"
        ),
    }
}

fn row<'a>(r: &'a BenchmarkReport, model: &str) -> &'a SummaryRow {
    r.summary.iter().find(|s| s.model == model).unwrap()
}

fn benchmark_counts(report: &BenchmarkReport, secs: f64) -> Outcome {
    let (a, c, f) = (row(report, "a"), row(report, "c"), row(report, "f"));
    Outcome {
        pass: c.n_cl >= 80 && c.n_cs >= 80 && a.n_cl >= 65 && f.n_cs >= 60,
        detail: format!(
            "c N_cl {} N_cs {}, a N_cl {}, f N_cs {}; {secs:.0}s",
            c.n_cl, c.n_cs, a.n_cl, f.n_cs
        ),
    }
}

fn latent_edge_f1(c: &SummaryRow, d: &SummaryRow) -> Outcome {
    let f = |r: &SummaryRow| r.f1_ll.unwrap_or(f64::NAN);
    Outcome {
        pass: f(c) >= 0.98 && f(d) >= 0.98,
        detail: format!(
            "c F1_ll {:.3} over {} correct clusterings, d F1_ll {:.3} over {}",
            f(c),
            c.n_cl,
            f(d),
            d.n_cl
        ),
    }
}

fn hsic_calibration() -> Outcome {
    let sample = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = LogNormal::new(-1.1, 0.8).unwrap();
        (0..2000).map(|_| d.sample(&mut rng)).collect::<Vec<f64>>()
    };
    let reps = 500u64;
    let rejected = (0..reps)
        .into_par_iter()
        .filter(|&r| {
            !hsic_test(&sample(2 * r), &sample(2 * r + 1), &HsicOptions::default())
                .unwrap()
                .independent
        })
        .count();
    let rate = rejected as f64 / reps as f64;
    Outcome {
        pass: (0.03..=0.08).contains(&rate),
        detail: format!("rejection rate {rate:.3} over {reps}"),
    }
}

fn lvcd(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_lvcd"))
        .args(args)
        .output()
        .expect("run lvcd")
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/democracy.csv")
}

fn democracy(dir: &Path) -> Outcome {
    let out = dir.join("democracy.json");
    let run = lvcd(&[
        "discover",
        fixture().to_str().unwrap(),
        "--tau-o",
        "0.1",
        "--alpha-ind",
        "0.2",
        "--tau-s",
        "0.005",
        "--tau-m1",
        "0.001",
        "--tau-m2",
        "0.01",
        "--ell-max",
        "2",
        "--seed",
        "0",
        "--out",
        out.to_str().unwrap(),
    ]);
    if !run.status.success() {
        return Outcome {
            pass: false,
            detail: String::from_utf8_lossy(&run.stderr).trim().to_string(),
        };
    }
    let res = DiscoveryResult::load(&out).unwrap();
    let want: BTreeSet<Vec<String>> = [["x1", "x2"], ["y3", "y4"], ["y5", "y6"]]
        .iter()
        .map(|c| c.iter().map(|s| s.to_string()).collect())
        .collect();
    let got: BTreeSet<Vec<String>> = res.clusters.iter().cloned().collect();
    let latent_of = |x: &str| {
        res.clusters
            .iter()
            .position(|c| c.iter().any(|n| n == x))
            .map(|i| i + 1)
    };
    let edges: BTreeSet<(usize, usize)> =
        res.latent_edges.iter().map(|&(p, c, _)| (p, c)).collect();
    let triangle = match (latent_of("x1"), latent_of("y3"), latent_of("y5")) {
        (Some(i), Some(d60), Some(d65)) => {
            BTreeSet::from([(i, d60), (i, d65), (d60, d65)]) == edges
        }
        _ => false,
    };
    Outcome {
        pass: got == want && triangle,
        detail: format!(
            "seed 0: clusters {:?}, latent edges {:?}",
            res.clusters, edges
        ),
    }
}

fn determinism(dir: &Path) -> Outcome {
    let data = dir.join("sim.csv");
    let ok = lvcd(&[
        "simulate",
        "--model",
        "f",
        "--n",
        "4000",
        "--seed",
        "2",
        "--out",
        data.to_str().unwrap(),
    ])
    .status
    .success();
    let mut same_json = ok;
    for input in [data.clone(), fixture()] {
        let bytes: Vec<Vec<u8>> = (0..2)
            .map(|k| {
                let out = dir.join(format!("det{k}.json"));
                lvcd(&[
                    "discover",
                    input.to_str().unwrap(),
                    "--seed",
                    "9",
                    "--out",
                    out.to_str().unwrap(),
                ]);
                std::fs::read(&out).unwrap_or_default()
            })
            .collect();
        same_json &= !bytes[0].is_empty() && bytes[0] == bytes[1];
    }
    let reports: Vec<Vec<u8>> = ["1", "4"]
        .iter()
        .map(|t| {
            let out = dir.join(format!("bench{t}.csv"));
            lvcd(&[
                "benchmark",
                "--models",
                "c,f",
                "--ns",
                "2000",
                "--reps",
                "4",
                "--builtin-tau-s",
                "--threads",
                t,
                "--out",
                out.to_str().unwrap(),
            ]);
            std::fs::read(&out).unwrap_or_default()
        })
        .collect();
    let same_csv = !reports[0].is_empty() && reports[0] == reports[1];
    Outcome {
        pass: same_json && same_csv,
        detail: format!("discover JSON identical: {same_json}; benchmark CSV identical across 1 and 4 workers: {same_csv}"),
    }
}

fn main() {
    // `cargo test -- --list` and filters are not meaningful for this target.
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let dir = std::env::temp_dir().join(format!("lvcd-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("scratch directory");

    let mut results = Vec::new();
    let mut record = |id: usize, title: &str, o: Outcome| {
        report(id, title, &o);
        results.push(o.pass);
    };
    record(1, "population oracle exactness", population_oracle());
    record(2, "cumulant-matrix rank law", rank_law());
    record(3, "total-effect roots within 1e-9", root_recovery());
    record(
        4,
        "sixth-cumulant single-confounder criterion",
        single_confounder_criterion(),
    );

    let cfg = Config::default();
    let start = Instant::now();
    let spec = BenchmarkSpec {
        models: vec!["a".into(), "c".into(), "d".into(), "f".into()],
        ns: vec![16000],
        reps: 100,
        seed: 0,
        tau_s: ["a", "c", "d", "f"]
            .iter()
            .map(|m| (m.to_string(), Config::tau_s_for_model(m)))
            .collect(),
    };
    let grid = benchmark(&spec, &cfg).expect("benchmark grid");
    let secs = start.elapsed().as_secs_f64();
    print!("{}", grid.to_table());
    record(
        5,
        "N=16000 recovery counts for models a, c, f",
        benchmark_counts(&grid, secs),
    );
    record(
        6,
        "latent-edge F1 for models c, d at N=16000",
        latent_edge_f1(row(&grid, "c"), row(&grid, "d")),
    );
    record(7, "HSIC calibration", hsic_calibration());
    record(8, "Political Democracy subset", democracy(&dir));
    record(9, "determinism", determinism(&dir));

    let passed = results.iter().filter(|p| **p).count();
    println!("{passed}/{} criteria pass", results.len());
    let _ = std::fs::remove_dir_all(&dir);
}
