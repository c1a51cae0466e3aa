//! Prints the evidence behind one benchmark cell: pair ranks on sample and
//! population cumulants, single-confounder ratios, and source scores.
//!
//! `cargo run --release --example probe -- <model> <n> <rep> [grid-seed]`

use lvcd_core::backend::{Backend, PopulationBackend, SampleBackend};
use lvcd_core::cumulants::a7_ratio;
use lvcd_core::cumulants::matrix::{
    cumulant_matrix, orders_for, scaled_cumulant_matrix, singular_values,
};
use lvcd_core::model::{builtin_skeleton, random_model_instance, simulate};
use lvcd_core::pipeline::benchmark::{cell_seed, splitmix64};
use lvcd_core::pipeline::{discover, evaluate};
use lvcd_core::Config;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let model = &args[1];
    let n: usize = args[2].parse().unwrap();
    let rep: usize = args[3].parse().unwrap();
    let grid: u64 = args.get(4).map_or(0, |s| s.parse().unwrap());
    let seed = cell_seed(grid, model, n, rep);
    let truth =
        random_model_instance(&builtin_skeleton(model).unwrap(), splitmix64(seed ^ 1)).unwrap();
    let data = simulate(&truth, n, splitmix64(seed ^ 2)).unwrap();
    let cfg = Config {
        seed,
        tau_s: Config::tau_s_for_model(model),
        ..Config::default()
    };
    let res = discover(&data, &cfg).unwrap();
    println!("truth B = {}", truth.b);
    println!(
        "clusters {:?} anc {:?}",
        res.clusters, res.observed_ancestry
    );
    for p in &res.diagnostics.pair_evidence {
        println!("{p:?}");
    }
    for d in res.diagnostics.stage1.iter().chain(&res.diagnostics.stage2) {
        println!("note: {d}");
    }
    for s in &res.diagnostics.source_scores {
        println!("score: {s:?}");
    }
    println!("{:?}", evaluate(&res, &truth).unwrap());
    let sample = SampleBackend::new(&data, cfg.hsic_options());
    let population = PopulationBackend::new(&truth).unwrap();
    let p = data.p();
    for i in 0..p {
        for j in i + 1..p {
            for ell in 0..=2 {
                let (k1, k2) = orders_for(ell).unwrap();
                let build = if cfg.rank_scaling {
                    scaled_cumulant_matrix
                } else {
                    cumulant_matrix
                };
                let rel = |be: &dyn Backend, a, b| {
                    let sv =
                        singular_values(&build(be, &be.column(a), &be.column(b), k1, k2).unwrap());
                    sv.iter()
                        .map(|s| format!("{:.1e}", s / sv[0]))
                        .collect::<Vec<_>>()
                        .join(" ")
                };
                println!(
                    "({i},{j}) ell {ell}: ij [{}] pop [{}]  ji [{}] pop [{}]",
                    rel(&sample, i, j),
                    rel(&population, i, j),
                    rel(&sample, j, i),
                    rel(&population, j, i)
                );
            }
        }
    }
    for i in 0..p {
        for j in i + 1..p {
            let (ci, cj) = (sample.column(i), sample.column(j));
            let s = a7_ratio(&sample, &ci, &cj, &cfg)
                .map(|r| format!("{r:.3e}"))
                .unwrap_or_else(|e| e.to_string());
            let (pi, pj) = (population.column(i), population.column(j));
            let q = a7_ratio(&population, &pi, &pj, &cfg)
                .map(|r| format!("{r:.3e}"))
                .unwrap_or_else(|e| e.to_string());
            println!("a7 ({i},{j}): sample {s}  population {q}");
        }
    }
}
