//! Seeded grid of simulate-discover-evaluate runs.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::Config;
use crate::error::{Error, Result};
use crate::model::{builtin_skeleton, random_model_instance, simulate};
use crate::pipeline::discover;
use crate::pipeline::metrics::{evaluate, Metrics};

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkSpec {
    pub models: Vec<String>,
    pub ns: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    /// Per-model `tau_s` overrides.
    pub tau_s: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellResult {
    pub model: String,
    pub n: usize,
    pub rep: usize,
    pub seed: u64,
    pub metrics: Option<Metrics>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub model: String,
    pub n: usize,
    pub reps: usize,
    pub failures: usize,
    pub n_cl: usize,
    pub n_ls: usize,
    pub n_os: usize,
    pub n_cs: usize,
    pub pre_ll: Option<f64>,
    pub rec_ll: Option<f64>,
    pub f1_ll: Option<f64>,
    pub pre_oo: Option<f64>,
    pub rec_oo: Option<f64>,
    pub f1_oo: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkReport {
    pub cells: Vec<CellResult>,
    pub summary: Vec<SummaryRow>,
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one grid cell, chained through splitmix64 over its coordinates.
pub fn cell_seed(seed: u64, model: &str, n: usize, rep: usize) -> u64 {
    let mut h = splitmix64(seed);
    for b in model.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    h = splitmix64(h ^ 0xff);
    h = splitmix64(h ^ n as u64);
    splitmix64(h ^ rep as u64)
}

/// Simulates, discovers and evaluates one cell.
pub fn run_cell(model: &str, n: usize, seed: u64, cfg: &Config) -> Result<Metrics> {
    let skel =
        builtin_skeleton(model).ok_or_else(|| Error::Input(format!("unknown model {model:?}")))?;
    let truth = random_model_instance(&skel, splitmix64(seed ^ 1))?;
    let data = simulate(&truth, n, splitmix64(seed ^ 2))?;
    let cfg = Config {
        seed,
        ..cfg.clone()
    };
    evaluate(&discover(&data, &cfg)?, &truth)
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    if v.is_empty() {
        None
    } else {
        Some(v.iter().sum::<f64>() / v.len() as f64)
    }
}

pub fn benchmark(spec: &BenchmarkSpec, cfg: &Config) -> Result<BenchmarkReport> {
    if spec.reps == 0 {
        return Err(Error::Input("reps must be at least 1".into()));
    }
    cfg.validate()?;
    for m in &spec.models {
        if builtin_skeleton(m).is_none() {
            return Err(Error::Input(format!("unknown model {m:?}")));
        }
    }
    let mut grid = Vec::new();
    for m in &spec.models {
        for &n in &spec.ns {
            for rep in 0..spec.reps {
                grid.push((m.clone(), n, rep, cell_seed(spec.seed, m, n, rep)));
            }
        }
    }
    let cells: Vec<CellResult> = grid
        .into_par_iter()
        .map(|(model, n, rep, seed)| {
            let mut c = cfg.clone();
            if let Some((_, t)) = spec.tau_s.iter().find(|(name, _)| *name == model) {
                c.tau_s = *t;
            }
            let (metrics, error) = match run_cell(&model, n, seed, &c) {
                Ok(m) => (Some(m), None),
                Err(e) => (None, Some(e.to_string())),
            };
            CellResult {
                model,
                n,
                rep,
                seed,
                metrics,
                error,
            }
        })
        .collect();

    let mut summary = Vec::new();
    for m in &spec.models {
        for &n in &spec.ns {
            let rows: Vec<&CellResult> =
                cells.iter().filter(|c| &c.model == m && c.n == n).collect();
            let ms: Vec<&Metrics> = rows.iter().filter_map(|c| c.metrics.as_ref()).collect();
            let count = |f: fn(&Metrics) -> bool| ms.iter().filter(|x| f(x)).count();
            summary.push(SummaryRow {
                model: m.clone(),
                n,
                reps: rows.len(),
                failures: rows.len() - ms.len(),
                n_cl: count(|x| x.cl_exact),
                n_ls: count(|x| x.ls_exact),
                n_os: count(|x| x.os_exact),
                n_cs: count(|x| x.cs_exact),
                pre_ll: mean(ms.iter().map(|x| x.pre_ll)),
                rec_ll: mean(ms.iter().map(|x| x.rec_ll)),
                f1_ll: mean(ms.iter().map(|x| x.f1_ll)),
                pre_oo: mean(ms.iter().map(|x| x.pre_oo)),
                rec_oo: mean(ms.iter().map(|x| x.rec_oo)),
                f1_oo: mean(ms.iter().map(|x| x.f1_oo)),
            });
        }
    }
    Ok(BenchmarkReport { cells, summary })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn opt3(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
}

impl BenchmarkReport {
    /// One row per cell.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "model", "n", "rep", "seed", "cl", "ls", "os", "cs", "pre_ll", "rec_ll", "f1_ll",
            "pre_oo", "rec_oo", "f1_oo", "error",
        ])
        .map_err(|e| Error::Input(e.to_string()))?;
        for c in &self.cells {
            let b = |f: fn(&crate::pipeline::Metrics) -> bool| {
                c.metrics
                    .as_ref()
                    .map(|m| (f(m) as u8).to_string())
                    .unwrap_or_default()
            };
            let o = |f: fn(&crate::pipeline::Metrics) -> Option<f64>| {
                opt(c.metrics.as_ref().and_then(f))
            };
            w.write_record([
                c.model.clone(),
                c.n.to_string(),
                c.rep.to_string(),
                c.seed.to_string(),
                b(|m| m.cl_exact),
                b(|m| m.ls_exact),
                b(|m| m.os_exact),
                b(|m| m.cs_exact),
                o(|m| m.pre_ll),
                o(|m| m.rec_ll),
                o(|m| m.f1_ll),
                o(|m| m.pre_oo),
                o(|m| m.rec_oo),
                o(|m| m.f1_oo),
                c.error.clone().unwrap_or_default(),
            ])
            .map_err(|e| Error::Input(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Input(e.to_string()))
    }

    /// Aggregated counts and averaged edge metrics per (model, n).
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:>7} {:>5} {:>5} {:>5} {:>5} {:>5} {:>5} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}",
            "model",
            "n",
            "reps",
            "fail",
            "N_cl",
            "N_ls",
            "N_os",
            "N_cs",
            "PRE_ll",
            "REC_ll",
            "F1_ll",
            "PRE_oo",
            "REC_oo",
            "F1_oo"
        );
        for r in &self.summary {
            let _ = writeln!(
                out,
                "{:<10} {:>7} {:>5} {:>5} {:>5} {:>5} {:>5} {:>5} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}",
                r.model,
                r.n,
                r.reps,
                r.failures,
                r.n_cl,
                r.n_ls,
                r.n_os,
                r.n_cs,
                opt3(r.pre_ll),
                opt3(r.rec_ll),
                opt3(r.f1_ll),
                opt3(r.pre_oo),
                opt3(r.rec_oo),
                opt3(r.f1_oo)
            );
        }
        out
    }
}
