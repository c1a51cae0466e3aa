//! End-to-end discovery, evaluation and the benchmark harness.

pub mod benchmark;
pub mod metrics;
pub mod result;

use std::collections::BTreeMap;
use std::time::Instant;

use crate::backend::{Backend, PopulationBackend, SampleBackend};
use crate::config::Config;
use crate::data::SampleMatrix;
use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::stage1::estimate_over_segmented_clusters;
use crate::stage2::latent_ancestry;
use crate::stage3::latent_adjacency;

pub use benchmark::{benchmark, BenchmarkReport, BenchmarkSpec};
pub use metrics::{evaluate, Metrics};
pub use result::{latent_name, Diagnostics, DiscoveryResult};

/// Runs all three stages on a sample.
pub fn discover(data: &SampleMatrix, cfg: &Config) -> Result<DiscoveryResult> {
    cfg.validate()?;
    if data.p() >= 2 && data.n() < crate::independence::hsic::MIN_HSIC_N {
        return Err(Error::Input(format!(
            "need at least {} rows, got {}",
            crate::independence::hsic::MIN_HSIC_N,
            data.n()
        )));
    }
    let be = SampleBackend::new(data, cfg.hsic_options());
    discover_with(&be, data.names(), cfg)
}

/// Runs all three stages on exact cumulants of `model`.
pub fn discover_population(model: &ModelSpec, cfg: &Config) -> Result<DiscoveryResult> {
    cfg.validate()?;
    let be = PopulationBackend::new(model)?;
    discover_with(&be, &model.observed_names, cfg)
}

/// Runs all three stages against any evidence backend.
pub fn discover_with(be: &dyn Backend, names: &[String], cfg: &Config) -> Result<DiscoveryResult> {
    if names.len() != be.p() {
        return Err(Error::Dimension(format!(
            "{} names for {} columns",
            names.len(),
            be.p()
        )));
    }
    if names.is_empty() {
        return Err(Error::Input("no observed variables".into()));
    }
    let start = Instant::now();
    let s1 = estimate_over_segmented_clusters(be, cfg)?;
    let s2 = latent_ancestry(be, &s1, cfg)?;
    let (adj, stage3_notes) = latent_adjacency(be, &s2.clusters, &s2.anc, cfg)?;

    let name = |i: usize| names[i].clone();
    let named = |c: &Vec<usize>| c.iter().map(|&i| name(i)).collect::<Vec<_>>();
    let latent_edges = adj
        .edges()
        .into_iter()
        .map(|(pa, ch, a)| (pa + 1, ch + 1, a))
        .collect();
    let latent_ancestry: BTreeMap<String, Vec<String>> = s2
        .anc
        .anc
        .iter()
        .enumerate()
        .map(|(k, set)| {
            (
                latent_name(k),
                set.iter().map(|&a| latent_name(a)).collect(),
            )
        })
        .collect();
    let observed_ancestry: BTreeMap<String, Vec<String>> = s1
        .anc
        .anc
        .iter()
        .enumerate()
        .map(|(d, set)| (name(d), set.iter().map(|&a| name(a)).collect()))
        .collect();
    Ok(DiscoveryResult {
        observed: names.to_vec(),
        clusters: s2.clusters.clusters.iter().map(named).collect(),
        representatives: s2
            .clusters
            .representatives
            .iter()
            .map(|&r| name(r))
            .collect(),
        latent_edges,
        latent_order: s2.anc.order.iter().map(|&k| latent_name(k)).collect(),
        latent_ancestry,
        observed_ancestry,
        diagnostics: Diagnostics {
            stage1: s1.diagnostics,
            stage2: s2.diagnostics,
            stage3: stage3_notes,
            pair_evidence: s1.pairs,
            source_scores: s2.scores,
            stage1_clusters: s1.clusters.clusters.iter().map(named).collect(),
        },
        config: cfg.clone(),
        runtime_ms: start.elapsed().as_millis() as u64,
    })
}
