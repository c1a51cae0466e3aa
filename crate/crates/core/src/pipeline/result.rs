//! Serializable outcome of a discovery run.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::Result;
use crate::stage1::PairEvidence;
use crate::stage2::SourceCandidateScore;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub stage1: Vec<String>,
    pub stage2: Vec<String>,
    pub stage3: Vec<String>,
    pub pair_evidence: Vec<PairEvidence>,
    pub source_scores: Vec<SourceCandidateScore>,
    /// Stage I clusters before merging, as observed names.
    pub stage1_clusters: Vec<Vec<String>>,
}

/// Latents are named `L1..Lq` after their position in `clusters`;
/// `latent_edges` holds `[parent, child, coefficient]` with those 1-based
/// numbers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscoveryResult {
    pub observed: Vec<String>,
    pub clusters: Vec<Vec<String>>,
    pub representatives: Vec<String>,
    pub latent_edges: Vec<(usize, usize, f64)>,
    pub latent_order: Vec<String>,
    pub latent_ancestry: BTreeMap<String, Vec<String>>,
    pub observed_ancestry: BTreeMap<String, Vec<String>>,
    pub diagnostics: Diagnostics,
    pub config: Config,
    /// Wall-clock time; kept out of the JSON so output is reproducible.
    #[serde(skip)]
    pub runtime_ms: u64,
}

impl PartialEq for DiscoveryResult {
    fn eq(&self, other: &Self) -> bool {
        self.observed == other.observed
            && self.clusters == other.clusters
            && self.representatives == other.representatives
            && self.latent_edges == other.latent_edges
            && self.latent_order == other.latent_order
            && self.latent_ancestry == other.latent_ancestry
            && self.observed_ancestry == other.observed_ancestry
            && self.diagnostics == other.diagnostics
            && self.config == other.config
    }
}

pub fn latent_name(k: usize) -> String {
    format!("L{}", k + 1)
}

impl DiscoveryResult {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Clusters as observed column indices.
    pub fn cluster_indices(&self) -> Vec<Vec<usize>> {
        self.clusters
            .iter()
            .map(|c| c.iter().filter_map(|n| self.index_of(n)).collect())
            .collect()
    }

    /// `(ancestor, descendant)` pairs of observed column indices.
    pub fn observed_ancestral_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (d, ancs) in &self.observed_ancestry {
            if let Some(di) = self.index_of(d) {
                out.extend(
                    ancs.iter()
                        .filter_map(|a| self.index_of(a))
                        .map(|ai| (ai, di)),
                );
            }
        }
        out.sort_unstable();
        out
    }

    fn index_of(&self, name: &str) -> Option<usize> {
        self.observed.iter().position(|n| n == name)
    }
}
