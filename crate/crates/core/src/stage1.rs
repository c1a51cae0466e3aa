//! Over-segmented clusters and ancestral relations among observed variables.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::backend::Backend;
use crate::config::Config;
use crate::cumulants::matrix::{confounders_and_direction, Direction};
use crate::error::{Error, Result};
use crate::independence::{dependence_partition, triad_constraint_holds};

/// Clusters of observed columns, each standing for one latent parent.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterSet {
    /// Sorted members; the position is the latent id.
    pub clusters: Vec<Vec<usize>>,
    /// Member without ancestors inside its cluster.
    pub representatives: Vec<usize>,
}

impl ClusterSet {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Latent id of the cluster containing column `x`.
    pub fn cluster_of(&self, x: usize) -> Option<usize> {
        self.clusters.iter().position(|c| c.contains(&x))
    }
}

/// Observed ancestors of each observed column.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AncestralO {
    pub anc: Vec<BTreeSet<usize>>,
}

impl AncestralO {
    pub fn new(p: usize) -> Self {
        AncestralO {
            anc: vec![BTreeSet::new(); p],
        }
    }

    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        self.anc[b].contains(&a)
    }

    /// Adds every pair implied by transitivity.
    pub fn close(&mut self) {
        let p = self.anc.len();
        for k in 0..p {
            for j in 0..p {
                if self.anc[j].contains(&k) {
                    let extra: Vec<usize> = self.anc[k].iter().copied().collect();
                    self.anc[j].extend(extra);
                }
            }
        }
    }

    /// `(ancestor, descendant)` pairs in lexicographic order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self
            .anc
            .iter()
            .enumerate()
            .flat_map(|(d, set)| set.iter().map(move |&a| (a, d)))
            .collect();
        out.sort_unstable();
        out
    }
}

/// Evidence gathered for one dependent pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairEvidence {
    pub i: usize,
    pub j: usize,
    pub triad: bool,
    pub direction: Option<Direction>,
    pub ell: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Stage1 {
    pub clusters: ClusterSet,
    pub anc: AncestralO,
    pub pairs: Vec<PairEvidence>,
    pub diagnostics: Vec<String>,
}

/// The member of `cluster` with no ancestors inside it; the lowest index
/// wins when several qualify.
pub fn cluster_representative(cluster: &[usize], anc: &AncestralO) -> Result<usize> {
    cluster
        .iter()
        .copied()
        .filter(|&x| !cluster.iter().any(|&y| y != x && anc.is_ancestor(y, x)))
        .min()
        .ok_or_else(|| {
            Error::CyclicEvidence(format!(
                "every member of {cluster:?} has an ancestor in the cluster"
            ))
        })
}

fn pair_evidence(
    be: &dyn Backend,
    i: usize,
    j: usize,
    component: &[usize],
    cfg: &Config,
) -> Result<(PairEvidence, Option<String>)> {
    let others: Vec<usize> = component
        .iter()
        .copied()
        .filter(|&k| k != i && k != j)
        .collect();
    let triad = triad_constraint_holds(be, i, j, &others, cfg)?;
    let (xi, xj) = (be.column(i), be.column(j));
    let (direction, ell, note) = match confounders_and_direction(be, &xi, &xj, cfg.ell_max, cfg) {
        Ok(cc) => (Some(cc.direction), Some(cc.ell), None),
        Err(Error::LatentBound(b)) => (
            None,
            None,
            Some(format!(
                "pair ({i}, {j}): no confounder count up to {b} fits"
            )),
        ),
        Err(e) => return Err(e),
    };
    Ok((
        PairEvidence {
            i,
            j,
            triad,
            direction,
            ell,
        },
        note,
    ))
}

/// Stage I: merges dependent pairs that satisfy the triad constraint or show
/// an ancestral relation, closes the ancestral relation, and picks
/// representatives.
///
/// Triad checks run against the other members of the pair's dependence
/// component; columns outside it carry no information about the pair.
pub fn estimate_over_segmented_clusters(be: &dyn Backend, cfg: &Config) -> Result<Stage1> {
    let p = be.p();
    let columns: Vec<_> = (0..p).map(|i| be.column(i)).collect();
    let components = dependence_partition(be, &columns)?;

    let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
    for (ci, comp) in components.iter().enumerate() {
        for (a, &i) in comp.iter().enumerate() {
            for &j in &comp[a + 1..] {
                candidates.push((i, j, ci));
            }
        }
    }
    let mut checked: Vec<(usize, usize, usize)> = Vec::new();
    for (i, j, ci) in candidates {
        if !be.independent(&columns[i], &columns[j])? {
            checked.push((i, j, ci));
        }
    }
    let evidence: Vec<Result<(PairEvidence, Option<String>)>> = checked
        .par_iter()
        .map(|&(i, j, ci)| pair_evidence(be, i, j, &components[ci], cfg))
        .collect();

    let mut parent: Vec<usize> = (0..p).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut anc = AncestralO::new(p);
    let mut pairs = Vec::with_capacity(evidence.len());
    let mut diagnostics = Vec::new();
    for ev in evidence {
        let (ev, note) = ev?;
        diagnostics.extend(note);
        match ev.direction {
            Some(Direction::IToJ) => {
                anc.anc[ev.j].insert(ev.i);
            }
            Some(Direction::JToI) => {
                anc.anc[ev.i].insert(ev.j);
            }
            _ => {}
        }
        if ev.triad || matches!(ev.direction, Some(Direction::IToJ | Direction::JToI)) {
            let (ri, rj) = (find(&mut parent, ev.i), find(&mut parent, ev.j));
            parent[ri.max(rj)] = ri.min(rj);
        }
        pairs.push(ev);
    }
    anc.close();

    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; p];
    for x in 0..p {
        let r = find(&mut parent, x);
        if slot[r] == usize::MAX {
            slot[r] = clusters.len();
            clusters.push(Vec::new());
        }
        clusters[slot[r]].push(x);
    }
    let mut representatives = Vec::with_capacity(clusters.len());
    for c in &clusters {
        representatives.push(match cluster_representative(c, &anc) {
            Ok(r) => r,
            Err(e) => {
                diagnostics.push(format!("{e}; using X{}", c[0]));
                c[0]
            }
        });
    }
    Ok(Stage1 {
        clusters: ClusterSet {
            clusters,
            representatives,
        },
        anc,
        pairs,
        diagnostics,
    })
}
