//! Direct edges among latents, pruned from the ancestral relation by
//! residual independence tests.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::backend::{Backend, Series};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::independence::{rho, tilde_e};
use crate::stage1::ClusterSet;
use crate::stage2::AncestralL;

/// `adj[i][j]` is true iff `L_j -> L_i`; `coeff[i][j]` holds the estimate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatentAdjacency {
    pub adj: Vec<Vec<bool>>,
    pub coeff: Vec<Vec<f64>>,
}

impl LatentAdjacency {
    pub fn empty(q: usize) -> Self {
        LatentAdjacency {
            adj: vec![vec![false; q]; q],
            coeff: vec![vec![0.0; q]; q],
        }
    }

    pub fn parents(&self, i: usize) -> Vec<usize> {
        (0..self.adj.len()).filter(|&j| self.adj[i][j]).collect()
    }

    /// `(parent, child, coefficient)` in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let q = self.adj.len();
        let mut out = Vec::new();
        for j in 0..q {
            for i in 0..q {
                if self.adj[i][j] {
                    out.push((j, i, self.coeff[i][j]));
                }
            }
        }
        out
    }
}

/// Zero when `r` and `e` test independent, otherwise `rho(r, e)`.
pub fn estimate_latent_coefficient(
    be: &dyn Backend,
    r: &Series,
    e: &Series,
    cfg: &Config,
) -> Result<f64> {
    rho(be, r, e, cfg)
}

/// Members of `set` that are not ancestors of another member.
fn prune(set: BTreeSet<usize>, anc: &AncestralL) -> Vec<usize> {
    set.iter()
        .copied()
        .filter(|&k| !set.iter().any(|&h| h != k && anc.is_ancestor(k, h)))
        .collect()
}

/// Walks the ancestors of each latent from nearest to farthest, peeling each
/// detected parent's contribution off the residual of the representative.
pub fn latent_adjacency(
    be: &dyn Backend,
    clusters: &ClusterSet,
    anc: &AncestralL,
    cfg: &Config,
) -> Result<(LatentAdjacency, Vec<String>)> {
    let q = clusters.len();
    let mut out = LatentAdjacency::empty(q);
    let mut diagnostics = Vec::new();
    let xs: Vec<Series> = clusters
        .representatives
        .iter()
        .map(|&r| be.column(r))
        .collect();

    let mut tildes: Vec<Option<Series>> = vec![None; q];
    for &j in &anc.order {
        let prior: Vec<Series> = anc
            .order
            .iter()
            .filter(|h| anc.anc[j].contains(h))
            .map(|&h| tildes[h].clone().expect("ancestor built"))
            .collect();
        tildes[j] = Some(match tilde_e(be, &xs[j], &prior, cfg) {
            Ok(e) => e,
            Err(Error::RhoUndefined(m)) => {
                diagnostics.push(format!(
                    "L{j}: rho undefined ({m}); using the raw representative"
                ));
                xs[j].clone()
            }
            Err(e) => return Err(e),
        });
    }

    for &i in &anc.order {
        let mut r = xs[i].clone();
        let mut visited = BTreeSet::new();
        let mut open = prune(anc.anc[i].clone(), anc);
        while !open.is_empty() {
            let mut next = BTreeSet::new();
            for &j in &open {
                if !visited.insert(j) {
                    return Err(Error::Invariant(format!(
                        "adjacency traversal for L{i} revisited L{j}"
                    )));
                }
                next.extend(out.parents(j));
                let e = tildes[j].as_ref().expect("tilde built");
                let a = match estimate_latent_coefficient(be, &r, e, cfg) {
                    Ok(a) => a,
                    Err(Error::RhoUndefined(m)) => {
                        diagnostics.push(format!("L{j} -> L{i}: rho undefined ({m}); no edge"));
                        0.0
                    }
                    Err(err) => return Err(err),
                };
                if a != 0.0 {
                    out.adj[i][j] = true;
                    out.coeff[i][j] = a;
                    r = r.residual(&[(a, &xs[j])]);
                }
            }
            open = prune(next, anc);
        }
    }
    Ok((out, diagnostics))
}
