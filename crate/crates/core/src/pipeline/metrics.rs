//! Comparison of a discovery result against a ground-truth model.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{total_effects, ModelSpec};
use crate::pipeline::result::DiscoveryResult;

/// Edge metrics are `None` unless the clusters are exactly right.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Metrics {
    pub cl_exact: bool,
    pub ls_exact: bool,
    pub os_exact: bool,
    pub cs_exact: bool,
    pub pre_ll: Option<f64>,
    pub rec_ll: Option<f64>,
    pub f1_ll: Option<f64>,
    pub pre_oo: Option<f64>,
    pub rec_oo: Option<f64>,
    pub f1_oo: Option<f64>,
}

/// Precision, recall and F1; an empty prediction of an empty truth scores 1.
pub fn precision_recall_f1<T: Ord>(est: &BTreeSet<T>, truth: &BTreeSet<T>) -> (f64, f64, f64) {
    let tp = est.intersection(truth).count() as f64;
    let pre = if est.is_empty() {
        if truth.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        tp / est.len() as f64
    };
    let rec = if truth.is_empty() {
        if est.is_empty() {
            1.0
        } else {
            0.0
        }
    } else {
        tp / truth.len() as f64
    };
    let f1 = if pre + rec == 0.0 {
        0.0
    } else {
        2.0 * pre * rec / (pre + rec)
    };
    (pre, rec, f1)
}

pub fn evaluate(result: &DiscoveryResult, truth: &ModelSpec) -> Result<Metrics> {
    if result.observed.len() != truth.p() {
        return Err(Error::Dimension(format!(
            "result has {} observed variables, truth has {}",
            result.observed.len(),
            truth.p()
        )));
    }
    let eff = total_effects(truth)?;
    let p = truth.p();
    let true_oo: BTreeSet<(usize, usize)> = (0..p)
        .flat_map(|d| (0..p).map(move |a| (a, d)))
        .filter(|&(a, d)| a != d && eff.alpha_oo[(d, a)] != 0.0)
        .collect();
    let est_oo: BTreeSet<(usize, usize)> = result.observed_ancestral_pairs().into_iter().collect();
    let os_exact = est_oo == true_oo;

    let true_clusters = truth.clusters();
    let est_clusters = result.cluster_indices();
    let mapping: Vec<Option<usize>> = est_clusters
        .iter()
        .map(|c| {
            let s: BTreeSet<usize> = c.iter().copied().collect();
            true_clusters
                .iter()
                .position(|t| t.iter().copied().collect::<BTreeSet<_>>() == s)
        })
        .collect();
    let cl_exact = est_clusters.len() == true_clusters.len() && mapping.iter().all(Option::is_some);
    if !cl_exact {
        return Ok(Metrics {
            cl_exact,
            ls_exact: false,
            os_exact,
            cs_exact: false,
            pre_ll: None,
            rec_ll: None,
            f1_ll: None,
            pre_oo: None,
            rec_oo: None,
            f1_oo: None,
        });
    }
    let q = truth.q();
    let true_ll: BTreeSet<(usize, usize)> = (0..q)
        .flat_map(|c| (0..q).map(move |pa| (pa, c)))
        .filter(|&(pa, c)| truth.a[(c, pa)] != 0.0)
        .collect();
    let est_ll: BTreeSet<(usize, usize)> = result
        .latent_edges
        .iter()
        .filter_map(|&(pa, c, _)| {
            Some((
                mapping.get(pa.checked_sub(1)?)?.as_ref().copied()?,
                mapping.get(c.checked_sub(1)?)?.as_ref().copied()?,
            ))
        })
        .collect();
    let ls_exact = est_ll == true_ll;
    let (pre_ll, rec_ll, f1_ll) = precision_recall_f1(&est_ll, &true_ll);
    let (pre_oo, rec_oo, f1_oo) = precision_recall_f1(&est_oo, &true_oo);
    Ok(Metrics {
        cl_exact,
        ls_exact,
        os_exact,
        cs_exact: ls_exact && os_exact,
        pre_ll: Some(pre_ll),
        rec_ll: Some(rec_ll),
        f1_ll: Some(f1_ll),
        pre_oo: Some(pre_oo),
        rec_oo: Some(rec_oo),
        f1_oo: Some(f1_oo),
    })
}
