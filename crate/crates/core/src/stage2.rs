//! Latent sources, cluster merging and the causal order among latents.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::backend::{Backend, Series};
use crate::config::Config;
use crate::cumulants::roots::{latent_cumulants, total_effect_roots};
use crate::cumulants::single::single_confounder_test;
use crate::error::{Error, Result};
use crate::independence::{dependence_partition, tilde_e};
use crate::stage1::{cluster_representative, AncestralO, ClusterSet, Stage1};

/// Evidence for one latent being a source at one recursion level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceCandidateScore {
    /// Stage I cluster id.
    pub latent_id: usize,
    pub depth: usize,
    pub representative: usize,
    /// `c^(k)` values against the dependent representatives of other clusters.
    pub cumulant_values: Vec<f64>,
    /// Candidate values from the within-cluster partner.
    pub partner_values: Vec<f64>,
    pub s2: Option<f64>,
    /// Spread under the other candidate of an ambiguous partner system.
    pub s2_alt: Option<f64>,
    pub eligible: bool,
    pub accepted: bool,
    pub reason: String,
}

/// Latent ancestors of each latent, with a topological order.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AncestralL {
    pub anc: Vec<BTreeSet<usize>>,
    pub order: Vec<usize>,
}

impl AncestralL {
    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        self.anc[b].contains(&a)
    }
}

#[derive(Clone, Debug)]
pub struct Stage2 {
    pub clusters: ClusterSet,
    pub anc: AncestralL,
    pub scores: Vec<SourceCandidateScore>,
    pub diagnostics: Vec<String>,
}

/// Population variance of `values` (mean of squared deviations).
pub fn cumulant_match_score(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

fn recoverable(e: &Error) -> bool {
    !matches!(
        e,
        Error::Invariant(_) | Error::Order(_) | Error::Input(_) | Error::Dimension(_)
    )
}

struct Search<'a> {
    be: &'a dyn Backend,
    cfg: &'a Config,
    stage1: &'a Stage1,
    merged: Vec<usize>,
    anc: Vec<BTreeSet<usize>>,
    scores: Vec<SourceCandidateScore>,
    diagnostics: Vec<String>,
    extractions: usize,
}

enum Outcome {
    Accept(String),
    Reject(String),
}

impl<'a> Search<'a> {
    fn new(be: &'a dyn Backend, stage1: &'a Stage1, cfg: &'a Config) -> Self {
        let k = stage1.clusters.len();
        Search {
            be,
            cfg,
            stage1,
            merged: (0..k).collect(),
            anc: vec![BTreeSet::new(); k],
            scores: Vec::new(),
            diagnostics: Vec::new(),
            extractions: 0,
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.merged[x] != x {
            self.merged[x] = self.merged[self.merged[x]];
            x = self.merged[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        self.merged[ra.max(rb)] = ra.min(rb);
    }

    fn rep(&self, c: usize) -> usize {
        self.stage1.clusters.representatives[c]
    }

    /// Member of cluster `c` used as the within-cluster partner: a
    /// non-descendant of the representative when one exists.
    fn partner(&self, c: usize) -> Option<usize> {
        let rep = self.rep(c);
        let others: Vec<usize> = self.stage1.clusters.clusters[c]
            .iter()
            .copied()
            .filter(|&x| x != rep)
            .collect();
        others
            .iter()
            .copied()
            .find(|&x| !self.stage1.anc.is_ancestor(rep, x))
            .or_else(|| others.first().copied())
    }

    fn evaluate(
        &self,
        c: usize,
        comp: &[usize],
        e: &Series,
        depth: usize,
        score: &mut SourceCandidateScore,
    ) -> Result<Outcome> {
        let (be, cfg) = (self.be, self.cfg);
        let partner = self.partner(c);
        if comp.len() == 1 {
            return Ok(Outcome::Accept(
                "only representative in its component".into(),
            ));
        }
        if partner.is_none() && comp.len() == 2 {
            return Ok(Outcome::Accept(
                "single remaining partner and singleton cluster".into(),
            ));
        }
        let mut dependent = Vec::new();
        for &o in comp.iter().filter(|&&o| o != c) {
            let xj = be.column(self.rep(o));
            if !be.independent(e, &xj)? {
                dependent.push(xj);
            }
        }
        for xj in &dependent {
            let single = match single_confounder_test(be, e, xj, cfg) {
                Ok(b) => b,
                Err(Error::Undetermined(_)) => false,
                Err(err) if recoverable(&err) => false,
                Err(err) => return Err(err),
            };
            if !single {
                let j = xj.as_column().unwrap_or(usize::MAX);
                return Ok(Outcome::Reject(format!(
                    "more than one confounder or a directed path with X{j}"
                )));
            }
        }
        score.eligible = true;
        for xj in &dependent {
            let roots = total_effect_roots(be, e, xj, 1, cfg)?;
            let sol = latent_cumulants(be, e, xj, &roots, cfg.k_match, false, cfg)?;
            score.cumulant_values.push(sol.solutions[0][1]);
        }
        if let Some(xp) = partner {
            let xps = be.column(xp);
            if !be.independent(e, &xps)? {
                let rep = self.rep(c);
                let descendant = self.stage1.anc.is_ancestor(rep, xp);
                let residualized = e.as_column().is_none();
                let ell = if descendant && residualized { 2 } else { 1 };
                let ambiguous = descendant && ell == 1;
                let roots = total_effect_roots(be, e, &xps, ell, cfg)?;
                let sol = latent_cumulants(be, e, &xps, &roots, cfg.k_match, ambiguous, cfg)?;
                score.partner_values = sol.confounder_candidates();
            }
        }
        let mut spreads: Vec<f64> = if score.partner_values.is_empty() {
            vec![cumulant_match_score(&score.cumulant_values)]
        } else {
            score
                .partner_values
                .iter()
                .map(|&v| {
                    let mut all = score.cumulant_values.clone();
                    all.push(v);
                    cumulant_match_score(&all)
                })
                .collect()
        };
        spreads.sort_by(f64::total_cmp);
        score.s2 = spreads.first().copied();
        score.s2_alt = spreads.get(1).copied();
        let s2 = score.s2.unwrap_or(0.0);
        let tau = cfg.tau_m(depth);
        Ok(if s2 < tau {
            Outcome::Accept(format!("s2 {s2:.3e} below {tau:.3e}"))
        } else {
            Outcome::Reject(format!("s2 {s2:.3e} not below {tau:.3e}"))
        })
    }

    fn score(
        &mut self,
        c: usize,
        comp: &[usize],
        prior: &[Series],
        depth: usize,
    ) -> Result<(SourceCandidateScore, Option<Series>)> {
        let mut score = SourceCandidateScore {
            latent_id: c,
            depth,
            representative: self.rep(c),
            cumulant_values: Vec::new(),
            partner_values: Vec::new(),
            s2: None,
            s2_alt: None,
            eligible: false,
            accepted: false,
            reason: String::new(),
        };
        let x = self.be.column(self.rep(c));
        let e = match tilde_e(self.be, &x, prior, self.cfg) {
            Ok(e) => e,
            Err(err) if recoverable(&err) => {
                score.reason = err.to_string();
                return Ok((score, None));
            }
            Err(err) => return Err(err),
        };
        match self.evaluate(c, comp, &e, depth, &mut score) {
            Ok(Outcome::Accept(why)) => {
                score.eligible = true;
                score.accepted = true;
                score.reason = why;
            }
            Ok(Outcome::Reject(why)) => score.reason = why,
            Err(err) if recoverable(&err) => score.reason = err.to_string(),
            Err(err) => return Err(err),
        }
        Ok((score, Some(e)))
    }

    /// One source search over a mutually dependent set of Stage I clusters,
    /// followed by recursion into the conditionally dependent remainder.
    fn search(&mut self, comp: Vec<usize>, prior: Vec<Series>, depth: usize) -> Result<()> {
        if comp.is_empty() {
            return Ok(());
        }
        self.extractions += 1;
        if self.extractions > self.stage1.clusters.len() {
            return Err(Error::Invariant(
                "source search exceeded the number of clusters".into(),
            ));
        }
        let mut accepted: Vec<(usize, Series)> = Vec::new();
        for &c in &comp {
            let (score, e) = self.score(c, &comp, &prior, depth)?;
            if score.accepted {
                accepted.push((c, e.expect("accepted candidates carry a series")));
            }
            self.scores.push(score);
        }
        if accepted.is_empty() {
            self.diagnostics.push(format!(
                "no-source: no latent source among clusters {:?} at depth {depth}; component aborted",
                comp
            ));
            return Ok(());
        }

        for a in 0..accepted.len() {
            for b in (a + 1)..accepted.len() {
                let (ca, cb) = (accepted[a].0, accepted[b].0);
                let (xa, xb) = (self.be.column(self.rep(ca)), self.be.column(self.rep(cb)));
                if !self.be.independent(&accepted[a].1, &xb)?
                    || !self.be.independent(&accepted[b].1, &xa)?
                {
                    self.union(ca, cb);
                }
            }
        }
        // One series per merged source: the member with the lowest representative.
        let mut groups: Vec<(usize, usize, Series)> = Vec::new();
        for (c, e) in &accepted {
            let root = self.find(*c);
            match groups.iter_mut().find(|g| g.0 == root) {
                Some(g) => {
                    if self.rep(*c) < self.rep(g.1) {
                        g.1 = *c;
                        g.2 = e.clone();
                    }
                }
                None => groups.push((root, *c, e.clone())),
            }
        }
        if groups.len() < accepted.len() {
            self.diagnostics.push(format!(
                "merged source clusters {:?} at depth {depth}",
                accepted.iter().map(|a| a.0).collect::<Vec<_>>()
            ));
        }

        let sources: BTreeSet<usize> = accepted.iter().map(|a| a.0).collect();
        let remaining: Vec<usize> = comp
            .iter()
            .copied()
            .filter(|c| !sources.contains(c))
            .collect();
        for &(root, _, ref e) in &groups {
            let inherited: Vec<usize> = self.anc[root].iter().copied().collect();
            for &r in &remaining {
                if !self.be.independent(e, &self.be.column(self.rep(r)))? {
                    self.anc[r].insert(root);
                    self.anc[r].extend(inherited.iter().copied());
                }
            }
        }
        if remaining.is_empty() {
            return Ok(());
        }

        let mut next_prior = prior;
        next_prior.extend(groups.iter().map(|g| g.2.clone()));
        let mut tildes = Vec::with_capacity(remaining.len());
        for &r in &remaining {
            let x = self.be.column(self.rep(r));
            tildes.push(match tilde_e(self.be, &x, &next_prior, self.cfg) {
                Ok(e) => e,
                Err(err) if recoverable(&err) => {
                    self.diagnostics
                        .push(format!("cluster {r}: {err}; using the raw representative"));
                    x
                }
                Err(err) => return Err(err),
            });
        }
        let n = remaining.len();
        let mut link = vec![vec![false; n]; n];
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    let xb = self.be.column(self.rep(remaining[b]));
                    link[a][b] = !self.be.independent(&tildes[a], &xb)?;
                }
            }
        }
        for part in components(&link) {
            let sub: Vec<usize> = part.iter().map(|&a| remaining[a]).collect();
            self.search(sub, next_prior.clone(), depth + 1)?;
        }
        Ok(())
    }
}

/// Connected components of a directed link matrix taken as undirected.
fn components(link: &[Vec<bool>]) -> Vec<Vec<usize>> {
    let n = link.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        let mut stack = vec![s];
        let mut part = Vec::new();
        seen[s] = true;
        while let Some(a) = stack.pop() {
            part.push(a);
            for b in 0..n {
                if !seen[b] && (link[a][b] || link[b][a]) {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        part.sort_unstable();
        out.push(part);
    }
    out
}

/// Topological order of `anc` (lowest id first among ready nodes), or `None`
/// on a cycle.
pub fn order_from_ancestors(anc: &[BTreeSet<usize>]) -> Option<Vec<usize>> {
    let n = anc.len();
    let mut done = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let next = (0..n).find(|&v| !done[v] && anc[v].iter().all(|&a| done[a]))?;
        done[next] = true;
        order.push(next);
    }
    Some(order)
}

fn close(anc: &mut [BTreeSet<usize>]) {
    let n = anc.len();
    for k in 0..n {
        for j in 0..n {
            if anc[j].contains(&k) {
                let extra: Vec<usize> = anc[k].iter().copied().collect();
                anc[j].extend(extra);
            }
        }
    }
}

/// Runs the recursive source search on every dependence component of the
/// Stage I representatives, merges clusters found to share a latent, and
/// returns the final clusters with their latent ancestral relations.
pub fn latent_ancestry(be: &dyn Backend, stage1: &Stage1, cfg: &Config) -> Result<Stage2> {
    let mut search = Search::new(be, stage1, cfg);
    let reps: Vec<Series> = stage1
        .clusters
        .representatives
        .iter()
        .map(|&r| be.column(r))
        .collect();
    for comp in dependence_partition(be, &reps)? {
        search.search(comp, Vec::new(), 0)?;
    }
    finish(search, &stage1.anc)
}

/// First-level source search over the Stage I clusters `xoc`; the recursion
/// into later levels is included.
pub fn find_initial_sources(
    be: &dyn Backend,
    xoc: &[usize],
    stage1: &Stage1,
    cfg: &Config,
) -> Result<Stage2> {
    let mut search = Search::new(be, stage1, cfg);
    search.search(xoc.to_vec(), Vec::new(), 0)?;
    finish(search, &stage1.anc)
}

/// Source search over `xoc` after the sources whose statistics make up
/// `tilde_list` have been removed.
pub fn find_subsequent_sources(
    be: &dyn Backend,
    xoc: &[usize],
    tilde_list: &[Series],
    stage1: &Stage1,
    cfg: &Config,
) -> Result<Stage2> {
    let mut search = Search::new(be, stage1, cfg);
    search.search(xoc.to_vec(), tilde_list.to_vec(), 1)?;
    finish(search, &stage1.anc)
}

fn finish(mut search: Search<'_>, anc_o: &AncestralO) -> Result<Stage2> {
    let k = search.stage1.clusters.len();
    let roots: Vec<usize> = (0..k).map(|c| search.find(c)).collect();
    let mut members: Vec<(usize, Vec<usize>)> = Vec::new();
    for c in 0..k {
        let mut m = search.stage1.clusters.clusters[c].clone();
        match members.iter_mut().find(|g| g.0 == roots[c]) {
            Some(g) => g.1.append(&mut m),
            None => members.push((roots[c], m)),
        }
    }
    for g in &mut members {
        g.1.sort_unstable();
    }
    members.sort_by_key(|g| g.1[0]);
    let final_id = |root: usize| {
        members
            .iter()
            .position(|g| g.0 == root)
            .expect("root has a group")
    };

    let mut anc = vec![BTreeSet::new(); members.len()];
    for c in 0..k {
        let me = final_id(roots[c]);
        for &a in &search.anc[c] {
            let fa = final_id(roots[a]);
            if fa != me {
                anc[me].insert(fa);
            }
        }
    }
    close(&mut anc);
    let order = match order_from_ancestors(&anc) {
        Some(o) => o,
        None => {
            search.diagnostics.push(
                "latent ancestral relation is cyclic; order falls back to cluster ids".into(),
            );
            for (i, set) in anc.iter_mut().enumerate() {
                set.remove(&i);
            }
            (0..members.len()).collect()
        }
    };
    let mut representatives = Vec::with_capacity(members.len());
    for g in &members {
        representatives.push(cluster_representative(&g.1, anc_o).unwrap_or(g.1[0]));
    }
    Ok(Stage2 {
        clusters: ClusterSet {
            clusters: members.into_iter().map(|g| g.1).collect(),
            representatives,
        },
        anc: AncestralL { anc, order },
        scores: search.scores,
        diagnostics: search.diagnostics,
    })
}
