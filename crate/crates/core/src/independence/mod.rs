//! Independence evidence and the de-confounding statistics built on it.

pub mod hsic;

use crate::backend::{Backend, Series};
use crate::config::Config;
use crate::error::{Error, Result};

pub use hsic::{hsic_test, HsicOptions, HsicResult};

/// Connected components of the pairwise-dependence graph over `series`,
/// as sorted index lists ordered by their smallest member.
pub fn dependence_partition(be: &dyn Backend, series: &[Series]) -> Result<Vec<Vec<usize>>> {
    let n = series.len();
    let mut comp: Vec<usize> = (0..n).collect();
    fn find(comp: &mut [usize], mut x: usize) -> usize {
        while comp[x] != x {
            comp[x] = comp[comp[x]];
            x = comp[x];
        }
        x
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if find(&mut comp, a) == find(&mut comp, b) {
                continue;
            }
            if !be.independent(&series[a], &series[b])? {
                let (ra, rb) = (find(&mut comp, a), find(&mut comp, b));
                comp[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for x in 0..n {
        let r = find(&mut comp, x);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(x);
    }
    Ok(groups)
}

/// `X_i - Cov(X_i, X_k) / Cov(X_j, X_k) * X_j`.
pub fn triad_statistic(
    be: &dyn Backend,
    i: usize,
    j: usize,
    k: usize,
    cfg: &Config,
) -> Result<Series> {
    let (xi, xj, xk) = (be.column(i), be.column(j), be.column(k));
    let cov_jk = be.covariance(&xj, &xk)?;
    let sd = (be.covariance(&xj, &xj)? * be.covariance(&xk, &xk)?).sqrt();
    if !(cov_jk.abs() > cfg.cov_floor * sd) {
        return Err(Error::DegenerateTriad(format!(
            "Cov(X{j}, X{k}) = {cov_jk:.3e}"
        )));
    }
    let ratio = be.covariance(&xi, &xk)? / cov_jk;
    Ok(xi.residual(&[(ratio, &xj)]))
}

/// Whether the triad statistic of `(i, j)` is independent of every `X_k` in
/// `others`. A degenerate triad counts as a failure.
pub fn triad_constraint_holds(
    be: &dyn Backend,
    i: usize,
    j: usize,
    others: &[usize],
    cfg: &Config,
) -> Result<bool> {
    for &k in others {
        let e = match triad_statistic(be, i, j, k, cfg) {
            Ok(e) => e,
            Err(Error::DegenerateTriad(_)) => return Ok(false),
            Err(e) => return Err(e),
        };
        if !be.independent(&e, &be.column(k))? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `cum(x, x, h, h) / cum(x, h, h, h)`, or 0 when `x` and `h` test independent.
pub fn rho(be: &dyn Backend, x: &Series, h: &Series, cfg: &Config) -> Result<f64> {
    if be.independent(x, h)? {
        return Ok(0.0);
    }
    let num = be.pair_cumulant(x, h, 2, 2)?;
    let den = be.pair_cumulant(x, h, 1, 3)?;
    let scale = (be.covariance(x, x)?.sqrt()) * be.covariance(h, h)?.powf(1.5);
    if !(den.abs() > cfg.ratio_floor * scale) {
        return Err(Error::RhoUndefined(format!(
            "fourth-order cross cumulant {den:.3e}"
        )));
    }
    Ok(num / den)
}

/// `x - sum_h rho(x, e_h) e_h` over the already built statistics `prior`.
pub fn tilde_e(be: &dyn Backend, x: &Series, prior: &[Series], cfg: &Config) -> Result<Series> {
    if prior.is_empty() {
        return Ok(x.clone());
    }
    let coeffs = prior
        .iter()
        .map(|h| rho(be, x, h, cfg))
        .collect::<Result<Vec<f64>>>()?;
    let terms: Vec<(f64, &Series)> = coeffs
        .into_iter()
        .zip(prior)
        .filter(|(c, _)| *c != 0.0)
        .collect();
    if terms.is_empty() {
        return Ok(x.clone());
    }
    Ok(x.residual(&terms))
}
