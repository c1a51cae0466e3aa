//! Cumulant matrices of a pair of series, their numeric rank, and the
//! confounder count / direction read off those ranks.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, Series};
use crate::config::Config;
use crate::cumulants::estimator::MAX_ORDER;
use crate::error::{Error, Result};

/// Number of rows of the order-(k1..=k2) cumulant matrix.
pub fn matrix_rows(k1: usize, k2: usize) -> usize {
    (1..=(k2 - k1 + 1)).sum()
}

/// `(k1, k2)` used when testing for `ell` confounders: `k1 = ell + 2` and the
/// smallest `k2` giving at least `ell + 2` rows.
pub fn orders_for(ell: usize) -> Result<(usize, usize)> {
    let k1 = ell + 2;
    let mut k2 = k1 + 1;
    while matrix_rows(k1, k2) < k1 {
        k2 += 1;
    }
    if k2 > MAX_ORDER {
        return Err(Error::LatentBound(ell));
    }
    Ok((k1, k2))
}

/// Cumulant matrix anchored on `a`.
///
/// Band `r = 0..=k2-k1` holds cumulants of order `k1 + r` in `r + 1` rows; row
/// `t` of a band has a prefix with `r - t` copies of `a` then `t` copies of `b`.
/// Column `c = 0..k1` appends `k1 - c` copies of `a` and `c` copies of `b`, so
/// the entry is the cumulant with `t + c` copies of `b`, never zero copies of `a`.
///
/// With `b` not an ancestor of `a` and `ell` confounders, the rank is
/// `min(ell + 1, m)`; the matrix anchored on `b` instead has rank
/// `min(ell + 2, m)` exactly when `a` has a total effect on `b`.
pub fn cumulant_matrix(
    be: &dyn Backend,
    a: &Series,
    b: &Series,
    k1: usize,
    k2: usize,
) -> Result<DMatrix<f64>> {
    if k1 < 2 || k2 <= k1 {
        return Err(Error::Input(format!("need 2 <= k1 < k2, got ({k1}, {k2})")));
    }
    if k2 > MAX_ORDER {
        return Err(Error::Order(k2));
    }
    let rows = matrix_rows(k1, k2);
    let mut m = DMatrix::zeros(rows, k1);
    let mut row = 0;
    for r in 0..=(k2 - k1) {
        for t in 0..=r {
            for c in 0..k1 {
                let nb = t + c;
                m[(row, c)] = be.pair_cumulant(a, b, k1 + r - nb, nb)?;
            }
            row += 1;
        }
    }
    Ok(m)
}

/// [`cumulant_matrix`] of `a / sd(a)` and `b / sd(b)`. Ranks are unchanged;
/// relative singular values no longer depend on the units of either series.
pub fn scaled_cumulant_matrix(
    be: &dyn Backend,
    a: &Series,
    b: &Series,
    k1: usize,
    k2: usize,
) -> Result<DMatrix<f64>> {
    let mut m = cumulant_matrix(be, a, b, k1, k2)?;
    let sa = be.pair_cumulant(a, a, 2, 0)?.sqrt();
    let sb = be.pair_cumulant(b, b, 2, 0)?.sqrt();
    if !(sa > 0.0 && sb > 0.0) {
        return Err(Error::Singular(format!(
            "zero variance (sd {sa:.3e}, {sb:.3e})"
        )));
    }
    let mut row = 0;
    for r in 0..=(k2 - k1) {
        for t in 0..=r {
            for c in 0..k1 {
                let nb = t + c;
                m[(row, c)] /= sa.powi((k1 + r - nb) as i32) * sb.powi(nb as i32);
            }
            row += 1;
        }
    }
    Ok(m)
}

/// Singular values in decreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut sv: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Count of singular values with `sigma_r / sigma_1 > tau_s`; zero when
/// `sigma_1 <= abs_floor`.
pub fn numeric_rank(m: &DMatrix<f64>, tau_s: f64, abs_floor: f64) -> usize {
    let sv = singular_values(m);
    match sv.first() {
        Some(&s1) if s1 > abs_floor => sv.iter().filter(|&&s| s / s1 > tau_s).count(),
        _ => 0,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    None,
    IToJ,
    JToI,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ConfounderCount {
    pub ell: usize,
    pub direction: Direction,
    /// Rank of the matrix anchored on `i`.
    pub rank_ij: usize,
    /// Rank of the matrix anchored on `j`.
    pub rank_ji: usize,
}

/// Smallest confounder count consistent with the ranks of both anchored
/// matrices, and the direction of any total effect between the pair.
pub fn confounders_and_direction(
    be: &dyn Backend,
    a: &Series,
    b: &Series,
    ell_max: usize,
    cfg: &Config,
) -> Result<ConfounderCount> {
    for ell in 0..=ell_max {
        let (k1, k2) = orders_for(ell)?;
        let build = if cfg.rank_scaling {
            scaled_cumulant_matrix
        } else {
            cumulant_matrix
        };
        let rank_ij = numeric_rank(&build(be, a, b, k1, k2)?, cfg.tau_s, cfg.abs_sv_floor);
        let rank_ji = numeric_rank(&build(be, b, a, k1, k2)?, cfg.tau_s, cfg.abs_sv_floor);
        if rank_ij.min(rank_ji) <= ell + 1 {
            // Only a rank above `ell + 1` is evidence of a total effect; a rank
            // below it on one side says nothing about direction.
            let direction = match (rank_ij <= ell + 1, rank_ji <= ell + 1) {
                (true, false) => Direction::IToJ,
                (false, true) => Direction::JToI,
                _ => Direction::None,
            };
            return Ok(ConfounderCount {
                ell,
                direction,
                rank_ij,
                rank_ji,
            });
        }
    }
    Err(Error::LatentBound(ell_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orders_and_shapes() {
        assert_eq!(orders_for(0).unwrap(), (2, 3));
        assert_eq!(orders_for(1).unwrap(), (3, 4));
        assert_eq!(orders_for(2).unwrap(), (4, 6));
        assert!(matches!(orders_for(3), Err(Error::LatentBound(3))));
        assert_eq!(matrix_rows(2, 3), 3);
        assert_eq!(matrix_rows(4, 6), 6);
    }

    #[test]
    fn rank_examples() {
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1e-9]));
        assert_eq!(numeric_rank(&d, 1e-3, 1e-12), 1);
        assert_eq!(
            numeric_rank(&DMatrix::<f64>::identity(3, 3), 1e-3, 1e-12),
            3
        );
        assert_eq!(numeric_rank(&DMatrix::<f64>::zeros(3, 2), 1e-3, 1e-12), 0);
    }
}
