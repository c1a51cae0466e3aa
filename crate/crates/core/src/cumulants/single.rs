//! Checks that a dependent pair shares exactly one confounder and no
//! directed path.

use crate::backend::{Backend, Series};
use crate::config::{Config, Variant};
use crate::cumulants::matrix::{confounders_and_direction, Direction};
use crate::error::{Error, Result};

/// `|c33^2 - c42 c24| / max(c33^2, |c42 c24|)` on sixth-order cumulants,
/// where `cNM` has `N` copies of `a` and `M` of `b`.
pub fn a7_ratio(be: &dyn Backend, a: &Series, b: &Series, cfg: &Config) -> Result<f64> {
    let c33 = be.pair_cumulant(a, b, 3, 3)?;
    let c42 = be.pair_cumulant(a, b, 4, 2)?;
    let c24 = be.pair_cumulant(a, b, 2, 4)?;
    let sq = c33 * c33;
    let prod = c42 * c24;
    let denom = sq.max(prod.abs());
    let va = be.pair_cumulant(a, a, 1, 1)?;
    let vb = be.pair_cumulant(b, b, 1, 1)?;
    if !(denom > cfg.ratio_floor * (va * vb).powi(3)) {
        return Err(Error::Undetermined(format!(
            "sixth-order cumulants vanish ({denom:.3e})"
        )));
    }
    Ok((sq - prod).abs() / denom)
}

/// Whether `a` and `b` share a single confounder and neither is an ancestor
/// of the other, using the variant selected in `cfg`.
///
/// An undetermined ratio is returned as `Error::Undetermined`.
pub fn single_confounder_test(
    be: &dyn Backend,
    a: &Series,
    b: &Series,
    cfg: &Config,
) -> Result<bool> {
    match cfg.variant {
        Variant::A7 => Ok(a7_ratio(be, a, b, cfg)? < cfg.tau_o),
        Variant::Rank => {
            let cc = confounders_and_direction(be, a, b, cfg.ell_max, cfg)?;
            Ok(cc.ell == 1 && cc.direction == Direction::None)
        }
    }
}
