//! Total effects as polynomial roots, and latent cumulants from a
//! Vandermonde system in those roots.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::backend::{Backend, Series};
use crate::config::Config;
use crate::cumulants::matrix::{cumulant_matrix, orders_for, scaled_cumulant_matrix};
use crate::error::{Error, Result};

fn poly_eval(coeffs: &[f64], x: f64) -> (f64, f64) {
    // coeffs[d] multiplies x^d; returns (p(x), p'(x))
    let mut p = 0.0;
    let mut dp = 0.0;
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// Real roots of `sum(coeffs[d] x^d)` from companion-matrix eigenvalues,
/// polished by Newton steps. Imaginary parts up to `imag_tol` (relative to
/// `max(1, |root|)`) are dropped; larger ones are an error.
pub fn real_roots(coeffs: &[f64], imag_tol: f64) -> Result<Vec<f64>> {
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if deg == 0 || !(lead.abs() > 1e-12 * scale) {
        return Err(Error::DegeneratePolynomial(format!(
            "leading coefficient {lead:.3e}"
        )));
    }
    let mut companion = DMatrix::<f64>::zeros(deg, deg);
    for r in 1..deg {
        companion[(r, r - 1)] = 1.0;
    }
    for r in 0..deg {
        companion[(r, deg - 1)] = -coeffs[r] / lead;
    }
    let eig = companion.complex_eigenvalues();
    let mut roots = Vec::with_capacity(deg);
    for z in eig.iter() {
        if z.im.abs() > imag_tol * z.re.abs().max(1.0) {
            return Err(Error::NoisyRoots(z.im.abs()));
        }
        let mut x = z.re;
        for _ in 0..8 {
            let (p, dp) = poly_eval(coeffs, x);
            if dp == 0.0 {
                break;
            }
            let step = p / dp;
            if !step.is_finite() {
                break;
            }
            let next = x - step;
            if (poly_eval(coeffs, next).0).abs() >= p.abs() {
                break;
            }
            x = next;
        }
        roots.push(x);
    }
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}

/// Coefficients (constant term first) of a polynomial whose roots are the
/// total-effect ratios: the least-squares null direction of the order-`ell`
/// cumulant matrix anchored on `a` (exact null vector on population data).
pub fn root_polynomial(be: &dyn Backend, a: &Series, b: &Series, ell: usize) -> Result<Vec<f64>> {
    let (k1, k2) = orders_for(ell)?;
    let svd = cumulant_matrix(be, a, b, k1, k2)?.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Invariant("SVD without right vectors".into()))?;
    let smallest = svd.singular_values.argmin().0;
    Ok(v_t.row(smallest).iter().copied().collect())
}

/// Roots of [`root_polynomial`] without forming it. Column `c` of the
/// cumulant matrix carries `c` extra copies of `b`, so the leading right
/// singular vectors span Vandermonde vectors `(1, r, r^2, ..)` in the roots
/// `r`; the shift between their leading and trailing entries has the roots
/// as eigenvalues. The matrix is built on unit-variance series and the
/// eigenvalues are mapped back, which keeps nearby roots well separated.
pub fn total_effect_roots(
    be: &dyn Backend,
    a: &Series,
    b: &Series,
    ell: usize,
    cfg: &Config,
) -> Result<Vec<f64>> {
    let (k1, k2) = orders_for(ell)?;
    let m = scaled_cumulant_matrix(be, a, b, k1, k2)?;
    let factor = (be.pair_cumulant(a, a, 2, 0)? / be.pair_cumulant(b, b, 2, 0)?).sqrt();
    let svd = m.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Invariant("SVD without right vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let d = ell + 1;
    let basis = DMatrix::from_fn(k1, d, |c, s| v_t[(order[s], c)]);
    let head = basis.rows(0, d).into_owned();
    let tail = basis.rows(1, d).into_owned();
    let shift = head
        .lu()
        .solve(&tail)
        .ok_or_else(|| Error::DegeneratePolynomial("rank-deficient root subspace".into()))?;
    let mut roots = Vec::with_capacity(d);
    for z in shift.complex_eigenvalues().iter() {
        if !(z.im.abs() <= cfg.imag_tol * z.re.abs().max(1.0)) {
            return Err(Error::NoisyRoots(z.im.abs()));
        }
        roots.push(z.re / factor);
    }
    roots.sort_by(f64::total_cmp);
    Ok(roots)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatentCumulantSolution {
    pub roots: Vec<f64>,
    /// Order-k cumulant of each source's contribution to `a`, aligned with `roots`.
    pub values: Vec<f64>,
    /// Candidate assignments `[c(v), c(L'_1), .., c(L'_ell)]`.
    pub solutions: Vec<Vec<f64>>,
    pub ambiguous: bool,
}

impl LatentCumulantSolution {
    /// Confounder cumulants appearing in any candidate assignment.
    pub fn confounder_candidates(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for s in &self.solutions {
            for &v in &s[1..] {
                if !out.contains(&v) {
                    out.push(v);
                }
            }
        }
        out
    }
}

/// Solves `sum_s root_s^t c_s = cum(a^(k-t), b^t)` for `t = 0..k` in least
/// squares. Without ambiguity the root nearest zero belongs to the
/// non-confounded part of `a`; with `ambiguous` (one confounder only) both
/// assignments are returned.
pub fn latent_cumulants(
    be: &dyn Backend,
    a: &Series,
    b: &Series,
    roots: &[f64],
    k: usize,
    ambiguous: bool,
    cfg: &Config,
) -> Result<LatentCumulantSolution> {
    let n = roots.len();
    if n == 0 || k < n {
        return Err(Error::Input(format!("order {k} too low for {n} roots")));
    }
    if ambiguous && n != 2 {
        return Err(Error::Input(
            "ambiguous assignment needs exactly two roots".into(),
        ));
    }
    let v = DMatrix::from_fn(k, n, |t, s| roots[s].powi(t as i32));
    let mut rhs = DVector::zeros(k);
    for t in 0..k {
        rhs[t] = be.pair_cumulant(a, b, k - t, t)?;
    }
    let svd = v.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let cond = if smin > 0.0 {
        smax / smin
    } else {
        f64::INFINITY
    };
    if !(cond <= cfg.vander_cond_max) {
        return Err(Error::IllConditioned(cond));
    }
    let sol = svd
        .solve(&rhs, 0.0)
        .map_err(|e| Error::Singular(format!("vandermonde solve: {e}")))?;
    let values: Vec<f64> = sol.iter().copied().collect();
    let solutions = if ambiguous {
        vec![vec![values[0], values[1]], vec![values[1], values[0]]]
    } else {
        let vi = (0..n)
            .min_by(|&x, &y| roots[x].abs().total_cmp(&roots[y].abs()))
            .unwrap_or(0);
        let mut s = vec![values[vi]];
        s.extend((0..n).filter(|&x| x != vi).map(|x| values[x]));
        vec![s]
    };
    Ok(LatentCumulantSolution {
        roots: roots.to_vec(),
        values,
        solutions,
        ambiguous,
    })
}
