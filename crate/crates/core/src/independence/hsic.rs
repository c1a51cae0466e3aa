//! HSIC independence test with Gaussian kernels and a gamma-approximated null.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::error::{Error, Result};

pub const MIN_HSIC_N: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HsicResult {
    pub statistic: f64,
    pub p_value: f64,
    pub independent: bool,
    pub n_used: usize,
    /// One of the series was constant; the test is vacuous.
    pub constant: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HsicOptions {
    pub alpha: f64,
    pub subsample_cap: usize,
    pub seed: u64,
    pub permutations: usize,
    /// Below this sample size the null comes from permutations.
    pub permutation_below: usize,
}

impl Default for HsicOptions {
    fn default() -> Self {
        HsicOptions {
            alpha: 0.05,
            subsample_cap: 2000,
            seed: 0,
            permutations: 1000,
            permutation_below: 200,
        }
    }
}

/// Sorted row indices of the seeded subsample, or `None` when `n <= cap`.
pub fn subsample_indices(n: usize, cap: usize, seed: u64) -> Option<Vec<usize>> {
    if n <= cap {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_5ab5_a3c1_e000);
    let mut idx = rand::seq::index::sample(&mut rng, n, cap).into_vec();
    idx.sort_unstable();
    Some(idx)
}

/// Doubly centered Gaussian Gram matrix of one series.
#[derive(Clone, Debug)]
pub struct Gram {
    m: usize,
    centered: Vec<f64>,
    /// Mean of the off-diagonal entries of the uncentered kernel matrix.
    offdiag_mean: f64,
    constant: bool,
}

impl Gram {
    pub fn new(x: &[f64]) -> Self {
        let m = x.len();
        let mut sq: Vec<f64> = Vec::with_capacity(m * (m - 1) / 2);
        for a in 0..m {
            for b in (a + 1)..m {
                let d = x[a] - x[b];
                if d != 0.0 {
                    sq.push(d * d);
                }
            }
        }
        if sq.is_empty() {
            return Gram {
                m,
                centered: vec![0.0; m * m],
                offdiag_mean: 1.0,
                constant: true,
            };
        }
        let mid = sq.len() / 2;
        let (_, med, _) = sq.select_nth_unstable_by(mid, f64::total_cmp);
        // exp(-d^2 / (2 s^2)) with s^2 = median(d^2) / 2
        let scale = 1.0 / *med;
        let mut k = vec![0.0; m * m];
        for a in 0..m {
            k[a * m + a] = 1.0;
            for b in (a + 1)..m {
                let d = x[a] - x[b];
                let v = (-d * d * scale).exp();
                k[a * m + b] = v;
                k[b * m + a] = v;
            }
        }
        let row_means: Vec<f64> = k
            .chunks_exact(m)
            .map(|r| r.iter().sum::<f64>() / m as f64)
            .collect();
        let grand = row_means.iter().sum::<f64>() / m as f64;
        let offdiag_mean = (grand * (m * m) as f64 - m as f64) / (m * (m - 1)) as f64;
        for a in 0..m {
            for b in 0..m {
                k[a * m + b] += grand - row_means[a] - row_means[b];
            }
        }
        Gram {
            m,
            centered: k,
            offdiag_mean,
            constant: false,
        }
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }
}

/// Test statistic `m * HSIC_b = tr(Kc Lc) / m`.
fn statistic(k: &Gram, l: &Gram) -> f64 {
    k.centered
        .iter()
        .zip(&l.centered)
        .map(|(a, b)| a * b)
        .sum::<f64>()
        / k.m as f64
}

fn gamma_p_value(k: &Gram, l: &Gram, stat: f64) -> f64 {
    let m = k.m as f64;
    let mut sum_sq = 0.0;
    let mut diag_sq = 0.0;
    for a in 0..k.m {
        for b in 0..k.m {
            let v = k.centered[a * k.m + b] * l.centered[a * k.m + b] / 6.0;
            sum_sq += v * v;
            if a == b {
                diag_sq += v * v;
            }
        }
    }
    let mut var = (sum_sq - diag_sq) / m / (m - 1.0);
    var *= 72.0 * (m - 4.0) * (m - 5.0) / m / (m - 1.0) / (m - 2.0) / (m - 3.0);
    let (mx, my) = (k.offdiag_mean, l.offdiag_mean);
    let mean = (1.0 + mx * my - mx - my) / m;
    if !(var > 0.0) || !(mean > 0.0) {
        return if stat > 0.0 { 0.0 } else { 1.0 };
    }
    let shape = mean * mean / var;
    let scale = var * m / mean;
    match Gamma::new(shape, 1.0 / scale) {
        Ok(g) => (1.0 - g.cdf(stat)).clamp(0.0, 1.0),
        Err(_) => 1.0,
    }
}

fn permutation_p_value(k: &Gram, l: &Gram, stat: f64, permutations: usize, seed: u64) -> f64 {
    let m = k.m;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut perm: Vec<usize> = (0..m).collect();
    let mut exceed = 0usize;
    for _ in 0..permutations {
        perm.shuffle(&mut rng);
        let mut acc = 0.0;
        for a in 0..m {
            let pa = perm[a] * m;
            let ka = &k.centered[a * m..(a + 1) * m];
            for b in 0..m {
                acc += ka[b] * l.centered[pa + perm[b]];
            }
        }
        if acc / m as f64 >= stat {
            exceed += 1;
        }
    }
    (1 + exceed) as f64 / (1 + permutations) as f64
}

/// HSIC test on two precomputed Gram matrices of equal size.
pub fn hsic_from_grams(k: &Gram, l: &Gram, opts: &HsicOptions) -> HsicResult {
    let m = k.m;
    if k.constant || l.constant {
        return HsicResult {
            statistic: 0.0,
            p_value: 1.0,
            independent: true,
            n_used: m,
            constant: true,
        };
    }
    let stat = statistic(k, l);
    let p_value = if m < opts.permutation_below {
        permutation_p_value(k, l, stat, opts.permutations, opts.seed)
    } else {
        gamma_p_value(k, l, stat)
    };
    HsicResult {
        statistic: stat,
        p_value,
        independent: p_value >= opts.alpha,
        n_used: m,
        constant: false,
    }
}

/// Rows of `x` at `idx` (all rows when `idx` is `None`).
pub fn take(x: &[f64], idx: Option<&[usize]>) -> Vec<f64> {
    match idx {
        Some(idx) => idx.iter().map(|&i| x[i]).collect(),
        None => x.to_vec(),
    }
}

/// Independence test of two series; subsamples to `opts.subsample_cap` rows when longer.
pub fn hsic_test(x: &[f64], y: &[f64], opts: &HsicOptions) -> Result<HsicResult> {
    if x.len() != y.len() {
        return Err(Error::Dimension(format!(
            "series lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < MIN_HSIC_N {
        return Err(Error::Input(format!(
            "HSIC needs at least {MIN_HSIC_N} samples"
        )));
    }
    let idx = subsample_indices(x.len(), opts.subsample_cap, opts.seed);
    let xs = take(x, idx.as_deref());
    let ys = take(y, idx.as_deref());
    Ok(hsic_from_grams(&Gram::new(&xs), &Gram::new(&ys), opts))
}
