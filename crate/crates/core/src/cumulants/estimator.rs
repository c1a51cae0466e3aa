//! Plug-in joint cumulants from central moments and set-partition tables.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::data::SampleMatrix;
use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 6;

/// One set partition of `{0, .., k-1}` with its Leonov-Shiryaev weight
/// `(-1)^(h-1) (h-1)!` for `h` blocks.
#[derive(Clone, Debug)]
pub struct Partition {
    pub blocks: Vec<Vec<usize>>,
    pub weight: f64,
}

fn all_partitions(k: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out: Vec<Vec<Vec<usize>>> = vec![vec![]];
    for item in 0..k {
        let mut next = Vec::new();
        for p in &out {
            for b in 0..p.len() {
                let mut q = p.clone();
                q[b].push(item);
                next.push(q);
            }
            let mut q = p.clone();
            q.push(vec![item]);
            next.push(q);
        }
        out = next;
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Every set partition of `{0, .., k-1}`.
pub fn set_partitions(k: usize) -> Vec<Partition> {
    all_partitions(k)
        .into_iter()
        .map(|blocks| {
            let h = blocks.len();
            let sign = if h % 2 == 1 { 1.0 } else { -1.0 };
            Partition {
                weight: sign * factorial(h.saturating_sub(1)),
                blocks,
            }
        })
        .collect()
}

/// Partitions without singleton blocks; the only ones that survive on centered data.
pub fn centered_partitions(k: usize) -> &'static [Partition] {
    static TABLES: OnceLock<Vec<Vec<Partition>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        (0..=MAX_ORDER)
            .map(|k| {
                set_partitions(k)
                    .into_iter()
                    .filter(|p| p.blocks.iter().all(|b| b.len() >= 2))
                    .collect()
            })
            .collect()
    });
    &tables[k]
}

fn check_order(k: usize) -> Result<()> {
    if (2..=MAX_ORDER).contains(&k) {
        Ok(())
    } else {
        Err(Error::Order(k))
    }
}

/// Cumulant of order `k` given a moment oracle over blocks of positions.
pub fn cumulant_from_moments(k: usize, mut moment: impl FnMut(&[usize]) -> f64) -> Result<f64> {
    check_order(k)?;
    let mut total = 0.0;
    for part in centered_partitions(k) {
        let mut prod = part.weight;
        for block in &part.blocks {
            prod *= moment(block);
        }
        total += prod;
    }
    Ok(total)
}

/// Central cross moments `E[a^r b^s]` for `r + s <= 6` of two centered series.
#[derive(Clone, Debug, PartialEq)]
pub struct PairMoments {
    m: [[f64; MAX_ORDER + 1]; MAX_ORDER + 1],
}

impl PairMoments {
    pub fn from_centered(a: &[f64], b: &[f64]) -> Self {
        let mut m = [[0.0; MAX_ORDER + 1]; MAX_ORDER + 1];
        let mut pa = [0.0; MAX_ORDER + 1];
        let mut pb = [0.0; MAX_ORDER + 1];
        for (&x, &y) in a.iter().zip(b) {
            pa[0] = 1.0;
            pb[0] = 1.0;
            for r in 1..=MAX_ORDER {
                pa[r] = pa[r - 1] * x;
                pb[r] = pb[r - 1] * y;
            }
            for r in 0..=MAX_ORDER {
                for s in 0..=(MAX_ORDER - r) {
                    m[r][s] += pa[r] * pb[s];
                }
            }
        }
        let n = a.len() as f64;
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v /= n;
            }
        }
        PairMoments { m }
    }

    pub fn get(&self, r: usize, s: usize) -> f64 {
        self.m[r][s]
    }

    pub fn swapped(&self) -> Self {
        let mut m = [[0.0; MAX_ORDER + 1]; MAX_ORDER + 1];
        for (r, row) in m.iter_mut().enumerate() {
            for (s, v) in row.iter_mut().enumerate() {
                *v = self.m[s][r];
            }
        }
        PairMoments { m }
    }

    /// Joint cumulant with `na` copies of the first series and `nb` of the second.
    pub fn cumulant(&self, na: usize, nb: usize) -> Result<f64> {
        cumulant_from_moments(na + nb, |block| {
            let ra = block.iter().filter(|&&pos| pos < na).count();
            self.m[ra][block.len() - ra]
        })
    }
}

/// Subtracts the mean of each value.
pub fn centered(values: &[f64]) -> Vec<f64> {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter().map(|v| v - mean).collect()
}

/// Cached plug-in cumulant estimator over the columns of a sample matrix.
pub struct CumulantEstimator {
    columns: Vec<Vec<f64>>,
    cache: Mutex<HashMap<Vec<usize>, f64>>,
}

impl CumulantEstimator {
    pub fn new(data: &SampleMatrix) -> Self {
        CumulantEstimator {
            columns: data.columns().iter().map(|c| centered(c)).collect(),
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn n(&self) -> usize {
        self.columns[0].len()
    }

    fn block_moment(&self, vars: &[usize]) -> f64 {
        let n = self.n();
        let mut acc = 0.0;
        for r in 0..n {
            let mut prod = 1.0;
            for &v in vars {
                prod *= self.columns[v][r];
            }
            acc += prod;
        }
        acc / n as f64
    }

    /// Joint cumulant of the columns listed in `indices`; order is `indices.len()`.
    pub fn cumulant(&self, indices: &[usize]) -> Result<f64> {
        check_order(indices.len())?;
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.columns.len()) {
            return Err(Error::Input(format!("column {bad} out of range")));
        }
        let mut key = indices.to_vec();
        key.sort_unstable();
        if let Some(&v) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(v);
        }
        let mut moments: HashMap<Vec<usize>, f64> = HashMap::new();
        let value = cumulant_from_moments(key.len(), |block| {
            let mut vars: Vec<usize> = block.iter().map(|&pos| key[pos]).collect();
            vars.sort_unstable();
            *moments
                .entry(vars.clone())
                .or_insert_with(|| self.block_moment(&vars))
        })?;
        self.cache.lock().expect("cache lock").insert(key, value);
        Ok(value)
    }
}

/// Plug-in estimate of the order-`k` joint cumulant of `indices`.
pub fn sample_cumulant(est: &CumulantEstimator, indices: &[usize], k: usize) -> Result<f64> {
    if indices.len() != k {
        return Err(Error::Input(format!(
            "{} indices for order {k}",
            indices.len()
        )));
    }
    est.cumulant(indices)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_numbers() {
        let counts: Vec<usize> = (1..=6).map(|k| set_partitions(k).len()).collect();
        assert_eq!(counts, vec![1, 2, 5, 15, 52, 203]);
    }

    #[test]
    fn second_order_is_biased_variance() {
        let data = SampleMatrix::new(vec!["x".into()], vec![vec![1.0, 2.0, 3.0, 6.0]]).unwrap();
        let est = CumulantEstimator::new(&data);
        let mean = 3.0;
        let var = [1.0f64, 2.0, 3.0, 6.0]
            .iter()
            .map(|v| (v - mean).powi(2))
            .sum::<f64>()
            / 4.0;
        assert!((sample_cumulant(&est, &[0, 0], 2).unwrap() - var).abs() < 1e-14);
    }

    #[test]
    fn fourth_cumulant_of_two_point_distribution() {
        // +-1 with equal weight: kappa4 = 1 - 3 = -2
        let data = SampleMatrix::new(vec!["x".into()], vec![vec![1.0, -1.0, 1.0, -1.0]]).unwrap();
        let est = CumulantEstimator::new(&data);
        assert!((est.cumulant(&[0, 0, 0, 0]).unwrap() + 2.0).abs() < 1e-14);
    }

    #[test]
    fn pair_moments_agree_with_general_estimator() {
        let a: Vec<f64> = (0..50).map(|i| ((i * 7 % 11) as f64).powf(1.3)).collect();
        let b: Vec<f64> = (0..50)
            .map(|i| ((i * 5 % 13) as f64) - 0.2 * a[i])
            .collect();
        let data =
            SampleMatrix::new(vec!["a".into(), "b".into()], vec![a.clone(), b.clone()]).unwrap();
        let est = CumulantEstimator::new(&data);
        let pm = PairMoments::from_centered(&centered(&a), &centered(&b));
        for k in 2..=6 {
            for na in 0..=k {
                let idx: Vec<usize> = (0..k).map(|t| usize::from(t >= na)).collect();
                let general = est.cumulant(&idx).unwrap();
                let pair = pm.cumulant(na, k - na).unwrap();
                assert!(
                    (general - pair).abs() <= 1e-9 * general.abs().max(1.0),
                    "k={k} na={na}"
                );
            }
        }
    }

    #[test]
    fn order_limits() {
        let data = SampleMatrix::new(vec!["x".into()], vec![vec![1.0, 2.0]]).unwrap();
        let est = CumulantEstimator::new(&data);
        assert!(matches!(est.cumulant(&[0]), Err(Error::Order(1))));
        assert!(matches!(est.cumulant(&[0; 7]), Err(Error::Order(7))));
    }
}
