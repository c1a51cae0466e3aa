//! Series built from observed columns, and the two sources of statistical
//! evidence about them: finite samples and exact population cumulants.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;

use crate::cumulants::estimator::{centered, PairMoments, MAX_ORDER};
use crate::data::SampleMatrix;
use crate::error::{Error, Result};
use crate::independence::hsic::{
    hsic_from_grams, subsample_indices, take, Gram, HsicOptions, HsicResult,
};
use crate::model::{mixing_matrix, ModelSpec};

/// How a series was built from observed columns.
#[derive(Clone, Debug, PartialEq)]
pub enum Provenance {
    Column(usize),
    /// `base - sum(coeff * term)`.
    Residual {
        base: Box<Provenance>,
        terms: Vec<(f64, Provenance)>,
    },
}

impl Provenance {
    /// Re-derives the column weights described by this tree.
    pub fn replay(&self, p: usize) -> Vec<f64> {
        match self {
            Provenance::Column(i) => {
                let mut w = vec![0.0; p];
                w[*i] = 1.0;
                w
            }
            Provenance::Residual { base, terms } => {
                let mut w = base.replay(p);
                for (c, t) in terms {
                    for (wi, ti) in w.iter_mut().zip(t.replay(p)) {
                        *wi -= c * ti;
                    }
                }
                w
            }
        }
    }
}

/// A linear combination of observed columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub weights: Vec<f64>,
    pub provenance: Provenance,
}

type Key = Vec<u64>;

impl Series {
    pub fn column(p: usize, i: usize) -> Self {
        let provenance = Provenance::Column(i);
        Series {
            weights: provenance.replay(p),
            provenance,
        }
    }

    /// `self - sum(coeff * term)`.
    pub fn residual(&self, terms: &[(f64, &Series)]) -> Self {
        let mut weights = self.weights.clone();
        for (c, t) in terms {
            for (w, tw) in weights.iter_mut().zip(&t.weights) {
                *w -= c * tw;
            }
        }
        let provenance = Provenance::Residual {
            base: Box::new(self.provenance.clone()),
            terms: terms
                .iter()
                .map(|(c, t)| (*c, t.provenance.clone()))
                .collect(),
        };
        Series {
            weights,
            provenance,
        }
    }

    pub fn as_column(&self) -> Option<usize> {
        match self.provenance {
            Provenance::Column(i) => Some(i),
            _ => None,
        }
    }

    fn key(&self) -> Key {
        self.weights
            .iter()
            .map(|w| if *w == 0.0 { 0 } else { w.to_bits() })
            .collect()
    }
}

/// Source of cumulant and independence evidence about series.
pub trait Backend: Sync {
    /// Number of observed columns.
    fn p(&self) -> usize;

    /// Joint cumulant with `na` copies of `a` and `nb` copies of `b`.
    fn pair_cumulant(&self, a: &Series, b: &Series, na: usize, nb: usize) -> Result<f64>;

    fn independence(&self, a: &Series, b: &Series) -> Result<HsicResult>;

    fn column(&self, i: usize) -> Series {
        Series::column(self.p(), i)
    }

    fn independent(&self, a: &Series, b: &Series) -> Result<bool> {
        Ok(self.independence(a, b)?.independent)
    }

    fn covariance(&self, a: &Series, b: &Series) -> Result<f64> {
        self.pair_cumulant(a, b, 1, 1)
    }
}

fn check_pair_order(na: usize, nb: usize) -> Result<()> {
    let k = na + nb;
    if (2..=MAX_ORDER).contains(&k) {
        Ok(())
    } else {
        Err(Error::Order(k))
    }
}

/// Evidence from a finite sample: plug-in cumulants and HSIC tests.
pub struct SampleBackend<'a> {
    data: &'a SampleMatrix,
    opts: HsicOptions,
    subsample: Option<Vec<usize>>,
    values: Mutex<HashMap<Key, Arc<Vec<f64>>>>,
    moments: Mutex<HashMap<(Key, Key), Arc<PairMoments>>>,
    grams: Mutex<HashMap<usize, Arc<Gram>>>,
    tests: Mutex<HashMap<(Key, Key), HsicResult>>,
}

impl<'a> SampleBackend<'a> {
    pub fn new(data: &'a SampleMatrix, opts: HsicOptions) -> Self {
        SampleBackend {
            data,
            subsample: subsample_indices(data.n(), opts.subsample_cap, opts.seed),
            opts,
            values: Mutex::new(HashMap::new()),
            moments: Mutex::new(HashMap::new()),
            grams: Mutex::new(HashMap::new()),
            tests: Mutex::new(HashMap::new()),
        }
    }

    /// Centered values of a series.
    pub fn values(&self, s: &Series) -> Arc<Vec<f64>> {
        let key = s.key();
        if let Some(v) = self.values.lock().expect("values lock").get(&key) {
            return v.clone();
        }
        let n = self.data.n();
        let mut out = vec![0.0; n];
        for (j, &w) in s.weights.iter().enumerate() {
            if w != 0.0 {
                for (o, x) in out.iter_mut().zip(self.data.column(j)) {
                    *o += w * x;
                }
            }
        }
        let v = Arc::new(centered(&out));
        self.values
            .lock()
            .expect("values lock")
            .insert(key, v.clone());
        v
    }

    fn gram(&self, s: &Series) -> Arc<Gram> {
        let build = || Arc::new(Gram::new(&take(&self.values(s), self.subsample.as_deref())));
        match s.as_column() {
            Some(i) => {
                if let Some(g) = self.grams.lock().expect("gram lock").get(&i) {
                    return g.clone();
                }
                let g = build();
                self.grams.lock().expect("gram lock").insert(i, g.clone());
                g
            }
            None => build(),
        }
    }
}

impl Backend for SampleBackend<'_> {
    fn p(&self) -> usize {
        self.data.p()
    }

    fn pair_cumulant(&self, a: &Series, b: &Series, na: usize, nb: usize) -> Result<f64> {
        check_pair_order(na, nb)?;
        let (ka, kb) = (a.key(), b.key());
        let (key, swap) = if ka <= kb {
            ((ka, kb), false)
        } else {
            ((kb, ka), true)
        };
        let cached = self
            .moments
            .lock()
            .expect("moments lock")
            .get(&key)
            .cloned();
        let pm = match cached {
            Some(pm) => pm,
            None => {
                let (first, second) = if swap { (b, a) } else { (a, b) };
                let pm = Arc::new(PairMoments::from_centered(
                    &self.values(first),
                    &self.values(second),
                ));
                self.moments
                    .lock()
                    .expect("moments lock")
                    .insert(key, pm.clone());
                pm
            }
        };
        if swap {
            pm.cumulant(nb, na)
        } else {
            pm.cumulant(na, nb)
        }
    }

    fn independence(&self, a: &Series, b: &Series) -> Result<HsicResult> {
        let n = self.data.n();
        if n < crate::independence::hsic::MIN_HSIC_N {
            return Err(Error::Input(format!(
                "HSIC needs at least {} samples",
                crate::independence::hsic::MIN_HSIC_N
            )));
        }
        let (ka, kb) = (a.key(), b.key());
        let key = if ka <= kb { (ka, kb) } else { (kb, ka) };
        if let Some(r) = self.tests.lock().expect("tests lock").get(&key) {
            return Ok(*r);
        }
        let r = hsic_from_grams(&self.gram(a), &self.gram(b), &self.opts);
        self.tests.lock().expect("tests lock").insert(key, r);
        Ok(r)
    }
}

/// Exact evidence computed from a ground-truth model.
///
/// A series is a linear form in the independent sources `u = (eps, e)`;
/// two series are independent exactly when no source loads on both.
pub struct PopulationBackend {
    mixing: DMatrix<f64>,
    kappa: Vec<Vec<f64>>,
    tol: f64,
}

impl PopulationBackend {
    pub fn new(model: &ModelSpec) -> Result<Self> {
        let mixing = mixing_matrix(model)?;
        let mut kappa = vec![Vec::new(); MAX_ORDER + 1];
        for (k, slot) in kappa.iter_mut().enumerate().skip(2) {
            *slot = model.source_cumulants(k)?;
        }
        Ok(PopulationBackend {
            mixing,
            kappa,
            tol: 1e-9,
        })
    }

    /// Loadings of a series on the sources.
    pub fn loadings(&self, s: &Series) -> Vec<f64> {
        (0..self.mixing.ncols())
            .map(|c| {
                s.weights
                    .iter()
                    .enumerate()
                    .map(|(r, w)| w * self.mixing[(r, c)])
                    .sum()
            })
            .collect()
    }
}

impl Backend for PopulationBackend {
    fn p(&self) -> usize {
        self.mixing.nrows()
    }

    fn pair_cumulant(&self, a: &Series, b: &Series, na: usize, nb: usize) -> Result<f64> {
        check_pair_order(na, nb)?;
        let (la, lb) = (self.loadings(a), self.loadings(b));
        let kappa = &self.kappa[na + nb];
        Ok((0..la.len())
            .map(|s| la[s].powi(na as i32) * lb[s].powi(nb as i32) * kappa[s])
            .sum())
    }

    fn independence(&self, a: &Series, b: &Series) -> Result<HsicResult> {
        let (la, lb) = (self.loadings(a), self.loadings(b));
        let sa = la.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let sb = lb.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let constant = sa == 0.0 || sb == 0.0;
        let overlap = if constant {
            0.0
        } else {
            la.iter()
                .zip(&lb)
                .map(|(x, y)| (x * y).abs())
                .fold(0.0, f64::max)
                / (sa * sb)
        };
        let independent = overlap <= self.tol;
        Ok(HsicResult {
            statistic: overlap,
            p_value: if independent { 1.0 } else { 0.0 },
            independent,
            n_used: 0,
            constant,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_skeleton, population_cumulant, random_model_instance};

    #[test]
    fn provenance_replays_weights() {
        let x1 = Series::column(3, 0);
        let x2 = Series::column(3, 1);
        let x3 = Series::column(3, 2);
        let e = x2.residual(&[(0.7, &x1)]);
        let r = x3.residual(&[(1.5, &e), (-0.25, &x1)]);
        assert_eq!(r.provenance.replay(3), r.weights);
    }

    #[test]
    fn population_pair_cumulant_matches_model_oracle() {
        let m = random_model_instance(&builtin_skeleton("c").unwrap(), 11).unwrap();
        let be = PopulationBackend::new(&m).unwrap();
        let (x1, x3) = (be.column(0), be.column(2));
        let direct = be.pair_cumulant(&x1, &x3, 2, 3).unwrap();
        let oracle = population_cumulant(&m, &[0, 0, 2, 2, 2]).unwrap();
        assert!((direct - oracle).abs() <= 1e-12 * oracle.abs());
    }

    #[test]
    fn sample_pair_cumulant_is_symmetric_in_argument_order() {
        let m = random_model_instance(&builtin_skeleton("a").unwrap(), 2).unwrap();
        let data = crate::model::simulate(&m, 500, 4).unwrap();
        let be = SampleBackend::new(&data, HsicOptions::default());
        let (a, b) = (be.column(0), be.column(2));
        assert_eq!(
            be.pair_cumulant(&a, &b, 2, 4).unwrap(),
            be.pair_cumulant(&b, &a, 4, 2).unwrap()
        );
    }
}
