//! Ground-truth models: structure, assumption checks, total effects,
//! population cumulants and simulation.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::data::SampleMatrix;
use crate::error::{Error, Result};

/// Threshold below which a coefficient counts as absent.
pub const EDGE_EPS: f64 = 0.0;
/// Minimum magnitude of a total effect between connected variables.
pub const FAITHFULNESS_TOL: f64 = 1e-9;
/// Minimum magnitude of a higher-order disturbance cumulant.
pub const CUMULANT_TOL: f64 = 1e-12;

/// Zero-mean disturbance distribution with closed-form cumulants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Disturbance {
    ShiftedLognormal {
        mu: f64,
        sigma: f64,
    },
    UniformCentered {
        a: f64,
        b: f64,
    },
    /// Cumulants of orders 2..=6; cannot be sampled.
    CustomMoments {
        cumulants: [f64; 5],
    },
}

impl Default for Disturbance {
    fn default() -> Self {
        Disturbance::ShiftedLognormal {
            mu: -1.1,
            sigma: 0.8,
        }
    }
}

impl Disturbance {
    /// Cumulant of order `k` (1..=6). The first cumulant is zero by construction.
    pub fn cumulant(&self, k: usize) -> Result<f64> {
        if k == 0 || k > 6 {
            return Err(Error::Order(k));
        }
        if k == 1 {
            return Ok(0.0);
        }
        match *self {
            Disturbance::ShiftedLognormal { mu, sigma } => {
                let raw: Vec<f64> = (1..=6)
                    .map(|j| {
                        let j = j as f64;
                        (j * mu + 0.5 * j * j * sigma * sigma).exp()
                    })
                    .collect();
                Ok(cumulants_from_raw_moments(&raw)[k - 1])
            }
            Disturbance::UniformCentered { a, b } => {
                let h = 0.5 * (b - a);
                let central: Vec<f64> = (1..=6)
                    .map(|j| {
                        if j % 2 == 0 {
                            h.powi(j) / (j as f64 + 1.0)
                        } else {
                            0.0
                        }
                    })
                    .collect();
                Ok(cumulants_from_raw_moments(&central)[k - 1])
            }
            Disturbance::CustomMoments { cumulants } => Ok(cumulants[k - 2]),
        }
    }

    /// All cumulants of orders 2..=6.
    pub fn cumulant_table(&self) -> Result<[f64; 5]> {
        let mut out = [0.0; 5];
        for (slot, k) in out.iter_mut().zip(2..=6) {
            *slot = self.cumulant(k)?;
        }
        Ok(out)
    }

    fn sampler(&self) -> Result<Sampler> {
        match *self {
            Disturbance::ShiftedLognormal { mu, sigma } => {
                let dist = LogNormal::new(mu, sigma)
                    .map_err(|e| Error::Input(format!("lognormal parameters: {e}")))?;
                Ok(Sampler::Lognormal(dist, (mu + 0.5 * sigma * sigma).exp()))
            }
            Disturbance::UniformCentered { a, b } => {
                let dist = Uniform::new(a, b)
                    .map_err(|e| Error::Input(format!("uniform parameters: {e}")))?;
                Ok(Sampler::Uniform(dist, 0.5 * (a + b)))
            }
            Disturbance::CustomMoments { .. } => Err(Error::Input(
                "custom-moment disturbances cannot be sampled".into(),
            )),
        }
    }
}

enum Sampler {
    Lognormal(LogNormal<f64>, f64),
    Uniform(Uniform<f64>, f64),
}

impl Sampler {
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Lognormal(d, mean) => d.sample(rng) - mean,
            Sampler::Uniform(d, mean) => d.sample(rng) - mean,
        }
    }
}

/// Converts raw moments `m[0] = E[Y], ..., m[5] = E[Y^6]` into cumulants.
pub fn cumulants_from_raw_moments(m: &[f64]) -> Vec<f64> {
    let n = m.len();
    let mut kappa = vec![0.0; n];
    for r in 1..=n {
        let mut acc = m[r - 1];
        for j in 1..r {
            acc -= binomial(r - 1, j - 1) * kappa[j - 1] * m[r - j - 1];
        }
        kappa[r - 1] = acc;
    }
    kappa
}

fn binomial(n: usize, k: usize) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c = c * (n - i) as f64 / (i + 1) as f64;
    }
    c
}

/// Ground-truth linear model `L = A L + eps`, `X = Lambda L + B X + e`.
///
/// `a[(i, j)]` is the coefficient of `L_j -> L_i`, `lambda[(i, j)]` of
/// `L_j -> X_i` and `b[(i, j)]` of `X_j -> X_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub latent_names: Vec<String>,
    pub observed_names: Vec<String>,
    pub a: DMatrix<f64>,
    pub lambda: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub latent_disturbances: Vec<Disturbance>,
    pub observed_disturbances: Vec<Disturbance>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    q: usize,
    p: usize,
    latent_names: Vec<String>,
    observed_names: Vec<String>,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "Lambda")]
    lambda: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    latent_disturbances: Vec<Disturbance>,
    observed_disturbances: Vec<Disturbance>,
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| m.row(i).iter().copied().collect())
        .collect()
}

fn matrix_from_rows(name: &str, rows: &[Vec<f64>], nr: usize, nc: usize) -> Result<DMatrix<f64>> {
    if rows.len() != nr || rows.iter().any(|r| r.len() != nc) {
        return Err(Error::Dimension(format!("{name} must be {nr}x{nc}")));
    }
    Ok(DMatrix::from_fn(nr, nc, |i, j| rows[i][j]))
}

impl ModelSpec {
    pub fn q(&self) -> usize {
        self.a.nrows()
    }

    pub fn p(&self) -> usize {
        self.b.nrows()
    }

    pub fn check_dimensions(&self) -> Result<()> {
        let (q, p) = (self.q(), self.p());
        if self.a.ncols() != q {
            return Err(Error::Dimension(format!("A is {}x{}", q, self.a.ncols())));
        }
        if self.b.ncols() != p {
            return Err(Error::Dimension(format!("B is {}x{}", p, self.b.ncols())));
        }
        if self.lambda.shape() != (p, q) {
            return Err(Error::Dimension(format!(
                "Lambda is {}x{}, expected {p}x{q}",
                self.lambda.nrows(),
                self.lambda.ncols()
            )));
        }
        if self.latent_disturbances.len() != q || self.observed_disturbances.len() != p {
            return Err(Error::Dimension("disturbance list lengths".into()));
        }
        if self.latent_names.len() != q || self.observed_names.len() != p {
            return Err(Error::Dimension("name list lengths".into()));
        }
        Ok(())
    }

    /// Index of the latent parent of each observed variable (first nonzero of its Lambda row).
    pub fn latent_parent(&self, i: usize) -> Option<usize> {
        (0..self.q()).find(|&j| self.lambda[(i, j)] != EDGE_EPS)
    }

    /// Ground-truth clusters: observed children of each latent, in latent order.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        (0..self.q())
            .map(|j| {
                (0..self.p())
                    .filter(|&i| self.lambda[(i, j)] != EDGE_EPS)
                    .collect()
            })
            .collect()
    }

    /// Source cumulants of order k: latent disturbances first, then observed ones.
    pub fn source_cumulants(&self, k: usize) -> Result<Vec<f64>> {
        self.latent_disturbances
            .iter()
            .chain(self.observed_disturbances.iter())
            .map(|d| d.cumulant(k))
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            q: self.q(),
            p: self.p(),
            latent_names: self.latent_names.clone(),
            observed_names: self.observed_names.clone(),
            a: rows_of(&self.a),
            lambda: rows_of(&self.lambda),
            b: rows_of(&self.b),
            latent_disturbances: self.latent_disturbances.clone(),
            observed_disturbances: self.observed_disturbances.clone(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(text)?;
        let model = ModelSpec {
            a: matrix_from_rows("A", &f.a, f.q, f.q)?,
            lambda: matrix_from_rows("Lambda", &f.lambda, f.p, f.q)?,
            b: matrix_from_rows("B", &f.b, f.p, f.p)?,
            latent_names: f.latent_names,
            observed_names: f.observed_names,
            latent_disturbances: f.latent_disturbances,
            observed_disturbances: f.observed_disturbances,
        };
        model.check_dimensions()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Kahn topological order for `m[(i, j)] != 0` meaning `j -> i`; lowest index first.
pub fn topological_order(m: &DMatrix<f64>) -> Option<Vec<usize>> {
    let n = m.nrows();
    let mut indeg: Vec<usize> = (0..n)
        .map(|i| (0..n).filter(|&j| j != i && m[(i, j)] != EDGE_EPS).count())
        .collect();
    if (0..n).any(|i| m[(i, i)] != EDGE_EPS) {
        return None;
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(&j) = ready.iter().next() {
        ready.remove(&j);
        order.push(j);
        for i in 0..n {
            if i != j && m[(i, j)] != EDGE_EPS {
                indeg[i] -= 1;
                if indeg[i] == 0 {
                    ready.insert(i);
                }
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// `(I - m)^{-1}` by forward substitution along a topological order.
fn unit_triangular_inverse(m: &DMatrix<f64>, order: &[usize]) -> DMatrix<f64> {
    let n = m.nrows();
    let mut t = DMatrix::<f64>::zeros(n, n);
    for &i in order {
        t[(i, i)] = 1.0;
        for &j in order {
            if j == i {
                break;
            }
            let c = m[(i, j)];
            if c != 0.0 {
                for col in 0..n {
                    t[(i, col)] += c * t[(j, col)];
                }
            }
        }
    }
    t
}

/// Reachability closure: `r[i][j]` iff there is a directed path `j -> ... -> i` (or i == j).
fn reachability(m: &DMatrix<f64>, order: &[usize]) -> Vec<Vec<bool>> {
    let n = m.nrows();
    let mut r = vec![vec![false; n]; n];
    for &i in order {
        r[i][i] = true;
        for j in 0..n {
            if j != i && m[(i, j)] != EDGE_EPS {
                let row_j = r[j].clone();
                for (dst, src) in r[i].iter_mut().zip(row_j) {
                    *dst |= src;
                }
            }
        }
    }
    r
}

#[derive(Clone, Debug, PartialEq)]
pub struct TotalEffects {
    pub alpha_ll: DMatrix<f64>,
    pub alpha_ol: DMatrix<f64>,
    pub alpha_oo: DMatrix<f64>,
}

pub fn total_effects(model: &ModelSpec) -> Result<TotalEffects> {
    model.check_dimensions()?;
    let la = topological_order(&model.a)
        .ok_or_else(|| Error::Singular("latent graph is cyclic".into()))?;
    let lo = topological_order(&model.b)
        .ok_or_else(|| Error::Singular("observed graph is cyclic".into()))?;
    let alpha_ll = unit_triangular_inverse(&model.a, &la);
    let alpha_oo = unit_triangular_inverse(&model.b, &lo);
    let alpha_ol = &alpha_oo * &model.lambda * &alpha_ll;
    Ok(TotalEffects {
        alpha_ll,
        alpha_ol,
        alpha_oo,
    })
}

/// `M = [alpha_ol, alpha_oo]`, so that `X = M u` with `u = (eps, e)`.
pub fn mixing_matrix(model: &ModelSpec) -> Result<DMatrix<f64>> {
    let te = total_effects(model)?;
    let (p, q) = (model.p(), model.q());
    let mut m = DMatrix::zeros(p, q + p);
    m.view_mut((0, 0), (p, q)).copy_from(&te.alpha_ol);
    m.view_mut((0, q), (p, p)).copy_from(&te.alpha_oo);
    Ok(m)
}

/// Population joint cumulant of the observed variables named by `indices`.
pub fn population_cumulant(model: &ModelSpec, indices: &[usize]) -> Result<f64> {
    let k = indices.len();
    if !(2..=6).contains(&k) {
        return Err(Error::Order(k));
    }
    let m = mixing_matrix(model)?;
    if let Some(&bad) = indices.iter().find(|&&i| i >= model.p()) {
        return Err(Error::Input(format!("observed index {bad} out of range")));
    }
    let kappa = model.source_cumulants(k)?;
    Ok((0..m.ncols())
        .map(|s| indices.iter().map(|&i| m[(i, s)]).product::<f64>() * kappa[s])
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Assumption {
    Acyclic,
    A1SingleLatentParent,
    A2LatentChildren,
    A3NoCrossClusterEdges,
    A4Faithfulness,
    A5NonzeroCumulants,
    Normalization,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub assumption: Assumption,
    pub passed: bool,
    pub offending: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<AssumptionCheck>,
}

impl ValidationReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, a: Assumption) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.assumption == a)
    }

    pub fn failed(&self) -> Vec<Assumption> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.assumption)
            .collect()
    }
}

fn entry(assumption: Assumption, offending: Vec<String>) -> AssumptionCheck {
    AssumptionCheck {
        assumption,
        passed: offending.is_empty(),
        offending,
    }
}

/// Representative of each cluster: a member without ancestors inside the
/// cluster, lowest index first. `None` for latents without observed children.
pub fn representatives(model: &ModelSpec) -> Vec<Option<usize>> {
    let order = topological_order(&model.b).unwrap_or_else(|| (0..model.p()).collect());
    let reach = reachability(&model.b, &order);
    model
        .clusters()
        .iter()
        .map(|members| {
            members
                .iter()
                .copied()
                .find(|&i| !members.iter().any(|&j| j != i && reach[i][j]))
        })
        .collect()
}

pub fn validate(model: &ModelSpec) -> Result<ValidationReport> {
    model.check_dimensions()?;
    let (p, q) = (model.p(), model.q());
    let lat_order = topological_order(&model.a);
    let obs_order = topological_order(&model.b);

    let mut cyc = Vec::new();
    if lat_order.is_none() {
        cyc.push("A".to_string());
    }
    if obs_order.is_none() {
        cyc.push("B".to_string());
    }
    let mut checks = vec![entry(Assumption::Acyclic, cyc)];

    let a1: Vec<String> = (0..p)
        .filter(|&i| (0..q).filter(|&j| model.lambda[(i, j)] != EDGE_EPS).count() != 1)
        .map(|i| model.observed_names[i].clone())
        .collect();
    checks.push(entry(Assumption::A1SingleLatentParent, a1));

    let a2: Vec<String> = (0..q)
        .filter(|&j| {
            let obs = (0..p).filter(|&i| model.lambda[(i, j)] != EDGE_EPS).count();
            let lat = (0..q)
                .filter(|&i| i != j && model.a[(i, j)] != EDGE_EPS)
                .count();
            obs < 1 || obs + lat < 2
        })
        .map(|j| model.latent_names[j].clone())
        .collect();
    checks.push(entry(Assumption::A2LatentChildren, a2));

    let mut a3 = Vec::new();
    for i in 0..p {
        for j in 0..p {
            if i != j
                && model.b[(i, j)] != EDGE_EPS
                && model.latent_parent(i) != model.latent_parent(j)
            {
                a3.push(format!(
                    "{}->{}",
                    model.observed_names[j], model.observed_names[i]
                ));
            }
        }
    }
    checks.push(entry(Assumption::A3NoCrossClusterEdges, a3));

    let mut a4 = Vec::new();
    if let (Some(lo), Some(oo)) = (&lat_order, &obs_order) {
        let te = total_effects(model)?;
        let rl = reachability(&model.a, lo);
        let ro = reachability(&model.b, oo);
        for i in 0..q {
            for j in 0..q {
                if i != j && rl[i][j] && te.alpha_ll[(i, j)].abs() <= FAITHFULNESS_TOL {
                    a4.push(format!(
                        "{}->{}",
                        model.latent_names[j], model.latent_names[i]
                    ));
                }
            }
        }
        for i in 0..p {
            for j in 0..p {
                if i != j && ro[i][j] && te.alpha_oo[(i, j)].abs() <= FAITHFULNESS_TOL {
                    a4.push(format!(
                        "{}->{}",
                        model.observed_names[j], model.observed_names[i]
                    ));
                }
            }
            for j in 0..q {
                let connected = (0..p).any(|h| {
                    ro[i][h] && (0..q).any(|l| model.lambda[(h, l)] != EDGE_EPS && rl[l][j])
                });
                if connected && te.alpha_ol[(i, j)].abs() <= FAITHFULNESS_TOL {
                    a4.push(format!(
                        "{}->{}",
                        model.latent_names[j], model.observed_names[i]
                    ));
                }
            }
        }
    }
    checks.push(entry(Assumption::A4Faithfulness, a4));

    let mut a5 = Vec::new();
    let named = model
        .latent_names
        .iter()
        .zip(&model.latent_disturbances)
        .chain(
            model
                .observed_names
                .iter()
                .zip(&model.observed_disturbances),
        );
    for (name, d) in named {
        for k in 3..=6 {
            if d.cumulant(k)?.abs() <= CUMULANT_TOL {
                a5.push(format!("{name}: order {k}"));
            }
        }
    }
    checks.push(entry(Assumption::A5NonzeroCumulants, a5));

    let mut norm = Vec::new();
    if obs_order.is_some() {
        for (j, rep) in representatives(model).into_iter().enumerate() {
            if let Some(i) = rep {
                if model.lambda[(i, j)] != 1.0 {
                    norm.push(format!(
                        "{}->{}",
                        model.latent_names[j], model.observed_names[i]
                    ));
                }
            }
        }
    }
    checks.push(entry(Assumption::Normalization, norm));

    Ok(ValidationReport { checks })
}

/// Simulated data together with the disturbance draws that produced it.
pub struct Simulation {
    pub data: SampleMatrix,
    /// n x (q + p) disturbance draws, latent columns first.
    pub disturbances: DMatrix<f64>,
}

pub fn simulate(model: &ModelSpec, n: usize, seed: u64) -> Result<SampleMatrix> {
    Ok(simulate_with_disturbances(model, n, seed)?.data)
}

pub fn simulate_with_disturbances(model: &ModelSpec, n: usize, seed: u64) -> Result<Simulation> {
    if n == 0 {
        return Err(Error::Input("sample size must be at least 1".into()));
    }
    let m = mixing_matrix(model)?;
    let samplers: Vec<Sampler> = model
        .latent_disturbances
        .iter()
        .chain(model.observed_disturbances.iter())
        .map(|d| d.sampler())
        .collect::<Result<_>>()?;
    let s = samplers.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = DMatrix::<f64>::zeros(n, s);
    for r in 0..n {
        for (c, sampler) in samplers.iter().enumerate() {
            u[(r, c)] = sampler.draw(&mut rng);
        }
    }
    let x = &u * m.transpose();
    let columns = (0..model.p())
        .map(|c| x.column(c).iter().copied().collect())
        .collect();
    let data = SampleMatrix::new(model.observed_names.clone(), columns)?;
    Ok(Simulation {
        data,
        disturbances: u,
    })
}

/// Graph skeleton from which random coefficient draws are made.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skeleton {
    pub latent_names: Vec<String>,
    pub observed_names: Vec<String>,
    /// `(parent, child)` latent edges.
    pub latent_edges: Vec<(usize, usize)>,
    /// Latent parent of each observed variable.
    pub observed_parent: Vec<usize>,
    /// `(parent, child)` observed edges.
    pub observed_edges: Vec<(usize, usize)>,
}

impl Skeleton {
    pub fn new(
        q: usize,
        observed_parent: Vec<usize>,
        latent_edges: Vec<(usize, usize)>,
        observed_edges: Vec<(usize, usize)>,
    ) -> Self {
        let p = observed_parent.len();
        Skeleton {
            latent_names: (1..=q).map(|i| format!("L{i}")).collect(),
            observed_names: (1..=p).map(|i| format!("X{i}")).collect(),
            latent_edges,
            observed_parent,
            observed_edges,
        }
    }

    pub fn q(&self) -> usize {
        self.latent_names.len()
    }

    pub fn p(&self) -> usize {
        self.observed_names.len()
    }

    /// Model with unit coefficients on every edge (structure only).
    pub fn unit_model(&self) -> ModelSpec {
        let (q, p) = (self.q(), self.p());
        let mut a = DMatrix::zeros(q, q);
        let mut lambda = DMatrix::zeros(p, q);
        let mut b = DMatrix::zeros(p, p);
        for &(from, to) in &self.latent_edges {
            a[(to, from)] = 1.0;
        }
        for (i, &l) in self.observed_parent.iter().enumerate() {
            lambda[(i, l)] = 1.0;
        }
        for &(from, to) in &self.observed_edges {
            b[(to, from)] = 1.0;
        }
        ModelSpec {
            latent_names: self.latent_names.clone(),
            observed_names: self.observed_names.clone(),
            a,
            lambda,
            b,
            latent_disturbances: vec![Disturbance::default(); q],
            observed_disturbances: vec![Disturbance::default(); p],
        }
    }

    /// Number of coefficients drawn by [`random_model_instance`].
    pub fn free_coefficients(&self) -> usize {
        let reps = representatives(&self.unit_model())
            .into_iter()
            .flatten()
            .count();
        self.latent_edges.len() + self.p() - reps + self.observed_edges.len()
    }
}

/// Draws coefficients for a skeleton: latent and loading coefficients from
/// U(1.1, 1.5), observed edges from U(0.5, 0.9); representatives get loading 1.
pub fn random_model_instance(skeleton: &Skeleton, seed: u64) -> Result<ModelSpec> {
    let mut model = skeleton.unit_model();
    if skeleton.observed_parent.iter().any(|&l| l >= skeleton.q()) {
        return Err(Error::Input("observed parent index out of range".into()));
    }
    let structural = validate(&model)?;
    let broken: Vec<Assumption> = structural
        .failed()
        .into_iter()
        .filter(|a| !matches!(a, Assumption::A4Faithfulness | Assumption::Normalization))
        .collect();
    if !broken.is_empty() {
        return Err(Error::Input(format!("skeleton violates {broken:?}")));
    }
    let reps = representatives(&model);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let strong = Uniform::new(1.1, 1.5).expect("valid range");
    let weak = Uniform::new(0.5, 0.9).expect("valid range");
    for &(from, to) in &skeleton.latent_edges {
        model.a[(to, from)] = strong.sample(&mut rng);
    }
    for (i, &l) in skeleton.observed_parent.iter().enumerate() {
        model.lambda[(i, l)] = if reps[l] == Some(i) {
            1.0
        } else {
            strong.sample(&mut rng)
        };
    }
    for &(from, to) in &skeleton.observed_edges {
        model.b[(to, from)] = weak.sample(&mut rng);
    }
    Ok(model)
}

/// Names of the shipped skeletons.
pub const BUILTIN_MODELS: [&str; 13] = [
    "a",
    "b",
    "c",
    "d",
    "e",
    "f",
    "fig2a",
    "fig2b",
    "fig3a",
    "fig3b",
    "tilde_a",
    "tilde_b",
    "democracy",
];

/// Shipped graph skeletons. Indices in edge lists are zero-based.
pub fn builtin_skeleton(name: &str) -> Option<Skeleton> {
    let s = match name {
        // L1 -> X1, X2, X3; X2 -> X3
        "a" | "fig3a" => Skeleton::new(1, vec![0, 0, 0], vec![], vec![(1, 2)]),
        // L1 -> X1, X2, X3; X1 -> X2 -> X3
        "b" => Skeleton::new(1, vec![0, 0, 0], vec![], vec![(0, 1), (1, 2)]),
        // L1 -> L2; L1 -> X1; L2 -> X2, X3; X2 -> X3
        "c" | "fig3b" => Skeleton::new(2, vec![0, 1, 1], vec![(0, 1)], vec![(1, 2)]),
        // L1 -> L2; L1 -> X1; L2 -> X2, X3, X4; X3 -> X4
        "d" => Skeleton::new(2, vec![0, 1, 1, 1], vec![(0, 1)], vec![(2, 3)]),
        // L1 -> L2 -> L3; Li -> Xi; L3 -> X4; X3 -> X4
        "e" => Skeleton::new(3, vec![0, 1, 2, 2], vec![(0, 1), (1, 2)], vec![(2, 3)]),
        "f" => Skeleton::new(
            3,
            vec![0, 1, 2, 2],
            vec![(0, 1), (1, 2), (0, 2)],
            vec![(2, 3)],
        ),
        // L1 -> L2 -> L3; Li -> Xi; L3 -> X4, X5; X3 -> X5
        "fig2a" => Skeleton::new(3, vec![0, 1, 2, 2, 2], vec![(0, 1), (1, 2)], vec![(2, 4)]),
        // L1 -> L2 -> L3; Li -> Xi; L3 -> X4..X6; X4 -> X5, X4 -> X6, X5 -> X6
        "fig2b" => Skeleton::new(
            3,
            vec![0, 1, 2, 2, 2, 2],
            vec![(0, 1), (1, 2)],
            vec![(3, 4), (3, 5), (4, 5)],
        ),
        // L1 -> L2, L1 -> L3; L1 -> X1; L2 -> X2, X4; L3 -> X3, X5
        "tilde_a" => Skeleton::new(3, vec![0, 1, 2, 1, 2], vec![(0, 1), (0, 2)], vec![]),
        // L1 -> L2 -> L3; L1 -> X1; L2 -> X2, X4; L3 -> X3, X5; X3 -> X5
        "tilde_b" => Skeleton::new(3, vec![0, 1, 2, 1, 2], vec![(0, 1), (1, 2)], vec![(2, 4)]),
        "democracy" => {
            let mut s = Skeleton::new(
                3,
                vec![0, 0, 1, 1, 2, 2],
                vec![(0, 1), (1, 2), (0, 2)],
                vec![],
            );
            s.latent_names = ["ind60", "dem60", "dem65"].map(String::from).to_vec();
            s.observed_names = ["x1", "x2", "y3", "y4", "y5", "y6"]
                .map(String::from)
                .to_vec();
            s
        }
        _ => return None,
    };
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lognormal_cumulants_match_closed_form_low_orders() {
        let d = Disturbance::default();
        let s2: f64 = 0.64;
        let var = (s2.exp() - 1.0) * (2.0 * -1.1 + s2).exp();
        assert_relative_eq!(d.cumulant(2).unwrap(), var, max_relative = 1e-12);
        let skew = (s2.exp() + 2.0) * (s2.exp() - 1.0).sqrt();
        assert_relative_eq!(
            d.cumulant(3).unwrap(),
            skew * var.powf(1.5),
            max_relative = 1e-10
        );
        let exkurt = (4.0 * s2).exp() + 2.0 * (3.0 * s2).exp() + 3.0 * (2.0 * s2).exp() - 6.0;
        assert_relative_eq!(
            d.cumulant(4).unwrap(),
            exkurt * var * var,
            max_relative = 1e-10
        );
        assert_eq!(d.cumulant(1).unwrap(), 0.0);
        assert!(d.cumulant(7).is_err());
    }

    #[test]
    fn uniform_cumulants() {
        let d = Disturbance::UniformCentered { a: -1.0, b: 1.0 };
        assert_relative_eq!(d.cumulant(2).unwrap(), 1.0 / 3.0, max_relative = 1e-12);
        assert_eq!(d.cumulant(3).unwrap(), 0.0);
        assert_relative_eq!(d.cumulant(4).unwrap(), -2.0 / 15.0, max_relative = 1e-12);
    }

    #[test]
    fn unit_skeleton_c_structure() {
        let m = builtin_skeleton("c").unwrap().unit_model();
        assert_eq!(m.clusters(), vec![vec![0], vec![1, 2]]);
        assert_eq!(representatives(&m), vec![Some(0), Some(1)]);
    }

    #[test]
    fn topological_order_rejects_cycles() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = 1.0;
        m[(1, 0)] = 1.0;
        assert!(topological_order(&m).is_none());
    }

    #[test]
    fn json_round_trip() {
        let m = random_model_instance(&builtin_skeleton("f").unwrap(), 3).unwrap();
        assert_eq!(ModelSpec::from_json(&m.to_json().unwrap()).unwrap(), m);
    }
}
