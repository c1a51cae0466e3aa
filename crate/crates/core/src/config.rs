//! Thresholds and switches for a discovery run.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::independence::hsic::HsicOptions;

/// How the single-confounder condition is checked during source search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Sixth-order cumulant identity.
    A7,
    /// Rank-based confounder count.
    Rank,
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a7" => Ok(Variant::A7),
            "rank" => Ok(Variant::Rank),
            other => Err(Error::Input(format!(
                "unknown variant {other:?} (expected a7 or rank)"
            ))),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::A7 => "a7",
            Variant::Rank => "rank",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Config {
    pub alpha_ind: f64,
    pub tau_s: f64,
    pub tau_o: f64,
    pub tau_m1: f64,
    pub tau_m2: f64,
    /// Multiplier applied to `tau_m2` per recursion level beyond the second.
    pub tau_m_growth: f64,
    pub ell_max: usize,
    pub k_match: usize,
    pub hsic_subsample: usize,
    pub hsic_permutations: usize,
    pub permutation_below: usize,
    pub variant: Variant,
    pub seed: u64,
    pub abs_sv_floor: f64,
    pub imag_tol: f64,
    pub vander_cond_max: f64,
    /// Relative floor on |Cov(X_j, X_k)| for triad ratios.
    pub cov_floor: f64,
    /// Relative floor on denominators of ratio statistics.
    pub ratio_floor: f64,
    /// Rescale both series to unit variance before the rank test.
    pub rank_scaling: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            alpha_ind: 0.05,
            tau_s: 0.001,
            tau_o: 0.001,
            tau_m1: 0.001,
            tau_m2: 0.01,
            tau_m_growth: 1.0,
            ell_max: 2,
            k_match: 3,
            hsic_subsample: 2000,
            hsic_permutations: 1000,
            permutation_below: 200,
            variant: Variant::A7,
            seed: 0,
            abs_sv_floor: 1e-12,
            imag_tol: 1e-6,
            vander_cond_max: 1e12,
            cov_floor: 1e-10,
            ratio_floor: 1e-12,
            rank_scaling: true,
        }
    }
}

/// Largest latent count that the order-6 cumulant cap can resolve.
pub const ELL_CAP: usize = 2;

impl Config {
    /// Thresholds for runs on exact population cumulants.
    pub fn population() -> Self {
        Config {
            tau_s: 1e-12,
            tau_o: 1e-6,
            tau_m1: 1e-8,
            tau_m2: 1e-8,
            imag_tol: 1e-6,
            ..Config::default()
        }
    }

    /// `tau_s` used for a named builtin model: 0.001 for (a)-(c), 0.005 otherwise.
    pub fn tau_s_for_model(name: &str) -> f64 {
        match name {
            "a" | "b" | "c" => 0.001,
            _ => 0.005,
        }
    }

    /// Matching threshold at recursion depth `depth` (0 for the first source search).
    pub fn tau_m(&self, depth: usize) -> f64 {
        if depth == 0 {
            self.tau_m1
        } else {
            self.tau_m2 * self.tau_m_growth.powi(depth as i32 - 1)
        }
    }

    pub fn hsic_options(&self) -> HsicOptions {
        HsicOptions {
            alpha: self.alpha_ind,
            subsample_cap: self.hsic_subsample,
            seed: self.seed,
            permutations: self.hsic_permutations,
            permutation_below: self.permutation_below,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("alpha_ind", self.alpha_ind),
            ("tau_s", self.tau_s),
            ("tau_o", self.tau_o),
            ("tau_m1", self.tau_m1),
            ("tau_m2", self.tau_m2),
            ("tau_m_growth", self.tau_m_growth),
            ("abs_sv_floor", self.abs_sv_floor),
            ("imag_tol", self.imag_tol),
            ("vander_cond_max", self.vander_cond_max),
            ("cov_floor", self.cov_floor),
            ("ratio_floor", self.ratio_floor),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Input(format!(
                    "{name} must be a positive finite number"
                )));
            }
        }
        if self.alpha_ind >= 1.0 {
            return Err(Error::Input("alpha_ind must be below 1".into()));
        }
        if self.tau_m1 > self.tau_m2 {
            return Err(Error::Input("tau_m1 must not exceed tau_m2".into()));
        }
        if self.ell_max < 1 || self.ell_max > ELL_CAP {
            return Err(Error::Input(format!(
                "ell_max must be between 1 and {ELL_CAP}"
            )));
        }
        if !(2..=6).contains(&self.k_match) {
            return Err(Error::Input("k_match must be between 2 and 6".into()));
        }
        if self.hsic_subsample < 20 {
            return Err(Error::Input("hsic_subsample must be at least 20".into()));
        }
        Ok(())
    }

    /// Applies one `key = value` assignment.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Input(format!("invalid value {v:?} for {key}")))
        }
        match key {
            "alpha_ind" => self.alpha_ind = num(key, value)?,
            "tau_s" => self.tau_s = num(key, value)?,
            "tau_o" => self.tau_o = num(key, value)?,
            "tau_m1" => self.tau_m1 = num(key, value)?,
            "tau_m2" => self.tau_m2 = num(key, value)?,
            "tau_m_growth" => self.tau_m_growth = num(key, value)?,
            "ell_max" => self.ell_max = num(key, value)?,
            "k_match" => self.k_match = num(key, value)?,
            "hsic_subsample" => self.hsic_subsample = num(key, value)?,
            "hsic_permutations" => self.hsic_permutations = num(key, value)?,
            "permutation_below" => self.permutation_below = num(key, value)?,
            "variant" => self.variant = value.parse()?,
            "seed" => self.seed = num(key, value)?,
            "abs_sv_floor" => self.abs_sv_floor = num(key, value)?,
            "imag_tol" => self.imag_tol = num(key, value)?,
            "vander_cond_max" => self.vander_cond_max = num(key, value)?,
            "cov_floor" => self.cov_floor = num(key, value)?,
            "ratio_floor" => self.ratio_floor = num(key, value)?,
            "rank_scaling" => self.rank_scaling = num(key, value)?,
            other => return Err(Error::Input(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` lines; `#` starts a comment.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut cfg = Config::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                row: lineno + 1,
                col: 1,
                msg: "expected key = value".into(),
            })?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_kv_string(&self) -> String {
        let v = serde_json::to_value(self).expect("config serializes");
        let mut out = String::new();
        if let serde_json::Value::Object(map) = v {
            for (k, val) in map {
                let s = match val {
                    serde_json::Value::String(s) => s,
                    other => other.to_string(),
                };
                out.push_str(&format!("{k} = {s}\n"));
            }
        }
        out
    }
}
