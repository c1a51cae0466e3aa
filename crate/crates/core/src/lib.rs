//! Causal discovery for linear non-Gaussian models with latent variables:
//! clusters of observed variables, the causal order of their latent parents,
//! and the direct edges among those latents.

pub mod backend;
pub mod config;
pub mod cumulants;
pub mod data;
pub mod error;
pub mod independence;
pub mod model;
pub mod pipeline;
pub mod stage1;
pub mod stage2;
pub mod stage3;

pub use backend::{Backend, PopulationBackend, SampleBackend, Series};
pub use config::{Config, Variant};
pub use data::SampleMatrix;
pub use error::{Error, Result};
pub use model::{
    builtin_skeleton, random_model_instance, simulate, ModelSpec, Skeleton, BUILTIN_MODELS,
};
pub use pipeline::{discover, discover_population, evaluate, DiscoveryResult, Metrics};
