pub mod estimator;
pub mod matrix;
pub mod roots;
pub mod single;

pub use estimator::{sample_cumulant, CumulantEstimator, MAX_ORDER};
pub use matrix::{
    confounders_and_direction, cumulant_matrix, numeric_rank, orders_for, scaled_cumulant_matrix,
    ConfounderCount, Direction,
};
pub use roots::{latent_cumulants, total_effect_roots, LatentCumulantSolution};
pub use single::{a7_ratio, single_confounder_test};
