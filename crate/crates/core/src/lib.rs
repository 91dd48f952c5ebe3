//! Binary restricted Boltzmann machines trained by contrastive divergence
//! and its importance-weighted population variant.

pub mod bench;
pub mod data;
pub mod error;
pub mod estimators;
pub mod exact;
pub mod io;
pub mod math;
pub mod rbm;
pub mod rng;
pub mod samplers;
pub mod training;

#[cfg(test)]
mod testutil;

pub use error::{RbmError, Result};
pub use estimators::{
    cd_gradient, chain_gradient, effective_sample_size, log_importance_weight, log_importance_weight_hidden, pcd_gradient,
    pop_cd_gradient, pop_cd_gradient_hidden_weights, pop_cd_gradient_loo, positive_phase, pt_gradient, self_normalized_weights, GradientEstimate,
    Weighting,
};
pub use exact::{exact_gradient, exact_log_likelihood, log_partition_exact, ExactOracle, DEFAULT_ENUMERATION_LIMIT};
pub use rbm::{BinaryBatch, BinaryVector, GradientTriple, Layer, RbmParams};
pub use rng::RngStream;
pub use samplers::{
    ais_log_partition, ground_truth_negative_phase, pcd_step, pt_step, run_cd_chain, sample_layer, AisBase, AisConfig,
    AisEstimate, AisSchedule, ChainState, GroundTruthConfig, PtEnsemble, SwapStats,
};
pub use training::{
    init_params, negative_log_likelihood, sgd_step, train, train_from, Algorithm, EvalMethod, Init, TrainConfig, TrainLogRow,
    Trainer,
};
pub use bench::{
    measure_bias_variance, measure_with, prepare_reference_model, reference_gradient, reference_train_config,
    BiasVarianceReport, EstimatorConfig,
};
pub use data::{
    generate_artificial_modes, generate_bars_and_stripes, generate_from_modes, load_binary_matrix, BinaryFormat, ModesConfig,
};
pub use io::{load_model, read_model, save_model, write_model};
