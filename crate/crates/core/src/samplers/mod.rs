//! Block-Gibbs kernels and the samplers built on them.

mod ais;
mod gibbs;
mod tempering;

pub use ais::{ais_log_partition, AisBase, AisConfig, AisEstimate, AisSchedule};
pub use gibbs::{pcd_step, run_cd_chain, sample_layer, ChainState};
pub(crate) use gibbs::{sample_into, Gibbs};
pub use tempering::{ground_truth_negative_phase, pt_step, GroundTruthConfig, PtEnsemble, SwapStats};
