//! Sample-based learning with linear action-value features.

pub mod features;
pub mod geometric;
pub mod learner;
pub mod regression;

pub use features::{check_feature_norms, FeatureMap, TabularFeatures};
pub use geometric::{sample_geometric, HorizonSampler};
pub use learner::{
    collect_batch, default_exploration, regress_player, run_sample_pg, sample_pg_row, sample_stepsize_cooperative,
    sample_stepsize_potential, step_sample_pg, SamplePgConfig, SampleTuple,
};
pub use regression::{default_weight_bound, mean_squared_loss, project_ball, spgd_regress, RegressionConfig};
