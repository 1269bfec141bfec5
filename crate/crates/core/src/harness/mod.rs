//! Experiment driver and metrics.

mod metrics;
mod run;

pub use metrics::{box_stats, cdf_points, ela_ratio, window_user_qoe, BoxStats, WindowMetric};
pub use run::{
    fit_user, profile_users, run_experiment, run_seed, summarize, DemandRow, SchemeSummary, SeedRun, SliceRow,
    TrainedPolicies, FACTOR_THRESHOLD,
};
