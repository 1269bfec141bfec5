//! Level-one digital agents: per-user context emulation, demand prediction
//! and tailored orchestration inside the slices.

mod cluster;
mod demand;
mod emulate;
mod group;
mod orchestrator;
mod solver;

pub use cluster::cluster_users;
pub use demand::{predict_demand, window_qoe, ChannelStats, DemandLimits, ResourceDemand};
pub use emulate::{emulate_context, ContextTrace, EmulationParams};
pub use group::{
    group_actions, group_allocate, normalize_shares, share_of, shares_from_actions, split_pool, GroupState,
    GROUP_BRANCHES, GROUP_STATE_DIM, SHARE_LEVELS,
};
pub use orchestrator::{group_budgets, GroupFeedback, GroupLearner, GroupPolicies, LevelOne, UserPlan};
pub use solver::{project_capped_simplex, saturation, user_allocate, UserAllocation, UserUtility, KKT_TOLERANCE};
