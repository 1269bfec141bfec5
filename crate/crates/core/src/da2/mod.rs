//! Level-two digital agent: demand aggregation, slice window sizing,
//! greedy slicing and best-response slice adjustment.

mod demand;
mod game;
mod slicing;
mod window;

pub use demand::{abstract_demand, marginal_gains, Cell, DemandDistribution};
pub use game::{best_response_adjust, GameReport};
pub use slicing::{greedy_slice, greedy_slice_traced, Capacities, Mechanism, Quanta, SliceConfig};
pub use window::{dynamics_score, dynamics_to_window, DEFAULT_DYNAMICS_THRESHOLDS, WINDOW_MINUTES};
