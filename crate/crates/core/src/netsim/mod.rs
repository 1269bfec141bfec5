//! Slotted network and playback simulation.

mod channel;
mod context;
mod playback;
mod sim;

pub use channel::{
    achievable_rate, median_path_loss, median_spectral_efficiency, open_uniform, path_loss, snr_linear,
    standard_normal, ChannelModel,
};
pub use context::behavior_env_trace;
pub use playback::{select_level, step_playback};
pub use sim::{run_window, serving_station, Allocation, Orchestrator, Simulator, SlotRecord, SlotView, TrafficLanes, UserView};
