//! Digital-agent assisted QoE-driven network orchestration and slicing.
//!
//! The crate is `no_std` (it needs `alloc`) and holds every algorithm of the
//! framework together with a slotted video-streaming simulator:
//!
//! * [`scenario`] - domain entities, defaults and user sampling.
//! * [`netsim`] - mobility, channel, playback and the per-slot simulation loop.
//! * [`qoe`] - MOS generators, distance correlation, the `E = S x I(B, C)`
//!   model, Levenberg-Marquardt fitting and update triggering.
//! * [`learn`] - branch-dueling Q-network with manual backpropagation.
//! * [`da1`] - level-one agents: context emulation, demand prediction,
//!   clustering and two-layer orchestration.
//! * [`da2`] - level-two agents: demand abstraction, adaptive windows,
//!   greedy slicing and best-response slice adjustment.
//! * [`bench`] - the three benchmark schemes.
//! * [`harness`] - experiment driver and metrics.
//!
//! File formats, the CLI and threading live in the companion `simctl` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod bench;
pub mod da1;
pub mod da2;
pub mod error;
pub mod harness;
pub mod learn;
pub mod math;
pub mod netsim;
pub mod qoe;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
