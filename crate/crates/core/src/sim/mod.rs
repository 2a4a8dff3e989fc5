//! Distributed linear-dispersion space-time coding over the relay network.

pub mod codebook;
pub mod link;
pub mod monte_carlo;

pub use codebook::{generate_codebook, LdCodebook};
pub use link::{ml_decode, transmit_frame, transmit_frame_signals, FrameSignals};
pub use monte_carlo::{
    effective_relay_count, run_monte_carlo, Scheme, SimOptions, SimPoint, SimResult, SnrAxis,
};
