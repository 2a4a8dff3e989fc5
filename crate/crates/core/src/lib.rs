//! Amplifier power allocation for two-hop amplify-and-forward relay networks
//! that cooperate through a distributed linear-dispersion space-time code.
//!
//! The crate covers three channel-knowledge regimes at the transmitter:
//!
//! * **perfect CSIT** (`|h|`, `|g|` known): the on-off gradient algorithm in
//!   [`onoff`], which switches each relay either off or to its amplifier cap;
//! * **partial CSIT** (`|h|` and the second-hop variances known) and
//! * **statistical CSIT** (variances only): the waterfilling rule in
//!   [`waterfill`], which equalizes `p_i * gamma_gi` across uncapped relays.
//!
//! [`objectives`] holds the conditional pairwise-error-probability bounds the
//! allocators optimize, [`sim`] is a Monte Carlo engine (exhaustive ML
//! decoding) that measures the error rates the allocations achieve, and
//! [`experiment`] wires everything into reproducible, seed-deterministic runs
//! driven by TOML spec files.
//!
//! See the crate `examples/` directory for one runnable program per
//! capability.

pub mod asymptotic;
pub mod error;
pub mod experiment;
pub mod model;
pub mod objectives;
pub mod onoff;
pub mod rng;
pub mod sim;
pub mod waterfill;

pub use error::{Error, Result};
pub use model::{
    amplifier_caps, overall_noise_variance, sample_channels, ChannelRealization, ConstraintKind,
    CsitMode, NetworkConfig, PowerAllocation,
};

/// Complex sample type used throughout.
pub type C64 = num_complex::Complex64;
