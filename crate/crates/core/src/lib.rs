//! Simulation of chaotic-masking communication links built from three
//! analog chaotic oscillators, with additive channel noise and the metrics
//! needed to judge synchronization and decoding quality.
//!
//! Modules, from the bottom up:
//!
//! * [`signals`]: sampled traces, the square-wave message, CSV I/O.
//! * [`oscillators`]: the vector fields and the fixed-step RK4 integrator.
//! * [`codec`]: comparator keystream, XOR masking, RC low-pass, decoder.
//! * [`channel`]: seeded Gaussian channel noise.
//! * [`link`]: transmitter, channel and receiver wired end to end, and
//!   noise sweeps.
//! * [`metrics`]: BER, sync error, correlation, glitch counting.
//! * [`cli`]: the command-line harness behind the `chaoscomm` binary.

pub mod channel;
pub mod cli;
pub mod codec;
pub mod error;
pub mod link;
pub mod metrics;
pub mod oscillators;
pub mod signals;

pub use error::{Error, Result};
pub use link::{run_link, sweep_noise, Circuit, LinkConfig, LinkResult};
pub use metrics::SyncReport;
pub use signals::{MessageSpec, Trace};
