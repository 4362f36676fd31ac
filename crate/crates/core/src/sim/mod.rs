//! Fluid Monte Carlo simulation of MMOO traffic through a tandem of FIFO
//! constant-rate links, each shared with fresh cross traffic.
//!
//! Time advances in slots; within a slot, arrivals are integrated exactly
//! from continuous-time On/Off paths and every link serves up to
//! `C · slot` bits.

mod ccdf;
pub mod checks;
mod rng;
mod source;
mod tandem;

pub use ccdf::EmpiricalCcdf;
pub use rng::{stream, StreamKey};
pub use source::{generate_mmoo, Dwell, MmooPath, Source};
pub use tandem::{
    replicate, run_tandem, virtual_delay_samples, virtual_delays, write_trace, SimConfig,
    TandemTrace,
};
