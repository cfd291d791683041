//! Spiking-network engine that learns mode and key structure from four-part
//! scores, generates key-conditioned music and compares its learned
//! connectivity with tonal key profiles.

pub mod encoding;
pub mod error;
pub mod eval;
pub mod exec;
pub mod generator;
pub mod io;
pub mod ks;
pub mod persist;
pub mod plasticity;
pub mod score;
pub mod snn;
pub mod synth;
pub mod topology;
pub mod trainer;

pub use error::{Error, Result};

/// Derives a stream seed from a base seed and a path of indices.
pub fn network_seed(base: u64, path: &[u64]) -> u64 {
    path.iter().fold(snn::network::splitmix64(base), |h, &x| {
        snn::network::splitmix64(h ^ x)
    })
}
