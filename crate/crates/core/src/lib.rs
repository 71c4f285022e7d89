//! Link-level simulation and large-system analysis of multi-service
//! hierarchical-spreading multiple access (MOMA) on a massive-MIMO OFDM
//! uplink.
//!
//! The crate is organized bottom-up:
//!
//! * [`codebook`]: orthogonal bases, per-class sub-bases, intra-class
//!   signatures, spreading codes and resource mapping.
//! * [`channel`]: correlated multipath channel draws and their second-order
//!   statistics.
//! * [`estimation`]: pilot patterns, noisy pilot observation and LMMSE
//!   interpolation.
//! * [`detection`]: MF/MMSE receivers, exact instantaneous SINR and Monte
//!   Carlo ergodic rates.
//! * [`detequiv`]: fixed-point deterministic equivalents of the SINR.
//! * [`harness`]: scenarios, baselines, sweeps and CSV export.

extern crate blas_src;

pub mod channel;
pub mod codebook;
pub mod detection;
pub mod detequiv;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod linalg;
pub mod rng;
pub mod units;

pub use error::{Error, Result};
