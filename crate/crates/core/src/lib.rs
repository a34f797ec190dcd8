//! Temporal and content-selection analysis of news consumption logs.
//!
//! The crate is organised by analysis stage:
//!
//! - [`ingest`]: behavior-log parsers, canonical corpus, real-time histories.
//! - [`sessions`]: inactivity-threshold segmentation and hourly profiles.
//! - [`temporal`]: daily Fourier rhythm, interval and intra-session fits.
//! - [`content`]: embedding similarity, exposure diversity, Wasserstein shifts.
//! - [`cohorts`]: interest signatures, clustering, deviation profiles.
//! - [`abm`]: agent-based click simulator.
//! - [`pipeline`]: file-level stages shared by the command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod abm;
pub mod cohorts;
pub mod content;
pub mod error;
pub mod ingest;
pub mod pipeline;
pub mod rng;
pub mod sessions;
pub mod stats;
pub mod temporal;

pub use error::{Error, Result};

/// Seconds in one day.
pub const DAY_SECS: i64 = 86_400;

/// Hour of day in `[0, 24)` for an epoch timestamp shifted by `utc_offset_secs`.
pub fn hour_of_day(timestamp: f64, utc_offset_secs: i64) -> f64 {
    let local = timestamp + utc_offset_secs as f64;
    local.rem_euclid(DAY_SECS as f64) / 3600.0
}

/// Integer hour bin in `0..24`.
pub fn hour_bin(timestamp: f64, utc_offset_secs: i64) -> usize {
    (hour_of_day(timestamp, utc_offset_secs).floor() as usize).min(23)
}
