//! Test oracles and fixtures.
//!
//! The oracles here recompute results the slow, obvious way and share no code
//! with the implementations they check.

pub mod access;
pub mod forest;
pub mod fuzz;
pub mod lcs;
pub mod mail;
pub mod populate;
pub mod tally;

use chrono::{DateTime, TimeZone, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// A fixed instant plus `minutes`.
pub fn t(minutes: i64) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2026, 1, 5, 9, 0, 0).unwrap() + chrono::Duration::minutes(minutes)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
