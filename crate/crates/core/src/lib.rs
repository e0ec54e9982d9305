//! Utilization-weighted personalized ranking.
//!
//! This crate holds the pure algorithmic pieces of the clickrank search
//! service and builds without `std` (it needs `alloc`):
//!
//! - [`text`]: document statistics (counts, syllables, Flesch reading ease)
//!   and top-k keyword extraction.
//! - [`index`]: the keyword table mapping document keywords to links, and
//!   history-free baseline matching of queries.
//! - [`usage`]: the per-user record of searches, link opens/closes and dwell
//!   time, with sessionization into click sequences.
//! - [`miner`]: GSP and its two weighted variants (recency-weighted and
//!   dwell-weighted) over click sequences.
//! - [`rank`]: per-link utilization scores and the personalized re-ranking
//!   of a baseline result list.
//!
//! IO, persistence, HTTP and the CLI live in the `clickrank` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod index;
pub mod miner;
pub mod rank;
pub mod text;
pub mod usage;

pub use index::{BaselineResult, CorpusIndex, Document, IndexError, KeywordEntry};
pub use miner::{MinerError, MiningConfig, MiningMode, Pattern, SequenceRecord};
pub use rank::{RankedResult, ScoreTable};
pub use text::{DocumentStats, Keyword, StopwordList, TextError};
pub use usage::{ClickEvent, ClickSequence, SearchEvent, Timestamp, UsageError, UsageEvent, UsageLog};
