//! Tests of Benford's law that look past the first digit.
//!
//! The first-digit chi-square test cannot see data whose leading digits were
//! made to follow Benford's law while the remaining digits were invented.
//! This crate adds tests on the fractional part of the significand
//! (Kolmogorov-Smirnov, Kuiper, the Hotelling-minus-Pearson statistic
//! `QDelta` and their min-p combinations), with exact p-values from Monte
//! Carlo nulls that can mimic the number of significant digits actually
//! recorded in the data.
//!
//! ```
//! use fracdigit_core::{null::{run_test, TestOptions}, parse_decimal, StatId};
//!
//! let records: Vec<_> = ["1.25", "3.4", "11.07", "0.0291", "7.5", "2.01", "1.9", "5.55"]
//!     .iter()
//!     .map(|s| parse_decimal(s, 6).unwrap())
//!     .collect();
//! let opts = TestOptions { stats: vec![StatId::Q1, StatId::KS2], replicates: 200, seed: 1, ..Default::default() };
//! let outcome = run_test(&records, &opts, None).unwrap();
//! assert_eq!(outcome.reports.len(), 2);
//! ```

pub mod asymptotics;
pub mod cache;
pub mod diagnostics;
pub mod distributions;
pub mod error;
pub mod generators;
pub mod null;
pub mod rng;
pub mod significand;
pub mod special;
pub mod statistics;

pub use error::{Error, Result};
pub use generators::{DataModel, DiscretizeMode, Family};
pub use null::{NullDistribution, NullKind};
pub use rng::StreamRng;
pub use significand::{parse_decimal, read_records, DigitCount, SignificandRecord, TruncationProfile};
pub use statistics::StatId;

/// Library version, embedded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
