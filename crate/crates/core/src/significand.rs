//! Significand arithmetic and digit-preserving decimal parsing.
//!
//! The significand of a nonzero `x` is the number in `[1, 10)` obtained by
//! shifting the decimal point of `|x|`. Values read from text also carry the
//! number of significant digits that were actually written, because
//! truncated or rounded declarations need a matching discretized null.

use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Digit counts above this are treated as continuous.
pub const DEFAULT_MAX_DIGITS: u32 = 6;

/// Largest double strictly below 10.
pub(crate) const BELOW_TEN: f64 = 9.999_999_999_999_998;

fn scale_by_pow10(a: f64, p: i32) -> f64 {
    if p >= 0 {
        if p > 300 {
            a * 1e300 * 10f64.powi(p - 300)
        } else {
            a * 10f64.powi(p)
        }
    } else {
        a / 10f64.powi(-p)
    }
}

/// Significand `S(x)` in `[1, 10)`.
pub fn significand(x: f64) -> Result<f64> {
    if x == 0.0 || !x.is_finite() {
        return Err(Error::ZeroOrNonFinite(x));
    }
    let a = x.abs();
    let exponent = a.log10().floor() as i32;
    let mut s = scale_by_pow10(a, -exponent);
    while s >= 10.0 {
        s /= 10.0;
    }
    while s < 1.0 {
        s *= 10.0;
    }
    // 0.999..9 * 10 can round up to exactly 10.
    if s >= 10.0 {
        s = 1.0;
    }
    Ok(s)
}

/// First significant digit `D(x)`.
pub fn first_digit(x: f64) -> Result<u8> {
    significand(x).map(|s| s as u8)
}

/// Fractional significand `S(x) - D(x)` in `[0, 1)`.
pub fn fractional_significand(x: f64) -> Result<f64> {
    significand(x).map(|s| s - s.floor())
}

/// How many significant digits a value was written with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DigitCount {
    Exact(u32),
    /// More significant digits than the configured cap.
    Full,
}

impl DigitCount {
    pub fn exact(self) -> Option<u32> {
        match self {
            DigitCount::Exact(k) => Some(k),
            DigitCount::Full => None,
        }
    }

    pub fn is_full(self) -> bool {
        matches!(self, DigitCount::Full)
    }

    fn capped(k: u32, max_digits: u32) -> Self {
        if k > max_digits {
            DigitCount::Full
        } else {
            DigitCount::Exact(k)
        }
    }
}

impl fmt::Display for DigitCount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DigitCount::Exact(k) => write!(f, "{k}"),
            DigitCount::Full => f.write_str("full"),
        }
    }
}

/// One observation reduced to its significand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignificandRecord {
    pub significand: f64,
    pub first_digit: u8,
    pub frac: f64,
    pub digit_count: DigitCount,
    pub raw: Option<String>,
}

impl SignificandRecord {
    /// Record for a significand already in `[1, 10)`.
    pub fn from_significand(s: f64, digit_count: DigitCount) -> Result<Self> {
        if !(1.0..10.0).contains(&s) {
            return Err(Error::domain(format!("significand {s} not in [1, 10)")));
        }
        let first_digit = s as u8;
        Ok(Self {
            significand: s,
            first_digit,
            frac: s - first_digit as f64,
            digit_count,
            raw: None,
        })
    }

    /// Record for an arbitrary numeric value, treated as continuous.
    pub fn from_value(x: f64) -> Result<Self> {
        Self::from_significand(significand(x)?, DigitCount::Full)
    }
}

/// Parse a decimal string, keeping the number of written significant digits.
///
/// Digits are counted from the first nonzero digit through the last digit
/// written in the mantissa, so trailing zeros count: `"3.140"` has four.
/// Counts above `max_digits` become [`DigitCount::Full`].
pub fn parse_decimal(input: &str, max_digits: u32) -> Result<SignificandRecord> {
    let text = input.trim();
    let bad = |reason| Error::Parse {
        input: input.to_string(),
        reason,
    };
    let bytes = text.as_bytes();
    let mut i = 0;
    if matches!(bytes.first(), Some(b'+' | b'-')) {
        i += 1;
    }
    let mut digits = Vec::with_capacity(bytes.len());
    let mut seen_point = false;
    while i < bytes.len() {
        match bytes[i] {
            c @ b'0'..=b'9' => digits.push(c - b'0'),
            b'.' if !seen_point => seen_point = true,
            b'.' => return Err(bad("more than one decimal point")),
            b'e' | b'E' => break,
            _ => return Err(bad("unexpected character")),
        }
        i += 1;
    }
    if digits.is_empty() {
        return Err(bad("no digits in mantissa"));
    }
    if i < bytes.len() {
        // Exponent: only validated; the significand does not depend on it.
        i += 1;
        if matches!(bytes.get(i), Some(b'+' | b'-')) {
            i += 1;
        }
        if i == bytes.len() {
            return Err(bad("empty exponent"));
        }
        if !bytes[i..].iter().all(u8::is_ascii_digit) {
            return Err(bad("malformed exponent"));
        }
    }

    let Some(first) = digits.iter().position(|&d| d != 0) else {
        return Err(Error::ZeroValue(input.to_string()));
    };
    let written = &digits[first..];
    let mut repr = String::with_capacity(written.len() + 1);
    repr.push((b'0' + written[0]) as char);
    repr.push('.');
    repr.extend(written[1..].iter().map(|&d| (b'0' + d) as char));
    if written.len() == 1 {
        repr.push('0');
    }
    let mut s: f64 = repr.parse().map_err(|_| bad("unparseable mantissa"))?;
    // Twenty nines round to 10.0; keep the written first digit.
    if s >= 10.0 {
        s = BELOW_TEN;
    }
    let count = u32::try_from(written.len()).unwrap_or(u32::MAX);
    let mut record = SignificandRecord::from_significand(s, DigitCount::capped(count, max_digits))?;
    record.raw = Some(text.to_string());
    Ok(record)
}

/// Read the one-value-per-line format. Blank lines and lines starting with
/// `#` are skipped; errors carry 1-based line numbers.
pub fn read_records<R: BufRead>(reader: R, max_digits: u32) -> Result<Vec<SignificandRecord>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let record = parse_decimal(trimmed, max_digits).map_err(|e| Error::Line {
            line: idx + 1,
            source: Box::new(e),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Counts of observations by number of significant digits, plus the digit
/// count attached to each order statistic of the sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationProfile {
    /// `counts[k - 1]` observations have exactly `k` significant digits.
    pub counts: Vec<usize>,
    pub max_digits: u32,
    pub n_full: usize,
    pub n: usize,
    /// Digit count of the `i`-th smallest significand.
    pub pattern: Vec<DigitCount>,
}

impl TruncationProfile {
    /// Profile observed in a sample; the rank pattern follows the sorted
    /// significands (ties keep input order).
    pub fn from_records(records: &[SignificandRecord], max_digits: u32) -> Self {
        let mut order: Vec<usize> = (0..records.len()).collect();
        order.sort_by(|&a, &b| records[a].significand.total_cmp(&records[b].significand));
        let pattern: Vec<DigitCount> = order
            .iter()
            .map(|&i| match records[i].digit_count {
                DigitCount::Exact(k) if k <= max_digits => DigitCount::Exact(k),
                _ => DigitCount::Full,
            })
            .collect();
        Self::from_pattern(pattern, max_digits)
    }

    /// Profile with the given counts spread evenly over the ranks.
    pub fn from_counts(counts: &[usize], n_full: usize) -> Result<Self> {
        let max_digits = u32::try_from(counts.len())
            .ok()
            .filter(|&k| k >= 1)
            .ok_or_else(|| Error::domain("profile needs at least one digit class"))?;
        let n = counts.iter().sum::<usize>() + n_full;
        if n == 0 {
            return Err(Error::EmptySample);
        }
        // Each rank goes to the class furthest behind its proportional share.
        let mut targets: Vec<(DigitCount, usize)> = counts
            .iter()
            .enumerate()
            .map(|(k, &c)| (DigitCount::Exact(k as u32 + 1), c))
            .collect();
        targets.push((DigitCount::Full, n_full));
        let mut assigned = vec![0usize; targets.len()];
        let mut pattern = Vec::with_capacity(n);
        for i in 0..n {
            let mut best = 0;
            let mut best_deficit = f64::NEG_INFINITY;
            for (j, &(_, total)) in targets.iter().enumerate() {
                if assigned[j] >= total {
                    continue;
                }
                let deficit = total as f64 * (i + 1) as f64 / n as f64 - assigned[j] as f64;
                if deficit > best_deficit {
                    best_deficit = deficit;
                    best = j;
                }
            }
            assigned[best] += 1;
            pattern.push(targets[best].0);
        }
        Ok(Self::from_pattern(pattern, max_digits))
    }

    /// Every observation written with exactly `k` digits.
    pub fn uniform(n: usize, k: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::domain("digit count must be at least 1"));
        }
        let mut counts = vec![0; k as usize];
        counts[k as usize - 1] = n;
        Self::from_counts(&counts, 0)
    }

    fn from_pattern(pattern: Vec<DigitCount>, max_digits: u32) -> Self {
        let mut counts = vec![0usize; max_digits as usize];
        let mut n_full = 0;
        for d in &pattern {
            match d {
                DigitCount::Exact(k) => counts[*k as usize - 1] += 1,
                DigitCount::Full => n_full += 1,
            }
        }
        Self {
            counts,
            max_digits,
            n_full,
            n: pattern.len(),
            pattern,
        }
    }

    /// True when at least one observation has a finite digit count.
    pub fn is_discretized(&self) -> bool {
        self.n_full < self.n
    }
}
