//! Test statistics computed from a sample of significands.
//!
//! All functions take significands in `[1, 10)`. Each statistic sorts a copy
//! of its input first, so values are bit-identical under any permutation of
//! the sample.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::{digit_prob, frac_cdf_fast, BenfordMoments};
use crate::error::{Error, Result};

/// Identifier of a test statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StatId {
    /// First-digit Pearson chi-square.
    Q1,
    /// Two-digit Pearson chi-square.
    Q12,
    /// Hotelling statistic on the digit-wise significand sums.
    Q2,
    /// Kolmogorov-Smirnov on `log10 S`.
    KS1,
    /// Kuiper on `log10 S`.
    KU1,
    /// Kolmogorov-Smirnov on the fractional significand.
    KS2,
    /// Kuiper on the fractional significand.
    KU2,
    /// `Q2 - Q1`.
    QDelta,
    /// Min-p combination of KS2 and QDelta.
    GKS,
    /// Min-p combination of KU2 and QDelta.
    GKU,
}

/// Which tail of the null distribution leads to rejection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tail {
    Upper,
    Lower,
}

impl StatId {
    pub const ALL: [StatId; 10] = [
        StatId::Q1,
        StatId::Q12,
        StatId::Q2,
        StatId::KS1,
        StatId::KU1,
        StatId::KS2,
        StatId::KU2,
        StatId::QDelta,
        StatId::GKS,
        StatId::GKU,
    ];

    /// The five statistics aimed at manipulated fractional parts.
    pub const FRACTIONAL: [StatId; 5] = [StatId::KS2, StatId::KU2, StatId::QDelta, StatId::GKS, StatId::GKU];

    pub fn name(self) -> &'static str {
        match self {
            StatId::Q1 => "Q1",
            StatId::Q12 => "Q12",
            StatId::Q2 => "Q2",
            StatId::KS1 => "KS1",
            StatId::KU1 => "KU1",
            StatId::KS2 => "KS2",
            StatId::KU2 => "KU2",
            StatId::QDelta => "QDelta",
            StatId::GKS => "GKS",
            StatId::GKU => "GKU",
        }
    }

    pub fn is_combined(self) -> bool {
        matches!(self, StatId::GKS | StatId::GKU)
    }

    /// The two statistics a combined test is built from.
    pub fn components(self) -> Option<(StatId, StatId)> {
        match self {
            StatId::GKS => Some((StatId::KS2, StatId::QDelta)),
            StatId::GKU => Some((StatId::KU2, StatId::QDelta)),
            _ => None,
        }
    }

    pub fn tail(self) -> Tail {
        if self.is_combined() {
            Tail::Lower
        } else {
            Tail::Upper
        }
    }

    /// Degrees of freedom of the asymptotic chi-square upper tail, if any.
    pub fn asymptotic_df(self) -> Option<f64> {
        match self {
            StatId::Q1 => Some(8.0),
            StatId::Q2 => Some(9.0),
            StatId::Q12 => Some(89.0),
            StatId::QDelta => Some(1.0),
            _ => None,
        }
    }

    /// Base statistics needed to evaluate `ids`, in canonical order.
    pub fn base_set(ids: &[StatId]) -> Vec<StatId> {
        let mut out: Vec<StatId> = ids
            .iter()
            .flat_map(|&id| match id.components() {
                Some((a, b)) => vec![a, b],
                None => vec![id],
            })
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

impl fmt::Display for StatId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StatId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' '))
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match key.as_str() {
            "q1" => StatId::Q1,
            "q12" => StatId::Q12,
            "q2" => StatId::Q2,
            "ks1" => StatId::KS1,
            "ku1" => StatId::KU1,
            "ks2" => StatId::KS2,
            "ku2" => StatId::KU2,
            "qdelta" | "qd" | "delta" => StatId::QDelta,
            "gks" => StatId::GKS,
            "gku" => StatId::GKU,
            _ => return Err(Error::Config(format!("unknown statistic {s:?}"))),
        })
    }
}

/// First-digit frequencies and digit-wise significand means.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DigitVectorStats {
    /// Frequencies of first digits 1..8.
    pub zbar1: [f64; 8],
    /// `zbar2[d-1]` is the sample mean of `S * 1[D = d]`.
    pub zbar2: [f64; 9],
    /// Counts of first digits 1..9.
    pub counts: [usize; 9],
    pub n: usize,
}

fn sorted_copy(sample: &[f64]) -> Vec<f64> {
    let mut v = sample.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

fn digit_stats_sorted(sorted: &[f64]) -> DigitVectorStats {
    let mut counts = [0usize; 9];
    let mut sums = [0.0f64; 9];
    for &s in sorted {
        let d = (s as usize).clamp(1, 9) - 1;
        counts[d] += 1;
        sums[d] += s;
    }
    let n = sorted.len();
    let nf = n as f64;
    let mut zbar1 = [0.0; 8];
    for d in 0..8 {
        zbar1[d] = counts[d] as f64 / nf;
    }
    let mut zbar2 = [0.0; 9];
    for d in 0..9 {
        zbar2[d] = sums[d] / nf;
    }
    DigitVectorStats { zbar1, zbar2, counts, n }
}

/// Digit vectors of a sample.
pub fn digit_stats(sample: &[f64]) -> Result<DigitVectorStats> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(digit_stats_sorted(&sorted_copy(sample)))
}

/// First-digit Pearson statistic.
pub fn q1(stats: &DigitVectorStats) -> f64 {
    let n = stats.n as f64;
    (0..9)
        .map(|d| {
            let expected = n * digit_prob(d as u8 + 1);
            let diff = stats.counts[d] as f64 - expected;
            diff * diff / expected
        })
        .sum()
}

/// `Q1` written as `n (Z1 - mu1)' Sigma1^-1 (Z1 - mu1)`; equals [`q1`].
pub fn q1_quadratic_form(stats: &DigitVectorStats) -> f64 {
    let m = BenfordMoments::get();
    let diff = nalgebra::SVector::<f64, 8>::from_fn(|i, _| stats.zbar1[i] - m.mu1[i]);
    stats.n as f64 * (diff.transpose() * m.sigma1_inv * diff)[(0, 0)]
}

/// Hotelling statistic on the digit-wise significand means.
pub fn q2(stats: &DigitVectorStats) -> f64 {
    let m = BenfordMoments::get();
    let mut diff = [0.0; 9];
    for d in 0..9 {
        diff[d] = stats.zbar2[d] - m.c;
    }
    let mut acc = 0.0;
    for i in 0..9 {
        let mut row = 0.0;
        for j in 0..9 {
            row += m.sigma2_inv[(i, j)] * diff[j];
        }
        acc += diff[i] * row;
    }
    (stats.n as f64 * acc).max(0.0)
}

/// `Q2 - Q1`; negative values are possible.
pub fn q_delta(stats: &DigitVectorStats) -> f64 {
    q2(stats) - q1(stats)
}

/// `floor(x)` that treats values within a few ulps of an integer as
/// that integer, so already-discretized significands keep their digits.
#[inline]
pub(crate) fn robust_floor(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 16.0 * f64::EPSILON * x.abs().max(1.0) {
        r
    } else {
        x.floor()
    }
}

/// Index `10 * (d1 - 1) + d2` of the first two digits.
#[inline]
fn two_digit_cell(s: f64) -> usize {
    let v = robust_floor(s * 10.0) as usize;
    v.clamp(10, 99) - 10
}

fn q12_sorted(sorted: &[f64]) -> f64 {
    let mut counts = [0usize; 90];
    for &s in sorted {
        counts[two_digit_cell(s)] += 1;
    }
    let n = sorted.len() as f64;
    counts
        .iter()
        .enumerate()
        .map(|(cell, &c)| {
            let p = crate::distributions::C * (1.0 / (cell + 10) as f64).ln_1p();
            let diff = c as f64 - n * p;
            diff * diff / (n * p)
        })
        .sum()
}

/// Two-digit Pearson statistic over the 90 cells `10..=99`.
///
/// A value with a single written digit has second digit 0.
pub fn q12(sample: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(q12_sorted(&sorted_copy(sample)))
}

/// `(A, B)` discrepancies of sorted probability-integral transforms against
/// the uniform law: `A = max(i/n - F_i)`, `B = max(F_i - (i-1)/n)`.
fn ks_parts(sorted_f: &[f64]) -> (f64, f64) {
    let n = sorted_f.len() as f64;
    let mut a = f64::NEG_INFINITY;
    let mut b = f64::NEG_INFINITY;
    for (i, &f) in sorted_f.iter().enumerate() {
        let i = i as f64;
        a = a.max((i + 1.0) / n - f);
        b = b.max(f - i / n);
    }
    (a, b)
}

fn log_parts(sorted: &[f64], buf: &mut Vec<f64>) -> (f64, f64) {
    buf.clear();
    buf.extend(sorted.iter().map(|s| s.log10()));
    ks_parts(buf)
}

fn frac_parts(sorted: &[f64], buf: &mut Vec<f64>) -> (f64, f64) {
    buf.clear();
    buf.extend(sorted.iter().map(|s| s - s.floor()));
    buf.sort_unstable_by(f64::total_cmp);
    for f in buf.iter_mut() {
        *f = frac_cdf_fast(*f);
    }
    ks_parts(buf)
}

fn nonempty(sample: &[f64]) -> Result<Vec<f64>> {
    if sample.is_empty() {
        Err(Error::EmptySample)
    } else {
        Ok(sorted_copy(sample))
    }
}

/// Kolmogorov-Smirnov distance of `log10 S` from the uniform law.
pub fn ks1(sample: &[f64]) -> Result<f64> {
    let (a, b) = log_parts(&nonempty(sample)?, &mut Vec::new());
    Ok(a.max(b))
}

/// Kuiper distance of `log10 S` from the uniform law.
pub fn ku1(sample: &[f64]) -> Result<f64> {
    let (a, b) = log_parts(&nonempty(sample)?, &mut Vec::new());
    Ok(a + b)
}

/// Kolmogorov-Smirnov distance of the fractional significands from their
/// Benford law.
pub fn ks2(sample: &[f64]) -> Result<f64> {
    let (a, b) = frac_parts(&nonempty(sample)?, &mut Vec::new());
    Ok(a.max(b))
}

/// Kuiper distance of the fractional significands from their Benford law.
pub fn ku2(sample: &[f64]) -> Result<f64> {
    let (a, b) = frac_parts(&nonempty(sample)?, &mut Vec::new());
    Ok(a + b)
}

/// Value of a single non-combined statistic.
pub fn compute(id: StatId, sample: &[f64]) -> Result<f64> {
    if id.is_combined() {
        return Err(Error::Config(format!(
            "{id} is a combined test and needs a simulated null"
        )));
    }
    let mut out = [0.0];
    Evaluator::new(&[id])?.evaluate(&mut nonempty(sample)?, &mut out);
    Ok(out[0])
}

/// Evaluates a fixed set of base statistics on many samples, reusing
/// scratch buffers. Used by the Monte Carlo engine.
#[derive(Debug, Clone)]
pub struct Evaluator {
    ids: Vec<StatId>,
    buf: Vec<f64>,
}

impl Evaluator {
    pub fn new(ids: &[StatId]) -> Result<Self> {
        if let Some(id) = ids.iter().find(|id| id.is_combined()) {
            return Err(Error::Config(format!("{id} is not a base statistic")));
        }
        Ok(Self {
            ids: ids.to_vec(),
            buf: Vec::new(),
        })
    }

    pub fn ids(&self) -> &[StatId] {
        &self.ids
    }

    /// Writes one value per configured statistic into `out`. The sample is
    /// sorted in place.
    pub fn evaluate(&mut self, sample: &mut [f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.ids.len());
        debug_assert!(!sample.is_empty());
        sample.sort_unstable_by(f64::total_cmp);
        let sample: &[f64] = sample;

        let mut digits = None;
        let mut log_ab = None;
        let mut frac_ab = None;
        for (slot, &id) in out.iter_mut().zip(&self.ids) {
            *slot = match id {
                StatId::Q1 => q1(digits.get_or_insert_with(|| digit_stats_sorted(sample))),
                StatId::Q2 => q2(digits.get_or_insert_with(|| digit_stats_sorted(sample))),
                StatId::QDelta => q_delta(digits.get_or_insert_with(|| digit_stats_sorted(sample))),
                StatId::Q12 => q12_sorted(sample),
                StatId::KS1 | StatId::KU1 => {
                    let (a, b) = *log_ab.get_or_insert_with(|| log_parts(sample, &mut self.buf));
                    if id == StatId::KS1 {
                        a.max(b)
                    } else {
                        a + b
                    }
                }
                StatId::KS2 | StatId::KU2 => {
                    let (a, b) = *frac_ab.get_or_insert_with(|| frac_parts(sample, &mut self.buf));
                    if id == StatId::KS2 {
                        a.max(b)
                    } else {
                        a + b
                    }
                }
                StatId::GKS | StatId::GKU => unreachable!("rejected in Evaluator::new"),
            };
        }
    }
}
