//! Monte Carlo null distributions, p-values, quantiles and min-p combined
//! tests.
//!
//! Replicate `b` of a simulation is computed from the substream `b` of the
//! seed's root stream, so results are bit-identical for any number of worker
//! threads.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::cache::{sha256, CacheKey, NullCache};
use crate::error::{Error, Result};
use crate::generators::{discretize_unchecked, jitter, pow10_unit, DiscretizeMode};
use crate::rng::StreamRng;
use crate::significand::{DigitCount, SignificandRecord, TruncationProfile, DEFAULT_MAX_DIGITS};
use crate::special::chi2_sf;
use crate::statistics::{Evaluator, StatId, Tail};

/// Smallest replicate count accepted by the simulators.
pub const MIN_REPLICATES: usize = 100;
/// Default ceiling on replicate storage, in bytes.
pub const DEFAULT_MEMORY_CEILING: u64 = 1 << 30;

const CHUNK: usize = 256;

/// How null samples are discretized to mimic the observed digit counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Discretization {
    pub profile: TruncationProfile,
    pub mode: DiscretizeMode,
    pub jitter: bool,
}

/// The null law replicates are drawn from.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum NullKind {
    /// i.i.d. Benford significands.
    #[default]
    Plain,
    /// Benford significands whose order statistics are cut to the digit
    /// counts of the profile.
    Discretized(Discretization),
}

impl NullKind {
    pub fn truncated(profile: TruncationProfile) -> Self {
        NullKind::Discretized(Discretization {
            profile,
            mode: DiscretizeMode::Truncate,
            jitter: false,
        })
    }

    pub fn rounded(profile: TruncationProfile) -> Self {
        NullKind::Discretized(Discretization {
            profile,
            mode: DiscretizeMode::Round,
            jitter: false,
        })
    }

    pub fn label(&self) -> String {
        match self {
            NullKind::Plain => "plain".into(),
            NullKind::Discretized(d) => {
                let base = match d.mode {
                    DiscretizeMode::Truncate => "truncated",
                    DiscretizeMode::Round => "rounded",
                };
                if d.jitter {
                    format!("{base}+jitter")
                } else {
                    base.into()
                }
            }
        }
    }

    /// Canonical text identifying this null for samples of size `n`.
    pub fn describe(&self, n: usize) -> String {
        match self {
            NullKind::Plain => format!("plain;n={n}"),
            NullKind::Discretized(d) => {
                let pattern: Vec<String> = d
                    .profile
                    .pattern
                    .iter()
                    .map(|k| match k {
                        DigitCount::Exact(k) => k.to_string(),
                        DigitCount::Full => "F".into(),
                    })
                    .collect();
                format!("{};n={n};pattern={}", self.label(), pattern.join(","))
            }
        }
    }

    pub fn digest(&self, n: usize) -> [u8; 32] {
        sha256(self.describe(n).as_bytes())
    }

    fn check_n(&self, n: usize) -> Result<()> {
        if n == 0 {
            return Err(Error::EmptySample);
        }
        if let NullKind::Discretized(d) = self {
            if d.profile.n != n || d.profile.pattern.len() != n {
                return Err(Error::domain(format!(
                    "profile describes {} observations, sample has {n}",
                    d.profile.n
                )));
            }
            if let Some(k) = d.profile.pattern.iter().filter_map(|k| k.exact()).find(|&k| k == 0 || k > 15) {
                return Err(Error::domain(format!("digit count {k} not in 1..=15")));
            }
        }
        Ok(())
    }
}

impl fmt::Display for NullKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Execution settings that never change results.
#[derive(Debug, Clone)]
pub struct NullConfig {
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Largest replicate storage allowed, in bytes.
    pub memory_ceiling: u64,
}

impl Default for NullConfig {
    fn default() -> Self {
        Self {
            workers: None,
            memory_ceiling: DEFAULT_MEMORY_CEILING,
        }
    }
}

/// Replicates of several statistics computed on the same simulated samples.
#[derive(Debug, Clone)]
pub struct JointReplicates {
    ids: Vec<StatId>,
    /// Replicate-major: `values[b * ids.len() + j]`.
    values: Vec<f64>,
    pub n: usize,
    pub replicates: usize,
    pub seed: u64,
    pub null_kind: NullKind,
}

impl JointReplicates {
    pub fn ids(&self) -> &[StatId] {
        &self.ids
    }

    /// Values of one statistic in replicate order.
    pub fn column(&self, id: StatId) -> Option<Vec<f64>> {
        let j = self.ids.iter().position(|&x| x == id)?;
        let m = self.ids.len();
        Some(self.values.chunks_exact(m).map(|row| row[j]).collect())
    }

    pub fn distribution(&self, id: StatId) -> Result<NullDistribution> {
        if let Some((a, b)) = id.components() {
            let (a, b) = (self.require(a)?, self.require(b)?);
            return Ok(CombinedNull::from_columns(id, a, b, self.n, self.null_kind.clone(), self.seed)?.null);
        }
        Ok(NullDistribution::from_replicates(
            id,
            self.require(id)?,
            self.n,
            self.null_kind.clone(),
            self.seed,
        ))
    }

    pub fn combined(&self, id: StatId) -> Result<CombinedNull> {
        let (a, b) = id
            .components()
            .ok_or_else(|| Error::Config(format!("{id} is not a combined statistic")))?;
        CombinedNull::from_columns(id, self.require(a)?, self.require(b)?, self.n, self.null_kind.clone(), self.seed)
    }

    fn require(&self, id: StatId) -> Result<Vec<f64>> {
        self.column(id)
            .ok_or_else(|| Error::Config(format!("{id} was not simulated")))
    }
}

fn check_budget(b: usize, stats: usize, config: &NullConfig) -> Result<()> {
    let requested = (b as u64).saturating_mul(stats as u64).saturating_mul(8);
    if requested > config.memory_ceiling {
        return Err(Error::Budget {
            requested,
            ceiling: config.memory_ceiling,
        });
    }
    Ok(())
}

fn check_replicates(b: usize) -> Result<()> {
    if b < MIN_REPLICATES {
        return Err(Error::domain(format!("need at least {MIN_REPLICATES} replicates, got {b}")));
    }
    Ok(())
}

/// Cut sorted significands to the digit counts of `pattern`, rank by rank.
pub fn apply_pattern(sorted: &mut [f64], pattern: &[DigitCount], mode: DiscretizeMode) {
    debug_assert_eq!(sorted.len(), pattern.len());
    for (s, k) in sorted.iter_mut().zip(pattern) {
        if let DigitCount::Exact(k) = *k {
            *s = discretize_unchecked(*s, k, mode);
        }
    }
}

/// The null sample of replicate `b`, written into `sample`.
pub fn fill_null_sample(root: &StreamRng, b: u64, n: usize, kind: &NullKind, sample: &mut Vec<f64>) {
    let mut rng = root.substream(b);
    sample.clear();
    sample.extend((0..n).map(|_| pow10_unit(rng.uniform())));
    if let NullKind::Discretized(d) = kind {
        sample.sort_unstable_by(f64::total_cmp);
        apply_pattern(sample, &d.profile.pattern, d.mode);
        if d.jitter {
            jitter(sample, &d.profile.pattern, d.mode, &mut rng);
        }
    }
}

/// Simulate the base statistics `ids` on `b` null samples of size `n`.
pub fn simulate_joint(
    ids: &[StatId],
    n: usize,
    b: usize,
    seed: u64,
    kind: &NullKind,
    config: &NullConfig,
) -> Result<JointReplicates> {
    check_replicates(b)?;
    kind.check_n(n)?;
    let evaluator = Evaluator::new(ids)?;
    let m = ids.len();
    if m == 0 {
        return Err(Error::Config("no statistics requested".into()));
    }
    check_budget(b, m, config)?;
    log::info!("simulating {b} {kind} null replicates of {ids:?} at n = {n}");

    let root = StreamRng::new(seed);
    let mut values = vec![0.0; b * m];
    let run = |values: &mut [f64]| {
        values.par_chunks_mut(CHUNK * m).enumerate().for_each(|(chunk, out)| {
            let mut eval = evaluator.clone();
            let mut sample = Vec::with_capacity(n);
            for (i, row) in out.chunks_exact_mut(m).enumerate() {
                let index = (chunk * CHUNK + i) as u64;
                fill_null_sample(&root, index, n, kind, &mut sample);
                eval.evaluate(&mut sample, row);
            }
        })
    };
    match config.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(|| run(&mut values)),
        None => run(&mut values),
    }
    Ok(JointReplicates {
        ids: ids.to_vec(),
        values,
        n,
        replicates: b,
        seed,
        null_kind: kind.clone(),
    })
}

/// Sorted Monte Carlo replicates of one statistic under a null.
#[derive(Debug, Clone)]
pub struct NullDistribution {
    pub stat: StatId,
    replicates: Vec<f64>,
    pub n: usize,
    pub null_kind: NullKind,
    pub seed: u64,
}

impl NullDistribution {
    /// Wrap raw replicates; they are sorted here.
    pub fn from_replicates(stat: StatId, mut replicates: Vec<f64>, n: usize, null_kind: NullKind, seed: u64) -> Self {
        replicates.sort_unstable_by(f64::total_cmp);
        Self {
            stat,
            replicates,
            n,
            null_kind,
            seed,
        }
    }

    pub fn replicates(&self) -> &[f64] {
        &self.replicates
    }

    pub fn len(&self) -> usize {
        self.replicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replicates.is_empty()
    }

    fn count_above(&self, t: f64) -> usize {
        self.replicates.len() - self.replicates.partition_point(|&x| x <= t)
    }

    fn count_at_least(&self, t: f64) -> usize {
        self.replicates.len() - self.replicates.partition_point(|&x| x < t)
    }

    fn count_at_most(&self, t: f64) -> usize {
        self.replicates.partition_point(|&x| x <= t)
    }

    /// Monte Carlo p-value of an observed value: the share of replicates
    /// strictly beyond it (above for upper-tail statistics, at or below for
    /// the combined tests).
    pub fn p_value(&self, t: f64) -> f64 {
        let b = self.len() as f64;
        match self.stat.tail() {
            Tail::Upper => self.count_above(t) as f64 / b,
            Tail::Lower => self.count_at_most(t) as f64 / b,
        }
    }

    /// `(1 + #{replicates at least as extreme}) / (B + 1)`; never zero.
    pub fn p_value_plus_one(&self, t: f64) -> f64 {
        let hits = match self.stat.tail() {
            Tail::Upper => self.count_at_least(t),
            Tail::Lower => self.count_at_most(t),
        };
        (1 + hits) as f64 / (self.len() + 1) as f64
    }

    /// Critical value at size `gamma`: the order statistic of rank
    /// `ceil((1 - gamma) B)` for upper-tail statistics and `ceil(gamma B)`
    /// for the combined tests.
    pub fn quantile(&self, gamma: f64) -> Result<f64> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::domain(format!("gamma {gamma} not in (0, 1)")));
        }
        if self.is_empty() {
            return Err(Error::EmptySample);
        }
        let b = self.len();
        let level = match self.stat.tail() {
            Tail::Upper => 1.0 - gamma,
            Tail::Lower => gamma,
        };
        Ok(self.replicates[rank(level, b) - 1])
    }

    /// Monte Carlo standard error of [`quantile`](Self::quantile), from the
    /// spread of order statistics `sqrt(B gamma (1 - gamma))` ranks away.
    pub fn quantile_se(&self, gamma: f64) -> Result<f64> {
        let q = self.quantile(gamma)?;
        let b = self.len();
        let level = match self.stat.tail() {
            Tail::Upper => 1.0 - gamma,
            Tail::Lower => gamma,
        };
        let r = rank(level, b);
        let h = ((b as f64) * gamma * (1.0 - gamma)).sqrt().ceil().max(1.0) as usize;
        let lo = self.replicates[r.saturating_sub(h).max(1) - 1];
        let hi = self.replicates[(r + h).min(b) - 1];
        debug_assert!(lo <= q && q <= hi);
        Ok(0.5 * (hi - lo))
    }

    /// Whether an observed value falls in the rejection region at size
    /// `gamma`.
    pub fn rejects(&self, t: f64, gamma: f64) -> Result<bool> {
        let c = self.quantile(gamma)?;
        Ok(match self.stat.tail() {
            Tail::Upper => t > c,
            Tail::Lower => t <= c,
        })
    }
}

/// `ceil(level * b)` clamped to `1..=b`, ignoring float noise in the product.
fn rank(level: f64, b: usize) -> usize {
    let x = level * b as f64;
    let r = (x - 1e-9 * x.max(1.0)).ceil();
    (r as usize).clamp(1, b)
}

/// Null distribution of a min-p combined statistic.
#[derive(Debug, Clone)]
pub struct CombinedNull {
    pub id: StatId,
    pub components: (StatId, StatId),
    sorted: [Vec<f64>; 2],
    /// Sorted replicates of the combined statistic.
    pub null: NullDistribution,
}

impl CombinedNull {
    /// Build from the two component columns in replicate order. Each
    /// replicate's component p-value is taken against the other `B - 1`
    /// replicates of that component, `(1 + #{others >= t}) / (B + 1)`, so
    /// replicates and observed data are treated alike.
    pub fn from_columns(id: StatId, a: Vec<f64>, b: Vec<f64>, n: usize, kind: NullKind, seed: u64) -> Result<Self> {
        let components = id
            .components()
            .ok_or_else(|| Error::Config(format!("{id} is not a combined statistic")))?;
        if a.len() != b.len() || a.is_empty() {
            return Err(Error::domain("component columns must be nonempty and of equal length"));
        }
        let mut sa = a.clone();
        let mut sb = b.clone();
        sa.sort_unstable_by(f64::total_cmp);
        sb.sort_unstable_by(f64::total_cmp);
        let denom = (a.len() + 1) as f64;
        let g: Vec<f64> = a
            .iter()
            .zip(&b)
            .map(|(&x, &y)| {
                let pa = at_least(&sa, x) as f64 / denom;
                let pb = at_least(&sb, y) as f64 / denom;
                pa.min(pb)
            })
            .collect();
        Ok(Self {
            id,
            components,
            sorted: [sa, sb],
            null: NullDistribution::from_replicates(id, g, n, kind, seed),
        })
    }

    /// Component p-value of an observed value, `(1 + #{>= t}) / (B + 1)`.
    pub fn component_p(&self, which: usize, t: f64) -> f64 {
        let s = &self.sorted[which];
        (1 + at_least(s, t)) as f64 / (s.len() + 1) as f64
    }

    /// Combined statistic for observed component values.
    pub fn observe(&self, a: f64, b: f64) -> f64 {
        self.component_p(0, a).min(self.component_p(1, b))
    }
}

fn at_least(sorted: &[f64], t: f64) -> usize {
    sorted.len() - sorted.partition_point(|&x| x < t)
}

/// Null distribution of `stat` under i.i.d. Benford sampling.
pub fn simulate_null(stat: StatId, n: usize, b: usize, seed: u64, config: &NullConfig) -> Result<NullDistribution> {
    simulate_kind(stat, n, b, seed, &NullKind::Plain, config)
}

/// Null distribution of `stat` when the Benford order statistics are cut to
/// the digit counts of `profile`.
pub fn simulate_null_discretized(
    stat: StatId,
    profile: &TruncationProfile,
    mode: DiscretizeMode,
    b: usize,
    seed: u64,
    config: &NullConfig,
) -> Result<NullDistribution> {
    let kind = NullKind::Discretized(Discretization {
        profile: profile.clone(),
        mode,
        jitter: false,
    });
    simulate_kind(stat, profile.n, b, seed, &kind, config)
}

pub fn simulate_kind(stat: StatId, n: usize, b: usize, seed: u64, kind: &NullKind, config: &NullConfig) -> Result<NullDistribution> {
    let ids = StatId::base_set(&[stat]);
    simulate_joint(&ids, n, b, seed, kind, config)?.distribution(stat)
}

/// Null of a combined test with both components computed on the same
/// simulated samples.
pub fn combined_null(id: StatId, n: usize, b: usize, seed: u64, kind: &NullKind, config: &NullConfig) -> Result<CombinedNull> {
    let ids = StatId::base_set(&[id]);
    simulate_joint(&ids, n, b, seed, kind, config)?.combined(id)
}

/// Sorted null replicates of QDelta among samples whose Q1 lies below
/// `q1_threshold`.
pub fn qdelta_given_q1(n: usize, b: usize, seed: u64, q1_threshold: f64, config: &NullConfig) -> Result<Vec<f64>> {
    let joint = simulate_joint(&[StatId::Q1, StatId::QDelta], n, b, seed, &NullKind::Plain, config)?;
    let q1 = joint.column(StatId::Q1).unwrap();
    let qd = joint.column(StatId::QDelta).unwrap();
    let mut kept: Vec<f64> = q1
        .iter()
        .zip(&qd)
        .filter(|(&a, _)| a < q1_threshold)
        .map(|(_, &d)| d)
        .collect();
    kept.sort_unstable_by(f64::total_cmp);
    Ok(kept)
}

/// Upper-tail asymptotic p-value, for statistics that have one.
pub fn asymptotic_p(stat: StatId, t: f64) -> Option<f64> {
    stat.asymptotic_df().map(|df| chi2_sf(t, df))
}

/// Which null `run_test` simulates from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NullChoice {
    /// Truncated when any observation has a finite digit count, else plain.
    #[default]
    Auto,
    Plain,
    Truncated,
    Rounded,
}

impl FromStr for NullChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(NullChoice::Auto),
            "plain" => Ok(NullChoice::Plain),
            "truncated" | "truncate" => Ok(NullChoice::Truncated),
            "rounded" | "round" => Ok(NullChoice::Rounded),
            _ => Err(Error::Config(format!("unknown null {s:?}"))),
        }
    }
}

impl fmt::Display for NullChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NullChoice::Auto => "auto",
            NullChoice::Plain => "plain",
            NullChoice::Truncated => "truncated",
            NullChoice::Rounded => "rounded",
        })
    }
}

/// Settings of a test run.
#[derive(Debug, Clone)]
pub struct TestOptions {
    pub stats: Vec<StatId>,
    /// Null replicates; 0 requests asymptotic p-values only.
    pub replicates: usize,
    pub gamma: f64,
    pub seed: u64,
    pub null: NullChoice,
    /// Spread discretized values over their digit cell, in the data and in
    /// the null replicates.
    pub jitter: bool,
    pub max_digits: u32,
    pub config: NullConfig,
}

impl Default for TestOptions {
    fn default() -> Self {
        Self {
            stats: StatId::ALL.to_vec(),
            replicates: 100_000,
            gamma: 0.01,
            seed: 0,
            null: NullChoice::Auto,
            jitter: false,
            max_digits: DEFAULT_MAX_DIGITS,
            config: NullConfig::default(),
        }
    }
}

/// Result of one statistic.
#[derive(Debug, Clone, Serialize)]
pub struct TestReport {
    pub statistic: StatId,
    pub value: f64,
    /// Monte Carlo p-value, share of replicates strictly more extreme.
    pub p_value: Option<f64>,
    /// `(1 + #{at least as extreme}) / (B + 1)`.
    pub p_value_plus_one: Option<f64>,
    /// Chi-square upper tail, where an asymptotic law is known.
    pub asymptotic_p: Option<f64>,
    /// Monte Carlo critical value at size `gamma`.
    pub critical_value: Option<f64>,
    pub reject: bool,
}

/// All reports of a run together with the settings that produced them.
#[derive(Debug, Clone, Serialize)]
pub struct TestOutcome {
    pub n: usize,
    pub replicates: usize,
    pub gamma: f64,
    pub seed: u64,
    pub null_kind: String,
    pub profile: TruncationProfile,
    pub reports: Vec<TestReport>,
    pub warnings: Vec<String>,
}

impl TestOutcome {
    pub fn report(&self, id: StatId) -> Option<&TestReport> {
        self.reports.iter().find(|r| r.statistic == id)
    }
}

/// Observed significands, jittered when requested. The jitter stream is a
/// fork of the seed's root, disjoint from every replicate substream.
fn observed_sample(records: &[SignificandRecord], kind: &NullKind, seed: u64) -> Vec<f64> {
    let mut sample: Vec<f64> = records.iter().map(|r| r.significand).collect();
    if let NullKind::Discretized(d) = kind {
        if d.jitter {
            let digits: Vec<DigitCount> = records
                .iter()
                .map(|r| match r.digit_count {
                    DigitCount::Exact(k) if k <= d.profile.max_digits => DigitCount::Exact(k),
                    _ => DigitCount::Full,
                })
                .collect();
            let mut rng = StreamRng::new(seed).fork();
            jitter(&mut sample, &digits, d.mode, &mut rng);
        }
    }
    sample
}

/// Replicate columns of the base statistics `ids`, read from the cache
/// where present and simulated (then stored) otherwise.
pub fn load_or_simulate(
    ids: &[StatId],
    n: usize,
    b: usize,
    seed: u64,
    kind: &NullKind,
    config: &NullConfig,
    cache: Option<&NullCache>,
) -> Result<Vec<(StatId, Vec<f64>)>> {
    let key = |stat| CacheKey {
        stat,
        n: n as u64,
        kind_digest: kind.digest(n),
        replicates: b as u64,
        seed,
    };
    let mut found = Vec::new();
    let mut missing = Vec::new();
    for &id in ids {
        match cache.map(|c| c.load(&key(id))).transpose()?.flatten() {
            Some(v) => found.push((id, v)),
            None => missing.push(id),
        }
    }
    if !missing.is_empty() {
        let joint = simulate_joint(&missing, n, b, seed, kind, config)?;
        for id in missing {
            let col = joint.column(id).unwrap();
            if let Some(c) = cache {
                if let Err(e) = c.store(&key(id), &col) {
                    log::warn!("could not cache {id}: {e}");
                }
            }
            found.push((id, col));
        }
    }
    Ok(found)
}

/// Run the requested tests on observed records.
pub fn run_test(records: &[SignificandRecord], opts: &TestOptions, cache: Option<&NullCache>) -> Result<TestOutcome> {
    if records.is_empty() {
        return Err(Error::EmptySample);
    }
    if opts.stats.is_empty() {
        return Err(Error::Config("no statistics requested".into()));
    }
    if !(opts.gamma > 0.0 && opts.gamma < 1.0) {
        return Err(Error::domain(format!("gamma {} not in (0, 1)", opts.gamma)));
    }
    let n = records.len();
    let profile = TruncationProfile::from_records(records, opts.max_digits);
    let discretized = |mode| {
        NullKind::Discretized(Discretization {
            profile: profile.clone(),
            mode,
            jitter: opts.jitter,
        })
    };
    let kind = match opts.null {
        NullChoice::Auto if profile.is_discretized() => discretized(DiscretizeMode::Truncate),
        NullChoice::Auto | NullChoice::Plain => NullKind::Plain,
        NullChoice::Truncated => discretized(DiscretizeMode::Truncate),
        NullChoice::Rounded => discretized(DiscretizeMode::Round),
    };

    let mut warnings = Vec::new();
    if opts.null == NullChoice::Plain && profile.is_discretized() {
        warnings.push(format!(
            "{} of {n} values have at most {} significant digits; a plain null overstates significance for discretized data",
            n - profile.n_full,
            opts.max_digits
        ));
    }
    if opts.stats.contains(&StatId::Q12) && profile.counts.first().is_some_and(|&c| c > 0) {
        warnings.push(format!(
            "{} values have a single significant digit; Q12 takes their second digit as 0",
            profile.counts[0]
        ));
    }
    if opts.jitter && kind == NullKind::Plain {
        warnings.push("jitter has no effect with a plain null".into());
    }

    let base = StatId::base_set(&opts.stats);
    let mut sample = observed_sample(records, &kind, opts.seed);
    let mut observed = vec![0.0; base.len()];
    Evaluator::new(&base)?.evaluate(&mut sample, &mut observed);
    let value_of = |id: StatId| observed[base.iter().position(|&x| x == id).unwrap()];

    let columns = if opts.replicates == 0 {
        if let Some(id) = opts.stats.iter().find(|id| id.asymptotic_df().is_none()) {
            return Err(Error::NoAsymptotic(id.name()));
        }
        Vec::new()
    } else {
        load_or_simulate(&base, n, opts.replicates, opts.seed, &kind, &opts.config, cache)?
    };
    let column = |id: StatId| columns.iter().find(|(x, _)| *x == id).map(|(_, v)| v.clone()).unwrap();

    let mut reports = Vec::with_capacity(opts.stats.len());
    for &id in &opts.stats {
        if opts.replicates == 0 {
            let value = value_of(id);
            let asym = asymptotic_p(id, value);
            reports.push(TestReport {
                statistic: id,
                value,
                p_value: None,
                p_value_plus_one: None,
                asymptotic_p: asym,
                critical_value: None,
                reject: asym.is_some_and(|p| p < opts.gamma),
            });
            continue;
        }
        let (value, null) = match id.components() {
            Some((a, b)) => {
                let comb = CombinedNull::from_columns(id, column(a), column(b), n, kind.clone(), opts.seed)?;
                (comb.observe(value_of(a), value_of(b)), comb.null)
            }
            None => {
                let null = NullDistribution::from_replicates(id, column(id), n, kind.clone(), opts.seed);
                (value_of(id), null)
            }
        };
        reports.push(TestReport {
            statistic: id,
            value,
            p_value: Some(null.p_value(value)),
            p_value_plus_one: Some(null.p_value_plus_one(value)),
            asymptotic_p: asymptotic_p(id, value),
            critical_value: Some(null.quantile(opts.gamma)?),
            reject: null.rejects(value, opts.gamma)?,
        });
    }

    Ok(TestOutcome {
        n,
        replicates: opts.replicates,
        gamma: opts.gamma,
        seed: opts.seed,
        null_kind: kind.label(),
        profile,
        reports,
        warnings,
    })
}
