//! Plot data: QQ pairs of fractional significands against their null law and
//! grids of the limiting density of `(Q1, Q2)`.

use serde::Serialize;

use crate::asymptotics::density_t;
use crate::error::{Error, Result};
use crate::generators::DiscretizeMode;
use crate::null::{Discretization, NullKind};
use crate::rng::StreamRng;
use crate::significand::{SignificandRecord, TruncationProfile};

/// One QQ point: the `rank`-th smallest observed fractional significand and
/// the null quantile at probability `(rank - 1/2) / n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QqPoint {
    pub rank: usize,
    pub probability: f64,
    pub empirical: f64,
    pub null_quantile: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct QqResult {
    pub points: Vec<QqPoint>,
    /// Largest gap between the pooled null CDF at the observed values and
    /// the plotting positions.
    pub max_cdf_deviation: f64,
    /// Asymptotic 1% Kolmogorov-Smirnov band half-width, `1.628 / sqrt(n)`.
    pub ks_band: f64,
    pub null_kind: String,
    pub replicates: usize,
    pub seed: u64,
}

/// Asymptotic 0.99 quantile of the Kolmogorov distribution.
pub const KS_CRITICAL_1PCT: f64 = 1.627_6;

/// QQ pairs of the observed fractional significands against the pooled
/// fractional significands of `b` null samples. The null is discretized to
/// the records' digit pattern unless `plain` is set.
pub fn qq_points(records: &[SignificandRecord], b: usize, seed: u64, max_digits: u32, plain: bool) -> Result<QqResult> {
    if records.is_empty() {
        return Err(Error::EmptySample);
    }
    if b == 0 {
        return Err(Error::domain("QQ plot needs at least one null replicate"));
    }
    let n = records.len();
    let profile = TruncationProfile::from_records(records, max_digits);
    let kind = if plain || !profile.is_discretized() {
        NullKind::Plain
    } else {
        NullKind::Discretized(Discretization {
            profile,
            mode: DiscretizeMode::Truncate,
            jitter: false,
        })
    };

    let mut observed: Vec<f64> = records.iter().map(|r| r.significand.fract()).collect();
    observed.sort_unstable_by(f64::total_cmp);

    let root = StreamRng::new(seed);
    let mut pooled = Vec::with_capacity(n * b);
    let mut sample = Vec::with_capacity(n);
    for i in 0..b as u64 {
        crate::null::fill_null_sample(&root, i, n, &kind, &mut sample);
        pooled.extend(sample.iter().map(|s| s.fract()));
    }
    pooled.sort_unstable_by(f64::total_cmp);
    let total = pooled.len();

    let mut max_dev: f64 = 0.0;
    let points = observed
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let prob = (i as f64 + 0.5) / n as f64;
            let idx = ((prob * total as f64).ceil() as usize).clamp(1, total) - 1;
            let cdf = pooled.partition_point(|&y| y <= x) as f64 / total as f64;
            max_dev = max_dev.max((cdf - prob).abs());
            QqPoint {
                rank: i + 1,
                probability: prob,
                empirical: x,
                null_quantile: pooled[idx],
            }
        })
        .collect();
    Ok(QqResult {
        points,
        max_cdf_deviation: max_dev,
        ks_band: KS_CRITICAL_1PCT / (n as f64).sqrt(),
        null_kind: kind.label(),
        replicates: b,
        seed,
    })
}

/// Point of the density grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityPoint {
    pub x1: f64,
    pub x2: f64,
    pub density: f64,
}

/// `f_T` on the grid `x1 = step, 2 step, ...` up to `x1_max`, `x2` likewise
/// up to `x2_max`, keeping only points with `x1 < x2`.
pub fn density_grid(x1_max: f64, x2_max: f64, step: f64) -> Result<Vec<DensityPoint>> {
    if !(step > 0.0 && x1_max > 0.0 && x2_max > 0.0) || !(x1_max / step <= 1e4 && x2_max / step <= 1e4) {
        return Err(Error::domain("grid needs positive bounds and at most 10^4 steps per axis"));
    }
    let n1 = (x1_max / step + 1e-9).floor() as usize;
    let n2 = (x2_max / step + 1e-9).floor() as usize;
    let mut out = Vec::new();
    for i in 1..=n1 {
        let x1 = i as f64 * step;
        for j in 1..=n2 {
            let x2 = j as f64 * step;
            if x2 > x1 {
                out.push(DensityPoint {
                    x1,
                    x2,
                    density: density_t(x1, x2)?,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::sample_benford;
    use crate::significand::DigitCount;

    #[test]
    fn benford_points_stay_in_band() {
        let records: Vec<_> = sample_benford(400, &mut StreamRng::new(8))
            .into_iter()
            .map(|s| SignificandRecord::from_significand(s, DigitCount::Full).unwrap())
            .collect();
        let qq = qq_points(&records, 200, 1, 6, false).unwrap();
        assert_eq!(qq.points.len(), 400);
        assert_eq!(qq.null_kind, "plain");
        assert!(qq.max_cdf_deviation < qq.ks_band);
        assert!(qq.points.windows(2).all(|w| w[0].null_quantile <= w[1].null_quantile));
        assert!(qq_points(&[], 10, 1, 6, false).is_err());
    }

    #[test]
    fn grid_shape() {
        let g = density_grid(2.0, 3.0, 1.0).unwrap();
        let pairs: Vec<(f64, f64)> = g.iter().map(|p| (p.x1, p.x2)).collect();
        assert_eq!(pairs, vec![(1.0, 2.0), (1.0, 3.0), (2.0, 3.0)]);
        assert!(density_grid(1.0, 1.0, 0.0).is_err());
    }
}
