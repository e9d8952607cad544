//! Samplers for the Benford null, the manipulated-Benford model, the mixture
//! contamination model and the contaminant laws of the power study.
//!
//! Parameterizations: `Lognormal(a)` has log-scale standard deviation `a` and
//! median 1; `Weibull(a)` has shape `a` and scale 1; `Uniform(a)` is uniform
//! on `[0, a)`; `GeneralizedBenford(a)` has significand CDF
//! `(u^a - 1) / (10^a - 1)`.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand_distr::{Distribution, StandardNormal, Weibull};
use serde::{Deserialize, Serialize};

use crate::distributions::{digit_prob, GB_ALPHA_EPS};
use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::significand::{significand, DigitCount, BELOW_TEN};
use crate::statistics::robust_floor;

/// Law of the contaminating variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "alpha", rename_all = "kebab-case")]
pub enum Family {
    Benford,
    Lognormal(f64),
    Weibull(f64),
    Uniform(f64),
    GeneralizedBenford(f64),
}

impl Family {
    /// Build a family from its short name and shape parameter.
    pub fn from_name(name: &str, alpha: Option<f64>) -> Result<Self> {
        let need = || alpha.ok_or_else(|| Error::Model(format!("family {name:?} needs a parameter")));
        let family = match name.to_ascii_lowercase().as_str() {
            "benford" => Family::Benford,
            "lognormal" | "lnorm" => Family::Lognormal(need()?),
            "weibull" => Family::Weibull(need()?),
            "uniform" | "unif" => Family::Uniform(need()?),
            "gb" | "generalized-benford" | "generalizedbenford" => Family::GeneralizedBenford(need()?),
            _ => return Err(Error::Model(format!("unknown family {name:?}"))),
        };
        family.validate()?;
        Ok(family)
    }

    pub fn validate(&self) -> Result<()> {
        let (a, lo, hi) = match *self {
            Family::Benford => return Ok(()),
            Family::Lognormal(a) => (a, 0.0, LOGNORMAL_MAX),
            Family::Weibull(a) => (a, WEIBULL_MIN, WEIBULL_MAX),
            Family::Uniform(a) => (a, 0.0, f64::MAX),
            Family::GeneralizedBenford(a) => (a, -GB_MAX, GB_MAX),
        };
        let ok = a.is_finite() && a <= hi && if lo == 0.0 { a > 0.0 } else { a >= lo };
        if ok {
            Ok(())
        } else if lo == 0.0 {
            Err(Error::Model(format!("{self}: parameter must lie in (0, {hi}]")))
        } else {
            Err(Error::Model(format!("{self}: parameter must lie in [{lo}, {hi}]")))
        }
    }

    /// One significand from this law.
    pub fn sample_significand(&self, rng: &mut StreamRng) -> f64 {
        match *self {
            Family::Benford => benford_draw(rng),
            Family::GeneralizedBenford(a) => sample_gb(a, rng),
            Family::Lognormal(a) => redraw(rng, |rng| {
                let z: f64 = StandardNormal.sample(rng);
                (a * z).exp()
            }),
            Family::Weibull(a) => {
                let w = Weibull::new(1.0, a).expect("validated shape");
                redraw(rng, |rng| w.sample(rng))
            }
            Family::Uniform(a) => {
                let mut x = a * rng.uniform();
                while x == 0.0 {
                    x = a * rng.uniform();
                }
                significand(x).expect("positive finite")
            }
        }
    }
}

/// Largest lognormal shape; `exp(a z)` stays finite for |z| < 14.
pub const LOGNORMAL_MAX: f64 = 50.0;
/// Weibull shapes outside this range underflow or overflow too often.
pub const WEIBULL_MIN: f64 = 0.01;
pub const WEIBULL_MAX: f64 = 1000.0;
/// `10^alpha` must stay finite.
pub const GB_MAX: f64 = 300.0;

/// Significand of the first draw that is neither zero nor infinite.
fn redraw(rng: &mut StreamRng, mut draw: impl FnMut(&mut StreamRng) -> f64) -> f64 {
    loop {
        if let Ok(s) = significand(draw(rng)) {
            return s;
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Benford => f.write_str("benford"),
            Family::Lognormal(a) => write!(f, "lognormal:{a}"),
            Family::Weibull(a) => write!(f, "weibull:{a}"),
            Family::Uniform(a) => write!(f, "uniform:{a}"),
            Family::GeneralizedBenford(a) => write!(f, "gb:{a}"),
        }
    }
}

/// A data-generating model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "kebab-case")]
pub enum DataModel {
    Benford,
    /// Benford first digit, fractional part from the contaminant.
    Manipulated { contaminant: Family },
    /// Benford with probability `1 - lambda`, else the contaminant.
    Contaminated { lambda: f64, contaminant: Family },
}

impl DataModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            DataModel::Benford => Ok(()),
            DataModel::Manipulated { contaminant } => contaminant.validate(),
            DataModel::Contaminated { lambda, contaminant } => {
                if !(0.0..=1.0).contains(lambda) {
                    return Err(Error::Model(format!("lambda {lambda} not in [0, 1]")));
                }
                contaminant.validate()
            }
        }
    }

    pub fn sample(&self, n: usize, rng: &mut StreamRng) -> Result<Vec<f64>> {
        self.validate()?;
        Ok(match *self {
            DataModel::Benford => sample_benford(n, rng),
            DataModel::Manipulated { contaminant } => sample_manipulated(n, &contaminant, rng)?,
            DataModel::Contaminated { lambda, contaminant } => sample_contaminated(n, lambda, &contaminant, rng)?,
        })
    }
}

impl fmt::Display for DataModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataModel::Benford => f.write_str("benford"),
            DataModel::Manipulated { contaminant } => write!(f, "manipulated:{contaminant}"),
            DataModel::Contaminated { lambda, contaminant } => write!(f, "contaminated:{lambda}:{contaminant}"),
        }
    }
}

fn parse_number(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Model(format!("bad number {s:?}")))
}

fn parse_family(parts: &[&str]) -> Result<Family> {
    match parts {
        [name] => Family::from_name(name, None),
        [name, alpha] => Family::from_name(name, Some(parse_number(alpha)?)),
        _ => Err(Error::Model(format!("bad family spec {:?}", parts.join(":")))),
    }
}

/// Model syntax: `benford`, `<family>[:<alpha>]` (sampled directly),
/// `manipulated:<family>[:<alpha>]` or
/// `contaminated:<lambda>:<family>[:<alpha>]`.
impl FromStr for DataModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').map(str::trim).collect();
        let model = match parts.as_slice() {
            ["benford"] => DataModel::Benford,
            ["manipulated", rest @ ..] => DataModel::Manipulated {
                contaminant: parse_family(rest)?,
            },
            ["contaminated", lambda, rest @ ..] => DataModel::Contaminated {
                lambda: parse_number(lambda)?,
                contaminant: parse_family(rest)?,
            },
            rest => DataModel::Contaminated {
                lambda: 1.0,
                contaminant: parse_family(rest)?,
            },
        };
        model.validate()?;
        Ok(model)
    }
}

#[inline]
fn benford_draw(rng: &mut StreamRng) -> f64 {
    pow10_unit(rng.uniform())
}

/// `10^u` for `u` in `[0, 1)`, kept below 10.
#[inline]
pub(crate) fn pow10_unit(u: f64) -> f64 {
    let s = (u * std::f64::consts::LN_10).exp();
    if s >= 10.0 {
        BELOW_TEN
    } else {
        s.max(1.0)
    }
}

/// `n` i.i.d. Benford significands `10^U`.
pub fn sample_benford(n: usize, rng: &mut StreamRng) -> Vec<f64> {
    (0..n).map(|_| benford_draw(rng)).collect()
}

/// Cumulative first-digit law used for categorical inversion.
pub fn digit_cdf_table() -> &'static [f64; 9] {
    static TABLE: OnceLock<[f64; 9]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0.0; 9];
        let mut acc = 0.0;
        for d in 1..=9u8 {
            acc += digit_prob(d);
            t[d as usize - 1] = acc;
        }
        t[8] = 1.0;
        t
    })
}

#[inline]
fn draw_first_digit(rng: &mut StreamRng) -> u8 {
    let u = rng.uniform();
    let table = digit_cdf_table();
    table.iter().position(|&c| u < c).unwrap_or(8) as u8 + 1
}

/// `d + f` kept inside `[d, d + 1)`.
#[inline]
fn join_digit(d: u8, frac: f64) -> f64 {
    let base = d as f64;
    let s = base + frac;
    if s >= base + 1.0 {
        (base + 1.0).next_down()
    } else {
        s
    }
}

/// Manipulated-Benford sample: first digit from the first-digit law, and an
/// independent fractional part taken from the contaminant's significand.
/// Digits and fractions come from two disjoint child streams.
pub fn sample_manipulated(n: usize, contaminant: &Family, rng: &mut StreamRng) -> Result<Vec<f64>> {
    contaminant.validate()?;
    let mut digits = rng.fork();
    let mut fractions = rng.fork();
    Ok((0..n)
        .map(|_| {
            let d = draw_first_digit(&mut digits);
            let s = contaminant.sample_significand(&mut fractions);
            join_digit(d, s - s.floor())
        })
        .collect())
}

/// Mixture sample: each observation is Benford with probability
/// `1 - lambda`, else a contaminant significand. The Benford draws consume
/// `rng` exactly as [`sample_benford`] does, so `lambda = 0` reproduces it.
pub fn sample_contaminated(n: usize, lambda: f64, contaminant: &Family, rng: &mut StreamRng) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Model(format!("lambda {lambda} not in [0, 1]")));
    }
    contaminant.validate()?;
    let mut coins = rng.fork();
    let mut other = rng.fork();
    Ok((0..n)
        .map(|_| {
            let benford = benford_draw(rng);
            if coins.uniform() < lambda {
                contaminant.sample_significand(&mut other)
            } else {
                benford
            }
        })
        .collect())
}

/// One Generalized Benford significand by inversion of its CDF.
pub fn sample_gb(alpha: f64, rng: &mut StreamRng) -> f64 {
    let u = rng.uniform();
    if alpha.abs() < GB_ALPHA_EPS {
        return pow10_unit(u);
    }
    let s = (1.0 + (10f64.powf(alpha) - 1.0) * u).powf(1.0 / alpha);
    s.clamp(1.0, BELOW_TEN)
}

/// How a significand is cut to a given number of digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscretizeMode {
    Truncate,
    Round,
}

impl FromStr for DiscretizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "truncate" | "trunc" => Ok(DiscretizeMode::Truncate),
            "round" => Ok(DiscretizeMode::Round),
            _ => Err(Error::Config(format!("unknown discretization mode {s:?}"))),
        }
    }
}

impl fmt::Display for DiscretizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DiscretizeMode::Truncate => "truncate",
            DiscretizeMode::Round => "round",
        })
    }
}

/// Largest digit count accepted by [`discretize`].
pub const MAX_DISCRETIZE_DIGITS: u32 = 15;

/// Cut a significand to `k` significant digits.
///
/// Rounding is half away from zero. A rounded value that would reach 10 is
/// clamped to the largest `k`-digit significand (`9.9` for `k = 2`).
pub fn discretize(s: f64, k: u32, mode: DiscretizeMode) -> Result<f64> {
    if !(1..=MAX_DISCRETIZE_DIGITS).contains(&k) {
        return Err(Error::domain(format!("digit count {k} not in 1..={MAX_DISCRETIZE_DIGITS}")));
    }
    if !(1.0..10.0).contains(&s) {
        return Err(Error::domain(format!("significand {s} not in [1, 10)")));
    }
    Ok(discretize_unchecked(s, k, mode))
}

#[inline]
pub(crate) fn discretize_unchecked(s: f64, k: u32, mode: DiscretizeMode) -> f64 {
    let scale = 10f64.powi(k as i32 - 1);
    let m = s * scale;
    let units = match mode {
        DiscretizeMode::Truncate => robust_floor(m),
        DiscretizeMode::Round => m.round(),
    };
    let top = 10.0 * scale - 1.0;
    units.min(top) / scale
}

/// Spread discretized significands over the interval of values that would
/// have been written the same way: `[v, v + ulp)` after truncation and
/// `[v - ulp/2, v + ulp/2)` after rounding, where `ulp = 10^-(k-1)`. The
/// result never leaves the first digit of `v`. `Full` entries are left as is.
pub fn jitter(values: &mut [f64], digits: &[DigitCount], mode: DiscretizeMode, rng: &mut StreamRng) {
    debug_assert_eq!(values.len(), digits.len());
    for (v, d) in values.iter_mut().zip(digits) {
        let DigitCount::Exact(k) = *d else { continue };
        let ulp = 10f64.powi(1 - k as i32);
        let offset = match mode {
            DiscretizeMode::Truncate => 0.0,
            DiscretizeMode::Round => -0.5 * ulp,
        };
        let lead = v.floor();
        let moved = *v + offset + ulp * rng.uniform();
        *v = moved.clamp(lead, (lead + 1.0).next_down());
    }
}
