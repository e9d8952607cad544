//! Power and size studies: rejection rates of the tests over many simulated
//! data sets, one row per (scenario, parameter, statistic).

use std::collections::HashMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use fracdigit_core::generators::discretize;
use fracdigit_core::null::{simulate_joint, CombinedNull, NullConfig, NullKind, MIN_REPLICATES};
use fracdigit_core::statistics::Evaluator;
use fracdigit_core::{DataModel, DiscretizeMode, Error, Result, StatId, StreamRng, TruncationProfile};

pub const STUDY_FORMAT_VERSION: u32 = 1;

fn default_gamma() -> f64 {
    0.01
}

fn default_replicates() -> usize {
    100_000
}

fn default_statistics() -> Vec<String> {
    StatId::ALL.iter().map(|s| s.name().to_string()).collect()
}

/// Which null the data of a scenario are tested against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NullMatch {
    /// Continuous Benford null, whatever the data look like.
    #[default]
    Plain,
    /// Null discretized exactly like the data.
    Matched,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Model syntax of [`DataModel`]; each entry of `alphas` is appended as
    /// the final `:<alpha>` field.
    pub model: String,
    #[serde(default)]
    pub alphas: Vec<f64>,
    /// Cut every simulated significand to this many digits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digits: Option<u32>,
    #[serde(default = "default_mode")]
    pub mode: DiscretizeMode,
    #[serde(default)]
    pub null: NullMatch,
}

fn default_mode() -> DiscretizeMode {
    DiscretizeMode::Truncate
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerStudyConfig {
    pub n: usize,
    pub runs: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_statistics")]
    pub statistics: Vec<String>,
    pub scenarios: Vec<ScenarioConfig>,
}

/// One concrete data-generating setting of a study.
#[derive(Debug, Clone)]
pub struct Cell {
    pub scenario: String,
    pub model: DataModel,
    pub alpha: Option<f64>,
    pub digits: Option<u32>,
    pub mode: DiscretizeMode,
    pub null: NullKind,
}

impl PowerStudyConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn stat_ids(&self) -> Result<Vec<StatId>> {
        if self.statistics.is_empty() {
            return Err(Error::Config("no statistics listed".into()));
        }
        let mut ids = Vec::new();
        for s in &self.statistics {
            let id: StatId = s.parse()?;
            if !ids.contains(&id) {
                ids.push(id);
            }
        }
        Ok(ids)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::Config(format!("gamma {} not in (0, 1)", self.gamma)));
        }
        if self.replicates < MIN_REPLICATES {
            return Err(Error::Config(format!("replicates must be at least {MIN_REPLICATES}")));
        }
        if self.scenarios.is_empty() {
            return Err(Error::Config("no scenarios".into()));
        }
        self.stat_ids()?;
        self.cells().map(|_| ())
    }

    /// Every (scenario, alpha) combination in config order.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let mut out = Vec::new();
        for (i, sc) in self.scenarios.iter().enumerate() {
            let label = sc.name.clone().unwrap_or_else(|| sc.model.clone());
            if let Some(k) = sc.digits {
                if !(1..=15).contains(&k) {
                    return Err(Error::Config(format!("scenario {}: digits {k} not in 1..=15", i + 1)));
                }
            }
            let null = match (sc.null, sc.digits) {
                (NullMatch::Plain, _) => NullKind::Plain,
                (NullMatch::Matched, None) => {
                    return Err(Error::Config(format!("scenario {}: matched null needs digits", i + 1)))
                }
                (NullMatch::Matched, Some(k)) => {
                    let profile = TruncationProfile::uniform(self.n, k)?;
                    match sc.mode {
                        DiscretizeMode::Truncate => NullKind::truncated(profile),
                        DiscretizeMode::Round => NullKind::rounded(profile),
                    }
                }
            };
            let alphas: Vec<Option<f64>> = if sc.alphas.is_empty() {
                vec![None]
            } else {
                sc.alphas.iter().map(|&a| Some(a)).collect()
            };
            for alpha in alphas {
                let spec = match alpha {
                    Some(a) => format!("{}:{a}", sc.model),
                    None => sc.model.clone(),
                };
                let model: DataModel = spec
                    .parse()
                    .map_err(|e| Error::Config(format!("scenario {}: {e}", i + 1)))?;
                out.push(Cell {
                    scenario: label.clone(),
                    model,
                    alpha,
                    digits: sc.digits,
                    mode: sc.mode,
                    null: null.clone(),
                });
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub scenario: String,
    pub model: String,
    pub alpha: Option<f64>,
    pub digits: Option<u32>,
    pub null_kind: String,
    pub n: usize,
    pub runs: usize,
    pub gamma: f64,
    pub replicates: usize,
    pub statistic: StatId,
    pub rejections: usize,
    pub rate: f64,
    /// Binomial standard error of `rate`.
    pub se: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyReport {
    pub format_version: u32,
    pub tool_version: String,
    pub runtime_seconds: f64,
    pub config: PowerStudyConfig,
    pub rows: Vec<StudyRow>,
}

enum Prepared {
    Single(f64),
    Combined(CombinedNull, f64),
}

struct PreparedNull {
    base: Vec<StatId>,
    tests: Vec<(StatId, Prepared)>,
}

impl PreparedNull {
    fn build(ids: &[StatId], n: usize, cfg: &PowerStudyConfig, kind: &NullKind, nc: &NullConfig) -> Result<Self> {
        let base = StatId::base_set(ids);
        let joint = simulate_joint(&base, n, cfg.replicates, cfg.seed, kind, nc)?;
        let mut tests = Vec::new();
        for &id in ids {
            let prepared = if id.is_combined() {
                let comb = joint.combined(id)?;
                let c = comb.null.quantile(cfg.gamma)?;
                Prepared::Combined(comb, c)
            } else {
                Prepared::Single(joint.distribution(id)?.quantile(cfg.gamma)?)
            };
            tests.push((id, prepared));
        }
        Ok(Self { base, tests })
    }

    fn decisions(&self, values: &[f64]) -> Vec<bool> {
        let value = |id: StatId| values[self.base.iter().position(|&x| x == id).unwrap()];
        self.tests
            .iter()
            .map(|(id, p)| match p {
                Prepared::Single(c) => value(*id) > *c,
                Prepared::Combined(comb, c) => {
                    let (a, b) = comb.components;
                    comb.observe(value(a), value(b)) <= *c
                }
            })
            .collect()
    }
}

/// Run a study. Data set `r` of cell `c` is drawn from substream `(c, r)` of
/// a fork of the seed's root, disjoint from the null replicate streams.
pub fn run_power(cfg: &PowerStudyConfig, nc: &NullConfig) -> Result<StudyReport> {
    cfg.validate()?;
    let started = Instant::now();
    let ids = cfg.stat_ids()?;
    let cells = cfg.cells()?;
    let data_root = StreamRng::new(cfg.seed).fork();

    let mut nulls: HashMap<String, PreparedNull> = HashMap::new();
    let mut rows = Vec::new();
    for (ci, cell) in cells.iter().enumerate() {
        let key = cell.null.describe(cfg.n);
        if !nulls.contains_key(&key) {
            nulls.insert(key.clone(), PreparedNull::build(&ids, cfg.n, cfg, &cell.null, nc)?);
        }
        let prepared = &nulls[&key];
        log::info!("cell {}: {} ({} runs)", ci + 1, cell.model, cfg.runs);
        let cell_root = data_root.substream(ci as u64);
        let decisions: Vec<Vec<bool>> = (0..cfg.runs as u64)
            .into_par_iter()
            .map_init(
                || Evaluator::new(&prepared.base).expect("base statistics"),
                |eval, r| -> Result<Vec<bool>> {
                    let mut rng = cell_root.substream(r);
                    let mut sample = cell.model.sample(cfg.n, &mut rng)?;
                    if let Some(k) = cell.digits {
                        for s in sample.iter_mut() {
                            *s = discretize(*s, k, cell.mode)?;
                        }
                    }
                    let mut values = vec![0.0; prepared.base.len()];
                    eval.evaluate(&mut sample, &mut values);
                    Ok(prepared.decisions(&values))
                },
            )
            .collect::<Result<_>>()?;
        for (j, (id, _)) in prepared.tests.iter().enumerate() {
            let rejections = decisions.iter().filter(|d| d[j]).count();
            let rate = rejections as f64 / cfg.runs as f64;
            rows.push(StudyRow {
                scenario: cell.scenario.clone(),
                model: cell.model.to_string(),
                alpha: cell.alpha,
                digits: cell.digits,
                null_kind: cell.null.label(),
                n: cfg.n,
                runs: cfg.runs,
                gamma: cfg.gamma,
                replicates: cfg.replicates,
                statistic: *id,
                rejections,
                rate,
                se: (rate * (1.0 - rate) / cfg.runs as f64).sqrt(),
            });
        }
    }
    Ok(StudyReport {
        format_version: STUDY_FORMAT_VERSION,
        tool_version: fracdigit_core::VERSION.to_string(),
        runtime_seconds: started.elapsed().as_secs_f64(),
        config: cfg.clone(),
        rows,
    })
}

/// CSV header of study tables.
pub const STUDY_CSV_HEADER: &str =
    "scenario,model,alpha,digits,null_kind,n,runs,gamma,replicates,statistic,rejections,rate,se";

pub fn write_study_csv<W: std::io::Write>(rows: &[StudyRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Config(format!("csv: {other:?}")),
    }
}

impl StudyReport {
    pub fn row(&self, model: &str, statistic: StatId) -> Option<&StudyRow> {
        self.rows.iter().find(|r| r.model == model && r.statistic == statistic)
    }
}
