use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use fracdigit_core::cache::{sha256, NullCache};
use fracdigit_core::diagnostics::{density_grid, qq_points};
use fracdigit_core::generators::discretize;
use fracdigit_core::null::{
    apply_pattern, load_or_simulate, run_test, CombinedNull, NullChoice, NullConfig, NullDistribution, NullKind,
    TestOptions, TestOutcome, TestReport,
};
use fracdigit_core::significand::read_records;
use fracdigit_core::{
    DataModel, DigitCount, DiscretizeMode, Error, Result, SignificandRecord, StatId, StreamRng, TruncationProfile,
};

use crate::study::{run_power, write_study_csv, PowerStudyConfig};
use crate::{
    Cli, Command, DensityArgs, ModeArg, NullArg, NulltabArgs, PowerArgs, QqArgs, ReplicateArgs, SimulateArgs,
    TestArgs, Toggle, FULL_SCALE_REPLICATES, FULL_SCALE_RUNS,
};

/// Version of the JSON test report and of the CSV layouts.
pub const REPORT_FORMAT_VERSION: u32 = 1;

pub const NULLTAB_CSV_HEADER: &str = "statistic,n,gamma,quantile,se,replicates,seed,null_kind";
pub const QQ_CSV_HEADER: &str = "rank,probability,empirical,null_quantile";
pub const DENSITY_CSV_HEADER: &str = "x1,x2,density";

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Test(args) => cmd_test(&args, stdout),
        Command::Power(args) => cmd_power(&args, stdout),
        Command::Nulltab(args) => cmd_nulltab(&args, stdout),
        Command::Simulate(args) => cmd_simulate(&args, stdout),
        Command::Qq(args) => cmd_qq(&args, stdout),
        Command::Density(args) => cmd_density(&args, stdout),
    }
}

fn mode(m: ModeArg) -> DiscretizeMode {
    match m {
        ModeArg::Truncate => DiscretizeMode::Truncate,
        ModeArg::Round => DiscretizeMode::Round,
    }
}

fn null_config(workers: Option<usize>) -> NullConfig {
    NullConfig {
        workers,
        ..NullConfig::default()
    }
}

fn replicates(args: &ReplicateArgs) -> usize {
    if args.full_scale {
        FULL_SCALE_REPLICATES
    } else {
        args.b
    }
}

fn cache(args: &ReplicateArgs) -> Result<Option<NullCache>> {
    args.cache_dir.as_ref().map(NullCache::new).transpose()
}

fn parse_stats(names: &[String], default: &[StatId]) -> Result<Vec<StatId>> {
    if names.is_empty() {
        return Ok(default.to_vec());
    }
    let mut out = Vec::new();
    for name in names.iter().flat_map(|s| s.split(',')) {
        let id: StatId = name.trim().parse()?;
        if !out.contains(&id) {
            out.push(id);
        }
    }
    Ok(out)
}

/// Raw bytes of a file, or of standard input for `-`.
fn read_input(path: &Path) -> Result<Vec<u8>> {
    let input_error = |source| Error::Input {
        path: path.display().to_string(),
        source,
    };
    if path == Path::new("-") {
        let mut buf = Vec::new();
        io::stdin().read_to_end(&mut buf).map_err(input_error)?;
        Ok(buf)
    } else {
        fs::read(path).map_err(input_error)
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Output file, or the given fallback writer.
fn with_output(path: Option<&PathBuf>, stdout: &mut dyn Write, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match path {
        Some(p) => {
            let mut file = io::BufWriter::new(fs::File::create(p)?);
            f(&mut file)?;
            file.flush()?;
            Ok(())
        }
        None => f(stdout),
    }
}

#[derive(Debug, Serialize)]
pub struct InputInfo {
    pub path: String,
    pub sha256: String,
    pub n: usize,
}

#[derive(Debug, Serialize)]
pub struct ProfileSummary {
    /// `counts[k - 1]` values have `k` significant digits.
    pub counts: Vec<usize>,
    pub n_full: usize,
    pub max_digits: u32,
}

#[derive(Debug, Serialize)]
pub struct TestJson {
    pub format_version: u32,
    pub tool_version: String,
    pub input: InputInfo,
    pub seed: u64,
    pub replicates: usize,
    pub gamma: f64,
    pub null: NullChoice,
    pub null_kind: String,
    pub jitter: bool,
    pub profile: ProfileSummary,
    pub results: Vec<TestReport>,
    pub warnings: Vec<String>,
}

pub fn load_records(path: &Path, max_digits: u32) -> Result<(Vec<SignificandRecord>, InputInfo)> {
    let bytes = read_input(path)?;
    let records = read_records(&bytes[..], max_digits)?;
    if records.is_empty() {
        return Err(Error::EmptySample);
    }
    let info = InputInfo {
        path: path.display().to_string(),
        sha256: hex(&sha256(&bytes)),
        n: records.len(),
    };
    Ok((records, info))
}

/// Run the tests of `fracdigit test` and assemble the JSON report.
pub fn test_report(args: &TestArgs) -> Result<TestJson> {
    let (records, input) = load_records(&args.input, args.max_digits)?;
    let b = replicates(&args.replicates);
    let default: Vec<StatId> = if b == 0 {
        StatId::ALL.into_iter().filter(|id| id.asymptotic_df().is_some()).collect()
    } else {
        StatId::ALL.to_vec()
    };
    let opts = TestOptions {
        stats: parse_stats(&args.stats, &default)?,
        replicates: b,
        gamma: args.gamma,
        seed: args.replicates.seed,
        null: match args.null {
            NullArg::Auto => NullChoice::Auto,
            NullArg::Plain => NullChoice::Plain,
            NullArg::Truncated => NullChoice::Truncated,
            NullArg::Rounded => NullChoice::Rounded,
        },
        jitter: args.jitter == Toggle::On,
        max_digits: args.max_digits,
        config: null_config(args.replicates.workers),
    };
    let cache = cache(&args.replicates)?;
    let outcome: TestOutcome = run_test(&records, &opts, cache.as_ref())?;
    Ok(TestJson {
        format_version: REPORT_FORMAT_VERSION,
        tool_version: fracdigit_core::VERSION.to_string(),
        input,
        seed: outcome.seed,
        replicates: outcome.replicates,
        gamma: outcome.gamma,
        null: opts.null,
        null_kind: outcome.null_kind,
        jitter: opts.jitter,
        profile: ProfileSummary {
            counts: outcome.profile.counts,
            n_full: outcome.profile.n_full,
            max_digits: outcome.profile.max_digits,
        },
        results: outcome.reports,
        warnings: outcome.warnings,
    })
}

fn fmt_p(p: Option<f64>) -> String {
    match p {
        None => "-".into(),
        Some(p) if p > 0.0 && p < 1e-4 => format!("{p:.1e}"),
        Some(p) => format!("{p:.4}"),
    }
}

pub fn write_test_text(report: &TestJson, out: &mut dyn Write) -> io::Result<()> {
    let profile: Vec<String> = report
        .profile
        .counts
        .iter()
        .enumerate()
        .map(|(k, c)| format!("n{}={c}", k + 1))
        .collect();
    writeln!(
        out,
        "fracdigit {}  input {}  n = {}  sha256 {}",
        report.tool_version,
        report.input.path,
        report.input.n,
        &report.input.sha256[..16]
    )?;
    writeln!(
        out,
        "null {}  ({}, full={})  B = {}  seed = {}  gamma = {}",
        report.null_kind,
        profile.join(" "),
        report.profile.n_full,
        report.replicates,
        report.seed,
        report.gamma
    )?;
    for w in &report.warnings {
        writeln!(out, "warning: {w}")?;
    }
    writeln!(out)?;
    writeln!(out, "{:<10} {:>12} {:>10} {:>10}  decision", "statistic", "value", "exact p", "asympt p")?;
    for r in &report.results {
        writeln!(
            out,
            "{:<10} {:>12.6} {:>10} {:>10}  {}",
            r.statistic.name(),
            r.value,
            fmt_p(r.p_value),
            fmt_p(r.asymptotic_p),
            if r.reject { "reject" } else { "retain" }
        )?;
    }
    Ok(())
}

fn cmd_test(args: &TestArgs, stdout: &mut dyn Write) -> Result<()> {
    let report = test_report(args)?;
    if let Some(path) = &args.report {
        fs::write(path, serde_json::to_string_pretty(&report).expect("serializable") + "\n")?;
    }
    if args.json {
        writeln!(stdout, "{}", serde_json::to_string_pretty(&report).expect("serializable"))?;
    } else {
        write_test_text(&report, stdout)?;
    }
    Ok(())
}

fn cmd_power(args: &PowerArgs, stdout: &mut dyn Write) -> Result<()> {
    let text = fs::read_to_string(&args.config).map_err(|source| Error::Input {
        path: args.config.display().to_string(),
        source,
    })?;
    let mut cfg = PowerStudyConfig::from_toml(&text)?;
    if args.full_scale {
        cfg.runs = FULL_SCALE_RUNS;
        cfg.replicates = FULL_SCALE_REPLICATES;
    }
    if let Some(r) = args.runs {
        cfg.runs = r;
    }
    if let Some(b) = args.b {
        cfg.replicates = b;
    }
    let report = run_power(&cfg, &null_config(args.workers))?;
    if let Some(path) = &args.json {
        fs::write(path, serde_json::to_string_pretty(&report).expect("serializable") + "\n")?;
    }
    with_output(args.csv.as_ref(), stdout, |w| write_study_csv(&report.rows, w))
}

#[derive(Debug, Serialize)]
struct NulltabRow {
    statistic: StatId,
    n: usize,
    gamma: f64,
    quantile: f64,
    se: f64,
    replicates: usize,
    seed: u64,
    null_kind: String,
}

fn cmd_nulltab(args: &NulltabArgs, stdout: &mut dyn Write) -> Result<()> {
    let ids = parse_stats(&args.stats, &StatId::FRACTIONAL)?;
    let b = replicates(&args.replicates);
    let seed = args.replicates.seed;
    let cache = cache(&args.replicates)?;
    let config = null_config(args.replicates.workers);
    let base = StatId::base_set(&ids);
    let mut rows = Vec::new();
    for &n in &args.n {
        let kind = match args.digits {
            None => NullKind::Plain,
            Some(k) => {
                let profile = TruncationProfile::uniform(n, k)?;
                match mode(args.mode) {
                    DiscretizeMode::Truncate => NullKind::truncated(profile),
                    DiscretizeMode::Round => NullKind::rounded(profile),
                }
            }
        };
        let columns = load_or_simulate(&base, n, b, seed, &kind, &config, cache.as_ref())?;
        let column = |id: StatId| columns.iter().find(|(x, _)| *x == id).map(|(_, v)| v.clone()).unwrap();
        for &id in &ids {
            let dist = match id.components() {
                Some((a, c)) => CombinedNull::from_columns(id, column(a), column(c), n, kind.clone(), seed)?.null,
                None => NullDistribution::from_replicates(id, column(id), n, kind.clone(), seed),
            };
            for &gamma in &args.gamma {
                rows.push(NulltabRow {
                    statistic: id,
                    n,
                    gamma,
                    quantile: dist.quantile(gamma)?,
                    se: dist.quantile_se(gamma)?,
                    replicates: b,
                    seed,
                    null_kind: kind.label(),
                });
            }
        }
    }
    with_output(args.output.as_ref(), stdout, |w| {
        let mut csv = csv::Writer::from_writer(w);
        for row in &rows {
            csv.serialize(row).map_err(crate::study::csv_error)?;
        }
        csv.flush()?;
        Ok(())
    })
}

/// Simulated significands with their written digit counts, in the order
/// they are written.
pub fn simulate_values(args: &SimulateArgs) -> Result<Vec<(f64, DigitCount)>> {
    if args.n == 0 {
        return Err(Error::EmptySample);
    }
    let model: DataModel = args.model.parse()?;
    let mut sample = model.sample(args.n, &mut StreamRng::new(args.seed))?;
    let mode = mode(args.mode);
    if let Some(k) = args.digits {
        return sample
            .into_iter()
            .map(|s| Ok((discretize(s, k, mode)?, DigitCount::Exact(k))))
            .collect();
    }
    let Some(counts) = &args.profile else {
        return Ok(sample.into_iter().map(|s| (s, DigitCount::Full)).collect());
    };
    let limited: usize = counts.iter().sum();
    if limited > args.n {
        return Err(Error::Config(format!("profile counts {limited} values, more than n = {}", args.n)));
    }
    let profile = TruncationProfile::from_counts(counts, args.n - limited)?;
    sample.sort_unstable_by(f64::total_cmp);
    apply_pattern(&mut sample, &profile.pattern, mode);
    Ok(sample.into_iter().zip(profile.pattern).collect())
}

/// A significand written with the given number of significant digits;
/// unrounded values get 16.
pub fn format_value(s: f64, digits: DigitCount) -> String {
    let k = digits.exact().unwrap_or(16) as usize;
    format!("{:.*}", k.saturating_sub(1), s)
}

fn cmd_simulate(args: &SimulateArgs, stdout: &mut dyn Write) -> Result<()> {
    let values = simulate_values(args)?;
    with_output(args.output.as_ref(), stdout, |w| {
        for (s, k) in values {
            writeln!(w, "{}", format_value(s, k))?;
        }
        Ok(())
    })
}

fn cmd_qq(args: &QqArgs, stdout: &mut dyn Write) -> Result<()> {
    let (records, _) = load_records(&args.input, args.max_digits)?;
    let plain = match args.null {
        NullArg::Auto | NullArg::Truncated => false,
        NullArg::Plain => true,
        NullArg::Rounded => return Err(Error::Config("qq supports --null auto or plain".into())),
    };
    let qq = qq_points(&records, args.b, args.seed, args.max_digits, plain)?;
    eprintln!(
        "null {}  B = {}  max CDF deviation {:.4}  1% KS band {:.4}",
        qq.null_kind, qq.replicates, qq.max_cdf_deviation, qq.ks_band
    );
    with_output(args.output.as_ref(), stdout, |w| {
        let mut csv = csv::Writer::from_writer(w);
        for p in &qq.points {
            csv.serialize(p).map_err(crate::study::csv_error)?;
        }
        csv.flush()?;
        Ok(())
    })
}

fn cmd_density(args: &DensityArgs, stdout: &mut dyn Write) -> Result<()> {
    let grid = density_grid(args.x1_max, args.x2_max, args.step)?;
    with_output(args.output.as_ref(), stdout, |w| {
        let mut csv = csv::Writer::from_writer(w);
        for p in &grid {
            csv.serialize(p).map_err(crate::study::csv_error)?;
        }
        csv.flush()?;
        Ok(())
    })
}
