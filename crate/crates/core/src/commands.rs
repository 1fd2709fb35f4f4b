//! The command-line workflows as library functions.
//!
//! Each command takes a [`Settings`] value (flags merged over an optional
//! JSON config file), does its work, writes files under `out` when one is
//! given, and returns the JSON report it printed or saved.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::ensembles::RngStream;
use crate::entanglement::{
    pptt_search, pptt_search_with, write_negativity_csv, PpttResult, SearchOptions,
};
use crate::error::{Error, Result};
use crate::generator::{GeneratorDocument, GkslGenerator};
use crate::propagators::{Method, PropagatorConfig};
use crate::scenarios::{
    draw_generator, format_dims, parse_dims, read_samples_csv, run_block_times, run_ensemble_with,
    sample_seed, Correlation, PpttSampleSet, RankRule, RunOptions, SampleSetMetadata, ScenarioSpec,
    TraceRule,
};
use crate::stats::{
    bootstrap_ci, bootstrap_difference_ci, fit_gamma3, fit_inverse_scaling, fit_log_scaling,
    fit_lognormal3, fit_power_prefactor, histogram, ks_distance, loglog_slope, summarize,
    ConfidenceInterval, Ecdf, Gamma3, Histogram, Lognormal3, ProductCdf, Statistic, SummaryStats,
};

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Bootstrap resamples used in reports.
pub const BOOTSTRAP_RESAMPLES: usize = 1000;
/// Offset mixed into the master seed for bootstrap streams.
const BOOTSTRAP_SEED_OFFSET: u64 = 0xB007;

/// Raw settings as given on the command line or in a config file. Every
/// field is optional; [`Settings::merged_over`] lets flags win.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Settings {
    pub dims: Option<String>,
    pub correlation: Option<String>,
    pub trace: Option<String>,
    pub rank: Option<String>,
    pub k: Option<f64>,
    pub samples: Option<usize>,
    pub dx: Option<f64>,
    pub x_max: Option<f64>,
    pub method: Option<String>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
}

macro_rules! prefer {
    ($a:expr, $b:expr, $($f:ident),*) => {
        Settings { $($f: $a.$f.or($b.$f),)* }
    };
}

impl Settings {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Fields set in `self` take precedence over `base`.
    pub fn merged_over(self, base: Settings) -> Settings {
        prefer!(
            self,
            base,
            dims,
            correlation,
            trace,
            rank,
            k,
            samples,
            dx,
            x_max,
            method,
            seed,
            workers,
            out
        )
    }
}

pub const DEFAULT_SAMPLES: usize = 2000;
pub const DEFAULT_DX: f64 = 1e-3;
pub const DEFAULT_X_MAX: f64 = 10.0;
pub const DEFAULT_SEED: u64 = 0;

/// Validated configuration, echoed into every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    /// One entry for most commands; several for `compare-methods`.
    pub subsystem_dims: Vec<Vec<usize>>,
    pub correlations: Vec<Correlation>,
    pub trace_rule: TraceRule,
    pub rank_rule: RankRule,
    pub k: Option<f64>,
    pub n_samples: usize,
    pub dx: f64,
    pub x_max: f64,
    pub method: Method,
    pub master_seed: u64,
    pub workers: Option<usize>,
    pub output_path: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(command: &str, s: &Settings) -> Result<Self> {
        let subsystem_dims = s
            .dims
            .as_deref()
            .unwrap_or("2")
            .split(',')
            .map(parse_dims)
            .collect::<Result<Vec<_>>>()?;
        let correlations = s
            .correlation
            .as_deref()
            .unwrap_or("glb")
            .split(',')
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        let cfg = Self {
            command: command.to_string(),
            subsystem_dims,
            correlations,
            trace_rule: s.trace.as_deref().unwrap_or("canonical").parse()?,
            rank_rule: s.rank.as_deref().unwrap_or("full").parse()?,
            k: s.k,
            n_samples: s.samples.unwrap_or(DEFAULT_SAMPLES),
            dx: s.dx.unwrap_or(DEFAULT_DX),
            x_max: s.x_max.unwrap_or(DEFAULT_X_MAX),
            method: s.method.as_deref().unwrap_or("caolu").parse()?,
            master_seed: s.seed.unwrap_or(DEFAULT_SEED),
            workers: s.workers,
            output_path: s.out.clone(),
        };
        cfg.propagator()?;
        if cfg.n_samples == 0 {
            return Err(Error::InvalidParameter(
                "--samples must be at least 1".into(),
            ));
        }
        if cfg.workers == Some(0) {
            return Err(Error::InvalidParameter(
                "--workers must be at least 1".into(),
            ));
        }
        for dims in &cfg.subsystem_dims {
            for &c in &cfg.correlations {
                cfg.spec_for(dims, c).validate()?;
            }
        }
        Ok(cfg)
    }

    pub fn propagator(&self) -> Result<PropagatorConfig> {
        PropagatorConfig::new(self.method, self.dx, self.x_max)
    }

    pub fn spec_for(&self, dims: &[usize], correlation: Correlation) -> ScenarioSpec {
        ScenarioSpec::new(dims.to_vec(), correlation)
            .with_trace(self.trace_rule.clone())
            .with_rank(self.rank_rule.clone())
            .with_k(self.k.unwrap_or(0.0))
    }

    fn single_dims(&self) -> Result<&[usize]> {
        match self.subsystem_dims.as_slice() {
            [d] => Ok(d),
            _ => Err(Error::InvalidParameter(format!(
                "{} takes a single --dims value",
                self.command
            ))),
        }
    }

    fn single_correlation(&self) -> Result<Correlation> {
        match self.correlations.as_slice() {
            [c] => Ok(*c),
            _ => Err(Error::InvalidParameter(format!(
                "{} takes a single --correlation value",
                self.command
            ))),
        }
    }

    /// The single scenario of `ensemble` and `single`.
    pub fn spec(&self) -> Result<ScenarioSpec> {
        Ok(self.spec_for(self.single_dims()?, self.single_correlation()?))
    }

    fn run_options(&self, progress: bool) -> RunOptions {
        RunOptions {
            workers: self.workers,
            force_direct: false,
            progress,
        }
    }

    fn bootstrap_seed(&self) -> u64 {
        self.master_seed ^ BOOTSTRAP_SEED_OFFSET
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BootstrapCis {
    pub mean: ConfidenceInterval,
    pub median: ConfidenceInterval,
    pub min: ConfidenceInterval,
    pub stdev: ConfidenceInterval,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScalingFits {
    /// `(D, value)` points the fits were computed from.
    pub points: BTreeMap<String, Vec<(f64, f64)>>,
    /// `θ` of `log₂(θD)` for mean, median and minimum.
    pub theta_mean: f64,
    pub theta_median: f64,
    pub theta_min: f64,
    /// `θ` of `θ/D` for the standard deviation.
    pub theta_stdev: f64,
}

/// `{stats, bootstrap_cis, gamma3, lognormal3, scaling_fits}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitReport {
    pub stats: SummaryStats,
    pub stdev_convention: String,
    pub bootstrap_cis: BootstrapCis,
    pub gamma3: Option<FitSummary<Gamma3>>,
    pub lognormal3: Option<FitSummary<Lognormal3>>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitSummary<T> {
    pub params: T,
    pub implied_mean: f64,
    pub implied_stdev: f64,
}

/// Summary, bootstrap intervals and both three-parameter fits.
pub fn analyze(values: &[f64], censored: usize, bootstrap_seed: u64) -> Result<FitReport> {
    let stats = summarize(values, censored)?;
    let ci = |s: Statistic, k: u64| {
        bootstrap_ci(
            values,
            s,
            BOOTSTRAP_RESAMPLES,
            0.95,
            bootstrap_seed.wrapping_add(k),
        )
    };
    let bootstrap_cis = BootstrapCis {
        mean: ci(Statistic::Mean, 0)?,
        median: ci(Statistic::Median, 1)?,
        min: ci(Statistic::Min, 2)?,
        stdev: ci(Statistic::Stdev, 3)?,
    };
    let mut notes = Vec::new();
    let gamma3 = match fit_gamma3(values) {
        Ok(p) => Some(FitSummary {
            implied_mean: p.mean(),
            implied_stdev: p.stdev(),
            params: p,
        }),
        Err(e) => {
            notes.push(format!("gamma3 fit skipped: {e}"));
            None
        }
    };
    let lognormal3 = match fit_lognormal3(values) {
        Ok(p) => Some(FitSummary {
            implied_mean: p.mean(),
            implied_stdev: p.stdev(),
            params: p,
        }),
        Err(e) => {
            notes.push(format!("lognormal3 fit skipped: {e}"));
            None
        }
    };
    if censored > 0 {
        notes.push(format!("{censored} censored samples excluded"));
    }
    Ok(FitReport {
        stats,
        stdev_convention: "sample (n - 1)".into(),
        bootstrap_cis,
        gamma3,
        lognormal3,
        notes,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridInfo {
    pub method: Method,
    pub dx: f64,
    pub x_max: f64,
    pub grid_points: usize,
}

impl From<&PropagatorConfig> for GridInfo {
    fn from(c: &PropagatorConfig) -> Self {
        Self {
            method: c.method,
            dx: c.dx,
            x_max: c.x_max,
            grid_points: c.grid_len(),
        }
    }
}

/// Contents of `summary.json`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub code_version: String,
    pub config: RunConfig,
    pub seed: u64,
    pub grid: GridInfo,
    pub metadata: SampleSetMetadata,
    pub report: Option<FitReport>,
}

/// Files produced by [`write_sample_set`].
pub const SAMPLES_FILE: &str = "samples.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const HISTOGRAM_FILE: &str = "histogram.csv";
pub const ECDF_FILE: &str = "ecdf.csv";

fn histogram_csv(h: &Histogram) -> String {
    let mut s = String::from("bin_lo,bin_hi,count,density\n");
    for (i, c) in h.counts.iter().enumerate() {
        s.push_str(&format!(
            "{:.9},{:.9},{},{:.9e}\n",
            h.edges[i],
            h.edges[i + 1],
            c,
            h.density[i]
        ));
    }
    s
}

fn ecdf_csv(f: &Ecdf) -> String {
    let mut s = String::from("x,cdf\n");
    for (x, p) in f.points() {
        s.push_str(&format!("{x:.9},{p:.9}\n"));
    }
    s
}

/// Writes every file in `files` under `dir`; on failure removes the ones
/// already written so no partial output is left behind.
fn write_all(dir: &Path, files: &[(&str, Vec<u8>)]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        if let Err(e) = fs::write(&path, bytes) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(e.into());
        }
        written.push(path);
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

/// Builds the summary of a finished run and, when `dir` is given, writes
/// `samples.csv`, `summary.json`, `histogram.csv` and `ecdf.csv` there.
pub fn write_sample_set(
    cfg: &RunConfig,
    set: &PpttSampleSet,
    dir: Option<&Path>,
) -> Result<EnsembleSummary> {
    let values = set.x_values();
    let report = if values.is_empty() {
        None
    } else {
        Some(analyze(
            &values,
            set.censored_count(),
            cfg.bootstrap_seed(),
        )?)
    };
    let summary = EnsembleSummary {
        code_version: CODE_VERSION.into(),
        config: cfg.clone(),
        seed: set.master_seed,
        grid: GridInfo::from(&PropagatorConfig::new(set.method, set.dx, set.x_max)?),
        metadata: set.metadata(),
        report,
    };
    if let Some(dir) = dir {
        let mut csv = Vec::new();
        set.write_csv(&mut csv)?;
        let mut files = vec![(SAMPLES_FILE, csv), (SUMMARY_FILE, to_json(&summary)?)];
        if !values.is_empty() {
            let bins = ((values.len() as f64).sqrt().ceil() as usize).clamp(1, 100);
            files.push((
                HISTOGRAM_FILE,
                histogram_csv(&histogram(&values, bins)?).into_bytes(),
            ));
            files.push((ECDF_FILE, ecdf_csv(&Ecdf::new(&values)?).into_bytes()));
        }
        write_all(dir, &files)?;
    }
    Ok(summary)
}

/// `ensemble`: one scenario, `n` samples.
pub fn cmd_ensemble(cfg: &RunConfig) -> Result<EnsembleSummary> {
    let spec = cfg.spec()?;
    let prop = cfg.propagator()?;
    eprintln!(
        "ensemble: dims {} ({}), {} samples, {} with dx = {}",
        format_dims(&spec.subsystem_dims),
        spec.correlation,
        cfg.n_samples,
        prop.method,
        prop.dx
    );
    let set = run_ensemble_with(
        &spec,
        cfg.n_samples,
        &prop,
        cfg.master_seed,
        &cfg.run_options(true),
    )?;
    write_sample_set(cfg, &set, cfg.output_path.as_deref())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    DepolarizingQubit,
    DephasingQubit,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "depolarizing-qubit" => Ok(Preset::DepolarizingQubit),
            "dephasing-qubit" => Ok(Preset::DephasingQubit),
            other => Err(Error::InvalidParameter(format!(
                "unknown preset {other:?} (expected depolarizing-qubit or dephasing-qubit)"
            ))),
        }
    }
}

impl Preset {
    pub fn generator(self) -> GkslGenerator {
        match self {
            Preset::DepolarizingQubit => GkslGenerator::depolarizing_qubit(),
            Preset::DephasingQubit => GkslGenerator::dephasing_qubit(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::DepolarizingQubit => "depolarizing-qubit",
            Preset::DephasingQubit => "dephasing-qubit",
        }
    }
}

/// Where `single` gets its generator from.
#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorSource {
    Preset(Preset),
    File(PathBuf),
    /// Drawn from the configured scenario with seed `--seed`; the seeds in
    /// an ensemble's `samples.csv` can be used here to redraw one row.
    Seed,
}

#[derive(Clone, Debug, Default)]
pub struct SingleOptions {
    pub negativity_csv: Option<PathBuf>,
    pub save_generator: Option<PathBuf>,
    pub interpolate: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SingleReport {
    pub code_version: String,
    pub source: String,
    pub dimension: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub grid: GridInfo,
    pub result: PpttResult,
}

pub fn load_generator(path: &Path) -> Result<GkslGenerator> {
    let text = fs::read_to_string(path)?;
    let doc: GeneratorDocument = serde_json::from_str(&text).map_err(|e| Error::Malformed {
        line: e.line() as u64,
        message: format!("{}: {e}", path.display()),
    })?;
    GkslGenerator::try_from(&doc)
}

pub fn save_generator(g: &GkslGenerator, path: &Path) -> Result<()> {
    fs::write(path, to_json(&GeneratorDocument::from(g))?)?;
    Ok(())
}

/// `single`: one generator, one search.
pub fn cmd_single(
    cfg: &RunConfig,
    source: &GeneratorSource,
    opts: &SingleOptions,
) -> Result<SingleReport> {
    let prop = cfg.propagator()?;
    let (g, label, seed) = match source {
        GeneratorSource::Preset(p) => (p.generator(), format!("preset:{}", p.name()), None),
        GeneratorSource::File(path) => (
            load_generator(path)?,
            format!("file:{}", path.display()),
            None,
        ),
        GeneratorSource::Seed => {
            let spec = cfg.spec()?;
            let g = draw_generator(&spec, &RngStream::new(cfg.master_seed, 0))?;
            (
                g,
                format!("seed:{}", format_dims(&spec.subsystem_dims)),
                Some(cfg.master_seed),
            )
        }
    };
    if let Some(path) = &opts.save_generator {
        save_generator(&g, path)?;
    }
    let search = SearchOptions {
        record_negativity: opts.negativity_csv.is_some(),
        interpolate: opts.interpolate,
    };
    let mut result = pptt_search_with(&g, &prop, search)?;
    if let (Some(path), Some(series)) = (&opts.negativity_csv, result.negativity_trace.take()) {
        write_negativity_csv(&series, fs::File::create(path)?)?;
    }
    let report = SingleReport {
        code_version: CODE_VERSION.into(),
        source: label,
        dimension: g.dim_d,
        seed,
        grid: GridInfo::from(&prop),
        result,
    };
    if let Some(dir) = &cfg.output_path {
        write_all(dir, &[("result.json", to_json(&report)?)])?;
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairComparison {
    pub a: Correlation,
    pub b: Correlation,
    pub median_a: f64,
    pub median_b: f64,
    /// Bootstrap interval of `median(a) - median(b)`.
    pub median_difference: ConfidenceInterval,
    pub ks_distance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioComparison {
    pub code_version: String,
    pub config: RunConfig,
    pub embedded_traces: BTreeMap<String, f64>,
    pub sampled_ranks: BTreeMap<String, Vec<usize>>,
    pub summaries: BTreeMap<String, SummaryStats>,
    pub pairs: Vec<PairComparison>,
    /// KS distance between the iLOC composite ECDF and the product of its
    /// block-marginal ECDFs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iloc_product_rule_ks: Option<f64>,
    /// KS distance between the cLOC ECDF and a single-block run with
    /// matched seeds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cloc_marginal_ks: Option<f64>,
}

/// Default correlations for `scenarios`: all three, minus cLOC when the
/// subsystems differ in size.
pub fn default_correlations(dims: &[usize]) -> Vec<Correlation> {
    let mut v = vec![Correlation::Glb, Correlation::Iloc];
    if dims.iter().all(|&d| d == dims[0]) {
        v.push(Correlation::Cloc);
    }
    v
}

/// `scenarios`: the same dims under several correlation models.
///
/// The rank rule applies to GLB; local scenarios always sample full-rank
/// blocks.
pub fn cmd_scenarios(cfg: &RunConfig) -> Result<ScenarioComparison> {
    let dims = cfg.single_dims()?.to_vec();
    let prop = cfg.propagator()?;
    let mut sets: Vec<(Correlation, PpttSampleSet)> = Vec::new();
    for &c in &cfg.correlations {
        let mut spec = cfg.spec_for(&dims, c);
        if c != Correlation::Glb {
            spec.rank_rule = RankRule::Full;
        }
        eprintln!("scenarios: {c} on {}", format_dims(&dims));
        let set = run_ensemble_with(
            &spec,
            cfg.n_samples,
            &prop,
            cfg.master_seed,
            &cfg.run_options(true),
        )?;
        sets.push((c, set));
    }

    let mut summaries = BTreeMap::new();
    let mut embedded_traces = BTreeMap::new();
    let mut sampled_ranks = BTreeMap::new();
    for (c, set) in &sets {
        summaries.insert(
            c.to_string(),
            summarize(&set.x_values(), set.censored_count())?,
        );
        embedded_traces.insert(c.to_string(), set.spec.embedded_trace()?);
        sampled_ranks.insert(c.to_string(), set.spec.sampled_ranks()?);
    }

    let mut pairs = Vec::new();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            let (a, b) = (sets[i].1.x_values(), sets[j].1.x_values());
            pairs.push(PairComparison {
                a: sets[i].0,
                b: sets[j].0,
                median_a: crate::stats::median(&a),
                median_b: crate::stats::median(&b),
                median_difference: bootstrap_difference_ci(
                    &a,
                    &b,
                    Statistic::Median,
                    BOOTSTRAP_RESAMPLES,
                    0.95,
                    cfg.bootstrap_seed().wrapping_add((i * 16 + j) as u64),
                )?,
                ks_distance: ks_distance(&Ecdf::new(&a)?, &Ecdf::new(&b)?),
            });
        }
    }

    let mut iloc_product_rule_ks = None;
    let mut cloc_marginal_ks = None;
    for (c, set) in &sets {
        match c {
            Correlation::Iloc if dims.len() > 1 && set.censored_count() == 0 => {
                let blocks = run_block_times(&set.spec, cfg.n_samples, &prop, cfg.master_seed)?;
                iloc_product_rule_ks = Some(product_rule_ks(&set.x_values(), &blocks)?);
            }
            Correlation::Cloc => {
                let block = cloc_marginal_spec(&set.spec)?;
                let marginal = run_ensemble_with(
                    &block,
                    cfg.n_samples,
                    &prop,
                    cfg.master_seed,
                    &cfg.run_options(false),
                )?;
                cloc_marginal_ks = Some(ks_distance(
                    &Ecdf::new(&set.samples.iter().map(|s| s.x_ppt).collect::<Vec<_>>())?,
                    &Ecdf::new(&marginal.samples.iter().map(|s| s.x_ppt).collect::<Vec<_>>())?,
                ));
            }
            _ => {}
        }
    }

    let report = ScenarioComparison {
        code_version: CODE_VERSION.into(),
        config: cfg.clone(),
        embedded_traces,
        sampled_ranks,
        summaries,
        pairs,
        iloc_product_rule_ks,
        cloc_marginal_ks,
    };
    if let Some(dir) = &cfg.output_path {
        for (c, set) in &sets {
            write_sample_set(cfg, set, Some(&dir.join(c.to_string())))?;
        }
        write_all(dir, &[("comparison.json", to_json(&report)?)])?;
    }
    Ok(report)
}

/// The single-block GLB spec that draws the same matrix as the first block
/// of a cLOC spec under the same stream.
pub fn cloc_marginal_spec(spec: &ScenarioSpec) -> Result<ScenarioSpec> {
    if spec.correlation != Correlation::Cloc {
        return Err(Error::InvalidParameter("not a cLOC scenario".into()));
    }
    Ok(ScenarioSpec {
        subsystem_dims: vec![spec.subsystem_dims[0]],
        correlation: Correlation::Glb,
        trace_rule: TraceRule::Explicit(spec.sampled_traces()?),
        rank_rule: RankRule::Explicit(spec.sampled_ranks()?),
        k: spec.k,
        gamma: spec.gamma,
    })
}

/// KS distance between the composite ECDF and the product of the block
/// marginal ECDFs.
pub fn product_rule_ks(composite: &[f64], blocks: &[Vec<PpttResult>]) -> Result<f64> {
    let n_blocks = blocks.first().map_or(0, Vec::len);
    if n_blocks == 0 {
        return Err(Error::Empty("block times"));
    }
    let marginals = (0..n_blocks)
        .map(|j| Ecdf::new(&blocks.iter().map(|b| b[j].x_ppt).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    Ok(ks_distance(&Ecdf::new(composite)?, &ProductCdf(marginals)))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodTiming {
    pub method: Method,
    /// Mean wall-clock seconds per search.
    pub seconds_per_sample: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DimensionComparison {
    pub dims: Vec<usize>,
    pub dimension: usize,
    pub k: f64,
    pub samples: usize,
    pub max_abs_difference: f64,
    pub mean_abs_difference: f64,
    pub censoring_mismatches: usize,
    pub standard_fallbacks: usize,
    pub timings: Vec<MethodTiming>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PowerFit {
    pub method: Method,
    /// `θ₁` of `T(D) = θ₁·D⁶`, seconds.
    pub theta1: f64,
    pub loglog_slope: f64,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MethodComparison {
    pub code_version: String,
    pub config: RunConfig,
    pub rows: Vec<DimensionComparison>,
    /// Both fits are always reported; no method is declared faster.
    pub d6_fits: Vec<PowerFit>,
}

/// `compare-methods`: both back-ends on the same generators.
///
/// `--dims` takes a comma-separated list; without `--k` both `k = 0` and
/// `k = 1` are run.
pub fn cmd_compare_methods(cfg: &RunConfig) -> Result<MethodComparison> {
    let ks = cfg.k.map_or(vec![0.0, 1.0], |k| vec![k]);
    let methods = [Method::Standard, Method::CaoLu];
    let mut rows = Vec::new();
    for dims in &cfg.subsystem_dims {
        for &k in &ks {
            let spec = cfg.spec_for(dims, Correlation::Glb).with_k(k);
            spec.validate()?;
            let gens = (0..cfg.n_samples as u64)
                .map(|i| draw_generator(&spec, &RngStream::new(sample_seed(cfg.master_seed, i), 0)))
                .collect::<Result<Vec<_>>>()?;
            let mut results = Vec::new();
            let mut timings = Vec::new();
            for m in methods {
                let prop = PropagatorConfig::new(m, cfg.dx, cfg.x_max)?;
                let start = Instant::now();
                let r = gens
                    .iter()
                    .map(|g| pptt_search(g, &prop))
                    .collect::<Result<Vec<_>>>()?;
                timings.push(MethodTiming {
                    method: m,
                    seconds_per_sample: start.elapsed().as_secs_f64() / gens.len() as f64,
                });
                results.push(r);
            }
            let diffs: Vec<f64> = results[0]
                .iter()
                .zip(&results[1])
                .map(|(a, b)| (a.x_ppt - b.x_ppt).abs())
                .collect();
            eprintln!(
                "compare-methods: D = {}, k = {k}: max |Δx| = {:.4}",
                spec.total_dim(),
                diffs.iter().copied().fold(0.0, f64::max)
            );
            rows.push(DimensionComparison {
                dims: dims.clone(),
                dimension: spec.total_dim(),
                k,
                samples: gens.len(),
                max_abs_difference: diffs.iter().copied().fold(0.0, f64::max),
                mean_abs_difference: diffs.iter().sum::<f64>() / diffs.len() as f64,
                censoring_mismatches: results[0]
                    .iter()
                    .zip(&results[1])
                    .filter(|(a, b)| a.censored != b.censored)
                    .count(),
                standard_fallbacks: results[0].iter().filter(|r| r.fallback).count(),
                timings,
            });
        }
    }
    let d6_fits = methods
        .iter()
        .map(|&m| {
            let mut by_dim: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
            for row in &rows {
                let t = row
                    .timings
                    .iter()
                    .find(|t| t.method == m)
                    .expect("both methods timed");
                by_dim
                    .entry(row.dimension)
                    .or_default()
                    .push(t.seconds_per_sample);
            }
            let points: Vec<(f64, f64)> = by_dim
                .iter()
                .map(|(&d, ts)| (d as f64, ts.iter().sum::<f64>() / ts.len() as f64))
                .collect();
            Ok(PowerFit {
                method: m,
                theta1: fit_power_prefactor(&points, 6.0)?,
                loglog_slope: if points.len() >= 2 {
                    loglog_slope(&points)?
                } else {
                    f64::NAN
                },
                points,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let report = MethodComparison {
        code_version: CODE_VERSION.into(),
        config: cfg.clone(),
        rows,
        d6_fits,
    };
    if let Some(dir) = &cfg.output_path {
        write_all(dir, &[("compare_methods.json", to_json(&report)?)])?;
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitInput {
    pub path: PathBuf,
    /// Joint dimension, from `summary.json` next to the CSV when present.
    pub dimension: Option<usize>,
    pub report: FitReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitCommandReport {
    pub code_version: String,
    pub inputs: Vec<FitInput>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaling_fits: Option<ScalingFits>,
}

fn dimension_from_summary(csv: &Path) -> Option<usize> {
    let summary = csv.parent()?.join(SUMMARY_FILE);
    let text = fs::read_to_string(summary).ok()?;
    let s: EnsembleSummary = serde_json::from_str(&text).ok()?;
    Some(s.metadata.spec.total_dim())
}

/// `fit`: analyze one or more `samples.csv` files. With two or more
/// dimensions among the inputs the scaling laws are fitted as well.
pub fn cmd_fit(paths: &[PathBuf], seed: u64, out: Option<&Path>) -> Result<FitCommandReport> {
    if paths.is_empty() {
        return Err(Error::Empty("sample files"));
    }
    let mut inputs = Vec::new();
    for path in paths {
        let samples = read_samples_csv(fs::File::open(path)?)?;
        let values: Vec<f64> = samples
            .iter()
            .filter(|s| !s.censored)
            .map(|s| s.x_ppt)
            .collect();
        let censored = samples.len() - values.len();
        inputs.push(FitInput {
            path: path.clone(),
            dimension: dimension_from_summary(path),
            report: analyze(&values, censored, seed ^ BOOTSTRAP_SEED_OFFSET)?,
        });
    }
    let with_dim: Vec<(f64, &SummaryStats)> = inputs
        .iter()
        .filter_map(|i| i.dimension.map(|d| (d as f64, &i.report.stats)))
        .collect();
    let mut distinct: Vec<f64> = with_dim.iter().map(|p| p.0).collect();
    distinct.dedup();
    let scaling_fits = if distinct.len() >= 2 {
        let pts = |f: fn(&SummaryStats) -> f64| {
            with_dim.iter().map(|(d, s)| (*d, f(s))).collect::<Vec<_>>()
        };
        let mut points = BTreeMap::new();
        points.insert("mean".to_string(), pts(|s| s.mean));
        points.insert("median".to_string(), pts(|s| s.median));
        points.insert("min".to_string(), pts(|s| s.min));
        points.insert("stdev".to_string(), pts(|s| s.stdev));
        Some(ScalingFits {
            theta_mean: fit_log_scaling(&points["mean"])?,
            theta_median: fit_log_scaling(&points["median"])?,
            theta_min: fit_log_scaling(&points["min"])?,
            theta_stdev: fit_inverse_scaling(&points["stdev"])?,
            points,
        })
    } else {
        None
    };
    let report = FitCommandReport {
        code_version: CODE_VERSION.into(),
        inputs,
        scaling_fits,
    };
    if let Some(dir) = out {
        write_all(dir, &[("fit.json", to_json(&report)?)])?;
    }
    Ok(report)
}
