//! Noise-correlation scenarios and ensemble execution.
//!
//! * GLB: one Kossakowski matrix on the joint space, with non-local terms.
//! * iLOC: independent local matrices, one per subsystem.
//! * cLOC: one local matrix copied to every (equal-sized) subsystem.
//!
//! Sample `i` of a run with master seed `s` is drawn from its own seed
//! [`sample_seed`]`(s, i)`, so a single row of an ensemble can be redrawn on
//! its own and results never depend on scheduling.

use std::io::{Read, Write};
use std::sync::atomic::{AtomicUsize, Ordering};

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{sample_gue_hamiltonian, sample_kossakowski, KossakowskiMatrix, RngStream};
use crate::entanglement::{pptt_search, PpttResult};
use crate::error::{Error, Result};
use crate::generator::{embed_layout, BasisKind, GkslGenerator, LocalNoiseLayout};
use crate::propagators::{Method, PropagatorConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Correlation {
    Glb,
    Iloc,
    Cloc,
}

impl std::str::FromStr for Correlation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "glb" => Ok(Correlation::Glb),
            "iloc" => Ok(Correlation::Iloc),
            "cloc" => Ok(Correlation::Cloc),
            other => Err(Error::InvalidParameter(format!(
                "unknown correlation {other:?} (expected glb, iloc or cloc)"
            ))),
        }
    }
}

impl std::fmt::Display for Correlation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Correlation::Glb => "glb",
            Correlation::Iloc => "iloc",
            Correlation::Cloc => "cloc",
        })
    }
}

/// How the Kossakowski trace ξ is chosen for each sampled matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceRule {
    /// `ξ_d = d` for every sampled matrix of dimension `d`.
    Canonical,
    /// `ξ_d = d·log₂d`, which makes local and global traces agree.
    SuperLinear,
    /// One value per sampled matrix, or a single value for all of them.
    Explicit(Vec<f64>),
}

impl std::str::FromStr for TraceRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "canonical" => Ok(TraceRule::Canonical),
            "superlinear" | "super-linear" => Ok(TraceRule::SuperLinear),
            _ => parse_list(s, "trace").map(TraceRule::Explicit),
        }
    }
}

/// Rank bound of each sampled matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankRule {
    /// `d²-1` for every sampled matrix of dimension `d`.
    Full,
    /// GLB rank equal to the rank of the matching local embedding,
    /// `Σ_j (d_j²-1)`. Local scenarios sample at full rank.
    Matched,
    /// One value per sampled matrix, or a single value for all of them.
    Explicit(Vec<usize>),
}

impl std::str::FromStr for RankRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(RankRule::Full),
            "matched" => Ok(RankRule::Matched),
            _ => parse_list(s, "rank").map(RankRule::Explicit),
        }
    }
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|v| {
            v.trim().parse().map_err(|_| {
                Error::InvalidParameter(format!("cannot parse {what} value {v:?} in {s:?}"))
            })
        })
        .collect()
}

/// Parses `4` or `2x2x2`.
pub fn parse_dims(s: &str) -> Result<Vec<usize>> {
    let dims = s
        .split(['x', 'X'])
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidDimension(format!("cannot parse dimension list {s:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(dims)
}

pub fn format_dims(dims: &[usize]) -> String {
    dims.iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("x")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub subsystem_dims: Vec<usize>,
    pub correlation: Correlation,
    pub trace_rule: TraceRule,
    pub rank_rule: RankRule,
    pub k: f64,
    pub gamma: f64,
}

impl ScenarioSpec {
    /// Canonical single-system spec: GLB, `ξ = D`, full rank, `k = 0`.
    pub fn canonical(dim_d: usize) -> Self {
        Self {
            subsystem_dims: vec![dim_d],
            correlation: Correlation::Glb,
            trace_rule: TraceRule::Canonical,
            rank_rule: RankRule::Full,
            k: 0.0,
            gamma: 1.0,
        }
    }

    pub fn new(subsystem_dims: Vec<usize>, correlation: Correlation) -> Self {
        Self {
            subsystem_dims,
            correlation,
            ..Self::canonical(2)
        }
    }

    pub fn with_trace(mut self, rule: TraceRule) -> Self {
        self.trace_rule = rule;
        self
    }

    pub fn with_rank(mut self, rule: RankRule) -> Self {
        self.rank_rule = rule;
        self
    }

    pub fn with_k(mut self, k: f64) -> Self {
        self.k = k;
        self
    }

    pub fn total_dim(&self) -> usize {
        self.subsystem_dims.iter().product()
    }

    /// Dimensions of the matrices actually sampled: the joint space for GLB,
    /// each subsystem for iLOC, the first subsystem for cLOC.
    pub fn sampled_dims(&self) -> Vec<usize> {
        match self.correlation {
            Correlation::Glb => vec![self.total_dim()],
            Correlation::Iloc => self.subsystem_dims.clone(),
            Correlation::Cloc => vec![self.subsystem_dims[0]],
        }
    }

    /// Trace targets of the sampled matrices.
    pub fn sampled_traces(&self) -> Result<Vec<f64>> {
        let dims = self.sampled_dims();
        match &self.trace_rule {
            TraceRule::Canonical => Ok(dims.iter().map(|&d| d as f64).collect()),
            TraceRule::SuperLinear => {
                Ok(dims.iter().map(|&d| d as f64 * (d as f64).log2()).collect())
            }
            TraceRule::Explicit(v) => broadcast(v, dims.len(), "trace"),
        }
    }

    /// Rank bounds of the sampled matrices.
    pub fn sampled_ranks(&self) -> Result<Vec<usize>> {
        let dims = self.sampled_dims();
        match &self.rank_rule {
            RankRule::Full => Ok(dims.iter().map(|&d| d * d - 1).collect()),
            RankRule::Matched => match self.correlation {
                Correlation::Glb => Ok(vec![self.subsystem_dims.iter().map(|&d| d * d - 1).sum()]),
                _ => Ok(dims.iter().map(|&d| d * d - 1).collect()),
            },
            RankRule::Explicit(v) => broadcast(v, dims.len(), "rank"),
        }
    }

    /// Trace of the Kossakowski matrix on the joint space,
    /// `Σ_j (D/d_j)·ξ_j` for local scenarios.
    pub fn embedded_trace(&self) -> Result<f64> {
        let traces = self.sampled_traces()?;
        let total = self.total_dim() as f64;
        Ok(match self.correlation {
            Correlation::Glb => traces[0],
            Correlation::Iloc => self
                .subsystem_dims
                .iter()
                .zip(&traces)
                .map(|(&d, xi)| total / d as f64 * xi)
                .sum(),
            Correlation::Cloc => self
                .subsystem_dims
                .iter()
                .map(|&d| total / d as f64 * traces[0])
                .sum(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.subsystem_dims.is_empty() {
            return Err(Error::InvalidDimension(
                "no subsystem dimensions given".into(),
            ));
        }
        if let Some(&d) = self.subsystem_dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidDimension(format!(
                "subsystem dimensions must be at least 2, got {d}"
            )));
        }
        if self.correlation == Correlation::Cloc
            && self
                .subsystem_dims
                .iter()
                .any(|&d| d != self.subsystem_dims[0])
        {
            return Err(Error::UnequalBlocks(self.subsystem_dims.clone()));
        }
        for xi in self.sampled_traces()? {
            if !(xi > 0.0) || !xi.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "Kossakowski trace must be positive, got {xi}"
                )));
            }
        }
        for (r, d) in self.sampled_ranks()?.into_iter().zip(self.sampled_dims()) {
            if r < 1 || r > d * d - 1 {
                return Err(Error::RankOutOfRange {
                    rank: r,
                    max: d * d - 1,
                });
            }
        }
        if !self.k.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "k must be finite, got {}",
                self.k
            )));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        Ok(())
    }

    /// Whether blocks can be simulated separately and combined with the max
    /// rule: local noise, more than one block and no global Hamiltonian.
    pub fn supports_block_path(&self) -> bool {
        self.correlation != Correlation::Glb && self.subsystem_dims.len() > 1 && self.k == 0.0
    }
}

fn broadcast<T: Copy>(values: &[T], n: usize, what: &str) -> Result<Vec<T>> {
    match values.len() {
        1 => Ok(vec![values[0]; n]),
        m if m == n => Ok(values.to_vec()),
        m => Err(Error::InvalidParameter(format!(
            "{m} explicit {what} values for {n} sampled matrices"
        ))),
    }
}

/// Seed of sample `index` in a run with `master_seed`.
pub fn sample_seed(master_seed: u64, index: u64) -> u64 {
    RngStream::new(master_seed, index).rng().next_u64()
}

/// Draws the sampled Kossakowski matrices (one for GLB and cLOC, one per
/// block for iLOC). Consumes the stream exactly as [`draw_generator`] does
/// before it draws the Hamiltonian.
pub fn draw_kossakowski_blocks<R: rand::Rng + ?Sized>(
    spec: &ScenarioSpec,
    rng: &mut R,
) -> Result<Vec<KossakowskiMatrix>> {
    spec.validate()?;
    let dims = spec.sampled_dims();
    let traces = spec.sampled_traces()?;
    let ranks = spec.sampled_ranks()?;
    dims.iter()
        .zip(&traces)
        .zip(&ranks)
        .map(|((&d, &xi), &r)| sample_kossakowski(d, xi, r, rng))
        .collect()
}

/// One generator on the joint space.
pub fn draw_generator(spec: &ScenarioSpec, stream: &RngStream) -> Result<GkslGenerator> {
    let mut rng = stream.rng();
    let blocks = draw_kossakowski_blocks(spec, &mut rng)?;
    let (kossakowski, basis_kind) = match spec.correlation {
        Correlation::Glb => (
            blocks.into_iter().next().expect("one block"),
            BasisKind::GellMann,
        ),
        Correlation::Iloc | Correlation::Cloc => {
            let locals = if spec.correlation == Correlation::Cloc {
                vec![blocks[0].clone(); spec.subsystem_dims.len()]
            } else {
                blocks
            };
            let noise = embed_layout(&LocalNoiseLayout::new(spec.subsystem_dims.clone(), locals)?)?;
            (noise.kossakowski, noise.basis_kind)
        }
    };
    let dim = spec.total_dim();
    let h = if spec.k != 0.0 {
        Some(sample_gue_hamiltonian(dim, &mut rng)?)
    } else {
        None
    };
    Ok(GkslGenerator::new(kossakowski, basis_kind, spec.k, h)?
        .with_gamma(spec.gamma)
        .with_provenance(*stream))
}

/// Marginal generators of a local scenario, one per sampled block.
pub fn draw_block_generators(
    spec: &ScenarioSpec,
    stream: &RngStream,
) -> Result<Vec<GkslGenerator>> {
    if spec.correlation == Correlation::Glb {
        return Err(Error::InvalidParameter(
            "GLB noise has no block decomposition".into(),
        ));
    }
    let mut rng = stream.rng();
    draw_kossakowski_blocks(spec, &mut rng)?
        .into_iter()
        .map(|k| {
            Ok(GkslGenerator::new(k, BasisKind::GellMann, 0.0, None)?
                .with_gamma(spec.gamma)
                .with_provenance(*stream))
        })
        .collect()
}

/// PPT time of a tensor product of channels: the product is PPT exactly when
/// every factor is, so the composite time is the largest block time.
pub fn compose_pptt_iloc(block_times: &[PpttResult]) -> Result<PpttResult> {
    if block_times.is_empty() {
        return Err(Error::Empty("block PPT times"));
    }
    let fallback = block_times.iter().any(|r| r.fallback);
    if let Some(c) = block_times.iter().find(|r| r.censored) {
        return Ok(PpttResult {
            fallback,
            ..PpttResult::censored_at(c.x_ppt)
        });
    }
    let x = block_times.iter().map(|r| r.x_ppt).fold(f64::MIN, f64::max);
    Ok(PpttResult {
        fallback,
        ..PpttResult::at(x)
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpttSample {
    pub sample_index: u64,
    pub seed: u64,
    pub x_ppt: f64,
    pub censored: bool,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// Simulate local scenarios on the joint space even when the block path
    /// is available.
    pub force_direct: bool,
    /// Report progress on standard error.
    pub progress: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PpttSampleSet {
    pub spec: ScenarioSpec,
    pub method: Method,
    pub dx: f64,
    pub x_max: f64,
    pub master_seed: u64,
    /// True when blocks were simulated separately and composed.
    pub block_path: bool,
    /// Samples whose standard-method eigendecomposition was rejected.
    pub fallback_count: usize,
    pub samples: Vec<PpttSample>,
}

/// Runs one sample of a scenario.
pub fn run_sample(
    spec: &ScenarioSpec,
    cfg: &PropagatorConfig,
    master_seed: u64,
    index: u64,
    block_path: bool,
) -> Result<(PpttSample, bool)> {
    let seed = sample_seed(master_seed, index);
    let stream = RngStream::new(seed, 0);
    let result = if block_path {
        let blocks = draw_block_generators(spec, &stream)?;
        // identical copies share one PPT time
        let blocks = if spec.correlation == Correlation::Cloc {
            &blocks[..1]
        } else {
            &blocks[..]
        };
        let times = blocks
            .iter()
            .map(|g| pptt_search(g, cfg))
            .collect::<Result<Vec<_>>>()?;
        compose_pptt_iloc(&times)?
    } else {
        pptt_search(&draw_generator(spec, &stream)?, cfg)?
    };
    Ok((
        PpttSample {
            sample_index: index,
            seed,
            x_ppt: result.x_ppt,
            censored: result.censored,
        },
        result.fallback,
    ))
}

pub fn run_ensemble(
    spec: &ScenarioSpec,
    n_samples: usize,
    cfg: &PropagatorConfig,
    master_seed: u64,
) -> Result<PpttSampleSet> {
    run_ensemble_with(spec, n_samples, cfg, master_seed, &RunOptions::default())
}

/// `n_samples` independent draws and searches, fanned out over a worker
/// pool. The result is independent of the number of workers.
pub fn run_ensemble_with(
    spec: &ScenarioSpec,
    n_samples: usize,
    cfg: &PropagatorConfig,
    master_seed: u64,
    opts: &RunOptions,
) -> Result<PpttSampleSet> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter(
            "at least one sample is required".into(),
        ));
    }
    spec.validate()?;
    cfg.validate()?;
    let block_path = spec.supports_block_path() && !opts.force_direct;
    let done = AtomicUsize::new(0);
    let step = (n_samples / 20).max(1);
    let work = || {
        (0..n_samples as u64)
            .into_par_iter()
            .map(|i| {
                let r = run_sample(spec, cfg, master_seed, i, block_path);
                if opts.progress {
                    let n = done.fetch_add(1, Ordering::Relaxed) + 1;
                    if n % step == 0 || n == n_samples {
                        eprintln!("  {n}/{n_samples} samples");
                    }
                }
                r
            })
            .collect::<Result<Vec<_>>>()
    };
    let results = match opts.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidParameter(format!("cannot start worker pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let fallback_count = results.iter().filter(|(_, f)| *f).count();
    let samples = results.into_iter().map(|(s, _)| s).collect();
    Ok(PpttSampleSet {
        spec: spec.clone(),
        method: cfg.method,
        dx: cfg.dx,
        x_max: cfg.x_max,
        master_seed,
        block_path,
        fallback_count,
        samples,
    })
}

/// Per-block PPT times of a local scenario: entry `[i][j]` is block `j` of
/// sample `i`, drawn from the same streams as [`run_ensemble`].
pub fn run_block_times(
    spec: &ScenarioSpec,
    n_samples: usize,
    cfg: &PropagatorConfig,
    master_seed: u64,
) -> Result<Vec<Vec<PpttResult>>> {
    spec.validate()?;
    cfg.validate()?;
    (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let stream = RngStream::new(sample_seed(master_seed, i), 0);
            draw_block_generators(spec, &stream)?
                .iter()
                .map(|g| pptt_search(g, cfg))
                .collect()
        })
        .collect()
}

/// Converts PPT times sampled with trace `xi_old` into those for `xi_new`:
/// scaling K by `c` scales the generator by `c`, hence times by `1/c`.
pub fn rescale_samples(set: &PpttSampleSet, xi_old: f64, xi_new: f64) -> Result<PpttSampleSet> {
    if !(xi_old > 0.0 && xi_new > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "traces must be positive, got {xi_old} and {xi_new}"
        )));
    }
    let f = xi_old / xi_new;
    let mut out = set.clone();
    out.dx *= f;
    out.x_max *= f;
    for s in &mut out.samples {
        s.x_ppt *= f;
    }
    Ok(out)
}

/// Formats with 9 significant digits in positional notation.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (8 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

impl PpttSampleSet {
    pub fn x_values(&self) -> Vec<f64> {
        self.samples
            .iter()
            .filter(|s| !s.censored)
            .map(|s| s.x_ppt)
            .collect()
    }

    pub fn censored_count(&self) -> usize {
        self.samples.iter().filter(|s| s.censored).count()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_samples_csv(&self.samples, out)
    }

    pub fn metadata(&self) -> SampleSetMetadata {
        SampleSetMetadata {
            spec: self.spec.clone(),
            method: self.method,
            dx: self.dx,
            x_max: self.x_max,
            master_seed: self.master_seed,
            n_samples: self.samples.len(),
            censored: self.censored_count(),
            block_path: self.block_path,
            fallback_count: self.fallback_count,
            embedded_trace: self.spec.embedded_trace().unwrap_or(f64::NAN),
            sampled_traces: self.spec.sampled_traces().unwrap_or_default(),
            sampled_ranks: self.spec.sampled_ranks().unwrap_or_default(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// JSON header describing a sample set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SampleSetMetadata {
    pub spec: ScenarioSpec,
    pub method: Method,
    pub dx: f64,
    pub x_max: f64,
    pub master_seed: u64,
    pub n_samples: usize,
    pub censored: usize,
    pub block_path: bool,
    pub fallback_count: usize,
    pub embedded_trace: f64,
    pub sampled_traces: Vec<f64>,
    pub sampled_ranks: Vec<usize>,
    pub code_version: String,
}

pub const CSV_HEADER: [&str; 4] = ["sample_index", "seed", "x_ppt", "censored"];

/// `sample_index,seed,x_ppt,censored` with LF line endings.
pub fn write_samples_csv<W: Write>(samples: &[PpttSample], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for s in samples {
        w.write_record([
            s.sample_index.to_string(),
            s.seed.to_string(),
            format_sig9(s.x_ppt),
            u8::from(s.censored).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a samples CSV; errors carry the 1-based line number.
pub fn read_samples_csv<R: Read>(input: R) -> Result<Vec<PpttSample>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Malformed {
            line: 1,
            message: format!(
                "expected header {:?}, got {:?}",
                CSV_HEADER.join(","),
                header
            ),
        });
    }
    let mut samples = Vec::new();
    for record in r.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| record.get(i).unwrap_or("").trim();
        let bad = |what: &str| Error::Malformed {
            line,
            message: format!("invalid {what} value"),
        };
        let censored = match field(3) {
            "0" => false,
            "1" => true,
            _ => return Err(bad("censored")),
        };
        let x_ppt: f64 = field(2).parse().map_err(|_| bad("x_ppt"))?;
        if !x_ppt.is_finite() || x_ppt < 0.0 {
            return Err(bad("x_ppt"));
        }
        samples.push(PpttSample {
            sample_index: field(0).parse().map_err(|_| bad("sample_index"))?,
            seed: field(1).parse().map_err(|_| bad("seed"))?,
            x_ppt,
            censored,
        });
    }
    if samples.is_empty() {
        return Err(Error::Empty("samples CSV"));
    }
    Ok(samples)
}
