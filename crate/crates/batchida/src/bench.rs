//! Benchmark grids: algorithms crossed with search configurations over an
//! instance set, written out as CSV.

use std::fmt::{self, Debug};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use batchida_core::{
    bfs_oracle, build_pdb, compress_div, compress_mod, CompressionMode, Cost, HeuristicSource, Instance,
    PatternSpace, RubiksCube, SearchError, SearchResult, SlidingTile,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::algorithms::{aidastar_with, batch_astar, batch_idastar, idastar_limited, Algorithm, DInit, SearchConfig};
use crate::eval::{BatchEvaluator, EvaluatorGroup, Latency, LinearModel, TableSim};
use crate::formats::{read_instances, read_linear, read_pdb, write_atomic, AnyInstance, FormatError, ResultLine};
use crate::suites;

/// States the breadth-first oracle may store before giving up.
pub const BFS_CAP: usize = 40_000_000;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid {field}: {msg}")]
    Spec { field: &'static str, msg: String },
    #[error(
        "pattern database '{path}' not found; build it with `batchida build-pdb --domain {domain} --pattern <labels> --out {path}`"
    )]
    MissingPdb { path: String, domain: String },
    #[error("config file {path}: {msg}")]
    Config { path: String, msg: String },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Search(#[from] SearchError),
}

fn spec_err(field: &'static str, msg: impl Into<String>) -> BenchError {
    BenchError::Spec { field, msg: msg.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainChoice {
    Stp(usize),
    Cube,
}

impl DomainChoice {
    pub fn name(self) -> String {
        match self {
            DomainChoice::Stp(n) => format!("stp{n}"),
            DomainChoice::Cube => "rc".into(),
        }
    }
}

impl FromStr for DomainChoice {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rc" | "cube" => Ok(DomainChoice::Cube),
            _ => match s.strip_prefix("stp").and_then(|n| n.parse().ok()) {
                Some(n @ 2..=5) => Ok(DomainChoice::Stp(n)),
                _ => Err(spec_err("domain", format!("'{s}' (expected stp2..stp5 or rc)"))),
            },
        }
    }
}

/// Where instances come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InstanceSource {
    File(PathBuf),
    /// A shipped suite: `stp3`, `rc` or `korf10`.
    Suite(String),
    /// `uniform:<count>`: uniformly drawn tile states.
    Uniform(usize),
    /// `walk:<count>:<min>-<max>`: random walks from the goal.
    Walks { count: usize, min: usize, max: usize },
}

impl FromStr for InstanceSource {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || spec_err("instances", format!("'{s}' (expected a file, a suite name, uniform:N or walk:N:MIN-MAX)"));
        if let Some(n) = s.strip_prefix("uniform:") {
            return n.parse().map(InstanceSource::Uniform).map_err(|_| bad());
        }
        if let Some(rest) = s.strip_prefix("walk:") {
            let (count, range) = rest.split_once(':').ok_or_else(bad)?;
            let (min, max) = range.split_once('-').unwrap_or((range, range));
            let p = |t: &str| t.parse::<usize>().map_err(|_| bad());
            let (count, min, max) = (p(count)?, p(min)?, p(max)?);
            if min > max {
                return Err(bad());
            }
            return Ok(InstanceSource::Walks { count, min, max });
        }
        match s.strip_prefix("suite:").unwrap_or(s) {
            name @ ("stp3" | "rc" | "korf10") => Ok(InstanceSource::Suite(name.into())),
            _ => Ok(InstanceSource::File(PathBuf::from(s))),
        }
    }
}

/// The `--heuristic` grammar:
///
/// * `auto`: a built-in table for the domain;
/// * `zero`, `manhattan`;
/// * `pdb:<file>[+<file>...][@div<k>|@mod<k>]`: one BPDB1 table, a sum of
///   disjoint additive tables, or a compressed single table;
/// * `linear:<file>[@<quantile>]`: a BLIN1 linear model (quantile 0.5 by
///   default).
#[derive(Clone, Debug, PartialEq)]
pub enum HeuristicSpec {
    Auto,
    Zero,
    Manhattan,
    Pdb { paths: Vec<PathBuf>, compression: Option<(CompressionMode, u64)> },
    Linear { path: PathBuf, quantile: f64 },
}

impl FromStr for HeuristicSpec {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: &str| spec_err("heuristic", format!("'{s}': {msg}"));
        match s {
            "auto" => return Ok(HeuristicSpec::Auto),
            "zero" => return Ok(HeuristicSpec::Zero),
            "manhattan" => return Ok(HeuristicSpec::Manhattan),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("pdb:") {
            let (files, compression) = match rest.rsplit_once('@') {
                Some((files, suffix)) => {
                    let (mode, k) = if let Some(k) = suffix.strip_prefix("div") {
                        (CompressionMode::Div, k)
                    } else if let Some(k) = suffix.strip_prefix("mod") {
                        (CompressionMode::Mod, k)
                    } else {
                        return Err(bad("compression must be @div<k> or @mod<k>"));
                    };
                    let k: u64 = k.parse().map_err(|_| bad("compression factor is not a number"))?;
                    (files, Some((mode, k)))
                }
                None => (rest, None),
            };
            let paths: Vec<PathBuf> = files.split('+').filter(|p| !p.is_empty()).map(PathBuf::from).collect();
            if paths.is_empty() {
                return Err(bad("no table files"));
            }
            if compression.is_some() && paths.len() > 1 {
                return Err(bad("compression applies to a single table"));
            }
            return Ok(HeuristicSpec::Pdb { paths, compression });
        }
        if let Some(rest) = s.strip_prefix("linear:") {
            let (path, quantile) = match rest.rsplit_once('@') {
                Some((p, q)) => (p, q.parse::<f64>().map_err(|_| bad("quantile is not a number"))?),
                None => (rest, 0.5),
            };
            if !(quantile > 0.0 && quantile <= 1.0) {
                return Err(bad("quantile must lie in (0, 1]"));
            }
            return Ok(HeuristicSpec::Linear { path: PathBuf::from(path), quantile });
        }
        Err(bad("expected auto, zero, manhattan, pdb:<files> or linear:<file>"))
    }
}

/// A heuristic ready to be evaluated.
#[derive(Clone, Debug)]
pub enum Heuristic {
    Table(HeuristicSource),
    Linear(Arc<LinearModel>),
}

impl Heuristic {
    /// Loads the tables or model named by `spec` for `domain`.
    pub fn load<D: PatternSpace>(spec: &HeuristicSpec, domain: &D, domain_name: &str) -> Result<Self, BenchError> {
        let table = |path: &Path| {
            if !path.exists() {
                return Err(BenchError::MissingPdb { path: path.display().to_string(), domain: domain_name.into() });
            }
            Ok(read_pdb(path, domain)?)
        };
        let source = match spec {
            HeuristicSpec::Auto => auto_source(domain)?,
            HeuristicSpec::Zero => HeuristicSource::Zero,
            HeuristicSpec::Manhattan => {
                if domain.manhattan(&domain.goal()).is_none() {
                    return Err(spec_err("heuristic", format!("manhattan is not defined for {domain_name}")));
                }
                HeuristicSource::Manhattan
            }
            HeuristicSpec::Pdb { paths, compression: None } if paths.len() == 1 => HeuristicSource::pdb(table(&paths[0])?),
            HeuristicSpec::Pdb { paths, compression: None } => {
                HeuristicSource::additive(paths.iter().map(|p| table(p)).collect::<Result<Vec<_>, _>>()?)
            }
            HeuristicSpec::Pdb { paths, compression: Some((mode, k)) } => {
                let t = table(&paths[0])?;
                let c = match mode {
                    CompressionMode::Div => compress_div(&t, *k),
                    CompressionMode::Mod => compress_mod(&t, *k),
                }
                .map_err(|e| spec_err("heuristic", e.to_string()))?;
                HeuristicSource::compressed(c)
            }
            HeuristicSpec::Linear { path, quantile } => {
                if !path.exists() {
                    return Err(spec_err("heuristic", format!("linear model '{}' not found", path.display())));
                }
                let model = read_linear(path, *quantile)?;
                if model.feature_len() != domain.feature_len() {
                    return Err(spec_err(
                        "heuristic",
                        format!("model expects {} features, {domain_name} has {}", model.feature_len(), domain.feature_len()),
                    ));
                }
                return Ok(Heuristic::Linear(Arc::new(model)));
            }
        };
        source.validate_for(domain).map_err(|e| spec_err("heuristic", e.to_string()))?;
        Ok(Heuristic::Table(source))
    }

    pub fn estimate<D: PatternSpace>(&self, domain: &D, state: &D::State) -> Cost {
        match self {
            Heuristic::Table(s) => s.lookup(domain, state),
            Heuristic::Linear(m) => m.score(&domain.encode_features(state)),
        }
    }

    /// One backend instance; table lookups pay `latency` per call.
    pub fn backend<D>(&self, domain: &D, latency: Latency) -> Result<Arc<dyn BatchEvaluator>, SearchError>
    where
        D: PatternSpace + Clone + Debug + 'static,
    {
        match self {
            Heuristic::Table(s) => {
                let sim = TableSim::new(domain.clone(), s.clone(), latency)
                    .map_err(|e| SearchError::State(batchida_core::StateError::Invalid(e.to_string())))?;
                Ok(Arc::new(sim))
            }
            Heuristic::Linear(m) => Ok(m.clone()),
        }
    }

    pub fn group<D>(&self, domain: &D, latency: Latency, cfg: &SearchConfig) -> Result<EvaluatorGroup, SearchError>
    where
        D: PatternSpace + Clone + Debug + 'static,
    {
        cfg.validate()?;
        let backends = (0..cfg.evaluators).map(|_| self.backend(domain, latency)).collect::<Result<Vec<_>, _>>()?;
        EvaluatorGroup::new(backends, cfg.threads, cfg.batch_policy())
    }
}

/// Built-in table per domain: the additive {1..4}+{5..8} pair on the
/// 8-puzzle, Manhattan distance on larger puzzles, four corners on the
/// cube.
pub fn auto_source<D: PatternSpace>(domain: &D) -> Result<HeuristicSource, BenchError> {
    let build = |p: &[u8]| build_pdb(domain, p, &domain.goal(), 1 << 24).map_err(|e| spec_err("heuristic", e.to_string()));
    Ok(match domain.tag() {
        batchida_core::DomainTag::Stp(3) => HeuristicSource::additive([build(&[1, 2, 3, 4])?, build(&[5, 6, 7, 8])?]),
        batchida_core::DomainTag::Stp(_) => HeuristicSource::Manhattan,
        batchida_core::DomainTag::Cube => HeuristicSource::pdb(build(&[0, 1, 2, 3])?),
    })
}

/// A partial-flush timeout as written in configs: microseconds, or
/// `none` for no timeout.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TimeoutUs(pub Option<u64>);

impl TimeoutUs {
    pub fn duration(self) -> Option<Duration> {
        self.0.map(Duration::from_micros)
    }
}

impl FromStr for TimeoutUs {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" | "inf" => Ok(TimeoutUs(None)),
            _ => s.parse().map(|v| TimeoutUs(Some(v))).map_err(|_| spec_err("timeout-us", format!("'{s}'"))),
        }
    }
}

impl fmt::Display for TimeoutUs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(v) => write!(f, "{v}"),
            None => f.write_str("none"),
        }
    }
}

impl<'de> Deserialize<'de> for TimeoutUs {
    fn deserialize<De: serde::Deserializer<'de>>(d: De) -> Result<Self, De::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Word(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(TimeoutUs(Some(v))),
            Raw::Word(w) => w.parse().map_err(serde::de::Error::custom),
        }
    }
}

fn parse_d_init(s: &str) -> Result<DInit, BenchError> {
    match s {
        "auto" => Ok(DInit::Auto),
        _ => s.parse().map(DInit::Fixed).map_err(|_| spec_err("d-init", format!("'{s}' (expected auto or a depth)"))),
    }
}

/// Everything a benchmark invocation can set. Every field is optional so
/// that a config file and command-line flags can be layered.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    pub domain: Option<String>,
    pub instances: Option<String>,
    pub algo: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub time_limit_s: Option<f64>,
    #[serde(default)]
    pub search: SearchOptions,
    #[serde(default)]
    pub heuristic: HeuristicOptions,
    #[serde(default)]
    pub output: OutputOptions,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchOptions {
    pub threads: Option<Vec<usize>>,
    pub work_num: Option<Vec<usize>>,
    pub batch_size: Option<Vec<usize>>,
    pub timeout_us: Option<Vec<TimeoutUs>>,
    pub evaluators: Option<Vec<usize>>,
    pub d_init: Option<String>,
    pub pruning: Option<bool>,
    pub flush_on_stall: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeuristicOptions {
    pub spec: Option<String>,
    pub latency_per_call_us: Option<u64>,
    pub latency_per_item_ns: Option<u64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOptions {
    pub out: Option<PathBuf>,
    pub iter_out: Option<PathBuf>,
}

impl RunOptions {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, BenchError> {
        toml::from_str(text).map_err(|e| BenchError::Config { path: path.display().to_string(), msg: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| BenchError::Config { path: path.display().to_string(), msg: e.to_string() })?;
        Self::from_toml(&text, path)
    }

    /// `self` with every unset field taken from `base`.
    pub fn over(self, base: RunOptions) -> RunOptions {
        let (s, b) = (self.search, base.search);
        let (h, bh) = (self.heuristic, base.heuristic);
        let (o, bo) = (self.output, base.output);
        RunOptions {
            domain: self.domain.or(base.domain),
            instances: self.instances.or(base.instances),
            algo: self.algo.or(base.algo),
            seed: self.seed.or(base.seed),
            time_limit_s: self.time_limit_s.or(base.time_limit_s),
            search: SearchOptions {
                threads: s.threads.or(b.threads),
                work_num: s.work_num.or(b.work_num),
                batch_size: s.batch_size.or(b.batch_size),
                timeout_us: s.timeout_us.or(b.timeout_us),
                evaluators: s.evaluators.or(b.evaluators),
                d_init: s.d_init.or(b.d_init),
                pruning: s.pruning.or(b.pruning),
                flush_on_stall: s.flush_on_stall.or(b.flush_on_stall),
            },
            heuristic: HeuristicOptions {
                spec: h.spec.or(bh.spec),
                latency_per_call_us: h.latency_per_call_us.or(bh.latency_per_call_us),
                latency_per_item_ns: h.latency_per_item_ns.or(bh.latency_per_item_ns),
            },
            output: OutputOptions { out: o.out.or(bo.out), iter_out: o.iter_out.or(bo.iter_out) },
        }
    }
}

/// Search-configuration axes; the grid is their cartesian product.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid {
    pub threads: Vec<usize>,
    pub work_num: Vec<usize>,
    pub batch_size: Vec<usize>,
    pub timeout_us: Vec<TimeoutUs>,
    pub evaluators: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSpec {
    pub domain: DomainChoice,
    pub instances: InstanceSource,
    pub algorithms: Vec<Algorithm>,
    pub grid: Grid,
    pub d_init: DInit,
    pub pruning: bool,
    pub flush_on_stall: bool,
    pub heuristic: HeuristicSpec,
    pub heuristic_label: String,
    pub latency: Latency,
    pub seed: u64,
    pub time_limit: Option<Duration>,
    pub out: Option<PathBuf>,
    pub iter_out: Option<PathBuf>,
}

impl TryFrom<RunOptions> for RunSpec {
    type Error = BenchError;

    fn try_from(o: RunOptions) -> Result<Self, BenchError> {
        let domain: DomainChoice = o.domain.as_deref().unwrap_or("stp3").parse()?;
        let default_instances = match domain {
            DomainChoice::Stp(3) => "stp3",
            DomainChoice::Stp(4) => "korf10",
            DomainChoice::Stp(_) => "uniform:10",
            DomainChoice::Cube => "rc",
        };
        let instances = o.instances.as_deref().unwrap_or(default_instances).parse()?;
        let algorithms = o
            .algo
            .unwrap_or_else(|| vec!["batch-idastar".into()])
            .iter()
            .map(|a| Algorithm::parse(a).ok_or_else(|| spec_err("algo", format!("unknown algorithm '{a}'"))))
            .collect::<Result<Vec<_>, _>>()?;
        let s = o.search;
        let grid = Grid {
            threads: s.threads.unwrap_or_else(|| vec![1]),
            work_num: s.work_num.unwrap_or_else(|| vec![1]),
            batch_size: s.batch_size.unwrap_or_else(|| vec![1]),
            timeout_us: s.timeout_us.unwrap_or_else(|| vec![TimeoutUs(Some(2000))]),
            evaluators: s.evaluators.unwrap_or_else(|| vec![1]),
        };
        let heuristic_label = o.heuristic.spec.unwrap_or_else(|| "auto".into());
        let latency = Latency {
            per_call: Duration::from_micros(o.heuristic.latency_per_call_us.unwrap_or(0)),
            per_item: Duration::from_nanos(o.heuristic.latency_per_item_ns.unwrap_or(0)),
        };
        let time_limit = match o.time_limit_s {
            Some(t) if !(t > 0.0 && t.is_finite()) => return Err(spec_err("time-limit-s", "must be a positive number")),
            t => t.map(Duration::from_secs_f64),
        };
        let spec = RunSpec {
            domain,
            instances,
            algorithms,
            grid,
            d_init: parse_d_init(s.d_init.as_deref().unwrap_or("auto"))?,
            pruning: s.pruning.unwrap_or(true),
            flush_on_stall: s.flush_on_stall.unwrap_or(true),
            heuristic: heuristic_label.parse()?,
            heuristic_label,
            latency,
            seed: o.seed.unwrap_or(1),
            time_limit,
            out: o.output.out,
            iter_out: o.output.iter_out,
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl RunSpec {
    /// Checks the grid and that every referenced file exists.
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.algorithms.is_empty() {
            return Err(spec_err("algo", "no algorithms given"));
        }
        let axes: [(&'static str, &[usize]); 4] = [
            ("threads", &self.grid.threads),
            ("work-num", &self.grid.work_num),
            ("batch-size", &self.grid.batch_size),
            ("evaluators", &self.grid.evaluators),
        ];
        for (field, values) in axes {
            if values.is_empty() {
                return Err(spec_err(field, "empty list"));
            }
            if values.contains(&0) {
                return Err(spec_err(field, "values must be at least 1"));
            }
        }
        if self.grid.timeout_us.is_empty() {
            return Err(spec_err("timeout-us", "empty list"));
        }
        if !self.flush_on_stall && self.grid.timeout_us.iter().any(|t| t.0.is_none()) {
            return Err(spec_err("timeout-us", "'none' needs stall flushing, or batches could wait forever"));
        }
        if self.algorithms.iter().any(|a| self.points(*a).is_empty()) {
            return Err(spec_err("evaluators", "every evaluator count exceeds every thread count"));
        }
        if let InstanceSource::File(p) = &self.instances {
            if !p.exists() {
                return Err(spec_err("instances", format!("file '{}' not found", p.display())));
            }
        }
        match &self.heuristic {
            HeuristicSpec::Pdb { paths, .. } => {
                if let Some(p) = paths.iter().find(|p| !p.exists()) {
                    return Err(BenchError::MissingPdb { path: p.display().to_string(), domain: self.domain.name() });
                }
            }
            HeuristicSpec::Linear { path, .. } if !path.exists() => {
                return Err(spec_err("heuristic", format!("linear model '{}' not found", path.display())));
            }
            _ => {}
        }
        Ok(())
    }

    fn base_config(&self) -> SearchConfig {
        SearchConfig {
            d_init: self.d_init,
            pruning: self.pruning,
            flush_on_stall: self.flush_on_stall,
            seed: self.seed,
            strict: false,
            time_limit: self.time_limit,
            ..SearchConfig::default()
        }
    }

    /// The grid points `algo` is run at. Axes an algorithm ignores are
    /// collapsed: sequential searches and the oracle run once, AIDA*
    /// varies only threads and works, Batch A* only the batch policy.
    pub fn points(&self, algo: Algorithm) -> Vec<SearchConfig> {
        let base = self.base_config();
        let g = &self.grid;
        let mut out = Vec::new();
        match algo {
            Algorithm::Idastar | Algorithm::Bfs => out.push(base),
            Algorithm::Aidastar => {
                for &threads in &g.threads {
                    for &work_num in &g.work_num {
                        out.push(SearchConfig { threads, work_num, ..base.clone() });
                    }
                }
            }
            Algorithm::BatchAstar => {
                for &batch_size in &g.batch_size {
                    for t in &g.timeout_us {
                        out.push(SearchConfig { batch_size, timeout: t.duration(), ..base.clone() });
                    }
                }
            }
            Algorithm::BatchIdastar => {
                for &threads in &g.threads {
                    for &work_num in &g.work_num {
                        for &batch_size in &g.batch_size {
                            for t in &g.timeout_us {
                                for &evaluators in g.evaluators.iter().filter(|&&e| e <= threads) {
                                    out.push(SearchConfig {
                                        threads,
                                        work_num,
                                        batch_size,
                                        timeout: t.duration(),
                                        evaluators,
                                        ..base.clone()
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn load_instances(&self) -> Result<Vec<AnyInstance>, BenchError> {
        let list = match &self.instances {
            InstanceSource::File(p) => read_instances(p)?,
            InstanceSource::Suite(name) => suites::builtin(name)?,
            InstanceSource::Uniform(count) => match self.domain {
                DomainChoice::Stp(n) => suites::uniform_stp(n, *count, self.seed).into_iter().map(AnyInstance::Stp).collect(),
                DomainChoice::Cube => return Err(spec_err("instances", "uniform sampling is only offered for tile puzzles")),
            },
            InstanceSource::Walks { count, min, max } => match self.domain {
                DomainChoice::Stp(n) => {
                    let d = SlidingTile::new(n).map_err(|e| spec_err("domain", e.to_string()))?;
                    suites::walks(&d, *count, *min, *max, self.seed).into_iter().map(AnyInstance::Stp).collect()
                }
                DomainChoice::Cube => {
                    suites::cube_walks(*count, *min, *max, self.seed).into_iter().map(AnyInstance::Cube).collect()
                }
            },
        };
        if list.is_empty() {
            return Err(spec_err("instances", "no instances"));
        }
        Ok(list)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Timeout,
    Error,
}

/// One row of the results CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRow {
    pub algorithm: String,
    pub instance: String,
    pub domain: String,
    pub heuristic: String,
    pub threads: usize,
    pub work_num: usize,
    pub batch_size: usize,
    pub timeout_us: String,
    pub evaluators: usize,
    pub d_init: String,
    pub status: RunStatus,
    pub cost: Option<Cost>,
    pub expanded: u64,
    pub generated: u64,
    pub batches: u64,
    pub evaluated: u64,
    pub mean_batch: f64,
    pub max_batch: usize,
    pub direct_calls: u64,
    pub iterations: usize,
    pub peak_live_frames: usize,
    pub violations: u64,
    /// Batch-size histogram as `bucket:count` pairs.
    pub occupancy: String,
    pub error: String,
    pub wall_s: f64,
}

impl RunRow {
    /// Every column except wall time.
    pub fn without_timing(&self) -> RunRow {
        RunRow { wall_s: 0.0, ..self.clone() }
    }
}

/// One row of the per-iteration CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterRow {
    pub algorithm: String,
    pub instance: String,
    pub threads: usize,
    pub work_num: usize,
    pub batch_size: usize,
    pub timeout_us: String,
    pub evaluators: usize,
    pub iteration: usize,
    pub threshold: Cost,
    pub expanded: u64,
    pub generated: u64,
    pub batches: u64,
    pub evaluated: u64,
    pub mean_batch: f64,
}

#[derive(Clone, Debug, Default)]
pub struct RunSummary {
    pub rows: Vec<RunRow>,
    pub iterations: Vec<IterRow>,
}

impl RunSummary {
    pub fn errors(&self) -> usize {
        self.rows.iter().filter(|r| r.status == RunStatus::Error).count()
    }

    pub fn timeouts(&self) -> usize {
        self.rows.iter().filter(|r| r.status == RunStatus::Timeout).count()
    }
}

/// Runs the whole grid one instance at a time, logging a result line per
/// run to `log`, then writes the CSV files named in the spec.
pub fn run(spec: &RunSpec, log: &mut dyn Write) -> Result<RunSummary, BenchError> {
    spec.validate()?;
    let instances = spec.load_instances()?;
    let summary = match spec.domain {
        DomainChoice::Stp(n) => {
            let domain = SlidingTile::new(n).map_err(|e| spec_err("domain", e.to_string()))?;
            let typed = typed(&instances, |i| match i {
                AnyInstance::Stp(i) if i.start.side() == n => Some(i.clone()),
                _ => None,
            })?;
            run_domain(&domain, &typed, spec, log)?
        }
        DomainChoice::Cube => {
            let typed = typed(&instances, |i| match i {
                AnyInstance::Cube(i) => Some(i.clone()),
                _ => None,
            })?;
            run_domain(&RubiksCube, &typed, spec, log)?
        }
    };
    if let Some(path) = &spec.out {
        write_atomic(path, &to_csv(&summary.rows)?)?;
    }
    if let Some(path) = &spec.iter_out {
        write_atomic(path, &to_csv(&summary.iterations)?)?;
    }
    Ok(summary)
}

fn typed<S>(list: &[AnyInstance], pick: impl Fn(&AnyInstance) -> Option<Instance<S>>) -> Result<Vec<Instance<S>>, BenchError> {
    list.iter()
        .map(|i| pick(i).ok_or_else(|| spec_err("instances", format!("'{}' belongs to another domain", i.label()))))
        .collect()
}

fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(FormatError::from)?;
    }
    w.into_inner().map_err(|e| spec_err("out", e.to_string()))
}

fn run_domain<D>(domain: &D, instances: &[Instance<D::State>], spec: &RunSpec, log: &mut dyn Write) -> Result<RunSummary, BenchError>
where
    D: PatternSpace + Clone + Debug + 'static,
{
    let heuristic = Heuristic::load(&spec.heuristic, domain, &spec.domain.name())?;
    let mut summary = RunSummary::default();
    for inst in instances {
        for &algo in &spec.algorithms {
            for cfg in spec.points(algo) {
                let started = Instant::now();
                let outcome = run_one(domain, inst, algo, &cfg, &heuristic, spec.latency);
                let wall = started.elapsed();
                let timeout = TimeoutUs(cfg.timeout.map(|t| t.as_micros() as u64)).to_string();
                let mut row = RunRow {
                    algorithm: algo.name().into(),
                    instance: inst.label.clone(),
                    domain: spec.domain.name(),
                    heuristic: spec.heuristic_label.clone(),
                    threads: cfg.threads,
                    work_num: cfg.work_num,
                    batch_size: cfg.batch_size,
                    timeout_us: timeout.clone(),
                    evaluators: cfg.evaluators,
                    d_init: match cfg.d_init {
                        DInit::Auto => "auto".into(),
                        DInit::Fixed(d) => d.to_string(),
                    },
                    status: RunStatus::Ok,
                    cost: None,
                    expanded: 0,
                    generated: 0,
                    batches: 0,
                    evaluated: 0,
                    mean_batch: 0.0,
                    max_batch: 0,
                    direct_calls: 0,
                    iterations: 0,
                    peak_live_frames: 0,
                    violations: 0,
                    occupancy: String::new(),
                    error: String::new(),
                    wall_s: wall.as_secs_f64(),
                };
                match &outcome {
                    Ok(r) => {
                        let _ = writeln!(log, "{}", ResultLine { algorithm: algo.name(), instance: &inst.label, result: r });
                        let s = &r.stats;
                        row.cost = Some(r.cost);
                        row.expanded = s.expanded;
                        row.generated = s.generated;
                        row.batches = s.batches;
                        row.evaluated = s.evaluated;
                        row.mean_batch = s.mean_batch();
                        row.max_batch = s.max_batch;
                        row.direct_calls = s.direct_calls;
                        row.iterations = r.threshold_history.len();
                        row.peak_live_frames = s.peak_live_frames;
                        row.violations = s.completeness_violations + s.alignment_violations;
                        row.occupancy =
                            s.occupancy.buckets().map(|(b, c)| format!("{b}:{c}")).collect::<Vec<_>>().join(";");
                        if algo.is_batched() {
                            for (i, it) in s.iterations.iter().enumerate() {
                                summary.iterations.push(IterRow {
                                    algorithm: algo.name().into(),
                                    instance: inst.label.clone(),
                                    threads: cfg.threads,
                                    work_num: cfg.work_num,
                                    batch_size: cfg.batch_size,
                                    timeout_us: timeout.clone(),
                                    evaluators: cfg.evaluators,
                                    iteration: i,
                                    threshold: it.threshold,
                                    expanded: it.expanded,
                                    generated: it.generated,
                                    batches: it.batches,
                                    evaluated: it.evaluated,
                                    mean_batch: it.mean_batch(),
                                });
                            }
                        }
                    }
                    Err(SearchError::Interrupted) => {
                        row.status = RunStatus::Timeout;
                        let _ = writeln!(log, "algo={} instance={} timeout", algo.name(), inst.label);
                    }
                    Err(e) => {
                        row.status = RunStatus::Error;
                        row.error = e.to_string();
                        let _ = writeln!(log, "algo={} instance={} error: {e}", algo.name(), inst.label);
                    }
                }
                summary.rows.push(row);
            }
        }
    }
    Ok(summary)
}

/// Runs one algorithm on one instance.
pub fn run_one<D>(
    domain: &D,
    inst: &Instance<D::State>,
    algo: Algorithm,
    cfg: &SearchConfig,
    heuristic: &Heuristic,
    latency: Latency,
) -> Result<SearchResult, SearchError>
where
    D: PatternSpace + Clone + Debug + 'static,
{
    match algo {
        Algorithm::Idastar => {
            idastar_limited(domain, inst, |s| heuristic.estimate(domain, s), cfg.ida_options(), cfg.time_limit)
        }
        Algorithm::Aidastar => aidastar_with(domain, inst, heuristic.backend(domain, Latency::ZERO)?, cfg),
        Algorithm::BatchIdastar => batch_idastar(domain, inst, &heuristic.group(domain, latency, cfg)?, cfg),
        Algorithm::BatchAstar => batch_astar(domain, inst, &heuristic.group(domain, latency, cfg)?, cfg),
        Algorithm::Bfs => {
            let started = Instant::now();
            let cost = bfs_oracle(domain, &inst.start, &inst.goal, BFS_CAP)?;
            let mut r = SearchResult { cost, ..Default::default() };
            r.stats.wall_time = started.elapsed();
            Ok(r)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heuristic_grammar() {
        assert_eq!("auto".parse::<HeuristicSpec>().unwrap(), HeuristicSpec::Auto);
        assert_eq!(
            "pdb:a.bpdb+b.bpdb".parse::<HeuristicSpec>().unwrap(),
            HeuristicSpec::Pdb { paths: vec!["a.bpdb".into(), "b.bpdb".into()], compression: None }
        );
        assert_eq!(
            "pdb:a.bpdb@mod4".parse::<HeuristicSpec>().unwrap(),
            HeuristicSpec::Pdb { paths: vec!["a.bpdb".into()], compression: Some((CompressionMode::Mod, 4)) }
        );
        assert_eq!(
            "linear:w.blin@0.9".parse::<HeuristicSpec>().unwrap(),
            HeuristicSpec::Linear { path: "w.blin".into(), quantile: 0.9 }
        );
        for bad in ["pdb:", "pdb:a+b@div2", "pdb:a@half", "linear:w@1.5", "gpu"] {
            assert!(bad.parse::<HeuristicSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn instance_sources() {
        assert_eq!("korf10".parse::<InstanceSource>().unwrap(), InstanceSource::Suite("korf10".into()));
        assert_eq!("walk:50:5-7".parse::<InstanceSource>().unwrap(), InstanceSource::Walks { count: 50, min: 5, max: 7 });
        assert_eq!("walk:3:4".parse::<InstanceSource>().unwrap(), InstanceSource::Walks { count: 3, min: 4, max: 4 });
        assert_eq!("uniform:9".parse::<InstanceSource>().unwrap(), InstanceSource::Uniform(9));
        assert!("walk:3:7-5".parse::<InstanceSource>().is_err());
        assert_eq!("x.txt".parse::<InstanceSource>().unwrap(), InstanceSource::File("x.txt".into()));
    }

    #[test]
    fn flags_override_file() {
        let file = RunOptions::from_toml(
            "domain = \"rc\"\nseed = 7\n[search]\nbatch_size = [8, 64]\ntimeout_us = [0, \"none\"]\n",
            Path::new("t.toml"),
        )
        .unwrap();
        let flags = RunOptions { domain: Some("stp3".into()), ..Default::default() };
        let spec = RunSpec::try_from(flags.over(file)).unwrap();
        assert_eq!(spec.domain, DomainChoice::Stp(3));
        assert_eq!(spec.seed, 7);
        assert_eq!(spec.grid.batch_size, [8, 64]);
        assert_eq!(spec.grid.timeout_us, [TimeoutUs(Some(0)), TimeoutUs(None)]);
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        assert!(RunOptions::from_toml("bogus = 1\n", Path::new("t.toml")).is_err());
    }

    #[test]
    fn collapsed_axes() {
        let o = RunOptions {
            search: SearchOptions {
                threads: Some(vec![1, 2, 4]),
                work_num: Some(vec![1, 4]),
                batch_size: Some(vec![1, 32, 256]),
                timeout_us: Some(vec![TimeoutUs(Some(0)), TimeoutUs(Some(2000))]),
                evaluators: Some(vec![1, 2]),
                ..Default::default()
            },
            ..Default::default()
        };
        let spec = RunSpec::try_from(o).unwrap();
        assert_eq!(spec.points(Algorithm::Idastar).len(), 1);
        assert_eq!(spec.points(Algorithm::Aidastar).len(), 6);
        assert_eq!(spec.points(Algorithm::BatchAstar).len(), 6);
        // E = 2 is skipped where n = 1.
        assert_eq!(spec.points(Algorithm::BatchIdastar).len(), 3 * 2 * 3 * 2 * 2 - 2 * 3 * 2);
    }

    #[test]
    fn invalid_fields_are_named() {
        let o = RunOptions { search: SearchOptions { work_num: Some(vec![0]), ..Default::default() }, ..Default::default() };
        let e = RunSpec::try_from(o).unwrap_err().to_string();
        assert!(e.contains("work-num"), "{e}");
        let o = RunOptions { heuristic: HeuristicOptions { spec: Some("pdb:/nonexistent/x.bpdb".into()), ..Default::default() }, ..Default::default() };
        let e = RunSpec::try_from(o).unwrap_err().to_string();
        assert!(e.contains("build-pdb"), "{e}");
    }
}
