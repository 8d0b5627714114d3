//! Experiment configuration: tag grammar for datasets, initializers and
//! accelerations, plus a flat `key = value` config-file format that CLI
//! flags can override.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

use crate::datasets::DatasetKind;

/// Splits `"name(a,b)"` into its arguments when `s` starts with `name(` and
/// ends with `)`; plain `"name"` yields an empty argument list.
fn paren_args<'a>(s: &'a str, name: &str) -> Option<Vec<&'a str>> {
    if s == name {
        return Some(Vec::new());
    }
    let rest = s.strip_prefix(name)?.strip_prefix('(')?.strip_suffix(')')?;
    Some(rest.split(',').map(str::trim).collect())
}

impl FromStr for DatasetKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        if s == "blobs1d" {
            return Ok(DatasetKind::Blobs1d);
        }
        if s == "two_moons" {
            return Ok(DatasetKind::TwoMoons);
        }
        if s == "s_curve_2d" {
            return Ok(DatasetKind::SCurve2d);
        }
        if s == "blobs2d_3" {
            return Ok(DatasetKind::Blobs2d3);
        }
        if let Some(args) = paren_args(s, "gauss_pair") {
            if args.len() == 1 {
                let d: usize = args[0]
                    .parse()
                    .map_err(|_| format!("bad dimension in `{s}`"))?;
                return Ok(DatasetKind::GaussPair(d));
            }
            return Err(format!("`gauss_pair` takes one dimension, got `{s}`"));
        }
        if let Some(args) = paren_args(s, "mixture_pair") {
            if args.len() == 2 {
                let d: usize = args[0]
                    .parse()
                    .map_err(|_| format!("bad dimension in `{s}`"))?;
                let k: usize = args[1]
                    .parse()
                    .map_err(|_| format!("bad component count in `{s}`"))?;
                return Ok(DatasetKind::MixturePair(d, k));
            }
            return Err(format!(
                "`mixture_pair` takes dimension and components, got `{s}`"
            ));
        }
        Err(format!("unknown dataset `{s}`"))
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetKind::Blobs1d => write!(f, "blobs1d"),
            DatasetKind::TwoMoons => write!(f, "two_moons"),
            DatasetKind::SCurve2d => write!(f, "s_curve_2d"),
            DatasetKind::Blobs2d3 => write!(f, "blobs2d_3"),
            DatasetKind::GaussPair(d) => write!(f, "gauss_pair({d})"),
            DatasetKind::MixturePair(d, k) => write!(f, "mixture_pair({d},{k})"),
        }
    }
}

/// How the dual potentials are initialized before the solver runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    /// Both potentials start at zero.
    Zero,
    /// Sorted 1D alternating-scan duals; for data in d > 1 the supports are
    /// first projected onto their leading principal axis.
    DualSort,
    /// Closed-form Gaussian-approximation potential evaluated on the source.
    Gaus,
    /// Mixture-model potential with the given component count.
    Gmm(usize),
    /// Extrapolated potential from a subsampled problem; `None` picks the
    /// default subsample size (a tenth of the points, at least 16).
    Subsample(Option<usize>),
}

impl FromStr for InitKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        match s {
            "zero" => return Ok(InitKind::Zero),
            "dualsort" => return Ok(InitKind::DualSort),
            "gaus" => return Ok(InitKind::Gaus),
            "gmm" => return Ok(InitKind::Gmm(10)),
            "subsample" => return Ok(InitKind::Subsample(None)),
            _ => {}
        }
        if let Some(args) = paren_args(s, "gmm") {
            if args.len() == 1 {
                let k: usize = args[0]
                    .parse()
                    .map_err(|_| format!("bad component count in `{s}`"))?;
                return Ok(InitKind::Gmm(k));
            }
        }
        if let Some(args) = paren_args(s, "subsample") {
            if args.len() == 1 {
                let size: usize = args[0]
                    .parse()
                    .map_err(|_| format!("bad subsample size in `{s}`"))?;
                return Ok(InitKind::Subsample(Some(size)));
            }
        }
        Err(format!("unknown initializer `{s}`"))
    }
}

impl fmt::Display for InitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitKind::Zero => write!(f, "zero"),
            InitKind::DualSort => write!(f, "dualsort"),
            InitKind::Gaus => write!(f, "gaus"),
            InitKind::Gmm(k) => write!(f, "gmm({k})"),
            InitKind::Subsample(None) => write!(f, "subsample"),
            InitKind::Subsample(Some(size)) => write!(f, "subsample({size})"),
        }
    }
}

/// Which convergence acceleration the solver applies on top of the
/// initialization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccelKind {
    None,
    Momentum,
    Adaptive,
    Anderson,
    EpsDecay,
}

impl FromStr for AccelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim() {
            "none" => Ok(AccelKind::None),
            "momentum" => Ok(AccelKind::Momentum),
            "adaptive" => Ok(AccelKind::Adaptive),
            "anderson" => Ok(AccelKind::Anderson),
            "eps_decay" => Ok(AccelKind::EpsDecay),
            other => Err(format!("unknown acceleration `{other}`")),
        }
    }
}

impl fmt::Display for AccelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AccelKind::None => write!(f, "none"),
            AccelKind::Momentum => write!(f, "momentum"),
            AccelKind::Adaptive => write!(f, "adaptive"),
            AccelKind::Anderson => write!(f, "anderson"),
            AccelKind::EpsDecay => write!(f, "eps_decay"),
        }
    }
}

/// A fully resolved benchmark plan: the cartesian product of sizes,
/// regularizations, initializers, accelerations and seeds on one dataset.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub dataset: DatasetKind,
    pub sizes: Vec<usize>,
    pub epsilons: Vec<f64>,
    pub tau: f64,
    pub inits: Vec<InitKind>,
    pub accels: Vec<AccelKind>,
    /// Number of seeds; runs use seeds `0..seeds`.
    pub seeds: u64,
    /// Where the per-run CSV goes; the summary lands next to it with a
    /// `_summary.csv` suffix. `None` skips the files.
    pub out: Option<PathBuf>,
}

/// Config-file / CLI fields before defaults are applied; `None` means
/// "not specified here".
#[derive(Debug, Clone, Default)]
pub struct PartialConfig {
    pub dataset: Option<DatasetKind>,
    pub sizes: Option<Vec<usize>>,
    pub epsilons: Option<Vec<f64>>,
    pub tau: Option<f64>,
    pub inits: Option<Vec<InitKind>>,
    pub accels: Option<Vec<AccelKind>>,
    pub seeds: Option<u64>,
    pub out: Option<PathBuf>,
}

impl PartialConfig {
    /// Overlays `self` on top of `base`: fields set here win.
    pub fn over(self, base: PartialConfig) -> PartialConfig {
        PartialConfig {
            dataset: self.dataset.or(base.dataset),
            sizes: self.sizes.or(base.sizes),
            epsilons: self.epsilons.or(base.epsilons),
            tau: self.tau.or(base.tau),
            inits: self.inits.or(base.inits),
            accels: self.accels.or(base.accels),
            seeds: self.seeds.or(base.seeds),
            out: self.out.or(base.out),
        }
    }

    /// Fills defaults and validates; the dataset must have been given.
    pub fn finalize(self) -> Result<ExperimentConfig> {
        let dataset = self
            .dataset
            .ok_or_else(|| anyhow!("no dataset specified (use --dataset or a config file)"))?;
        let config = ExperimentConfig {
            dataset,
            sizes: self.sizes.unwrap_or_else(|| vec![256]),
            epsilons: self.epsilons.unwrap_or_else(|| vec![0.01]),
            tau: self.tau.unwrap_or(0.01),
            inits: self.inits.unwrap_or_else(|| vec![InitKind::Zero]),
            accels: self.accels.unwrap_or_else(|| vec![AccelKind::None]),
            seeds: self.seeds.unwrap_or(1),
            out: self.out,
        };
        if config.sizes.is_empty() || config.sizes.contains(&0) {
            bail!("sizes must be positive");
        }
        if config.epsilons.is_empty() || config.epsilons.iter().any(|e| !(*e > 0.0)) {
            bail!("epsilon values must be positive");
        }
        if !(config.tau > 0.0) {
            bail!("tau must be positive");
        }
        if config.inits.is_empty() || config.accels.is_empty() {
            bail!("need at least one initializer and one acceleration");
        }
        if config.seeds == 0 {
            bail!("seeds must be at least 1");
        }
        Ok(config)
    }
}

fn parse_list<T: FromStr>(value: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| anyhow!("bad {what} `{s}`: {e}")))
        .collect()
}

/// Parses "init,init,..." etc. — exposed so the CLI can reuse the exact
/// same list grammar as the config file.
pub fn parse_init_list(value: &str) -> Result<Vec<InitKind>> {
    split_top_level(value)
        .into_iter()
        .map(|s| {
            s.parse::<InitKind>()
                .map_err(|e| anyhow!("bad initializer `{s}`: {e}"))
        })
        .collect()
}

pub fn parse_accel_list(value: &str) -> Result<Vec<AccelKind>> {
    parse_list(value, "acceleration")
}

pub fn parse_size_list(value: &str) -> Result<Vec<usize>> {
    parse_list(value, "size")
}

pub fn parse_epsilon_list(value: &str) -> Result<Vec<f64>> {
    parse_list(value, "epsilon")
}

/// Splits on commas that are not inside parentheses, so
/// `"gmm(5),subsample(100)"` yields two items.
fn split_top_level(value: &str) -> Vec<String> {
    let mut items = Vec::new();
    let mut depth = 0usize;
    let mut current = String::new();
    for c in value.chars() {
        match c {
            '(' => {
                depth += 1;
                current.push(c);
            }
            ')' => {
                depth = depth.saturating_sub(1);
                current.push(c);
            }
            ',' if depth == 0 => {
                items.push(current.trim().to_string());
                current.clear();
            }
            _ => current.push(c),
        }
    }
    if !current.trim().is_empty() {
        items.push(current.trim().to_string());
    }
    items.retain(|s| !s.is_empty());
    items
}

/// Reads a flat `key = value` config file. Recognized keys: `dataset`,
/// `sizes`, `epsilon`, `tau`, `init`, `accel`, `seeds`, `out`. Lines that
/// are blank or start with `#` are skipped.
pub fn parse_config_file(path: &Path) -> Result<PartialConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config file {}", path.display()))?;
    parse_config_text(&text)
}

pub fn parse_config_text(text: &str) -> Result<PartialConfig> {
    let mut partial = PartialConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "dataset" => {
                partial.dataset =
                    Some(value.parse().map_err(|e| anyhow!("line {}: {e}", lineno + 1))?)
            }
            "sizes" | "n" => partial.sizes = Some(parse_list(value, "size")?),
            "epsilon" => partial.epsilons = Some(parse_list(value, "epsilon")?),
            "tau" => {
                partial.tau =
                    Some(value.parse().with_context(|| format!("line {}: bad tau", lineno + 1))?)
            }
            "init" => partial.inits = Some(parse_init_list(value)?),
            "accel" => partial.accels = Some(parse_accel_list(value)?),
            "seeds" => {
                partial.seeds = Some(
                    value
                        .parse()
                        .with_context(|| format!("line {}: bad seed count", lineno + 1))?,
                )
            }
            "out" => partial.out = Some(PathBuf::from(value)),
            other => bail!("line {}: unknown key `{other}`", lineno + 1),
        }
    }
    Ok(partial)
}
