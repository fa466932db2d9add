//! Run configuration: defaults per command, a flat `key=value` file format,
//! and the fully resolved header written into every report.
//!
//! Files may be plain `key=value` lines or a previous report: lines starting
//! with `#` carry settings when they read `# key=value` with a known key and
//! are comments otherwise, and lines without `=` (such as CSV rows) are
//! skipped. Later settings override earlier ones, and command-line flags
//! override the file.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("unknown key {0:?}")]
    UnknownKey(String),
    #[error("invalid value {value:?} for {key}: {reason}")]
    Value { key: String, value: String, reason: String },
    #[error("config is for command {found}, but {expected} was requested")]
    CommandMismatch { expected: Command, found: Command },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    BlrBench,
    SphereDemo,
    ProductDemo,
    GaussianSanity,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::BlrBench => "blr-bench",
            Self::SphereDemo => "sphere-demo",
            Self::ProductDemo => "product-demo",
            Self::GaussianSanity => "gaussian-sanity",
        }
    }

    pub fn is_euclidean(self) -> bool {
        matches!(self, Self::BlrBench | Self::GaussianSanity)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "blr-bench" => Ok(Self::BlrBench),
            "sphere-demo" => Ok(Self::SphereDemo),
            "product-demo" => Ok(Self::ProductDemo),
            "gaussian-sanity" => Ok(Self::GaussianSanity),
            _ => Err("expected blr-bench, sphere-demo, product-demo or gaussian-sanity".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Svgd,
    Rsvgd,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Svgd => "svgd",
            Self::Rsvgd => "rsvgd",
        })
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "svgd" => Ok(Self::Svgd),
            "rsvgd" => Ok(Self::Rsvgd),
            _ => Err("expected svgd or rsvgd".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerChoice {
    /// AdaGrad with momentum for SVGD, vanilla steps for RSVGD.
    Auto,
    Vanilla,
    Adagrad,
}

impl fmt::Display for OptimizerChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Auto => "auto",
            Self::Vanilla => "vanilla",
            Self::Adagrad => "adagrad",
        })
    }
}

impl FromStr for OptimizerChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "auto" => Ok(Self::Auto),
            "vanilla" => Ok(Self::Vanilla),
            "adagrad" => Ok(Self::Adagrad),
            _ => Err("expected auto, vanilla or adagrad".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelChoice {
    Median,
    Fixed(f64),
    Summed,
    /// von Mises–Fisher kernel of the sphere commands.
    Vmf,
}

impl fmt::Display for KernelChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Median => f.write_str("median"),
            Self::Fixed(h) => write!(f, "fixed:{h}"),
            Self::Summed => f.write_str("summed"),
            Self::Vmf => f.write_str("vmf"),
        }
    }
}

impl FromStr for KernelChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "median" => Ok(Self::Median),
            "summed" => Ok(Self::Summed),
            "vmf" => Ok(Self::Vmf),
            _ => {
                let h = s
                    .strip_prefix("fixed:")
                    .ok_or_else(|| "expected median, fixed:H, summed or vmf".to_string())?;
                let h: f64 = h.parse().map_err(|_| format!("bandwidth {h:?} is not a number"))?;
                if h > 0.0 && h.is_finite() {
                    Ok(Self::Fixed(h))
                } else {
                    Err("bandwidth must be positive".into())
                }
            }
        }
    }
}

/// Where the logistic-regression data come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataSource {
    /// Seeded separable data with `rows × cols` features.
    Synthetic {
        rows: usize,
        cols: usize,
    },
    File(String),
}

impl fmt::Display for DataSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Synthetic { rows, cols } => write!(f, "synthetic:{rows}x{cols}"),
            Self::File(path) => f.write_str(path),
        }
    }
}

impl FromStr for DataSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.strip_prefix("synthetic:") {
            Some(shape) => {
                let (r, c) = shape.split_once('x').ok_or("expected synthetic:ROWSxCOLS")?;
                let rows = r.parse().map_err(|_| format!("bad row count {r:?}"))?;
                let cols = c.parse().map_err(|_| format!("bad column count {c:?}"))?;
                Ok(Self::Synthetic { rows, cols })
            }
            None if s.is_empty() => Err("empty data path".into()),
            None => Ok(Self::File(s.to_string())),
        }
    }
}

/// Every setting of a run. `Display` of each field round-trips through `FromStr`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub method: Method,
    pub optimizer: OptimizerChoice,
    pub particles: usize,
    pub iters: usize,
    pub seed: u64,
    /// Step size; `None` picks a default for the command and optimizer.
    pub step: Option<f64>,
    pub kernel: KernelChoice,
    pub freeze_bandwidth: bool,
    /// vMF kernel concentration; defaults to the ambient block dimension.
    pub kappa: f64,
    pub data: DataSource,
    pub split: f64,
    pub standardize: bool,
    pub cadence: usize,
    /// Prior variance of the logistic-regression weights.
    pub alpha: f64,
    /// Ambient dimension `n` of each sphere block, or of the Gaussian target.
    pub dim: usize,
    pub blocks: usize,
    /// vMF mixture per block: `weight:kappa:m1,m2,…` joined by `;`, or `none` for uniform.
    pub components: String,
    pub init_offset: f64,
    pub init_std: f64,
    pub timing: bool,
}

impl RunConfig {
    pub fn defaults(command: Command) -> Self {
        let dim = match command {
            Command::BlrBench => 0,
            Command::GaussianSanity => 2,
            Command::SphereDemo | Command::ProductDemo => 3,
        };
        Self {
            command,
            method: Method::Rsvgd,
            optimizer: OptimizerChoice::Auto,
            particles: match command {
                Command::BlrBench => 100,
                Command::GaussianSanity => 50,
                Command::SphereDemo | Command::ProductDemo => 30,
            },
            iters: 500,
            seed: 0,
            step: None,
            kernel: if command.is_euclidean() {
                KernelChoice::Median
            } else {
                KernelChoice::Vmf
            },
            freeze_bandwidth: false,
            kappa: dim as f64,
            data: DataSource::Synthetic { rows: 200, cols: 5 },
            split: 0.8,
            standardize: false,
            cadence: 10,
            alpha: 0.01,
            dim,
            blocks: if command == Command::ProductDemo { 3 } else { 1 },
            components: default_components(dim),
            init_offset: 1.0,
            init_std: 0.5,
            timing: false,
        }
    }

    pub fn uses_adagrad(&self) -> bool {
        match self.optimizer {
            OptimizerChoice::Auto => self.method == Method::Svgd,
            OptimizerChoice::Adagrad => true,
            OptimizerChoice::Vanilla => false,
        }
    }

    /// The explicit step, or 0.05 for AdaGrad, 0.5 for vanilla Euclidean
    /// steps and 0.002 on spheres, where the unnormalized vMF kernel makes
    /// the field large.
    pub fn resolved_step(&self) -> f64 {
        self.step.unwrap_or(if !self.command.is_euclidean() {
            0.002
        } else if self.uses_adagrad() {
            0.05
        } else {
            0.5
        })
    }

    /// Keys meaningful for this command, in header order.
    fn keys(&self) -> &'static [&'static str] {
        match self.command {
            Command::BlrBench => &[
                "command",
                "method",
                "optimizer",
                "particles",
                "iters",
                "seed",
                "step",
                "kernel",
                "freeze_bandwidth",
                "data",
                "split",
                "standardize",
                "cadence",
                "alpha",
                "timing",
            ],
            Command::GaussianSanity => &[
                "command",
                "method",
                "optimizer",
                "particles",
                "iters",
                "seed",
                "step",
                "kernel",
                "freeze_bandwidth",
                "cadence",
                "dim",
                "init_offset",
                "init_std",
                "timing",
            ],
            Command::SphereDemo => &[
                "command",
                "method",
                "particles",
                "iters",
                "seed",
                "step",
                "kernel",
                "kappa",
                "cadence",
                "dim",
                "components",
                "timing",
            ],
            Command::ProductDemo => &[
                "command",
                "method",
                "particles",
                "iters",
                "seed",
                "step",
                "kernel",
                "kappa",
                "cadence",
                "dim",
                "blocks",
                "components",
                "timing",
            ],
        }
    }

    fn value_of(&self, key: &str) -> String {
        match key {
            "command" => self.command.to_string(),
            "method" => self.method.to_string(),
            "optimizer" => self.optimizer.to_string(),
            "particles" => self.particles.to_string(),
            "iters" => self.iters.to_string(),
            "seed" => self.seed.to_string(),
            "step" => self.resolved_step().to_string(),
            "kernel" => self.kernel.to_string(),
            "freeze_bandwidth" => self.freeze_bandwidth.to_string(),
            "kappa" => self.kappa.to_string(),
            "data" => self.data.to_string(),
            "split" => self.split.to_string(),
            "standardize" => self.standardize.to_string(),
            "cadence" => self.cadence.to_string(),
            "alpha" => self.alpha.to_string(),
            "dim" => self.dim.to_string(),
            "blocks" => self.blocks.to_string(),
            "components" => self.components.clone(),
            "init_offset" => self.init_offset.to_string(),
            "init_std" => self.init_std.to_string(),
            "timing" => self.timing.to_string(),
            _ => unreachable!("unlisted key {key}"),
        }
    }

    /// Fully resolved settings followed by the package version.
    pub fn header(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = self.keys().iter().map(|k| (k.to_string(), self.value_of(k))).collect();
        out.push(("version".into(), env!("CARGO_PKG_VERSION").into()));
        out
    }

    /// Applies one setting. `dim` also resets `kappa` and `components` to
    /// their dimension-dependent defaults; set those afterwards to override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
        where
            T::Err: fmt::Display,
        {
            value.parse::<T>().map_err(|e| ConfigError::Value {
                key: key.to_string(),
                value: value.to_string(),
                reason: e.to_string(),
            })
        }
        match key {
            "command" => {
                let found: Command = parse(key, value)?;
                if found != self.command {
                    return Err(ConfigError::CommandMismatch {
                        expected: self.command,
                        found,
                    });
                }
            }
            "method" => self.method = parse(key, value)?,
            "optimizer" => self.optimizer = parse(key, value)?,
            "particles" => self.particles = parse(key, value)?,
            "iters" => self.iters = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "step" => {
                self.step = if value == "auto" {
                    None
                } else {
                    Some(parse(key, value)?)
                }
            }
            "kernel" => self.kernel = parse(key, value)?,
            "freeze_bandwidth" => self.freeze_bandwidth = parse(key, value)?,
            "kappa" => self.kappa = parse(key, value)?,
            "data" => self.data = parse(key, value)?,
            "split" => self.split = parse(key, value)?,
            "standardize" => self.standardize = parse(key, value)?,
            "cadence" => self.cadence = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "dim" => {
                let dim: usize = parse(key, value)?;
                if dim != self.dim {
                    self.dim = dim;
                    self.kappa = dim as f64;
                    self.components = default_components(dim);
                }
            }
            "blocks" => self.blocks = parse(key, value)?,
            "components" => self.components = value.to_string(),
            "init_offset" => self.init_offset = parse(key, value)?,
            "init_std" => self.init_std = parse(key, value)?,
            "timing" => self.timing = parse(key, value)?,
            // informational header entry
            "version" => {}
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Applies a config file or report body (see module docs).
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            let (commented, body) = match trimmed.strip_prefix('#') {
                Some(rest) => (true, rest.trim()),
                None => (false, trimmed),
            };
            let Some((key, value)) = body.split_once('=') else {
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            match self.set(key, value) {
                Ok(()) => {}
                Err(ConfigError::UnknownKey(_)) if commented => {}
                Err(e) => {
                    return Err(ConfigError::Line {
                        line,
                        reason: e.to_string(),
                    })
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |msg: String| Err(ConfigError::Invalid(msg));
        if self.particles == 0 {
            return fail("particles must be >= 1".into());
        }
        if self.cadence == 0 {
            return fail("cadence must be >= 1".into());
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return fail(format!("split must lie in (0, 1), got {}", self.split));
        }
        let step = self.resolved_step();
        if !(step > 0.0 && step.is_finite()) {
            return fail(format!("step must be positive, got {step}"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.init_std > 0.0 && self.init_std.is_finite()) {
            return fail(format!("init_std must be positive, got {}", self.init_std));
        }
        if self.command.is_euclidean() == (self.kernel == KernelChoice::Vmf) {
            return fail(format!("kernel {} does not apply to {}", self.kernel, self.command));
        }
        if !self.command.is_euclidean() {
            if self.method != Method::Rsvgd {
                return fail(format!("{} runs rsvgd only", self.command));
            }
            if self.dim < 2 {
                return fail("sphere dimension must be >= 2".into());
            }
            if !(self.kappa > 0.0 && self.kappa.is_finite()) {
                return fail(format!("kappa must be positive, got {}", self.kappa));
            }
        }
        if self.command == Command::GaussianSanity && self.dim == 0 {
            return fail("dim must be >= 1".into());
        }
        if self.blocks == 0 || (self.command != Command::ProductDemo && self.blocks != 1) {
            return fail(format!("blocks = {} is invalid for {}", self.blocks, self.command));
        }
        Ok(())
    }
}

/// A single vMF with `κ = 10` at the last basis vector.
fn default_components(dim: usize) -> String {
    if dim == 0 {
        return "none".into();
    }
    let mean: Vec<&str> = (0..dim).map(|i| if i + 1 == dim { "1" } else { "0" }).collect();
    format!("1:10:{}", mean.join(","))
}
