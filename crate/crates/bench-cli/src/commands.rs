//! Experiment runners. Each returns the final particle cloud together with
//! the report, whose header is the fully resolved configuration.
//!
//! Randomness is drawn from independent ChaCha streams of the run seed, so
//! changing, say, the split fraction does not change the synthetic data.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use rsvgd_core::target::{
    blr_predict, BlrModel, Gaussian, IdentityMetric, ProductVmf, UniformSphere, VmfComponent, VmfMixture,
};
use rsvgd_core::{
    init_gaussian, init_uniform_sphere, rksd_sphere, rsvgd_euclidean_field, rsvgd_product_field, rsvgd_sphere_field,
    run, svgd_field, BandwidthMode, Estimator, KernelSchedule, KernelSpec, LogDensityGradient, ManifoldSpec,
    OptimizerKind, OptimizerState, ParticleCloud, RunOptions, RunReport,
};

use crate::config::{Command, ConfigError, DataSource, KernelChoice, Method, RunConfig};
use crate::dataset::{load_sparse_dataset, split_standardize, synthetic_separable, DatasetError};

const STREAM_DATA: u64 = 1;
const STREAM_SPLIT: u64 = 2;
const STREAM_INIT: u64 = 3;

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("dataset: {0}")]
    Dataset(#[from] DatasetError),
    #[error("{context}: {source}")]
    Engine {
        context: &'static str,
        #[source]
        source: rsvgd_core::Error,
    },
}

trait Context<T> {
    fn context(self, context: &'static str) -> Result<T, CommandError>;
}

impl<T> Context<T> for rsvgd_core::Result<T> {
    fn context(self, context: &'static str) -> Result<T, CommandError> {
        self.map_err(|source| CommandError::Engine { context, source })
    }
}

/// Final particles and the recorded metrics of one run.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub cloud: ParticleCloud,
    pub report: RunReport,
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome, CommandError> {
    cfg.validate()?;
    let mut outcome = match cfg.command {
        Command::BlrBench => blr_bench(cfg),
        Command::GaussianSanity => gaussian_sanity(cfg),
        Command::SphereDemo => sphere_demo(cfg),
        Command::ProductDemo => product_demo(cfg),
    }?;
    outcome.report.header = cfg.header();
    Ok(outcome)
}

fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn options(cfg: &RunConfig) -> RunOptions {
    RunOptions {
        iterations: cfg.iters,
        cadence: cfg.cadence,
        timing: cfg.timing,
    }
}

fn optimizer(cfg: &RunConfig) -> Result<OptimizerState, CommandError> {
    let adagrad = cfg.uses_adagrad();
    if adagrad && !cfg.command.is_euclidean() {
        return Err(ConfigError::Invalid("adagrad applies to Euclidean commands only".into()).into());
    }
    let kind = if adagrad {
        OptimizerKind::adagrad_default(cfg.resolved_step())
    } else {
        OptimizerKind::vanilla(cfg.resolved_step())
    };
    Ok(OptimizerState::new(kind.context("optimizer")?))
}

fn schedule(cfg: &RunConfig) -> KernelSchedule {
    let mode = match cfg.kernel {
        KernelChoice::Median => BandwidthMode::Median,
        KernelChoice::Fixed(h) => BandwidthMode::Fixed(h),
        KernelChoice::Summed => BandwidthMode::Summed,
        KernelChoice::Vmf => unreachable!("validated: Euclidean commands use Gaussian kernels"),
    };
    KernelSchedule::new(mode, cfg.freeze_bandwidth)
}

/// Logistic regression on synthetic or file data: particles start from the
/// prior `N(0, αI)` and the test accuracy of the averaged predictive
/// probability is recorded.
fn blr_bench(cfg: &RunConfig) -> Result<Outcome, CommandError> {
    let data = match &cfg.data {
        DataSource::Synthetic { rows, cols } => synthetic_separable(&mut stream(cfg.seed, STREAM_DATA), *rows, *cols).0,
        DataSource::File(path) => load_sparse_dataset(path.as_ref())?,
    };
    let (train, test) = split_standardize(&data, cfg.split, &mut stream(cfg.seed, STREAM_SPLIT), cfg.standardize)?;
    log::info!(
        "blr-bench: {} train / {} test rows, {} features",
        train.rows(),
        test.rows(),
        train.cols()
    );
    let model = BlrModel::new(train.features, train.labels, cfg.alpha).context("model")?;
    let prior_mean = DVector::zeros(model.n_features());
    let initial = init_gaussian(
        &mut stream(cfg.seed, STREAM_INIT),
        cfg.particles,
        &prior_mean,
        cfg.alpha.sqrt(),
    )
    .context("initialization")?;

    let mut opt = optimizer(cfg)?;
    let mut kernels = schedule(cfg);
    let metrics = |c: &ParticleCloud| {
        Ok(vec![(
            "test_accuracy".into(),
            blr_predict(c.points(), &test.features, &test.labels)?,
        )])
    };
    let (cloud, report) = match cfg.method {
        Method::Svgd => run(
            initial,
            &mut opt,
            options(cfg),
            |_, c| svgd_field(c, &model, &kernels.kernel_for(c.points())?),
            metrics,
        ),
        Method::Rsvgd => run(
            initial,
            &mut opt,
            options(cfg),
            |_, c| rsvgd_euclidean_field(c, &model, &kernels.kernel_for(c.points())?),
            metrics,
        ),
    }
    .context("blr-bench")?;
    Ok(Outcome { cloud, report })
}

/// Standard normal target from an offset Gaussian start; records the sample
/// mean and (population) standard deviation of each coordinate.
fn gaussian_sanity(cfg: &RunConfig) -> Result<Outcome, CommandError> {
    let target = Gaussian::standard(cfg.dim).context("target")?;
    let start = DVector::from_element(cfg.dim, cfg.init_offset);
    let initial = init_gaussian(&mut stream(cfg.seed, STREAM_INIT), cfg.particles, &start, cfg.init_std)
        .context("initialization")?;

    let mut opt = optimizer(cfg)?;
    let mut kernels = schedule(cfg);
    let metrics = |c: &ParticleCloud| Ok(moment_columns(c));
    let (cloud, report) = match cfg.method {
        Method::Svgd => run(
            initial,
            &mut opt,
            options(cfg),
            |_, c| svgd_field(c, &target, &kernels.kernel_for(c.points())?),
            metrics,
        ),
        Method::Rsvgd => {
            let flat = IdentityMetric(target.clone());
            run(
                initial,
                &mut opt,
                options(cfg),
                |_, c| rsvgd_euclidean_field(c, &flat, &kernels.kernel_for(c.points())?),
                metrics,
            )
        }
    }
    .context("gaussian-sanity")?;
    Ok(Outcome { cloud, report })
}

fn moment_columns(cloud: &ParticleCloud) -> Vec<(String, f64)> {
    let mean = cloud.mean();
    let n = cloud.len() as f64;
    let mut var = DVector::zeros(mean.len());
    for p in cloud.points() {
        var += (p - &mean).map(|d| d * d);
    }
    var /= n;
    let mut cols: Vec<(String, f64)> = mean
        .iter()
        .enumerate()
        .map(|(i, m)| (format!("mean_{i}"), *m))
        .collect();
    cols.extend(var.iter().enumerate().map(|(i, v)| (format!("std_{i}"), v.sqrt())));
    cols
}

/// Parses `weight:kappa:m1,m2,…` entries joined by `;`. Means are
/// normalized and weights rescaled to sum to one; `none` means uniform.
pub fn parse_components(text: &str, dim: usize) -> Result<Option<VmfMixture>, ConfigError> {
    let text = text.trim();
    if text == "none" {
        return Ok(None);
    }
    let bad = |reason: String| ConfigError::Value {
        key: "components".into(),
        value: text.into(),
        reason,
    };
    let mut components = Vec::new();
    for entry in text.split(';').map(str::trim).filter(|e| !e.is_empty()) {
        let parts: Vec<&str> = entry.split(':').collect();
        let [weight, kappa, mean] = parts[..] else {
            return Err(bad(format!("entry {entry:?} is not weight:kappa:mean")));
        };
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("{s:?} is not a number")))
        };
        let weight = num(weight)?;
        let kappa = num(kappa)?;
        let mean = mean.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
        if mean.len() != dim {
            return Err(bad(format!("mean has {} entries, expected {dim}", mean.len())));
        }
        let mean = DVector::from_vec(mean);
        let norm = mean.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(bad("mean must be a nonzero finite vector".into()));
        }
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(bad(format!("weight {weight} must be positive")));
        }
        components.push(VmfComponent {
            mean: mean / norm,
            kappa,
            weight,
        });
    }
    if components.is_empty() {
        return Err(bad("no components".into()));
    }
    let total: f64 = components.iter().map(|c| c.weight).sum();
    for c in &mut components {
        c.weight /= total;
    }
    VmfMixture::new(components).map(Some).map_err(|e| bad(e.to_string()))
}

/// vMF mixture (or uniform) target on `S^{n-1}`, tracking the RKSD of the
/// particles under the run kernel.
fn sphere_demo(cfg: &RunConfig) -> Result<Outcome, CommandError> {
    let target: Box<dyn LogDensityGradient> = match parse_components(&cfg.components, cfg.dim)? {
        Some(mixture) => Box::new(mixture),
        None => Box::new(UniformSphere { ambient: cfg.dim }),
    };
    let manifold = ManifoldSpec::sphere(cfg.dim).context("manifold")?;
    let kernel = KernelSpec::vmf_product(cfg.kappa, 1, cfg.dim).context("kernel")?;
    let initial =
        init_uniform_sphere(&mut stream(cfg.seed, STREAM_INIT), cfg.particles, manifold).context("initialization")?;
    let mut opt = optimizer(cfg)?;
    let (cloud, report) = run(
        initial,
        &mut opt,
        options(cfg),
        |_, c| rsvgd_sphere_field(c, target.as_ref(), &kernel),
        |c| {
            let est = rksd_sphere(c.points(), target.as_ref(), &kernel, Estimator::VStatistic)?;
            Ok(vec![("rksd".into(), est.value)])
        },
    )
    .context("sphere-demo")?;
    Ok(Outcome { cloud, report })
}

/// The same mixture on every block of `(S^{n-1})^P`.
fn product_demo(cfg: &RunConfig) -> Result<Outcome, CommandError> {
    let target: Box<dyn LogDensityGradient> = match parse_components(&cfg.components, cfg.dim)? {
        Some(mixture) => Box::new(ProductVmf::new(vec![mixture; cfg.blocks]).context("target")?),
        None => Box::new(UniformSphere {
            ambient: cfg.blocks * cfg.dim,
        }),
    };
    let manifold = ManifoldSpec::product_sphere(cfg.blocks, cfg.dim).context("manifold")?;
    let kernel = KernelSpec::vmf_product(cfg.kappa, cfg.blocks, cfg.dim).context("kernel")?;
    let initial =
        init_uniform_sphere(&mut stream(cfg.seed, STREAM_INIT), cfg.particles, manifold).context("initialization")?;
    let mut opt = optimizer(cfg)?;
    let (cloud, report) = run(
        initial,
        &mut opt,
        options(cfg),
        |_, c| rsvgd_product_field(c, target.as_ref(), &kernel),
        |_| Ok(Vec::new()),
    )
    .context("product-demo")?;
    Ok(Outcome { cloud, report })
}
