//! Particle update rules and the iteration loop.
//!
//! Every field computation reads an immutable snapshot of the cloud and
//! writes a fresh buffer. The per-particle sum over the cloud runs in index
//! order on whichever thread owns the particle, so results are bitwise
//! identical for any thread count.

mod embedded;
mod euclidean;
mod init;
mod optimizer;
mod run;
mod schedule;
mod sphere;

pub use embedded::{rsvgd_embedded_field, EmbeddingProviders, HemisphereEmbedding, TrivialEmbedding};
pub use euclidean::{rsvgd_euclidean_field, svgd_field};
pub use init::{init_gaussian, init_uniform_sphere};
pub use optimizer::{apply_update, OptimizerKind, OptimizerState};
pub use run::{run, MetricRow, ReportRow, RunOptions, RunReport};
pub use schedule::{BandwidthMode, KernelSchedule};
pub use sphere::{rsvgd_product_field, rsvgd_sphere_field};

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::manifold::ManifoldSpec;

/// `N` particles on a declared manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    points: Vec<DVector<f64>>,
    manifold: ManifoldSpec,
}

impl ParticleCloud {
    pub fn new(points: Vec<DVector<f64>>, manifold: ManifoldSpec) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InsufficientSamples { needed: 1, got: 0 });
        }
        for p in &points {
            manifold.validate_point(p)?;
        }
        Ok(Self { points, manifold })
    }

    pub fn points(&self) -> &[DVector<f64>] {
        &self.points
    }

    pub fn manifold(&self) -> ManifoldSpec {
        self.manifold
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<DVector<f64>> {
        self.points
    }

    /// Same cloud with particles reordered so that entry `i` is old entry `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            points: order.iter().map(|&i| self.points[i].clone()).collect(),
            manifold: self.manifold,
        }
    }

    pub fn mean(&self) -> DVector<f64> {
        let mut acc = DVector::zeros(self.manifold.ambient_dim());
        for p in &self.points {
            acc += p;
        }
        acc / self.points.len() as f64
    }
}

/// One update vector per particle.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateField {
    pub vectors: Vec<DVector<f64>>,
}

impl UpdateField {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Largest blockwise `|yᵀv| / ‖v‖` over all particles; zero for Euclidean clouds.
    pub fn max_normal_ratio(&self, cloud: &ParticleCloud) -> f64 {
        let Some((blocks, n)) = cloud.manifold().block_layout() else {
            return 0.0;
        };
        let mut worst: f64 = 0.0;
        for (y, v) in cloud.points().iter().zip(&self.vectors) {
            for k in 0..blocks {
                let yk = y.rows(k * n, n);
                let vk = v.rows(k * n, n);
                let norm = vk.norm();
                if norm > 0.0 {
                    worst = worst.max(yk.dot(&vk).abs() / norm);
                }
            }
        }
        worst
    }
}

fn require_euclidean(cloud: &ParticleCloud) -> Result<()> {
    if cloud.manifold().is_euclidean() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "this update rule needs a Euclidean cloud, got {}",
            cloud.manifold()
        )))
    }
}

/// Evaluates `f` at every particle in parallel, preserving order.
fn per_particle<T, F>(points: &[DVector<f64>], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &DVector<f64>) -> Result<T> + Sync,
{
    use rayon::prelude::*;
    points.par_iter().enumerate().map(|(i, p)| f(i, p)).collect()
}
