//! Stein variational gradient descent (SVGD) and its Riemannian variants.
//!
//! A cloud of particles is moved along the kernelized direction that most
//! decreases the KL divergence to a target known only through the gradient of
//! its log-density. Supported geometries:
//!
//! - flat `R^d` ([`svgd_field`]),
//! - `R^m` with a Riemannian metric, in coordinates ([`rsvgd_euclidean_field`]),
//! - a manifold embedded in `R^n`, described by chart providers ([`rsvgd_embedded_field`]),
//! - the hypersphere and products of hyperspheres with a vMF kernel
//!   ([`rsvgd_sphere_field`], [`rsvgd_product_field`]).
//!
//! The [`discrepancy`] module estimates kernelized Stein discrepancies for
//! diagnosing sample quality.

pub mod discrepancy;
pub mod engine;
pub mod error;
pub mod kernel;
pub mod manifold;
pub mod target;

#[doc(hidden)]
pub mod testkit;

pub use discrepancy::{ksd_euclidean, rksd_sphere, DiscrepancyEstimate, Estimator};
pub use engine::{
    apply_update, init_gaussian, init_uniform_sphere, rsvgd_embedded_field, rsvgd_euclidean_field, rsvgd_product_field,
    rsvgd_sphere_field, run, svgd_field, BandwidthMode, EmbeddingProviders, HemisphereEmbedding, KernelSchedule,
    OptimizerKind, OptimizerState, ParticleCloud, RunOptions, RunReport, TrivialEmbedding, UpdateField,
};
pub use error::{Error, Result};
pub use kernel::{median_bandwidth, KernelSpec, SmoothKernel};
pub use manifold::ManifoldSpec;
pub use target::{LogDensityGradient, MetricQuantities, MetricTarget};
