//! Measurements behind the correctness properties. Each returns the worst
//! error it saw so callers can assert or report against a tolerance.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rsvgd_core::discrepancy::{ksd_euclidean, rksd_sphere, stein_pair_euclidean, stein_pair_sphere, Estimator};
use rsvgd_core::engine::{
    apply_update, rsvgd_embedded_field, rsvgd_euclidean_field, rsvgd_product_field, rsvgd_sphere_field,
    HemisphereEmbedding, OptimizerKind, OptimizerState, ParticleCloud, TrivialEmbedding, UpdateField,
};
use rsvgd_core::kernel::{eval_jet, log_jet_vmf_block, median_bandwidth, summed_bandwidths, KernelSpec, SmoothKernel};
use rsvgd_core::manifold::{chart_forward, exp_map_product, exp_map_sphere, hemisphere_chart, ManifoldSpec};
use rsvgd_core::target::{
    Gaussian, IdentityMetric, Inversion, LogDensityGradient, MetricTarget, ProductVmf, UniformSphere, VmfMixture,
};
use rsvgd_core::testkit::{sample_vmf, uniform_sphere};

use super::*;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sphere_cloud(points: Vec<DVector<f64>>) -> ParticleCloud {
    let n = points[0].len();
    ParticleCloud::new(points, ManifoldSpec::sphere(n).unwrap()).unwrap()
}

fn worst_per_particle(a: &UpdateField, b: &UpdateField) -> f64 {
    a.vectors
        .iter()
        .zip(&b.vectors)
        .map(|(x, y)| rel_err(x, y, 1e-12))
        .fold(0.0, f64::max)
}

fn hemisphere_setup(n: usize, count: usize, seed: u64) -> (ParticleCloud, VmfMixture, KernelSpec) {
    let mut r = rng(seed);
    let points = (0..count).map(|_| random_hemisphere_point(&mut r, n, 0.9)).collect();
    let target = random_vmf_mixture(&mut r, n);
    (sphere_cloud(points), target, KernelSpec::vmf_default(n).unwrap())
}

/// Coordinate-space rule in the hemisphere chart, pushed forward by `M(x)`,
/// against the sphere rule: worst per-particle relative error.
pub fn chart_equivalence(n: usize, count: usize, seed: u64) -> f64 {
    let (cloud, target, kernel) = hemisphere_setup(n, count, seed);
    let KernelSpec::VmfProduct { kappa, .. } = kernel else {
        unreachable!()
    };
    let sphere = rsvgd_sphere_field(&cloud, &target, &kernel).unwrap();

    let coords: Vec<DVector<f64>> = cloud.points().iter().map(|y| chart_forward(y).unwrap()).collect();
    let chart_cloud = ParticleCloud::new(coords.clone(), ManifoldSpec::euclidean(n - 1).unwrap()).unwrap();
    let chart_target = ChartTarget {
        inner: &target,
        ambient: n,
    };
    let chart = rsvgd_euclidean_field(&chart_cloud, &chart_target, &ChartVmfKernel { kappa }).unwrap();
    let pushed = UpdateField {
        vectors: coords
            .iter()
            .zip(&chart.vectors)
            .map(|(x, vx)| hemisphere_chart(x).unwrap().jacobian * vx)
            .collect(),
    };
    worst_per_particle(&pushed, &sphere)
}

/// Embedded rule with hemisphere providers against the sphere rule.
pub fn embedded_vs_sphere(n: usize, count: usize, seed: u64) -> f64 {
    let (cloud, target, kernel) = hemisphere_setup(n, count, seed);
    let sphere = rsvgd_sphere_field(&cloud, &target, &kernel).unwrap();
    let embedded = rsvgd_embedded_field(&cloud, &target, &kernel, &HemisphereEmbedding { ambient: n }).unwrap();
    worst_per_particle(&embedded, &sphere)
}

/// Embedded rule with the trivial embedding against the coordinate rule with identity metric.
pub fn trivial_embedding_vs_coordinate(seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for d in [1usize, 2, 4] {
        let points: Vec<_> = (0..12).map(|_| gaussian_vec(&mut r, d) * 1.5).collect();
        let cloud = ParticleCloud::new(points, ManifoldSpec::euclidean(d).unwrap()).unwrap();
        let target = Gaussian::new(gaussian_vec(&mut r, d), 0.7).unwrap();
        for kernel in [
            KernelSpec::gaussian(0.8).unwrap(),
            KernelSpec::summed_gaussian(summed_bandwidths(0.8)).unwrap(),
        ] {
            let coord = rsvgd_euclidean_field(&cloud, &IdentityMetric(&target), &kernel).unwrap();
            let emb = rsvgd_embedded_field(&cloud, &target, &kernel, &TrivialEmbedding { dim: d }).unwrap();
            worst = worst.max(worst_per_particle(&emb, &coord));
        }
    }
    worst
}

/// Number of configurations on which the product rule with one block
/// differs from the sphere rule in any bit.
pub fn product_reduction_mismatches(configs: usize, seed: u64) -> usize {
    let mut r = rng(seed);
    let mut mismatches = 0;
    for _ in 0..configs {
        let n = r.random_range(2..=6);
        let count = r.random_range(1..=12);
        let points = (0..count).map(|_| random_unit(&mut r, n)).collect();
        let cloud = sphere_cloud(points);
        let target = random_vmf_mixture(&mut r, n);
        let kernel = KernelSpec::vmf_product(r.random_range(0.5..6.0), 1, n).unwrap();
        let a = rsvgd_sphere_field(&cloud, &target, &kernel).unwrap();
        let b = rsvgd_product_field(&cloud, &target, &kernel).unwrap();
        let same = a
            .vectors
            .iter()
            .zip(&b.vectors)
            .all(|(x, y)| x.iter().zip(y.iter()).all(|(p, q)| p.to_bits() == q.to_bits()));
        if !same {
            mismatches += 1;
        }
    }
    mismatches
}

const FD_STEP: f64 = 1e-5;
const FD_FLOOR: f64 = 1e-6;

fn kernel_points(r: &mut ChaCha8Rng, spec: &KernelSpec, d: usize) -> (DVector<f64>, DVector<f64>) {
    match *spec {
        KernelSpec::VmfProduct { blocks, block_dim, .. } => {
            let draw = |r: &mut ChaCha8Rng| {
                let mut y = DVector::zeros(blocks * block_dim);
                for k in 0..blocks {
                    y.rows_mut(k * block_dim, block_dim)
                        .copy_from(&random_unit(r, block_dim));
                }
                y
            };
            (draw(r), draw(r))
        }
        _ => (gaussian_vec(r, d), gaussian_vec(r, d)),
    }
}

/// Worst relative error of every closed-form jet entry and trait method of
/// `spec` against central differences, over `trials` random pairs.
pub fn kernel_jet_oracle(spec: &KernelSpec, d: usize, trials: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let (a, b) = kernel_points(&mut r, spec, d);
        let dim = a.len();
        let jet = eval_jet(spec, &a, &b).unwrap();
        let value = |x: &DVector<f64>, y: &DVector<f64>| eval_jet(spec, x, y).unwrap().value;
        let grad1 = |x: &DVector<f64>, y: &DVector<f64>| eval_jet(spec, x, y).unwrap().grad1;

        let fd_g1 = fd_grad(|x| value(x, &b), &a, FD_STEP);
        let fd_g2 = fd_grad(|y| value(&a, y), &b, FD_STEP);
        let fd_h1 = fd_jacobian(|x| grad1(x, &b), &a, FD_STEP);
        let fd_cross = fd_jacobian(|y| grad1(&a, y), &b, FD_STEP);
        worst = worst
            .max(rel_err(&jet.grad1, &fd_g1, FD_FLOOR))
            .max(rel_err(&jet.grad2, &fd_g2, FD_FLOOR))
            .max(rel_err_mat(&jet.hessian1, &fd_h1, FD_FLOOR))
            .max(rel_err_scalar(jet.laplacian1, fd_h1.trace(), FD_FLOOR))
            .max(rel_err_mat(&jet.cross_hessian, &fd_cross, FD_FLOOR))
            .max(rel_err_scalar(spec.value(&a, &b), jet.value, FD_FLOOR))
            .max(rel_err(&spec.grad1(&a, &b), &jet.grad1, FD_FLOOR))
            .max(rel_err_mat(&spec.cross_hessian(&a, &b), &fd_cross, FD_FLOOR));

        let dir = gaussian_vec(&mut r, dim);
        let s = DMatrix::from_fn(dim, dim, |_, _| r.random::<f64>() - 0.5);
        let fd_dir = fd_grad(|y| dir.dot(&grad1(&a, y)), &b, FD_STEP);
        let fd_trace = fd_grad(|y| (&s * eval_jet(spec, &a, y).unwrap().hessian1).trace(), &b, FD_STEP);
        worst = worst
            .max(rel_err(&spec.grad2_directional(&a, &b, &dir), &fd_dir, FD_FLOOR))
            .max(rel_err(&spec.grad2_trace_hessian1(&a, &b, &s), &fd_trace, FD_FLOOR));
    }
    worst
}

/// vMF block log-jets against differences of the logarithm of the kernel value.
pub fn vmf_log_jet_oracle(trials: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = r.random_range(2..=6);
        let kappa = r.random_range(0.2..8.0);
        let spec = KernelSpec::vmf_product(kappa, 1, n).unwrap();
        let y = random_unit(&mut r, n);
        let yo = random_unit(&mut r, n);
        let jet = log_jet_vmf_block(kappa, &y, &yo).unwrap();
        let log_k = |x: &DVector<f64>| eval_jet(&spec, x, &yo).unwrap().value.ln();
        let fd = fd_grad(log_k, &y, FD_STEP);
        let fd_hess = fd_jacobian(|x| fd_grad(log_k, x, 1e-4), &y, 1e-4);
        worst = worst
            .max(rel_err_scalar(jet.log_value, log_k(&y), FD_FLOOR))
            .max(rel_err(&jet.grad, &fd, FD_FLOOR))
            .max((&jet.hessian - &fd_hess).norm() / jet.grad.norm().max(1.0));
    }
    worst
}

/// The hemisphere-chart kernel used by the chart oracle, checked the same way.
pub fn chart_kernel_oracle(trials: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = r.random_range(3..=5);
        let kernel = ChartVmfKernel {
            kappa: r.random_range(0.5..5.0),
        };
        let a = chart_forward(&random_hemisphere_point(&mut r, n, 0.9)).unwrap();
        let b = chart_forward(&random_hemisphere_point(&mut r, n, 0.9)).unwrap();
        let m = a.len();
        let fd_g1 = fd_grad(|x| kernel.value(x, &b), &a, FD_STEP);
        let fd_h1 = fd_jacobian(|x| kernel.grad1(x, &b), &a, FD_STEP);
        let fd_cross = fd_jacobian(|y| kernel.grad1(&a, y), &b, FD_STEP);
        let s = DMatrix::from_fn(m, m, |_, _| r.random::<f64>() - 0.5);
        let fd_trace = fd_grad(|y| (&s * kernel.hessian1(&a, y)).trace(), &b, FD_STEP);
        worst = worst
            .max(rel_err(&kernel.grad1(&a, &b), &fd_g1, FD_FLOOR))
            .max(rel_err_mat(&kernel.hessian1(&a, &b), &fd_h1, FD_FLOOR))
            .max(rel_err_mat(&kernel.cross_hessian(&a, &b), &fd_cross, FD_FLOOR))
            .max(rel_err(&kernel.grad2_trace_hessian1(&a, &b, &s), &fd_trace, FD_FLOOR));
    }
    worst
}

/// The chart target's metric quantities against differences of its metric.
pub fn chart_metric_oracle(trials: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = r.random_range(3..=5);
        let target = ChartTarget {
            inner: UniformSphere { ambient: n },
            ambient: n,
        };
        let x = chart_forward(&random_hemisphere_point(&mut r, n, 0.9)).unwrap();
        let q = target.metric(&x).unwrap();
        let fd_logdet = fd_grad(|z| hemisphere_chart(z).unwrap().metric_det.ln(), &x, FD_STEP);
        let mut div = DVector::zeros(x.len());
        for j in 0..x.len() {
            let col = fd_jacobian(
                |z| hemisphere_chart(z).unwrap().metric_inv.column(j).clone_owned(),
                &x,
                FD_STEP,
            );
            div += col.column(j);
        }
        worst = worst
            .max(rel_err(&q.grad_logdet, &fd_logdet, FD_FLOOR))
            .max(rel_err(&q.div_inv_rows, &div, FD_FLOOR))
            .max(rel_err_mat(
                &(&q.metric * &q.metric_inv),
                &DMatrix::identity(x.len(), x.len()),
                1.0,
            ));
    }
    worst
}

/// BLR gradient, `∇ log|G|`, `∂G/∂w_i` and `Σ_j ∂_j G⁻¹_{ij}` against differences.
pub fn blr_oracles(trials: usize, seed: u64) -> [(&'static str, f64); 4] {
    let mut r = rng(seed);
    let mut worst = [0.0f64; 4];
    for _ in 0..trials {
        let m = r.random_range(1..=5);
        let d = r.random_range(1..=30);
        let alpha = r.random_range(0.05..5.0);
        let model = random_blr(&mut r, d, m, alpha);
        let w = gaussian_vec(&mut r, m);
        let q = model.metric(&w).unwrap();
        let fd_grad_post = fd_grad(|x| blr_log_post(&model, x), &w, FD_STEP);
        let (fd_logdet, fd_div) = blr_metric_derivatives_fd(&model, &w, FD_STEP);
        worst[0] = worst[0].max(rel_err(&model.grad_log_post(&w).unwrap(), &fd_grad_post, FD_FLOOR));
        worst[1] = worst[1].max(rel_err(&q.grad_logdet, &fd_logdet, FD_FLOOR));
        for i in 0..m {
            let fd_partial = {
                let mut plus = w.clone();
                let mut minus = w.clone();
                plus[i] += FD_STEP;
                minus[i] -= FD_STEP;
                (model.metric_tensor(&plus).unwrap() - model.metric_tensor(&minus).unwrap()) / (2.0 * FD_STEP)
            };
            worst[2] = worst[2].max(rel_err_mat(
                &model.metric_partial(&w, i).unwrap(),
                &fd_partial,
                FD_FLOOR,
            ));
        }
        worst[3] = worst[3].max(rel_err(&q.div_inv_rows, &fd_div, FD_FLOOR));
    }
    [
        ("blr grad log posterior", worst[0]),
        ("blr grad log det", worst[1]),
        ("blr metric partials", worst[2]),
        ("blr metric-inverse divergence", worst[3]),
    ]
}

/// vMF mixture gradient against differences of the mixture log-density.
pub fn vmf_mixture_oracle(trials: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let n = r.random_range(2..=6);
        let mixture = random_vmf_mixture(&mut r, n);
        let y = random_unit(&mut r, n);
        let fd = fd_grad(|z| vmf_mixture_log_density(&mixture, z), &y, FD_STEP);
        worst = worst.max(rel_err(&mixture.grad_log(&y).unwrap(), &fd, FD_FLOOR));
    }
    worst
}

/// Every derivative oracle, 100 random inputs each.
pub fn all_derivative_oracles(seed: u64) -> Vec<(&'static str, f64)> {
    let trials = 100;
    let mut out = vec![
        (
            "gaussian jet",
            kernel_jet_oracle(&KernelSpec::gaussian(0.9).unwrap(), 3, trials, seed),
        ),
        (
            "summed gaussian jet",
            kernel_jet_oracle(
                &KernelSpec::summed_gaussian(summed_bandwidths(1.3)).unwrap(),
                4,
                trials,
                seed + 1,
            ),
        ),
        (
            "vmf jet, one block",
            kernel_jet_oracle(&KernelSpec::vmf_product(2.5, 1, 3).unwrap(), 3, trials, seed + 2),
        ),
        (
            "vmf jet, three blocks",
            kernel_jet_oracle(&KernelSpec::vmf_product(1.5, 3, 4).unwrap(), 12, trials, seed + 3),
        ),
        ("vmf log jets", vmf_log_jet_oracle(trials, seed + 4)),
        ("vmf mixture grad log", vmf_mixture_oracle(trials, seed + 5)),
        ("chart kernel", chart_kernel_oracle(trials, seed + 6)),
        ("chart metric", chart_metric_oracle(trials, seed + 7)),
    ];
    out.extend(blr_oracles(trials, seed + 8));
    out
}

/// Worst values of the metric identities over 50 random BLR instances with
/// `m ≤ 10`, `D ≤ 200`: Sherman–Morrison vs Cholesky inverse (relative
/// Frobenius), the divergence identity `Σ_j ∂_j G⁻¹_{ij} = -(G⁻¹ ∇log|G|)_i`,
/// and `1 - α λ_min(G)` (nonpositive when `G ⪰ I/α`).
pub struct MetricIdentities {
    pub inverse_mismatch: f64,
    pub divergence_identity: f64,
    pub eigen_margin: f64,
}

pub fn metric_identities(seed: u64) -> MetricIdentities {
    let mut r = rng(seed);
    let mut out = MetricIdentities {
        inverse_mismatch: 0.0,
        divergence_identity: 0.0,
        eigen_margin: f64::NEG_INFINITY,
    };
    for _ in 0..50 {
        let m = r.random_range(1..=10);
        let d = r.random_range(1..=200);
        let alpha = r.random_range(0.01..2.0);
        let model = random_blr(&mut r, d, m, alpha);
        let w = gaussian_vec(&mut r, m);
        let direct = model.metric_with(&w, Inversion::Direct).unwrap();
        let sm = model.metric_with(&w, Inversion::ShermanMorrison).unwrap();
        out.inverse_mismatch = out
            .inverse_mismatch
            .max(rel_err_mat(&sm.metric_inv, &direct.metric_inv, 0.0));
        let ident = -(&direct.metric_inv * &direct.grad_logdet);
        out.divergence_identity = out.divergence_identity.max(rel_err(&direct.div_inv_rows, &ident, 1.0));
        let lambda_min = direct.metric.clone().symmetric_eigenvalues().min();
        out.eigen_margin = out.eigen_margin.max(1.0 - alpha * lambda_min);
    }
    out
}

/// Geometry invariants: exponential-map norm drift, whether `Exp_y(0) = y`
/// held exactly, and the worst tangency ratio `|yᵀv| / ‖v‖` of every sphere field.
pub struct GeometryInvariants {
    pub exp_norm_drift: f64,
    pub exp_zero_exact: bool,
    pub worst_tangency: f64,
}

pub fn geometry_invariants(seed: u64) -> GeometryInvariants {
    let mut r = rng(seed);
    let mut out = GeometryInvariants {
        exp_norm_drift: 0.0,
        exp_zero_exact: true,
        worst_tangency: 0.0,
    };
    for _ in 0..1000 {
        let n = r.random_range(2..=8);
        let y = random_unit(&mut r, n);
        let raw = gaussian_vec(&mut r, n) * r.random_range(0.0..2.0 * PI);
        let tangent = &raw - &y * y.dot(&raw);
        let moved = exp_map_sphere(&y, &tangent).unwrap();
        out.exp_norm_drift = out.exp_norm_drift.max((moved.norm() - 1.0).abs());
        out.exp_zero_exact &= exp_map_sphere(&y, &DVector::zeros(n)).unwrap() == y;
    }
    for _ in 0..100 {
        let blocks = r.random_range(1..=4);
        let n = r.random_range(2..=5);
        let mut y = DVector::zeros(blocks * n);
        for k in 0..blocks {
            y.rows_mut(k * n, n).copy_from(&random_unit(&mut r, n));
        }
        out.exp_zero_exact &= exp_map_product(&y, &DVector::zeros(blocks * n), blocks, n).unwrap() == y;
    }

    let tangency = |field: &UpdateField, cloud: &ParticleCloud, n: usize| -> f64 {
        let mut worst: f64 = 0.0;
        for (y, v) in cloud.points().iter().zip(&field.vectors) {
            for k in 0..y.len() / n {
                let yk = y.rows(k * n, n);
                let vk = v.rows(k * n, n);
                let norm = vk.norm();
                if norm > 0.0 {
                    worst = worst.max(yk.dot(&vk).abs() / norm);
                }
            }
        }
        worst
    };
    for trial in 0..20 {
        let n = 2 + trial % 5;
        let points: Vec<_> = (0..10).map(|_| random_unit(&mut r, n)).collect();
        let cloud = sphere_cloud(points);
        let target = random_vmf_mixture(&mut r, n);
        let kernel = KernelSpec::vmf_default(n).unwrap();
        out.worst_tangency = out.worst_tangency.max(tangency(
            &rsvgd_sphere_field(&cloud, &target, &kernel).unwrap(),
            &cloud,
            n,
        ));

        let (cloud, target, kernel) = hemisphere_setup(n.max(3), 8, seed + trial as u64);
        let nn = n.max(3);
        let emb = rsvgd_embedded_field(&cloud, &target, &kernel, &HemisphereEmbedding { ambient: nn }).unwrap();
        out.worst_tangency = out.worst_tangency.max(tangency(&emb, &cloud, nn));

        let blocks = 1 + trial % 4;
        let manifold = ManifoldSpec::product_sphere(blocks, n).unwrap();
        let points: Vec<_> = (0..8)
            .map(|_| {
                let mut y = DVector::zeros(blocks * n);
                for k in 0..blocks {
                    y.rows_mut(k * n, n).copy_from(&random_unit(&mut r, n));
                }
                y
            })
            .collect();
        let cloud = ParticleCloud::new(points, manifold).unwrap();
        let target = ProductVmf::new((0..blocks).map(|_| random_vmf_mixture(&mut r, n)).collect()).unwrap();
        let kernel = KernelSpec::vmf_product(2.0, blocks, n).unwrap();
        let field = rsvgd_product_field(&cloud, &target, &kernel).unwrap();
        out.worst_tangency = out.worst_tangency.max(tangency(&field, &cloud, n));
    }
    out
}

/// Worst `| ‖y‖ - 1 |` after `iterations` vanilla sphere steps toward a vMF mixture.
pub fn sphere_norm_drift(iterations: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let n = 3;
    let points: Vec<_> = (0..20).map(|_| random_unit(&mut r, n)).collect();
    let mut cloud = sphere_cloud(points);
    let target = random_vmf_mixture(&mut r, n);
    let kernel = KernelSpec::vmf_default(n).unwrap();
    let mut opt = OptimizerState::new(OptimizerKind::vanilla(0.1).unwrap());
    for _ in 0..iterations {
        let field = rsvgd_sphere_field(&cloud, &target, &kernel).unwrap();
        cloud = apply_update(&cloud, &field, &mut opt).unwrap();
    }
    cloud
        .points()
        .iter()
        .map(|y| (y.norm() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// Coordinate rule on a random BLR instance against the two-level
/// finite-difference oracle: worst per-particle relative error.
pub fn blr_coordinate_oracle(seed: u64) -> f64 {
    let mut r = rng(seed);
    let model = random_blr(&mut r, 20, 3, 1.0);
    let points: Vec<_> = (0..4).map(|_| gaussian_vec(&mut r, 3)).collect();
    let kernel = KernelSpec::gaussian(median_bandwidth(&points).unwrap().h).unwrap();
    let cloud = ParticleCloud::new(points.clone(), ManifoldSpec::euclidean(3).unwrap()).unwrap();
    let field = rsvgd_euclidean_field(&cloud, &model, &kernel).unwrap();
    let hess = |a: &DVector<f64>, b: &DVector<f64>| eval_jet(&kernel, a, b).unwrap().hessian1;
    let oracle = blr_coordinate_field_oracle(&model, &kernel, hess, &points, 1e-5, 1e-5);
    worst_per_particle(&field, &UpdateField { vectors: oracle })
}

/// Product (or single-sphere) rule against the finite-difference gradient of
/// the brute-force RKHS function: worst per-particle relative error.
pub fn product_fd_oracle(blocks: usize, n: usize, count: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let points: Vec<_> = (0..count)
        .map(|_| {
            let mut y = DVector::zeros(blocks * n);
            for k in 0..blocks {
                y.rows_mut(k * n, n).copy_from(&random_unit(&mut r, n));
            }
            y
        })
        .collect();
    let target = ProductVmf::new((0..blocks).map(|_| random_vmf_mixture(&mut r, n)).collect()).unwrap();
    let kappa = 1.7;
    let kernel = KernelSpec::vmf_product(kappa, blocks, n).unwrap();
    let manifold = if blocks == 1 {
        ManifoldSpec::sphere(n).unwrap()
    } else {
        ManifoldSpec::product_sphere(blocks, n).unwrap()
    };
    let cloud = ParticleCloud::new(points.clone(), manifold).unwrap();
    let field = if blocks == 1 {
        rsvgd_sphere_field(&cloud, &target, &kernel).unwrap()
    } else {
        rsvgd_product_field(&cloud, &target, &kernel).unwrap()
    };
    let grads: Vec<_> = points.iter().map(|y| target.grad_log_density(y).unwrap()).collect();
    let oracle = product_field_oracle(kappa, blocks, n, &points, &grads, 1e-5);
    worst_per_particle(&field, &UpdateField { vectors: oracle })
}

/// Orthonormal basis of the tangent space at unit `y`.
fn tangent_basis(y: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = y.len();
    let mut basis: Vec<DVector<f64>> = vec![y.clone()];
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        for b in &basis {
            let c = b.dot(&e);
            e -= b * c;
        }
        let norm = e.norm();
        if norm > 1e-6 {
            basis.push(e / norm);
        }
        if basis.len() == n {
            break;
        }
    }
    basis.split_off(1)
}

/// Primed Stein operator `g'ᵀ grad' b + Δ' b` on the sphere by central
/// differences along great circles through `y'`.
fn sphere_stein_fd(b: impl Fn(&DVector<f64>) -> f64, y: &DVector<f64>, g: &DVector<f64>, step: f64) -> f64 {
    let center = b(y);
    let mut out = 0.0;
    for e in tangent_basis(y) {
        let plus = b(&(y * step.cos() + &e * step.sin()));
        let minus = b(&(y * step.cos() - &e * step.sin()));
        out += g.dot(&e) * (plus - minus) / (2.0 * step);
        out += (plus - 2.0 * center + minus) / (step * step);
    }
    out
}

/// Analytic sphere pair function against the finite-difference Stein
/// operator applied to the sphere integrand; worst relative error over `pairs`.
pub fn rksd_pair_oracle(pairs: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < pairs {
        let n = r.random_range(2..=5);
        let y = random_unit(&mut r, n);
        let yo = random_unit(&mut r, n);
        if y.dot(&yo) < -0.9 {
            continue;
        }
        let kappa = r.random_range(0.5..4.0);
        let mixture = random_vmf_mixture(&mut r, n);
        let g = mixture.grad_log(&y).unwrap();
        let go = mixture.grad_log(&yo).unwrap();
        let beta = y.dot(&g) + n as f64 - 1.0;
        let integrand = |z: &DVector<f64>| {
            let t = y.dot(z);
            (kappa * t).exp() * (kappa * g.dot(z) + kappa * kappa - kappa * kappa * t * t - beta * kappa * t)
        };
        let fd = sphere_stein_fd(integrand, &yo, &go, 1e-4);
        let analytic = stein_pair_sphere(kappa, &y, &g, &yo, &go).unwrap();
        worst = worst.max(rel_err_scalar(analytic, fd, 1e-2));
        done += 1;
    }
    worst
}

/// Euclidean pair function against the primed Stein operator applied by
/// central differences to `gᵀ∇K + ΔK`, and its `Δ'Δ K` part against nested
/// differences of the kernel value.
pub fn ksd_pair_oracle(pairs: usize, seed: u64) -> (f64, f64) {
    let mut r = rng(seed);
    let (mut worst_pair, mut worst_lap): (f64, f64) = (0.0, 0.0);
    for i in 0..pairs {
        let d = 1 + i % 3;
        let h_base = r.random_range(0.5..2.0);
        let (kernel, h_min) = if i % 2 == 0 {
            (KernelSpec::gaussian(h_base).unwrap(), h_base)
        } else {
            let set = summed_bandwidths(h_base);
            let h_min = set.iter().copied().fold(f64::INFINITY, f64::min);
            (KernelSpec::summed_gaussian(set).unwrap(), h_min)
        };
        let a = gaussian_vec(&mut r, d);
        let b = gaussian_vec(&mut r, d) * 0.7;
        let ga = gaussian_vec(&mut r, d);
        let gb = gaussian_vec(&mut r, d);

        let inner = |z: &DVector<f64>| {
            let jet = eval_jet(&kernel, &a, z).unwrap();
            ga.dot(&jet.grad1) + jet.laplacian1
        };
        let h = 1e-3;
        let grad = fd_grad(inner, &b, h);
        let mut lap = 0.0;
        for j in 0..d {
            let mut plus = b.clone();
            let mut minus = b.clone();
            plus[j] += h;
            minus[j] -= h;
            lap += (inner(&plus) - 2.0 * inner(&b) + inner(&minus)) / (h * h);
        }
        let fd = gb.dot(&grad) + lap;
        let analytic = stein_pair_euclidean(&kernel, &a, &ga, &b, &gb).unwrap();
        worst_pair = worst_pair.max(rel_err_scalar(analytic, fd, 1e-2));

        // Δ_b Δ_a K from the value alone, Richardson-extrapolated over two steps
        let nested = |hh: f64| {
            let lap_a = |x: &DVector<f64>, z: &DVector<f64>| {
                let mut acc = 0.0;
                for j in 0..d {
                    let mut plus = x.clone();
                    let mut minus = x.clone();
                    plus[j] += hh;
                    minus[j] -= hh;
                    acc += (kernel.value(&plus, z) - 2.0 * kernel.value(x, z) + kernel.value(&minus, z)) / (hh * hh);
                }
                acc
            };
            let mut acc = 0.0;
            for j in 0..d {
                let mut plus = b.clone();
                let mut minus = b.clone();
                plus[j] += hh;
                minus[j] -= hh;
                acc += (lap_a(&a, &plus) - 2.0 * lap_a(&a, &b) + lap_a(&a, &minus)) / (hh * hh);
            }
            acc
        };
        // steps scale with the narrowest bandwidth so truncation and rounding both stay small
        let step = 0.05 * h_min.sqrt();
        let lap_lap = (4.0 * nested(step / 2.0) - nested(step)) / 3.0;
        let zero = DVector::zeros(d);
        let analytic_lap = stein_pair_euclidean(&kernel, &a, &zero, &b, &zero).unwrap();
        worst_lap = worst_lap.max(rel_err_scalar(analytic_lap, lap_lap, 1e-2));
    }
    (worst_pair, worst_lap)
}

/// Worst `|u(a, b) - u(b, a)|` relative to `max(|u|, 1)` over random pairs, both geometries.
pub fn stein_pair_asymmetry(pairs: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let d = r.random_range(1..=4);
        let kernel = KernelSpec::summed_gaussian(summed_bandwidths(r.random_range(0.3..3.0))).unwrap();
        let (a, b, ga, gb) = (
            gaussian_vec(&mut r, d),
            gaussian_vec(&mut r, d),
            gaussian_vec(&mut r, d),
            gaussian_vec(&mut r, d),
        );
        let ab = stein_pair_euclidean(&kernel, &a, &ga, &b, &gb).unwrap();
        let ba = stein_pair_euclidean(&kernel, &b, &gb, &a, &ga).unwrap();
        worst = worst.max((ab - ba).abs() / ab.abs().max(1.0));

        let n = r.random_range(2..=5);
        let kappa = r.random_range(0.5..5.0);
        let (y, yo, g, go) = (
            random_unit(&mut r, n),
            random_unit(&mut r, n),
            gaussian_vec(&mut r, n),
            gaussian_vec(&mut r, n),
        );
        let ab = stein_pair_sphere(kappa, &y, &g, &yo, &go).unwrap();
        let ba = stein_pair_sphere(kappa, &yo, &go, &y, &g).unwrap();
        worst = worst.max((ab - ba).abs() / ab.abs().max(1.0));
    }
    worst
}

pub const STEIN_GRID: [usize; 4] = [50, 200, 800, 2000];

/// Seed-averaged V-statistics over [`STEIN_GRID`] for standard-normal samples
/// against the matched target, and at `N = 2000` against a target shifted by 2.
pub fn ksd_decay(seeds: u64) -> (Vec<f64>, f64) {
    let target = Gaussian::standard(2).unwrap();
    let shifted = Gaussian::new(v(&[2.0, 0.0]), 1.0).unwrap();
    let kernel = KernelSpec::gaussian(1.0).unwrap();
    let mut matched = vec![0.0; STEIN_GRID.len()];
    let mut mismatched = 0.0;
    for seed in 0..seeds {
        let mut r = rng(1000 + seed);
        for (slot, &count) in STEIN_GRID.iter().enumerate() {
            let samples: Vec<_> = (0..count).map(|_| gaussian_vec(&mut r, 2)).collect();
            matched[slot] += ksd_euclidean(&samples, &target, &kernel, Estimator::VStatistic)
                .unwrap()
                .value
                / seeds as f64;
            if count == 2000 {
                mismatched += ksd_euclidean(&samples, &shifted, &kernel, Estimator::VStatistic)
                    .unwrap()
                    .value
                    / seeds as f64;
            }
        }
    }
    (matched, mismatched)
}

/// Seed-averaged RKSD V-statistics over [`STEIN_GRID`] for uniform samples on
/// `S²` against the uniform target, plus vMF(μ, 5) samples at `N = 2000`
/// scored against the matched target and against mean `-μ`.
pub fn rksd_decay(seeds: u64) -> (Vec<f64>, f64, f64) {
    let kernel = KernelSpec::vmf_default(3).unwrap();
    let uniform = UniformSphere { ambient: 3 };
    let mu = v(&[0.0, 0.0, 1.0]);
    let matched_vmf = VmfMixture::single(mu.clone(), 5.0).unwrap();
    let flipped_vmf = VmfMixture::single(-&mu, 5.0).unwrap();
    let mut grid = vec![0.0; STEIN_GRID.len()];
    let (mut matched, mut mismatched) = (0.0, 0.0);
    for seed in 0..seeds {
        let mut r = rng(2000 + seed);
        for (slot, &count) in STEIN_GRID.iter().enumerate() {
            let samples: Vec<_> = (0..count).map(|_| uniform_sphere(&mut r, 3)).collect();
            grid[slot] += rksd_sphere(&samples, &uniform, &kernel, Estimator::VStatistic)
                .unwrap()
                .value
                / seeds as f64;
        }
        let samples: Vec<_> = (0..2000).map(|_| sample_vmf(&mut r, &mu, 5.0).unwrap()).collect();
        matched += rksd_sphere(&samples, &matched_vmf, &kernel, Estimator::VStatistic)
            .unwrap()
            .value
            / seeds as f64;
        mismatched += rksd_sphere(&samples, &flipped_vmf, &kernel, Estimator::VStatistic)
            .unwrap()
            .value
            / seeds as f64;
    }
    (grid, matched, mismatched)
}
