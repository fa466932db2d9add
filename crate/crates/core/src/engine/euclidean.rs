use nalgebra::{DMatrix, DVector};

use super::{per_particle, require_euclidean, ParticleCloud, UpdateField};
use crate::error::{check_dim, Result};
use crate::kernel::SmoothKernel;
use crate::target::{LogDensityGradient, MetricTarget};

/// SVGD field `v(B) = (1/N) Σ_A [K(A,B) ∇log p(A) + ∇_A K(A,B)]`.
pub fn svgd_field<T, K>(cloud: &ParticleCloud, target: &T, kernel: &K) -> Result<UpdateField>
where
    T: LogDensityGradient + ?Sized,
    K: SmoothKernel + ?Sized,
{
    require_euclidean(cloud)?;
    check_dim(cloud.manifold().ambient_dim(), target.dim())?;
    let points = cloud.points();
    let grads = per_particle(points, |_, p| target.grad_log_density(p))?;
    let n = points.len() as f64;
    let vectors = per_particle(points, |_, b| {
        let mut acc = DVector::zeros(b.len());
        for (a, g) in points.iter().zip(&grads) {
            acc += g * kernel.value(a, b) + kernel.grad1(a, b);
        }
        Ok(acc / n)
    })?;
    Ok(UpdateField { vectors })
}

/// `(1/N) Σ_A ∇_B [drift_Aᵀ ∇_A K(A,B) + tr(S_A ∇_A∇_Aᵀ K(A,B))]` at every particle `B`.
///
/// This is the gradient of the optimal RKHS function before the final
/// raising of the index (coordinate rule) or tangent projection (embedded rule).
pub(crate) fn kernel_gradient_field<K: SmoothKernel + ?Sized>(
    points: &[DVector<f64>],
    drifts: &[DVector<f64>],
    trace_weights: &[DMatrix<f64>],
    kernel: &K,
) -> Result<Vec<DVector<f64>>> {
    let n = points.len() as f64;
    per_particle(points, |_, b| {
        let mut acc = DVector::zeros(b.len());
        for ((a, drift), s) in points.iter().zip(drifts).zip(trace_weights) {
            acc += kernel.grad2_directional(a, b, drift);
            acc += kernel.grad2_trace_hessian1(a, b, s);
        }
        Ok(acc / n)
    })
}

/// Coordinate-space Riemannian SVGD field
/// `X^i(B) = g^{ij}(B) ∂_j E_A[(g^{ab}∂_a log(p√|G|) + ∂_a g^{ab}) ∂_b K + g^{ab} ∂_a∂_b K]`.
///
/// The outer derivative acts on the kernel's second argument only; `G⁻¹(B)`
/// multiplies the result from outside.
pub fn rsvgd_euclidean_field<T, K>(cloud: &ParticleCloud, target: &T, kernel: &K) -> Result<UpdateField>
where
    T: MetricTarget + ?Sized,
    K: SmoothKernel + ?Sized,
{
    require_euclidean(cloud)?;
    check_dim(cloud.manifold().ambient_dim(), target.dim())?;
    let points = cloud.points();

    let per_point = per_particle(points, |_, a| {
        let grad = target.grad_log_density(a)?;
        let q = target.metric(a)?;
        let drift = &q.metric_inv * (grad + &q.grad_logdet * 0.5) + &q.div_inv_rows;
        Ok((drift, q.metric_inv))
    })?;
    let (drifts, inverses): (Vec<_>, Vec<_>) = per_point.into_iter().unzip();

    let grads = kernel_gradient_field(points, &drifts, &inverses, kernel)?;
    let vectors = grads.into_iter().zip(&inverses).map(|(g, inv)| inv * g).collect();
    Ok(UpdateField { vectors })
}
