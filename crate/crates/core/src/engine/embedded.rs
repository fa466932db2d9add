//! Riemannian SVGD expressed in an isometrically embedding space `R^n`.
//!
//! The field is `X(y') = (I - N'N'ᵀ) ∇' f(y')` with
//! `f(y') = E_y[(∇log(p√|G|))ᵀ(I - NNᵀ)∇K + ∇ᵀ∇K - tr(Nᵀ(∇∇ᵀK)N) + ((Mᵀ∇)ᵀ(G⁻¹Mᵀ))∇K]`.
//! The last term depends on the chart and is evaluated by central differences
//! of `G⁻¹Mᵀ` along chart directions, so this rule serves as a validation
//! path rather than a fast one.

use nalgebra::{DMatrix, DVector};

use super::euclidean::kernel_gradient_field;
use super::{per_particle, ParticleCloud, UpdateField};
use crate::error::{check_dim, Error, Result};
use crate::kernel::SmoothKernel;
use crate::manifold::{chart_forward, chart_inverse, hemisphere_chart};
use crate::target::LogDensityGradient;

/// Step of the central differences taken along chart coordinates.
pub const CHART_FD_STEP: f64 = 1e-5;

/// Chart and normal-space data of an isometric embedding.
pub trait EmbeddingProviders: Sync {
    /// `n`.
    fn ambient_dim(&self) -> usize;
    /// `m`.
    fn intrinsic_dim(&self) -> usize;
    fn chart_forward(&self, y: &DVector<f64>) -> Result<DVector<f64>>;
    fn chart_inverse(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    /// `M = ∂y/∂x`, `n × m`.
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;
    fn metric(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;
    fn metric_det(&self, x: &DVector<f64>) -> Result<f64>;
    /// Orthonormal basis of the normal space at `y`, `n × (n - m)`.
    fn normal_basis(&self, y: &DVector<f64>) -> Result<DMatrix<f64>>;
}

/// `R^n` embedded in itself: `M = I`, `G = I`, no normal directions.
#[derive(Debug, Clone, Copy)]
pub struct TrivialEmbedding {
    pub dim: usize,
}

impl EmbeddingProviders for TrivialEmbedding {
    fn ambient_dim(&self) -> usize {
        self.dim
    }
    fn intrinsic_dim(&self) -> usize {
        self.dim
    }
    fn chart_forward(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(y.clone())
    }
    fn chart_inverse(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(x.clone())
    }
    fn jacobian(&self, _: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::identity(self.dim, self.dim))
    }
    fn metric(&self, _: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::identity(self.dim, self.dim))
    }
    fn metric_det(&self, _: &DVector<f64>) -> Result<f64> {
        Ok(1.0)
    }
    fn normal_basis(&self, _: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::zeros(self.dim, 0))
    }
}

/// `S^{n-1} ⊂ R^n` through the upper-hemisphere chart; the normal space at `y` is `span{y}`.
#[derive(Debug, Clone, Copy)]
pub struct HemisphereEmbedding {
    pub ambient: usize,
}

impl EmbeddingProviders for HemisphereEmbedding {
    fn ambient_dim(&self) -> usize {
        self.ambient
    }
    fn intrinsic_dim(&self) -> usize {
        self.ambient - 1
    }
    fn chart_forward(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        chart_forward(y)
    }
    fn chart_inverse(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        chart_inverse(x)
    }
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(hemisphere_chart(x)?.jacobian)
    }
    fn metric(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(hemisphere_chart(x)?.metric)
    }
    fn metric_det(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(hemisphere_chart(x)?.metric_det)
    }
    fn normal_basis(&self, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(DMatrix::from_column_slice(y.len(), 1, y.as_slice()))
    }
}

/// Per-particle quantities of the embedded rule.
struct EmbeddedPoint {
    /// `(I - NNᵀ)(∇log p + ∇log√|G|) + ((Mᵀ∇)ᵀ(G⁻¹Mᵀ))ᵀ`.
    drift: DVector<f64>,
    /// `I - NNᵀ`.
    projector: DMatrix<f64>,
}

fn invalid(index: usize, reason: String) -> Error {
    Error::InvalidProvider { index, reason }
}

fn check_providers<E: EmbeddingProviders + ?Sized>(
    providers: &E,
    index: usize,
    y: &DVector<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let (n, m) = (providers.ambient_dim(), providers.intrinsic_dim());
    let x = providers.chart_forward(y).map_err(|e| invalid(index, e.to_string()))?;
    let jac = providers.jacobian(&x)?;
    let metric = providers.metric(&x)?;
    let normal = providers.normal_basis(y)?;
    if jac.shape() != (n, m) || metric.shape() != (m, m) || normal.shape() != (n, n - m) {
        return Err(invalid(index, "provider matrix shapes disagree".into()));
    }
    let gram = normal.tr_mul(&normal);
    let ortho = (gram - DMatrix::identity(n - m, n - m)).amax();
    if ortho > 1e-10 {
        return Err(invalid(
            index,
            format!("normal basis is not orthonormal (error {ortho:e})"),
        ));
    }
    let leak = if n > m { jac.tr_mul(&normal).amax() } else { 0.0 };
    if leak > 1e-8 {
        return Err(invalid(
            index,
            format!("normal basis not orthogonal to the tangent space (error {leak:e})"),
        ));
    }
    let metric_inv = metric
        .clone()
        .try_inverse()
        .ok_or_else(|| invalid(index, "metric is singular".into()))?;
    let projector = DMatrix::identity(n, n) - &normal * normal.transpose();
    let tangent = &jac * &metric_inv * jac.transpose();
    let mismatch = (&tangent - &projector).amax();
    if mismatch > 1e-8 {
        return Err(invalid(index, format!("M G⁻¹ Mᵀ differs from I - NNᵀ by {mismatch:e}")));
    }
    Ok((x, jac, metric_inv, projector))
}

fn embedded_point<E, T>(providers: &E, target: &T, index: usize, y: &DVector<f64>) -> Result<EmbeddedPoint>
where
    E: EmbeddingProviders + ?Sized,
    T: LogDensityGradient + ?Sized,
{
    let (x, jac, metric_inv, projector) = check_providers(providers, index, y)?;
    let (n, m) = (providers.ambient_dim(), providers.intrinsic_dim());
    let h = CHART_FD_STEP;

    // chart gradient of log√|G|, then raised and pushed forward: M G⁻¹ ∂_x log√|G|
    let mut dlog_sqrt_det = DVector::zeros(m);
    // Σ_i ∂_{x_i} (G⁻¹Mᵀ)_{i,:}
    let mut chart_div = DVector::zeros(n);
    for i in 0..m {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        let (dp, dm) = (providers.metric_det(&xp)?, providers.metric_det(&xm)?);
        dlog_sqrt_det[i] = 0.25 * (dp.ln() - dm.ln()) / h;

        let row = |x: &DVector<f64>| -> Result<DVector<f64>> {
            let inv = providers
                .metric(x)?
                .try_inverse()
                .ok_or_else(|| invalid(index, "metric is singular near the particle".into()))?;
            let gm = inv * providers.jacobian(x)?.transpose();
            Ok(gm.row(i).transpose())
        };
        chart_div += (row(&xp)? - row(&xm)?) / (2.0 * h);
    }

    let grad = target.grad_log_density(y)?;
    let drift = &projector * grad + &jac * (&metric_inv * dlog_sqrt_det) + chart_div;
    Ok(EmbeddedPoint { drift, projector })
}

/// Embedded-space Riemannian SVGD field for generic embedding providers.
pub fn rsvgd_embedded_field<T, K, E>(
    cloud: &ParticleCloud,
    target: &T,
    kernel: &K,
    providers: &E,
) -> Result<UpdateField>
where
    T: LogDensityGradient + ?Sized,
    K: SmoothKernel + ?Sized,
    E: EmbeddingProviders + ?Sized,
{
    let n = providers.ambient_dim();
    check_dim(n, cloud.manifold().ambient_dim())?;
    check_dim(n, target.dim())?;
    if providers.intrinsic_dim() > n {
        return Err(Error::InvalidArgument("intrinsic dimension exceeds ambient".into()));
    }
    let points = cloud.points();
    let per_point = per_particle(points, |i, y| embedded_point(providers, target, i, y))?;
    let (drifts, projectors): (Vec<_>, Vec<_>) = per_point.into_iter().map(|p| (p.drift, p.projector)).unzip();
    let grads = kernel_gradient_field(points, &drifts, &projectors, kernel)?;
    let vectors = grads.into_iter().zip(&projectors).map(|(g, proj)| proj * g).collect();
    Ok(UpdateField { vectors })
}
