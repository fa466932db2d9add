//! Riemannian SVGD on `S^{n-1}` and `(S^{n-1})^P` with the vMF kernel.
//!
//! With `t = yᵀy'`, `K = e^{κt}`, `g = ∇log p(y)` and `β = yᵀg + n - 1`, the
//! integrand of the optimal RKHS function is
//! `K [κ gᵀy' + κ² - κ²t² - βκt]`, and its gradient in `y'` is
//! `K [κ g + y (κ·bracket + (-2κ²t - βκ))]`. The product rule sums the
//! per-block brackets inside one shared `K = exp(κ Σ_k t_k)`, taking the
//! curvature term of each block from `log K_k`, which is linear, so that a
//! single block reproduces the sphere rule exactly.

use nalgebra::DVector;

use super::{per_particle, ParticleCloud, UpdateField};
use crate::error::{check_dim, Error, Result};
use crate::kernel::KernelSpec;
use crate::manifold::ManifoldSpec;
use crate::target::LogDensityGradient;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// In-place `v ← (I - y yᵀ) v`.
fn project(y: &[f64], v: &mut [f64]) {
    let c = dot(y, v);
    for (vi, yi) in v.iter_mut().zip(y) {
        *vi -= yi * c;
    }
}

/// Bracket value (without `K`) and the coefficient of `y` from the
/// derivative of the polynomial part, for one block.
fn block_terms(kappa: f64, dim: usize, y: &[f64], g: &[f64], y_other: &[f64]) -> (f64, f64, f64) {
    let t = dot(y, y_other);
    let c = dot(y, g);
    let s = dot(g, y_other);
    let beta = c + (dim as f64 - 1.0);
    let k2 = kappa * kappa;
    let bracket = kappa * s + k2 - k2 * t * t - beta * kappa * t;
    let coef = -2.0 * k2 * t - beta * kappa;
    (t, bracket, coef)
}

fn vmf_kappa(kernel: &KernelSpec, blocks: usize, block_dim: usize) -> Result<f64> {
    match *kernel {
        KernelSpec::VmfProduct {
            kappa,
            blocks: kb,
            block_dim: kn,
        } if kb == blocks && kn == block_dim => Ok(kappa),
        _ => Err(Error::InvalidArgument(format!(
            "expected a vMF kernel with {blocks} block(s) of dimension {block_dim}, got {kernel:?}"
        ))),
    }
}

/// Hypersphere field `v(y') = (I - y'y'ᵀ) ∇' (1/N) Σ_y bracket(y, y')`.
pub fn rsvgd_sphere_field<T>(cloud: &ParticleCloud, target: &T, kernel: &KernelSpec) -> Result<UpdateField>
where
    T: LogDensityGradient + ?Sized,
{
    let ManifoldSpec::Sphere { ambient: n } = cloud.manifold() else {
        return Err(Error::InvalidArgument(format!(
            "sphere rule needs a sphere cloud, got {}",
            cloud.manifold()
        )));
    };
    check_dim(n, target.dim())?;
    let kappa = vmf_kappa(kernel, 1, n)?;
    let points = cloud.points();
    let grads = per_particle(points, |_, y| target.grad_log_density(y))?;
    let count = points.len() as f64;

    let vectors = per_particle(points, |_, y_other| {
        let yo = y_other.as_slice();
        let mut acc = vec![0.0; n];
        for (y, g) in points.iter().zip(&grads) {
            let (y, g) = (y.as_slice(), g.as_slice());
            let (t, bracket, coef) = block_terms(kappa, n, y, g, yo);
            let k = (kappa * t).exp();
            let scale = kappa * bracket + coef;
            for i in 0..n {
                acc[i] += k * (kappa * g[i] + y[i] * scale);
            }
        }
        for a in acc.iter_mut() {
            *a /= count;
        }
        project(yo, &mut acc);
        Ok(DVector::from_vec(acc))
    })?;
    Ok(UpdateField { vectors })
}

/// Product-of-hyperspheres field, one tangent projection per block.
pub fn rsvgd_product_field<T>(cloud: &ParticleCloud, target: &T, kernel: &KernelSpec) -> Result<UpdateField>
where
    T: LogDensityGradient + ?Sized,
{
    let (blocks, n) = match cloud.manifold() {
        ManifoldSpec::ProductSphere { blocks, block_dim } => (blocks, block_dim),
        ManifoldSpec::Sphere { ambient } => (1, ambient),
        other => {
            return Err(Error::InvalidArgument(format!(
                "product rule needs a (product) sphere cloud, got {other}"
            )))
        }
    };
    check_dim(blocks * n, target.dim())?;
    let kappa = vmf_kappa(kernel, blocks, n)?;
    let points = cloud.points();
    let grads = per_particle(points, |_, y| target.grad_log_density(y))?;
    let count = points.len() as f64;

    let vectors = per_particle(points, |_, y_other| {
        let yo = y_other.as_slice();
        let mut acc = vec![0.0; blocks * n];
        let mut coefs = vec![0.0; blocks];
        for (y, g) in points.iter().zip(&grads) {
            let (y, g) = (y.as_slice(), g.as_slice());
            let mut t_total = 0.0;
            let mut bracket_total = 0.0;
            for k in 0..blocks {
                let r = k * n..(k + 1) * n;
                let (t, bracket, coef) = block_terms(kappa, n, &y[r.clone()], &g[r.clone()], &yo[r]);
                t_total += t;
                bracket_total += bracket;
                coefs[k] = coef;
            }
            let kval = (kappa * t_total).exp();
            for k in 0..blocks {
                let scale = kappa * bracket_total + coefs[k];
                for i in k * n..(k + 1) * n {
                    acc[i] += kval * (kappa * g[i] + y[i] * scale);
                }
            }
        }
        for a in acc.iter_mut() {
            *a /= count;
        }
        for k in 0..blocks {
            let r = k * n..(k + 1) * n;
            project(&yo[r.clone()], &mut acc[r]);
        }
        Ok(DVector::from_vec(acc))
    })?;
    Ok(UpdateField { vectors })
}
