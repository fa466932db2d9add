//! Kernelized Stein discrepancies: the squared RKHS norm of the optimal
//! gradient-field velocity, `E_q E_q' [T' T K]` with the Stein operator
//! `T h = (grad log p)[h] + Δh` applied once in each argument.
//!
//! Two instances have fully closed forms here: the flat Gaussian kernel on
//! `R^d` and the vMF kernel on `S^{n-1}`.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::kernel::KernelSpec;
use crate::manifold::check_unit;
use crate::target::LogDensityGradient;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Estimator {
    /// Full double average, diagonal included; nonnegative.
    #[default]
    VStatistic,
    /// Off-diagonal average; unbiased.
    UStatistic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscrepancyEstimate {
    pub value: f64,
    pub estimator: Estimator,
    pub n_samples: usize,
}

/// `u_p(a, b)` for the flat Gaussian(-sum) kernel, given the score `ga`, `gb`
/// of the target at each point.
///
/// With `ρ = ‖a - b‖²`, the kernel is the radial profile `k(ρ)` and its
/// Laplacian is `L(ρ) = (ρ/h² - d/h) k`; then `Δ'ΔK = 4ρL'' + 2dL'`,
/// `∇_a Δ'K = 2rL'` and `∇_b ΔK = -2rL'`.
pub fn stein_pair_euclidean(
    kernel: &KernelSpec,
    a: &DVector<f64>,
    ga: &DVector<f64>,
    b: &DVector<f64>,
    gb: &DVector<f64>,
) -> Result<f64> {
    let bandwidths: &[f64] = match kernel {
        KernelSpec::Gaussian { bandwidth } => std::slice::from_ref(bandwidth),
        KernelSpec::SummedGaussian { bandwidths } => bandwidths,
        KernelSpec::VmfProduct { .. } => {
            return Err(Error::InvalidArgument(
                "Euclidean discrepancy needs a Gaussian kernel".into(),
            ))
        }
    };
    let d = a.len();
    check_dim(d, b.len())?;
    check_dim(d, ga.len())?;
    check_dim(d, gb.len())?;
    let df = d as f64;
    let r = a - b;
    let rho = r.norm_squared();
    let ga_r = ga.dot(&r);
    let gb_r = gb.dot(&r);
    let ga_gb = ga.dot(gb);

    let mut total = 0.0;
    for &h in bandwidths {
        let h2 = h * h;
        let k = (-rho / (2.0 * h)).exp();
        let k1 = -k / (2.0 * h);
        let k2 = k / (4.0 * h2);
        let lap_coef = rho / h2 - df / h;
        let l1 = k / h2 + lap_coef * k1;
        let l2 = 2.0 * k1 / h2 + lap_coef * k2;

        let score_cross = k * ga_gb / h - k * ga_r * gb_r / h2;
        let lap_lap = 4.0 * rho * l2 + 2.0 * df * l1;
        let mixed = 2.0 * l1 * (ga_r - gb_r);
        total += score_cross + lap_lap + mixed;
    }
    Ok(total)
}

/// `u_p(y, y')` on `S^{n-1}` for the vMF kernel `exp(κ yᵀy')`, given the
/// ambient scores `g`, `g'`.
///
/// The primed Stein operator is applied to the integrand
/// `b(y') = e^{κt}[κ gᵀy' + κ² - κ²t² - βκt]`, `t = yᵀy'`, `β = yᵀg + n - 1`,
/// using `grad' = (I - y'y'ᵀ)∇'` and
/// `Δ'b = ∇'ᵀ∇'b - y'ᵀ(∇'∇'ᵀb)y' - (n - 1) y'ᵀ∇'b`.
pub fn stein_pair_sphere(
    kappa: f64,
    y: &DVector<f64>,
    g: &DVector<f64>,
    y_other: &DVector<f64>,
    g_other: &DVector<f64>,
) -> Result<f64> {
    let n = y.len();
    check_dim(n, y_other.len())?;
    check_dim(n, g.len())?;
    check_dim(n, g_other.len())?;
    check_unit(y.as_view())?;
    check_unit(y_other.as_view())?;
    Ok(sphere_pair_unchecked(kappa, y, g, y_other, g_other))
}

fn sphere_pair_unchecked(
    kappa: f64,
    y: &DVector<f64>,
    g: &DVector<f64>,
    y_other: &DVector<f64>,
    g_other: &DVector<f64>,
) -> f64 {
    let nm1 = y.len() as f64 - 1.0;
    let k2 = kappa * kappa;
    let k3 = k2 * kappa;

    let t = y.dot(y_other);
    let s = g.dot(y_other);
    let s_other = g_other.dot(y);
    let c = y.dot(g);
    let c_other = y_other.dot(g_other);
    let gg = g.dot(g_other);
    let beta = c + nm1;
    let e = (kappa * t).exp();

    // ∇'b = e (κ g + ψ y)
    let phi = kappa * s + k2 - k2 * t * t - beta * kappa * t;
    let psi = kappa * phi - 2.0 * k2 * t - beta * kappa;
    // ∇'ψ = κ² g - w y
    let w = 2.0 * k3 * t + beta * k2 + 2.0 * k2;

    let radial = kappa * s + psi * t; // y'ᵀ∇'b / e
    let score_term = kappa * gg + psi * s_other - c_other * radial;
    let trace = kappa * (kappa * c + psi) + k2 * c - w;
    let normal_quad = kappa * radial * t + t * (k2 * s - w * t);

    e * (score_term + trace - normal_quad - nm1 * radial)
}

fn assemble<F>(count: usize, estimator: Estimator, pair: F) -> Result<DiscrepancyEstimate>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    let min = match estimator {
        Estimator::VStatistic => 1,
        Estimator::UStatistic => 2,
    };
    if count < min {
        return Err(Error::InsufficientSamples {
            needed: min,
            got: count,
        });
    }
    let row_sums: Vec<f64> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..count {
                if estimator == Estimator::UStatistic && i == j {
                    continue;
                }
                acc += pair(i, j);
            }
            acc
        })
        .collect();
    let total: f64 = row_sums.iter().sum();
    let nf = count as f64;
    let value = match estimator {
        Estimator::VStatistic => total / (nf * nf),
        Estimator::UStatistic => total / (nf * (nf - 1.0)),
    };
    Ok(DiscrepancyEstimate {
        value,
        estimator,
        n_samples: count,
    })
}

fn scores<T: LogDensityGradient + ?Sized>(samples: &[DVector<f64>], target: &T) -> Result<Vec<DVector<f64>>> {
    samples.par_iter().map(|x| target.grad_log_density(x)).collect()
}

/// Kernelized Stein discrepancy on `R^d` with a Gaussian or summed-Gaussian kernel.
pub fn ksd_euclidean<T>(
    samples: &[DVector<f64>],
    target: &T,
    kernel: &KernelSpec,
    estimator: Estimator,
) -> Result<DiscrepancyEstimate>
where
    T: LogDensityGradient + ?Sized,
{
    if !kernel.is_gaussian_family() {
        return Err(Error::InvalidArgument(
            "Euclidean discrepancy needs a Gaussian kernel".into(),
        ));
    }
    for s in samples {
        check_dim(target.dim(), s.len())?;
    }
    let g = scores(samples, target)?;
    assemble(samples.len(), estimator, |i, j| {
        stein_pair_euclidean(kernel, &samples[i], &g[i], &samples[j], &g[j]).unwrap_or(f64::NAN)
    })
}

/// Riemannian kernelized Stein discrepancy on `S^{n-1}` with the single-block vMF kernel.
pub fn rksd_sphere<T>(
    samples: &[DVector<f64>],
    target: &T,
    kernel: &KernelSpec,
    estimator: Estimator,
) -> Result<DiscrepancyEstimate>
where
    T: LogDensityGradient + ?Sized,
{
    let KernelSpec::VmfProduct {
        kappa,
        blocks: 1,
        block_dim,
    } = *kernel
    else {
        return Err(Error::InvalidArgument(
            "sphere discrepancy needs a single-block vMF kernel".into(),
        ));
    };
    for s in samples {
        check_dim(block_dim, s.len())?;
        check_unit(s.as_view())?;
    }
    let g = scores(samples, target)?;
    assemble(samples.len(), estimator, |i, j| {
        sphere_pair_unchecked(kappa, &samples[i], &g[i], &samples[j], &g[j])
    })
}
