//! Samplers used by tests and demos. Not part of the stable API.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Beta, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::manifold::check_unit;
use crate::target::VmfMixture;

/// Uniform draw on `S^{n-1}`.
pub fn uniform_sphere<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = z.norm();
        if norm > 1e-12 {
            return z / norm;
        }
    }
}

/// Exact vMF draw on `S^{n-1}` (Wood's rejection sampler), `n >= 2`.
pub fn sample_vmf<R: Rng + ?Sized>(rng: &mut R, mean: &DVector<f64>, kappa: f64) -> Result<DVector<f64>> {
    check_unit(mean.as_view())?;
    let n = mean.len();
    if n < 2 || !(kappa >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "vMF sampler needs n >= 2 and kappa >= 0, got n={n}, kappa={kappa}"
        )));
    }
    if kappa == 0.0 {
        return Ok(uniform_sphere(rng, n));
    }
    let p1 = (n - 1) as f64;
    let b = p1 / (2.0 * kappa + (4.0 * kappa * kappa + p1 * p1).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + p1 * (1.0 - x0 * x0).ln();
    let beta = Beta::new(p1 / 2.0, p1 / 2.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let w = loop {
        let z = beta.sample(rng);
        let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
        let u: f64 = rng.random();
        if kappa * w + p1 * (1.0 - x0 * w).ln() - c >= u.ln() {
            break w;
        }
    };
    let v = loop {
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let t = &z - mean * mean.dot(&z);
        let norm = t.norm();
        if norm > 1e-12 {
            break t / norm;
        }
    };
    let y = mean * w + v * (1.0 - w * w).max(0.0).sqrt();
    let norm = y.norm();
    Ok(y / norm)
}

/// Draw from a vMF mixture.
pub fn sample_vmf_mixture<R: Rng + ?Sized>(rng: &mut R, mixture: &VmfMixture) -> Result<DVector<f64>> {
    let u: f64 = rng.random();
    let comps = mixture.components();
    let mut acc = 0.0;
    for comp in comps {
        acc += comp.weight;
        if u < acc {
            return sample_vmf(rng, &comp.mean, comp.kappa);
        }
    }
    let last = &comps[comps.len() - 1];
    sample_vmf(rng, &last.mean, last.kappa)
}
