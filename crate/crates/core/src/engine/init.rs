use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use super::ParticleCloud;
use crate::error::{Error, Result};
use crate::manifold::{renormalize_blocks, ManifoldSpec};

/// `count` draws from `N(mean, std² I)` on Euclidean space.
pub fn init_gaussian<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    mean: &DVector<f64>,
    std: f64,
) -> Result<ParticleCloud> {
    let dim = mean.len();
    let points = (0..count)
        .map(|_| {
            let z = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            mean + z * std
        })
        .collect();
    ParticleCloud::new(points, ManifoldSpec::euclidean(dim)?)
}

/// `count` uniform draws on a sphere or product of spheres (normalized standard normals per block).
pub fn init_uniform_sphere<R: Rng + ?Sized>(
    rng: &mut R,
    count: usize,
    manifold: ManifoldSpec,
) -> Result<ParticleCloud> {
    let Some((_, n)) = manifold.block_layout() else {
        return Err(Error::InvalidArgument(
            "uniform initialization needs a sphere manifold".into(),
        ));
    };
    let dim = manifold.ambient_dim();
    let points = (0..count)
        .map(|_| {
            let mut y = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            renormalize_blocks(&mut y, n);
            y
        })
        .collect();
    ParticleCloud::new(points, manifold)
}
