use std::f64::consts::FRAC_PI_2;

use nalgebra::DVector;

use super::{ParticleCloud, UpdateField};
use crate::error::{check_dim, Error, Result};
use crate::manifold::{exp_unchecked, renormalize_blocks};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    /// `x ← x + ε v`, or `y ← Exp_y(ε v)` on spheres.
    Vanilla { step: f64 },
    /// AdaGrad with momentum (Euclidean only):
    /// `ρ ← ρ + v²`, `μ ← βμ + v / (√ρ + δ)`, `x ← x + ε μ`.
    AdagradMomentum { step: f64, momentum: f64, fuzz: f64 },
}

impl OptimizerKind {
    pub fn vanilla(step: f64) -> Result<Self> {
        check_step(step)?;
        Ok(Self::Vanilla { step })
    }

    pub fn adagrad_momentum(step: f64, momentum: f64, fuzz: f64) -> Result<Self> {
        check_step(step)?;
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::InvalidArgument(format!(
                "momentum must lie in [0, 1), got {momentum}"
            )));
        }
        if !(fuzz > 0.0) {
            return Err(Error::InvalidArgument(format!("fuzz must be positive, got {fuzz}")));
        }
        Ok(Self::AdagradMomentum { step, momentum, fuzz })
    }

    /// Defaults `β = 0.9`, `δ = 1e-6`.
    pub fn adagrad_default(step: f64) -> Result<Self> {
        Self::adagrad_momentum(step, 0.9, 1e-6)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Vanilla { .. } => "vanilla",
            Self::AdagradMomentum { .. } => "adagrad_momentum",
        }
    }
}

fn check_step(step: f64) -> Result<()> {
    if step > 0.0 && step.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "step size must be positive, got {step}"
        )))
    }
}

/// Optimizer configuration plus per-particle buffers and step statistics.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    kind: OptimizerKind,
    accumulator: Vec<DVector<f64>>,
    velocity: Vec<DVector<f64>>,
    last_mean_step: f64,
    clipped_steps: usize,
}

impl OptimizerState {
    pub fn new(kind: OptimizerKind) -> Self {
        Self {
            kind,
            accumulator: Vec::new(),
            velocity: Vec::new(),
            last_mean_step: 0.0,
            clipped_steps: 0,
        }
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    /// Mean over particles of the length of the most recent step
    /// (geodesic length on spheres).
    pub fn last_mean_step(&self) -> f64 {
        self.last_mean_step
    }

    /// Total sphere steps shortened to `π/2` so far.
    pub fn clipped_steps(&self) -> usize {
        self.clipped_steps
    }
}

/// Moves every particle along its update vector.
///
/// Sphere steps longer than `π/2` are clipped to `π/2` (counted in
/// [`OptimizerState::clipped_steps`]) and every block is renormalized.
pub fn apply_update(cloud: &ParticleCloud, field: &UpdateField, opt: &mut OptimizerState) -> Result<ParticleCloud> {
    check_dim(cloud.len(), field.len())?;
    let dim = cloud.manifold().ambient_dim();
    for v in &field.vectors {
        check_dim(dim, v.len())?;
    }
    let manifold = cloud.manifold();

    let (points, total_step) = match (opt.kind, manifold.block_layout()) {
        (OptimizerKind::Vanilla { step }, None) => {
            let mut total = 0.0;
            let points = cloud
                .points()
                .iter()
                .zip(&field.vectors)
                .map(|(x, v)| {
                    let delta = v * step;
                    total += delta.norm();
                    x + delta
                })
                .collect();
            (points, total)
        }
        (OptimizerKind::Vanilla { step }, Some((blocks, n))) => {
            let mut total = 0.0;
            let mut clipped = 0;
            let points = cloud
                .points()
                .iter()
                .zip(&field.vectors)
                .map(|(y, v)| {
                    let mut out = DVector::zeros(y.len());
                    let mut sq = 0.0;
                    for k in 0..blocks {
                        let mut delta = v.rows(k * n, n) * step;
                        let len = delta.norm();
                        if len > FRAC_PI_2 {
                            delta *= FRAC_PI_2 / len;
                            clipped += 1;
                        }
                        sq += delta.norm_squared();
                        let moved = exp_unchecked(y.rows(k * n, n), delta.as_view());
                        out.rows_mut(k * n, n).copy_from(&moved);
                    }
                    renormalize_blocks(&mut out, n);
                    total += sq.sqrt();
                    out
                })
                .collect();
            opt.clipped_steps += clipped;
            (points, total)
        }
        (OptimizerKind::AdagradMomentum { step, momentum, fuzz }, None) => {
            if opt.accumulator.len() != cloud.len() {
                opt.accumulator = vec![DVector::zeros(dim); cloud.len()];
                opt.velocity = vec![DVector::zeros(dim); cloud.len()];
            }
            let mut total = 0.0;
            let mut points = Vec::with_capacity(cloud.len());
            for (i, (x, v)) in cloud.points().iter().zip(&field.vectors).enumerate() {
                let acc = &mut opt.accumulator[i];
                let vel = &mut opt.velocity[i];
                for j in 0..dim {
                    acc[j] += v[j] * v[j];
                    vel[j] = momentum * vel[j] + v[j] / (acc[j].sqrt() + fuzz);
                }
                let delta = &*vel * step;
                total += delta.norm();
                points.push(x + delta);
            }
            (points, total)
        }
        (OptimizerKind::AdagradMomentum { .. }, Some(_)) => {
            return Err(Error::IncompatibleOptimizer {
                optimizer: opt.kind.name(),
                manifold: manifold.to_string(),
            })
        }
    };
    opt.last_mean_step = total_step / cloud.len() as f64;
    ParticleCloud::new(points, manifold)
}
