use nalgebra::DVector;

use crate::error::Result;
use crate::kernel::{median_bandwidth, summed_bandwidths, KernelSpec};

/// How the Gaussian kernel bandwidth is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthMode {
    /// Median heuristic on the current particles.
    Median,
    Fixed(f64),
    /// Sum of Gaussians at multiples of the median-heuristic bandwidth.
    Summed,
}

/// Produces the Gaussian-family kernel for each iteration, recomputing the
/// median heuristic every call unless frozen after the first one.
#[derive(Debug, Clone)]
pub struct KernelSchedule {
    mode: BandwidthMode,
    freeze: bool,
    frozen: Option<KernelSpec>,
}

impl KernelSchedule {
    pub fn new(mode: BandwidthMode, freeze: bool) -> Self {
        Self {
            mode,
            freeze,
            frozen: None,
        }
    }

    pub fn kernel_for(&mut self, points: &[DVector<f64>]) -> Result<KernelSpec> {
        if let Some(k) = &self.frozen {
            return Ok(k.clone());
        }
        let kernel = match self.mode {
            BandwidthMode::Fixed(h) => KernelSpec::gaussian(h)?,
            BandwidthMode::Median => KernelSpec::gaussian(median_or_unit(points)?)?,
            BandwidthMode::Summed => KernelSpec::summed_gaussian(summed_bandwidths(median_or_unit(points)?))?,
        };
        if self.freeze {
            self.frozen = Some(kernel.clone());
        }
        Ok(kernel)
    }
}

fn median_or_unit(points: &[DVector<f64>]) -> Result<f64> {
    if points.len() < 2 {
        return Ok(1.0);
    }
    Ok(median_bandwidth(points)?.h)
}
