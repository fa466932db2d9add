//! Positive-definite kernels with closed-form derivatives in both arguments.
//!
//! The Gaussian kernel is parameterized as `K(a, b) = exp(-‖a - b‖² / (2h))`,
//! so `h` plays the role of a squared bandwidth. The same convention is used
//! by the median heuristic. The von Mises–Fisher product kernel is
//! `K(y, y') = ∏_k exp(κ y_kᵀ y'_k) = exp(κ yᵀ y')`.

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::error::{check_dim, Error, Result};
use crate::manifold::check_unit;

/// Bandwidth multipliers of the summed Gaussian kernel.
pub const SUMMED_MULTIPLIERS: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 4.0];

#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    Gaussian {
        bandwidth: f64,
    },
    SummedGaussian {
        bandwidths: Vec<f64>,
    },
    VmfProduct {
        kappa: f64,
        blocks: usize,
        block_dim: usize,
    },
}

impl KernelSpec {
    pub fn gaussian(bandwidth: f64) -> Result<Self> {
        check_positive("bandwidth", bandwidth)?;
        Ok(Self::Gaussian { bandwidth })
    }

    pub fn summed_gaussian(bandwidths: Vec<f64>) -> Result<Self> {
        if bandwidths.is_empty() {
            return Err(Error::InvalidArgument(
                "summed kernel needs at least one bandwidth".into(),
            ));
        }
        for &h in &bandwidths {
            check_positive("bandwidth", h)?;
        }
        Ok(Self::SummedGaussian { bandwidths })
    }

    pub fn vmf_product(kappa: f64, blocks: usize, block_dim: usize) -> Result<Self> {
        check_positive("kappa", kappa)?;
        if blocks == 0 || block_dim < 2 {
            return Err(Error::InvalidArgument("vMF kernel needs P >= 1 and n >= 2".into()));
        }
        Ok(Self::VmfProduct {
            kappa,
            blocks,
            block_dim,
        })
    }

    /// Single-block vMF kernel with the default concentration `κ = n`.
    pub fn vmf_default(ambient: usize) -> Result<Self> {
        Self::vmf_product(ambient as f64, 1, ambient)
    }

    fn for_each_gaussian(&self) -> &[f64] {
        match self {
            Self::Gaussian { bandwidth } => std::slice::from_ref(bandwidth),
            Self::SummedGaussian { bandwidths } => bandwidths,
            Self::VmfProduct { .. } => &[],
        }
    }

    pub fn is_gaussian_family(&self) -> bool {
        !matches!(self, Self::VmfProduct { .. })
    }

    fn check_points(&self, a: &DVector<f64>, b: &DVector<f64>) -> Result<()> {
        check_dim(a.len(), b.len())?;
        if let Self::VmfProduct { blocks, block_dim, .. } = *self {
            check_dim(blocks * block_dim, a.len())?;
        }
        Ok(())
    }
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be positive and finite, got {value}"
        )))
    }
}

/// Kernel value and derivatives at one ordered pair `(a, b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelJet {
    pub value: f64,
    /// `∇_a K`.
    pub grad1: DVector<f64>,
    /// `∇_b K`.
    pub grad2: DVector<f64>,
    /// `∇_a∇_aᵀ K`.
    pub hessian1: DMatrix<f64>,
    /// `∇_aᵀ∇_a K`.
    pub laplacian1: f64,
    /// `∂²K / ∂a_i ∂b_j`, rows indexed by `a`.
    pub cross_hessian: DMatrix<f64>,
}

impl KernelJet {
    fn zeros(d: usize) -> Self {
        Self {
            value: 0.0,
            grad1: DVector::zeros(d),
            grad2: DVector::zeros(d),
            hessian1: DMatrix::zeros(d, d),
            laplacian1: 0.0,
            cross_hessian: DMatrix::zeros(d, d),
        }
    }

    /// `yᵀ (∇_a∇_aᵀ K) y`.
    pub fn quad1(&self, y: &DVector<f64>) -> f64 {
        y.dot(&(&self.hessian1 * y))
    }

    fn accumulate(&mut self, other: &KernelJet) {
        self.value += other.value;
        self.grad1 += &other.grad1;
        self.grad2 += &other.grad2;
        self.hessian1 += &other.hessian1;
        self.laplacian1 += other.laplacian1;
        self.cross_hessian += &other.cross_hessian;
    }
}

fn gaussian_jet(h: f64, a: &DVector<f64>, b: &DVector<f64>) -> KernelJet {
    let d = a.len();
    let r = a - b;
    let rho = r.norm_squared();
    let k = (-rho / (2.0 * h)).exp();
    let rrt = &r * r.transpose();
    let eye = DMatrix::<f64>::identity(d, d);
    KernelJet {
        value: k,
        grad1: &r * (-k / h),
        grad2: &r * (k / h),
        hessian1: (&rrt / (h * h) - &eye / h) * k,
        laplacian1: (rho / (h * h) - d as f64 / h) * k,
        cross_hessian: (eye / h - rrt / (h * h)) * k,
    }
}

fn vmf_jet(kappa: f64, a: &DVector<f64>, b: &DVector<f64>) -> KernelJet {
    let d = a.len();
    let k = (kappa * a.dot(b)).exp();
    let bbt = b * b.transpose();
    KernelJet {
        value: k,
        grad1: b * (kappa * k),
        grad2: a * (kappa * k),
        hessian1: bbt * (kappa * kappa * k),
        laplacian1: kappa * kappa * b.norm_squared() * k,
        cross_hessian: DMatrix::identity(d, d) * (kappa * k) + b * a.transpose() * (kappa * kappa * k),
    }
}

/// All closed-form derivative quantities of `spec` at `(a, b)`.
pub fn eval_jet(spec: &KernelSpec, a: &DVector<f64>, b: &DVector<f64>) -> Result<KernelJet> {
    spec.check_points(a, b)?;
    Ok(match *spec {
        KernelSpec::Gaussian { bandwidth } => gaussian_jet(bandwidth, a, b),
        KernelSpec::SummedGaussian { ref bandwidths } => {
            let mut jet = KernelJet::zeros(a.len());
            for &h in bandwidths {
                jet.accumulate(&gaussian_jet(h, a, b));
            }
            jet
        }
        KernelSpec::VmfProduct { kappa, .. } => vmf_jet(kappa, a, b),
    })
}

/// Log-kernel quantities of one vMF block `K_k = exp(κ y_kᵀ y'_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VmfLogJet {
    pub log_value: f64,
    /// `∇_{y_k} log K_k = κ y'_k`.
    pub grad: DVector<f64>,
    /// Identically zero: `log K_k` is linear in `y_k`.
    pub hessian: DMatrix<f64>,
}

pub fn log_jet_vmf_block(kappa: f64, y: &DVector<f64>, y_other: &DVector<f64>) -> Result<VmfLogJet> {
    check_dim(y.len(), y_other.len())?;
    check_unit(y.as_view())?;
    check_unit(y_other.as_view())?;
    let n = y.len();
    Ok(VmfLogJet {
        log_value: kappa * y.dot(y_other),
        grad: y_other * kappa,
        hessian: DMatrix::zeros(n, n),
    })
}

/// Kernel interface consumed by the coordinate-space and embedded update rules.
///
/// Besides value and first derivatives, these rules need the gradient in the
/// second argument of two contractions of first-argument derivatives:
/// `∇_b (vᵀ ∇_a K)` and `∇_b tr(S ∇_a∇_aᵀ K)`.
pub trait SmoothKernel: Sync {
    fn value(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64;

    fn grad1(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64>;

    /// `∂²K / ∂a_i ∂b_j`.
    fn cross_hessian(&self, a: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64>;

    /// `∇_b (vᵀ ∇_a K(a, b))`.
    fn grad2_directional(&self, a: &DVector<f64>, b: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        self.cross_hessian(a, b).tr_mul(v)
    }

    /// `∇_b tr(S ∇_a∇_aᵀ K(a, b))`.
    fn grad2_trace_hessian1(&self, a: &DVector<f64>, b: &DVector<f64>, s: &DMatrix<f64>) -> DVector<f64>;
}

impl SmoothKernel for KernelSpec {
    fn value(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        match *self {
            Self::VmfProduct { kappa, .. } => (kappa * a.dot(b)).exp(),
            _ => {
                let rho = (a - b).norm_squared();
                self.for_each_gaussian().iter().map(|h| (-rho / (2.0 * h)).exp()).sum()
            }
        }
    }

    fn grad1(&self, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        match *self {
            Self::VmfProduct { kappa, .. } => b * (kappa * (kappa * a.dot(b)).exp()),
            _ => {
                let r = a - b;
                let rho = r.norm_squared();
                let scale: f64 = self
                    .for_each_gaussian()
                    .iter()
                    .map(|h| -(-rho / (2.0 * h)).exp() / h)
                    .sum();
                r * scale
            }
        }
    }

    fn cross_hessian(&self, a: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
        match *self {
            Self::VmfProduct { kappa, .. } => vmf_jet(kappa, a, b).cross_hessian,
            _ => {
                let d = a.len();
                let r = a - b;
                let rho = r.norm_squared();
                let (mut diag, mut outer) = (0.0, 0.0);
                for &h in self.for_each_gaussian() {
                    let k = (-rho / (2.0 * h)).exp();
                    diag += k / h;
                    outer -= k / (h * h);
                }
                DMatrix::identity(d, d) * diag + &r * r.transpose() * outer
            }
        }
    }

    fn grad2_directional(&self, a: &DVector<f64>, b: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        match *self {
            // ∇_b[κ (vᵀb) K] = κ K v + κ² (vᵀb) K a
            Self::VmfProduct { kappa, .. } => {
                let k = (kappa * a.dot(b)).exp();
                v * (kappa * k) + a * (kappa * kappa * v.dot(b) * k)
            }
            // ∇_b[-(vᵀr) K / h] = K/h (v - (vᵀr) r / h), r = a - b
            _ => {
                let r = a - b;
                let rho = r.norm_squared();
                let vr = v.dot(&r);
                let (mut along_v, mut along_r) = (0.0, 0.0);
                for &h in self.for_each_gaussian() {
                    let k = (-rho / (2.0 * h)).exp();
                    along_v += k / h;
                    along_r -= vr * k / (h * h);
                }
                v * along_v + r * along_r
            }
        }
    }

    fn grad2_trace_hessian1(&self, a: &DVector<f64>, b: &DVector<f64>, s: &DMatrix<f64>) -> DVector<f64> {
        match *self {
            // tr(S ∇∇ᵀK) = κ² (bᵀSb) K
            Self::VmfProduct { kappa, .. } => {
                let k = (kappa * a.dot(b)).exp();
                let k2 = kappa * kappa;
                let sym_b = s * b + s.tr_mul(b);
                let bsb = b.dot(&(s * b));
                sym_b * (k2 * k) + a * (k2 * kappa * bsb * k)
            }
            // tr(S ∇∇ᵀK) = (rᵀSr / h² - tr S / h) K
            _ => {
                let r = a - b;
                let rho = r.norm_squared();
                let sym_r = s * &r + s.tr_mul(&r);
                let rsr = r.dot(&(s * &r));
                let trace = s.trace();
                let (mut along_sr, mut along_r) = (0.0, 0.0);
                for &h in self.for_each_gaussian() {
                    let k = (-rho / (2.0 * h)).exp();
                    along_sr -= k / (h * h);
                    along_r += (rsr / (h * h) - trace / h) * k / h;
                }
                sym_r * along_sr + r * along_r
            }
        }
    }
}

/// Outcome of the median heuristic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bandwidth {
    pub h: f64,
    /// Set when all particles coincide and the fallback `h = 1` was used.
    pub degenerate: bool,
}

fn median_in_place(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    let (_, upper, _) = values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *upper;
    if n % 2 == 1 {
        upper
    } else {
        let lower = values[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Median heuristic `h = med² / log(N + 1)` over all distinct pairwise distances.
pub fn median_bandwidth(points: &[DVector<f64>]) -> Result<Bandwidth> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InsufficientSamples { needed: 2, got: n });
    }
    let mut distances = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            check_dim(points[i].len(), points[j].len())?;
            distances.push(distance(points[i].as_view(), points[j].as_view()));
        }
    }
    let med = median_in_place(&mut distances);
    if med > 0.0 {
        Ok(Bandwidth {
            h: med * med / ((n + 1) as f64).ln(),
            degenerate: false,
        })
    } else {
        log::warn!("median pairwise distance is zero; falling back to bandwidth 1");
        Ok(Bandwidth {
            h: 1.0,
            degenerate: true,
        })
    }
}

fn distance(a: DVectorView<'_, f64>, b: DVectorView<'_, f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Bandwidth set `{0.25, 0.5, 1, 2, 4} · h_med` of the summed Gaussian kernel.
pub fn summed_bandwidths(h_med: f64) -> Vec<f64> {
    SUMMED_MULTIPLIERS.iter().map(|c| c * h_med).collect()
}
