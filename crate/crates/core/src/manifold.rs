//! Geometry primitives: manifold descriptors, tangent projections,
//! exponential maps, and the upper-hemisphere chart of the sphere.
//!
//! Points on `S^{n-1}` and `(S^{n-1})^P` are stored in ambient coordinates,
//! so a point of the product manifold is a single length `P * n` vector made
//! of `P` contiguous unit blocks.

use std::fmt;

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::error::{check_dim, Error, Result};

/// Tolerance on `|‖y‖ - 1|` for a vector to count as a point of the sphere.
pub const UNIT_TOL: f64 = 1e-9;

/// Tolerance on `|yᵀv|` above which a step is projected back onto the tangent space.
pub const TANGENT_TOL: f64 = 1e-8;

/// Tangent vectors shorter than this are treated as zero by the exponential map.
pub const ZERO_STEP: f64 = 1e-14;

/// Geometry of the space the particles live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ManifoldSpec {
    /// `R^d`.
    Euclidean { dim: usize },
    /// `S^{n-1}` embedded in `R^n`.
    Sphere { ambient: usize },
    /// `(S^{n-1})^P`, stored as `P` contiguous blocks of length `n`.
    ProductSphere { blocks: usize, block_dim: usize },
}

impl ManifoldSpec {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("Euclidean dimension must be >= 1".into()));
        }
        Ok(Self::Euclidean { dim })
    }

    pub fn sphere(ambient: usize) -> Result<Self> {
        if ambient < 2 {
            return Err(Error::InvalidArgument("sphere ambient dimension must be >= 2".into()));
        }
        Ok(Self::Sphere { ambient })
    }

    pub fn product_sphere(blocks: usize, block_dim: usize) -> Result<Self> {
        if blocks == 0 || block_dim < 2 {
            return Err(Error::InvalidArgument(
                "product sphere needs P >= 1 blocks of dimension n >= 2".into(),
            ));
        }
        Ok(Self::ProductSphere { blocks, block_dim })
    }

    pub fn ambient_dim(&self) -> usize {
        match *self {
            Self::Euclidean { dim } => dim,
            Self::Sphere { ambient } => ambient,
            Self::ProductSphere { blocks, block_dim } => blocks * block_dim,
        }
    }

    /// `(block count, block length)`; Euclidean space counts as no blocks.
    pub fn block_layout(&self) -> Option<(usize, usize)> {
        match *self {
            Self::Euclidean { .. } => None,
            Self::Sphere { ambient } => Some((1, ambient)),
            Self::ProductSphere { blocks, block_dim } => Some((blocks, block_dim)),
        }
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self, Self::Euclidean { .. })
    }

    /// Checks the validity predicate for a single point.
    pub fn validate_point(&self, point: &DVector<f64>) -> Result<()> {
        check_dim(self.ambient_dim(), point.len())?;
        match self.block_layout() {
            None => {
                if point.iter().all(|x| x.is_finite()) {
                    Ok(())
                } else {
                    Err(Error::Domain("non-finite coordinate".into()))
                }
            }
            Some((blocks, n)) => {
                for k in 0..blocks {
                    check_unit(point.rows(k * n, n))?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for ManifoldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Euclidean { dim } => write!(f, "R^{dim}"),
            Self::Sphere { ambient } => write!(f, "S^{}", ambient - 1),
            Self::ProductSphere { blocks, block_dim } => write!(f, "(S^{})^{blocks}", block_dim - 1),
        }
    }
}

pub(crate) fn check_unit(y: DVectorView<'_, f64>) -> Result<()> {
    let norm = y.norm();
    if (norm - 1.0).abs() <= UNIT_TOL {
        Ok(())
    } else {
        Err(Error::NotUnit { norm })
    }
}

/// Orthogonal projection `(I - y yᵀ) u` onto the tangent space of the sphere at `y`.
pub fn project_tangent_sphere(y: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(y.len(), u.len())?;
    check_unit(y.as_view())?;
    Ok(project_unchecked(y.as_view(), u.as_view()))
}

pub(crate) fn project_unchecked(y: DVectorView<'_, f64>, u: DVectorView<'_, f64>) -> DVector<f64> {
    let c = y.dot(&u);
    u - y * c
}

/// Great-circle exponential map `Exp_y(v) = y cos‖v‖ + (v/‖v‖) sin‖v‖`.
///
/// A `v` that is not tangent at `y` (beyond [`TANGENT_TOL`]) is projected first.
/// For `‖v‖ >= π` the formula is still applied; the result then wraps around
/// the great circle and its geodesic distance from `y` is no longer `‖v‖`.
pub fn exp_map_sphere(y: &DVector<f64>, v: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(y.len(), v.len())?;
    check_unit(y.as_view())?;
    Ok(exp_unchecked(y.as_view(), v.as_view()))
}

pub(crate) fn exp_unchecked(y: DVectorView<'_, f64>, v: DVectorView<'_, f64>) -> DVector<f64> {
    let v = if y.dot(&v).abs() > TANGENT_TOL {
        project_unchecked(y, v)
    } else {
        v.clone_owned()
    };
    let len = v.norm();
    if len < ZERO_STEP {
        return y.clone_owned();
    }
    let (sin, cos) = len.sin_cos();
    y * cos + v * (sin / len)
}

/// Blockwise exponential map on `(S^{n-1})^P`.
pub fn exp_map_product(y: &DVector<f64>, v: &DVector<f64>, blocks: usize, block_dim: usize) -> Result<DVector<f64>> {
    check_dim(blocks * block_dim, y.len())?;
    check_dim(blocks * block_dim, v.len())?;
    let mut out = DVector::zeros(y.len());
    for k in 0..blocks {
        let yk = y.rows(k * block_dim, block_dim);
        check_unit(yk)?;
        let moved = exp_unchecked(yk, v.rows(k * block_dim, block_dim));
        out.rows_mut(k * block_dim, block_dim).copy_from(&moved);
    }
    Ok(out)
}

/// Rescales every length-`block_dim` block of `y` to unit norm.
pub fn renormalize_blocks(y: &mut DVector<f64>, block_dim: usize) {
    let blocks = y.len() / block_dim;
    for k in 0..blocks {
        let mut block = y.rows_mut(k * block_dim, block_dim);
        let norm = block.norm();
        if norm > 0.0 {
            block /= norm;
        }
    }
}

/// Geodesic (great-circle) distance between two unit vectors.
pub fn sphere_distance(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    // atan2 form stays accurate near 0 and π, unlike acos of the dot product.
    let cross = (a - b * a.dot(b)).norm();
    cross.atan2(a.dot(b))
}

/// Quantities of the upper-hemisphere chart `x ↦ (x, √(1 - xᵀx))` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartQuantities {
    /// Jacobian `∂y/∂x`, `n × (n-1)`.
    pub jacobian: DMatrix<f64>,
    /// Metric `G = MᵀM`.
    pub metric: DMatrix<f64>,
    pub metric_inv: DMatrix<f64>,
    pub metric_det: f64,
}

fn check_in_disc(x: &DVector<f64>) -> Result<f64> {
    let r2 = x.norm_squared();
    if r2 < 1.0 {
        Ok(r2)
    } else {
        Err(Error::OutsideChart(format!(
            "chart coordinate has xᵀx = {r2}, must be < 1"
        )))
    }
}

/// Chart quantities of the upper hemisphere at chart coordinate `x`.
pub fn hemisphere_chart(x: &DVector<f64>) -> Result<ChartQuantities> {
    let r2 = check_in_disc(x)?;
    let m = x.len();
    let one_minus = 1.0 - r2;
    let height = one_minus.sqrt();

    let mut jacobian = DMatrix::zeros(m + 1, m);
    jacobian.view_mut((0, 0), (m, m)).fill_with_identity();
    for i in 0..m {
        jacobian[(m, i)] = -x[i] / height;
    }
    let outer = x * x.transpose();
    let metric = DMatrix::identity(m, m) + &outer / one_minus;
    let metric_inv = DMatrix::identity(m, m) - outer;

    Ok(ChartQuantities {
        jacobian,
        metric,
        metric_inv,
        metric_det: 1.0 / one_minus,
    })
}

/// `Φ(y) = (y_1, …, y_{n-1})` for `y` on the open upper hemisphere.
pub fn chart_forward(y: &DVector<f64>) -> Result<DVector<f64>> {
    if y.len() < 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: y.len(),
        });
    }
    check_unit(y.as_view())?;
    let n = y.len();
    if y[n - 1] <= 0.0 {
        return Err(Error::OutsideChart(format!(
            "last coordinate {} is not positive",
            y[n - 1]
        )));
    }
    Ok(y.rows(0, n - 1).clone_owned())
}

/// `ξ(x) = (x, √(1 - xᵀx))`.
pub fn chart_inverse(x: &DVector<f64>) -> Result<DVector<f64>> {
    let r2 = check_in_disc(x)?;
    let m = x.len();
    let mut y = DVector::zeros(m + 1);
    y.rows_mut(0, m).copy_from(x);
    y[m] = (1.0 - r2).sqrt();
    Ok(y)
}
