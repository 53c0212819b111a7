//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, ArrayView2, ScalarOperand};
use num_traits::{Float, FromPrimitive, NumAssignOps, ToPrimitive};

/// Floating point element type.
///
/// Implemented for `f32` and `f64`. The dense SVD kernel is supplied per type
/// so that generic code never has to name the linear algebra backend.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssignOps
    + ScalarOperand
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Dense thin SVD `M = U diag(sigma) V^T`, singular values in the
    /// backend's order. `None` when the iteration fails to converge within
    /// `max_iter` sweeps.
    fn dense_svd(
        m: ArrayView2<'_, Self>,
        max_iter: usize,
    ) -> Option<(Array2<Self>, Array1<Self>, Array2<Self>)>;

    /// Lossless for f64, rounding for f32.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite float converts to f64")
    }
}

/// Convergence thresholds tried by the dense SVD, in units of machine epsilon.
const SVD_EPS_FACTORS: [f64; 3] = [5.0, 50.0, 500.0];

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            fn dense_svd(
                m: ArrayView2<'_, Self>,
                max_iter: usize,
            ) -> Option<(Array2<Self>, Array1<Self>, Array2<Self>)> {
                let (rows, cols) = m.dim();
                let mat = DMatrix::<$t>::from_fn(rows, cols, |i, j| m[[i, j]]);
                let scale = mat.amax().max(1.0);
                let allowed = 1e3 * (rows.max(cols) as $t) * <$t>::EPSILON * scale;
                // the backend can stop on a wrong deflation for rank-deficient
                // input; check the reconstruction and loosen the threshold
                let svd = SVD_EPS_FACTORS.iter().find_map(|&factor| {
                    let svd = mat.clone().try_svd(true, true, (factor as $t) * <$t>::EPSILON, max_iter)?;
                    let (u, v_t) = (svd.u?, svd.v_t?);
                    let mut scaled = u.clone();
                    for (mut col, &sv) in scaled.column_iter_mut().zip(svd.singular_values.iter()) {
                        col *= sv;
                    }
                    let residual = (scaled * &v_t - &mat).amax();
                    (residual <= allowed).then_some((u, svd.singular_values, v_t))
                })?;
                let (u, singular_values, v_t) = svd;
                let k = singular_values.len();
                let u = Array2::from_shape_fn((rows, k), |(i, j)| u[(i, j)]);
                let v = Array2::from_shape_fn((cols, k), |(i, j)| v_t[(j, i)]);
                let sigma = Array1::from_iter(singular_values.iter().copied());
                Some((u, sigma, v))
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);
