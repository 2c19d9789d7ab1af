use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Floating-point scalar the solvers are generic over.
///
/// Implemented for `f32` and `f64`. Thresholds in this crate are written as
/// `f64` literals and converted with [`Scalar::lit`]; [`Scalar::tol`] floors a
/// literal tolerance at a small multiple of machine epsilon so the same checks
/// stay meaningful in single precision.
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn machine_eps() -> Self {
        Self::default_epsilon()
    }

    /// `max(x, 100 * eps)`.
    fn tol(x: f64) -> Self {
        let floor = Self::machine_eps() * Self::lit(100.0);
        let t = Self::lit(x);
        if t > floor {
            t
        } else {
            floor
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
