use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::AddAssign;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar for probabilities, valuations, and expected
/// utilities. Money amounts stay integral; only the utility arithmetic is
/// generic, so solvers run with `f64` (the default alias at the crate root)
/// or `f32` interchangeably.
pub trait Scalar:
    Float + FromPrimitive + AddAssign + Sum<Self> + Debug + Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + AddAssign + Sum<Self> + Debug + Display + Send + Sync + 'static
{
}
