//! Scalar abstraction for the numeric kernels.
//!
//! Everything numeric in this crate (metrics, learners, bias injection,
//! mitigation solvers) is written against [`Scalar`] so the same code runs in
//! `f32` or `f64`. `f64` is the default type parameter everywhere and the
//! concrete aliases at the crate root pin it for the pipeline and CLI.

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar usable by every kernel in this crate.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for constants and RNG draws.
    fn from_f64_lossy(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 converts to any Scalar")
    }

    /// Lossy conversion to `f64`, used for reporting and serialization.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Scalar converts to f64")
    }

    /// Total-order comparison; data is validated finite so NaN is a bug here.
    fn cmp_total(&self, other: &Self) -> std::cmp::Ordering {
        self.partial_cmp(other).expect("NaN in scalar comparison")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Mean of a slice; `None` when empty.
pub fn mean<S: Scalar>(xs: &[S]) -> Option<S> {
    if xs.is_empty() {
        return None;
    }
    let sum: S = xs.iter().copied().sum();
    Some(sum / S::from_usize(xs.len()).unwrap())
}

/// Population standard deviation of a slice; `None` when empty.
pub fn pop_std<S: Scalar>(xs: &[S]) -> Option<S> {
    let m = mean(xs)?;
    let var: S = xs
        .iter()
        .map(|&x| {
            let d = x - m;
            d * d
        })
        .sum::<S>()
        / S::from_usize(xs.len()).unwrap();
    Some(var.sqrt())
}
