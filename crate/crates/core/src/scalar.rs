//! Real scalar abstraction used for estimates, bounds and density parameters.

use std::fmt::{Debug, Display};

use num_bigint::BigUint;
use num_traits::{Float, FromPrimitive, ToPrimitive, Zero};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type carrying entropy values and ε parameters.
///
/// Counts stay exact (`BigUint`), boundary ratios stay rational; only
/// logarithms and user-facing tolerances go through this trait.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal, saturating to infinity when out of range.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(|| if x > 0.0 { Self::infinity() } else { Self::neg_infinity() })
    }

    fn from_count(n: usize) -> Self {
        Self::lit(n as f64)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Natural logarithm of a big count, accurate to f64 precision.
///
/// Returns `-inf` for zero.
pub fn ln_big(n: &BigUint) -> f64 {
    if n.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = n.bits();
    if bits <= 1000 {
        if let Some(v) = n.to_f64() {
            if v.is_finite() {
                return v.ln();
            }
        }
    }
    let shift = bits - 64;
    let top = (n >> shift).to_f64().unwrap_or(f64::MAX);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// `ln(count) / size`, exact when `count` is a perfect `size`-th power.
///
/// The perfect-power path keeps full-shift estimates equal to `ln |A|` bit for bit.
pub fn ln_rate(count: &BigUint, size: usize) -> f64 {
    if count.is_zero() {
        return f64::NEG_INFINITY;
    }
    if size == 0 {
        return 0.0;
    }
    let root = count.nth_root(size as u32);
    if root.pow(size as u32) == *count {
        return ln_big(&root);
    }
    ln_big(count) / size as f64
}

/// Numerically stable `ln(sum(exp(x)))`.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().filter(|x| *x > f64::NEG_INFINITY).collect();
    let Some(max) = xs.iter().copied().reduce(f64::max) else {
        return f64::NEG_INFINITY;
    };
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
