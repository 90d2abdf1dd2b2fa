//! Exact handling of real exponents `t` that are (close to) small rationals.
//!
//! Comparisons of the form `a ≤ C·r^t` with rational `a`, `r` are decided
//! exactly by raising both sides to the power `q` where `t = p/q`.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};

/// Largest denominator accepted when reading an `f64` exponent as a rational.
pub const MAX_DENOMINATOR: u64 = 10_000;

/// A non-negative rational exponent `num/den` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RationalExponent {
    pub num: u64,
    pub den: u64,
}

impl RationalExponent {
    /// Reads `t` as `p/q` with `q ≤ MAX_DENOMINATOR`, provided the rational
    /// reproduces `t` to within a few ulps. Continued-fraction convergents.
    pub fn from_f64(t: f64) -> Option<Self> {
        if !t.is_finite() || t < 0.0 {
            return None;
        }
        let tol = 4.0 * f64::EPSILON * t.max(1.0);
        let (mut h0, mut h1) = (0u64, 1u64);
        let (mut k0, mut k1) = (1u64, 0u64);
        let mut x = t;
        for _ in 0..64 {
            let a = x.floor();
            if a > u32::MAX as f64 {
                return None;
            }
            let a = a as u64;
            let h2 = a.checked_mul(h1)?.checked_add(h0)?;
            let k2 = a.checked_mul(k1)?.checked_add(k0)?;
            if k2 > MAX_DENOMINATOR {
                return None;
            }
            if (h2 as f64 / k2 as f64 - t).abs() <= tol {
                return Some(RationalExponent { num: h2, den: k2 });
            }
            (h0, h1, k0, k1) = (h1, h2, k1, k2);
            let frac = x - a as f64;
            if frac <= 0.0 {
                return None;
            }
            x = 1.0 / frac;
        }
        None
    }

    pub fn as_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

/// Natural logarithm of a big unsigned integer, valid far beyond `f64` range.
pub fn ln_biguint(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

/// Natural logarithm of a positive rational.
pub fn ln_rational(x: &BigRational) -> f64 {
    let num = x.numer().magnitude();
    let den = x.denom().magnitude();
    ln_biguint(num) - ln_biguint(den)
}

/// `base^e` for a rational base and integer exponent.
pub fn rational_pow(base: &BigRational, e: u64) -> BigRational {
    if e == 0 {
        return BigRational::one();
    }
    let num = Pow::pow(base.numer(), e);
    let den = Pow::pow(base.denom(), e);
    BigRational::new(num, den)
}
