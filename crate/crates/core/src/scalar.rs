//! Exact rational scalars and the binomial helpers shared by every module.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Exact rational scalar.
pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn frac(n: i64, d: i64) -> Q {
    assert!(d != 0, "zero denominator");
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// Generalized binomial coefficient `C(n, i)` for any integer `n` and `i >= 0`.
pub fn binom(n: i64, i: i64) -> Q {
    if i < 0 {
        return Q::zero();
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for t in 0..i {
        num *= BigInt::from(n - t);
        den *= BigInt::from(t + 1);
    }
    Q::new(num, den)
}

/// Integer power with negative exponents allowed (`base` must be nonzero then).
pub fn qpow(base: &Q, e: i64) -> Q {
    if e >= 0 {
        num_traits::pow(base.clone(), e as usize)
    } else {
        num_traits::pow(base.recip(), (-e) as usize)
    }
}

pub fn factorial(n: u32) -> Q {
    let mut acc = BigInt::one();
    for t in 2..=n {
        acc *= BigInt::from(t);
    }
    Q::from_integer(acc)
}

/// `[numerator, denominator]` pair as used by the config and report schemas.
pub fn to_pair(x: &Q) -> [String; 2] {
    [x.numer().to_string(), x.denom().to_string()]
}

pub fn is_pm_one(x: &Q) -> bool {
    x.abs().is_one()
}
